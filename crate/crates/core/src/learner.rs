//! The online-Newton-step learner for logit feedback.
//!
//! Each round the learner
//! 1. picks the optimistic action over its current confidence region,
//! 2. observes `y ∈ {±1}`,
//! 3. grows the metric `Z ← Z + (ηβ/2) x xᵀ` and moves the center to the
//!    minimizer of `½‖w − w_t‖²_Z + η (w − w_t)ᵀ ∇f_t(w_t)` over `‖w‖₂ ≤ R`,
//! 4. recomputes the squared radius `γ` from the log-determinant of `Z`.
//!
//! The whole memory is a [`LearnerState`]: `O(d²)` regardless of the horizon.

use serde::{Deserialize, Serialize};

use crate::env::{mu, DecisionSet};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm2, scale, SpdMatrix};
use crate::region::{ConfidenceRegion, RegionMode};
use crate::secular::increasing_root;
use crate::select::{lazy_gate, select_action, ActionChoice};

/// Above this dimension the projection eigendecomposes `Z` once instead of
/// refactorizing `Z + νI` at every secular iteration.
const EIGEN_PROJECTION_MIN_DIM: usize = 17;

/// Accepted relative error on the norm of a projected center.
const PROJECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Step size `η`.
    pub eta: f64,
    /// Initial metric `Z_1 = λ I`.
    pub lambda: f64,
    /// Failure probability of the confidence region.
    pub delta: f64,
    /// Known bound on `‖w*‖₂`.
    #[serde(rename = "R")]
    pub r: f64,
    /// Lazy-updating constant: the action is recomputed only when `det Z` has
    /// grown by more than a factor `1 + lazy_c`. Zero means recompute every round.
    #[serde(default)]
    pub lazy_c: f64,
    #[serde(default)]
    pub region_mode: RegionMode,
    /// Multiplier applied to `γ` wherever the learner uses it. Exists for
    /// ablations only; `1.0` gives the guaranteed region.
    #[serde(default = "one")]
    pub radius_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl LearnerConfig {
    /// `η = 1, λ = 1, δ = 0.05`, eager, ellipsoidal.
    pub fn new(r: f64) -> Self {
        Self {
            eta: 1.0,
            lambda: 1.0,
            delta: 0.05,
            r,
            lazy_c: 0.0,
            region_mode: RegionMode::Ellipsoid,
            radius_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.eta) {
            return Err(invalid(format!("eta must be positive, got {}", self.eta)));
        }
        if !pos(self.lambda) {
            return Err(invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !pos(self.r) {
            return Err(invalid(format!("R must be positive, got {}", self.r)));
        }
        if !(self.lazy_c >= 0.0) || !self.lazy_c.is_finite() {
            return Err(invalid(format!("lazy_c must be nonnegative, got {}", self.lazy_c)));
        }
        if !(self.radius_scale >= 0.0) || !self.radius_scale.is_finite() {
            return Err(invalid("radius_scale must be nonnegative"));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        beta_of(self.r)
    }

    /// Weight of each rank-one metric update, `ηβ/2`.
    pub fn metric_step(&self) -> f64 {
        0.5 * self.eta * self.beta()
    }

    /// `d log λ`, the log-determinant of the initial metric.
    pub fn initial_logdet(&self, d: usize) -> f64 {
        d as f64 * self.lambda.ln()
    }
}

/// `log(1 + exp(−y xᵀw))`
pub fn logistic_loss(w: &[f64], x: &[f64], y: i8) -> f64 {
    let z = f64::from(y) * dot(x, w);
    (-z).max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `−y x (1 − μ(y xᵀw))`
pub fn logistic_grad(w: &[f64], x: &[f64], y: i8) -> Vec<f64> {
    let yf = f64::from(y);
    let z = yf * dot(x, w);
    scale(x, -yf * mu(-z))
}

/// Curvature constant of the logistic loss on `[−R, R]`: `1 / (2(1 + e^R))`.
pub fn beta_of(r: f64) -> f64 {
    0.5 / (1.0 + r.exp())
}

/// `log(2 m t² / δ)` with `m = max(1, ⌈2 log₂ t⌉)`.
pub fn tau_of(t: usize, delta: f64) -> f64 {
    let t = t.max(1) as f64;
    let m = (2.0 * t.log2()).ceil().max(1.0);
    (2.0 * m * t * t / delta).ln()
}

/// Squared radius for a state that has absorbed `state.t − 1` observations.
///
/// With no observations this is `max(λ, ηβ/2) R²`, which already contains the
/// whole `R`-ball. Afterwards
/// `2η[4R + (4/β + 8R/3) τ + (1/β) log(det Z / det Z₁)] + max(λ, ηβ/2) R²`
/// with `τ` evaluated at the number of observations.
pub fn gamma_of(state: &LearnerState, config: &LearnerConfig) -> f64 {
    let r = config.r;
    let beta = config.beta();
    let base = config.lambda.max(config.metric_step()) * r * r;
    if state.t <= 1 {
        return base;
    }
    let d = state.w.len();
    let logdet_ratio = (state.z.logdet() - config.initial_logdet(d)).max(0.0);
    let tau = tau_of(state.t - 1, config.delta);
    2.0 * config.eta * (4.0 * r + (4.0 / beta + 8.0 * r / 3.0) * tau + logdet_ratio / beta) + base
}

/// Everything the learner carries between rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    /// Index of the next round to be played (starts at 1).
    pub t: usize,
    #[serde(rename = "w_t")]
    pub w: Vec<f64>,
    #[serde(rename = "Z")]
    pub z: SpdMatrix,
    /// Squared radius in use, i.e. `radius_scale · γ_t`.
    pub gamma: f64,
    pub logdet_at_last_recompute: f64,
    pub last_action: Vec<f64>,
}

impl LearnerState {
    pub fn initial(d: usize, config: &LearnerConfig) -> Result<Self> {
        config.validate()?;
        let z = SpdMatrix::identity(d, config.lambda)?;
        let mut state = Self {
            t: 1,
            w: vec![0.0; d],
            logdet_at_last_recompute: z.logdet(),
            z,
            gamma: 0.0,
            last_action: vec![0.0; d],
        };
        state.gamma = config.radius_scale * gamma_of(&state, config);
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            context: "serializing learner state".into(),
            source,
        })
    }

    /// The inverse of `Z` is refactorized on load, so a resumed run agrees with
    /// an uninterrupted one up to rounding.
    pub fn from_json(text: &str) -> Result<Self> {
        let state: Self = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "parsing learner state".into(),
            source,
        })?;
        let d = state.z.dim();
        if state.w.len() != d || state.last_action.len() != d {
            return Err(invalid("checkpoint vectors do not match the metric dimension"));
        }
        if state.t == 0 || !(state.gamma >= 0.0) {
            return Err(invalid("checkpoint has an invalid round index or radius"));
        }
        Ok(state)
    }
}

/// Diagnostics of one center update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateInfo {
    /// `∇f_t(w_t)`
    pub grad: Vec<f64>,
    /// `‖x‖²` in the inverse of the metric before the update.
    pub q_before: f64,
    /// `‖x‖²` in the inverse of the metric after the update.
    pub q_after: f64,
    /// Lagrange multiplier of the norm constraint (zero for interior solutions).
    pub multiplier: f64,
}

/// Minimizer of `½‖w − u‖²_Z` over `‖w‖₂ ≤ r`, with the constraint multiplier.
///
/// Outside the ball the solution is `(Z + νI)⁻¹ Z u` where `ν > 0` solves
/// `‖(Z + νI)⁻¹ Z u‖ = r`.
pub fn project_weighted_ball(z: &SpdMatrix, u: &[f64], r: f64) -> Result<(Vec<f64>, f64)> {
    if u.len() != z.dim() {
        return Err(invalid("projection point does not match metric dimension"));
    }
    let nu_norm = norm2(u);
    if nu_norm <= r {
        return Ok((u.to_vec(), 0.0));
    }
    let d = z.dim();
    let zu = z.mul_vec(u);

    // w(ν) and wᵀ(Z + νI)⁻¹w
    let eval: Box<dyn Fn(f64) -> Result<(Vec<f64>, f64)>> = if d >= EIGEN_PROJECTION_MIN_DIM {
        let eig = z.eig_sym()?;
        let ut = eig.to_eigenbasis(u);
        Box::new(move |nu| {
            let wt: Vec<f64> = ut
                .iter()
                .zip(&eig.values)
                .map(|(c, l)| l * c / (l + nu))
                .collect();
            let curv = wt
                .iter()
                .zip(&eig.values)
                .map(|(c, l)| c * c / (l + nu))
                .sum();
            Ok((eig.from_eigenbasis(&wt), curv))
        })
    } else {
        Box::new(|nu| {
            let w = z.solve_shifted(nu, &zu)?;
            let s = z.solve_shifted(nu, &w)?;
            let curv = dot(&w, &s);
            Ok((w, curv))
        })
    };

    let mut hi = 1.0;
    let mut doublings = 0;
    while norm2(&eval(hi)?.0) >= r {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 {
            return Err(Error::NumericFailure {
                what: "projection multiplier bracket",
                iterations: doublings,
            });
        }
    }
    let inv_r = 1.0 / r;
    let nu = increasing_root(
        "weighted ball projection",
        |nu| {
            let (w, curv) = eval(nu)?;
            let n = norm2(&w);
            Ok((1.0 / n - inv_r, curv / (n * n * n)))
        },
        0.0,
        hi,
        0.0,
        |g| g.abs() <= 1e-13 * inv_r,
    )?;
    let (mut w, _) = eval(nu)?;
    let n = norm2(&w);
    if (n - r).abs() > PROJECTION_TOL * r {
        return Err(Error::NumericFailure {
            what: "weighted ball projection tolerance",
            iterations: crate::secular::MAX_ITER,
        });
    }
    if n > r {
        w = scale(&w, r / n);
    }
    Ok((w, nu))
}

fn check_observation(state: &LearnerState, x: &[f64], y: i8) -> Result<()> {
    if x.len() != state.dim() {
        return Err(invalid(format!(
            "action of length {} does not match dimension {}",
            x.len(),
            state.dim()
        )));
    }
    if norm2(x) > 1.0 + 1e-12 {
        return Err(invalid("actions must lie in the unit ball"));
    }
    if y != 1 && y != -1 {
        return Err(invalid(format!("feedback must be ±1, got {y}")));
    }
    Ok(())
}

impl LearnerState {
    /// Absorbs one observation.
    pub fn update(&mut self, x: &[f64], y: i8, config: &LearnerConfig) -> Result<UpdateInfo> {
        check_observation(self, x, y)?;
        let grad = logistic_grad(&self.w, x, y);
        let q_before = self.z.rank1_update_in_place(x, config.metric_step())?;
        let step = self.z.inv_mul_vec(&grad);
        let q_after = self.z.inv_quad(x);
        let u: Vec<f64> = self
            .w
            .iter()
            .zip(&step)
            .map(|(w, s)| w - config.eta * s)
            .collect();
        let (w, multiplier) = project_weighted_ball(&self.z, &u, config.r)?;
        self.w = w;
        self.t += 1;
        let gamma = config.radius_scale * gamma_of(self, config);
        // the log-determinant may jitter by rounding at refactorization points
        self.gamma = gamma.max(self.gamma);
        Ok(UpdateInfo {
            grad,
            q_before,
            q_after,
            multiplier,
        })
    }
}

/// Functional form of [`LearnerState::update`].
pub fn ons_update(state: &LearnerState, x: &[f64], y: i8, config: &LearnerConfig) -> Result<LearnerState> {
    let mut next = state.clone();
    next.update(x, y, config)?;
    Ok(next)
}

/// Region `C_t` implied by the state.
pub fn region_of(state: &LearnerState, config: &LearnerConfig) -> ConfidenceRegion {
    ConfidenceRegion {
        center: state.w.clone(),
        metric: state.z.clone(),
        radius_sq: state.gamma,
        flavor: config.region_mode,
    }
}

/// A learner together with the lazy-updating bookkeeping.
#[derive(Debug, Clone)]
pub struct Learner {
    config: LearnerConfig,
    state: LearnerState,
    cached: Option<ActionChoice>,
    gated: bool,
    recomputations: usize,
}

impl Learner {
    pub fn new(d: usize, config: LearnerConfig) -> Result<Self> {
        let state = LearnerState::initial(d, &config)?;
        Ok(Self::from_state(state, config))
    }

    /// Resumes from a checkpoint. The first [`Learner::choose`] always recomputes.
    pub fn from_state(state: LearnerState, config: LearnerConfig) -> Self {
        Self {
            gated: config.lazy_c > 0.0,
            config,
            state,
            cached: None,
            recomputations: 0,
        }
    }

    /// Forces the lazy gate on or off regardless of `lazy_c`.
    pub fn with_gate(mut self, gated: bool) -> Self {
        self.gated = gated;
        self
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn into_state(self) -> LearnerState {
        self.state
    }

    pub fn recomputations(&self) -> usize {
        self.recomputations
    }

    pub fn region(&self) -> ConfidenceRegion {
        region_of(&self.state, &self.config)
    }

    /// Action for the current round, and whether it was freshly optimized.
    pub fn choose(&mut self, set: &DecisionSet) -> Result<(ActionChoice, bool)> {
        if set.dim() != self.state.dim() {
            return Err(invalid("decision set dimension does not match the learner"));
        }
        let logdet = self.state.z.logdet();
        let reuse = match &self.cached {
            Some(_) if self.gated => !lazy_gate(logdet, self.state.logdet_at_last_recompute, self.config.lazy_c),
            _ => false,
        };
        if reuse {
            return Ok((self.cached.clone().expect("cached action"), false));
        }
        let choice = select_action(set, &self.region())?;
        self.state.logdet_at_last_recompute = logdet;
        self.state.last_action = choice.x.clone();
        self.cached = Some(choice.clone());
        self.recomputations += 1;
        Ok((choice, true))
    }

    pub fn observe(&mut self, x: &[f64], y: i8) -> Result<UpdateInfo> {
        self.state.update(x, y, &self.config)
    }
}
