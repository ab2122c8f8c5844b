//! Executable checks of the learner's guarantees.
//!
//! Two kinds of checks live here:
//! - randomized property suites for the pointwise inequalities the analysis relies
//!   on (regret sandwich, curvature of the logistic loss, the expected-loss
//!   minimizer, the update inequality, the gradient-norm bound);
//! - audits of full simulated trajectories: confidence coverage, the per-round
//!   potential recursion, the martingale bound, the log-determinant inequalities
//!   and the cumulative regret bound.
//!
//! Every check reports its worst slack (bound minus observed; negative means a
//! violation) so a report can show how close each inequality came to failing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{
    best_action, mu, round_regrets, sample_feedback, sample_in_ball, sandwich_check, DecisionSet,
    Instance, ModelParams, RoundRecord,
};
use crate::error::{Error, Result};
use crate::learner::{beta_of, logistic_grad, logistic_loss, tau_of, Learner, LearnerConfig, LearnerState};
use crate::linalg::{dot, sub};

/// Result of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub samples: usize,
    pub violations: usize,
    /// Smallest `bound − observed` seen.
    pub worst_slack: f64,
    pub seeds: Vec<u64>,
}

impl CheckOutcome {
    /// A sample violates the check when its slack is below `-tol`.
    fn from_slacks(name: &str, seed: u64, tol: f64, slacks: impl IntoIterator<Item = f64>) -> Self {
        let mut samples = 0;
        let mut violations = 0;
        let mut worst = f64::INFINITY;
        for s in slacks {
            samples += 1;
            if !(s >= -tol) {
                violations += 1;
            }
            worst = worst.min(s);
        }
        Self {
            name: name.to_string(),
            passed: violations == 0,
            samples,
            violations,
            worst_slack: worst,
            seeds: vec![seed],
        }
    }
}

/// Seeded stream for replicate `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_sign(rng: &mut ChaCha8Rng) -> i8 {
    if rng.random::<bool>() {
        1
    } else {
        -1
    }
}

/// Expected loss over `y` drawn from the model with parameter `w_star`.
pub fn expected_loss(w: &[f64], x: &[f64], w_star: &[f64]) -> f64 {
    let p = mu(dot(x, w_star));
    p * logistic_loss(w, x, 1) + (1.0 - p) * logistic_loss(w, x, -1)
}

/// Gradient of [`expected_loss`].
pub fn expected_grad(w: &[f64], x: &[f64], w_star: &[f64]) -> Vec<f64> {
    let p = mu(dot(x, w_star));
    let gp = logistic_grad(w, x, 1);
    let gm = logistic_grad(w, x, -1);
    gp.iter().zip(&gm).map(|(a, b)| p * a + (1.0 - p) * b).collect()
}

/// Linear/nonlinear regret sandwich on random instances and actions.
pub fn check_regret_sandwich(samples: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slacks = (0..samples).map(|k| {
        let d = rng.random_range(1..=6);
        let r = rng.random_range(0.1..3.0);
        let params = ModelParams::new(sample_in_ball(d, r, &mut rng), r).expect("valid parameter");
        let (set, x) = if k % 2 == 0 {
            let arms: Vec<Vec<f64>> = (0..8).map(|_| sample_in_ball(d, 1.0, &mut rng)).collect();
            let pick = arms[rng.random_range(0..arms.len())].clone();
            (DecisionSet::FiniteArms(arms), pick)
        } else {
            (DecisionSet::UnitBall(d), sample_in_ball(d, 1.0, &mut rng))
        };
        let x_star = best_action(&set, &params);
        let (lin, nonlin) = round_regrets(&params, &x_star, &x);
        let lower = lin / (2.0 * (1.0 + r.exp()));
        let slack = (nonlin - lower).min(lin / 4.0 - nonlin);
        debug_assert_eq!(slack >= -1e-10, sandwich_check(lin, nonlin, r));
        slack
    });
    CheckOutcome::from_slacks("regret_sandwich", seed, 1e-10, slacks.collect::<Vec<_>>())
}

/// Quadratic lower bound of the logistic loss along `x` inside the `R`-ball.
pub fn check_strong_convexity(samples: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slacks: Vec<f64> = (0..samples)
        .map(|_| {
            let d = rng.random_range(1..=6);
            let r = rng.random_range(0.1..4.0);
            let beta = beta_of(r);
            let w1 = sample_in_ball(d, r, &mut rng);
            let w2 = sample_in_ball(d, r, &mut rng);
            let x = sample_in_ball(d, 1.0, &mut rng);
            let y = random_sign(&mut rng);
            let diff = sub(&w2, &w1);
            let proj = dot(&diff, &x);
            let lower = logistic_loss(&w1, &x, y) + dot(&logistic_grad(&w1, &x, y), &diff)
                + 0.5 * beta * proj * proj;
            logistic_loss(&w2, &x, y) - lower
        })
        .collect();
    CheckOutcome::from_slacks("strong_convexity", seed, 1e-10, slacks)
}

/// The true parameter minimizes the expected loss.
pub fn check_expected_loss_minimizer(samples: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slacks: Vec<f64> = (0..samples)
        .map(|_| {
            let d = rng.random_range(1..=6);
            let r = rng.random_range(0.1..3.0);
            let w_star = sample_in_ball(d, r, &mut rng);
            let w = sample_in_ball(d, 3.0 * r, &mut rng);
            let x = sample_in_ball(d, 1.0, &mut rng);
            expected_loss(&w, &x, &w_star) - expected_loss(&w_star, &x, &w_star)
        })
        .collect();
    CheckOutcome::from_slacks("expected_loss_minimizer", seed, 1e-12, slacks)
}

/// `‖∇f(w)‖²_A ≤ ‖x‖²_A` for positive semidefinite `A`.
pub fn check_gradient_norm_bound(samples: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slacks: Vec<f64> = (0..samples)
        .map(|_| {
            let d = rng.random_range(1..=6);
            let rank = rng.random_range(1..=d);
            let b: Vec<Vec<f64>> = (0..rank)
                .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            // A = Σ b bᵀ, so vᵀAv = Σ (bᵀv)²
            let quad = |v: &[f64]| b.iter().map(|row| dot(row, v).powi(2)).sum::<f64>();
            let w: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
            let x = sample_in_ball(d, 1.0, &mut rng);
            let y = random_sign(&mut rng);
            quad(&x) - quad(&logistic_grad(&w, &x, y))
        })
        .collect();
    CheckOutcome::from_slacks("gradient_norm_bound", seed, 1e-12, slacks)
}

/// Slack of the one-step update inequality at comparator `v`.
pub fn update_inequality_slack(
    before: &LearnerState,
    after: &LearnerState,
    grad: &[f64],
    v: &[f64],
    eta: f64,
) -> f64 {
    let lhs = dot(&sub(&before.w, v), grad);
    let z = &after.z;
    let rhs = (z.quad(&sub(&before.w, v)) - z.quad(&sub(&after.w, v))) / (2.0 * eta)
        + 0.5 * eta * z.inv_quad(grad);
    rhs - lhs
}

/// One-step update inequality on random states, including boundary projections.
pub fn check_update_inequality(samples: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slacks = Vec::with_capacity(samples);
    while slacks.len() < samples {
        let d = rng.random_range(1..=6);
        let r = rng.random_range(0.2..3.0);
        let config = LearnerConfig {
            eta: rng.random_range(0.1..20.0),
            lambda: rng.random_range(0.1..5.0),
            ..LearnerConfig::new(r)
        };
        let mut state = LearnerState::initial(d, &config).expect("valid config");
        let history = rng.random_range(0..30);
        for _ in 0..history {
            let x = sample_in_ball(d, 1.0, &mut rng);
            state.z.rank1_update_in_place(&x, config.metric_step()).expect("valid update");
        }
        state.w = if rng.random::<bool>() {
            crate::linalg::scale(&crate::env::sample_on_sphere(d, &mut rng), r)
        } else {
            sample_in_ball(d, r, &mut rng)
        };
        let before = state.clone();
        let x = sample_in_ball(d, 1.0, &mut rng);
        let y = random_sign(&mut rng);
        let info = state.update(&x, y, &config).expect("update succeeds");
        for _ in 0..4 {
            let v = sample_in_ball(d, r, &mut rng);
            slacks.push(update_inequality_slack(&before, &state, &info.grad, &v, config.eta));
        }
    }
    slacks.truncate(samples);
    CheckOutcome::from_slacks("update_inequality", seed, 1e-9, slacks)
}

/// Diagnostics of one executed round of an audited trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundAudit {
    pub record: RoundRecord,
    /// Squared radius of the region used to choose this round's action.
    pub gamma: f64,
    /// Squared radius after the update.
    pub gamma_next: f64,
    /// `log det Z` after the update.
    pub logdet_next: f64,
    /// `(xᵀ(w_t − w*))²`
    pub a: f64,
    /// `(∇f̄(w_t) − ∇f(w_t))ᵀ(w_t − w*)`
    pub b: f64,
    /// `‖x‖²` in `Z_{t+1}⁻¹`
    pub c: f64,
    /// `‖w_t − w*‖²` in `Z_t`
    pub dist_sq: f64,
    /// `‖w_{t+1} − w*‖²` in `Z_{t+1}`
    pub dist_sq_next: f64,
    /// Slack of the update inequality at `v = w*`.
    pub update_slack: f64,
    /// `value − max_x xᵀw*` when the action was freshly optimized.
    pub optimism_gap: Option<f64>,
    /// Whether the optimistic parameter passed the region membership test.
    pub w_hat_member: bool,
}

/// A full simulated run of the learner with per-round diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: LearnerConfig,
    pub dim: usize,
    pub initial_logdet: f64,
    pub initial_gamma: f64,
    pub initial_dist_sq: f64,
    pub rounds: Vec<RoundAudit>,
    pub recomputations: usize,
    pub final_state: LearnerState,
}

/// Runs the learner for `horizon` rounds, recording everything the audits need.
///
/// Consumes exactly one uniform variate of `rng` per round, like the harness.
pub fn audit_run(
    instance: &Instance,
    config: &LearnerConfig,
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    let d = instance.dim();
    let params = &instance.params;
    let w_star = params.w_star();
    let x_star = best_action(&instance.set, params);
    let best_value = dot(&x_star, w_star);
    let mut learner = Learner::new(d, *config)?;
    let initial_logdet = learner.state().z.logdet();
    let initial_gamma = learner.state().gamma;
    let initial_dist_sq = learner.state().z.quad(&sub(&learner.state().w, w_star));

    let mut rounds = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let before = learner.state().clone();
        let (choice, recomputed) = learner.choose(&instance.set)?;
        let region = learner.region();
        let w_hat_member = region.contains(&choice.w_hat, 1e-8)?;
        let y = sample_feedback(params, &choice.x, rng);
        let info = learner.observe(&choice.x, y)?;
        let after = learner.state();

        let (lin, nonlin) = round_regrets(params, &x_star, &choice.x);
        let diff = sub(&before.w, w_star);
        let a = dot(&choice.x, &diff).powi(2);
        let gbar = expected_grad(&before.w, &choice.x, w_star);
        let b = dot(&sub(&gbar, &info.grad), &diff);
        rounds.push(RoundAudit {
            record: RoundRecord {
                t,
                x: choice.x.clone(),
                y,
                lin_regret: lin,
                nonlin_regret: nonlin,
                ucb_value: choice.value,
                recomputed,
            },
            gamma: before.gamma,
            gamma_next: after.gamma,
            logdet_next: after.z.logdet(),
            a,
            b,
            c: info.q_after,
            dist_sq: before.z.quad(&diff),
            dist_sq_next: after.z.quad(&sub(&after.w, w_star)),
            update_slack: update_inequality_slack(&before, after, &info.grad, w_star, config.eta),
            optimism_gap: recomputed.then_some(choice.value - best_value),
            w_hat_member,
        });
    }
    Ok(Trajectory {
        config: *config,
        dim: d,
        initial_logdet,
        initial_gamma,
        initial_dist_sq,
        recomputations: learner.recomputations(),
        final_state: learner.into_state(),
        rounds,
    })
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    /// Whether `w*` stayed inside the region at every round, with `γ` scaled by `scale`.
    pub fn contained(&self, scale: f64) -> bool {
        self.initial_dist_sq <= scale * self.initial_gamma
            && self.rounds.iter().all(|r| r.dist_sq_next <= scale * r.gamma_next)
    }

    pub fn cumulative_lin_regret(&self) -> Vec<f64> {
        self.rounds
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r.record.lin_regret;
                Some(*acc)
            })
            .collect()
    }

    /// Slack of the cumulative regret bound
    /// `Σ regret ≤ 4 √(γ_T T / (ηβ) · log(det Z_{T+1} / det Z_1))`, worst over prefixes.
    pub fn regret_bound_slack(&self) -> f64 {
        let eb = self.config.eta * self.config.beta();
        let mut cum = 0.0;
        let mut worst = f64::INFINITY;
        for (k, r) in self.rounds.iter().enumerate() {
            cum += r.record.lin_regret;
            let t = (k + 1) as f64;
            let info = (r.logdet_next - self.initial_logdet).max(0.0);
            let bound = 4.0 * (r.gamma * t / eb * info).sqrt();
            worst = worst.min(bound - cum);
        }
        worst
    }

    /// Slack of the per-round potential recursion, worst over rounds.
    pub fn potential_step_slack(&self) -> f64 {
        let eta = self.config.eta;
        let eb = eta * self.config.beta();
        self.rounds
            .iter()
            .map(|r| r.dist_sq - 0.5 * eb * r.a + 2.0 * eta * r.b + eta * eta * r.c - r.dist_sq_next)
            .fold(f64::INFINITY, f64::min)
    }

    /// Slack of the summed potential bound, worst over prefixes.
    pub fn potential_sum_slack(&self) -> f64 {
        let eta = self.config.eta;
        let eb = eta * self.config.beta();
        let start = self.config.lambda * self.config.r * self.config.r;
        let (mut sa, mut sb, mut sc) = (0.0, 0.0, 0.0);
        let mut worst = f64::INFINITY;
        for r in &self.rounds {
            sa += r.a;
            sb += r.b;
            sc += r.c;
            let slack = start + 2.0 * eta * sb + eta * eta * sc - r.dist_sq_next - 0.5 * eb * sa;
            worst = worst.min(slack);
        }
        worst
    }

    /// Slack of `Σ ‖x_i‖²_{Z_{i+1}⁻¹} ≤ (2/(ηβ)) log(det Z_{t+1}/det Z_1)`.
    pub fn elliptical_potential_slack(&self) -> f64 {
        let eb = self.config.eta * self.config.beta();
        let mut sum = 0.0;
        let mut worst = f64::INFINITY;
        for r in &self.rounds {
            sum += r.c;
            worst = worst.min(2.0 / eb * (r.logdet_next - self.initial_logdet) - sum);
        }
        worst
    }

    /// Slack of `log(det Z_{t+1}/det Z_1) ≤ d log(1 + ηβt/(2λd))`.
    pub fn logdet_growth_slack(&self) -> f64 {
        let eb = self.config.eta * self.config.beta();
        let d = self.dim as f64;
        self.rounds
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let t = (k + 1) as f64;
                d * (eb * t / (2.0 * self.config.lambda * d)).ln_1p() - (r.logdet_next - self.initial_logdet)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn martingale_trace(&self) -> MartingaleTrace {
        MartingaleTrace {
            a: self.rounds.iter().map(|r| r.a).collect(),
            b: self.rounds.iter().map(|r| r.b).collect(),
            c: self.rounds.iter().map(|r| r.c).collect(),
        }
    }
}

/// Per-round terms of the confidence analysis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MartingaleTrace {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl MartingaleTrace {
    /// Running sums `A_t = Σ a_i`.
    pub fn a_sums(&self) -> Vec<f64> {
        running_sum(&self.a)
    }

    /// Running sums `B_t = Σ b_i`.
    pub fn b_sums(&self) -> Vec<f64> {
        running_sum(&self.b)
    }

    /// Largest `|b_i|`.
    pub fn max_abs_b(&self) -> f64 {
        self.b.iter().fold(0.0, |m, b| m.max(b.abs()))
    }
}

fn running_sum(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Worst slack of `B_t ≤ 4R + 2√(τ_t A_t) + (8/3) R τ_t` over all `t`.
pub fn martingale_bound_slack(trace: &MartingaleTrace, r: f64, delta: f64) -> f64 {
    trace
        .a_sums()
        .iter()
        .zip(trace.b_sums())
        .enumerate()
        .map(|(k, (&a, b))| {
            let tau = tau_of(k + 1, delta);
            4.0 * r + 2.0 * (tau * a).sqrt() + 8.0 / 3.0 * r * tau - b
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn martingale_bound_test(trace: &MartingaleTrace, r: f64, delta: f64) -> bool {
    martingale_bound_slack(trace, r, delta) >= 0.0
}

/// `(holds, worst slack)` of the cumulative regret bound at tolerance `1e-8`.
pub fn regret_bound_test(trajectory: &Trajectory) -> (bool, f64) {
    let slack = trajectory.regret_bound_slack();
    (slack >= -1e-8, slack)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub replicates: usize,
    pub contained: Vec<bool>,
    pub coverage: f64,
    pub delta: f64,
}

impl CoverageReport {
    pub fn from_trajectories(trajectories: &[Trajectory], delta: f64, scale: f64) -> Self {
        let contained: Vec<bool> = trajectories.iter().map(|t| t.contained(scale)).collect();
        let hits = contained.iter().filter(|&&c| c).count();
        Self {
            replicates: contained.len(),
            coverage: if contained.is_empty() {
                0.0
            } else {
                hits as f64 / contained.len() as f64
            },
            contained,
            delta,
        }
    }
}

/// Audited runs for replicates `0..replicates`, each on its own stream of `seed`.
pub fn audit_replicates(
    instance: &Instance,
    config: &LearnerConfig,
    horizon: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    (0..replicates)
        .into_par_iter()
        .map(|rep| audit_run(instance, config, horizon, &mut stream_rng(seed, rep as u64)))
        .collect()
}

/// Fraction of replicates whose region contained `w*` at every round.
pub fn coverage_test(
    instance: &Instance,
    config: &LearnerConfig,
    horizon: usize,
    replicates: usize,
    seed: u64,
) -> Result<CoverageReport> {
    if replicates == 0 {
        return Err(Error::InvalidArgument("at least one replicate is required".into()));
    }
    let runs = audit_replicates(instance, config, horizon, replicates, seed)?;
    Ok(CoverageReport::from_trajectories(&runs, config.delta, 1.0))
}

/// Bounded martingale-difference generators for the Bernstein check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementModel {
    /// `±K` with equal probability.
    CoinFlip,
    /// Identically zero.
    Zero,
    /// `±σ_i` with `σ_i = K` after a nonnegative partial sum and `K/2` otherwise,
    /// so the conditional variance is random but predictable.
    AdaptiveScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinSetup {
    pub model: IncrementModel,
    /// Increment bound.
    pub k: f64,
    pub steps: usize,
    /// Variance budget in the event.
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinPoint {
    pub t: f64,
    pub exceedance: f64,
    pub bound: f64,
    pub margin: f64,
    pub passed: bool,
}

/// Monte-Carlo frequency of `{max_i S_i > √(2νt) + (2/3)Kt and Σ²_n ≤ ν}`, each
/// compared with `e^{-t}` plus a 3-sigma binomial margin.
pub fn bernstein_mc_test(
    setup: &BernsteinSetup,
    t_grid: &[f64],
    replicates: usize,
    seed: u64,
) -> Vec<BernsteinPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let thresholds: Vec<f64> = t_grid
        .iter()
        .map(|&t| (2.0 * setup.nu * t).sqrt() + 2.0 / 3.0 * setup.k * t)
        .collect();
    let mut hits = vec![0usize; t_grid.len()];
    for _ in 0..replicates {
        let mut s = 0.0;
        let mut max_s = f64::NEG_INFINITY;
        let mut var = 0.0;
        for _ in 0..setup.steps {
            let scale = match setup.model {
                IncrementModel::CoinFlip => setup.k,
                IncrementModel::Zero => 0.0,
                IncrementModel::AdaptiveScale => {
                    if s >= 0.0 {
                        setup.k
                    } else {
                        0.5 * setup.k
                    }
                }
            };
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            s += sign * scale;
            var += scale * scale;
            max_s = max_s.max(s);
        }
        if var <= setup.nu {
            for (h, th) in hits.iter_mut().zip(&thresholds) {
                if max_s > *th {
                    *h += 1;
                }
            }
        }
    }
    t_grid
        .iter()
        .zip(hits)
        .map(|(&t, h)| {
            let bound = (-t).exp();
            let margin = 3.0 * (bound * (1.0 - bound) / replicates as f64).sqrt();
            let exceedance = h as f64 / replicates as f64;
            BernsteinPoint {
                t,
                exceedance,
                bound,
                margin,
                passed: exceedance <= bound + margin,
            }
        })
        .collect()
}

/// Sizes and seeds of the verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    pub dim: usize,
    pub arms: usize,
    pub horizon: usize,
    pub replicates: usize,
    pub property_samples: usize,
    pub bernstein_replicates: usize,
    pub seed: u64,
    pub learner: LearnerConfig,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            dim: 5,
            arms: 20,
            horizon: 2000,
            replicates: 50,
            property_samples: 10_000,
            bernstein_replicates: 10_000,
            seed: 20_240_601,
            learner: LearnerConfig::new(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub settings: VerifySettings,
    pub coverage: CoverageReport,
    pub entries: Vec<CheckOutcome>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            context: "serializing verification report".into(),
            source,
        })
    }
}

fn trajectory_outcome(
    name: &str,
    seed: u64,
    tol: f64,
    runs: &[Trajectory],
    slack: impl Fn(&Trajectory) -> f64,
) -> CheckOutcome {
    CheckOutcome::from_slacks(name, seed, tol, runs.iter().map(slack).collect::<Vec<_>>())
}

/// Runs every check and collects a report.
pub fn run_verification(settings: &VerifySettings) -> Result<VerificationReport> {
    let seed = settings.seed;
    let n = settings.property_samples;
    let instance = Instance::random(
        settings.dim,
        settings.arms,
        settings.learner.r,
        &mut stream_rng(seed, u64::MAX),
    )?;
    let runs = audit_replicates(&instance, &settings.learner, settings.horizon, settings.replicates, seed)?;
    let coverage = CoverageReport::from_trajectories(&runs, settings.learner.delta, 1.0);
    let covered: Vec<Trajectory> = runs
        .iter()
        .zip(&coverage.contained)
        .filter(|(_, &c)| c)
        .map(|(t, _)| t.clone())
        .collect();

    let r = settings.learner.r;
    let delta = settings.learner.delta;
    let mut entries = vec![
        check_regret_sandwich(n, seed ^ 1),
        check_strong_convexity(n, seed ^ 2),
        check_expected_loss_minimizer(n, seed ^ 3),
        check_update_inequality(n, seed ^ 4),
        check_gradient_norm_bound(n, seed ^ 5),
        CheckOutcome {
            name: "confidence_coverage".into(),
            passed: coverage.coverage >= 1.0 - delta,
            samples: coverage.replicates,
            violations: coverage.contained.iter().filter(|c| !**c).count(),
            worst_slack: coverage.coverage - (1.0 - delta),
            seeds: vec![seed],
        },
        trajectory_outcome("regret_bound", seed, 1e-8, &covered, |t| t.regret_bound_slack()),
        trajectory_outcome("potential_step", seed, 1e-9, &runs, |t| t.potential_step_slack()),
        trajectory_outcome("potential_sum", seed, 1e-8, &runs, |t| t.potential_sum_slack()),
        trajectory_outcome("elliptical_potential", seed, 1e-8, &runs, |t| t.elliptical_potential_slack()),
        trajectory_outcome("logdet_growth", seed, 1e-8, &runs, |t| t.logdet_growth_slack()),
        trajectory_outcome("update_inequality_on_runs", seed, 1e-9, &runs, |t| {
            t.rounds.iter().map(|r| r.update_slack).fold(f64::INFINITY, f64::min)
        }),
        trajectory_outcome("martingale_increment_bound", seed, 1e-9, &runs, |t| {
            4.0 * r - t.martingale_trace().max_abs_b()
        }),
        trajectory_outcome("optimism", seed, 1e-8, &covered, |t| {
            t.rounds
                .iter()
                .filter_map(|r| r.optimism_gap)
                .fold(f64::INFINITY, f64::min)
        }),
        trajectory_outcome("optimistic_parameter_membership", seed, 0.0, &runs, |t| {
            if t.rounds.iter().all(|r| r.w_hat_member) {
                0.0
            } else {
                -1.0
            }
        }),
    ];

    // The martingale bound is a probabilistic statement: at most a δ fraction of
    // runs may violate it.
    let mart_fail = runs
        .iter()
        .filter(|t| !martingale_bound_test(&t.martingale_trace(), r, delta))
        .count();
    let mart_worst = runs
        .iter()
        .map(|t| martingale_bound_slack(&t.martingale_trace(), r, delta))
        .fold(f64::INFINITY, f64::min);
    entries.push(CheckOutcome {
        name: "martingale_bound".into(),
        passed: (mart_fail as f64) <= delta * runs.len() as f64,
        samples: runs.len(),
        violations: mart_fail,
        worst_slack: mart_worst,
        seeds: vec![seed],
    });

    for (label, setup) in bernstein_setups() {
        let points = bernstein_mc_test(&setup, &[0.5, 1.0, 2.0], settings.bernstein_replicates, seed ^ 7);
        entries.push(CheckOutcome {
            name: format!("bernstein_{label}"),
            passed: points.iter().all(|p| p.passed),
            samples: settings.bernstein_replicates * points.len(),
            violations: points.iter().filter(|p| !p.passed).count(),
            worst_slack: points
                .iter()
                .map(|p| p.bound + p.margin - p.exceedance)
                .fold(f64::INFINITY, f64::min),
            seeds: vec![seed ^ 7],
        });
    }

    let passed = entries.iter().all(|e| e.passed);
    Ok(VerificationReport {
        settings: settings.clone(),
        coverage,
        entries,
        passed,
    })
}

/// Generators exercised by the verification suite.
pub fn bernstein_setups() -> Vec<(&'static str, BernsteinSetup)> {
    vec![
        (
            "coin_flip",
            BernsteinSetup {
                model: IncrementModel::CoinFlip,
                k: 1.0,
                steps: 100,
                nu: 100.0,
            },
        ),
        (
            "adaptive_scale",
            BernsteinSetup {
                model: IncrementModel::AdaptiveScale,
                k: 1.0,
                steps: 100,
                nu: 62.5,
            },
        ),
        (
            "zero",
            BernsteinSetup {
                model: IncrementModel::Zero,
                k: 1.0,
                steps: 100,
                nu: 1.0,
            },
        ),
    ]
}
