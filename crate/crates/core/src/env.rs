//! The simulated one-bit oracle: hidden parameter, decision sets, logit feedback
//! and ground-truth regrets.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm2, scale};

/// Slack allowed on norm constraints coming from user data.
const NORM_SLACK: f64 = 1e-12;

/// Logistic sigmoid `e^z / (1 + e^z)`, evaluated through `e^{-|z|}`.
pub fn mu(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    if z >= 0.0 {
        1.0 / (1.0 + e)
    } else {
        e / (1.0 + e)
    }
}

/// Hidden parameter of the logit model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    w_star: Vec<f64>,
    r: f64,
}

impl ModelParams {
    pub fn new(w_star: Vec<f64>, r: f64) -> Result<Self> {
        if w_star.is_empty() {
            return Err(invalid("parameter dimension must be at least 1"));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(invalid(format!("norm bound R must be positive, got {r}")));
        }
        let n = norm2(&w_star);
        if !n.is_finite() || n > r * (1.0 + NORM_SLACK) {
            return Err(invalid(format!("|w*| = {n} exceeds R = {r}")));
        }
        Ok(Self { w_star, r })
    }

    pub fn w_star(&self) -> &[f64] {
        &self.w_star
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.w_star.len()
    }

    /// Probability of observing `+1` after playing `x`.
    pub fn p_positive(&self, x: &[f64]) -> f64 {
        mu(dot(x, &self.w_star))
    }
}

/// Feasible actions. Every action lies in the unit ball.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionSet {
    FiniteArms(Vec<Vec<f64>>),
    UnitBall(usize),
}

impl DecisionSet {
    pub fn finite(arms: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = arms.first() else {
            return Err(invalid("a finite decision set needs at least one arm"));
        };
        let d = first.len();
        if d == 0 {
            return Err(invalid("arms must have positive dimension"));
        }
        for (i, a) in arms.iter().enumerate() {
            if a.len() != d {
                return Err(invalid(format!("arm {i} has length {}, expected {d}", a.len())));
            }
            let n = norm2(a);
            if !n.is_finite() || n > 1.0 + NORM_SLACK {
                return Err(invalid(format!("arm {i} has norm {n} > 1")));
            }
        }
        Ok(Self::FiniteArms(arms))
    }

    pub fn unit_ball(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("ball dimension must be at least 1"));
        }
        Ok(Self::UnitBall(d))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::FiniteArms(arms) => arms[0].len(),
            Self::UnitBall(d) => *d,
        }
    }
}

/// One executed round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: i8,
    pub lin_regret: f64,
    pub nonlin_regret: f64,
    pub ucb_value: f64,
    pub recomputed: bool,
}

/// Draws `y ∈ {±1}` from the logit model, consuming exactly one uniform variate.
pub fn sample_feedback<R: Rng + ?Sized>(params: &ModelParams, x: &[f64], rng: &mut R) -> i8 {
    debug_assert!(norm2(x) <= 1.0 + NORM_SLACK);
    let u: f64 = rng.random();
    if u < params.p_positive(x) {
        1
    } else {
        -1
    }
}

/// Comparator action `argmax_{x∈D} xᵀw*`; finite ties go to the lowest index.
pub fn best_action(set: &DecisionSet, params: &ModelParams) -> Vec<f64> {
    match set {
        DecisionSet::FiniteArms(arms) => {
            let mut best = 0;
            let mut best_val = dot(&arms[0], params.w_star());
            for (i, a) in arms.iter().enumerate().skip(1) {
                let v = dot(a, params.w_star());
                if v > best_val {
                    best = i;
                    best_val = v;
                }
            }
            arms[best].clone()
        }
        DecisionSet::UnitBall(d) => {
            let n = norm2(params.w_star());
            if n == 0.0 {
                vec![0.0; *d]
            } else {
                scale(params.w_star(), 1.0 / n)
            }
        }
    }
}

/// Linear and nonlinear instantaneous regret of playing `x` against `x_star`.
pub fn round_regrets(params: &ModelParams, x_star: &[f64], x: &[f64]) -> (f64, f64) {
    let best = dot(x_star, params.w_star());
    let got = dot(x, params.w_star());
    let lin = (best - got).max(0.0);
    let nonlin = (mu(best) - mu(got)).max(0.0);
    (lin, nonlin)
}

/// Checks `lin / (2(1+e^R)) ≤ nonlin ≤ lin / 4` with a `1e-10` slack on both sides.
pub fn sandwich_check(lin: f64, nonlin: f64, r: f64) -> bool {
    let lower = lin / (2.0 * (1.0 + r.exp()));
    let upper = lin / 4.0;
    lower - 1e-10 <= nonlin && nonlin <= upper + 1e-10
}

/// Uniform draw from the ball of the given radius.
pub fn sample_in_ball<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let dir = sample_on_sphere(d, rng);
    let u: f64 = rng.random();
    scale(&dir, radius * u.powf(1.0 / d as f64))
}

/// Uniform draw from the unit sphere.
pub fn sample_on_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm2(&g);
        if n > 1e-12 {
            return scale(&g, 1.0 / n);
        }
    }
}

/// A complete problem: hidden parameter plus decision set.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub params: ModelParams,
    pub set: DecisionSet,
}

/// On-disk layout of an [`Instance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub d: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub w_star: Vec<f64>,
    pub decision_set: DecisionSetFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DecisionSetFile {
    Finite { arms: Vec<Vec<f64>> },
    Ball,
}

impl Instance {
    pub fn new(params: ModelParams, set: DecisionSet) -> Result<Self> {
        if params.dim() != set.dim() {
            return Err(invalid(format!(
                "parameter dimension {} does not match decision set dimension {}",
                params.dim(),
                set.dim()
            )));
        }
        Ok(Self { params, set })
    }

    /// `w*` uniform in the `R`-ball; `arms` points uniform in the unit ball,
    /// or the unit ball itself when `arms == 0`.
    pub fn random<R: Rng + ?Sized>(d: usize, arms: usize, r: f64, rng: &mut R) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        let w_star = sample_in_ball(d, r, rng);
        let set = if arms == 0 {
            DecisionSet::unit_ball(d)?
        } else {
            DecisionSet::finite((0..arms).map(|_| sample_in_ball(d, 1.0, rng)).collect())?
        };
        Self::new(ModelParams::new(w_star, r)?, set)
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            d: self.dim(),
            r: self.params.r(),
            w_star: self.params.w_star().to_vec(),
            decision_set: match &self.set {
                DecisionSet::FiniteArms(arms) => DecisionSetFile::Finite { arms: arms.clone() },
                DecisionSet::UnitBall(_) => DecisionSetFile::Ball,
            },
        }
    }

    pub fn from_file(file: InstanceFile) -> Result<Self> {
        if file.w_star.len() != file.d {
            return Err(invalid(format!(
                "w_star has length {}, expected d = {}",
                file.w_star.len(),
                file.d
            )));
        }
        let set = match file.decision_set {
            DecisionSetFile::Finite { arms } => DecisionSet::finite(arms)?,
            DecisionSetFile::Ball => DecisionSet::unit_ball(file.d)?,
        };
        Self::new(ModelParams::new(file.w_star, file.r)?, set)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_file()).map_err(|source| Error::Json {
            context: "serializing instance".into(),
            source,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "parsing instance".into(),
            source,
        })?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                context: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
