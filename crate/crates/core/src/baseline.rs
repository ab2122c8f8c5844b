//! Ridge-regression UCB baseline (ConfidenceBall₂).
//!
//! The center is the online ridge estimate `A⁻¹ b` with `A = λI + Σ x xᵀ` and
//! `b = Σ y x`, fed the raw `±1` feedback. Under logit feedback that model is
//! misspecified, which is the point of the comparison.
//!
//! Width schedule: `√δ_t = √λ R + √(2 log(1/δ) + log det A_t − d log λ)`.

use serde::{Deserialize, Serialize};

use crate::env::DecisionSet;
use crate::error::{invalid, Result};
use crate::linalg::{axpy, SpdMatrix};
use crate::region::{ConfidenceRegion, RegionMode};
use crate::select::{select_action, ActionChoice};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cb2Config {
    pub lambda: f64,
    pub delta: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

impl Cb2Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !(self.r > 0.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("baseline needs lambda > 0, R > 0 and delta in (0, 1)"));
        }
        Ok(())
    }

    fn radius_sq(&self, a: &SpdMatrix) -> f64 {
        let d = a.dim() as f64;
        let info = (a.logdet() - d * self.lambda.ln()).max(0.0);
        let root = self.lambda.sqrt() * self.r + (2.0 * (1.0 / self.delta).ln() + info).sqrt();
        root * root
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cb2State {
    pub t: usize,
    pub a: SpdMatrix,
    pub b: Vec<f64>,
    pub w: Vec<f64>,
    pub radius_sq: f64,
}

impl Cb2State {
    pub fn new(d: usize, config: &Cb2Config) -> Result<Self> {
        config.validate()?;
        let a = SpdMatrix::identity(d, config.lambda)?;
        Ok(Self {
            t: 1,
            radius_sq: config.radius_sq(&a),
            a,
            b: vec![0.0; d],
            w: vec![0.0; d],
        })
    }

    pub fn update(&mut self, x: &[f64], y: f64, config: &Cb2Config) -> Result<()> {
        if x.len() != self.b.len() {
            return Err(invalid("observation dimension does not match the baseline"));
        }
        self.a.rank1_update_in_place(x, 1.0)?;
        axpy(&mut self.b, y, x);
        self.w = self.a.inv_mul_vec(&self.b);
        self.radius_sq = config.radius_sq(&self.a);
        self.t += 1;
        Ok(())
    }

    pub fn region(&self) -> ConfidenceRegion {
        ConfidenceRegion {
            center: self.w.clone(),
            metric: self.a.clone(),
            radius_sq: self.radius_sq,
            flavor: RegionMode::Ellipsoid,
        }
    }
}

pub fn cb2_update(state: &Cb2State, x: &[f64], y: f64, config: &Cb2Config) -> Result<Cb2State> {
    let mut next = state.clone();
    next.update(x, y, config)?;
    Ok(next)
}

/// Same optimistic solvers as the main learner, over the ridge ellipsoid.
pub fn cb2_select(state: &Cb2State, set: &DecisionSet) -> Result<ActionChoice> {
    select_action(set, &state.region())
}
