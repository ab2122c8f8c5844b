//! Confidence regions around the learner's center.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{sub, SpdMatrix};

/// Shape of the confidence region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionMode {
    /// `{w : ‖w − c‖²_M ≤ r²}`
    #[default]
    Ellipsoid,
    /// `{w : ‖M^{1/2}(w − c)‖₁ ≤ √(d r²)}`, a polytope with `2d` vertices
    /// that contains the ellipsoid.
    L1Enlarged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceRegion {
    pub center: Vec<f64>,
    pub metric: SpdMatrix,
    /// Squared radius `γ`. For [`RegionMode::L1Enlarged`] the ℓ1 level is `√(d γ)`.
    pub radius_sq: f64,
    pub flavor: RegionMode,
}

impl ConfidenceRegion {
    pub fn new(center: Vec<f64>, metric: SpdMatrix, radius_sq: f64, flavor: RegionMode) -> Result<Self> {
        if center.len() != metric.dim() {
            return Err(invalid("region center and metric dimensions differ"));
        }
        if !(radius_sq >= 0.0) || !radius_sq.is_finite() {
            return Err(invalid(format!("radius² must be nonnegative, got {radius_sq}")));
        }
        Ok(Self {
            center,
            metric,
            radius_sq,
            flavor,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Bound that [`Self::distance`] is compared against.
    pub fn level(&self) -> f64 {
        match self.flavor {
            RegionMode::Ellipsoid => self.radius_sq.sqrt(),
            RegionMode::L1Enlarged => (self.dim() as f64 * self.radius_sq).sqrt(),
        }
    }

    /// Distance of `w` from the center in the region's own norm.
    pub fn distance(&self, w: &[f64]) -> Result<f64> {
        if w.len() != self.dim() {
            return Err(invalid("point dimension does not match region"));
        }
        let v = sub(w, &self.center);
        Ok(match self.flavor {
            RegionMode::Ellipsoid => self.metric.quad(&v).sqrt(),
            RegionMode::L1Enlarged => {
                let eig = self.metric.eig_sym()?;
                eig.sqrt_mul(&v).iter().map(|c| c.abs()).sum()
            }
        })
    }

    /// Membership with an additive tolerance on the squared (ellipsoid) or
    /// plain (ℓ1) distance.
    pub fn contains(&self, w: &[f64], tol: f64) -> Result<bool> {
        let dist = self.distance(w)?;
        Ok(match self.flavor {
            RegionMode::Ellipsoid => dist * dist <= self.radius_sq + tol,
            RegionMode::L1Enlarged => dist <= self.level() + tol,
        })
    }

    pub fn with_flavor(mut self, flavor: RegionMode) -> Self {
        self.flavor = flavor;
        self
    }
}
