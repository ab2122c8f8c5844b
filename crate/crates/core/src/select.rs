//! Optimistic action selection: `argmax_{x ∈ D, w ∈ C} xᵀw`.
//!
//! Three solvers cover the supported combinations:
//! - [`select_finite`]: finite arms over an ellipsoid, where the inner maximum has
//!   the closed form `xᵀc + √γ ‖x‖_{Z⁻¹}`;
//! - [`select_ball`]: the unit ball over an ellipsoid, which reduces to maximizing
//!   `‖w‖₂` over the ellipsoid (a trust-region style secular equation);
//! - [`select_l1`]: either decision set over the ℓ1-enlarged region, by scanning
//!   its `2d` vertices.

use crate::env::DecisionSet;
use crate::error::{invalid, Result};
use crate::linalg::{dot, norm2, scale};
use crate::region::{ConfidenceRegion, RegionMode};
use crate::secular::increasing_root;

/// Eigenvalues within this relative distance of the smallest one are treated
/// as belonging to the same eigenspace.
const EIGEN_CLUSTER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ActionChoice {
    pub x: Vec<f64>,
    /// Optimistic parameter in the region.
    pub w_hat: Vec<f64>,
    /// `xᵀ w_hat`
    pub value: f64,
    /// Index of the chosen arm for finite decision sets.
    pub arm: Option<usize>,
}

fn require_flavor(region: &ConfidenceRegion, flavor: RegionMode) -> Result<()> {
    if region.flavor != flavor {
        return Err(invalid(format!(
            "solver expects a {flavor:?} region, got {:?}",
            region.flavor
        )));
    }
    Ok(())
}

fn unit_axis(d: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[0] = 1.0;
    e
}

/// Dispatches on the decision set and region flavor.
pub fn select_action(set: &DecisionSet, region: &ConfidenceRegion) -> Result<ActionChoice> {
    if set.dim() != region.dim() {
        return Err(invalid("decision set and region dimensions differ"));
    }
    match (region.flavor, set) {
        (RegionMode::Ellipsoid, DecisionSet::FiniteArms(arms)) => select_finite(arms, region),
        (RegionMode::Ellipsoid, DecisionSet::UnitBall(_)) => select_ball(region),
        (RegionMode::L1Enlarged, _) => select_l1(set, region),
    }
}

/// Upper confidence bound of one arm over an ellipsoid, with its maximizer.
pub fn arm_ucb(x: &[f64], region: &ConfidenceRegion) -> (f64, Vec<f64>) {
    let zx = region.metric.inv_mul_vec(x);
    let width = dot(x, &zx).max(0.0).sqrt();
    let radius = region.radius_sq.sqrt();
    if width == 0.0 || radius == 0.0 {
        return (dot(x, &region.center), region.center.clone());
    }
    let s = radius / width;
    let w_hat: Vec<f64> = region.center.iter().zip(&zx).map(|(c, z)| c + s * z).collect();
    (dot(x, &w_hat), w_hat)
}

/// Best arm by `xᵀc + √γ ‖x‖_{Z⁻¹}`; ties go to the lowest index.
pub fn select_finite(arms: &[Vec<f64>], region: &ConfidenceRegion) -> Result<ActionChoice> {
    require_flavor(region, RegionMode::Ellipsoid)?;
    if arms.is_empty() {
        return Err(invalid("no arms to choose from"));
    }
    let mut best: Option<ActionChoice> = None;
    for (i, x) in arms.iter().enumerate() {
        if x.len() != region.dim() {
            return Err(invalid(format!("arm {i} has the wrong dimension")));
        }
        let (value, w_hat) = arm_ucb(x, region);
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(ActionChoice {
                x: x.clone(),
                w_hat,
                value,
                arm: Some(i),
            });
        }
    }
    Ok(best.expect("non-empty arm list"))
}

/// `argmax ‖w‖₂` over `(w − c)ᵀZ(w − c) ≤ γ`.
///
/// Stationarity gives `(ρZ − I) w = ρ Z c` with `ρ ≥ 1/λ_min(Z)`. Writing
/// `ρ = 1/λ_min + s` and working in the eigenbasis, the boundary condition is
/// `Σ λᵢ cᵢ² / Dᵢ(s)² = γ` with `Dᵢ(s) = λᵢ/λ_min − 1 + s λᵢ`, decreasing in `s`.
/// When `c` has no component along the bottom eigenspace and the remaining terms
/// already fit inside the radius at `s = 0`, the solution is completed along the
/// bottom eigenvector (the hard case).
pub fn max_norm_on_ellipsoid(region: &ConfidenceRegion) -> Result<Vec<f64>> {
    let gamma = region.radius_sq;
    if gamma == 0.0 {
        return Ok(region.center.clone());
    }
    let eig = region.metric.eig_sym()?;
    let ct = eig.to_eigenbasis(&region.center);
    let lmin = eig.values[0];
    let bottom: Vec<bool> = eig
        .values
        .iter()
        .map(|&l| l - lmin <= EIGEN_CLUSTER_TOL * l)
        .collect();

    let denom = |s: f64, i: usize| -> f64 {
        let l = eig.values[i];
        if bottom[i] {
            s * l
        } else {
            l / lmin - 1.0 + s * l
        }
    };
    let h_and_slope = |s: f64, only_top: bool| -> (f64, f64) {
        let mut h = 0.0;
        let mut dh = 0.0;
        for i in 0..ct.len() {
            if only_top && bottom[i] {
                continue;
            }
            let l = eig.values[i];
            let num = l * ct[i] * ct[i];
            if num == 0.0 {
                continue;
            }
            let di = denom(s, i);
            h += num / (di * di);
            dh -= 2.0 * num * l / (di * di * di);
        }
        (h, dh)
    };

    let bottom_energy: f64 = (0..ct.len())
        .filter(|&i| bottom[i])
        .map(|i| eig.values[i] * ct[i] * ct[i])
        .sum();
    let top_at_zero = h_and_slope(0.0, true).0;
    let hard = bottom_energy <= 1e-28 * gamma.max(1.0) && top_at_zero <= gamma;

    let wt: Vec<f64> = if hard {
        let mut wt: Vec<f64> = (0..ct.len())
            .map(|i| if bottom[i] { 0.0 } else { ct[i] + ct[i] / denom(0.0, i) })
            .collect();
        let k = (0..ct.len()).find(|&i| bottom[i]).expect("bottom eigenspace");
        wt[k] = ((gamma - top_at_zero).max(0.0) / lmin).sqrt();
        wt
    } else {
        let inv_sqrt_gamma = 1.0 / gamma.sqrt();
        let mut hi = 1.0 / lmin;
        while h_and_slope(hi, false).0 > gamma {
            hi *= 2.0;
        }
        let s = increasing_root(
            "ball action multiplier",
            |s| {
                let (h, dh) = h_and_slope(s, false);
                if h.is_infinite() {
                    return Ok((-inv_sqrt_gamma, 0.0));
                }
                Ok((1.0 / h.sqrt() - inv_sqrt_gamma, -0.5 * dh / (h * h.sqrt())))
            },
            0.0,
            hi,
            0.5 * hi,
            |g| g.abs() <= 1e-14 * inv_sqrt_gamma,
        )?;
        (0..ct.len()).map(|i| ct[i] + ct[i] / denom(s, i)).collect()
    };
    Ok(clamp_into_ellipsoid(region, eig.from_eigenbasis(&wt)))
}

/// Pulls `w` radially toward the center if rounding left it outside.
fn clamp_into_ellipsoid(region: &ConfidenceRegion, w: Vec<f64>) -> Vec<f64> {
    let v: Vec<f64> = w.iter().zip(&region.center).map(|(a, b)| a - b).collect();
    let q = region.metric.quad(&v);
    if q <= region.radius_sq {
        return w;
    }
    let s = (region.radius_sq / q).sqrt();
    region.center.iter().zip(&v).map(|(c, vi)| c + s * vi).collect()
}

/// Optimistic action over the unit ball: `x = ŵ / ‖ŵ‖`, value `‖ŵ‖`.
pub fn select_ball(region: &ConfidenceRegion) -> Result<ActionChoice> {
    require_flavor(region, RegionMode::Ellipsoid)?;
    let w_hat = max_norm_on_ellipsoid(region)?;
    Ok(ball_choice(w_hat))
}

fn ball_choice(w_hat: Vec<f64>) -> ActionChoice {
    let n = norm2(&w_hat);
    let x = if n > 0.0 {
        scale(&w_hat, 1.0 / n)
    } else {
        unit_axis(w_hat.len())
    };
    ActionChoice {
        value: dot(&x, &w_hat),
        x,
        w_hat,
        arm: None,
    }
}

/// Vertices `c ± √(dγ) Z^{-1/2} eᵢ` of the ℓ1-enlarged region, ordered
/// `+e₁, −e₁, +e₂, −e₂, …`.
pub fn l1_vertices(region: &ConfidenceRegion) -> Result<Vec<Vec<f64>>> {
    let eig = region.metric.eig_sym()?;
    let level = (region.dim() as f64 * region.radius_sq).sqrt();
    let mut out = Vec::with_capacity(2 * region.dim());
    for i in 0..region.dim() {
        let col = eig.inv_sqrt_column(i);
        for sign in [1.0, -1.0] {
            out.push(
                region
                    .center
                    .iter()
                    .zip(&col)
                    .map(|(c, v)| c + sign * level * v)
                    .collect(),
            );
        }
    }
    Ok(out)
}

/// Vertex scan over the ℓ1-enlarged region.
pub fn select_l1(set: &DecisionSet, region: &ConfidenceRegion) -> Result<ActionChoice> {
    require_flavor(region, RegionMode::L1Enlarged)?;
    let vertices = l1_vertices(region)?;
    match set {
        DecisionSet::FiniteArms(arms) => {
            let mut best: Option<ActionChoice> = None;
            for (i, x) in arms.iter().enumerate() {
                for v in &vertices {
                    let value = dot(x, v);
                    if best.as_ref().is_none_or(|b| value > b.value) {
                        best = Some(ActionChoice {
                            x: x.clone(),
                            w_hat: v.clone(),
                            value,
                            arm: Some(i),
                        });
                    }
                }
            }
            best.ok_or_else(|| invalid("no arms to choose from"))
        }
        DecisionSet::UnitBall(_) => {
            let mut best = &vertices[0];
            let mut best_norm = norm2(best);
            for v in &vertices[1..] {
                let n = norm2(v);
                if n > best_norm {
                    best = v;
                    best_norm = n;
                }
            }
            Ok(ball_choice(best.clone()))
        }
    }
}

/// `true` when `det Z` has grown by more than the factor `1 + c` since the last
/// recomputation.
pub fn lazy_gate(logdet_now: f64, logdet_at_last: f64, c: f64) -> bool {
    logdet_now - logdet_at_last > c.ln_1p()
}
