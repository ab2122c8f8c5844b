//! Independent reference computations built on nalgebra.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ol2m::linalg::SpdMatrix;

pub fn dense(m: &SpdMatrix) -> DMatrix<f64> {
    let d = m.dim();
    DMatrix::from_row_slice(d, d, m.entries())
}

pub fn vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// `(Z⁻¹, log det Z)` from a fresh Cholesky factorization.
pub fn inverse_and_logdet(z: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let chol = z.clone().cholesky().expect("positive definite");
    let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    (chol.inverse(), logdet)
}

/// Symmetric inverse square root.
pub fn inv_sqrt(z: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = z.clone().symmetric_eigen();
    let d = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// `argmin ‖w − u‖_Z` over `‖w‖ ≤ r` by accelerated projected gradient.
pub fn pgd_projection(z: &DMatrix<f64>, u: &DVector<f64>, r: f64) -> DVector<f64> {
    let ball = |v: DVector<f64>| {
        let n = v.norm();
        if n > r {
            v * (r / n)
        } else {
            v
        }
    };
    let eig = z.clone().symmetric_eigen();
    let step = 1.0 / eig.eigenvalues.max();
    let mut w = ball(u.clone());
    let mut prev = w.clone();
    let mut momentum = w.clone();
    let mut theta: f64 = 1.0;
    for _ in 0..200_000 {
        let grad = z * (&momentum - u);
        w = ball(&momentum - grad * step);
        let next_theta = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        momentum = &w + (&w - &prev) * ((theta - 1.0) / next_theta);
        theta = next_theta;
        if (&w - &prev).norm() < 1e-15 {
            break;
        }
        prev = w.clone();
    }
    w
}

/// `max ‖w‖` over `‖w − c‖²_Z ≤ γ` in two dimensions, sampled on the boundary.
pub fn ball_value_brute_force_2d(z: &DMatrix<f64>, c: &[f64], gamma: f64, points: usize) -> f64 {
    // w − c = √γ L⁻ᵀ u with Z = L Lᵀ and ‖u‖ = 1
    let l = z.clone().cholesky().expect("positive definite").l();
    let m = l.transpose().try_inverse().expect("invertible") * gamma.sqrt();
    let mut best: f64 = 0.0;
    for k in 0..points {
        let th = k as f64 * std::f64::consts::TAU / points as f64;
        let (s, co) = th.sin_cos();
        let w0 = c[0] + m[(0, 0)] * co + m[(0, 1)] * s;
        let w1 = c[1] + m[(1, 0)] * co + m[(1, 1)] * s;
        best = best.max(w0.hypot(w1));
    }
    best
}

/// Vertices `c ± √(dγ) Z^{-1/2} e_i`.
pub fn l1_vertices(z: &DMatrix<f64>, c: &[f64], gamma: f64) -> Vec<DVector<f64>> {
    let d = c.len();
    let level = (d as f64 * gamma).sqrt();
    let root = inv_sqrt(z);
    let center = vector(c);
    (0..d)
        .flat_map(|i| {
            let col = root.column(i) * level;
            [&center + &col, &center - &col]
        })
        .collect()
}
