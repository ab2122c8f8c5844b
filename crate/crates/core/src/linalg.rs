//! Dense symmetric positive-definite matrices with incremental rank-one updates.
//!
//! [`SpdMatrix`] stores the matrix together with its inverse and log-determinant.
//! Rank-one updates keep all three in sync through the Sherman–Morrison identity
//! and the matrix determinant lemma, and every [`REFACTOR_PERIOD`] updates the
//! inverse and log-determinant are rebuilt from a fresh Cholesky factorization so
//! accumulated rounding cannot drift.
//!
//! Dimensions are small (tens at most), so everything is stored dense and row-major.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Number of incremental updates between two full refactorizations.
pub const REFACTOR_PERIOD: usize = 256;

const JACOBI_MAX_SWEEPS: usize = 100;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `y += s * x`
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub(crate) fn mat_vec(dim: usize, m: &[f64], x: &[f64]) -> Vec<f64> {
    (0..dim).map(|i| dot(&m[i * dim..(i + 1) * dim], x)).collect()
}

/// Lower-triangular Cholesky factor of `m + shift * I`, or `None` if the
/// shifted matrix is not numerically positive definite.
pub(crate) fn cholesky_shifted(dim: usize, m: &[f64], shift: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; dim * dim];
    for j in 0..dim {
        let mut diag = m[j * dim + j] + shift;
        for k in 0..j {
            diag -= l[j * dim + k] * l[j * dim + k];
        }
        if !(diag > 0.0) {
            return None;
        }
        let ljj = diag.sqrt();
        l[j * dim + j] = ljj;
        for i in j + 1..dim {
            let mut s = m[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            l[i * dim + j] = s / ljj;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ y = b` given the lower factor `L`.
pub(crate) fn cholesky_solve(dim: usize, l: &[f64], b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..dim {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * dim + k] * y[k];
        }
        y[i] = s / l[i * dim + i];
    }
    for i in (0..dim).rev() {
        let mut s = y[i];
        for k in i + 1..dim {
            s -= l[k * dim + i] * y[k];
        }
        y[i] = s / l[i * dim + i];
    }
    y
}

fn cholesky_logdet(dim: usize, l: &[f64]) -> f64 {
    (0..dim).map(|i| 2.0 * l[i * dim + i].ln()).sum()
}

fn cholesky_inverse(dim: usize, l: &[f64]) -> Vec<f64> {
    let mut inv = vec![0.0; dim * dim];
    let mut e = vec![0.0; dim];
    for j in 0..dim {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = cholesky_solve(dim, l, &e);
        for i in 0..dim {
            inv[i * dim + j] = col[i];
        }
    }
    symmetrize(dim, &mut inv);
    inv
}

fn symmetrize(dim: usize, m: &mut [f64]) {
    for i in 0..dim {
        for j in i + 1..dim {
            let avg = 0.5 * (m[i * dim + j] + m[j * dim + i]);
            m[i * dim + j] = avg;
            m[j * dim + i] = avg;
        }
    }
}

/// Symmetric positive-definite matrix with co-maintained inverse and log-determinant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SpdMatrix {
    dim: usize,
    m: Vec<f64>,
    inv: Vec<f64>,
    logdet: f64,
    updates_since_refactor: usize,
}

impl SpdMatrix {
    /// `scale * I`.
    pub fn identity(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(invalid(format!("scale must be positive and finite, got {scale}")));
        }
        let mut m = vec![0.0; dim * dim];
        let mut inv = vec![0.0; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = scale;
            inv[i * dim + i] = 1.0 / scale;
        }
        Ok(Self {
            dim,
            m,
            inv,
            logdet: dim as f64 * scale.ln(),
            updates_since_refactor: 0,
        })
    }

    /// Builds from row-major entries, verifying symmetry and positive definiteness.
    pub fn from_row_major(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(invalid(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        for i in 0..dim {
            for j in i + 1..dim {
                if (entries[i * dim + j] - entries[j * dim + i]).abs() > 1e-12 {
                    return Err(invalid(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        let mut out = Self {
            dim,
            m: entries,
            inv: Vec::new(),
            logdet: 0.0,
            updates_since_refactor: 0,
        };
        symmetrize(dim, &mut out.m);
        out.refactorize()?;
        Ok(out)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(invalid("matrix rows must all have length equal to the row count"));
        }
        Self::from_row_major(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.dim + j]
    }

    pub fn inv_get(&self, i: usize, j: usize) -> f64 {
        self.inv[i * self.dim + j]
    }

    /// Row-major entries of the matrix.
    pub fn entries(&self) -> &[f64] {
        &self.m
    }

    /// Row-major entries of the co-maintained inverse.
    pub fn inverse_entries(&self) -> &[f64] {
        &self.inv
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.m.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(self.dim, &self.m, x)
    }

    pub fn inv_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(self.dim, &self.inv, x)
    }

    /// `xᵀ M x`
    pub fn quad(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x)).max(0.0)
    }

    /// `xᵀ M⁻¹ x`
    pub fn inv_quad(&self, x: &[f64]) -> f64 {
        dot(x, &self.inv_mul_vec(x)).max(0.0)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(invalid(format!(
                "vector of length {} does not match matrix dimension {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Returns `self + alpha * x xᵀ`.
    pub fn rank1_update(&self, x: &[f64], alpha: f64) -> Result<Self> {
        let mut out = self.clone();
        out.rank1_update_in_place(x, alpha)?;
        Ok(out)
    }

    /// In-place `M ← M + alpha * x xᵀ`, returning `xᵀ M⁻¹ x` measured before the update.
    pub fn rank1_update_in_place(&mut self, x: &[f64], alpha: f64) -> Result<f64> {
        self.check_len(x)?;
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(invalid(format!("update weight must be nonnegative, got {alpha}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("update vector must be finite"));
        }
        let d = self.dim;
        let zx = self.inv_mul_vec(x);
        let q = dot(x, &zx).max(0.0);
        if alpha == 0.0 {
            return Ok(q);
        }
        let coef = alpha / (1.0 + alpha * q);
        for i in 0..d {
            let ax = alpha * x[i];
            let czx = coef * zx[i];
            for j in i..d {
                let mij = self.m[i * d + j] + ax * x[j];
                self.m[i * d + j] = mij;
                self.m[j * d + i] = mij;
                let vij = self.inv[i * d + j] - czx * zx[j];
                self.inv[i * d + j] = vij;
                self.inv[j * d + i] = vij;
            }
        }
        self.logdet += (alpha * q).ln_1p();
        self.updates_since_refactor += 1;
        if self.updates_since_refactor >= REFACTOR_PERIOD {
            self.refactorize()?;
        }
        Ok(q)
    }

    /// Recomputes the inverse and log-determinant from a fresh Cholesky factorization.
    pub fn refactorize(&mut self) -> Result<()> {
        let l = cholesky_shifted(self.dim, &self.m, 0.0)
            .ok_or_else(|| invalid("matrix is not positive definite"))?;
        self.inv = cholesky_inverse(self.dim, &l);
        self.logdet = cholesky_logdet(self.dim, &l);
        self.updates_since_refactor = 0;
        Ok(())
    }

    /// Solves `(M + shift I) y = b` with a fresh factorization.
    pub fn solve_shifted(&self, shift: f64, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b)?;
        let l = cholesky_shifted(self.dim, &self.m, shift).ok_or(Error::NumericFailure {
            what: "shifted Cholesky factorization",
            iterations: 0,
        })?;
        Ok(cholesky_solve(self.dim, &l, b))
    }

    /// Symmetric eigendecomposition, eigenvalues ascending and all positive.
    pub fn eig_sym(&self) -> Result<SymEigen> {
        let eig = sym_eigen(self.dim, &self.m)?;
        if eig.values[0] <= 0.0 {
            return Err(Error::NumericFailure {
                what: "positive spectrum",
                iterations: 0,
            });
        }
        Ok(eig)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SpdMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<SpdMatrix> for Vec<Vec<f64>> {
    fn from(m: SpdMatrix) -> Self {
        m.rows()
    }
}

/// `xᵀ A x`
pub fn weighted_norm_sq(x: &[f64], a: &SpdMatrix) -> Result<f64> {
    a.check_len(x)?;
    Ok(a.quad(x))
}

/// Eigen-decomposition `A = V diag(values) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`; its largest-magnitude
    /// component is positive.
    pub vectors: Vec<Vec<f64>>,
}

impl SymEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Coordinates of `x` in the eigenbasis, `Vᵀ x`.
    pub fn to_eigenbasis(&self, x: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|v| dot(v, x)).collect()
    }

    /// `V y`
    pub fn from_eigenbasis(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (v, &c) in self.vectors.iter().zip(y) {
            axpy(&mut out, c, v);
        }
        out
    }

    /// Column `i` of `A^{-1/2}`.
    pub fn inv_sqrt_column(&self, i: usize) -> Vec<f64> {
        let coords: Vec<f64> = self
            .vectors
            .iter()
            .zip(&self.values)
            .map(|(v, &l)| v[i] / l.sqrt())
            .collect();
        self.from_eigenbasis(&coords)
    }

    /// `A^{1/2} x`
    pub fn sqrt_mul(&self, x: &[f64]) -> Vec<f64> {
        let coords: Vec<f64> = self
            .to_eigenbasis(x)
            .iter()
            .zip(&self.values)
            .map(|(c, &l)| c * l.max(0.0).sqrt())
            .collect();
        self.from_eigenbasis(&coords)
    }
}

/// Cyclic Jacobi eigensolver for a symmetric row-major matrix.
pub fn sym_eigen(dim: usize, entries: &[f64]) -> Result<SymEigen> {
    if dim == 0 || entries.len() != dim * dim {
        return Err(invalid("eigendecomposition needs a non-empty square matrix"));
    }
    let mut a = entries.to_vec();
    symmetrize(dim, &mut a);
    let mut v = vec![0.0; dim * dim];
    for i in 0..dim {
        v[i * dim + i] = 1.0;
    }
    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = f64::EPSILON * frob.max(f64::MIN_POSITIVE);

    let mut converged = dim == 1;
    let mut sweeps = 0;
    while !converged {
        let off: f64 = (0..dim)
            .flat_map(|i| (i + 1..dim).map(move |j| (i, j)))
            .map(|(i, j)| a[i * dim + j] * a[i * dim + j])
            .sum::<f64>()
            .sqrt();
        if off <= target {
            converged = true;
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            break;
        }
        sweeps += 1;
        for p in 0..dim {
            for q in p + 1..dim {
                let apq = a[p * dim + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * dim + p];
                let aqq = a[q * dim + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    a[k * dim + p] = c * akp - s * akq;
                    a[k * dim + q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p * dim + k];
                    let aqk = a[q * dim + k];
                    a[p * dim + k] = c * apk - s * aqk;
                    a[q * dim + k] = s * apk + c * aqk;
                }
                a[p * dim + q] = 0.0;
                a[q * dim + p] = 0.0;
                for k in 0..dim {
                    let vkp = v[k * dim + p];
                    let vkq = v[k * dim + q];
                    v[k * dim + p] = c * vkp - s * vkq;
                    v[k * dim + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NumericFailure {
            what: "Jacobi eigensolver",
            iterations: sweeps,
        });
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| a[i * dim + i].total_cmp(&a[j * dim + j]));
    let values = order.iter().map(|&i| a[i * dim + i]).collect();
    let vectors = order
        .iter()
        .map(|&j| {
            let mut col: Vec<f64> = (0..dim).map(|i| v[i * dim + j]).collect();
            let lead = col
                .iter()
                .copied()
                .max_by(|x, y| x.abs().total_cmp(&y.abs()))
                .unwrap_or(1.0);
            if lead < 0.0 {
                col.iter_mut().for_each(|c| *c = -*c);
            }
            col
        })
        .collect();
    Ok(SymEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(dim: usize, rng: &mut ChaCha8Rng) -> SpdMatrix {
        let b: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut m = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                m[i * dim + j] = (0..dim).map(|k| b[i * dim + k] * b[j * dim + k]).sum::<f64>();
            }
            m[i * dim + i] += 0.5;
        }
        SpdMatrix::from_row_major(dim, m).unwrap()
    }

    #[test]
    fn identity_values() {
        let z = SpdMatrix::identity(2, 1.0).unwrap();
        assert_eq!(z.entries(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(z.logdet(), 0.0);

        let z = SpdMatrix::identity(3, 2.0).unwrap();
        assert_eq!(z.get(1, 1), 2.0);
        assert_eq!(z.inv_get(2, 2), 0.5);
        assert!((z.logdet() - 2.079_441_541_679_836).abs() < 1e-14);
    }

    #[test]
    fn identity_rejects_bad_arguments() {
        assert!(matches!(SpdMatrix::identity(1, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(SpdMatrix::identity(0, 1.0), Err(Error::InvalidArgument(_))));
        assert!(SpdMatrix::identity(2, -1.0).is_err());
    }

    #[test]
    fn rank1_diagonal_case() {
        let z = SpdMatrix::identity(2, 1.0).unwrap();
        let z2 = z.rank1_update(&[1.0, 0.0], 1.0).unwrap();
        assert_eq!(z2.entries(), &[2.0, 0.0, 0.0, 1.0]);
        assert_eq!(z2.inverse_entries(), &[0.5, 0.0, 0.0, 1.0]);
        assert!((z2.logdet() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn rank1_zero_weight_is_noop() {
        let z = SpdMatrix::identity(3, 1.5).unwrap();
        let z2 = z.rank1_update(&[0.3, -0.2, 0.9], 0.0).unwrap();
        assert_eq!(z, z2);
    }

    #[test]
    fn rank1_dimension_mismatch() {
        let z = SpdMatrix::identity(2, 1.0).unwrap();
        assert!(matches!(z.rank1_update(&[1.0], 1.0), Err(Error::InvalidArgument(_))));
        assert!(weighted_norm_sq(&[1.0, 2.0, 3.0], &z).is_err());
    }

    #[test]
    fn weighted_norm_examples() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(weighted_norm_sq(&[1.0, 0.0], &a).unwrap(), 2.0);
        assert_eq!(weighted_norm_sq(&[0.0, 0.0], &a).unwrap(), 0.0);
    }

    #[test]
    fn weighted_norm_matches_triple_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = random_spd(4, &mut rng);
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut naive = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    naive += x[i] * a.get(i, j) * x[j];
                }
            }
            assert!((weighted_norm_sq(&x, &a).unwrap() - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn from_rows_rejects_asymmetric_and_indefinite() {
        assert!(SpdMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).is_err());
        assert!(SpdMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
    }

    #[test]
    fn eig_diagonal_and_isotropic() {
        let a = SpdMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e = a.eig_sym().unwrap();
        assert_eq!(e.values, vec![1.0, 2.0]);
        assert_eq!(e.vectors, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);

        let iso = SpdMatrix::identity(4, 3.0).unwrap();
        let e = iso.eig_sym().unwrap();
        assert!(e.values.iter().all(|&l| l == 3.0));
    }

    #[test]
    fn eig_reconstructs_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_spd(6, &mut rng);
            let e = a.eig_sym().unwrap();
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            for i in 0..6 {
                for j in 0..6 {
                    let vtv = dot(&e.vectors[i], &e.vectors[j]);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((vtv - expect).abs() <= 1e-10);
                    let rec: f64 = (0..6)
                        .map(|k| e.vectors[k][i] * e.values[k] * e.vectors[k][j])
                        .sum();
                    assert!((rec - a.get(i, j)).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn inv_sqrt_column_squares_to_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_spd(3, &mut rng);
        let e = a.eig_sym().unwrap();
        let cols: Vec<Vec<f64>> = (0..3).map(|i| e.inv_sqrt_column(i)).collect();
        for i in 0..3 {
            for j in 0..3 {
                // A^{-1/2} is symmetric so (A^{-1/2})² = Σ_k col_k[i] col_k[j]
                let s: f64 = (0..3).map(|k| cols[k][i] * cols[k][j]).sum();
                assert!((s - a.inv_get(i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn refactor_period_keeps_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut z = SpdMatrix::identity(3, 1.0).unwrap();
        let mut expected_logdet = 0.0;
        for _ in 0..(REFACTOR_PERIOD + 10) {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q = z.inv_quad(&x);
            expected_logdet += (0.1 * q).ln_1p();
            z.rank1_update_in_place(&x, 0.1).unwrap();
        }
        assert!((z.logdet() - expected_logdet).abs() < 1e-9);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(z.get(i, j), z.get(j, i));
            }
        }
    }

    #[test]
    fn serde_roundtrip_rebuilds_inverse() {
        let z = SpdMatrix::identity(2, 1.0)
            .unwrap()
            .rank1_update(&[0.6, 0.8], 2.0)
            .unwrap();
        let s = serde_json::to_string(&z).unwrap();
        let back: SpdMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back.entries(), z.entries());
        assert!((back.logdet() - z.logdet()).abs() < 1e-12);
    }
}
