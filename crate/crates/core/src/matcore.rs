//! Symmetric-matrix kernel.
//!
//! Every covariance, multiplier and matrix parameter in the crate is a
//! [`SymMatrix`]. The type symmetrizes on construction, so downstream code may
//! rely on `m[(i, j)] == m[(j, i)]` bit for bit.
//!
//! Eigen- and Cholesky factorizations come from `nalgebra`; everything on top
//! (square roots, log-determinants, Loewner tests, simultaneous
//! diagonalization, projection onto the box `{0 ⪯ X ⪯ S}`) lives here.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative asymmetry above which a matrix read from JSON is rejected.
pub const JSON_ASYMMETRY_TOL: f64 = 1e-8;

/// Sweep cap for the alternating projection in [`project_box`].
pub const PROJECT_BOX_MAX_SWEEPS: usize = 500;

/// Real symmetric `n × n` matrix.
#[derive(Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymMatrix{:?}", self.rows())
    }
}

impl SymMatrix {
    /// Builds from row-major entries, averaging with the transpose.
    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Malformed("dimension must be at least 1".into()));
        }
        if entries.len() != n * n {
            return Err(Error::Malformed(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(Self::from_matrix(DMatrix::from_row_slice(n, n, entries)))
    }

    /// Symmetrizes an arbitrary square matrix: `(m + mᵀ) / 2`.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        assert!(m.is_square() && m.nrows() > 0, "SymMatrix needs a non-empty square matrix");
        let n = m.nrows();
        let mut out = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = avg;
                out[(j, i)] = avg;
            }
        }
        SymMatrix(out)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn diag(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(d)))
    }

    pub fn scalar(x: f64) -> Self {
        Self::diag(&[x])
    }

    /// `Σ λᵢ vᵢ vᵢᵀ` for eigenpairs given as columns of `vectors`.
    pub fn from_eigen(values: &[f64], vectors: &DMatrix<f64>) -> Self {
        let mut scaled = vectors.clone();
        for (j, &l) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        Self::from_matrix(&scaled * vectors.transpose())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    pub fn row_major(&self) -> Vec<f64> {
        self.rows().into_iter().flatten().collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().copied().collect()
    }

    /// Eigenvalues in ascending order with matching eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.0.clone());
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    /// Applies `f` to every eigenvalue.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> Self {
        let (vals, vecs) = self.eigen();
        let mapped: Vec<f64> = vals.into_iter().map(f).collect();
        Self::from_eigen(&mapped, &vecs)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .fold(0.0_f64, |acc, l| acc.max(l.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    /// Determinant as the product of eigenvalues.
    pub fn det(&self) -> f64 {
        self.eigenvalues().into_iter().product()
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &other.0)
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix(&self.0 * c)
    }

    pub fn add_identity(&self, c: f64) -> SymMatrix {
        let mut m = self.0.clone();
        for i in 0..self.dim() {
            m[(i, i)] += c;
        }
        SymMatrix(m)
    }

    /// Frobenius inner product `tr(self · other)`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    /// Plain (generally non-symmetric) matrix product.
    pub fn mul(&self, other: &SymMatrix) -> DMatrix<f64> {
        &self.0 * &other.0
    }

    /// Congruence `Vᵀ · self · V`.
    pub fn congruence(&self, v: &DMatrix<f64>) -> SymMatrix {
        Self::from_matrix(v.transpose() * &self.0 * v)
    }

    /// `D · self · D` for symmetric `D`.
    pub fn sandwich(&self, d: &SymMatrix) -> SymMatrix {
        Self::from_matrix(&d.0 * &self.0 * &d.0)
    }

    /// Inverse of a nonsingular symmetric matrix.
    pub fn inverse(&self) -> Result<SymMatrix> {
        if let Some(chol) = self.0.clone().cholesky() {
            return Ok(Self::from_matrix(chol.inverse()));
        }
        let (vals, vecs) = self.eigen();
        let scale = vals.iter().fold(0.0_f64, |a, l| a.max(l.abs())).max(f64::MIN_POSITIVE);
        if vals.iter().any(|l| l.abs() <= 1e-14 * scale) {
            return Err(Error::NotPd { min_eig: vals[0] });
        }
        let inv: Vec<f64> = vals.iter().map(|l| 1.0 / l).collect();
        Ok(Self::from_eigen(&inv, &vecs))
    }

    /// Inverse that additionally insists on positive definiteness.
    pub fn inverse_pd(&self) -> Result<SymMatrix> {
        match self.0.clone().cholesky() {
            Some(chol) => Ok(Self::from_matrix(chol.inverse())),
            None => Err(Error::NotPd {
                min_eig: self.min_eigenvalue(),
            }),
        }
    }

    /// Lower Cholesky factor; fails with `NotPd`.
    pub fn cholesky_lower(&self) -> Result<DMatrix<f64>> {
        self.0
            .clone()
            .cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::NotPd {
                min_eig: self.min_eigenvalue(),
            })
    }

    fn check_same_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

/// Eigenvalue floor below which a matrix stops counting as PSD:
/// `−1e-9 · max(1, ‖m‖₂)`.
pub fn psd_tolerance(m: &SymMatrix) -> f64 {
    1e-9 * m.spectral_norm().max(1.0)
}

pub fn is_psd(m: &SymMatrix) -> bool {
    m.min_eigenvalue() >= -psd_tolerance(m)
}

pub fn is_pd(m: &SymMatrix) -> bool {
    m.0.clone().cholesky().is_some()
}

/// Principal square root of a PSD matrix.
pub fn sym_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let (vals, vecs) = m.eigen();
    let tol = 1e-9 * vals.iter().fold(0.0_f64, |a, l| a.max(l.abs())).max(1.0);
    if vals[0] < -tol {
        return Err(Error::NotPsd { min_eig: vals[0] });
    }
    let roots: Vec<f64> = vals.iter().map(|l| l.max(0.0).sqrt()).collect();
    Ok(SymMatrix::from_eigen(&roots, &vecs))
}

/// Inverse principal square root of a PD matrix.
pub fn sym_inv_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let (vals, vecs) = m.eigen();
    if vals[0] <= 0.0 || !is_pd(m) {
        return Err(Error::NotPd { min_eig: vals[0] });
    }
    let roots: Vec<f64> = vals.iter().map(|l| 1.0 / l.sqrt()).collect();
    Ok(SymMatrix::from_eigen(&roots, &vecs))
}

/// Natural-log determinant of a PD matrix (Cholesky).
pub fn logdet(m: &SymMatrix) -> Result<f64> {
    let l = m.cholesky_lower()?;
    let s: f64 = l.diagonal().iter().map(|d| d.ln()).sum();
    let out = 2.0 * s;
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::NotPd {
            min_eig: m.min_eigenvalue(),
        })
    }
}

/// `a ⪯ b` in the Loewner order: smallest eigenvalue of `b − a` is at least `−tol`.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    a.check_same_dim(b)?;
    Ok(b.sub(a).min_eigenvalue() >= -tol)
}

/// Output of [`simultaneous_diag`]: `Vᵀ a V = diag(lambda1)`, `Vᵀ b V = diag(lambda2)`.
#[derive(Debug, Clone)]
pub struct GenEigResult {
    pub v: DMatrix<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
}

impl GenEigResult {
    /// Max-entry residuals `(‖Vᵀ a V − Λ₁‖_max, ‖Vᵀ b V − Λ₂‖_max)`.
    pub fn residuals(&self, a: &SymMatrix, b: &SymMatrix) -> (f64, f64) {
        let r1 = a.congruence(&self.v).sub(&SymMatrix::diag(&self.lambda1)).max_abs();
        let r2 = b.congruence(&self.v).sub(&SymMatrix::diag(&self.lambda2)).max_abs();
        (r1, r2)
    }

    /// Ratios `lambda2[i] / lambda1[i]`: the generalized eigenvalues of `(b, a)`.
    pub fn ratios(&self) -> Vec<f64> {
        self.lambda2
            .iter()
            .zip(&self.lambda1)
            .map(|(l2, l1)| l2 / l1)
            .collect()
    }
}

/// Simultaneous diagonalization of two PD matrices by whitening:
/// `V = a^{-1/2} U` where `U` diagonalizes `a^{-1/2} b a^{-1/2}`.
///
/// Columns are ordered by the coordinate carrying each column's largest
/// entry whenever that is a permutation, so commuting diagonal inputs
/// return a diagonal `V`.
pub fn simultaneous_diag(a: &SymMatrix, b: &SymMatrix) -> Result<GenEigResult> {
    a.check_same_dim(b)?;
    if !is_pd(b) {
        return Err(Error::NotPd {
            min_eig: b.min_eigenvalue(),
        });
    }
    let w = sym_inv_sqrt(a)?;
    let c = b.sandwich(&w);
    let (_, u) = c.eigen();
    let mut v = w.as_matrix() * u;
    let n = a.dim();

    let pivots: Vec<usize> = (0..n).map(|j| v.column(j).iamax()).collect();
    let mut seen = vec![false; n];
    let is_perm = pivots.iter().all(|&p| !std::mem::replace(&mut seen[p], true));
    if is_perm {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&j| pivots[j]);
        v = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    }
    for j in 0..n {
        let p = v.column(j).iamax();
        if v[(p, j)] < 0.0 {
            v.column_mut(j).neg_mut();
        }
    }
    let lambda1 = a.congruence(&v).diagonal();
    let lambda2 = b.congruence(&v).diagonal();
    Ok(GenEigResult { v, lambda1, lambda2 })
}

/// Least-squares scalar `c` with `‖a − c·b‖_F ≤ tol·‖a‖_F`, if one exists.
pub fn proportional(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Option<f64> {
    if a.dim() != b.dim() {
        return None;
    }
    proportional_general(a.as_matrix(), b.as_matrix(), tol)
}

/// [`proportional`] for arbitrary (possibly non-symmetric) square matrices.
pub fn proportional_general(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Option<f64> {
    if a.shape() != b.shape() {
        return None;
    }
    let bb = b.dot(b);
    if bb == 0.0 {
        return None;
    }
    let c = a.dot(b) / bb;
    let resid = (a - b * c).norm();
    (resid <= tol * a.norm()).then_some(c)
}

/// Eigenvalue clipping onto `[lo, hi]`.
pub fn clip_eigenvalues(m: &SymMatrix, lo: f64, hi: f64) -> SymMatrix {
    m.map_eigenvalues(|l| l.clamp(lo, hi))
}

/// Projection onto the PSD cone.
pub fn project_psd(m: &SymMatrix) -> SymMatrix {
    m.map_eigenvalues(|l| l.max(0.0))
}

fn project_below(x: &SymMatrix, s: &SymMatrix) -> SymMatrix {
    s.sub(&project_psd(&s.sub(x)))
}

fn in_box(b: &SymMatrix, s: &SymMatrix, tol: f64) -> bool {
    b.min_eigenvalue() >= -tol && s.sub(b).min_eigenvalue() >= -tol
}

/// Projection onto `{0 ⪯ X ⪯ S}` by Dykstra's alternating projections
/// between the PSD cone and `{X ⪯ S}`. Feasible input is returned unchanged.
pub fn project_box(b: &SymMatrix, s: &SymMatrix) -> Result<SymMatrix> {
    b.check_same_dim(s)?;
    let scale = s.spectral_norm().max(b.spectral_norm()).max(1.0);
    let feas_tol = 1e-9 * scale;
    if in_box(b, s, feas_tol) {
        return Ok(b.clone());
    }
    let n = b.dim();
    let mut x = b.clone();
    let mut p = SymMatrix::zeros(n);
    let mut q = SymMatrix::zeros(n);
    for _ in 0..PROJECT_BOX_MAX_SWEEPS {
        let y = project_psd(&x.add(&p));
        p = x.add(&p).sub(&y);
        let x_next = project_below(&y.add(&q), s);
        q = y.add(&q).sub(&x_next);
        let change = x_next.sub(&x).frobenius();
        x = x_next;
        if change <= 1e-14 * scale && in_box(&x, s, feas_tol) {
            return Ok(x);
        }
    }
    if in_box(&x, s, feas_tol) {
        return Ok(x);
    }
    Err(Error::NoConvergence {
        what: "project_box",
        iterations: PROJECT_BOX_MAX_SWEEPS,
    })
}

/// Wire form `{"n": int, "rows": [[...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for SymMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.n == 0 || j.rows.len() != j.n || j.rows.iter().any(|r| r.len() != j.n) {
            return Err(Error::Malformed(format!(
                "expected {n}×{n} rows for n = {n}",
                n = j.n
            )));
        }
        if j.rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Malformed("non-finite entry".into()));
        }
        let flat: Vec<f64> = j.rows.into_iter().flatten().collect();
        let raw = DMatrix::from_row_slice(j.n, j.n, &flat);
        let norm = raw.norm();
        let asym = if norm > 0.0 {
            (&raw - raw.transpose()).norm() / norm
        } else {
            0.0
        };
        if asym > JSON_ASYMMETRY_TOL {
            return Err(Error::Asymmetric { asymmetry: asym });
        }
        Ok(SymMatrix::from_matrix(raw))
    }
}

impl From<&SymMatrix> for MatrixJson {
    fn from(m: &SymMatrix) -> Self {
        MatrixJson {
            n: m.dim(),
            rows: m.rows(),
        }
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(ser)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(de)?;
        SymMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Random matrices for property sweeps, multistart and oracles.
pub mod random {
    use super::*;

    pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    /// Haar-ish orthogonal matrix from the QR of a Gaussian matrix.
    pub fn orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
        let qr = gaussian_matrix(rng, n).qr();
        let (q, r) = (qr.q(), qr.r());
        let mut q = q;
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        q
    }

    /// `Q diag(eigs) Qᵀ` with random orthogonal `Q`.
    pub fn with_spectrum<R: Rng + ?Sized>(rng: &mut R, eigs: &[f64]) -> SymMatrix {
        let q = orthogonal(rng, eigs.len());
        SymMatrix::from_eigen(eigs, &q)
    }

    /// PD matrix with eigenvalues drawn uniformly from `[lo, hi]`.
    pub fn pd<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> SymMatrix {
        let eigs: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
        with_spectrum(rng, &eigs)
    }

    /// PSD matrix; each eigenvalue is zero with probability `p_zero`.
    pub fn psd<R: Rng + ?Sized>(rng: &mut R, n: usize, hi: f64, p_zero: f64) -> SymMatrix {
        let eigs: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(p_zero) {
                    0.0
                } else {
                    rng.random_range(0.0..=hi)
                }
            })
            .collect();
        with_spectrum(rng, &eigs)
    }

    /// Random `B` with `0 ⪯ B ⪯ S`: `S^{1/2} W S^{1/2}` with `0 ⪯ W ⪯ I`.
    pub fn between_zero_and<R: Rng + ?Sized>(rng: &mut R, s: &SymMatrix) -> SymMatrix {
        let n = s.dim();
        let eigs: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..6) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random_range(0.0..=1.0),
            })
            .collect();
        let w = with_spectrum(rng, &eigs);
        let root = sym_sqrt(s).expect("S must be PSD");
        w.sandwich(&root)
    }

    /// Random matrix parameter with `0 ⪯ A ⪯ I`.
    pub fn unit_box<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SymMatrix {
        let eigs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
        with_spectrum(rng, &eigs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn construction_symmetrizes() {
        let m = SymMatrix::from_row_major(2, &[1.0, 2.0, 4.0, 3.0]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert!(SymMatrix::from_row_major(0, &[]).is_err());
        assert!(SymMatrix::from_row_major(2, &[1.0]).is_err());
    }

    #[test]
    fn sqrt_examples() {
        let i2 = SymMatrix::identity(2);
        assert!(sym_sqrt(&i2).unwrap().sub(&i2).max_abs() < 1e-15);
        let r = sym_sqrt(&SymMatrix::diag(&[4.0, 9.0])).unwrap();
        assert!(r.sub(&SymMatrix::diag(&[2.0, 3.0])).max_abs() < 1e-14);
        assert!(matches!(
            sym_sqrt(&SymMatrix::diag(&[1.0, -0.1])),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn sqrt_rejects_slightly_negative_only_beyond_tolerance() {
        assert!(sym_sqrt(&SymMatrix::diag(&[1.0, -1e-12])).is_ok());
        assert!(sym_sqrt(&SymMatrix::diag(&[1.0, -1e-6])).is_err());
    }

    #[test]
    fn logdet_examples() {
        assert!(close(logdet(&SymMatrix::identity(3)).unwrap(), 0.0, 1e-15));
        assert!(close(logdet(&SymMatrix::diag(&[2.0, 0.5])).unwrap(), 0.0, 1e-15));
        assert!(close(
            logdet(&SymMatrix::diag(&[1.0, 4.0])).unwrap(),
            1.386_294_361_119_890_6,
            1e-12
        ));
        assert!(matches!(
            logdet(&SymMatrix::diag(&[1.0, 0.0])),
            Err(Error::NotPd { .. })
        ));
    }

    #[test]
    fn loewner_examples() {
        let i = SymMatrix::identity(2);
        let two = i.scale(2.0);
        assert!(loewner_leq(&i, &two, 1e-9).unwrap());
        assert!(!loewner_leq(&two, &i, 1e-9).unwrap());
        assert!(!loewner_leq(
            &SymMatrix::diag(&[1.0, 3.0]),
            &SymMatrix::diag(&[2.0, 2.0]),
            1e-9
        )
        .unwrap());
        assert!(matches!(
            loewner_leq(&i, &SymMatrix::identity(3), 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn simultaneous_diag_identity_pair() {
        let i = SymMatrix::identity(3);
        let g = simultaneous_diag(&i, &i).unwrap();
        assert!((&g.v - DMatrix::<f64>::identity(3, 3)).amax() < 1e-14);
        assert!(g.lambda1.iter().chain(&g.lambda2).all(|l| close(*l, 1.0, 1e-14)));
    }

    #[test]
    fn simultaneous_diag_commuting_pair() {
        let a = SymMatrix::diag(&[1.0, 2.0]);
        let b = SymMatrix::diag(&[3.0, 4.0]);
        let g = simultaneous_diag(&a, &b).unwrap();
        assert!(g.v[(0, 1)].abs() < 1e-14 && g.v[(1, 0)].abs() < 1e-14);
        let r = g.ratios();
        assert!(close(r[0], 3.0, 1e-12) && close(r[1], 2.0, 1e-12));
        let (r1, r2) = g.residuals(&a, &b);
        assert!(r1 < 1e-14 && r2 < 1e-14);
    }

    #[test]
    fn simultaneous_diag_rejects_indefinite() {
        let a = SymMatrix::diag(&[1.0, -1.0]);
        assert!(matches!(
            simultaneous_diag(&a, &SymMatrix::identity(2)),
            Err(Error::NotPd { .. })
        ));
        assert!(simultaneous_diag(&SymMatrix::identity(2), &a).is_err());
    }

    #[test]
    fn proportional_examples() {
        let i = SymMatrix::identity(2);
        assert_eq!(proportional(&i.scale(2.0), &i, 1e-12), Some(2.0));
        assert_eq!(
            proportional(&SymMatrix::diag(&[1.9, 1.1]), &SymMatrix::diag(&[0.1, 0.9]), 1e-9),
            None
        );
        assert_eq!(proportional(&SymMatrix::zeros(2), &i, 1e-12), Some(0.0));
        assert_eq!(proportional(&i, &SymMatrix::zeros(2), 1e-12), None);
    }

    #[test]
    fn project_box_examples() {
        let s = SymMatrix::from_row_major(2, &[2.0, 0.5, 0.5, 1.0]).unwrap();
        let half = s.scale(0.5);
        assert_eq!(project_box(&half, &s).unwrap(), half);

        let i = SymMatrix::identity(2);
        let p = project_box(&i.scale(-1.0), &i).unwrap();
        assert!(p.max_abs() < 1e-12);

        let p = project_box(&i.scale(3.0), &i.scale(2.0)).unwrap();
        assert!(p.sub(&i.scale(2.0)).max_abs() < 1e-12);
        assert!(loewner_leq(&SymMatrix::zeros(2), &p, 1e-9).unwrap());
        assert!(loewner_leq(&p, &i.scale(2.0), 1e-9).unwrap());
    }

    #[test]
    fn project_box_general_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(1..=4);
            let s = random::pd(&mut rng, n, 0.1, 3.0);
            let b = SymMatrix::from_matrix(random::gaussian_matrix(&mut rng, n).scale(2.0));
            let p = project_box(&b, &s).unwrap();
            assert!(p.min_eigenvalue() >= -1e-9);
            assert!(s.sub(&p).min_eigenvalue() >= -1e-9);
            // Projection is idempotent.
            let pp = project_box(&p, &s).unwrap();
            assert!(pp.sub(&p).max_abs() < 1e-8);
        }
    }

    #[test]
    fn json_roundtrip_and_asymmetry_guard() {
        let m = SymMatrix::from_row_major(2, &[1.0, 0.25, 0.25, 2.0]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"n":2,"rows":[[1.0,0.25],[0.25,2.0]]}"#);
        let back: SymMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);

        let tiny: SymMatrix =
            serde_json::from_str(r#"{"n":2,"rows":[[1.0,0.25],[0.2500000000001,2.0]]}"#).unwrap();
        assert_eq!(tiny.get(0, 1), tiny.get(1, 0));
        let bad = serde_json::from_str::<SymMatrix>(r#"{"n":2,"rows":[[1.0,0.5],[0.0,2.0]]}"#);
        assert!(bad.is_err());
        let ragged = serde_json::from_str::<SymMatrix>(r#"{"n":2,"rows":[[1.0,0.5]]}"#);
        assert!(ragged.is_err());
    }

    #[test]
    fn scalar_matrices_work_everywhere() {
        let a = SymMatrix::scalar(4.0);
        assert_eq!(sym_sqrt(&a).unwrap().get(0, 0), 2.0);
        assert!(close(logdet(&a).unwrap(), 4f64.ln(), 1e-15));
        let g = simultaneous_diag(&a, &SymMatrix::scalar(2.0)).unwrap();
        assert!(close(g.ratios()[0], 0.5, 1e-15));
        let p = project_box(&SymMatrix::scalar(5.0), &SymMatrix::scalar(1.0)).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
    }
}
