//! Extremal entropy inequality machinery.
//!
//! An [`ExtremalInstance`] fixes `S`, `N₀`, ordered noises `N₁ ⪯ … ⪯ N_K` and
//! weights `μ`. A [`KktCertificate`] is a candidate `B*` with multipliers
//! `M₁, M₂ ⪰ 0` satisfying
//!
//! ```text
//! Σ μₖ (B* + Nₖ)⁻¹ + M₁ = (B* + N₀)⁻¹ + M₂,   B* M₁ = 0,   (S − B*) M₂ = 0.
//! ```
//!
//! Given such a certificate, for every `(X, U)` with `E[XXᵀ] ⪯ S`,
//! `Σ μₖ h(X+Zₖ|U) − h(X+Z₀|U) ≤ Σ (μₖ/2) log|B*+Nₖ| − ½ log|B*+N₀|`.
//!
//! The module also carries the enhancement step (absorbing the multipliers
//! into smaller noise covariances) and the two-noise and K-noise
//! constructions the inequality is built from.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussinfo::GaussianMixture;
use crate::matcore::{
    is_pd, is_psd, logdet, loewner_leq, project_psd, simultaneous_diag, SymMatrix,
};

/// Loewner tolerance for the noise ordering.
pub const ORDER_TOL: f64 = 1e-9;

/// Relative eigenvalue threshold for the null spaces of `B*` and `S − B*`.
pub const NULLSPACE_TOL: f64 = 1e-8;

/// Default acceptance threshold for certificate residuals (times `scale`).
pub const CERT_TOL: f64 = 1e-6;

/// Relative tolerance for the enhancement properties.
pub const ENHANCE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct ExtremalInstance {
    s: SymMatrix,
    n0: SymMatrix,
    nk: Vec<SymMatrix>,
    mu: Vec<f64>,
}

impl ExtremalInstance {
    pub fn new(s: SymMatrix, n0: SymMatrix, nk: Vec<SymMatrix>, mu: Vec<f64>) -> Result<Self> {
        let n = s.dim();
        if nk.is_empty() || nk.len() != mu.len() {
            return Err(Error::PreconditionViolated(format!(
                "{} noises but {} weights",
                nk.len(),
                mu.len()
            )));
        }
        for m in std::iter::once(&n0).chain(&nk) {
            if m.dim() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: m.dim(),
                });
            }
            if !is_pd(m) {
                return Err(Error::NotPd {
                    min_eig: m.min_eigenvalue(),
                });
            }
        }
        if !is_psd(&s) {
            return Err(Error::NotPsd {
                min_eig: s.min_eigenvalue(),
            });
        }
        if mu.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::PreconditionViolated("weights must be nonnegative".into()));
        }
        let total: f64 = mu.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::PreconditionViolated(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        for (k, w) in nk.windows(2).enumerate() {
            let tol = ORDER_TOL * w[1].spectral_norm().max(1.0);
            if !loewner_leq(&w[0], &w[1], tol)? {
                return Err(Error::PreconditionViolated(format!(
                    "noise ordering N{} ⪯ N{} fails",
                    k + 1,
                    k + 2
                )));
            }
        }
        Ok(Self { s, n0, nk, mu })
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }
    pub fn s(&self) -> &SymMatrix {
        &self.s
    }
    pub fn n0(&self) -> &SymMatrix {
        &self.n0
    }
    pub fn nk(&self) -> &[SymMatrix] {
        &self.nk
    }
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `G(B) = (B + N₀)⁻¹ − Σ μₖ (B + Nₖ)⁻¹`; stationarity reads `M₁ − M₂ = G`.
    pub fn stationarity_gap(&self, b: &SymMatrix) -> Result<SymMatrix> {
        let mut g = b.add(&self.n0).inverse_pd()?;
        for (m, nk) in self.mu.iter().zip(&self.nk) {
            g = g.sub(&b.add(nk).inverse_pd()?.scale(*m));
        }
        Ok(g)
    }

    /// `Σ (μₖ/2) log|B + Nₖ| − ½ log|B + N₀|`.
    pub fn gaussian_value(&self, b: &SymMatrix) -> Result<f64> {
        let mut v = -0.5 * logdet(&b.add(&self.n0))?;
        for (m, nk) in self.mu.iter().zip(&self.nk) {
            v += 0.5 * m * logdet(&b.add(nk))?;
        }
        Ok(v)
    }

    /// Residual scale `max(1, ‖(B + N₀)⁻¹‖_F)`.
    pub fn scale_at(&self, b: &SymMatrix) -> Result<f64> {
        Ok(b.add(&self.n0).inverse_pd()?.frobenius().max(1.0))
    }
}

/// Stationarity and complementary-slackness residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub slack1: f64,
    pub slack2: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.slack1).max(self.slack2)
    }
}

/// `B*` with multipliers and residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct KktCertificate {
    pub bstar: SymMatrix,
    pub m1: SymMatrix,
    pub m2: SymMatrix,
    pub mu: Vec<f64>,
    pub residuals: KktResiduals,
    /// Residual scale; the certificate is valid at `tol` iff every residual is
    /// at most `tol · scale`.
    pub scale: f64,
}

impl KktCertificate {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.residuals.max() <= tol * self.scale
    }

    pub fn has_multipliers(&self, tol: f64) -> bool {
        self.m1.max_abs() > tol || self.m2.max_abs() > tol
    }
}

#[derive(Serialize, Deserialize)]
struct CertificateJson {
    bstar: SymMatrix,
    m1: SymMatrix,
    m2: SymMatrix,
    mu: Vec<f64>,
    residuals: ResidualsJson,
}

#[derive(Serialize, Deserialize)]
struct ResidualsJson {
    stationarity: f64,
    slack1: f64,
    slack2: f64,
    #[serde(default = "one")]
    scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Serialize for KktCertificate {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        CertificateJson {
            bstar: self.bstar.clone(),
            m1: self.m1.clone(),
            m2: self.m2.clone(),
            mu: self.mu.clone(),
            residuals: ResidualsJson {
                stationarity: self.residuals.stationarity,
                slack1: self.residuals.slack1,
                slack2: self.residuals.slack2,
                scale: self.scale,
            },
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for KktCertificate {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let j = CertificateJson::deserialize(de)?;
        Ok(KktCertificate {
            bstar: j.bstar,
            m1: j.m1,
            m2: j.m2,
            mu: j.mu,
            residuals: KktResiduals {
                stationarity: j.residuals.stationarity,
                slack1: j.residuals.slack1,
                slack2: j.residuals.slack2,
            },
            scale: j.residuals.scale,
        })
    }
}

fn check_dims(inst: &ExtremalInstance, ms: &[&SymMatrix]) -> Result<()> {
    for m in ms {
        if m.dim() != inst.dim() {
            return Err(Error::DimensionMismatch {
                left: inst.dim(),
                right: m.dim(),
            });
        }
    }
    Ok(())
}

/// `(‖Σμₖ(B*+Nₖ)⁻¹ + M₁ − (B*+N₀)⁻¹ − M₂‖_F, ‖B*M₁‖_F, ‖(S−B*)M₂‖_F)`.
pub fn kkt_residual(
    inst: &ExtremalInstance,
    bstar: &SymMatrix,
    m1: &SymMatrix,
    m2: &SymMatrix,
) -> Result<KktResiduals> {
    check_dims(inst, &[bstar, m1, m2])?;
    let g = inst.stationarity_gap(bstar)?;
    let stationarity = m1.sub(m2).sub(&g).frobenius();
    let slack1 = bstar.mul(m1).norm();
    let slack2 = inst.s.sub(bstar).mul(m2).norm();
    Ok(KktResiduals {
        stationarity,
        slack1,
        slack2,
    })
}

/// Re-evaluates a certificate's residuals against an instance.
pub fn recheck(inst: &ExtremalInstance, cert: &KktCertificate) -> Result<KktCertificate> {
    let residuals = kkt_residual(inst, &cert.bstar, &cert.m1, &cert.m2)?;
    Ok(KktCertificate {
        residuals,
        scale: inst.scale_at(&cert.bstar)?,
        mu: inst.mu.clone(),
        ..cert.clone()
    })
}

/// Orthonormal basis (columns) of the eigenvectors of `m` with eigenvalue below `thr`.
fn near_null_basis(m: &SymMatrix, thr: f64) -> DMatrix<f64> {
    let (vals, vecs) = m.eigen();
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] < thr).collect();
    DMatrix::from_fn(m.dim(), cols.len(), |r, c| vecs[(r, cols[c])])
}

/// Minimum-norm least squares through the eigen-decomposition of the Gram
/// matrix. Eigenvalues below `1e-24·λ_max` are treated as zero.
fn min_norm_solve(design: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let gram = SymMatrix::from_matrix(design.transpose() * design);
    let (vals, vecs) = gram.eigen();
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let proj = vecs.transpose() * (design.transpose() * rhs);
    let scaled = DVector::from_fn(vals.len(), |i, _| {
        if vals[i] > 1e-24 * top && vals[i] > 0.0 {
            proj[i] / vals[i]
        } else {
            0.0
        }
    });
    vecs * scaled
}

fn sym_basis(k: usize) -> Vec<(usize, usize)> {
    (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect()
}

fn embed(u: &DMatrix<f64>, i: usize, j: usize) -> DMatrix<f64> {
    let k = u.ncols();
    let mut e = DMatrix::<f64>::zeros(k, k);
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    u * e * u.transpose()
}

/// Recovers `M₁ ⪰ 0` supported on `null(B*)` and `M₂ ⪰ 0` supported on
/// `null(S − B*)` with `M₁ − M₂ ≈ G(B*)`.
///
/// Writes `M₁ = U₀ X U₀ᵀ`, `M₂ = U_S Y U_Sᵀ` over orthonormal bases of the two
/// near-null spaces, fits `(X, Y)` to `G` by minimum-norm least squares and
/// projects both onto the PSD cone. When the two spaces are orthogonal this
/// is `M₁ = [P₀ G P₀]₊`, `M₂ = [−P_S G P_S]₊`.
pub fn recover_multipliers(inst: &ExtremalInstance, bstar: &SymMatrix) -> Result<KktCertificate> {
    check_dims(inst, &[bstar])?;
    let n = inst.dim();
    let g = inst.stationarity_gap(bstar)?;
    let thr = NULLSPACE_TOL * inst.s.spectral_norm().max(bstar.spectral_norm()).max(1e-300);
    let u0 = near_null_basis(bstar, thr);
    let us = near_null_basis(&inst.s.sub(bstar), thr);

    let b0 = sym_basis(u0.ncols());
    let bs = sym_basis(us.ncols());
    let (m1, m2) = if b0.is_empty() && bs.is_empty() {
        (SymMatrix::zeros(n), SymMatrix::zeros(n))
    } else {
        let cols: Vec<DMatrix<f64>> = b0
            .iter()
            .map(|&(i, j)| embed(&u0, i, j))
            .chain(bs.iter().map(|&(i, j)| -embed(&us, i, j)))
            .collect();
        let design = DMatrix::from_fn(n * n, cols.len(), |r, c| cols[c][(r % n, r / n)]);
        let rhs = DVector::from_iterator(n * n, g.as_matrix().iter().copied());
        let coef = min_norm_solve(&design, &rhs);
        let mut m1 = DMatrix::<f64>::zeros(n, n);
        let mut m2 = DMatrix::<f64>::zeros(n, n);
        for (idx, c) in coef.iter().enumerate() {
            if idx < b0.len() {
                m1 += &cols[idx] * *c;
            } else {
                m2 -= &cols[idx] * *c;
            }
        }
        (
            project_psd(&SymMatrix::from_matrix(m1)),
            project_psd(&SymMatrix::from_matrix(m2)),
        )
    };
    let residuals = kkt_residual(inst, bstar, &m1, &m2)?;
    Ok(KktCertificate {
        bstar: bstar.clone(),
        m1,
        m2,
        mu: inst.mu.clone(),
        residuals,
        scale: inst.scale_at(bstar)?,
    })
}

/// Measured enhancement properties. Log-determinant ratios are compared in
/// log space, so a difference `δ` is a relative error of about `δ`.
#[derive(Debug, Clone, Serialize)]
pub struct EnhancementReport {
    /// `‖Ñ₁(closed form) − Ñ₁(defining equation)‖_F / ‖N₁‖_F`
    pub enh1_form_gap: f64,
    /// `λ_min(Ñ₁)`
    pub enh1_min_eig: f64,
    /// `λ_min(N₁ − Ñ₁)`
    pub enh1_order: f64,
    /// `λ_min(Ñ₀ − Ñ₁)`
    pub enh2_lower: f64,
    /// `λ_min(N₀ − Ñ₀)`
    pub enh2_upper: f64,
    /// `log(|B*+Ñ₁|/|Ñ₁|) − log(|B*+N₁|/|N₁|)`
    pub enh3_log_gap: f64,
    /// `log(|S+Ñ₀|/|B*+Ñ₀|) − log(|S+N₀|/|B*+N₀|)`
    pub enh4_log_gap: f64,
    /// Same as `enh4_log_gap` with the second noise `N₂` on the right
    /// (literal reading); reported, never asserted. `None` when `K = 1`.
    pub enh4_literal_log_gap: Option<f64>,
    /// `‖μ₁(B*+Ñ₁)⁻¹ + Σ_{k≥2} μₖ(B*+Nₖ)⁻¹ − (B*+Ñ₀)⁻¹‖_F`
    pub kkt4_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Enhancement {
    pub n1_tilde: SymMatrix,
    pub n0_tilde: SymMatrix,
    pub report: EnhancementReport,
}

/// Absorbs the multipliers into enhanced noises
/// `Ñ₁ = (N₁⁻¹ + μ₁⁻¹M₁)⁻¹` and `(B*+Ñ₀)⁻¹ = (B*+N₀)⁻¹ + M₂`, then checks the
/// four enhancement properties at [`ENHANCE_TOL`] and the multiplier-free
/// stationarity at `kkt4_tol`.
pub fn enhance(
    inst: &ExtremalInstance,
    cert: &KktCertificate,
    kkt4_tol: f64,
) -> Result<Enhancement> {
    let enh = enhance_unchecked(inst, cert)?;
    let r = &enh.report;
    let n1 = &inst.nk[0];
    let tol_n = |m: &SymMatrix| ENHANCE_TOL * m.spectral_norm().max(1.0);
    let fail = |what: String| Err(Error::EnhancementPropertyViolation(what));
    if !(r.enh1_min_eig > 0.0) || r.enh1_order < -tol_n(n1) || r.enh1_form_gap > ENHANCE_TOL {
        return fail(format!(
            "enh1: 0 ≺ Ñ1 = (N1⁻¹ + M1/μ1)⁻¹ ⪯ N1 (min eig {:e}, order {:e}, form gap {:e})",
            r.enh1_min_eig, r.enh1_order, r.enh1_form_gap
        ));
    }
    if r.enh2_lower < -tol_n(&inst.n0) || r.enh2_upper < -tol_n(&inst.n0) {
        return fail(format!(
            "enh2: Ñ1 ⪯ Ñ0 ⪯ N0 (margins {:e}, {:e})",
            r.enh2_lower, r.enh2_upper
        ));
    }
    if r.enh3_log_gap.abs() > ENHANCE_TOL {
        return fail(format!("enh3: log-ratio gap {:e}", r.enh3_log_gap));
    }
    if r.enh4_log_gap.abs() > ENHANCE_TOL {
        return fail(format!("enh4: log-ratio gap {:e}", r.enh4_log_gap));
    }
    if r.kkt4_residual > kkt4_tol {
        return fail(format!("kkt4: residual {:e}", r.kkt4_residual));
    }
    Ok(enh)
}

/// [`enhance`] without the property assertions.
pub fn enhance_unchecked(inst: &ExtremalInstance, cert: &KktCertificate) -> Result<Enhancement> {
    check_dims(inst, &[&cert.bstar, &cert.m1, &cert.m2])?;
    let mu1 = inst.mu[0];
    if !(mu1 > 0.0) {
        return Err(Error::PreconditionViolated("enhancement needs μ1 > 0".into()));
    }
    let b = &cert.bstar;
    let n1 = &inst.nk[0];
    let n0 = &inst.n0;

    let n1_tilde = n1
        .inverse_pd()?
        .add(&cert.m1.scale(1.0 / mu1))
        .inverse_pd()?;
    let n1_tilde_def = b
        .add(n1)
        .inverse_pd()?
        .add(&cert.m1.scale(1.0 / mu1))
        .inverse_pd()?
        .sub(b);
    let n0_tilde = b.add(n0).inverse_pd()?.add(&cert.m2).inverse_pd()?.sub(b);

    let log_ratio = |num: &SymMatrix, den: &SymMatrix| -> Result<f64> {
        Ok(logdet(num)? - logdet(den)?)
    };
    let enh3 = log_ratio(&b.add(&n1_tilde), &n1_tilde)? - log_ratio(&b.add(n1), n1)?;
    let lhs4 = log_ratio(&inst.s.add(&n0_tilde), &b.add(&n0_tilde))?;
    let enh4 = lhs4 - log_ratio(&inst.s.add(n0), &b.add(n0))?;
    let enh4_literal = match inst.nk.get(1) {
        Some(n2) => Some(lhs4 - log_ratio(&inst.s.add(n2), &b.add(n2))?),
        None => None,
    };

    let mut kkt4 = b.add(&n1_tilde).inverse_pd()?.scale(mu1);
    for (m, nk) in inst.mu.iter().zip(&inst.nk).skip(1) {
        kkt4 = kkt4.add(&b.add(nk).inverse_pd()?.scale(*m));
    }
    let kkt4 = kkt4.sub(&b.add(&n0_tilde).inverse_pd()?).frobenius();

    let report = EnhancementReport {
        enh1_form_gap: n1_tilde.sub(&n1_tilde_def).frobenius() / n1.frobenius(),
        enh1_min_eig: n1_tilde.min_eigenvalue(),
        enh1_order: n1.sub(&n1_tilde).min_eigenvalue(),
        enh2_lower: n0_tilde.sub(&n1_tilde).min_eigenvalue(),
        enh2_upper: n0.sub(&n0_tilde).min_eigenvalue(),
        enh3_log_gap: enh3,
        enh4_log_gap: enh4,
        enh4_literal_log_gap: enh4_literal,
        kkt4_residual: kkt4,
    };
    Ok(Enhancement {
        n1_tilde,
        n0_tilde,
        report,
    })
}

/// Both sides of the extremal inequality for a finite `U` with Gaussian
/// conditionals `X | U=u ~ N(mᵤ, Σᵤ)` (the mixture's components).
///
/// `lhs = Σᵤ p(u) [Σ μₖ h(X+Zₖ|U=u) − h(X+Z₀|U=u)]`,
/// `rhs = Σ (μₖ/2) log|B*+Nₖ| − ½ log|B*+N₀|`. The `2πe` terms cancel since
/// `Σ μₖ = 1`.
pub fn extremal_sides_conditional(
    inst: &ExtremalInstance,
    bstar: &SymMatrix,
    ux: &GaussianMixture,
) -> Result<(f64, f64)> {
    check_dims(inst, &[bstar])?;
    if ux.dim() != inst.dim() {
        return Err(Error::DimensionMismatch {
            left: inst.dim(),
            right: ux.dim(),
        });
    }
    let moment = ux.second_moment();
    let tol = 1e-9 * inst.s.spectral_norm().max(1.0);
    if !loewner_leq(&moment, &inst.s, tol)? {
        return Err(Error::PreconditionViolated("E[XXᵀ] ⪯ S fails".into()));
    }
    let mut lhs = 0.0;
    for (p, cov) in ux.weights().iter().zip(ux.covs()) {
        if *p > 0.0 {
            lhs += p * inst.gaussian_value(cov)?;
        }
    }
    Ok((lhs, inst.gaussian_value(bstar)?))
}

/// [`extremal_sides_conditional`] with trivial `U` and `X ~ N(0, bx)`.
pub fn extremal_sides_gaussian(
    inst: &ExtremalInstance,
    bstar: &SymMatrix,
    bx: &SymMatrix,
) -> Result<(f64, f64)> {
    let ux = GaussianMixture::gaussian(vec![0.0; inst.dim()], bx.clone())?;
    extremal_sides_conditional(inst, bstar, &ux)
}

/// Entropy-gap bounds used when removing the enhancement, for Gaussian
/// `X ~ N(0, bx)` with `bx ⪯ S`:
/// `h(X+Z̃₁) − h(X+Z₁) ≥ ½ log(|B*+Ñ₁|/|B*+N₁|)` and
/// `h(X+Z₀) − h(X+Z̃₀) ≥ ½ log(|B*+N₀|/|B*+Ñ₀|)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EntropyGapBounds {
    pub t2_lhs: f64,
    pub t2_rhs: f64,
    pub t4_lhs: f64,
    pub t4_rhs: f64,
}

pub fn entropy_gap_bounds(
    inst: &ExtremalInstance,
    cert: &KktCertificate,
    enh: &Enhancement,
    bx: &SymMatrix,
) -> Result<EntropyGapBounds> {
    let b = &cert.bstar;
    let n1 = &inst.nk[0];
    let n0 = &inst.n0;
    let hl = |m: &SymMatrix| -> Result<f64> { Ok(0.5 * logdet(m)?) };
    Ok(EntropyGapBounds {
        t2_lhs: hl(&bx.add(&enh.n1_tilde))? - hl(&bx.add(n1))?,
        t2_rhs: hl(&b.add(&enh.n1_tilde))? - hl(&b.add(n1))?,
        t4_lhs: hl(&bx.add(n0))? - hl(&bx.add(&enh.n0_tilde))?,
        t4_rhs: hl(&b.add(n0))? - hl(&b.add(&enh.n0_tilde))?,
    })
}

/// Two-noise construction: simultaneous diagonalization of `B*+N₁`, `B*+N₂`,
/// perturbation `Λ̃₃ = Λ₃ + εI` and the diagonal matrix parameter
/// `A = (Λ̃₂ − Λ₁)(Λ̃₃ − Λ₁)⁻¹`.
#[derive(Debug, Clone, Serialize)]
pub struct TwoNoiseConstruction {
    pub mu: f64,
    pub eps: f64,
    pub v: Vec<Vec<f64>>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda3: Vec<f64>,
    pub lambda3_tilde: Vec<f64>,
    pub lambda2_tilde: Vec<f64>,
    /// Diagonal of `A`.
    pub a: Vec<f64>,
    /// `½ log|Λ₁| + (μ/2) log|Λ̃₃| − ((1+μ)/2) log|Λ̃₂|` at this `ε`.
    pub bound: f64,
    /// The same bound at `ε = 0`.
    pub limit_bound: f64,
    /// `(ε, bound)` for `ε` halved five times.
    pub eps_sweep: Vec<(f64, f64)>,
}

impl TwoNoiseConstruction {
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn a_matrix(&self) -> SymMatrix {
        SymMatrix::diag(&self.a)
    }
}

fn two_noise_residual(bstar: &SymMatrix, n1: &SymMatrix, n2: &SymMatrix, n3: &SymMatrix, mu: f64) -> Result<(f64, f64)> {
    let lhs = bstar
        .add(n1)
        .inverse_pd()?
        .add(&bstar.add(n3).inverse_pd()?.scale(mu));
    let rhs = bstar.add(n2).inverse_pd()?.scale(1.0 + mu);
    Ok((lhs.sub(&rhs).frobenius(), rhs.frobenius().max(1.0)))
}

fn perturbed(l1: &[f64], l3: &[f64], mu: f64, eps: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let l3t: Vec<f64> = l3.iter().map(|x| x + eps).collect();
    let l2t: Vec<f64> = l1
        .iter()
        .zip(&l3t)
        .map(|(a, c)| (1.0 + mu) / (1.0 / a + mu / c))
        .collect();
    let a: Vec<f64> = l1
        .iter()
        .zip(&l2t)
        .zip(&l3t)
        .map(|((l1, l2), l3)| (l2 - l1) / (l3 - l1))
        .collect();
    (l3t, l2t, a)
}

fn sum_ln(v: &[f64]) -> f64 {
    v.iter().map(|x| x.ln()).sum()
}

fn two_noise_bound(l1: &[f64], l3: &[f64], l2: &[f64], mu: f64) -> f64 {
    0.5 * sum_ln(l1) + 0.5 * mu * sum_ln(l3) - 0.5 * (1.0 + mu) * sum_ln(l2)
}

/// Builds the two-noise construction at `B*`. `eps = None` selects
/// `1e-4 · tr(Λ₃)/n`.
pub fn corollary2_construct(
    bstar: &SymMatrix,
    n1: &SymMatrix,
    n2: &SymMatrix,
    n3: &SymMatrix,
    mu: f64,
    eps: Option<f64>,
) -> Result<TwoNoiseConstruction> {
    let pre = |m: &str| Err(Error::PreconditionViolated(m.to_string()));
    if !(mu > 0.0) {
        return pre("μ = 0 forces N1 = N2 and the inequality holds with equality; nothing to construct");
    }
    if !is_psd(bstar) {
        return pre("B* must be PSD");
    }
    let (res, scale) = two_noise_residual(bstar, n1, n2, n3, mu)?;
    if res > 1e-8 * scale {
        return Err(Error::PreconditionViolated(format!(
            "(B*+N1)⁻¹ + μ(B*+N3)⁻¹ = (1+μ)(B*+N2)⁻¹ fails (residual {res:e})"
        )));
    }
    if !loewner_leq(n1, n3, ORDER_TOL * n3.spectral_norm().max(1.0))? {
        return pre("N1 ⪯ N3 fails");
    }
    let ged = simultaneous_diag(&bstar.add(n1), &bstar.add(n2))?;
    let l3m = bstar.add(n3).congruence(&ged.v);
    let l3 = l3m.diagonal();
    let n = bstar.dim();
    let off = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .fold(0.0_f64, |m, (i, j)| m.max(l3m.get(i, j).abs()));
    if off > 1e-7 * l3m.max_abs().max(1.0) {
        return Err(Error::PreconditionViolated(format!(
            "Vᵀ(B*+N3)V is not diagonal (off-diagonal {off:e})"
        )));
    }
    let (l1, l2) = (ged.lambda1.clone(), ged.lambda2.clone());
    let eps = eps.unwrap_or(1e-4 * l3.iter().sum::<f64>() / n as f64);
    if !(eps > 0.0) {
        return pre("ε must be positive");
    }
    let (l3t, l2t, a) = perturbed(&l1, &l3, mu, eps);

    for i in 0..n {
        if !(l1[i] < l2t[i] && l2t[i] < l3t[i]) {
            return Err(Error::PreconditionViolated(format!(
                "Λ1 ≺ Λ̃2 ≺ Λ̃3 fails at index {i}"
            )));
        }
        if !(l2[i] < l2t[i]) {
            return Err(Error::PreconditionViolated(format!(
                "Λ2 ≺ Λ̃2 fails at index {i}"
            )));
        }
        if !(a[i] > 0.0 && a[i] < 1.0) {
            return Err(Error::PreconditionViolated(format!(
                "0 ≺ A ≺ I fails at index {i} (a = {})",
                a[i]
            )));
        }
    }

    let bound = two_noise_bound(&l1, &l3t, &l2t, mu);
    let limit_bound = two_noise_bound(&l1, &l3, &l2, mu);
    let mut eps_sweep = Vec::with_capacity(6);
    let mut e = eps;
    for _ in 0..6 {
        let (l3e, l2e, _) = perturbed(&l1, &l3, mu, e);
        eps_sweep.push((e, two_noise_bound(&l1, &l3e, &l2e, mu)));
        e *= 0.5;
    }

    Ok(TwoNoiseConstruction {
        mu,
        eps,
        v: ged.v.row_iter().map(|r| r.iter().copied().collect()).collect(),
        lambda1: l1,
        lambda2: l2,
        lambda3: l3,
        lambda3_tilde: l3t,
        lambda2_tilde: l2t,
        a,
        bound,
        limit_bound,
        eps_sweep,
    })
}

/// Value, gradient and Hessian of
/// `f(b, c) = b + μc − ((1+μ)n/2) log[|I−A|^{1/n} e^{2b/n} + |A|^{1/n} e^{2c/n}]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcaveEval {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

fn unit_box_weights(a: &SymMatrix) -> Result<(f64, f64)> {
    let n = a.dim();
    let vals = a.eigenvalues();
    if vals[0] <= 0.0 || *vals.last().unwrap() >= 1.0 {
        return Err(Error::PreconditionViolated("need 0 ≺ A ≺ I".into()));
    }
    let ln_a: f64 = vals.iter().map(|l| l.ln()).sum();
    let ln_ia: f64 = vals.iter().map(|l| (1.0 - l).ln()).sum();
    Ok((ln_ia / n as f64, ln_a / n as f64))
}

pub fn f_concave(b: f64, c: f64, a: &SymMatrix, mu: f64) -> Result<ConcaveEval> {
    let n = a.dim() as f64;
    let (ln_alpha, ln_beta) = unit_box_weights(a)?;
    let x = ln_alpha + 2.0 * b / n;
    let y = ln_beta + 2.0 * c / n;
    let m = x.max(y);
    let ln_s = m + ((x - m).exp() + (y - m).exp()).ln();
    let p = (x - ln_s).exp();
    let q = (y - ln_s).exp();
    let k = 1.0 + mu;
    let h = -2.0 * k / n * p * q;
    Ok(ConcaveEval {
        value: b + mu * c - k * n / 2.0 * ln_s,
        gradient: [1.0 - k * p, mu - k * q],
        hessian: [[h, -h], [-h, h]],
    })
}

/// Maximizer offset `c − b` and maximum value of [`f_concave`].
/// For `μ = 0` the supremum `−½ log|I−A|` is approached as `c − b → −∞`.
pub fn f_max(a: &SymMatrix, mu: f64) -> Result<(f64, f64)> {
    let n = a.dim() as f64;
    let (ln_alpha, ln_beta) = unit_box_weights(a)?;
    if mu < 0.0 {
        return Err(Error::PreconditionViolated("μ must be nonnegative".into()));
    }
    if mu == 0.0 {
        return Ok((f64::NEG_INFINITY, -n / 2.0 * ln_alpha));
    }
    // μ (|I−A|/|A|)^{1/n}
    let ln_ratio = mu.ln() + ln_alpha - ln_beta;
    let offset = n / 2.0 * ln_ratio;
    let value = mu * n / 2.0 * ln_ratio - (1.0 + mu) * n / 2.0 * ((1.0 + mu).ln() + ln_alpha);
    Ok((offset, value))
}

/// `(log|A|, rhs of its identity, log|I−A|, rhs of its identity)` where
/// `log|A| = log[(μ/(1+μ))ⁿ |Λ̃₂|/|Λ̃₃|]` and `log|I−A| = log[(1/(1+μ))ⁿ |Λ̃₂|/|Λ₁|]`.
pub fn log_a_identities(rec: &TwoNoiseConstruction) -> Result<(f64, f64, f64, f64)> {
    let n = rec.dim() as f64;
    let mu = rec.mu;
    if rec
        .lambda1
        .iter()
        .zip(&rec.lambda3_tilde)
        .any(|(l1, l3)| !(l1 < l3))
    {
        return Err(Error::PreconditionViolated("Λ1 ≺ Λ̃3 fails".into()));
    }
    let lhs3 = sum_ln(&rec.a);
    let rhs3 = n * (mu / (1.0 + mu)).ln() + sum_ln(&rec.lambda2_tilde) - sum_ln(&rec.lambda3_tilde);
    let lhs4: f64 = rec.a.iter().map(|a| (1.0 - a).ln()).sum();
    let rhs4 = -n * (1.0 + mu).ln() + sum_ln(&rec.lambda2_tilde) - sum_ln(&rec.lambda1);
    Ok((lhs3, rhs3, lhs4, rhs4))
}

/// Result of folding the first `K − 1` noises into one.
#[derive(Debug, Clone, Serialize)]
pub struct KReduction {
    /// `N` with `(B*+N)⁻¹ = Σ_{k<K} μ'ₖ (B*+Nₖ)⁻¹`.
    pub combined: SymMatrix,
    /// `μ'_K = μ_K / Σ_{j<K} μⱼ`.
    pub mu_last: f64,
    /// Residual of `(B*+N)⁻¹ + μ'_K(B*+N_K)⁻¹ = (1+μ'_K)(B*+N₀)⁻¹`.
    pub two_noise_residual: f64,
}

/// Induction step from `K` noises to the two-noise form.
pub fn corollary_k_reduce(inst: &ExtremalInstance, bstar: &SymMatrix) -> Result<KReduction> {
    let k = inst.nk.len();
    if k < 2 {
        return Err(Error::PreconditionViolated("need K ≥ 2".into()));
    }
    let g = inst.stationarity_gap(bstar)?;
    let scale = inst.scale_at(bstar)?;
    if g.frobenius() > 1e-8 * scale {
        return Err(Error::PreconditionViolated(format!(
            "Σμₖ(B*+Nₖ)⁻¹ = (B*+N0)⁻¹ fails (residual {:e})",
            g.frobenius()
        )));
    }
    let head: f64 = inst.mu[..k - 1].iter().sum();
    if !(head > 0.0) {
        return Err(Error::PreconditionViolated(
            "the first K−1 weights vanish".into(),
        ));
    }
    let mut acc = SymMatrix::zeros(inst.dim());
    for (m, nk) in inst.mu[..k - 1].iter().zip(&inst.nk[..k - 1]) {
        acc = acc.add(&bstar.add(nk).inverse_pd()?.scale(m / head));
    }
    let combined = acc.inverse_pd()?.sub(bstar);
    let tol = ORDER_TOL * inst.nk[k - 2].spectral_norm().max(1.0);
    if !loewner_leq(&inst.nk[0], &combined, tol)? || !loewner_leq(&combined, &inst.nk[k - 2], tol)? {
        return Err(Error::PreconditionViolated(
            "N1 ⪯ N ⪯ N_{K−1} fails".into(),
        ));
    }
    let mu_last = inst.mu[k - 1] / head;
    let (res, _) = two_noise_residual(bstar, &combined, &inst.n0, &inst.nk[k - 1], mu_last)?;
    Ok(KReduction {
        combined,
        mu_last,
        two_noise_residual: res,
    })
}
