//! Entropy-power inequality with a matrix parameter.
//!
//! For `Z ~ N(0, N)` independent of `X` and `0 ⪯ A ⪯ I`:
//!
//! ```text
//! e(X + A^{1/2} Z) ≥ |I − A|^{1/n} e(X) + |A|^{1/n} e(X + Z),   e(·) = exp((2/n) h(·))
//! ```
//!
//! Besides both sides of the inequality this module evaluates the monotone
//! path `D(γ) = [I + γ(A⁻¹ − I)]^{1/2}` and the function
//! `F(D) = |D|^{2/n} {exp[(2/n) I(Z; DX+Z)] − |I − D⁻²|^{1/n}}` whose growth
//! along the path is equivalent to the inequality.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussinfo::{
    gaussian_entropy, gaussian_entropy_power, mi_z_given_output, mixture_entropy_mc, mmse_z,
    GaussianMixture, LinearGaussChannel,
};
use crate::matcore::{
    is_pd, is_psd, logdet, loewner_leq, proportional_general, sym_sqrt, SymMatrix,
};

/// Condition number of `A` beyond which the singular branch is taken.
pub const SINGULAR_A_CONDITION: f64 = 1e12;

/// Relative residual accepted by [`equality_condition`].
pub const PROPORTIONAL_TOL: f64 = 1e-9;

/// Default number of points on the γ-grid.
pub const DEFAULT_GAMMA_POINTS: usize = 64;

/// Law of `X`.
#[derive(Debug, Clone)]
pub enum EpiInput {
    Gaussian(SymMatrix),
    Mixture(GaussianMixture),
}

/// One instance of the inequality: matrix parameter, noise covariance, input law.
#[derive(Debug, Clone)]
pub struct EpiInstance {
    a: SymMatrix,
    nz: SymMatrix,
    input: EpiInput,
}

/// Monte Carlo knobs for mixture inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McParams {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McParams {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 0,
        }
    }
}

/// Which branch of the argument applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpiBranch {
    /// `|A| > 0`: the full inequality is asserted.
    Regular,
    /// `|A| ≈ 0`: only `lhs ≥ |I − A|^{1/n} e(X)` is asserted.
    SingularA,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpiSides {
    pub lhs: f64,
    pub rhs: f64,
    /// Right-hand side actually asserted for this branch.
    pub bound: f64,
    pub branch: EpiBranch,
    /// Standard error of `lhs − rhs`; zero for closed forms.
    pub gap_stderr: f64,
}

impl EpiSides {
    pub fn gap(&self) -> f64 {
        self.lhs - self.rhs
    }

    /// `lhs ≥ bound − rel_tol·bound`.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs >= self.bound - rel_tol * self.bound.abs()
    }
}

fn check_unit_box(a: &SymMatrix) -> Result<()> {
    let n = a.dim();
    let tol = 1e-9;
    if !loewner_leq(&SymMatrix::zeros(n), a, tol)? || !loewner_leq(a, &SymMatrix::identity(n), tol)? {
        return Err(Error::PreconditionViolated(
            "matrix parameter must satisfy 0 ⪯ A ⪯ I".into(),
        ));
    }
    Ok(())
}

/// Determinant of a PSD matrix, clamped at zero.
fn psd_det(m: &SymMatrix) -> f64 {
    m.eigenvalues().into_iter().map(|l| l.max(0.0)).product()
}

fn square(d: &SymMatrix) -> SymMatrix {
    SymMatrix::from_matrix(d.mul(d))
}

fn root_n(x: f64, n: usize) -> f64 {
    x.max(0.0).powf(1.0 / n as f64)
}

/// Branch selection by the conditioning of `A`.
pub fn branch_for(a: &SymMatrix) -> EpiBranch {
    let vals = a.eigenvalues();
    let lo = vals[0];
    let hi = *vals.last().unwrap();
    if lo <= 0.0 || hi / lo > SINGULAR_A_CONDITION {
        EpiBranch::SingularA
    } else {
        EpiBranch::Regular
    }
}

impl EpiInstance {
    pub fn new(a: SymMatrix, nz: SymMatrix, input: EpiInput) -> Result<Self> {
        let n = a.dim();
        let input_dim = match &input {
            EpiInput::Gaussian(b) => b.dim(),
            EpiInput::Mixture(m) => m.dim(),
        };
        for d in [nz.dim(), input_dim] {
            if d != n {
                return Err(Error::DimensionMismatch { left: n, right: d });
            }
        }
        check_unit_box(&a)?;
        if !is_pd(&nz) {
            return Err(Error::NotPd {
                min_eig: nz.min_eigenvalue(),
            });
        }
        if let EpiInput::Gaussian(b) = &input {
            if !is_psd(b) {
                return Err(Error::NotPsd {
                    min_eig: b.min_eigenvalue(),
                });
            }
        }
        Ok(Self { a, nz, input })
    }

    pub fn gaussian(a: SymMatrix, nz: SymMatrix, b: SymMatrix) -> Result<Self> {
        Self::new(a, nz, EpiInput::Gaussian(b))
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn a(&self) -> &SymMatrix {
        &self.a
    }

    pub fn nz(&self) -> &SymMatrix {
        &self.nz
    }

    pub fn input(&self) -> &EpiInput {
        &self.input
    }

    /// Covariance of a Gaussian input.
    pub fn gaussian_cov(&self) -> Result<&SymMatrix> {
        match &self.input {
            EpiInput::Gaussian(b) => Ok(b),
            EpiInput::Mixture(_) => Err(Error::PreconditionViolated(
                "operation needs a Gaussian input".into(),
            )),
        }
    }

    /// `A^{1/2} N A^{1/2}`, the covariance of `A^{1/2} Z`.
    pub fn scaled_noise(&self) -> SymMatrix {
        let root = sym_sqrt(&self.a).expect("A is PSD");
        self.nz.sandwich(&root)
    }
}

/// Both sides of the inequality. Gaussian inputs use closed forms; mixtures
/// use the Monte Carlo estimator (three independent streams derived from
/// `mc.seed`).
pub fn epi_sides(inst: &EpiInstance, mc: McParams) -> Result<EpiSides> {
    let n = inst.dim();
    let det_a = psd_det(&inst.a);
    let det_ia = psd_det(&SymMatrix::identity(n).sub(&inst.a));
    let wa = root_n(det_a, n);
    let wia = root_n(det_ia, n);
    let scaled = inst.scaled_noise();
    let branch = branch_for(&inst.a);

    let (e_mid, e_x, e_xz, se_mid, se_x, se_xz) = match &inst.input {
        EpiInput::Gaussian(b) => (
            gaussian_entropy_power(&b.add(&scaled)),
            gaussian_entropy_power(b),
            gaussian_entropy_power(&b.add(&inst.nz)),
            0.0,
            0.0,
            0.0,
        ),
        EpiInput::Mixture(mix) => {
            let power = |m: &GaussianMixture, stream: u64| -> Result<(f64, f64)> {
                let seed = mc.seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let est = mixture_entropy_mc(m, mc.samples, seed)?;
                let e = (2.0 * est.estimate / n as f64).exp();
                Ok((e, 2.0 / n as f64 * e * est.stderr))
            };
            let (em, sm) = power(&mix.convolve_gaussian(&scaled)?, 0)?;
            let (ex, sx) = power(mix, 1)?;
            let (exz, sxz) = power(&mix.convolve_gaussian(&inst.nz)?, 2)?;
            (em, ex, exz, sm, sx, sxz)
        }
    };
    let rhs = wia * e_x + wa * e_xz;
    let bound = match branch {
        EpiBranch::Regular => rhs,
        EpiBranch::SingularA => wia * e_x,
    };
    let gap_stderr = (se_mid.powi(2) + (wia * se_x).powi(2) + (wa * se_xz).powi(2)).sqrt();
    Ok(EpiSides {
        lhs: e_mid,
        rhs,
        bound,
        branch,
        gap_stderr,
    })
}

/// Outcome of the proportionality test for equality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "c")]
pub enum EqualityCheck {
    /// `B + A^{1/2} N A^{1/2} = c (B − AB)`.
    Proportional(f64),
    NotProportional,
    /// `B − AB = 0` (e.g. `A = I`): the test is vacuous.
    Degenerate,
}

impl EqualityCheck {
    pub fn constant(&self) -> Option<f64> {
        match self {
            EqualityCheck::Proportional(c) => Some(*c),
            _ => None,
        }
    }
}

/// Sufficient condition for equality with Gaussian `X ~ N(·, B)`.
pub fn equality_condition(a: &SymMatrix, b: &SymMatrix, nz: &SymMatrix) -> Result<EqualityCheck> {
    check_unit_box(a)?;
    let n = a.dim();
    if b.dim() != n || nz.dim() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: b.dim().max(nz.dim()),
        });
    }
    let root = sym_sqrt(a)?;
    let target: DMatrix<f64> = b.add(&nz.sandwich(&root)).into_matrix();
    let base: DMatrix<f64> = b.as_matrix() - a.mul(b);
    let scale = b.frobenius().max(f64::MIN_POSITIVE);
    if base.norm() <= 1e-12 * scale {
        return Ok(EqualityCheck::Degenerate);
    }
    Ok(match proportional_general(&target, &base, PROPORTIONAL_TOL) {
        Some(c) => EqualityCheck::Proportional(c),
        None => EqualityCheck::NotProportional,
    })
}

fn require_regular(a: &SymMatrix) -> Result<()> {
    if branch_for(a) == EpiBranch::SingularA {
        let vals = a.eigenvalues();
        let condition = if vals[0] > 0.0 {
            vals.last().unwrap() / vals[0]
        } else {
            f64::INFINITY
        };
        return Err(Error::SingularA { condition });
    }
    Ok(())
}

/// `D(γ) = [I + γ(A⁻¹ − I)]^{1/2}`.
pub fn path_point(gamma: f64, a: &SymMatrix) -> Result<SymMatrix> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::PreconditionViolated(format!(
            "γ = {gamma} outside [0, 1]"
        )));
    }
    require_regular(a)?;
    let n = a.dim();
    let a_inv = a.inverse_pd()?;
    let inner = SymMatrix::identity(n).add(&a_inv.add_identity(-1.0).scale(gamma));
    sym_sqrt(&inner)
}

fn gaussian_path_channel(d: &SymMatrix, inst: &EpiInstance) -> Result<LinearGaussChannel> {
    let b = inst.gaussian_cov()?;
    if !is_pd(b) {
        return Err(Error::SingularInput);
    }
    LinearGaussChannel::new(d.clone(), b.clone(), inst.nz.clone())
}

/// `F(D) = |D|^{2/n} {exp[(2/n) I(Z; DX+Z)] − |I − D⁻²|^{1/n}}` for Gaussian `X`.
pub fn path_f(d: &SymMatrix, inst: &EpiInstance) -> Result<f64> {
    let n = inst.dim();
    let ch = gaussian_path_channel(d, inst)?;
    let mi = mi_z_given_output(&ch)?;
    let det_d = d.det();
    let i_minus = SymMatrix::identity(n).sub(&square(d).inverse_pd()?);
    let nf = n as f64;
    Ok(det_d.abs().powf(2.0 / nf) * ((2.0 / nf * mi).exp() - root_n(psd_det(&i_minus), n)))
}

/// Closed-form `∂F/∂γ` along the path at `γ`.
///
/// Evaluated with `(I − D⁻²)/γ = D⁻²(A⁻¹ − I)`, which is exact for `γ > 0`
/// and extends continuously to `γ = 0`.
pub fn path_f_deriv(gamma: f64, inst: &EpiInstance) -> Result<f64> {
    let n = inst.dim();
    let nf = n as f64;
    let d = path_point(gamma, &inst.a)?;
    let ch = gaussian_path_channel(&d, inst)?;
    let mi = mi_z_given_output(&ch)?;
    let cz = mmse_z(&ch)?;
    let n_inv = inst.nz.inverse_pd()?;
    let d2_inv = square(&d).inverse_pd()?;
    let a_excess = inst.a.inverse_pd()?.add_identity(-1.0);
    // (I − D⁻²)/γ; D⁻² and A⁻¹ commute.
    let slope = d2_inv.mul(&a_excess);
    let trace_term = (n_inv.as_matrix() * cz.as_matrix() * &slope).trace();
    let slope_det = slope.determinant().max(0.0);
    let det_d = d.det();
    Ok(det_d.powf(2.0 / nf) / nf * ((2.0 / nf * mi).exp() * trace_term - nf * root_n(slope_det, n)))
}

/// One point on the monotone path.
#[derive(Debug, Clone, Serialize)]
pub struct PathSample {
    pub gamma: f64,
    pub d: SymMatrix,
    pub f_value: f64,
    pub f_deriv: f64,
}

/// γ-grid on `[0, 1]`: a quarter of the points geometric on `[1e-6, 0.05]`,
/// the rest uniform on `[0.05, 1]`, plus `γ = 0`.
pub fn gamma_grid(points: usize) -> Vec<f64> {
    let points = points.max(4);
    let geo = (points / 4).max(1);
    let lin = points - 1 - geo;
    let (lo, mid) = (1e-6_f64, 0.05_f64);
    let mut grid = vec![0.0];
    for k in 0..geo {
        let t = k as f64 / geo as f64;
        grid.push(lo * (mid / lo).powf(t));
    }
    for k in 0..lin {
        let t = k as f64 / (lin - 1).max(1) as f64;
        grid.push(mid + t * (1.0 - mid));
    }
    grid
}

/// `F` and `∂F/∂γ` along the path at each grid point.
pub fn path_sweep(inst: &EpiInstance, grid: &[f64]) -> Result<Vec<PathSample>> {
    grid.iter()
        .map(|&gamma| {
            let d = path_point(gamma, &inst.a)?;
            Ok(PathSample {
                gamma,
                f_value: path_f(&d, inst)?,
                f_deriv: path_f_deriv(gamma, inst)?,
                d,
            })
        })
        .collect()
}

/// `(F(D(1)) − F(D(0)), gap / (|A|^{1/n} e(X)))`: the two are equal.
pub fn endpoint_identity(inst: &EpiInstance) -> Result<(f64, f64)> {
    let n = inst.dim();
    let f0 = path_f(&path_point(0.0, &inst.a)?, inst)?;
    let f1 = path_f(&path_point(1.0, &inst.a)?, inst)?;
    let sides = epi_sides(inst, McParams::default())?;
    let e_x = gaussian_entropy_power(inst.gaussian_cov()?);
    let wa = root_n(psd_det(&inst.a), n);
    Ok((f1 - f0, sides.gap() / (wa * e_x)))
}

/// The two inequalities used to bound `∂F/∂γ` from below at `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmGmChain {
    /// `|I − D⁻²|^{1/n} exp[−(2/n) I(Z; DX+Z)]`
    pub scaled: f64,
    /// `|N⁻¹ Cov(Z|DX+Z) (I − D⁻²)|^{1/n}`
    pub geometric: f64,
    /// `tr{N⁻¹ Cov(Z|DX+Z) (I − D⁻²)} / n`
    pub arithmetic: f64,
    /// Smallest real part of the eigenvalues of the product matrix.
    pub min_eig: f64,
}

pub fn amgm_chain(d: &SymMatrix, inst: &EpiInstance) -> Result<AmGmChain> {
    let n = inst.dim();
    let ch = gaussian_path_channel(d, inst)?;
    let mi = mi_z_given_output(&ch)?;
    let cz = mmse_z(&ch)?;
    let d2_inv = square(d).inverse_pd()?;
    let i_minus = SymMatrix::identity(n).sub(&d2_inv);
    let m = inst.nz.inverse_pd()?.as_matrix() * cz.as_matrix() * i_minus.as_matrix();
    let min_eig = m
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min);
    Ok(AmGmChain {
        scaled: root_n(psd_det(&i_minus), n) * (-2.0 / n as f64 * mi).exp(),
        geometric: root_n(m.determinant(), n),
        arithmetic: m.trace() / n as f64,
        min_eig,
    })
}

fn entropy_or_neg_inf(cov: &SymMatrix) -> f64 {
    gaussian_entropy(cov).unwrap_or(f64::NEG_INFINITY)
}

/// Conditional form with `X | U=u ~ N(·, Σᵤ)`:
/// `lhs = exp[(2/n) h(X + A^{1/2}Z | U)]`,
/// `rhs = |I − A|^{1/n} exp[(2/n) h(X|U)] + |A|^{1/n} exp[(2/n) h(X+Z|U)]`.
pub fn conditional_epi_sides(
    a: &SymMatrix,
    nz: &SymMatrix,
    cond: &[(f64, SymMatrix)],
) -> Result<(f64, f64)> {
    check_unit_box(a)?;
    let n = a.dim();
    if cond.is_empty() {
        return Err(Error::InvalidDistribution("no conditioning values".into()));
    }
    let total: f64 = cond.iter().map(|(p, _)| p).sum();
    if cond.iter().any(|(p, _)| *p < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!(
            "conditioning weights sum to {total}"
        )));
    }
    if !is_pd(nz) {
        return Err(Error::NotPd {
            min_eig: nz.min_eigenvalue(),
        });
    }
    for (_, s) in cond {
        if s.dim() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: s.dim(),
            });
        }
        if !is_psd(s) {
            return Err(Error::NotPsd {
                min_eig: s.min_eigenvalue(),
            });
        }
    }
    let scaled = nz.sandwich(&sym_sqrt(a)?);
    let avg = |f: &dyn Fn(&SymMatrix) -> f64| -> f64 {
        cond.iter()
            .filter(|(p, _)| *p > 0.0)
            .map(|(p, s)| p * f(s))
            .sum()
    };
    let h_mid = avg(&|s| entropy_or_neg_inf(&s.add(&scaled)));
    let h_x = avg(&|s| entropy_or_neg_inf(s));
    let h_xz = avg(&|s| entropy_or_neg_inf(&s.add(nz)));
    let nf = n as f64;
    let wa = root_n(psd_det(a), n);
    let wia = root_n(psd_det(&SymMatrix::identity(n).sub(a)), n);
    let lhs = (2.0 / nf * h_mid).exp();
    let rhs = wia * (2.0 / nf * h_x).exp() + wa * (2.0 / nf * h_xz).exp();
    Ok((lhs, rhs))
}

/// `½ log|m|`, exposed for callers assembling Gaussian entropies by hand.
pub fn half_logdet(m: &SymMatrix) -> Result<f64> {
    Ok(0.5 * logdet(m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussinfo::LN_2PIE;

    fn two_pi_e() -> f64 {
        LN_2PIE.exp()
    }

    fn scalar_inst(a: f64, b: f64, n: f64) -> EpiInstance {
        EpiInstance::gaussian(SymMatrix::scalar(a), SymMatrix::scalar(n), SymMatrix::scalar(b))
            .unwrap()
    }

    #[test]
    fn scalar_gaussian_is_tight() {
        let s = epi_sides(&scalar_inst(0.5, 1.0, 1.0), McParams::default()).unwrap();
        assert!((s.lhs - two_pi_e() * 1.5).abs() < 1e-12);
        assert!((s.rhs - two_pi_e() * 1.5).abs() < 1e-12);
        assert_eq!(s.branch, EpiBranch::Regular);
    }

    #[test]
    fn diagonal_example_has_positive_gap() {
        let inst = EpiInstance::gaussian(
            SymMatrix::diag(&[0.9, 0.1]),
            SymMatrix::identity(2),
            SymMatrix::identity(2),
        )
        .unwrap();
        let s = epi_sides(&inst, McParams::default()).unwrap();
        assert!((s.lhs / two_pi_e() - 2.09f64.sqrt()).abs() < 1e-12);
        assert!((s.lhs / two_pi_e() - 1.44568).abs() < 1e-5);
        assert!((s.rhs / two_pi_e() - 0.9).abs() < 1e-12);
        assert!(s.gap() > 0.0);
    }

    #[test]
    fn zero_parameter_collapses() {
        let b = SymMatrix::from_row_major(2, &[1.0, 0.2, 0.2, 0.5]).unwrap();
        let inst =
            EpiInstance::gaussian(SymMatrix::zeros(2), SymMatrix::identity(2), b.clone()).unwrap();
        let s = epi_sides(&inst, McParams::default()).unwrap();
        let ex = gaussian_entropy_power(&b);
        assert!((s.lhs - ex).abs() < 1e-12 && (s.rhs - ex).abs() < 1e-12);
        assert_eq!(s.branch, EpiBranch::SingularA);
        assert!(s.holds(1e-9));
    }

    #[test]
    fn instance_rejects_out_of_box_parameter() {
        let r = EpiInstance::gaussian(
            SymMatrix::scalar(1.2),
            SymMatrix::scalar(1.0),
            SymMatrix::scalar(1.0),
        );
        assert!(matches!(r, Err(Error::PreconditionViolated(_))));
        let r = EpiInstance::gaussian(
            SymMatrix::scalar(0.5),
            SymMatrix::scalar(0.0),
            SymMatrix::scalar(1.0),
        );
        assert!(matches!(r, Err(Error::NotPd { .. })));
    }

    #[test]
    fn equality_condition_examples() {
        let (alpha, beta) = (0.3, 2.0);
        let nz = SymMatrix::from_row_major(2, &[1.0, 0.4, 0.4, 2.0]).unwrap();
        let a = SymMatrix::identity(2).scale(alpha);
        let c = equality_condition(&a, &nz.scale(beta), &nz).unwrap();
        let expect = (beta + alpha) / (beta * (1.0 - alpha));
        assert!((c.constant().unwrap() - expect).abs() < 1e-12);

        let c = equality_condition(
            &SymMatrix::diag(&[0.9, 0.1]),
            &SymMatrix::identity(2),
            &SymMatrix::identity(2),
        )
        .unwrap();
        assert_eq!(c, EqualityCheck::NotProportional);

        let c = equality_condition(&SymMatrix::identity(2), &nz, &nz).unwrap();
        assert_eq!(c, EqualityCheck::Degenerate);
    }

    #[test]
    fn path_point_examples() {
        let a = SymMatrix::diag(&[0.3, 0.8]);
        assert!(path_point(0.0, &a).unwrap().sub(&SymMatrix::identity(2)).max_abs() < 1e-15);
        assert!((path_point(1.0, &SymMatrix::scalar(0.25)).unwrap().get(0, 0) - 2.0).abs() < 1e-15);
        assert!(
            (path_point(0.5, &SymMatrix::scalar(0.5)).unwrap().get(0, 0) - 1.5f64.sqrt()).abs()
                < 1e-15
        );
        assert!(matches!(
            path_point(0.5, &SymMatrix::diag(&[0.5, 0.0])),
            Err(Error::SingularA { .. })
        ));
        assert!(path_point(1.5, &a).is_err());
    }

    #[test]
    fn scalar_path_function_is_flat() {
        // Scalar Gaussian: F(D) = (D²+1) − (D²−1) = 2 along the whole path.
        let inst = scalar_inst(0.5, 1.0, 1.0);
        for g in [0.0, 0.25, 0.5, 1.0] {
            let d = path_point(g, inst.a()).unwrap();
            assert!((path_f(&d, &inst).unwrap() - 2.0).abs() < 1e-12);
            assert!(path_f_deriv(g, &inst).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn path_f_at_identity_is_mutual_information_power() {
        let b = SymMatrix::from_row_major(2, &[1.0, 0.3, 0.3, 2.0]).unwrap();
        let nz = SymMatrix::diag(&[0.5, 1.5]);
        let inst = EpiInstance::gaussian(SymMatrix::diag(&[0.4, 0.7]), nz.clone(), b.clone())
            .unwrap();
        let ch = LinearGaussChannel::new(SymMatrix::identity(2), b, nz).unwrap();
        let expect = mi_z_given_output(&ch).unwrap().exp();
        let got = path_f(&SymMatrix::identity(2), &inst).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn path_derivative_matches_finite_difference() {
        let b = SymMatrix::from_row_major(2, &[1.0, 0.3, 0.3, 0.4]).unwrap();
        let nz = SymMatrix::from_row_major(2, &[0.7, -0.2, -0.2, 1.3]).unwrap();
        let a = SymMatrix::from_row_major(2, &[0.5, 0.1, 0.1, 0.2]).unwrap();
        let inst = EpiInstance::gaussian(a, nz, b).unwrap();
        let f = |g: f64| path_f(&path_point(g, inst.a()).unwrap(), &inst).unwrap();
        for g in [0.1, 0.5, 0.9] {
            let h = 1e-5;
            let fd = (f(g + h) - f(g - h)) / (2.0 * h);
            let an = path_f_deriv(g, &inst).unwrap();
            assert!((fd - an).abs() < 1e-6, "γ={g}: fd {fd} vs analytic {an}");
            assert!(an >= -1e-9);
        }
    }

    #[test]
    fn gamma_grid_shape() {
        let g = gamma_grid(64);
        assert_eq!(g.len(), 64);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[1] <= 1e-6);
    }

    #[test]
    fn conditional_examples() {
        let a = SymMatrix::scalar(0.5);
        let nz = SymMatrix::scalar(1.0);
        let b = SymMatrix::scalar(0.7);
        let (l, r) = conditional_epi_sides(&a, &nz, &[(1.0, b.clone())]).unwrap();
        let s = epi_sides(
            &EpiInstance::gaussian(a.clone(), nz.clone(), b.clone()).unwrap(),
            McParams::default(),
        )
        .unwrap();
        assert!((l - s.lhs).abs() < 1e-12 && (r - s.rhs).abs() < 1e-12);

        let (l2, r2) = conditional_epi_sides(&a, &nz, &[(0.3, b.clone()), (0.7, b)]).unwrap();
        assert!((l2 - l).abs() < 1e-12 && (r2 - r).abs() < 1e-12);

        // Hand evaluation: h(·|U) = ½ Σᵤ ½ log(2πe vᵤ).
        let (l, r) = conditional_epi_sides(
            &a,
            &nz,
            &[(0.5, SymMatrix::scalar(0.5)), (0.5, SymMatrix::scalar(2.0))],
        )
        .unwrap();
        let tpe = two_pi_e();
        let lhs = tpe * (1.0f64 * 2.5).sqrt();
        let rhs = 0.5 * tpe * (0.5f64 * 2.0).sqrt() + 0.5 * tpe * (1.5f64 * 3.0).sqrt();
        assert!((l - lhs).abs() < 1e-12);
        assert!((r - rhs).abs() < 1e-12);
        assert!(l > r);
    }

    #[test]
    fn non_commuting_noise_counterexample() {
        let sym = |v: [f64; 4]| SymMatrix::from_row_major(2, &v).unwrap();
        let a = sym([0.29964728051632294, -0.05610759432522387, -0.05610759432522387, 0.9437888595231562]);
        let nz = sym([1.9847337740615578, 1.207481241464611, 1.207481241464611, 0.9863467352693083]);
        let b = sym([0.30999318047643226, 0.42154823935120106, 0.42154823935120106, 0.5761030421645548]);
        let inst = EpiInstance::gaussian(a.clone(), nz, b).unwrap();
        let s = epi_sides(&inst, McParams::default()).unwrap();
        assert!(s.gap() < -0.4);
        let f0 = path_f(&path_point(0.0, &a).unwrap(), &inst).unwrap();
        let f1 = path_f(&path_point(1.0, &a).unwrap(), &inst).unwrap();
        assert!(f1 < f0 - 1.0);
        let (rise, scaled_gap) = endpoint_identity(&inst).unwrap();
        assert!((rise - scaled_gap).abs() < 1e-9 * f0);
    }
}
