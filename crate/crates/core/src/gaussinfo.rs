//! Gaussian information quantities for the linear channel `Y = D X + Z`.
//!
//! All entropies are in nats. Closed forms assume `X ~ N(·, B)` independent of
//! `Z ~ N(0, N)`; the Monte Carlo estimator covers finite Gaussian mixtures.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{is_pd, is_psd, logdet, SymMatrix};

/// `ln(2πe)`.
pub const LN_2PIE: f64 = 2.837_877_066_409_345_3;

/// Samples per Monte Carlo chunk; each chunk owns one ChaCha stream.
pub const MC_CHUNK: usize = 8192;

/// Minimum sample count accepted by [`mixture_entropy_mc`].
pub const MC_MIN_SAMPLES: usize = 1000;

/// `Y = D X + Z` with `Cov(X) = bx`, `Cov(Z) = nz`.
#[derive(Debug, Clone)]
pub struct LinearGaussChannel {
    pub d: SymMatrix,
    pub bx: SymMatrix,
    pub nz: SymMatrix,
}

impl LinearGaussChannel {
    pub fn new(d: SymMatrix, bx: SymMatrix, nz: SymMatrix) -> Result<Self> {
        let n = d.dim();
        for m in [&bx, &nz] {
            if m.dim() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: m.dim(),
                });
            }
        }
        if !is_psd(&bx) {
            return Err(Error::NotPsd {
                min_eig: bx.min_eigenvalue(),
            });
        }
        if !is_pd(&nz) {
            return Err(Error::NotPd {
                min_eig: nz.min_eigenvalue(),
            });
        }
        Ok(Self { d, bx, nz })
    }

    pub fn dim(&self) -> usize {
        self.d.dim()
    }

    /// `Cov(DX) = D B D`.
    pub fn signal_cov(&self) -> SymMatrix {
        self.bx.sandwich(&self.d)
    }

    /// `Cov(DX + Z) = D B D + N`.
    pub fn output_cov(&self) -> SymMatrix {
        self.signal_cov().add(&self.nz)
    }

    fn d_inverse(&self) -> Result<SymMatrix> {
        let vals = self.d.eigenvalues();
        let big = vals.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
        let small = vals.iter().fold(f64::INFINITY, |a, l| a.min(l.abs()));
        if big == 0.0 || small <= 1e-12 * big {
            return Err(Error::SingularD);
        }
        self.d.inverse().map_err(|_| Error::SingularD)
    }
}

/// `½ log((2πe)ⁿ |cov|)`.
pub fn gaussian_entropy(cov: &SymMatrix) -> Result<f64> {
    Ok(0.5 * (cov.dim() as f64 * LN_2PIE + logdet(cov)?))
}

/// Entropy power `exp((2/n) h)`.
pub fn entropy_power(h: f64, n: usize) -> f64 {
    (2.0 * h / n as f64).exp()
}

/// Entropy power of a Gaussian with covariance `cov`: `2πe |cov|^{1/n}`.
/// Zero for singular `cov` (the entropy is `−∞`).
pub fn gaussian_entropy_power(cov: &SymMatrix) -> f64 {
    let n = cov.dim() as f64;
    let det = cov.det().max(0.0);
    LN_2PIE.exp() * det.powf(1.0 / n)
}

/// `I(Z; DX + Z) = ½ log|DBD + N| − ½ log|DBD|`.
pub fn mi_z_given_output(ch: &LinearGaussChannel) -> Result<f64> {
    let signal = ch.signal_cov();
    let ld_signal = logdet(&signal).map_err(|_| Error::SingularInput)?;
    Ok(0.5 * (logdet(&ch.output_cov())? - ld_signal))
}

/// `I(X; DX + Z) = ½ log|DBD + N| − ½ log|N|`.
pub fn mi_x_given_output(ch: &LinearGaussChannel) -> Result<f64> {
    Ok(0.5 * (logdet(&ch.output_cov())? - logdet(&ch.nz)?))
}

/// MMSE matrix `Cov(X | DX+Z) = B − B D (DBD + N)⁻¹ D B`.
///
/// For PD `B` the information form `(B⁻¹ + D N⁻¹ D)⁻¹` is used instead; it
/// avoids the cancellation of the subtractive form when `B` is large.
pub fn mmse_x(ch: &LinearGaussChannel) -> SymMatrix {
    if let Ok(b_inv) = ch.bx.inverse_pd() {
        let n_inv = ch.nz.inverse_pd().expect("N is PD");
        if let Ok(out) = b_inv.add(&n_inv.sandwich(&ch.d)).inverse_pd() {
            return out;
        }
    }
    let inv = ch
        .output_cov()
        .inverse_pd()
        .expect("DBD + N is PD when N is PD");
    let db = ch.d.mul(&ch.bx);
    let correction = db.transpose() * inv.as_matrix() * &db;
    SymMatrix::from_matrix(ch.bx.as_matrix() - correction)
}

/// MMSE matrix of the noise, `Cov(Z | DX+Z) = N − N (DBD + N)⁻¹ N`.
///
/// Requires invertible `D`; for symmetric `D` it equals
/// `D · Cov(X | DX+Z) · D`.
pub fn mmse_z(ch: &LinearGaussChannel) -> Result<SymMatrix> {
    ch.d_inverse()?;
    let inv = ch
        .output_cov()
        .inverse_pd()
        .expect("DBD + N is PD when N is PD");
    let n = ch.nz.as_matrix();
    Ok(SymMatrix::from_matrix(n - n * inv.as_matrix() * n))
}

/// Gradient of `I(Z; DX+Z)` with respect to the entries of `D`:
/// `(N⁻¹ Cov(Z|DX+Z) − I) D⁻¹`.
///
/// Generally not symmetric.
pub fn immse_gradient(ch: &LinearGaussChannel) -> Result<DMatrix<f64>> {
    let d_inv = ch.d_inverse()?;
    if !is_pd(&ch.bx) {
        return Err(Error::SingularInput);
    }
    let n_inv = ch.nz.inverse_pd()?;
    let cz = mmse_z(ch)?;
    let k = ch.dim();
    let inner = n_inv.as_matrix() * cz.as_matrix() - DMatrix::<f64>::identity(k, k);
    Ok(inner * d_inv.as_matrix())
}

/// Lower bound `½ log(|N| / |Cov(Z | DX+Z)|)` on `I(Z; DX+Z)`; tight for
/// Gaussian `X`.
pub fn mi_lower_bound_from_mmse(ch: &LinearGaussChannel) -> Result<f64> {
    let cz = mmse_z(ch)?;
    Ok(0.5 * (logdet(&ch.nz)? - logdet(&cz)?))
}

/// Finite Gaussian mixture `Σ wᵢ N(meanᵢ, covᵢ)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MixtureJson", into = "MixtureJson")]
pub struct GaussianMixture {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covs: Vec<SymMatrix>,
}

#[derive(Serialize, Deserialize)]
struct MixtureJson {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covs: Vec<SymMatrix>,
}

impl TryFrom<MixtureJson> for GaussianMixture {
    type Error = Error;
    fn try_from(j: MixtureJson) -> Result<Self> {
        GaussianMixture::new(j.weights, j.means, j.covs)
    }
}

impl From<GaussianMixture> for MixtureJson {
    fn from(m: GaussianMixture) -> Self {
        MixtureJson {
            weights: m.weights,
            means: m.means,
            covs: m.covs,
        }
    }
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covs: Vec<SymMatrix>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMixture("no components".into()));
        }
        if means.len() != weights.len() || covs.len() != weights.len() {
            return Err(Error::InvalidMixture(format!(
                "{} weights, {} means, {} covariances",
                weights.len(),
                means.len(),
                covs.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMixture("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMixture(format!("weights sum to {total}")));
        }
        let n = covs[0].dim();
        if covs.iter().any(|c| c.dim() != n) || means.iter().any(|m| m.len() != n) {
            return Err(Error::InvalidMixture("component dimensions differ".into()));
        }
        if let Some(i) = covs.iter().position(|c| !is_psd(c)) {
            return Err(Error::InvalidMixture(format!(
                "component {i} covariance is not PSD"
            )));
        }
        Ok(Self {
            weights,
            means,
            covs,
        })
    }

    /// Single Gaussian component.
    pub fn gaussian(mean: Vec<f64>, cov: SymMatrix) -> Result<Self> {
        Self::new(vec![1.0], vec![mean], vec![cov])
    }

    /// Zero-mean mixture.
    pub fn centered(weights: Vec<f64>, covs: Vec<SymMatrix>) -> Result<Self> {
        let n = covs.first().map(|c| c.dim()).unwrap_or(0);
        let means = vec![vec![0.0; n]; covs.len()];
        Self::new(weights, means, covs)
    }

    pub fn dim(&self) -> usize {
        self.covs[0].dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn covs(&self) -> &[SymMatrix] {
        &self.covs
    }

    /// Law of `X + W` for independent `W ~ N(0, noise)`: every component
    /// covariance grows by `noise`.
    pub fn convolve_gaussian(&self, noise: &SymMatrix) -> Result<Self> {
        if noise.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: noise.dim(),
            });
        }
        Ok(Self {
            weights: self.weights.clone(),
            means: self.means.clone(),
            covs: self.covs.iter().map(|c| c.add(noise)).collect(),
        })
    }

    /// Second moment `E[XXᵀ] = Σ wᵢ (Σᵢ + mᵢ mᵢᵀ)`.
    pub fn second_moment(&self) -> SymMatrix {
        let n = self.dim();
        let mut acc = DMatrix::<f64>::zeros(n, n);
        for ((w, m), c) in self.weights.iter().zip(&self.means).zip(&self.covs) {
            let mv = DVector::from_row_slice(m);
            acc += (c.as_matrix() + &mv * mv.transpose()) * *w;
        }
        SymMatrix::from_matrix(acc)
    }

    fn prepared(&self) -> Result<PreparedMixture> {
        let n = self.dim();
        let mut comps = Vec::with_capacity(self.len());
        for (i, ((w, m), c)) in self
            .weights
            .iter()
            .zip(&self.means)
            .zip(&self.covs)
            .enumerate()
        {
            let l = c.cholesky_lower().map_err(|_| Error::DegenerateComponent(i))?;
            let log_diag: f64 = l.diagonal().iter().map(|d| d.ln()).sum();
            let l_inv = l
                .clone()
                .try_inverse()
                .ok_or(Error::DegenerateComponent(i))?;
            comps.push(PreparedComponent {
                log_weight: w.ln(),
                mean: DVector::from_row_slice(m),
                chol: l,
                chol_inv: l_inv,
                log_norm: -0.5 * n as f64 * (2.0 * PI).ln() - log_diag,
            });
        }
        let cumulative = self
            .weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(PreparedMixture {
            n,
            comps,
            cumulative,
        })
    }

    /// Exact log-density at `y`.
    pub fn log_density(&self, y: &[f64]) -> Result<f64> {
        let p = self.prepared()?;
        Ok(p.log_density(&DVector::from_row_slice(y)))
    }
}

struct PreparedComponent {
    log_weight: f64,
    mean: DVector<f64>,
    chol: DMatrix<f64>,
    chol_inv: DMatrix<f64>,
    log_norm: f64,
}

struct PreparedMixture {
    n: usize,
    comps: Vec<PreparedComponent>,
    cumulative: Vec<f64>,
}

impl PreparedMixture {
    fn log_density(&self, y: &DVector<f64>) -> f64 {
        let terms: Vec<f64> = self
            .comps
            .iter()
            .filter(|c| c.log_weight.is_finite())
            .map(|c| {
                let z = &c.chol_inv * (y - &c.mean);
                c.log_weight + c.log_norm - 0.5 * z.norm_squared()
            })
            .collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let u: f64 = rng.random();
        let last = self.comps.len() - 1;
        let k = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(last);
        let c = &self.comps[k];
        let z = DVector::from_fn(self.n, |_, _| rng.sample::<f64, _>(StandardNormal));
        &c.mean + &c.chol * z
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Plug-in entropy estimate `−(1/M) Σ log p(yᵢ)` with `yᵢ` drawn from the
/// mixture itself.
///
/// Samples are split into chunks of [`MC_CHUNK`], chunk `k` drawing from
/// ChaCha stream `k` of `seed`, so the parallel result is bit-identical to a
/// serial pass.
pub fn mixture_entropy_mc(mix: &GaussianMixture, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples < MC_MIN_SAMPLES {
        return Err(Error::TooFewSamples(samples));
    }
    let prepared = mix.prepared()?;
    let chunks = samples.div_ceil(MC_CHUNK);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let count = MC_CHUNK.min(samples - k * MC_CHUNK);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..count {
                let y = prepared.sample(&mut rng);
                let v = -prepared.log_density(&y);
                sum += v;
                sum_sq += v * v;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let m = samples as f64;
    let mean = sum / m;
    let var = ((sum_sq / m - mean * mean) * m / (m - 1.0)).max(0.0);
    Ok(McEstimate {
        estimate: mean,
        stderr: (var / m).sqrt(),
    })
}
