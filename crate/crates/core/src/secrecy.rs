//! Secrecy rate regions of the degraded vector Gaussian broadcast channel
//! `Yᵢ = X + Zᵢ`, `Zᵢ ~ N(0, Nᵢ)`, `N₁ ⪯ N₂ ⪯ N₃`, under `E[XXᵀ] ⪯ S`.
//!
//! Scenario 1: message 1 for receiver 1 kept from receiver 2, message 2 for
//! receiver 2 kept from receiver 3. Scenario 2: message 1 kept from
//! receiver 3 instead. Both regions are unions over `0 ⪯ B ⪯ S` of
//!
//! ```text
//! scenario 1: R1 ≤ ½ log|B+N1|/|N1| − ½ log|B+N2|/|N2|
//! scenario 2: R1 ≤ ½ log|B+N1|/|N1| − ½ log|B+N3|/|N3|
//! both:       R2 ≤ ½ log|S+N2|/|B+N2| − ½ log|S+N3|/|B+N3|
//! ```
//!
//! Boundary points are traced by maximizing `R1 + μR2` and certified through
//! the extremal-inequality KKT system.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal::{recover_multipliers, ExtremalInstance, KktCertificate, CERT_TOL};
use crate::matcore::{
    clip_eigenvalues, is_pd, is_psd, logdet, loewner_leq, random, sym_sqrt, SymMatrix,
};

/// Loewner tolerance for `N₁ ⪯ N₂ ⪯ N₃`.
pub const ORDER_TOL: f64 = 1e-9;

/// Random feasible `B` used per row in the supporting-line check.
pub const SUPPORT_SAMPLES: usize = 100;

/// Slack of the supporting-line check.
pub const SUPPORT_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    One,
    Two,
}

impl Scenario {
    pub fn from_number(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Scenario::One),
            2 => Ok(Scenario::Two),
            _ => Err(Error::PreconditionViolated(format!("scenario must be 1 or 2, got {k}"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Scenario::One => 1,
            Scenario::Two => 2,
        }
    }

    /// Smallest admissible weight: `μ < 1` in scenario 2 is solved by `B* = S`.
    pub fn min_mu(self) -> f64 {
        match self {
            Scenario::One => 0.0,
            Scenario::Two => 1.0,
        }
    }

    pub fn check_mu(self, mu: f64) -> Result<()> {
        if !mu.is_finite() || mu < 0.0 {
            return Err(Error::InvalidWeight {
                mu,
                scenario: self.number(),
                reason: "μ must be finite and nonnegative",
            });
        }
        if self == Scenario::Two && mu < 1.0 {
            return Err(Error::InvalidWeight {
                mu,
                scenario: 2,
                reason: "for μ < 1 the weighted sum is maximized by B* = S",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson", into = "ChannelJson")]
pub struct ChannelSpec {
    s: SymMatrix,
    n1: SymMatrix,
    n2: SymMatrix,
    n3: SymMatrix,
}

#[derive(Serialize, Deserialize)]
struct ChannelJson {
    s: SymMatrix,
    n1: SymMatrix,
    n2: SymMatrix,
    n3: SymMatrix,
}

impl TryFrom<ChannelJson> for ChannelSpec {
    type Error = Error;
    fn try_from(j: ChannelJson) -> Result<Self> {
        ChannelSpec::new(j.s, j.n1, j.n2, j.n3)
    }
}

impl From<ChannelSpec> for ChannelJson {
    fn from(c: ChannelSpec) -> Self {
        ChannelJson {
            s: c.s,
            n1: c.n1,
            n2: c.n2,
            n3: c.n3,
        }
    }
}

impl ChannelSpec {
    pub fn new(s: SymMatrix, n1: SymMatrix, n2: SymMatrix, n3: SymMatrix) -> Result<Self> {
        let n = s.dim();
        for m in [&n1, &n2, &n3] {
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
        let tol = ORDER_TOL * n3.spectral_norm().max(1.0);
        if !loewner_leq(&n1, &n2, tol)? || !loewner_leq(&n2, &n3, tol)? {
            return Err(Error::PreconditionViolated("need N1 ⪯ N2 ⪯ N3".into()));
        }
        Ok(Self { s, n1, n2, n3 })
    }

    /// All matrices `c·I` for scalars.
    pub fn scalar(s: f64, n1: f64, n2: f64, n3: f64) -> Result<Self> {
        Self::new(
            SymMatrix::scalar(s),
            SymMatrix::scalar(n1),
            SymMatrix::scalar(n2),
            SymMatrix::scalar(n3),
        )
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }
    pub fn s(&self) -> &SymMatrix {
        &self.s
    }
    pub fn n1(&self) -> &SymMatrix {
        &self.n1
    }
    pub fn n2(&self) -> &SymMatrix {
        &self.n2
    }
    pub fn n3(&self) -> &SymMatrix {
        &self.n3
    }

    fn noises(&self) -> [&SymMatrix; 3] {
        [&self.n1, &self.n2, &self.n3]
    }

    /// Extremal instance whose KKT system is the rescaled optimality system
    /// of `max R1 + μR2`: `N₀ = N₂`, noises `(N₁, N₃)`.
    pub fn extremal_instance(&self, mu: f64, scenario: Scenario) -> Result<ExtremalInstance> {
        scenario.check_mu(mu)?;
        let weights = match scenario {
            Scenario::One => vec![1.0 / (1.0 + mu), mu / (1.0 + mu)],
            Scenario::Two => vec![1.0 / mu, (mu - 1.0) / mu],
        };
        ExtremalInstance::new(
            self.s.clone(),
            self.n2.clone(),
            vec![self.n1.clone(), self.n3.clone()],
            weights,
        )
    }
}

/// Rate pair at one `B`; `r1`, `r2` are clamped at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rates {
    pub r1: f64,
    pub r2: f64,
    pub r1_raw: f64,
    pub r2_raw: f64,
}

fn feasibility_tol(spec: &ChannelSpec) -> f64 {
    1e-9 * spec.s.spectral_norm().max(1.0)
}

fn check_feasible(b: &SymMatrix, spec: &ChannelSpec) -> Result<()> {
    if b.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            left: spec.dim(),
            right: b.dim(),
        });
    }
    let tol = feasibility_tol(spec);
    if b.min_eigenvalue() < -tol || spec.s.sub(b).min_eigenvalue() < -tol {
        return Err(Error::InfeasibleB);
    }
    Ok(())
}

fn raw_rates(ld_b: [f64; 3], ld_n: [f64; 3], ld_s: [f64; 3], scenario: Scenario) -> (f64, f64) {
    let eav = match scenario {
        Scenario::One => 1,
        Scenario::Two => 2,
    };
    let r1 = 0.5 * (ld_b[0] - ld_n[0]) - 0.5 * (ld_b[eav] - ld_n[eav]);
    let r2 = 0.5 * (ld_s[1] - ld_b[1]) - 0.5 * (ld_s[2] - ld_b[2]);
    (r1, r2)
}

fn logdets_at(b: &SymMatrix, spec: &ChannelSpec) -> Result<[f64; 3]> {
    let [n1, n2, n3] = spec.noises();
    Ok([logdet(&b.add(n1))?, logdet(&b.add(n2))?, logdet(&b.add(n3))?])
}

pub fn rates_for_b(b: &SymMatrix, spec: &ChannelSpec, scenario: Scenario) -> Result<Rates> {
    check_feasible(b, spec)?;
    let ld_b = logdets_at(b, spec)?;
    let [n1, n2, n3] = spec.noises();
    let ld_n = [logdet(n1)?, logdet(n2)?, logdet(n3)?];
    let ld_s = logdets_at(&spec.s, spec)?;
    let (r1, r2) = raw_rates(ld_b, ld_n, ld_s, scenario);
    Ok(Rates {
        r1: r1.max(0.0),
        r2: r2.max(0.0),
        r1_raw: r1,
        r2_raw: r2,
    })
}

/// Largest achievable `R1`, attained at `B = S`.
pub fn r1_max(spec: &ChannelSpec, scenario: Scenario) -> f64 {
    rates_for_b(&spec.s, spec, scenario)
        .map(|r| r.r1)
        .expect("S is feasible for a validated spec")
}

/// Coefficients `c` with `R1 + μR2 = ½ Σ cⱼ log|B + Nⱼ| + const`.
fn objective_coefficients(mu: f64, scenario: Scenario) -> [f64; 3] {
    match scenario {
        Scenario::One => [1.0, -(1.0 + mu), mu],
        Scenario::Two => [1.0, -mu, mu - 1.0],
    }
}

/// `R1 + μR2` with raw rates.
pub fn weighted_objective(b: &SymMatrix, spec: &ChannelSpec, mu: f64, scenario: Scenario) -> Result<f64> {
    let r = rates_for_b(b, spec, scenario)?;
    Ok(r.r1_raw + mu * r.r2_raw)
}

/// `∇_B (R1 + μR2) = ½ Σ cⱼ (B + Nⱼ)⁻¹`.
pub fn objective_gradient(b: &SymMatrix, spec: &ChannelSpec, mu: f64, scenario: Scenario) -> Result<SymMatrix> {
    let c = objective_coefficients(mu, scenario);
    let mut g = SymMatrix::zeros(spec.dim());
    for (cj, nj) in c.iter().zip(spec.noises()) {
        if *cj != 0.0 {
            g = g.add(&b.add(nj).inverse_pd()?.scale(0.5 * cj));
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OptimizerOptions {
    pub max_iter: usize,
    /// Random starts on top of `S/2`, `0` and `S`.
    pub restarts: usize,
    pub armijo: f64,
    pub shrink: f64,
    /// Target projected-gradient norm, relative to `‖S‖·‖N₁⁻¹‖`.
    pub gtol: f64,
    /// Projected-gradient norm accepted once progress stalls.
    pub gtol_stall: f64,
    pub cert_tol: f64,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            restarts: 8,
            armijo: 1e-4,
            shrink: 0.5,
            gtol: 1e-12,
            gtol_stall: 1e-9,
            cert_tol: CERT_TOL,
            seed: 0,
        }
    }
}

/// Best point of a multistart run together with its certificate.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedOptimum {
    pub mu: f64,
    pub bstar: SymMatrix,
    pub objective: f64,
    pub cert: KktCertificate,
    /// Best start converged to the projected-gradient tolerance.
    pub converged: bool,
    /// Certificate residuals within `cert_tol · scale`.
    pub accepted: bool,
    pub iterations: usize,
    /// Best minus worst objective over the starts.
    pub multistart_spread: f64,
}

impl WeightedOptimum {
    pub fn require_accepted(self, tol: f64) -> Result<Self> {
        if self.cert.is_valid(tol) {
            Ok(self)
        } else {
            Err(Error::CertificateRejected {
                residual: self.cert.residuals.max(),
                limit: tol * self.cert.scale,
            })
        }
    }
}

/// Objective in whitened coordinates `B = R W R`, `R = S^{1/2}`, `0 ⪯ W ⪯ I`.
struct Whitened<'a> {
    spec: &'a ChannelSpec,
    root: SymMatrix,
    coef: [f64; 3],
}

impl Whitened<'_> {
    fn b(&self, w: &SymMatrix) -> SymMatrix {
        w.sandwich(&self.root)
    }

    fn value(&self, w: &SymMatrix) -> Result<f64> {
        let b = self.b(w);
        let mut v = 0.0;
        for (cj, nj) in self.coef.iter().zip(self.spec.noises()) {
            if *cj != 0.0 {
                v += 0.5 * cj * logdet(&b.add(nj))?;
            }
        }
        Ok(v)
    }

    fn gradient(&self, w: &SymMatrix) -> Result<SymMatrix> {
        let b = self.b(w);
        let mut g = SymMatrix::zeros(b.dim());
        for (cj, nj) in self.coef.iter().zip(self.spec.noises()) {
            if *cj != 0.0 {
                g = g.add(&b.add(nj).inverse_pd()?.scale(0.5 * cj));
            }
        }
        Ok(g.sandwich(&self.root))
    }
}

fn project_unit(w: &SymMatrix) -> SymMatrix {
    clip_eigenvalues(w, 0.0, 1.0)
}

struct Ascent {
    w: SymMatrix,
    value: f64,
    converged: bool,
    iterations: usize,
}

/// Projected gradient ascent with Barzilai-Borwein trial steps and Armijo
/// backtracking.
fn ascend(f: &Whitened, w0: SymMatrix, opts: &OptimizerOptions, scale: f64) -> Result<Ascent> {
    let mut w = project_unit(&w0);
    let mut val = f.value(&w)?;
    let mut g = f.gradient(&w)?;
    let mut step = 1.0 / g.frobenius().max(1e-300).max(1.0);
    let mut best_pg = f64::INFINITY;
    let mut since_best = 0usize;
    for it in 0..opts.max_iter {
        let pg = project_unit(&w.add(&g)).sub(&w).frobenius();
        if pg <= opts.gtol * scale {
            return Ok(Ascent {
                w,
                value: val,
                converged: true,
                iterations: it,
            });
        }
        if pg < 0.5 * best_pg {
            best_pg = pg;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= 50 && best_pg <= opts.gtol_stall * scale {
            return Ok(Ascent {
                w,
                value: val,
                converged: true,
                iterations: it,
            });
        }

        let floor = 1e-14 * (1.0 + val.abs());
        let mut t = step;
        let mut accepted = None;
        for _ in 0..80 {
            let cand = project_unit(&w.add(&g.scale(t)));
            let d = cand.sub(&w);
            let predicted = g.dot(&d);
            let cand_val = f.value(&cand)?;
            let ok = if opts.armijo * predicted <= floor {
                cand_val >= val - floor
            } else {
                cand_val >= val + opts.armijo * predicted
            };
            if ok {
                accepted = Some((cand, cand_val));
                break;
            }
            t *= opts.shrink;
        }
        let Some((w_new, val_new)) = accepted else {
            let converged = pg <= opts.gtol_stall * scale;
            return Ok(Ascent {
                w,
                value: val,
                converged,
                iterations: it,
            });
        };
        let g_new = f.gradient(&w_new)?;
        let s = w_new.sub(&w);
        let y = g.sub(&g_new);
        let sy = s.dot(&y);
        step = if sy > 0.0 {
            (s.dot(&s) / sy).clamp(1e-12, 1e12)
        } else {
            (t * 2.0).min(1e12)
        };
        w = w_new;
        val = val_new;
        g = g_new;
    }
    let pg = project_unit(&w.add(&g)).sub(&w).frobenius();
    Ok(Ascent {
        w,
        value: val,
        converged: pg <= opts.gtol_stall * scale,
        iterations: opts.max_iter,
    })
}

fn mu_stream(mu: f64) -> u64 {
    mu.to_bits()
}

/// Maximizes `R1 + μR2` over `0 ⪯ B ⪯ S` and certifies the maximizer.
pub fn optimize_weighted(
    mu: f64,
    spec: &ChannelSpec,
    scenario: Scenario,
    opts: &OptimizerOptions,
) -> Result<WeightedOptimum> {
    let inst = spec.extremal_instance(mu, scenario)?;
    let n = spec.dim();
    let f = Whitened {
        spec,
        root: sym_sqrt(&spec.s)?,
        coef: objective_coefficients(mu, scenario),
    };
    let scale = (spec.s.spectral_norm() * spec.n1.inverse_pd()?.spectral_norm()).max(1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(mu_stream(mu));
    let mut starts = vec![
        SymMatrix::identity(n).scale(0.5),
        SymMatrix::zeros(n),
        SymMatrix::identity(n),
    ];
    for _ in 0..opts.restarts {
        starts.push(random::unit_box(&mut rng, n));
    }

    let mut runs = Vec::with_capacity(starts.len());
    for w0 in starts {
        runs.push(ascend(&f, w0, opts, scale)?);
    }
    let worst = runs.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    let best = runs
        .into_iter()
        .max_by(|a, b| {
            (a.converged, a.value)
                .partial_cmp(&(b.converged, b.value))
                .expect("finite objective")
        })
        .expect("at least one start");
    if !best.converged {
        return Err(Error::NoConvergence {
            what: "weighted-sum ascent",
            iterations: opts.max_iter,
        });
    }
    let bstar = f.b(&best.w);
    let cert = recover_multipliers(&inst, &bstar)?;
    let accepted = cert.is_valid(opts.cert_tol);
    Ok(WeightedOptimum {
        mu,
        objective: weighted_objective(&bstar, spec, mu, scenario)?,
        bstar,
        cert,
        converged: best.converged,
        accepted,
        iterations: best.iterations,
        multistart_spread: best.value - worst,
    })
}

/// Largest `R1(B) + μR2(B) − R1(B*) − μR2(B*)` over `samples` random feasible `B`.
pub fn supporting_line_excess(
    opt: &WeightedOptimum,
    spec: &ChannelSpec,
    scenario: Scenario,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(mu_stream(opt.mu) ^ 0x5a5a_5a5a);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let b = random::between_zero_and(&mut rng, &spec.s);
        let v = weighted_objective(&b, spec, opt.mu, scenario)?;
        worst = worst.max(v - opt.objective);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionRow {
    pub mu: f64,
    pub bstar: SymMatrix,
    pub r1: f64,
    pub r2: f64,
    pub cert: KktCertificate,
    pub converged: bool,
    pub accepted: bool,
    /// Largest weighted-sum excess of a random feasible `B` over `B*`.
    pub support_excess: f64,
    pub multistart_spread: f64,
}

impl RegionRow {
    pub fn supporting_line_holds(&self) -> bool {
        self.support_excess <= SUPPORT_SLACK
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RowFailure {
    pub mu: f64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionBoundary {
    pub scenario: Scenario,
    pub rows: Vec<RegionRow>,
    pub failures: Vec<RowFailure>,
}

impl RegionBoundary {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.r1, r.r2)).collect()
    }

    /// `r1` nonincreasing and `r2` nondecreasing in `μ` within `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].r1 <= w[0].r1 + slack && w[1].r2 >= w[0].r2 - slack)
    }

    pub fn all_accepted(&self) -> bool {
        self.failures.is_empty() && self.rows.iter().all(|r| r.accepted && r.supporting_line_holds())
    }
}

fn trace_row(mu: f64, spec: &ChannelSpec, scenario: Scenario, opts: &OptimizerOptions) -> Result<RegionRow> {
    let opt = optimize_weighted(mu, spec, scenario, opts)?;
    let rates = rates_for_b(&opt.bstar, spec, scenario)?;
    let support_excess = supporting_line_excess(&opt, spec, scenario, SUPPORT_SAMPLES, opts.seed)?;
    Ok(RegionRow {
        mu,
        r1: rates.r1,
        r2: rates.r2,
        bstar: opt.bstar,
        cert: opt.cert,
        converged: opt.converged,
        accepted: opt.accepted,
        support_excess,
        multistart_spread: opt.multistart_spread,
    })
}

/// One weighted optimization per `μ`, in parallel; rows sorted by `μ`.
pub fn trace_region(
    spec: &ChannelSpec,
    scenario: Scenario,
    mu_grid: &[f64],
    opts: &OptimizerOptions,
) -> Result<RegionBoundary> {
    for &mu in mu_grid {
        scenario.check_mu(mu)?;
    }
    let mut mus = mu_grid.to_vec();
    mus.sort_by(f64::total_cmp);
    mus.dedup();
    let results: Vec<(f64, Result<RegionRow>)> = mus
        .par_iter()
        .map(|&mu| (mu, trace_row(mu, spec, scenario, opts)))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (mu, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(RowFailure {
                mu,
                error: e.to_string(),
            }),
        }
    }
    Ok(RegionBoundary {
        scenario,
        rows,
        failures,
    })
}

/// [`trace_region`] on `initial` followed by bisection of every `μ` interval
/// whose end points are more than `max_gap` apart in the rate plane, until
/// no such interval remains, the interval is shorter than `1e-9`, or
/// `max_rows` is reached.
pub fn trace_region_adaptive(
    spec: &ChannelSpec,
    scenario: Scenario,
    initial: &[f64],
    max_gap: f64,
    max_rows: usize,
    opts: &OptimizerOptions,
) -> Result<RegionBoundary> {
    let mut boundary = trace_region(spec, scenario, initial, opts)?;
    loop {
        let mut fresh: Vec<f64> = boundary
            .rows
            .windows(2)
            .filter(|w| {
                let d = (w[0].r1 - w[1].r1).hypot(w[0].r2 - w[1].r2);
                d > max_gap && w[1].mu - w[0].mu > 1e-9
            })
            .map(|w| 0.5 * (w[0].mu + w[1].mu))
            .collect();
        let room = max_rows.saturating_sub(boundary.rows.len());
        fresh.truncate(room);
        if fresh.is_empty() {
            return Ok(boundary);
        }
        let extra = trace_region(spec, scenario, &fresh, opts)?;
        boundary.rows.extend(extra.rows);
        boundary.failures.extend(extra.failures);
        boundary.rows.sort_by(|a, b| a.mu.total_cmp(&b.mu));
    }
}

/// Upper-right Pareto frontier, sorted by increasing `r1`.
pub fn pareto_frontier(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut front = Vec::new();
    let mut best_r2 = f64::NEG_INFINITY;
    for p in pts {
        if p.1 > best_r2 {
            best_r2 = p.1;
            front.push(p);
        }
    }
    front.reverse();
    front
}

fn point_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// Largest distance from a point of `a` to the polyline through `b`.
pub fn directed_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    a.iter()
        .map(|&p| {
            if b.len() == 1 {
                return (p.0 - b[0].0).hypot(p.1 - b[0].1);
            }
            b.windows(2)
                .map(|w| point_segment(p, w[0], w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two frontiers viewed as polylines.
pub fn hausdorff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    directed_distance(a, b).max(directed_distance(b, a))
}

fn logdet2(a: f64, b: f64, d: f64) -> f64 {
    (a * d - b * b).ln()
}

/// Rate-region frontier by exhaustive search over `B` (`n ≤ 2`).
///
/// `n = 1` sweeps `resolution + 1` points of `[0, S]`. `n = 2` sweeps
/// `B = S^{1/2} W S^{1/2}` with `W = R(θ) diag(w₁, w₂) R(θ)ᵀ` over
/// `resolution` angles in `[0, π/2)` and `resolution + 1` eigenvalues per
/// axis in `[0, 1]`.
pub fn brute_force_region(spec: &ChannelSpec, scenario: Scenario, resolution: usize) -> Result<Vec<(f64, f64)>> {
    let n = spec.dim();
    if n > 2 {
        return Err(Error::DimensionTooLarge(n));
    }
    if resolution == 0 {
        return Err(Error::PreconditionViolated("resolution must be positive".into()));
    }
    let [n1, n2, n3] = spec.noises();
    let ld_n = [logdet(n1)?, logdet(n2)?, logdet(n3)?];
    let ld_s = logdets_at(&spec.s, spec)?;
    let eval = |b: &[f64; 3]| -> (f64, f64) {
        let ld_b = if n == 1 {
            [n1, n2, n3].map(|m| (b[0] + m.get(0, 0)).ln())
        } else {
            [n1, n2, n3].map(|m| logdet2(b[0] + m.get(0, 0), b[1] + m.get(0, 1), b[2] + m.get(1, 1)))
        };
        let (r1, r2) = raw_rates(ld_b, ld_n, ld_s, scenario);
        (r1.max(0.0), r2.max(0.0))
    };

    let pts: Vec<(f64, f64)> = if n == 1 {
        let s = spec.s.get(0, 0);
        (0..=resolution)
            .map(|i| eval(&[s * i as f64 / resolution as f64, 0.0, 0.0]))
            .collect()
    } else {
        let root = sym_sqrt(&spec.s)?;
        let (ra, rb, rc) = (root.get(0, 0), root.get(0, 1), root.get(1, 1));
        let chunks: Vec<Vec<(f64, f64)>> = (0..resolution)
            .into_par_iter()
            .map(|k| {
                let th = std::f64::consts::FRAC_PI_2 * k as f64 / resolution as f64;
                let (c, s) = (th.cos(), th.sin());
                let mut local = Vec::new();
                for i in 0..=resolution {
                    let l1 = i as f64 / resolution as f64;
                    for j in 0..=resolution {
                        let l2 = j as f64 / resolution as f64;
                        let w11 = c * c * l1 + s * s * l2;
                        let w12 = c * s * (l1 - l2);
                        let w22 = s * s * l1 + c * c * l2;
                        let b11 = ra * ra * w11 + 2.0 * ra * rb * w12 + rb * rb * w22;
                        let b12 = ra * rb * w11 + (ra * rc + rb * rb) * w12 + rb * rc * w22;
                        let b22 = rb * rb * w11 + 2.0 * rb * rc * w12 + rc * rc * w22;
                        local.push(eval(&[b11, b12, b22]));
                    }
                }
                pareto_frontier(&local)
            })
            .collect();
        chunks.concat()
    };
    Ok(pareto_frontier(&pts))
}

/// Flattened row-major entries of a matrix, for CSV output.
pub fn flatten(m: &SymMatrix) -> Vec<f64> {
    m.row_major()
}

/// Diagonal spec helper: every matrix diagonal.
pub fn diagonal_spec(s: &[f64], n1: &[f64], n2: &[f64], n3: &[f64]) -> Result<ChannelSpec> {
    ChannelSpec::new(
        SymMatrix::diag(s),
        SymMatrix::diag(n1),
        SymMatrix::diag(n2),
        SymMatrix::diag(n3),
    )
}

/// Random spec with `N₁ ⪯ N₂ ⪯ N₃` built by adding PSD increments.
pub fn random_spec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ChannelSpec {
    let s = random::pd(rng, n, 0.2, 3.0);
    let n1 = random::pd(rng, n, 0.2, 2.0);
    let n2 = n1.add(&random::psd(rng, n, 2.0, 0.2));
    let n3 = n2.add(&random::psd(rng, n, 2.0, 0.2));
    ChannelSpec::new(s, n1, n2, n3).expect("increments keep the ordering")
}

/// Uniform `μ` grid `a, …, b` with `steps` points.
pub fn mu_grid(a: f64, b: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![a],
        _ => (0..steps)
            .map(|i| a + (b - a) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> ChannelSpec {
        ChannelSpec::scalar(1.0, 1.0, 2.0, 4.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rate_examples() {
        let spec = canonical();
        let s = SymMatrix::scalar(1.0);
        let z = SymMatrix::scalar(0.0);
        let r = rates_for_b(&s, &spec, Scenario::One).unwrap();
        assert!(close(r.r1, 0.5 * (4.0f64 / 3.0).ln(), 1e-15) && r.r2 == 0.0);
        let r = rates_for_b(&z, &spec, Scenario::One).unwrap();
        assert!(r.r1 == 0.0 && close(r.r2, 0.5 * 1.2f64.ln(), 1e-15));
        let r = rates_for_b(&s, &spec, Scenario::Two).unwrap();
        assert!(close(r.r1, 0.5 * 1.6f64.ln(), 1e-15));
        assert!(matches!(
            rates_for_b(&SymMatrix::scalar(1.5), &spec, Scenario::One),
            Err(Error::InfeasibleB)
        ));
    }

    #[test]
    fn r1_max_examples() {
        let spec = canonical();
        assert!(close(r1_max(&spec, Scenario::One), 0.143841036, 1e-8));
        assert!(close(r1_max(&spec, Scenario::Two), 0.235001, 1e-6));
        let flat = ChannelSpec::scalar(1.0, 2.0, 2.0, 4.0).unwrap();
        assert_eq!(r1_max(&flat, Scenario::One), 0.0);
    }

    #[test]
    fn spec_rejects_bad_ordering() {
        assert!(ChannelSpec::scalar(1.0, 2.0, 1.0, 4.0).is_err());
        assert!(ChannelSpec::scalar(-1.0, 1.0, 2.0, 4.0).is_err());
    }

    #[test]
    fn scenario_two_rejects_small_mu() {
        let spec = canonical();
        let e = optimize_weighted(0.5, &spec, Scenario::Two, &OptimizerOptions::default());
        assert!(matches!(e, Err(Error::InvalidWeight { scenario: 2, .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let spec = random_spec(&mut rng, 3);
            let b = random::between_zero_and(&mut rng, spec.s()).scale(0.9).add(&spec.s().scale(0.05));
            for sc in [Scenario::One, Scenario::Two] {
                let mu = 1.7;
                let g = objective_gradient(&b, &spec, mu, sc).unwrap();
                let dir = random::pd(&mut rng, 3, -1.0, 1.0);
                let h = 1e-6;
                let f = |t: f64| {
                    let r = rates_for_b(&b.add(&dir.scale(t)), &spec, sc).unwrap();
                    r.r1_raw + mu * r.r2_raw
                };
                let fd = (f(h) - f(-h)) / (2.0 * h);
                assert!(close(fd, g.dot(&dir), 1e-6), "{fd} vs {}", g.dot(&dir));
            }
        }
    }

    #[test]
    fn optimizer_endpoints() {
        let spec = canonical();
        let opts = OptimizerOptions::default();
        let o = optimize_weighted(0.0, &spec, Scenario::One, &opts).unwrap();
        assert!(close(o.bstar.get(0, 0), 1.0, 1e-12) && o.accepted);
        let o = optimize_weighted(50.0, &spec, Scenario::One, &opts).unwrap();
        assert!(o.bstar.get(0, 0).abs() < 1e-12 && o.accepted);
    }

    #[test]
    fn optimizer_matches_scalar_grid() {
        let spec = canonical();
        for mu in [1.0, 1.5, 1.8] {
            let o = optimize_weighted(mu, &spec, Scenario::One, &OptimizerOptions::default()).unwrap();
            let grid = 100_000;
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
            for i in 0..=grid {
                let b = i as f64 / grid as f64;
                let v = 0.5 * ((b + 1.0).ln() - (b + 2.0f64).ln() + 2.0f64.ln())
                    + mu * 0.5 * ((3.0f64).ln() - (b + 2.0).ln() - 5.0f64.ln() + (b + 4.0).ln());
                if v > best {
                    best = v;
                    arg = b;
                }
            }
            assert!(close(o.bstar.get(0, 0), arg, 1e-4), "μ={mu}: {} vs {arg}", o.bstar.get(0, 0));
            assert!(o.accepted);
        }
    }

    #[test]
    fn trace_single_corner() {
        let spec = canonical();
        let b = trace_region(&spec, Scenario::One, &[0.0], &OptimizerOptions::default()).unwrap();
        assert_eq!(b.rows.len(), 1);
        assert!(close(b.rows[0].r1, r1_max(&spec, Scenario::One), 1e-12));
        assert!(b.rows[0].r2.abs() < 1e-12);
    }

    #[test]
    fn traced_points_lie_on_scalar_front() {
        let spec = canonical();
        let grid = mu_grid(0.0, 4.0, 20);
        let b = trace_region(&spec, Scenario::One, &grid, &OptimizerOptions::default()).unwrap();
        assert!(b.all_accepted());
        assert!(b.is_monotone(1e-6));
        let brute = brute_force_region(&spec, Scenario::One, 100_000).unwrap();
        assert!(directed_distance(&b.points(), &brute) < 1e-4);
    }

    #[test]
    fn brute_force_examples() {
        let spec = canonical();
        let f = brute_force_region(&spec, Scenario::One, 10_000).unwrap();
        let first = f.first().unwrap();
        let last = f.last().unwrap();
        assert!(first.0.abs() < 1e-15 && close(first.1, 0.5 * 1.2f64.ln(), 1e-12));
        assert!(close(last.0, 0.5 * (4.0f64 / 3.0).ln(), 1e-12) && last.1.abs() < 1e-15);

        let zero = ChannelSpec::scalar(0.0, 1.0, 2.0, 4.0).unwrap();
        let origin = |f: Vec<(f64, f64)>| f.len() == 1 && f[0].0.abs() < 1e-15 && f[0].1.abs() < 1e-15;
        assert!(origin(brute_force_region(&zero, Scenario::One, 100).unwrap()));
        let same = ChannelSpec::scalar(1.0, 2.0, 2.0, 2.0).unwrap();
        assert!(origin(brute_force_region(&same, Scenario::One, 100).unwrap()));
        let big = ChannelSpec::new(
            SymMatrix::identity(3),
            SymMatrix::identity(3),
            SymMatrix::identity(3),
            SymMatrix::identity(3),
        )
        .unwrap();
        assert!(matches!(
            brute_force_region(&big, Scenario::One, 10),
            Err(Error::DimensionTooLarge(3))
        ));
    }

    #[test]
    fn pareto_and_hausdorff() {
        let f = pareto_frontier(&[(0.0, 1.0), (0.4, 0.4), (0.2, 0.2), (1.0, 0.0)]);
        assert_eq!(f, vec![(0.0, 1.0), (0.4, 0.4), (1.0, 0.0)]);
        let g = vec![(0.0, 1.0), (1.0, 0.0)];
        assert!(close(directed_distance(&g, &f), 0.0, 1e-15));
        assert!(close(hausdorff(&f, &g), 0.2 / 2f64.sqrt(), 1e-15));
    }
}
