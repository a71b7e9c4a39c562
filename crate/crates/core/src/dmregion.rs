//! Single-letter secrecy regions of a degraded discrete memoryless broadcast
//! channel `X → Y1 → Y2 → Y3`, evaluated by grid search over `(U, X)`.
//!
//! Scenario 1: `R1 = I(X;Y1|U) − I(X;Y2|U)`, `R2 = I(U;Y2) − I(U;Y3)`.
//! Scenario 2 subtracts `I(X;Y3|U)` in `R1` instead. Rates are in nats.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::secrecy::Scenario;

/// Largest admissible probability grid.
pub const GRID_LIMIT: u128 = 10_000_000;

const ROW_SUM_TOL: f64 = 1e-12;

type Stochastic = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DiscreteJson", into = "DiscreteJson")]
pub struct DiscreteChannelSpec {
    w1: Stochastic,
    d12: Stochastic,
    d23: Stochastic,
    /// `p(y2|x)`
    w2: Stochastic,
    /// `p(y3|x)`
    w3: Stochastic,
}

#[derive(Serialize, Deserialize)]
struct DiscreteJson {
    w1: Stochastic,
    d12: Stochastic,
    d23: Stochastic,
}

impl TryFrom<DiscreteJson> for DiscreteChannelSpec {
    type Error = Error;
    fn try_from(j: DiscreteJson) -> Result<Self> {
        DiscreteChannelSpec::new(j.w1, j.d12, j.d23)
    }
}

impl From<DiscreteChannelSpec> for DiscreteJson {
    fn from(c: DiscreteChannelSpec) -> Self {
        DiscreteJson {
            w1: c.w1,
            d12: c.d12,
            d23: c.d23,
        }
    }
}

fn check_stochastic(name: &str, m: &Stochastic, rows: Option<usize>) -> Result<usize> {
    let bad = |why: String| Err(Error::InvalidDistribution(format!("{name}: {why}")));
    if m.is_empty() {
        return bad("no rows".into());
    }
    if let Some(r) = rows {
        if m.len() != r {
            return bad(format!("{} rows, expected {r}", m.len()));
        }
    }
    let cols = m[0].len();
    for (i, row) in m.iter().enumerate() {
        if row.len() != cols || cols == 0 {
            return bad(format!("row {i} has {} entries, expected {cols}", row.len()));
        }
        if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return bad(format!("row {i} has a negative or non-finite entry"));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return bad(format!("row {i} sums to {sum}"));
        }
    }
    Ok(cols)
}

fn compose(a: &Stochastic, b: &Stochastic) -> Stochastic {
    a.iter()
        .map(|row| {
            (0..b[0].len())
                .map(|k| row.iter().zip(b).map(|(p, brow)| p * brow[k]).sum())
                .collect()
        })
        .collect()
}

impl DiscreteChannelSpec {
    pub fn new(w1: Stochastic, d12: Stochastic, d23: Stochastic) -> Result<Self> {
        let y1 = check_stochastic("w1", &w1, None)?;
        let y2 = check_stochastic("d12", &d12, Some(y1))?;
        check_stochastic("d23", &d23, Some(y2))?;
        let w2 = compose(&w1, &d12);
        let w3 = compose(&w2, &d23);
        Ok(Self {
            w1,
            d12,
            d23,
            w2,
            w3,
        })
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Stochastic {
        vec![vec![1.0 - p, p], vec![p, 1.0 - p]]
    }

    pub fn x_card(&self) -> usize {
        self.w1.len()
    }

    /// `|U| = |X| + 1`.
    pub fn u_card(&self) -> usize {
        self.x_card() + 1
    }

    pub fn w1(&self) -> &Stochastic {
        &self.w1
    }
    pub fn d12(&self) -> &Stochastic {
        &self.d12
    }
    pub fn d23(&self) -> &Stochastic {
        &self.d23
    }

    fn channels(&self) -> [&Stochastic; 3] {
        [&self.w1, &self.w2, &self.w3]
    }
}

fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|x| -x * x.ln()).sum()
}

fn push_through(px: &[f64], w: &Stochastic) -> Vec<f64> {
    let mut out = vec![0.0; w[0].len()];
    for (p, row) in px.iter().zip(w) {
        if *p > 0.0 {
            for (o, q) in out.iter_mut().zip(row) {
                *o += p * q;
            }
        }
    }
    out
}

/// `H(Y|X)` under input `px`.
fn cond_entropy(px: &[f64], w: &Stochastic) -> f64 {
    px.iter().zip(w).map(|(p, row)| p * entropy(row)).sum()
}

/// Per-input-distribution quantities for the three receivers.
#[derive(Debug, Clone)]
struct Profile {
    /// `p(yⱼ)` under the input distribution
    outputs: [Vec<f64>; 3],
    /// `H(Yⱼ)` under the input distribution
    h_out: [f64; 3],
    /// `I(X;Yⱼ)` under the input distribution
    mi: [f64; 3],
}

fn profile(spec: &DiscreteChannelSpec, px: &[f64]) -> Profile {
    let chans = spec.channels();
    let outputs = chans.map(|w| push_through(px, w));
    let h_out = [entropy(&outputs[0]), entropy(&outputs[1]), entropy(&outputs[2])];
    let mut mi = [0.0; 3];
    for j in 0..3 {
        mi[j] = h_out[j] - cond_entropy(px, chans[j]);
    }
    Profile {
        outputs,
        h_out,
        mi,
    }
}

/// Mutual informations of one `(U, X)` choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuxInformation {
    /// `I(X;Yⱼ|U)` for `j = 1, 2, 3`
    pub x_given_u: [f64; 3],
    /// `I(U;Yⱼ)` for `j = 1, 2, 3`
    pub u: [f64; 3],
}

impl AuxInformation {
    /// `(R1, R2)` before clamping.
    pub fn raw_rates(&self, scenario: Scenario) -> (f64, f64) {
        let eav = match scenario {
            Scenario::One => 1,
            Scenario::Two => 2,
        };
        (
            self.x_given_u[0] - self.x_given_u[eav],
            self.u[1] - self.u[2],
        )
    }
}

fn combine(pu: &[f64], profiles: &[&Profile]) -> AuxInformation {
    let mut x_given_u = [0.0; 3];
    let mut u = [0.0; 3];
    for j in 0..3 {
        let mut mix = vec![0.0; profiles[0].outputs[j].len()];
        let mut h_cond = 0.0;
        for (p, prof) in pu.iter().zip(profiles) {
            if *p > 0.0 {
                x_given_u[j] += p * prof.mi[j];
                h_cond += p * prof.h_out[j];
                for (m, q) in mix.iter_mut().zip(&prof.outputs[j]) {
                    *m += p * q;
                }
            }
        }
        u[j] = entropy(&mix) - h_cond;
    }
    AuxInformation { x_given_u, u }
}

fn check_distribution(name: &str, p: &[f64], len: usize) -> Result<()> {
    if p.len() != len {
        return Err(Error::InvalidDistribution(format!(
            "{name} has {} entries, expected {len}",
            p.len()
        )));
    }
    if p.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("{name} has a negative entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("{name} sums to {sum}")));
    }
    Ok(())
}

/// Exact informations for `p(u)` and `p(x|u)` (one row per `u`).
pub fn aux_information(spec: &DiscreteChannelSpec, pu: &[f64], pxu: &[Vec<f64>]) -> Result<AuxInformation> {
    if pu.is_empty() || pu.len() > spec.u_card() {
        return Err(Error::InvalidDistribution(format!(
            "|U| = {} outside 1..={}",
            pu.len(),
            spec.u_card()
        )));
    }
    check_distribution("p(u)", pu, pu.len())?;
    if pxu.len() != pu.len() {
        return Err(Error::InvalidDistribution(format!(
            "{} conditionals for |U| = {}",
            pxu.len(),
            pu.len()
        )));
    }
    for (i, px) in pxu.iter().enumerate() {
        check_distribution(&format!("p(x|u={i})"), px, spec.x_card())?;
    }
    let profiles: Vec<Profile> = pxu.iter().map(|px| profile(spec, px)).collect();
    let refs: Vec<&Profile> = profiles.iter().collect();
    Ok(combine(pu, &refs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteRates {
    pub r1: f64,
    pub r2: f64,
    pub r1_raw: f64,
    pub r2_raw: f64,
}

pub fn rates_for_aux(
    spec: &DiscreteChannelSpec,
    pu: &[f64],
    pxu: &[Vec<f64>],
    scenario: Scenario,
) -> Result<DiscreteRates> {
    let (r1, r2) = aux_information(spec, pu, pxu)?.raw_rates(scenario);
    Ok(DiscreteRates {
        r1: r1.max(0.0),
        r2: r2.max(0.0),
        r1_raw: r1,
        r2_raw: r2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteRatePoint {
    pub r1: f64,
    pub r2: f64,
    pub pu: Vec<f64>,
    pub pxu: Vec<Vec<f64>>,
}

/// All points of the simplex `{p ∈ ℝᵈ : p ≥ 0, Σp = 1}` with coordinates in `(1/k)ℤ`.
pub fn simplex_grid(dim: usize, k: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == dim {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / k as f64).collect());
            cur.pop();
            return;
        }
        for c in (0..=left).rev() {
            cur.push(c);
            rec(dim, left - c, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if dim > 0 && k > 0 {
        rec(dim, k, k, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

fn binom(n: u128, r: u128) -> u128 {
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Number of `(p(u), p(x|u))` grid points at resolution `1/k`.
pub fn grid_size(x_card: usize, u_card: usize, k: usize) -> u128 {
    let simplex = |d: usize| binom((k + d - 1) as u128, (d - 1) as u128);
    let px = simplex(x_card);
    (0..u_card).fold(simplex(u_card), |acc, _| acc.saturating_mul(px))
}

fn pareto_points(mut pts: Vec<DiscreteRatePoint>) -> Vec<DiscreteRatePoint> {
    pts.sort_by(|a, b| {
        b.r1.total_cmp(&a.r1)
            .then(b.r2.total_cmp(&a.r2))
    });
    let mut front: Vec<DiscreteRatePoint> = Vec::new();
    let mut best_r2 = f64::NEG_INFINITY;
    for p in pts {
        if p.r2 > best_r2 {
            best_r2 = p.r2;
            front.push(p);
        }
    }
    front.reverse();
    front
}

/// Pareto frontier over the grid of `p(u)` and every `p(x|u)` at
/// resolution `1/k`, with `|U| = |X| + 1`.
pub fn enumerate_region(
    spec: &DiscreteChannelSpec,
    scenario: Scenario,
    k: usize,
) -> Result<Vec<DiscreteRatePoint>> {
    enumerate_region_with(spec, scenario, k, spec.u_card())
}

/// [`enumerate_region`] with an explicit `|U|`.
pub fn enumerate_region_with(
    spec: &DiscreteChannelSpec,
    scenario: Scenario,
    k: usize,
    u_card: usize,
) -> Result<Vec<DiscreteRatePoint>> {
    if k == 0 || u_card == 0 || u_card > spec.u_card() {
        return Err(Error::PreconditionViolated(format!(
            "need resolution ≥ 1 and 1 ≤ |U| ≤ {}",
            spec.u_card()
        )));
    }
    let points = grid_size(spec.x_card(), u_card, k);
    if points > GRID_LIMIT {
        return Err(Error::GridTooLarge {
            points,
            limit: GRID_LIMIT,
        });
    }
    let xs = simplex_grid(spec.x_card(), k);
    let us = simplex_grid(u_card, k);
    let profiles: Vec<Profile> = xs.iter().map(|px| profile(spec, px)).collect();
    let m = xs.len();
    let tuples = m.pow(u_card as u32);

    let fronts: Vec<Vec<DiscreteRatePoint>> = (0..tuples)
        .into_par_iter()
        .map(|t| {
            let mut idx = Vec::with_capacity(u_card);
            let mut rest = t;
            for _ in 0..u_card {
                idx.push(rest % m);
                rest /= m;
            }
            let refs: Vec<&Profile> = idx.iter().map(|&i| &profiles[i]).collect();
            let pxu: Vec<Vec<f64>> = idx.iter().map(|&i| xs[i].clone()).collect();
            let local: Vec<DiscreteRatePoint> = us
                .iter()
                .map(|pu| {
                    let (r1, r2) = combine(pu, &refs).raw_rates(scenario);
                    DiscreteRatePoint {
                        r1: r1.max(0.0),
                        r2: r2.max(0.0),
                        pu: pu.clone(),
                        pxu: pxu.clone(),
                    }
                })
                .collect();
            pareto_points(local)
        })
        .collect();
    Ok(pareto_points(fronts.into_iter().flatten().collect()))
}

/// Largest amount by which a point of `coarse` exceeds the staircase of
/// `fine` (0 when every coarse point is weakly dominated).
pub fn refinement_excess(coarse: &[DiscreteRatePoint], fine: &[DiscreteRatePoint]) -> f64 {
    coarse
        .iter()
        .map(|c| {
            fine.iter()
                .map(|f| (c.r1 - f.r1).max(c.r2 - f.r2).max(0.0))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Binary entropy in nats.
pub fn h2(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc_cascade() -> DiscreteChannelSpec {
        let b = DiscreteChannelSpec::bsc(0.1);
        DiscreteChannelSpec::new(b.clone(), b.clone(), b).unwrap()
    }

    #[test]
    fn validation() {
        let b = DiscreteChannelSpec::bsc(0.1);
        assert!(DiscreteChannelSpec::new(vec![vec![0.5, 0.6]], b.clone(), b.clone()).is_err());
        assert!(DiscreteChannelSpec::new(b.clone(), vec![vec![1.0]], b.clone()).is_err());
        assert!(DiscreteChannelSpec::new(vec![vec![1.5, -0.5]], b.clone(), b).is_err());
    }

    #[test]
    fn bsc_cascade_trivial_u() {
        let spec = bsc_cascade();
        let r = rates_for_aux(&spec, &[1.0], &[vec![0.5, 0.5]], Scenario::One).unwrap();
        let expect = h2(0.18) - h2(0.1);
        assert!((r.r1 - expect).abs() < 1e-12);
        assert!(r.r2.abs() < 1e-15);
    }

    #[test]
    fn identical_first_link_kills_r1() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let b = DiscreteChannelSpec::bsc(0.2);
        let spec = DiscreteChannelSpec::new(b.clone(), id, b).unwrap();
        for px in simplex_grid(2, 6) {
            let r = rates_for_aux(&spec, &[0.5, 0.5], &[px.clone(), vec![0.3, 0.7]], Scenario::One).unwrap();
            assert!(r.r1_raw.abs() < 1e-15);
        }
        let f = enumerate_region(&spec, Scenario::One, 4).unwrap();
        assert!(f.iter().all(|p| p.r1.abs() < 1e-15));
    }

    #[test]
    fn constant_third_output() {
        let b = DiscreteChannelSpec::bsc(0.1);
        let spec = DiscreteChannelSpec::new(b.clone(), b, vec![vec![1.0], vec![1.0]]).unwrap();
        let pu = [0.3, 0.7];
        let pxu = [vec![0.9, 0.1], vec![0.2, 0.8]];
        let info = aux_information(&spec, &pu, &pxu).unwrap();
        assert!(info.u[2].abs() < 1e-15);
        let r = rates_for_aux(&spec, &pu, &pxu, Scenario::One).unwrap();
        assert!((r.r2 - info.u[1]).abs() < 1e-15);
    }

    #[test]
    fn grid_counts() {
        assert_eq!(simplex_grid(3, 4).len() as u128, binom(6, 2));
        assert_eq!(grid_size(2, 3, 8), 45 * 9 * 9 * 9);
        let b = DiscreteChannelSpec::bsc(0.1);
        let spec = DiscreteChannelSpec::new(b.clone(), b.clone(), b).unwrap();
        assert!(matches!(
            enumerate_region(&spec, Scenario::One, 1000),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn data_processing_on_grid() {
        let spec = bsc_cascade();
        let xs = simplex_grid(2, 5);
        for pu in simplex_grid(2, 5) {
            for a in &xs {
                for b in &xs {
                    let i = aux_information(&spec, &pu, &[a.clone(), b.clone()]).unwrap();
                    assert!(i.u[0] >= i.u[1] - 1e-15 && i.u[1] >= i.u[2] - 1e-15);
                }
            }
        }
    }

    #[test]
    fn relabeling_u_preserves_rates() {
        let spec = bsc_cascade();
        let f = enumerate_region(&spec, Scenario::One, 4).unwrap();
        for p in &f {
            let mut pu = p.pu.clone();
            let mut pxu = p.pxu.clone();
            pu.reverse();
            pxu.reverse();
            let r = rates_for_aux(&spec, &pu, &pxu, Scenario::One).unwrap();
            assert!((r.r1 - p.r1).abs() < 1e-12 && (r.r2 - p.r2).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_is_monotone() {
        let b = DiscreteChannelSpec::bsc(0.05);
        let spec = DiscreteChannelSpec::new(b, DiscreteChannelSpec::bsc(0.1), DiscreteChannelSpec::bsc(0.2)).unwrap();
        let coarse = enumerate_region(&spec, Scenario::One, 4).unwrap();
        let fine = enumerate_region(&spec, Scenario::One, 8).unwrap();
        assert!(refinement_excess(&coarse, &fine) <= 1e-9);
    }

    #[test]
    fn scenario_two_dominates_in_r1() {
        let spec = bsc_cascade();
        let xs = simplex_grid(2, 4);
        for a in &xs {
            for b in &xs {
                let pxu = [a.clone(), b.clone()];
                let r1 = rates_for_aux(&spec, &[0.5, 0.5], &pxu, Scenario::One).unwrap();
                let r2 = rates_for_aux(&spec, &[0.5, 0.5], &pxu, Scenario::Two).unwrap();
                assert!(r2.r1 >= r1.r1 - 1e-15);
            }
        }
    }
}
