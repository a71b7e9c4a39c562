//! Command-line front end: JSON in, CSV or JSON out, optional SVG.
//!
//! Exit status 0 on success, 1 on input or operational errors, 2 when a
//! checked inequality or certificate fails (a JSON violation report goes to
//! stderr).

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dmregion::{enumerate_region, DiscreteChannelSpec};
use crate::epi::{
    epi_sides, equality_condition, gamma_grid, path_sweep, EpiInput, EpiInstance, McParams,
    DEFAULT_GAMMA_POINTS,
};
use crate::error::Error;
use crate::extremal::{
    enhance, extremal_sides_conditional, kkt_residual, recover_multipliers, ExtremalInstance,
    KktCertificate, CERT_TOL,
};
use crate::gaussinfo::{immse_gradient, mi_z_given_output, mmse_x, mmse_z, GaussianMixture, LinearGaussChannel};
use crate::matcore::{random, SymMatrix};
use crate::secrecy::{
    brute_force_region, mu_grid, trace_region, ChannelSpec, OptimizerOptions, Scenario,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    EpiCheck,
    PathCheck,
    ExtremalCheck,
    Enhance,
    Region,
    RegionOracle,
    DmRegion,
    ImmseCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::EpiCheck => "epi-check",
            Command::PathCheck => "path-check",
            Command::ExtremalCheck => "extremal-check",
            Command::Enhance => "enhance",
            Command::Region => "region",
            Command::RegionOracle => "region-oracle",
            Command::DmRegion => "dm-region",
            Command::ImmseCheck => "immse-check",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vepi", version, about = "Matrix-parameter EPI, extremal inequality and secrecy-region checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Both sides of the generalized EPI for one instance.
    EpiCheck(CommonArgs),
    /// F and dF/dγ along the monotone path.
    PathCheck(CommonArgs),
    /// KKT certificate at B* and the extremal inequality on random (U, X).
    ExtremalCheck(CommonArgs),
    /// Enhanced noises from a certificate, with property checks.
    Enhance(CommonArgs),
    /// Secrecy region boundary by weighted-sum optimization.
    Region(CommonArgs),
    /// Secrecy region frontier by exhaustive search (n ≤ 2).
    RegionOracle(CommonArgs),
    /// Discrete degraded channel region by grid search.
    DmRegion(CommonArgs),
    /// I-MMSE gradient against finite differences.
    ImmseCheck(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Input JSON file.
    pub input: PathBuf,
    /// Output file (stdout when absent).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub scenario: u8,
    /// μ grid as "a:b:steps".
    #[arg(long)]
    pub mu_grid: Option<String>,
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = CERT_TOL)]
    pub tol_kkt: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_epi: f64,
    /// Replaces the computed right-hand side (error-path testing).
    #[arg(long, hide = true)]
    pub rhs_override: Option<f64>,
}

/// Everything one invocation needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub scenario: u8,
    pub mu_grid: Option<String>,
    pub resolution: Option<usize>,
    pub samples: Option<usize>,
    pub svg: Option<PathBuf>,
    pub threads: Option<usize>,
    pub tol_kkt: f64,
    pub tol_epi: f64,
    pub rhs_override: Option<f64>,
}

impl RunConfig {
    pub fn new(command: Command, input: impl Into<PathBuf>) -> Self {
        Self {
            command,
            input: input.into(),
            output: None,
            seed: 0,
            scenario: 1,
            mu_grid: None,
            resolution: None,
            samples: None,
            svg: None,
            threads: None,
            tol_kkt: CERT_TOL,
            tol_epi: 1e-9,
            rhs_override: None,
        }
    }

    fn from_args(command: Command, a: CommonArgs) -> Self {
        Self {
            command,
            input: a.input,
            output: a.output,
            seed: a.seed,
            scenario: a.scenario,
            mu_grid: a.mu_grid,
            resolution: a.resolution,
            samples: a.samples,
            svg: a.svg,
            threads: a.threads,
            tol_kkt: a.tol_kkt,
            tol_epi: a.tol_epi,
            rhs_override: a.rhs_override,
        }
    }
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        use CliCommand as C;
        let (cmd, args) = match cli.command {
            C::EpiCheck(a) => (Command::EpiCheck, a),
            C::PathCheck(a) => (Command::PathCheck, a),
            C::ExtremalCheck(a) => (Command::ExtremalCheck, a),
            C::Enhance(a) => (Command::Enhance, a),
            C::Region(a) => (Command::Region, a),
            C::RegionOracle(a) => (Command::RegionOracle, a),
            C::DmRegion(a) => (Command::DmRegion, a),
            C::ImmseCheck(a) => (Command::ImmseCheck, a),
        };
        RunConfig::from_args(cmd, args)
    }
}

/// Artifacts of one run before they are written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub body: String,
    pub svg: Option<String>,
    pub violation: Option<serde_json::Value>,
}

#[derive(Debug)]
enum Failure {
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Step<T> = std::result::Result<T, Failure>;

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Step<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn header(cfg: &RunConfig, extra: &str) -> String {
    format!(
        "# vepi {VERSION} command={} seed={} tol_kkt={:e} tol_epi={:e}{}\n",
        cfg.command.name(),
        cfg.seed,
        cfg.tol_kkt,
        cfg.tol_epi,
        extra
    )
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Runs one command, writing the body to `output` (or `stdout`) and the
/// violation report or error to `stderr`. Returns the exit status.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match cfg.threads {
        Some(t) if t > 0 => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(cfg)),
            Err(e) => Err(Failure::Input(format!("thread pool: {e}"))),
        },
        Some(_) => Err(Failure::Input("--threads must be positive".into())),
        None => dispatch(cfg),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(Failure::Input(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_INPUT;
        }
    };
    let written = match &cfg.output {
        Some(path) => std::fs::write(path, &outcome.body).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(outcome.body.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_INPUT;
    }
    if let (Some(path), Some(svg)) = (&cfg.svg, &outcome.svg) {
        if let Err(e) = std::fs::write(path, svg) {
            let _ = writeln!(stderr, "error: {}: {e}", path.display());
            return EXIT_INPUT;
        }
    }
    match outcome.violation {
        Some(report) => {
            let _ = writeln!(stderr, "{report}");
            EXIT_VIOLATION
        }
        None => EXIT_OK,
    }
}

fn dispatch(cfg: &RunConfig) -> Step<Outcome> {
    match cfg.command {
        Command::EpiCheck => epi_check(cfg),
        Command::PathCheck => path_check(cfg),
        Command::ExtremalCheck => extremal_check(cfg),
        Command::Enhance => enhance_cmd(cfg),
        Command::Region => region(cfg),
        Command::RegionOracle => region_oracle(cfg),
        Command::DmRegion => dm_region(cfg),
        Command::ImmseCheck => immse_check(cfg),
    }
}

/// `{"a", "nz", "b"}` for Gaussian input or `{"a", "nz", "mixture"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpiInstanceJson {
    pub a: SymMatrix,
    pub nz: SymMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<SymMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixture: Option<GaussianMixture>,
}

impl EpiInstanceJson {
    pub fn into_instance(self) -> crate::Result<EpiInstance> {
        let input = match (self.b, self.mixture) {
            (Some(b), None) => EpiInput::Gaussian(b),
            (None, Some(m)) => EpiInput::Mixture(m),
            _ => {
                return Err(Error::Malformed(
                    "exactly one of \"b\" and \"mixture\" is required".into(),
                ))
            }
        };
        EpiInstance::new(self.a, self.nz, input)
    }
}

fn epi_check(cfg: &RunConfig) -> Step<Outcome> {
    let j: EpiInstanceJson = read_json(&cfg.input)?;
    let inst = j.into_instance()?;
    let samples = cfg.samples.unwrap_or(McParams::default().samples);
    let mut sides = epi_sides(&inst, McParams { samples, seed: cfg.seed })?;
    if let Some(r) = cfg.rhs_override {
        sides.rhs = r;
        sides.bound = r;
    }
    let equality = match inst.input() {
        EpiInput::Gaussian(b) => format!("{:?}", equality_condition(inst.a(), b, inst.nz())?),
        EpiInput::Mixture(_) => "n/a".into(),
    };
    let mut body = header(cfg, &format!(" samples={samples}"));
    body.push_str("lhs,rhs,gap,gap_stderr,branch,equality\n");
    let branch = serde_json::to_value(sides.branch).unwrap_or_default();
    let _ = writeln!(
        body,
        "{},{},{},{},{},{}",
        sides.lhs,
        sides.rhs,
        sides.gap(),
        sides.gap_stderr,
        branch.as_str().unwrap_or(""),
        equality.replace(',', ";")
    );
    let ok = if sides.gap_stderr > 0.0 {
        sides.lhs - sides.bound + 4.0 * sides.gap_stderr >= 0.0
    } else {
        sides.holds(cfg.tol_epi)
    };
    let violation = (!ok).then(|| {
        json!({
            "command": "epi-check",
            "violation": "lhs below asserted bound",
            "lhs": sides.lhs,
            "bound": sides.bound,
            "gap_stderr": sides.gap_stderr,
            "tol_epi": cfg.tol_epi,
        })
    });
    Ok(Outcome {
        body,
        svg: None,
        violation,
    })
}

fn path_check(cfg: &RunConfig) -> Step<Outcome> {
    let j: EpiInstanceJson = read_json(&cfg.input)?;
    let inst = j.into_instance()?;
    inst.gaussian_cov()?;
    let grid = gamma_grid(cfg.resolution.unwrap_or(DEFAULT_GAMMA_POINTS));
    let sweep = path_sweep(&inst, &grid)?;
    let mut body = header(cfg, &format!(" points={}", grid.len()));
    body.push_str("gamma,f,f_deriv\n");
    for s in &sweep {
        let _ = writeln!(body, "{},{},{}", s.gamma, s.f_value, s.f_deriv);
    }
    let worst = sweep.iter().map(|s| s.f_deriv).fold(f64::INFINITY, f64::min);
    let (f0, f1) = (sweep[0].f_value, sweep.last().map(|s| s.f_value).unwrap_or(f64::NAN));
    let f_scale = f0.abs().max(1.0);
    let violation = (worst < -cfg.tol_epi * f_scale || f1 < f0 - cfg.tol_epi * f_scale).then(|| {
        json!({
            "command": "path-check",
            "violation": "F decreases along the path",
            "min_f_deriv": worst,
            "f0": f0,
            "f1": f1,
        })
    });
    let pts: Vec<(f64, f64)> = sweep.iter().map(|s| (s.gamma, s.f_value)).collect();
    Ok(Outcome {
        body,
        svg: cfg.svg.as_ref().map(|_| svg_plot(&pts, "F along the path", "gamma", "F")),
        violation,
    })
}

/// Extremal instance plus `B*` (and optionally multipliers).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremalInput {
    pub s: SymMatrix,
    pub n0: SymMatrix,
    pub nk: Vec<SymMatrix>,
    pub mu: Vec<f64>,
    pub bstar: SymMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<SymMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<SymMatrix>,
}

impl ExtremalInput {
    fn instance(&self) -> crate::Result<ExtremalInstance> {
        ExtremalInstance::new(self.s.clone(), self.n0.clone(), self.nk.clone(), self.mu.clone())
    }

    fn certificate(&self, inst: &ExtremalInstance) -> crate::Result<KktCertificate> {
        match (&self.m1, &self.m2) {
            (Some(m1), Some(m2)) => Ok(KktCertificate {
                residuals: kkt_residual(inst, &self.bstar, m1, m2)?,
                scale: inst.scale_at(&self.bstar)?,
                bstar: self.bstar.clone(),
                m1: m1.clone(),
                m2: m2.clone(),
                mu: self.mu.clone(),
            }),
            (None, None) => recover_multipliers(inst, &self.bstar),
            _ => Err(Error::Malformed("give both m1 and m2 or neither".into())),
        }
    }
}

/// Random `(U, X)` with `|U| ≤ 3`, zero means and `E[XXᵀ] ⪯ S`.
pub fn random_feasible_ux<R: Rng + ?Sized>(rng: &mut R, s: &SymMatrix) -> crate::Result<GaussianMixture> {
    let k = rng.random_range(1..=3usize);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let covs: Vec<SymMatrix> = (0..k).map(|_| random::between_zero_and(rng, s)).collect();
    GaussianMixture::centered(weights, covs)
}

fn extremal_check(cfg: &RunConfig) -> Step<Outcome> {
    let j: ExtremalInput = read_json(&cfg.input)?;
    let inst = j.instance()?;
    let cert = j.certificate(&inst)?;
    let samples = cfg.samples.unwrap_or(100);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (at_b, rhs) = extremal_sides_conditional(
        &inst,
        &cert.bstar,
        &GaussianMixture::gaussian(vec![0.0; inst.dim()], cert.bstar.clone())?,
    )?;
    let rhs = cfg.rhs_override.unwrap_or(rhs);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let ux = random_feasible_ux(&mut rng, inst.s())?;
        let (lhs, _) = extremal_sides_conditional(&inst, &cert.bstar, &ux)?;
        worst = worst.max(lhs - rhs);
    }
    let valid = cert.is_valid(cfg.tol_kkt);
    let ineq_ok = worst <= 1e-8 * rhs.abs().max(1.0);
    let report = json!({
        "certificate": cert,
        "valid": valid,
        "rhs": rhs,
        "lhs_at_bstar": at_b,
        "max_excess": worst,
        "samples": samples,
        "seed": cfg.seed,
        "tol_kkt": cfg.tol_kkt,
    });
    let violation = (!valid || !ineq_ok).then(|| {
        json!({
            "command": "extremal-check",
            "violation": if valid { "extremal inequality exceeded" } else { "certificate residuals above tolerance" },
            "residuals": cert.residuals,
            "scale": cert.scale,
            "max_excess": worst,
        })
    });
    Ok(Outcome {
        body: pretty(&report),
        svg: None,
        violation,
    })
}

/// Extremal instance plus certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnhanceInput {
    pub s: SymMatrix,
    pub n0: SymMatrix,
    pub nk: Vec<SymMatrix>,
    pub mu: Vec<f64>,
    pub certificate: KktCertificate,
}

fn enhance_cmd(cfg: &RunConfig) -> Step<Outcome> {
    let j: EnhanceInput = read_json(&cfg.input)?;
    let inst = ExtremalInstance::new(j.s, j.n0, j.nk, j.mu)?;
    let cert = crate::extremal::recheck(&inst, &j.certificate)?;
    if !cert.is_valid(cfg.tol_kkt) {
        return Ok(Outcome {
            body: pretty(&json!({ "certificate": cert })),
            svg: None,
            violation: Some(json!({
                "command": "enhance",
                "violation": "certificate residuals above tolerance",
                "residuals": cert.residuals,
                "scale": cert.scale,
            })),
        });
    }
    match enhance(&inst, &cert, 1e-8) {
        Ok(e) => Ok(Outcome {
            body: pretty(&e),
            svg: None,
            violation: None,
        }),
        Err(Error::EnhancementPropertyViolation(what)) => {
            let report = crate::extremal::enhance_unchecked(&inst, &cert)?;
            Ok(Outcome {
                body: pretty(&report),
                svg: None,
                violation: Some(json!({
                    "command": "enhance",
                    "violation": what,
                })),
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

/// Parses `"a:b:steps"`.
pub fn parse_mu_grid(text: &str) -> crate::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Malformed(format!("μ grid {text:?}: expected a:b:steps"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite()) || b < a || steps == 0 {
        return Err(bad());
    }
    Ok(mu_grid(a, b, steps))
}

fn region(cfg: &RunConfig) -> Step<Outcome> {
    let spec: ChannelSpec = read_json(&cfg.input)?;
    let scenario = Scenario::from_number(cfg.scenario)?;
    let default = match scenario {
        Scenario::One => "0:4:20",
        Scenario::Two => "1:5:20",
    };
    let grid_text = cfg.mu_grid.clone().unwrap_or_else(|| default.to_string());
    let grid = parse_mu_grid(&grid_text)?;
    let opts = OptimizerOptions {
        seed: cfg.seed,
        cert_tol: cfg.tol_kkt,
        ..OptimizerOptions::default()
    };
    let boundary = trace_region(&spec, scenario, &grid, &opts)?;
    let mut body = header(cfg, &format!(" scenario={} mu_grid={grid_text}", cfg.scenario));
    body.push_str("mu,r1_nats,r2_nats,r1_bits,r2_bits,kkt_stat,kkt_slack1,kkt_slack2,b_entries\n");
    for r in &boundary.rows {
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{},{}",
            r.mu,
            r.r1,
            r.r2,
            bits(r.r1),
            bits(r.r2),
            r.cert.residuals.stationarity,
            r.cert.residuals.slack1,
            r.cert.residuals.slack2,
            join(&r.bstar.row_major())
        );
    }
    let rejected: Vec<serde_json::Value> = boundary
        .rows
        .iter()
        .filter(|r| !r.accepted || !r.supporting_line_holds())
        .map(|r| {
            json!({
                "mu": r.mu,
                "accepted": r.accepted,
                "residuals": r.cert.residuals,
                "scale": r.cert.scale,
                "support_excess": r.support_excess,
            })
        })
        .collect();
    if !boundary.failures.is_empty() {
        return Err(Failure::Input(format!(
            "{} μ values failed: {}",
            boundary.failures.len(),
            serde_json::to_string(&boundary.failures).unwrap_or_default()
        )));
    }
    let violation = (!rejected.is_empty()).then(|| {
        json!({
            "command": "region",
            "violation": "boundary rows without a valid certificate or supporting line",
            "rows": rejected,
        })
    });
    Ok(Outcome {
        body,
        svg: cfg
            .svg
            .as_ref()
            .map(|_| svg_plot(&boundary.points(), "secrecy region boundary", "R1 (nats)", "R2 (nats)")),
        violation,
    })
}

fn region_oracle(cfg: &RunConfig) -> Step<Outcome> {
    let spec: ChannelSpec = read_json(&cfg.input)?;
    let scenario = Scenario::from_number(cfg.scenario)?;
    let resolution = cfg.resolution.unwrap_or(if spec.dim() == 1 { 10_000 } else { 100 });
    let front = brute_force_region(&spec, scenario, resolution)?;
    let mut body = header(cfg, &format!(" scenario={} resolution={resolution}", cfg.scenario));
    body.push_str("r1_nats,r2_nats,r1_bits,r2_bits\n");
    for (r1, r2) in &front {
        let _ = writeln!(body, "{},{},{},{}", r1, r2, bits(*r1), bits(*r2));
    }
    Ok(Outcome {
        body,
        svg: cfg
            .svg
            .as_ref()
            .map(|_| svg_plot(&front, "exhaustive frontier", "R1 (nats)", "R2 (nats)")),
        violation: None,
    })
}

fn dm_region(cfg: &RunConfig) -> Step<Outcome> {
    let spec: DiscreteChannelSpec = read_json(&cfg.input)?;
    let scenario = Scenario::from_number(cfg.scenario)?;
    let k = cfg.resolution.unwrap_or(8);
    let front = enumerate_region(&spec, scenario, k)?;
    let mut body = header(
        cfg,
        &format!(" scenario={} resolution=1/{k} u_card={}", cfg.scenario, spec.u_card()),
    );
    body.push_str("r1_nats,r2_nats,pu,pxu\n");
    for p in &front {
        let pxu: Vec<f64> = p.pxu.iter().flatten().copied().collect();
        let _ = writeln!(body, "{},{},{},{}", p.r1, p.r2, join(&p.pu), join(&pxu));
    }
    let pts: Vec<(f64, f64)> = front.iter().map(|p| (p.r1, p.r2)).collect();
    Ok(Outcome {
        body,
        svg: cfg
            .svg
            .as_ref()
            .map(|_| svg_plot(&pts, "discrete region frontier", "R1 (nats)", "R2 (nats)")),
        violation: None,
    })
}

/// `{"d", "bx", "nz"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImmseInput {
    pub d: SymMatrix,
    pub bx: SymMatrix,
    pub nz: SymMatrix,
}

fn immse_check(cfg: &RunConfig) -> Step<Outcome> {
    let j: ImmseInput = read_json(&cfg.input)?;
    let ch = LinearGaussChannel::new(j.d.clone(), j.bx.clone(), j.nz.clone())?;
    let grad = immse_gradient(&ch)?;
    let n = ch.dim();
    let h = 1e-6;
    let mi_at = |d: nalgebra::DMatrix<f64>| -> crate::Result<f64> {
        // General (possibly non-symmetric) D: I(Z; DX+Z) = ½ log|DBDᵀ+N| − ½ log|DBDᵀ|.
        let sig = &d * j.bx.as_matrix() * d.transpose();
        let out = SymMatrix::from_matrix(&sig + j.nz.as_matrix());
        let sig = SymMatrix::from_matrix(sig);
        Ok(0.5 * (crate::matcore::logdet(&out)? - crate::matcore::logdet(&sig)?))
    };
    let mi = mi_z_given_output(&ch)?;
    let cx = mmse_x(&ch);
    let cz = mmse_z(&ch)?;
    // D Cov(X|·) D = Cov(Z|·)
    let cc = SymMatrix::from_matrix(j.d.mul(&cx) * j.d.as_matrix()).sub(&cz).max_abs();
    let mut body = header(cfg, &format!(" fd_step=1e-6 mutual_information={mi} cc_identity_error={cc}"));
    body.push_str("i,j,analytic,finite_difference,abs_error\n");
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            let mut plus = j.d.as_matrix().clone();
            let mut minus = plus.clone();
            plus[(r, c)] += h;
            minus[(r, c)] -= h;
            let fd = (mi_at(plus)? - mi_at(minus)?) / (2.0 * h);
            let err = (fd - grad[(r, c)]).abs();
            worst = worst.max(err);
            let _ = writeln!(body, "{r},{c},{},{fd},{err}", grad[(r, c)]);
        }
    }
    let violation = (worst > 1e-5 || cc > 1e-10 * cz.max_abs().max(1.0)).then(|| {
        json!({
            "command": "immse-check",
            "violation": "gradient or covariance identity mismatch",
            "max_gradient_error": worst,
            "cc_identity_error": cc,
        })
    });
    Ok(Outcome {
        body,
        svg: None,
        violation,
    })
}

/// Minimal SVG: frame, axes labels, one polyline with point markers.
pub fn svg_plot(points: &[(f64, f64)], title: &str, xlabel: &str, ylabel: &str) -> String {
    let (w, h, m) = (640.0, 480.0, 60.0);
    let fin: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &fin {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if fin.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 <= 0.0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let esc = |s: &str| s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {} L{m} {m} M{m} {} L{} {}" stroke="black" fill="none"/>"#,
        h - m,
        h - m,
        w - m,
        h - m
    );
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#, w / 2.0, esc(title));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, w / 2.0, h - 15.0, esc(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        esc(ylabel)
    );
    for (v, x, y, anchor) in [
        (x0, px(x0), h - m + 18.0, "start"),
        (x1, px(x1), h - m + 18.0, "end"),
    ] {
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="10">{v:.4e}</text>"#);
    }
    for (v, y) in [(y0, py(y0)), (y1, py(y1))] {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{y:.2}" text-anchor="end" font-size="10">{v:.4e}</text>"#, m - 4.0);
    }
    let path: Vec<String> = fin.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(s, r#"<polyline points="{}" stroke="steelblue" stroke-width="2" fill="none"/>"#, path.join(" "));
    for &(x, y) in &fin {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="steelblue"/>"#, px(x), py(y));
    }
    s.push_str("</svg>\n");
    s
}

/// Entry point used by the `vepi` binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let cfg = RunConfig::from(cli);
    run(&cfg, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
