use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use selfsim::continuation::{extend_and_classify, first_certified, Classification, ExtendConfig};
use selfsim::ground_state::{rescaling_check, solve_q, GroundStateLimits};
use selfsim::io::{self, Document, Metadata, ProfileFile};
use selfsim::pruefer::{theta_trace, Anchor};
use selfsim::shooting::{assemble, geometric_grid, scan_row, ScanRow, Search, ShootConfig, ShootResult};
use selfsim::verify::run_checks;
use selfsim::{Error, Params, Regime};

const EXIT_NOT_FOUND: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "selfsim", version, about = "Self-similar profiles of the supercritical focusing wave equation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Integrator tolerance
    #[arg(long, global = true, env = "SELFSIM_TOL", default_value_t = 1e-11)]
    tol: f64,
    /// Match radius
    #[arg(long, global = true, env = "SELFSIM_RHO0", default_value_t = 0.9)]
    rho0: f64,
    /// Seed offset from the origin
    #[arg(long, global = true, env = "SELFSIM_DELTA0", default_value_t = 1e-4)]
    delta0: f64,
    /// Seed offset from the light cone
    #[arg(long, global = true, env = "SELFSIM_DELTA1", default_value_t = 1e-5)]
    delta1: f64,
    /// Output format of the primary output
    #[arg(long, global = true, env = "SELFSIM_FORMAT", value_enum)]
    format: Option<Format>,
    /// Write the primary output here instead of stdout
    #[arg(long, short, global = true, env = "SELFSIM_OUTPUT")]
    output: Option<PathBuf>,
}

#[derive(Args, Clone, Copy)]
struct Dims {
    /// Space dimension
    #[arg(long = "N", env = "SELFSIM_N")]
    n: u32,
    /// Nonlinearity exponent
    #[arg(long, env = "SELFSIM_P")]
    p: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Locate the regular profile with n_index + 1 crossings of the singular solution
    Solve {
        #[command(flatten)]
        dims: Dims,
        #[arg(long = "n")]
        n_index: u32,
        #[arg(long, default_value_t = 0.1)]
        c_lo: f64,
        #[arg(long, default_value_t = 1e3)]
        c_hi: f64,
        /// Total grid size (default: 64 points per decade)
        #[arg(long)]
        grid_points: Option<usize>,
        /// Also write the assembled profile as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Tabulate the left family over a grid of c
    Scan {
        #[command(flatten)]
        dims: Dims,
        /// Comma separated values of c
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["c_lo", "c_hi"])]
        c_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.1)]
        c_lo: f64,
        #[arg(long, default_value_t = 1e3)]
        c_hi: f64,
        #[arg(long, default_value_t = 16)]
        per_decade: usize,
        /// Worker threads
        #[arg(long, env = "SELFSIM_JOBS", default_value_t = 1)]
        jobs: usize,
    },
    /// Continue a right-family profile past the light cone and classify it
    Extend {
        #[command(flatten)]
        dims: Dims,
        /// u(1) of a subcritical profile
        #[arg(long, group = "param")]
        b: Option<f64>,
        /// u'(1) of a critical profile
        #[arg(long, group = "param", allow_negative_numbers = true)]
        a: Option<f64>,
        /// A `solve` JSON result to continue
        #[arg(long, group = "param")]
        from: Option<PathBuf>,
        /// End of the exterior run in s = ln rho (default 25, or 10 in the critical case)
        #[arg(long, env = "SELFSIM_S_MAX")]
        s_max: Option<f64>,
        /// Also write the exterior trajectory as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Solve for the ground state Q and report its limits
    GroundState {
        #[command(flatten)]
        dims: Dims,
        #[arg(long, default_value_t = 1e4)]
        r_max: f64,
        /// Values of c for the rescaling deviation
        #[arg(long, value_delimiter = ',', default_value = "100,1000")]
        rescale_c: Vec<f64>,
        #[arg(long = "M", default_value_t = 5.0)]
        m: f64,
        /// Also write the trace as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the invariant checks for one parameter pair
    Verify {
        #[command(flatten)]
        dims: Dims,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    NotFound(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoRootInBracket(_) => Failure::NotFound(e.to_string()),
            Error::Domain(_) | Error::Regime(_) | Error::Parse { .. } | Error::Json(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("I/O error: {e}"))
    }
}

type Outcome = std::result::Result<u8, Failure>;

#[derive(Serialize, Deserialize)]
struct SolveMeta {
    #[serde(rename = "N")]
    n: u32,
    p: f64,
    tol: f64,
    rho0: f64,
    delta0: f64,
    delta1: f64,
    grid: Search<f64>,
}

#[derive(Serialize)]
struct RunMeta {
    #[serde(rename = "N")]
    n: u32,
    p: f64,
    tol: f64,
    regime: Regime,
}

#[derive(Serialize)]
struct ExtendBody {
    right_param: f64,
    u_at_one: f64,
    s_max: f64,
    #[serde(flatten)]
    report: selfsim::AsymptoticsReport<f64>,
    barrier_certified_at: Option<f64>,
}

#[derive(Serialize)]
struct GroundBody {
    limits: GroundStateLimits<f64>,
    rescaling: Vec<(f64, f64)>,
    #[serde(rename = "M")]
    m: f64,
}

#[derive(Serialize)]
struct VerifyBody {
    checks: Vec<selfsim::verify::Check>,
    passed: bool,
}

#[derive(Serialize)]
struct ScanBody {
    rows: Vec<ScanRow<f64>>,
}

fn emit(common: &Common, text: &str) -> std::io::Result<()> {
    match &common.output {
        Some(p) => fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<B: Serialize, M: Serialize>(body: B, meta: M) -> Result<String, Failure> {
    io::to_json(&Document::new(body, meta)).map_err(Failure::from)
}

fn params(d: Dims) -> Result<Params<f64>, Failure> {
    Ok(Params::new(d.n, d.p)?)
}

fn shoot_config(c: &Common) -> Result<ShootConfig<f64>, Failure> {
    let mut cfg = ShootConfig::new(c.tol);
    cfg.rho0 = c.rho0;
    cfg.delta0 = c.delta0;
    cfg.delta1 = c.delta1;
    cfg.validate()?;
    Ok(cfg)
}

fn base_meta(d: Dims, c: &Common) -> Metadata {
    vec![("N".into(), d.n.to_string()), ("p".into(), format!("{}", d.p)), ("tol".into(), format!("{:e}", c.tol))]
}

fn solve(c: &Common, dims: Dims, n_index: u32, search: Search<f64>, csv: Option<&Path>) -> Outcome {
    let prm = params(dims)?;
    prm.require_shootable()?;
    let cfg = shoot_config(c)?;
    let res: ShootResult<f64> = selfsim::find_profile(&prm, n_index, &search, &cfg)?;
    if let Some(path) = csv {
        let asm = assemble(&prm, res.c, res.right_param, &cfg)?;
        let d0 = asm.left.first().x;
        let lt = theta_trace(&prm, &asm.left, Anchor::left(d0))?;
        let at = 1.0 - cfg.delta1;
        let anchor = match prm.regime {
            Regime::CriticalRange => Anchor::right_critical(&prm, res.right_param, at),
            _ => Anchor::right_subcritical(&prm, res.right_param, at),
        };
        let rt = theta_trace(&prm, &asm.right, anchor)?;
        let mut rows = io::profile_rows(&prm, &asm.left, Some(&lt));
        let mut right = io::profile_rows(&prm, &asm.right, Some(&rt));
        right.reverse();
        rows.extend(right);
        let mut metadata = base_meta(dims, c);
        metadata.push(("family".into(), "assembled".into()));
        metadata.push(("c".into(), io::fmt_num(res.c)));
        metadata.push(("right_param".into(), io::fmt_num(res.right_param)));
        metadata.push(("rho0".into(), io::fmt_num(cfg.rho0)));
        io::write_profile(&ProfileFile { metadata, rows }, path)?;
    }
    let meta =
        SolveMeta { n: dims.n, p: dims.p, tol: c.tol, rho0: c.rho0, delta0: c.delta0, delta1: c.delta1, grid: search };
    emit(c, &json(&res, meta)?)?;
    Ok(0)
}

fn scan(c: &Common, dims: Dims, grid: Vec<f64>, jobs: usize) -> Outcome {
    let prm = params(dims)?;
    prm.require_shootable()?;
    let cfg = shoot_config(c)?;
    if grid.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Failure::Usage("c values must be finite and nonnegative".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    let rows: Vec<ScanRow<f64>> = pool.install(|| grid.par_iter().map(|&x| scan_row(&prm, x, &cfg)).collect());
    let text = match c.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut meta = base_meta(dims, c);
            meta.push(("rho0".into(), format!("{}", cfg.rho0)));
            io::scan_to_csv(&meta, &rows)
        }
        Format::Json => json(ScanBody { rows }, RunMeta { n: dims.n, p: dims.p, tol: c.tol, regime: prm.regime })?,
    };
    emit(c, &text)?;
    Ok(0)
}

fn read_right_param(path: &Path) -> Result<(u32, f64, f64), Failure> {
    let text = fs::read_to_string(path)?;
    let doc: Document<ShootResult<f64>, SolveMeta> = io::from_json(&text)?;
    Ok((doc.metadata.n, doc.metadata.p, doc.body.right_param))
}

fn extend(c: &Common, dims: Dims, param: f64, s_max: Option<f64>, csv: Option<&Path>) -> Outcome {
    let prm = params(dims)?;
    prm.require_shootable()?;
    let s_max = s_max.unwrap_or(if prm.regime == Regime::CriticalRange { 10.0 } else { 25.0 });
    let mut ecfg = ExtendConfig::new(c.tol);
    ecfg.delta1 = c.delta1;
    let (traj, report) = extend_and_classify(&prm, param, s_max, &ecfg)?;
    if let Some(path) = csv {
        let mut metadata = base_meta(dims, c);
        metadata.push(("family".into(), "exterior".into()));
        metadata.push(("right_param".into(), io::fmt_num(param)));
        io::write_profile(&ProfileFile { metadata, rows: io::profile_rows(&prm, &traj, None) }, path)?;
    }
    let u_at_one = if prm.regime == Regime::CriticalRange { prm.b0 } else { param };
    let body = ExtendBody {
        right_param: param,
        u_at_one,
        s_max,
        report,
        barrier_certified_at: first_certified(&prm, &traj).map(|s| s.rho),
    };
    emit(c, &json(body, RunMeta { n: dims.n, p: dims.p, tol: c.tol, regime: prm.regime })?)?;
    Ok(if report.classification == Classification::Inconclusive { EXIT_NOT_FOUND } else { 0 })
}

fn ground_state(c: &Common, dims: Dims, r_max: f64, rescale_c: &[f64], m: f64, csv: Option<&Path>) -> Outcome {
    let prm = params(dims)?;
    let trace = solve_q(&prm, r_max, c.tol)?;
    let limits = trace.limits(&prm);
    if let Some(path) = csv {
        let mut meta = base_meta(dims, c);
        meta.push(("r_max".into(), format!("{r_max}")));
        fs::write(path, io::ground_state_to_csv(&meta, &trace))?;
    }
    let rescaling =
        rescale_c.iter().map(|&x| Ok((x, rescaling_check(&prm, x, m, c.tol)?))).collect::<Result<Vec<_>, Error>>()?;
    let text = match c.format.unwrap_or(Format::Json) {
        Format::Json => {
            json(GroundBody { limits, rescaling, m }, RunMeta { n: dims.n, p: dims.p, tol: c.tol, regime: prm.regime })?
        }
        Format::Csv => io::ground_state_to_csv(&base_meta(dims, c), &trace),
    };
    emit(c, &text)?;
    Ok(0)
}

fn verify(c: &Common, dims: Dims) -> Outcome {
    let prm = params(dims)?;
    let checks = run_checks(&prm, c.tol);
    let passed = checks.iter().all(|k| k.passed);
    let text = match c.format {
        Some(Format::Json) => {
            json(VerifyBody { checks, passed }, RunMeta { n: dims.n, p: dims.p, tol: c.tol, regime: prm.regime })?
        }
        _ => {
            let mut s = String::new();
            for k in &checks {
                s.push_str(&format!("{} {}: {}\n", if k.passed { "PASS" } else { "FAIL" }, k.name, k.detail));
            }
            s
        }
    };
    emit(c, &text)?;
    Ok(if passed { 0 } else { EXIT_NUMERICAL })
}

fn dispatch(cli: Cli) -> Outcome {
    let c = &cli.common;
    match cli.cmd {
        Cmd::Solve { dims, n_index, c_lo, c_hi, grid_points, csv } => {
            solve(c, dims, n_index, Search { c_lo, c_hi, grid_points }, csv.as_deref())
        }
        Cmd::Scan { dims, c_grid, c_lo, c_hi, per_decade, jobs } => {
            let grid = match c_grid {
                Some(g) => g,
                None => {
                    if !(c_lo > 0.0 && c_hi > c_lo) {
                        return Err(Failure::Usage("need 0 < c_lo < c_hi".into()));
                    }
                    geometric_grid(c_lo, c_hi, per_decade.max(1))
                }
            };
            scan(c, dims, grid, jobs)
        }
        Cmd::Extend { dims, b, a, from, s_max, csv } => {
            let param = match (b, a, from) {
                (Some(b), None, None) => b,
                (None, Some(a), None) => a,
                (None, None, Some(path)) => {
                    let (n, p, q) = read_right_param(&path)?;
                    if n != dims.n || p != dims.p {
                        return Err(Failure::Usage(format!("{} was computed for N = {n}, p = {p}", path.display())));
                    }
                    q
                }
                _ => return Err(Failure::Usage("give exactly one of --b, --a, --from".into())),
            };
            let prm = params(dims)?;
            match (prm.regime, b, a) {
                (Regime::CriticalRange, Some(_), _) => return Err(Failure::Usage("critical regime: use --a".into())),
                (Regime::SubcriticalRange, _, Some(_)) => {
                    return Err(Failure::Usage("subcritical regime: use --b".into()))
                }
                _ => {}
            }
            extend(c, dims, param, s_max, csv.as_deref())
        }
        Cmd::GroundState { dims, r_max, rescale_c, m, csv } => {
            ground_state(c, dims, r_max, &rescale_c, m, csv.as_deref())
        }
        Cmd::Verify { dims } => verify(c, dims),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::NotFound(m) => (EXIT_NOT_FOUND, m),
                Failure::Numerical(m) => (EXIT_NUMERICAL, m),
            };
            eprintln!("selfsim: {msg}");
            ExitCode::from(code)
        }
    }
}
