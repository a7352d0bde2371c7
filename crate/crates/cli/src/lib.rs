//! Command-line front end for `polylane`.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure, 4 a
//! violated invariant (for instance more than one solution in `unique`).

pub mod config;

use std::ffi::OsString;
use std::fs;

use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use polylane::capacity::{
    capacity_sweep, coeff_recursion, conjugate, default_gamma, nonexistence_exponents, CutoffSpec,
};
use polylane::classify::{verdict, RationalTuple, RegionVerdict};
use polylane::continuation::{limit_profile, trace_branch, BranchOptions};
use polylane::io::to_json_pretty;
use polylane::shooting::{multistart_search, NewtonOptions, SearchBox, Shooter};
use polylane::uniqueness::uniqueness_scan_with;
use polylane::{Error, ProblemParams, RadialGrid};

pub use config::{Cli, Command, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

/// Allowed relative deviation of the fitted capacity slope.
pub const SLOPE_TOL: f64 = 0.02;

/// Slack on the blow-up normalization `≥ 1/2`.
pub const NORMALIZATION_SLACK: f64 = 1e-6;

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
    Invariant(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Numerical(_) => EXIT_NUMERICAL,
            Failure::Invariant(_) => EXIT_INVARIANT,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) | Failure::Invariant(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParams(_)
            | Error::InvalidGrid(_)
            | Error::InvalidArgument(_)
            | Error::OriginRadius(_)
            | Error::Parse(_) => Failure::Validation(msg),
            Error::UniquenessViolated { .. } | Error::ScheduleViolation(_) => Failure::Invariant(msg),
            _ => Failure::Numerical(msg),
        }
    }
}

/// Report and an optional invariant failure raised after it was written.
pub struct Outcome {
    pub report: Value,
    pub violation: Option<String>,
}

/// Parse `argv`, run, print the report, return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let cfg = match RunConfig::resolve(cli.command, &cli.flags) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_VALIDATION;
        }
    };
    match execute(&cfg) {
        Ok(outcome) => {
            let doc = document(&cfg, outcome.report);
            let text = to_json_pretty(&doc).unwrap_or_else(|e| format!("{{\"error\": \"{e}\"}}\n"));
            print!("{text}");
            if let Some(path) = cfg.out_path("report.json") {
                if let Err(e) = fs::write(&path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return EXIT_NUMERICAL;
                }
            }
            match outcome.violation {
                Some(msg) => {
                    eprintln!("invariant violated: {msg}");
                    EXIT_INVARIANT
                }
                None => EXIT_OK,
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

/// `{command, config, result, timestamp}`; only `timestamp` varies between
/// identical runs.
fn document(cfg: &RunConfig, result: Value) -> Value {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "command": cfg.command.name(),
        "config": serde_json::to_value(cfg).unwrap_or(Value::Null),
        "result": result,
        "timestamp": stamp,
    })
}

/// Run the configured pipeline inside a pool of `cfg.threads` workers.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, Failure> {
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir).map_err(|e| Failure::Numerical(format!("cannot create {}: {e}", dir.display())))?;
        fs::write(dir.join("config.txt"), cfg.echo()).map_err(io_failure)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    pool.install(|| match cfg.command {
        Command::Classify => classify(cfg),
        Command::Solve => solve(cfg),
        Command::Branch => branch(cfg),
        Command::Blowup => blowup(cfg),
        Command::Capacity => capacity(cfg),
        Command::Unique => unique(cfg),
    })
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::Numerical(format!("i/o error: {e}"))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Numerical(e.to_string()))
}

fn write_artifact(cfg: &RunConfig, name: &str, text: &str) -> Result<Option<String>, Failure> {
    match cfg.out_path(name) {
        Some(path) => {
            fs::write(&path, text).map_err(io_failure)?;
            Ok(Some(name.to_string()))
        }
        None => Ok(None),
    }
}

fn params(cfg: &RunConfig) -> Result<ProblemParams, Failure> {
    let p = ProblemParams {
        n: cfg.n,
        alpha: cfg.alpha,
        beta: cfg.beta,
        p: cfg.p_f64(),
        q: cfg.q_f64(),
        t: cfg.t,
        theta: cfg.theta,
    };
    p.validate()?;
    Ok(p)
}

fn shooter(cfg: &RunConfig, params: ProblemParams) -> Result<Shooter, Failure> {
    let grid = RadialGrid::uniform(cfg.grid, 1.0)?;
    if !(cfg.tol > 0.0) {
        return Err(Failure::Validation(format!("tol must be positive (got {})", cfg.tol)));
    }
    let opts = NewtonOptions {
        tol: cfg.tol,
        ..NewtonOptions::default()
    };
    Ok(Shooter::new(params).grid(grid).options(opts))
}

fn search_box(cfg: &RunConfig, dim: usize) -> Result<SearchBox, Failure> {
    Ok(SearchBox::uniform(dim, cfg.box_lo, cfg.box_hi)?)
}

fn classify(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let report = match &cfg.tuples {
        None => {
            let t = RationalTuple::parse(
                &cfg.n.to_string(),
                &cfg.alpha.to_string(),
                &cfg.beta.to_string(),
                &cfg.p,
                &cfg.q,
            )?;
            to_value(&verdict(&t))?
        }
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
            let mut tuples = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with('N'))
                .map(RationalTuple::parse_csv_row)
                .collect::<polylane::Result<Vec<_>>>()?;
            tuples.sort_by(|a, b| {
                (a.n, a.alpha, a.beta, &a.p, &a.q).cmp(&(b.n, b.alpha, b.beta, &b.p, &b.q))
            });
            let verdicts: Vec<RegionVerdict> = tuples.par_iter().map(verdict).collect();
            to_value(&verdicts)?
        }
    };
    Ok(Outcome {
        report,
        violation: None,
    })
}

fn solve(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let params = params(cfg)?;
    let shooter = shooter(cfg, params)?;
    let found = multistart_search(&shooter, &search_box(cfg, params.dim())?, cfg.starts, cfg.seed)?;
    if found.is_empty() {
        return Err(Failure::Numerical(format!(
            "no nontrivial solution from {} starts",
            cfg.starts
        )));
    }
    let mut summaries = Vec::with_capacity(found.len());
    for (k, rec) in found.iter().enumerate() {
        let path = write_artifact(cfg, &format!("solution_{k}.csv"), &rec.profile.to_csv())?;
        summaries.push(rec.summary(path));
    }
    Ok(Outcome {
        report: json!({ "count": found.len(), "solutions": to_value(&summaries)? }),
        violation: None,
    })
}

fn trace(cfg: &RunConfig) -> Result<polylane::continuation::Branch, Failure> {
    let params = params(cfg)?;
    params.validate_homotopy()?;
    let shooter = shooter(cfg, params)?;
    Ok(trace_branch(&shooter, cfg.t_max, &BranchOptions::default())?)
}

fn branch(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let br = trace(cfg)?;
    let csv = write_artifact(cfg, "branch.csv", &br.to_csv())?;
    let last = br.points.last().ok_or_else(|| Failure::Numerical("empty branch".into()))?;
    let t_peak = br.points.iter().map(|p| p.t).fold(0.0, f64::max);
    Ok(Outcome {
        report: json!({
            "stop": to_value(&br.stop)?,
            "points": br.points.len(),
            "growth_factor": br.growth_factor(),
            "t_peak": t_peak,
            "final_t": last.t,
            "final": to_value(&last.record.summary(None))?,
            "branch_csv_path": csv,
        }),
        violation: None,
    })
}

fn blowup(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let br = trace(cfg)?;
    let lp = limit_profile(&br, cfg.tail, cfg.window, cfg.min_growth)?;
    let report = lp.to_report();
    let csv = write_artifact(cfg, "limit_profile.csv", &lp.profile().to_csv())?;
    let normalized = report.normalization.iter().all(|v| *v >= 0.5 - NORMALIZATION_SLACK);
    let decreasing = |xs: &[f64]| xs.windows(2).all(|w| w[1] <= w[0]);
    let shifts = decreasing(&report.shift_u) && decreasing(&report.shift_v);
    let violation = match (normalized, shifts) {
        (true, true) => None,
        (false, _) => Some("rescaled normalization below 1/2".to_string()),
        (_, false) => Some("rescaled shifts not decreasing along the tail".to_string()),
    };
    Ok(Outcome {
        report: json!({
            "growth_factor": br.growth_factor(),
            "stop": to_value(&br.stop)?,
            "blowup": to_value(&report)?,
            "normalization_ok": normalized,
            "shifts_decreasing": shifts,
            "profile_csv_path": csv,
        }),
        violation,
    })
}

fn capacity(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let params = params(cfg)?;
    let r_exp = conjugate(params.q)?;
    let order = 2 * params.beta;
    let gamma = match cfg.gamma {
        Some(g) => g,
        None => default_gamma(&params)?,
    };
    let spec = CutoffSpec::new(gamma)?;
    if cfg.r_count < 2 || !(cfg.r_min > 0.0 && cfg.r_max > cfg.r_min) {
        return Err(Failure::Validation(format!(
            "need r_count >= 2 and 0 < r_min < r_max (got {}, {}, {})",
            cfg.r_count, cfg.r_min, cfg.r_max
        )));
    }
    let ratio = (cfg.r_max / cfg.r_min).ln();
    let radii: Vec<f64> = (0..cfg.r_count)
        .map(|i| cfg.r_min * (ratio * i as f64 / (cfg.r_count - 1) as f64).exp())
        .collect();
    let rep = capacity_sweep(&spec, order, r_exp, params.n, &radii)?;
    let csv = write_artifact(cfg, "capacity.csv", &rep.to_csv())?;
    let table = coeff_recursion(params.beta, params.n)?;
    let coeffs: Vec<String> = table.coeffs.iter().map(|c| c.to_string()).collect();
    let exps = RationalTuple::parse(
        &cfg.n.to_string(),
        &cfg.alpha.to_string(),
        &cfg.beta.to_string(),
        &cfg.p,
        &cfg.q,
    )
    .and_then(|t| nonexistence_exponents(&t))
    .ok();
    let rel = rep.relative_slope_error();
    let violation = (rel > SLOPE_TOL).then(|| format!("fitted slope off by {:.3}%", 100.0 * rel));
    Ok(Outcome {
        report: json!({
            "order": order,
            "r": r_exp,
            "gamma": gamma,
            "fit": to_value(&rep)?,
            "relative_slope_error": rel,
            "coefficients": coeffs,
            "decay_exponents": exps.map(|(a, b)| vec![a.to_string(), b.to_string()]),
            "capacity_csv_path": csv,
        }),
        violation,
    })
}

fn unique(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let params = params(cfg)?;
    let shooter = shooter(cfg, params)?;
    let scan = uniqueness_scan_with(&shooter, &search_box(cfg, params.dim())?, cfg.starts, cfg.seed)?;
    let violation = match scan.check() {
        Err(e) => Some(e.to_string()),
        Ok(()) => scan
            .pattern
            .as_ref()
            .filter(|p| !p.in_schedule)
            .map(|p| p.summary()),
    };
    let mut report = to_value(&scan)?;
    if let Some(p) = &scan.pattern {
        report["pattern_summary"] = Value::String(p.summary());
    }
    Ok(Outcome { report, violation })
}
