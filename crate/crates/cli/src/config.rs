//! Run configuration: flags, `POLYLANE_*` environment variables, a
//! `key = value` file, then defaults, in that order of precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use polylane::classify::parse_rational_f64 as parse_number;
use polylane::params::default_theta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Exact region verdict for (N, alpha, beta, p, q)
    Classify,
    /// Multistart shooting for nontrivial solutions
    Solve,
    /// Trace the t-homotopy branch from the trivial solution
    Branch,
    /// Blow-up rescaling along the branch tail
    Blowup,
    /// Capacity sweep and decay-slope fit
    Capacity,
    /// Uniqueness scan for (alpha, beta) = (2, 1)
    Unique,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Solve => "solve",
            Command::Branch => "branch",
            Command::Blowup => "blowup",
            Command::Capacity => "capacity",
            Command::Unique => "unique",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "polylane", version, about = "Radial polyharmonic Lane-Emden systems on the unit ball")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

/// Every option is a raw string here; typing happens after merging.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// key = value configuration file
    #[arg(long, global = true, env = "POLYLANE_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long = "N", global = true, env = "POLYLANE_N")]
    pub n: Option<String>,
    #[arg(long, global = true, env = "POLYLANE_ALPHA")]
    pub alpha: Option<String>,
    #[arg(long, global = true, env = "POLYLANE_BETA")]
    pub beta: Option<String>,
    #[arg(long, global = true, env = "POLYLANE_P")]
    pub p: Option<String>,
    #[arg(long, global = true, env = "POLYLANE_Q")]
    pub q: Option<String>,
    #[arg(long, global = true, env = "POLYLANE_T")]
    pub t: Option<String>,
    #[arg(long, global = true, env = "POLYLANE_THETA")]
    pub theta: Option<String>,
    /// Report grid nodes on [0, 1]
    #[arg(long, global = true, env = "POLYLANE_GRID")]
    pub grid: Option<String>,
    /// Newton tolerance on the boundary residual
    #[arg(long, global = true, env = "POLYLANE_TOL")]
    pub tol: Option<String>,
    #[arg(long, global = true, env = "POLYLANE_SEED")]
    pub seed: Option<String>,
    /// Output directory for the config echo, report and CSV files
    #[arg(long, global = true, env = "POLYLANE_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "POLYLANE_STARTS")]
    pub starts: Option<String>,
    #[arg(long = "box-lo", global = true, env = "POLYLANE_BOX_LO")]
    pub box_lo: Option<String>,
    #[arg(long = "box-hi", global = true, env = "POLYLANE_BOX_HI")]
    pub box_hi: Option<String>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true, env = "POLYLANE_THREADS")]
    pub threads: Option<String>,
    #[arg(long = "t-max", global = true, env = "POLYLANE_T_MAX")]
    pub t_max: Option<String>,
    #[arg(long, global = true, env = "POLYLANE_TAIL")]
    pub tail: Option<String>,
    #[arg(long, global = true, env = "POLYLANE_WINDOW")]
    pub window: Option<String>,
    #[arg(long = "min-growth", global = true, env = "POLYLANE_MIN_GROWTH")]
    pub min_growth: Option<String>,
    #[arg(long, global = true, env = "POLYLANE_GAMMA")]
    pub gamma: Option<String>,
    #[arg(long = "r-min", global = true, env = "POLYLANE_R_MIN")]
    pub r_min: Option<String>,
    #[arg(long = "r-max", global = true, env = "POLYLANE_R_MAX")]
    pub r_max: Option<String>,
    #[arg(long = "r-count", global = true, env = "POLYLANE_R_COUNT")]
    pub r_count: Option<String>,
    /// CSV file of N,alpha,beta,p,q rows for a classify sweep
    #[arg(long, global = true, env = "POLYLANE_TUPLES")]
    pub tuples: Option<PathBuf>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(rename = "N")]
    pub n: u32,
    pub alpha: usize,
    pub beta: usize,
    /// Kept as written so that `classify` stays exact.
    pub p: String,
    pub q: String,
    pub t: f64,
    pub theta: f64,
    pub grid: usize,
    pub tol: f64,
    pub seed: u64,
    pub starts: usize,
    pub box_lo: f64,
    pub box_hi: f64,
    pub threads: usize,
    pub t_max: f64,
    pub tail: usize,
    pub window: f64,
    pub min_growth: f64,
    pub gamma: Option<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub r_count: usize,
    pub tuples: Option<PathBuf>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "command", "N", "alpha", "beta", "p", "q", "t", "theta", "grid", "tol", "seed", "starts", "box_lo",
    "box_hi", "threads", "t_max", "tail", "window", "min_growth", "gamma", "r_min", "r_max", "r_count",
    "tuples", "out",
];

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", no + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(format!("config line {}: unknown key {k:?}", no + 1));
        }
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

fn typed<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, String> {
    raw.trim()
        .parse()
        .map_err(|_| format!("invalid value for {key}: {raw:?}"))
}

impl RunConfig {
    pub fn resolve(command: Command, flags: &Flags) -> Result<Self, String> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        if let Some(c) = file.get("command") {
            if c != command.name() {
                return Err(format!("config is for {c:?}, not {:?}", command.name()));
            }
        }
        let pick = |key: &str, flag: &Option<String>| -> Option<String> {
            flag.clone().or_else(|| file.get(key).cloned()).filter(|s| !s.is_empty())
        };
        fn get<T: std::str::FromStr>(key: &str, v: Option<String>, default: T) -> Result<T, String> {
            v.map(|s| typed(key, &s)).unwrap_or(Ok(default))
        }
        let p = pick("p", &flags.p).unwrap_or_else(|| "2".into());
        let q = pick("q", &flags.q).unwrap_or_else(|| "2".into());
        let pf = parse_number(&p).map_err(|e| format!("p: {e}"))?;
        let qf = parse_number(&q).map_err(|e| format!("q: {e}"))?;
        let theta = match pick("theta", &flags.theta) {
            Some(s) => typed("theta", &s)?,
            None => default_theta(pf, qf),
        };
        let path = |key: &str, flag: &Option<PathBuf>| flag.clone().or_else(|| file.get(key).map(PathBuf::from));
        Ok(Self {
            command,
            n: get("N", pick("N", &flags.n), 5)?,
            alpha: get("alpha", pick("alpha", &flags.alpha), 1)?,
            beta: get("beta", pick("beta", &flags.beta), 1)?,
            p,
            q,
            t: get("t", pick("t", &flags.t), 0.0)?,
            theta,
            grid: get("grid", pick("grid", &flags.grid), polylane::grid::DEFAULT_NODES)?,
            tol: get("tol", pick("tol", &flags.tol), 1e-8)?,
            seed: get("seed", pick("seed", &flags.seed), 0)?,
            starts: get("starts", pick("starts", &flags.starts), 100)?,
            box_lo: get("box_lo", pick("box_lo", &flags.box_lo), 1.0)?,
            box_hi: get("box_hi", pick("box_hi", &flags.box_hi), 1e5)?,
            threads: get("threads", pick("threads", &flags.threads), 0)?,
            t_max: get("t_max", pick("t_max", &flags.t_max), 10.0)?,
            tail: get("tail", pick("tail", &flags.tail), 6)?,
            window: get("window", pick("window", &flags.window), 10.0)?,
            min_growth: get("min_growth", pick("min_growth", &flags.min_growth), 1e3)?,
            gamma: pick("gamma", &flags.gamma).map(|s| typed("gamma", &s)).transpose()?,
            r_min: get("r_min", pick("r_min", &flags.r_min), 10.0)?,
            r_max: get("r_max", pick("r_max", &flags.r_max), 1e3)?,
            r_count: get("r_count", pick("r_count", &flags.r_count), 9)?,
            tuples: path("tuples", &flags.tuples),
            out: path("out", &flags.out),
        })
    }

    pub fn p_f64(&self) -> f64 {
        parse_number(&self.p).unwrap_or(f64::NAN)
    }

    pub fn q_f64(&self) -> f64 {
        parse_number(&self.q).unwrap_or(f64::NAN)
    }

    /// `key = value` echo; feeding it back through `--config` reproduces
    /// the run (the output directory is not echoed).
    pub fn echo(&self) -> String {
        use polylane::io::fmt_f64;
        let mut lines = vec![
            ("command", self.command.name().to_string()),
            ("N", self.n.to_string()),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("p", self.p.clone()),
            ("q", self.q.clone()),
            ("t", fmt_f64(self.t)),
            ("theta", fmt_f64(self.theta)),
            ("grid", self.grid.to_string()),
            ("tol", fmt_f64(self.tol)),
            ("seed", self.seed.to_string()),
            ("starts", self.starts.to_string()),
            ("box_lo", fmt_f64(self.box_lo)),
            ("box_hi", fmt_f64(self.box_hi)),
            ("threads", self.threads.to_string()),
            ("t_max", fmt_f64(self.t_max)),
            ("tail", self.tail.to_string()),
            ("window", fmt_f64(self.window)),
            ("min_growth", fmt_f64(self.min_growth)),
            ("r_min", fmt_f64(self.r_min)),
            ("r_max", fmt_f64(self.r_max)),
            ("r_count", self.r_count.to_string()),
        ];
        if let Some(g) = self.gamma {
            lines.push(("gamma", fmt_f64(g)));
        }
        if let Some(t) = &self.tuples {
            lines.push(("tuples", t.display().to_string()));
        }
        let mut out = String::new();
        for (k, v) in lines {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn out_path(&self, name: &str) -> Option<PathBuf> {
        self.out.as_deref().map(|d: &Path| d.join(name))
    }
}
