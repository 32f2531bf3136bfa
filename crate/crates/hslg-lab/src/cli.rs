//! Command-line front end. Exit codes: 0 pass, 1 assertion failure, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::environment::{generate_with, symmetrize, Environment, Flavor, GenOptions, Precision};
use crate::error::Error;
use crate::experiments::{run_experiment, ExperimentConfig, ExperimentKind};
use crate::multilayer::line_ensemble;
use crate::polymer::{partition_table, sample_path, Mode};
use crate::rng::RngStream;
use crate::special_fn::ModelParams;
use crate::verify::{verify_dp, verify_identity, verify_lgv, verify_sbd, verify_umap, VerifyReport};

pub const SEED_ENV_VAR: &str = "HSLG_LAB_SEED";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hslg-lab", version, about = "Half-space log-gamma polymer laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Group,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    Float,
    Exact,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Precision {
        match p {
            PrecisionArg::Float => Precision::Float,
            PrecisionArg::Exact => Precision::Dyadic,
        }
    }
}

fn parse_flavor(s: &str) -> std::result::Result<Flavor, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Bulk parameter theta > 0 [default: 1]
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Boundary parameter alpha > -theta [default: -0.5]
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// System size (experiments: a single size overriding the default grid)
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// standard, stationary or alpha-zero-diagonal [default: standard]
    #[arg(long, global = true, value_parser = parse_flavor)]
    pub flavor: Option<Flavor>,
    /// Environments (experiments, simulate endpoint) or paths (simulate path)
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Master seed; falls back to the config file, then HSLG_LAB_SEED
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Arithmetic for partition functions [default: float; ensembles: exact]
    #[arg(long, global = true, value_enum)]
    pub precision: Option<PrecisionArg>,
    /// Environments per size for verify suites
    #[arg(long, global = true)]
    pub envs: Option<usize>,
    /// Curves (simulate ensemble), maximal layer count (verify lgv) or k (verify sbd)
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Stream index of the first environment [default: 0]
    #[arg(long, global = true)]
    pub stream: Option<u64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Group {
    /// Generate or validate environment files
    Env {
        #[command(subcommand)]
        action: EnvAction,
    },
    /// Sample endpoints, paths or line ensembles
    Simulate {
        #[command(subcommand)]
        action: SimAction,
    },
    /// Exact verification suites
    Verify {
        #[command(subcommand)]
        action: VerifyAction,
    },
    /// Statistical experiments
    Experiment {
        #[command(subcommand)]
        action: ExpAction,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum EnvAction {
    /// Write one environment to --out
    Gen,
    /// Parse and validate an environment file
    Check { path: PathBuf },
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum SimAction {
    /// Quenched endpoint pmf, one row per (environment, r)
    Endpoint,
    /// Exact polymer path samples from one environment
    Path,
    /// Line ensemble curves of one environment
    Ensemble,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum VerifyAction {
    /// U map properties on exhaustive domains
    Umap,
    /// Determinant formula against exhaustive path families
    Lgv,
    /// Symmetrization identity
    Identity,
    /// Multilayer upper bound
    Sbd,
    /// Dynamic programming against path-by-path sums
    Dp,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum ExpAction {
    /// Endpoint tail masses against system size
    Pinning,
    /// Boundary-height increments against the random walk law
    Walk,
    /// Quenched endpoint law against its limit
    Quenched,
    /// Gaussian fluctuations of the log partition function
    Fluct,
    /// Free energy and line ensemble limits
    Lln,
}

impl From<ExpAction> for ExperimentKind {
    fn from(a: ExpAction) -> ExperimentKind {
        match a {
            ExpAction::Pinning => ExperimentKind::Pinning,
            ExpAction::Walk => ExperimentKind::Walk,
            ExpAction::Quenched => ExperimentKind::Quenched,
            ExpAction::Fluct => ExperimentKind::Fluct,
            ExpAction::Lln => ExperimentKind::Lln,
        }
    }
}

/// Keys accepted in config files.
pub const CONFIG_KEYS: [&str; 20] = [
    "theta",
    "alpha",
    "n",
    "flavor",
    "samples",
    "seed",
    "threads",
    "out",
    "precision",
    "envs",
    "k",
    "stream",
    "sizes",
    "k_grid",
    "significance",
    "reference_samples",
    "deep_m",
    "ensemble_sizes",
    "ensemble_samples",
    "input",
];

/// Parsed config file: key -> (line, raw value).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, (usize, String)>,
}

/// Parses flat `key = value` text; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<ConfigFile, Error> {
    let mut entries = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, msg: format!("expected `key = value`, got '{body}'") })?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Parse { line, msg: format!("unknown key '{key}'") });
        }
        if entries.insert(key.to_string(), (line, value.trim().to_string())).is_some() {
            return Err(Error::Parse { line, msg: format!("duplicate key '{key}'") });
        }
    }
    Ok(ConfigFile { entries })
}

impl ConfigFile {
    fn get<T>(&self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => parse(v)
                .map(Some)
                .ok_or_else(|| usage(format!("line {line}: key '{key}': expected {what}, got '{v}'"))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<usize>>, CliError> {
        self.get(key, "a comma-separated list of unsigned integers", |v| {
            v.split(',').map(|t| t.trim().parse().ok()).collect()
        })
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.0)
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub params: ModelParams,
    pub n: Option<usize>,
    pub flavor: Flavor,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub precision: Option<Precision>,
    pub envs: Option<usize>,
    pub k: Option<usize>,
    pub stream: u64,
    pub sizes: Option<Vec<usize>>,
    pub k_grid: Option<Vec<usize>>,
    pub significance: Option<f64>,
    pub reference_samples: Option<usize>,
    pub deep_m: Option<f64>,
    pub ensemble_sizes: Option<Vec<usize>>,
    pub ensemble_samples: Option<usize>,
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Group,
    pub settings: Settings,
}

/// Usage problems (exit 2) versus failed checks or runtime errors (exit 1).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        match e {
            Error::Domain(_) | Error::Mode(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Merges flags over the config file; the seed falls back to `HSLG_LAB_SEED`.
pub fn resolve(cli: Cli, config: &ConfigFile, env_seed: Option<&str>) -> Result<Invocation, CliError> {
    let f = cli.flags;
    let c = config;
    let flavor = match f.flavor {
        Some(v) => v,
        None => c.get("flavor", "a flavor name", |v| v.parse().ok())?.unwrap_or(Flavor::Standard),
    };
    let precision = match f.precision {
        Some(p) => Some(p.into()),
        None => c
            .get("precision", "float or exact", |v| match v {
                "float" => Some(Precision::Float),
                "exact" => Some(Precision::Dyadic),
                _ => None,
            })?,
    };
    let theta = f.theta.or(c.get("theta", "a number", |v| v.parse().ok())?).unwrap_or(1.0);
    let alpha = f.alpha.or(c.get("alpha", "a number", |v| v.parse().ok())?).unwrap_or(-0.5);
    let params = ModelParams::new(theta, alpha).map_err(|e| usage(e.to_string()))?;
    let seed = match f.seed.or(c.get("seed", "an unsigned integer", |v| v.parse().ok())?) {
        Some(s) => Some(s),
        None => match env_seed {
            Some(v) => Some(v.trim().parse().map_err(|_| usage(format!("{SEED_ENV_VAR}='{v}' is not an unsigned integer")))?),
            None => None,
        },
    };
    let uint = |key: &str| c.get(key, "an unsigned integer", |v| v.parse::<usize>().ok());
    let float = |key: &str| c.get(key, "a number", |v| v.parse::<f64>().ok());
    let settings = Settings {
        params,
        n: f.n.or(uint("n")?),
        flavor,
        samples: f.samples.or(uint("samples")?),
        seed,
        threads: f.threads.or(uint("threads")?),
        out: f.out.or(c.get("out", "a path", |v| Some(PathBuf::from(v)))?),
        precision,
        envs: f.envs.or(uint("envs")?),
        k: f.k.or(uint("k")?),
        stream: f.stream.or(c.get("stream", "an unsigned integer", |v| v.parse().ok())?).unwrap_or(0),
        sizes: c.list("sizes")?,
        k_grid: c.list("k_grid")?,
        significance: float("significance")?,
        reference_samples: uint("reference_samples")?,
        deep_m: float("deep_m")?,
        ensemble_sizes: c.list("ensemble_sizes")?,
        ensemble_samples: uint("ensemble_samples")?,
        input: c.get("input", "a path", |v| Some(PathBuf::from(v)))?,
    };
    if settings.threads == Some(0) {
        return Err(usage(match c.line_of("threads") {
            Some(l) if f.threads.is_none() => format!("line {l}: key 'threads': must be at least 1"),
            _ => "--threads must be at least 1".into(),
        }));
    }
    let inv = Invocation { command: cli.command, settings };
    check_required(&inv)?;
    Ok(inv)
}

fn check_required(inv: &Invocation) -> Result<(), CliError> {
    let s = &inv.settings;
    let need_seed = !matches!(inv.command, Group::Env { action: EnvAction::Check { .. } });
    if need_seed && s.seed.is_none() {
        return Err(usage(format!("missing seed: pass --seed, set `seed` in the config file, or set {SEED_ENV_VAR}")));
    }
    match &inv.command {
        Group::Env { action: EnvAction::Gen } => {
            require(s.n.is_some(), "--n")?;
            require(s.out.is_some(), "--out")?;
        }
        Group::Simulate { .. } => require(s.n.is_some(), "--n")?,
        Group::Experiment { .. } => {
            require(s.out.is_some(), "--out")?;
            s.params.require_bound_phase().map_err(|e| usage(e.to_string()))?;
        }
        _ => {}
    }
    Ok(())
}

fn require(ok: bool, flag: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(usage(format!("missing required flag {flag}")))
    }
}

/// Parses arguments, reads the config file and the seed variable, runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let config = match &cli.flags.config {
        None => Ok(ConfigFile::default()),
        Some(p) => match std::fs::read_to_string(p) {
            Ok(text) => parse_config(&text).map_err(|e| usage(format!("{}: {e}", p.display()))),
            Err(e) => Err(usage(format!("{}: {e}", p.display()))),
        },
    };
    let env_seed = std::env::var(SEED_ENV_VAR).ok();
    let result = config.and_then(|c| resolve(cli, &c, env_seed.as_deref())).and_then(|inv| dispatch(&inv, out));
    match result {
        Ok(code) => code,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "error: {m}\n\nRun `hslg-lab --help` for usage.");
            EXIT_USAGE
        }
        Err(CliError::Failure(m)) => {
            let _ = writeln!(err, "FAILED: {m}");
            EXIT_FAIL
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Failure(format!("write failed: {e}"))
}

/// Writes `text` to `--out` when given, otherwise to `out`.
fn emit(s: &Settings, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match &s.out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Failure(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(io_err),
    }
}

fn report_verify(rep: &VerifyReport, out: &mut dyn Write) -> Result<i32, CliError> {
    writeln!(out, "{}: {} checks, {} skipped, {} failures", rep.name, rep.checks, rep.skipped, rep.failures.len())
        .map_err(io_err)?;
    if let Some(first) = rep.failures.first() {
        return Err(CliError::Failure(format!("{}: {first}", rep.name)));
    }
    if rep.checks == 0 {
        return Err(CliError::Failure(format!("{}: nothing was checked", rep.name)));
    }
    Ok(EXIT_PASS)
}

fn make_env(s: &Settings, n: usize, stream: u64, precision: Precision) -> Result<Environment, CliError> {
    let seed = s.seed.expect("seed resolved");
    Ok(generate_with(s.params, n, s.flavor, seed, stream, precision, GenOptions::default())?)
}

fn mode_of(p: Precision) -> Mode {
    match p {
        Precision::Float => Mode::LogFloat,
        Precision::Dyadic => Mode::Exact,
    }
}

/// Runs a resolved invocation; returns the exit status.
pub fn dispatch(inv: &Invocation, out: &mut dyn Write) -> Result<i32, CliError> {
    let s = &inv.settings;
    let seed = s.seed.unwrap_or(0);
    match &inv.command {
        Group::Env { action: EnvAction::Gen } => {
            let env = make_env(s, s.n.unwrap(), s.stream, s.precision.unwrap_or(Precision::Float))?;
            let path = s.out.as_ref().unwrap();
            env.write(path)?;
            writeln!(out, "wrote {} (n={}, {} sites, rng {})", path.display(), env.n, env.num_sites(), env.rng_id())
                .map_err(io_err)?;
            Ok(EXIT_PASS)
        }
        Group::Env { action: EnvAction::Check { path } } => check_env_file(path, out),
        Group::Simulate { action } => {
            let n = s.n.unwrap();
            let text = match action {
                SimAction::Endpoint => {
                    let precision = s.precision.unwrap_or(Precision::Float);
                    let mut csv = String::from("stream,r,prob\n");
                    for e in 0..s.samples.unwrap_or(1) as u64 {
                        let env = make_env(s, n, s.stream + e, precision)?;
                        let pmf = partition_table(&env, mode_of(precision))?.endpoint_pmf();
                        for (r, p) in pmf.probs.iter().enumerate() {
                            csv.push_str(&format!("{},{r},{p}\n", s.stream + e));
                        }
                    }
                    csv
                }
                SimAction::Path => {
                    let precision = s.precision.unwrap_or(Precision::Float);
                    let env = make_env(s, n, s.stream, precision)?;
                    let table = partition_table(&env, mode_of(precision))?;
                    let mut rng = RngStream::new(seed, u64::MAX - s.stream);
                    let mut csv = String::from("path,step,i,j\n");
                    for k in 0..s.samples.unwrap_or(1) {
                        let p = sample_path(&table, &env, &mut rng);
                        for (t, (i, j)) in p.sites().iter().enumerate() {
                            csv.push_str(&format!("{k},{t},{i},{j}\n"));
                        }
                    }
                    csv
                }
                SimAction::Ensemble => {
                    let precision = s.precision.unwrap_or(Precision::Dyadic);
                    let k = s.k.unwrap_or(2);
                    let env = make_env(s, n + 1, s.stream, precision)?;
                    let le = line_ensemble(&symmetrize(&env), n, k, mode_of(precision))?;
                    let mut csv = String::from("curve,p,value\n");
                    for c in 1..=k {
                        for p in 1..=le.curve_len(c) {
                            csv.push_str(&format!("{c},{p},{}\n", le.h(c, p)));
                        }
                    }
                    csv
                }
            };
            emit(s, &text, out)?;
            Ok(EXIT_PASS)
        }
        Group::Verify { action } => {
            let p = s.params;
            let rep = match action {
                VerifyAction::Identity => {
                    let sizes: Vec<usize> = (2..=s.n.unwrap_or(5)).collect();
                    verify_identity(p, &sizes, s.envs.unwrap_or(50), seed)?
                }
                VerifyAction::Dp => {
                    let sizes: Vec<usize> = (2..=s.n.unwrap_or(6)).collect();
                    verify_dp(p, &sizes, s.envs.unwrap_or(50), seed)?
                }
                VerifyAction::Lgv => verify_lgv(p, s.n.unwrap_or(6), s.k.unwrap_or(3), s.envs.unwrap_or(25), seed)?,
                VerifyAction::Umap => {
                    verify_umap(p, &[(2, 2), (3, 2), (4, 3), (4, 4)], &[1, 2], s.envs.unwrap_or(5), seed)?
                }
                VerifyAction::Sbd => {
                    let ks = match s.k {
                        Some(k) => vec![k],
                        None => vec![1, 2],
                    };
                    verify_sbd(p, s.n.unwrap_or(6), &ks, s.envs.unwrap_or(100), seed)?
                }
            };
            report_verify(&rep, out)
        }
        Group::Experiment { action } => {
            let kind: ExperimentKind = (*action).into();
            let cfg = experiment_config(kind, s)?;
            let rep = run_experiment(kind, &cfg, s.threads)?;
            let path = s.out.as_ref().unwrap();
            rep.emit_csv(path)?;
            let mut json = path.as_os_str().to_owned();
            json.push(".json");
            rep.write_json(Path::new(&json))?;
            for c in &rep.criteria {
                writeln!(out, "[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail).map_err(io_err)?;
            }
            match rep.first_failure() {
                None => Ok(EXIT_PASS),
                Some(c) => Err(CliError::Failure(format!("{} ({})", c.name, c.detail))),
            }
        }
    }
}

/// Experiment defaults overridden by settings.
pub fn experiment_config(kind: ExperimentKind, s: &Settings) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::defaults(kind, s.params, s.flavor, s.seed.unwrap_or(0));
    if let Some(v) = &s.sizes {
        cfg.sizes = v.clone();
    }
    if let Some(n) = s.n {
        cfg.sizes = vec![n];
    }
    if let Some(v) = s.samples {
        cfg.samples = v;
    }
    if let Some(v) = &s.k_grid {
        cfg.k_grid = v.clone();
    }
    if let Some(v) = s.significance {
        cfg.significance = v;
    }
    if let Some(v) = s.reference_samples {
        cfg.reference_samples = v;
    }
    if let Some(v) = s.deep_m {
        cfg.deep_m = v;
    }
    if let Some(v) = &s.ensemble_sizes {
        cfg.ensemble_sizes = v.clone();
    }
    if let Some(v) = s.ensemble_samples {
        cfg.ensemble_samples = v;
    }
    if let Some(p) = s.precision {
        cfg.precision = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn check_env_file(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    match Environment::read(path) {
        Ok(env) => {
            let (lo, hi) = env.sites().fold((f64::INFINITY, 0.0f64), |(lo, hi), (_, _, w)| (lo.min(w), hi.max(w)));
            writeln!(
                out,
                "ok: n={} flavor={} theta={} alpha={} sites={} rng={} weights in [{lo:e}, {hi:e}]",
                env.n,
                env.flavor,
                env.params.theta,
                env.params.alpha,
                env.num_sites(),
                env.rng_id()
            )
            .map_err(io_err)?;
            Ok(EXIT_PASS)
        }
        Err(e) => Err(CliError::Failure(format!("{}: {e}", path.display()))),
    }
}

/// Entry point for the binary.
pub fn main_from_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
