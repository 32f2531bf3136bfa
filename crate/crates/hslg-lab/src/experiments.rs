//! Statistical drivers: each experiment samples environments, computes statistics per
//! size, checks its criteria and returns a [`StatReport`].
//!
//! Environment `e` at size `N` uses stream `stream_id(N, tag, e)`, so results do not
//! depend on the number of worker threads.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::environment::{generate_with, symmetrize, Environment, Flavor, GenOptions, Precision};
use crate::error::{Error, Result};
use crate::lgrw::{increment_cdf, qr0_identity, sample_increment, sample_limiting_pmf};
use crate::multilayer::{line_ensemble, vq_profile};
use crate::polymer::{partition_table, LogPartitionTable, Mode};
use crate::rng::RngStream;
use crate::special_fn::{digamma, ModelParams};
use crate::stats::{
    bootstrap, bootstrap_indices, chi_square, correlation, ks_one_sample, ks_one_sample_try, ks_two_sample, mean, median,
    quantile, variance, Estimate,
};

const TAG_ENV: u64 = 0;
const TAG_ENV_ALT: u64 = 1;
const TAG_BOOT: u64 = 2;
const TAG_REF: u64 = 3;
const TAG_ENSEMBLE: u64 = 4;

/// Stream index for item `idx` of kind `tag` at size `n`.
pub fn stream_id(n: usize, tag: u64, idx: u64) -> u64 {
    assert!(idx < 1 << 32 && tag < 256);
    ((n as u64) << 40) | (tag << 32) | idx
}

pub const PACKAGE_VERSION: &str = concat!("hslg-lab v", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Pinning,
    Walk,
    Quenched,
    Fluct,
    Lln,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] =
        [ExperimentKind::Pinning, ExperimentKind::Walk, ExperimentKind::Quenched, ExperimentKind::Fluct, ExperimentKind::Lln];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Pinning => "pinning",
            ExperimentKind::Walk => "walk",
            ExperimentKind::Quenched => "quenched",
            ExperimentKind::Fluct => "fluct",
            ExperimentKind::Lln => "lln",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub flavor: Flavor,
    pub sizes: Vec<usize>,
    /// Environments per size.
    pub samples: usize,
    pub seed: u64,
    /// Tail indices (pinning), increment indices (walk) or pmf entries (quenched).
    pub k_grid: Vec<usize>,
    /// Deep-tail index is `ceil(deep_m * sqrt(N))`.
    pub deep_m: f64,
    /// Draws on the random-walk side of a comparison.
    pub reference_samples: usize,
    /// Sizes and environment count for the exact line-ensemble statistic.
    pub ensemble_sizes: Vec<usize>,
    pub ensemble_samples: usize,
    /// KS / chi-square significance floor.
    pub significance: f64,
    pub precision: Precision,
}

impl ExperimentConfig {
    /// Defaults for an experiment; `walk` defaults depend on the flavor.
    pub fn defaults(kind: ExperimentKind, params: ModelParams, flavor: Flavor, seed: u64) -> ExperimentConfig {
        let base = ExperimentConfig {
            params,
            flavor,
            sizes: vec![64, 128, 256],
            samples: 1000,
            seed,
            k_grid: vec![0, 1, 2, 5, 10],
            deep_m: 1.0,
            reference_samples: 100_000,
            ensemble_sizes: vec![6, 10, 14],
            ensemble_samples: 40,
            significance: 1e-3,
            precision: Precision::Float,
        };
        match kind {
            ExperimentKind::Pinning => base,
            ExperimentKind::Walk if flavor == Flavor::Stationary => {
                ExperimentConfig { sizes: vec![64], samples: 5000, k_grid: vec![1, 2, 3, 4, 5], ..base }
            }
            ExperimentKind::Walk => ExperimentConfig { sizes: vec![128, 256, 512], samples: 2000, k_grid: vec![1], ..base },
            ExperimentKind::Quenched => ExperimentConfig { sizes: vec![256], samples: 2000, k_grid: vec![0, 1, 2, 3], ..base },
            ExperimentKind::Fluct => ExperimentConfig { sizes: vec![128, 256, 512], samples: 1000, ..base },
            ExperimentKind::Lln => ExperimentConfig { sizes: vec![128, 256, 512], samples: 200, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        ModelParams::new(self.params.theta, self.params.alpha)?;
        self.params.require_bound_phase()?;
        if self.sizes.is_empty() || self.sizes.iter().any(|&n| n < 2) {
            return Err(Error::Domain("sizes must be a nonempty list of integers >= 2".into()));
        }
        if self.samples < 8 || self.reference_samples < 8 {
            return Err(Error::Domain("samples must be at least 8".into()));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::Domain("significance must lie in (0, 1)".into()));
        }
        if !(self.deep_m > 0.0) {
            return Err(Error::Domain("deep_m must be positive".into()));
        }
        Ok(())
    }

    fn mode(&self) -> Mode {
        match self.precision {
            Precision::Float => Mode::LogFloat,
            Precision::Dyadic => Mode::Exact,
        }
    }

    fn env(&self, n: usize, flavor: Flavor, tag: u64, idx: usize) -> Result<Environment> {
        generate_with(
            self.params,
            n,
            flavor,
            self.seed,
            stream_id(n, tag, idx as u64),
            self.precision,
            GenOptions::default(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub n: usize,
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub statistics: Vec<Statistic>,
    pub criteria: Vec<Criterion>,
    pub wall_clock_secs: f64,
}

pub const GENERIC_HEADER: [&str; 6] = ["N", "statistic", "value", "ci_lo", "ci_hi", "p_value"];
pub const PINNING_HEADER: [&str; 4] = ["N", "k", "median_tail", "upper_q95_tail"];

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl StatReport {
    pub fn empty(kind: ExperimentKind, config: ExperimentConfig) -> StatReport {
        let header = match kind {
            ExperimentKind::Pinning => PINNING_HEADER.iter(),
            _ => GENERIC_HEADER.iter(),
        }
        .map(|s| s.to_string())
        .collect();
        StatReport {
            experiment: kind,
            config,
            header,
            rows: Vec::new(),
            statistics: Vec::new(),
            criteria: Vec::new(),
            wall_clock_secs: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Criterion> {
        self.criteria.iter().find(|c| !c.passed)
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }

    pub fn statistic(&self, n: usize, name: &str) -> Option<&Statistic> {
        self.statistics.iter().find(|s| s.n == n && s.name == name)
    }

    /// Adds a statistic and, for the generic layout, its CSV row.
    fn push_stat(&mut self, s: Statistic) {
        if self.experiment != ExperimentKind::Pinning {
            self.rows.push(vec![s.n.to_string(), s.name.clone(), num(s.value), opt(s.lo), opt(s.hi), opt(s.p_value)]);
        }
        self.statistics.push(s);
    }

    fn est(&mut self, n: usize, name: impl Into<String>, e: Estimate) {
        self.push_stat(Statistic { n, name: name.into(), value: e.value, lo: Some(e.lo), hi: Some(e.hi), p_value: None });
    }

    fn test(&mut self, n: usize, name: impl Into<String>, value: f64, p: f64) {
        self.push_stat(Statistic { n, name: name.into(), value, lo: None, hi: None, p_value: Some(p) });
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.criteria.push(Criterion { name: name.into(), passed, detail: detail.into() });
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numeric(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(format!("json: {e}")))
    }

    /// Writes the CSV and a companion `<path>.meta` file.
    pub fn emit_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))?;
        let mut meta_path = path.as_os_str().to_owned();
        meta_path.push(".meta");
        let meta_path = std::path::PathBuf::from(meta_path);
        let config = serde_json::to_string(&self.config).map_err(|e| Error::Numeric(format!("json: {e}")))?;
        let meta = format!(
            "experiment = {}\nversion = {}\nseed = {}\nconfig = {}\npassed = {}\nwall_clock_secs = {:.3}\n",
            self.experiment,
            PACKAGE_VERSION,
            self.config.seed,
            config,
            self.passed(),
            self.wall_clock_secs
        );
        std::fs::write(&meta_path, meta).map_err(|e| Error::io(&meta_path, e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Maps `f` over `0..count` on a pool of `threads` workers (or the global pool),
/// keeping index order.
pub fn par_map<T: Send>(threads: Option<usize>, count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    let run = || (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Decreasing,
    Increasing,
}

/// Ordered point estimates, not contradicted at the CI level.
fn trend(points: &[(usize, Estimate)], dir: Direction, strict: bool) -> (bool, String) {
    let ordered = points.windows(2).all(|w| {
        let (a, b) = (w[0].1.value, w[1].1.value);
        match (dir, strict) {
            (Direction::Decreasing, true) => b < a,
            (Direction::Decreasing, false) => b <= a,
            (Direction::Increasing, true) => b > a,
            (Direction::Increasing, false) => b >= a,
        }
    });
    let contradicted = points.windows(2).any(|w| {
        let (a, b) = (w[0].1, w[1].1);
        match dir {
            Direction::Decreasing => b.lo > a.hi,
            Direction::Increasing => b.hi < a.lo,
        }
    });
    let detail = points
        .iter()
        .map(|(n, e)| format!("N={n}: {:.4e} [{:.4e}, {:.4e}]", e.value, e.lo, e.hi))
        .collect::<Vec<_>>()
        .join("; ");
    (ordered && !contradicted, detail)
}

const TREND_LEVEL: f64 = 0.99;

struct Boot {
    seed: u64,
    next: u64,
}

impl Boot {
    fn rng(&mut self, n: usize) -> RngStream {
        self.next += 1;
        RngStream::new(self.seed, stream_id(n, TAG_BOOT, self.next))
    }

    fn est(&mut self, n: usize, x: &[f64], stat: impl Fn(&[f64]) -> f64) -> Estimate {
        let mut rng = self.rng(n);
        bootstrap(x, stat, TREND_LEVEL, &mut rng)
    }
}

pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig, threads: Option<usize>) -> Result<StatReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = match kind {
        ExperimentKind::Pinning => run_pinning(cfg, threads),
        ExperimentKind::Walk => run_walk_attractor(cfg, threads),
        ExperimentKind::Quenched => run_quenched_limit(cfg, threads),
        ExperimentKind::Fluct => run_gaussian_fluct(cfg, threads),
        ExperimentKind::Lln => run_lln_profile(cfg, threads),
    }?;
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// `Z^PL(k) / Z^PL(0)` for each `k`.
fn tail_ratios(table: &LogPartitionTable, ks: &[usize]) -> Result<Vec<f64>> {
    match table.mode() {
        Mode::LogFloat => {
            let l0 = table.point_to_line(0)?;
            ks.iter().map(|&k| Ok((table.point_to_line(k)? - l0).exp())).collect()
        }
        Mode::Exact => {
            let l0 = table.point_to_line_exact(0)?.ln();
            ks.iter()
                .map(|&k| {
                    let z = table.point_to_line_exact(k)?;
                    Ok(if z.is_zero() { 0.0 } else { (z.ln() - l0).exp() })
                })
                .collect()
        }
    }
}

/// Quenched tail masses `P(endpoint height <= N - k)` and the deep tail.
pub fn run_pinning(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<StatReport> {
    cfg.validate()?;
    let mut rep = StatReport::empty(ExperimentKind::Pinning, cfg.clone());
    let mut boot = Boot { seed: cfg.seed, next: 0 };
    let mut medians_by_k: Vec<Vec<(usize, Estimate)>> = vec![Vec::new(); cfg.k_grid.len()];
    let mut deep = None;
    for &n in &cfg.sizes {
        let deep_k = (cfg.deep_m * (n as f64).sqrt()).ceil() as usize;
        let mut ks = cfg.k_grid.clone();
        ks.push(deep_k);
        if let Some(&bad) = ks.iter().find(|&&k| k >= n) {
            return Err(Error::Domain(format!("tail index {bad} needs N > {bad}, got N = {n}")));
        }
        let per_env = par_map(threads, cfg.samples, |e| {
            let env = cfg.env(n, cfg.flavor, TAG_ENV, e)?;
            tail_ratios(&partition_table(&env, cfg.mode())?, &ks)
        })?;
        let mut meds = Vec::new();
        for (c, &k) in ks.iter().enumerate() {
            let col: Vec<f64> = per_env.iter().map(|v| v[c]).collect();
            let m = boot.est(n, &col, median);
            let q95 = quantile(&col, 0.95);
            rep.rows.push(vec![n.to_string(), k.to_string(), num(m.value), num(q95)]);
            let name = if c + 1 == ks.len() { "deep_tail".to_string() } else { format!("tail_k{k}") };
            rep.statistics.push(Statistic {
                n,
                name: format!("median_{name}"),
                value: m.value,
                lo: Some(m.lo),
                hi: Some(m.hi),
                p_value: None,
            });
            rep.statistics.push(Statistic { n, name: format!("q95_{name}"), value: q95, lo: None, hi: None, p_value: None });
            if c + 1 < ks.len() {
                medians_by_k[c].push((n, m));
                meds.push(m.value);
                if k == 0 {
                    let exact = col.iter().all(|&t| t == 1.0);
                    rep.check(format!("tail_k0_is_one_N{n}"), exact, "Z^PL(0)/Z^PL(0) for every environment");
                }
            } else {
                deep = Some((n, m.value));
            }
        }
        let dec = meds.windows(2).all(|w| w[1] < w[0]);
        rep.check(format!("median_tail_decreasing_in_k_N{n}"), dec, format!("{meds:?}"));
    }
    for (c, &k) in cfg.k_grid.iter().enumerate() {
        if k == 0 || cfg.sizes.len() < 2 {
            continue;
        }
        let (ok, detail) = trend(&medians_by_k[c], Direction::Decreasing, false);
        rep.check(format!("median_tail_k{k}_nonincreasing_in_N"), ok, detail);
    }
    if let Some((n, m)) = deep {
        let bound = 10.0 * (-(n as f64).sqrt()).exp();
        rep.check("deep_tail_median_bound", m <= bound, format!("N={n}: median {m:.4e} vs 10*exp(-sqrt N) = {bound:.4e}"));
    }
    Ok(rep)
}

/// Increments `S_r - S_{r-1}` of the free-energy profile away from the diagonal.
fn increments(table: &LogPartitionTable, rmax: usize) -> Result<Vec<f64>> {
    let iv = table.increment_vector(rmax)?;
    Ok(iv.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Contingency chi-square on quintile bins of two paired samples.
fn independence_test(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    const B: usize = 5;
    let cuts = |v: &[f64]| -> Vec<f64> { (1..B).map(|q| quantile(v, q as f64 / B as f64)).collect() };
    let (cx, cy) = (cuts(x), cuts(y));
    let bin = |c: &[f64], t: f64| c.partition_point(|&q| q < t);
    let mut table = [[0.0f64; B]; B];
    for (&a, &b) in x.iter().zip(y) {
        table[bin(&cx, a)][bin(&cy, b)] += 1.0;
    }
    let total = x.len() as f64;
    let rows: Vec<f64> = (0..B).map(|i| table[i].iter().sum()).collect();
    let cols: Vec<f64> = (0..B).map(|j| (0..B).map(|i| table[i][j]).sum()).collect();
    let mut obs = Vec::new();
    let mut expct = Vec::new();
    for i in 0..B {
        for j in 0..B {
            obs.push(table[i][j]);
            expct.push(rows[i] * cols[j] / total);
        }
    }
    // (B-1)^2 degrees of freedom
    chi_square(&obs, &expct, B * B - 1 - (B - 1) * (B - 1))
}

/// Increment laws near the diagonal: exact for the stationary flavor, a convergence trend
/// for the standard one.
pub fn run_walk_attractor(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<StatReport> {
    cfg.validate()?;
    let mut rep = StatReport::empty(ExperimentKind::Walk, cfg.clone());
    let rs: Vec<usize> = cfg.k_grid.iter().copied().filter(|&r| r >= 1).collect();
    let rmax = *rs.iter().max().ok_or_else(|| Error::Domain("walk needs increment indices >= 1".into()))?;
    let p = cfg.params;
    if cfg.flavor == Flavor::Stationary {
        for &n in &cfg.sizes {
            let per_env = par_map(threads, cfg.samples, |e| {
                let env = cfg.env(n, cfg.flavor, TAG_ENV, e)?;
                let t = partition_table(&env, cfg.mode())?;
                Ok((t.increment_vector(0)?[0], increments(&t, rmax)?))
            })?;
            rep.check(format!("r0_degenerate_N{n}"), per_env.iter().all(|v| v.0 == 0.0), "S_0 = 0");
            for &r in &rs {
                let x: Vec<f64> = per_env.iter().map(|v| v.1[r - 1]).collect();
                let ks = ks_one_sample_try(&x, |t| increment_cdf(p, t))?;
                rep.test(n, format!("ks_increment_r{r}"), ks.d, ks.p);
                rep.check(format!("ks_increment_r{r}_N{n}"), ks.p > cfg.significance, format!("D={:.4e} p={:.4e}", ks.d, ks.p));
            }
            for w in rs.windows(2) {
                let x: Vec<f64> = per_env.iter().map(|v| v.1[w[0] - 1]).collect();
                let y: Vec<f64> = per_env.iter().map(|v| v.1[w[1] - 1]).collect();
                let (chi, pv) = independence_test(&x, &y)?;
                rep.test(n, format!("chi2_independence_r{}_r{}", w[0], w[1]), chi, pv);
                rep.check(
                    format!("independence_r{}_r{}_N{n}", w[0], w[1]),
                    pv > cfg.significance,
                    format!("chi2={chi:.3} p={pv:.4e}"),
                );
            }
        }
        return Ok(rep);
    }
    let mut rng = RngStream::new(cfg.seed, stream_id(0, TAG_REF, 0));
    let reference: Vec<f64> =
        (0..cfg.reference_samples).map(|_| sample_increment(p, &mut rng)).collect::<Result<_>>()?;
    let mut dists: Vec<Vec<(usize, Estimate)>> = vec![Vec::new(); rs.len()];
    let mut boot = Boot { seed: cfg.seed, next: 0 };
    for &n in &cfg.sizes {
        let per_env = par_map(threads, cfg.samples, |e| {
            let env = cfg.env(n, cfg.flavor, TAG_ENV, e)?;
            let t = partition_table(&env, cfg.mode())?;
            Ok((t.increment_vector(0)?[0], increments(&t, rmax)?))
        })?;
        rep.check(format!("r0_degenerate_N{n}"), per_env.iter().all(|v| v.0 == 0.0), "S_0 = 0");
        for (c, &r) in rs.iter().enumerate() {
            let x: Vec<f64> = per_env.iter().map(|v| v.1[r - 1]).collect();
            let ks = ks_two_sample(&x, &reference)?;
            let d = boot.est(n, &x, |s| ks_two_sample(s, &reference).map(|k| k.d).unwrap_or(f64::NAN));
            rep.push_stat(Statistic {
                n,
                name: format!("ks2_increment_r{r}"),
                value: ks.d,
                lo: Some(d.lo),
                hi: Some(d.hi),
                p_value: Some(ks.p),
            });
            dists[c].push((n, d));
        }
    }
    if cfg.sizes.len() >= 2 {
        for (c, &r) in rs.iter().enumerate() {
            let (ok, detail) = trend(&dists[c], Direction::Decreasing, true);
            rep.check(format!("ks2_r{r}_decreasing_in_N"), ok, detail);
        }
    }
    Ok(rep)
}

/// Polymer endpoint pmf near the diagonal against the limiting random pmf.
pub fn run_quenched_limit(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<StatReport> {
    cfg.validate()?;
    let mut rep = StatReport::empty(ExperimentKind::Quenched, cfg.clone());
    let p = cfg.params;
    let kmax = cfg.k_grid.iter().copied().max().unwrap_or(0);
    let mut rng = RngStream::new(cfg.seed, stream_id(0, TAG_REF, 0));
    let limit: Vec<Vec<f64>> = (0..cfg.reference_samples)
        .map(|_| sample_limiting_pmf(p, kmax, 1e-12, &mut rng).map(|l| l.probs))
        .collect::<Result<_>>()?;
    let mut boot = Boot { seed: cfg.seed, next: 0 };
    for &n in &cfg.sizes {
        if kmax >= n {
            return Err(Error::Domain(format!("pmf entry {kmax} needs N > {kmax}")));
        }
        let per_env = par_map(threads, cfg.samples, |e| {
            let env = cfg.env(n, cfg.flavor, TAG_ENV, e)?;
            let pmf = partition_table(&env, cfg.mode())?.endpoint_pmf();
            let total: f64 = pmf.probs.iter().sum();
            Ok((total, pmf.probs[..=kmax].to_vec()))
        })?;
        let worst = per_env.iter().map(|v| (v.0 - 1.0).abs()).fold(0.0, f64::max);
        rep.check(format!("pmf_sums_to_one_N{n}"), worst <= 1e-12, format!("max |sum - 1| = {worst:.3e}"));
        for &r in &cfg.k_grid {
            let x: Vec<f64> = per_env.iter().map(|v| v.1[r]).collect();
            let y: Vec<f64> = limit.iter().map(|v| v[r]).collect();
            let ks = ks_two_sample(&x, &y)?;
            rep.test(n, format!("ks2_pmf_r{r}"), ks.d, ks.p);
            if r == 0 {
                rep.check(format!("ks2_pmf_r0_N{n}"), ks.p > cfg.significance, format!("D={:.4e} p={:.4e}", ks.d, ks.p));
            }
            let mp = boot.est(n, &x, mean);
            let ml = boot.est(n, &y, mean);
            rep.est(n, format!("mean_polymer_r{r}"), mp);
            rep.est(n, format!("mean_limit_r{r}"), ml);
            let second = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64;
            rep.est(n, format!("second_moment_polymer_r{r}"), boot.est(n, &x, second));
            rep.est(n, format!("second_moment_limit_r{r}"), boot.est(n, &y, second));
            if r == 0 {
                let diff = (mp.value - ml.value).abs();
                rep.check(format!("mean_pmf_r0_N{n}"), diff <= 0.03, format!("|{:.4} - {:.4}| = {diff:.4}", mp.value, ml.value));
            }
        }
    }
    let mut rng = RngStream::new(cfg.seed, stream_id(0, TAG_REF, 1));
    let (_, ks) = qr0_identity(p, cfg.reference_samples, &mut rng)?;
    rep.test(0, "ks_qr0", ks.d, ks.p);
    rep.check("qr0_identity", ks.p > cfg.significance, format!("D={:.4e} p={:.4e}", ks.d, ks.p));
    Ok(rep)
}

/// Normalized free energies on and near the diagonal.
pub fn run_gaussian_fluct(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<StatReport> {
    cfg.validate()?;
    let mut rep = StatReport::empty(ExperimentKind::Fluct, cfg.clone());
    let c = cfg.params.constants()?;
    let sigma = c.sigma();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut boot = Boot { seed: cfg.seed, next: 0 };
    let mut abs_means = Vec::new();
    let mut var_gaps = Vec::new();
    let mut last_corr = None;
    for &n in &cfg.sizes {
        let nf = n as f64;
        let g = (nf.powf(0.25).floor() as usize).max(1);
        if g >= n {
            return Err(Error::Domain(format!("N = {n} too small for the off-diagonal offset")));
        }
        let scale = sigma * nf.sqrt();
        let per_env = par_map(threads, cfg.samples, |e| {
            let env = cfg.env(n, cfg.flavor, TAG_ENV, e)?;
            let t = partition_table(&env, cfg.mode())?;
            let diag = (t.log_z(n, n) - c.r * nf) / scale;
            let pl = (t.point_to_line(g)? - c.r * nf + g as f64 * c.tau) / scale;
            let off = (t.log_z(n + g, n - g) - c.r * nf) / scale;
            Ok([diag, pl, off])
        })?;
        let col = |k: usize| per_env.iter().map(|v| v[k]).collect::<Vec<f64>>();
        let (diag, pl, off) = (col(0), col(1), col(2));
        let m = boot.est(n, &diag, mean);
        let v = boot.est(n, &diag, variance);
        rep.est(n, "mean_diag", m);
        rep.est(n, "var_diag", v);
        let ks = ks_one_sample(&diag, |t| normal.cdf(t))?;
        rep.test(n, "ks_normal_diag", ks.d, ks.p);
        rep.est(n, "mean_point_to_line", boot.est(n, &pl, mean));
        rep.est(n, "var_point_to_line", boot.est(n, &pl, variance));
        let mut rng = boot.rng(n);
        let corr = bootstrap_indices(
            diag.len(),
            |idx| {
                let a: Vec<f64> = idx.iter().map(|&i| diag[i]).collect();
                let b: Vec<f64> = idx.iter().map(|&i| off[i]).collect();
                correlation(&a, &b)
            },
            TREND_LEVEL,
            &mut rng,
        );
        rep.est(n, "corr_diag_offdiag", corr);
        abs_means.push((n, boot.est(n, &diag, |s| mean(s).abs())));
        var_gaps.push((n, boot.est(n, &diag, |s| (variance(s) - 1.0).abs())));
        last_corr = Some((n, corr.value));
    }
    if cfg.sizes.len() >= 2 {
        let (ok, d) = trend(&abs_means, Direction::Decreasing, true);
        rep.check("abs_mean_shrinks", ok, d);
        let (ok, d) = trend(&var_gaps, Direction::Decreasing, true);
        rep.check("variance_gap_shrinks", ok, d);
    }
    if let Some((n, r)) = last_corr {
        rep.check("offdiag_correlation", r > 0.9, format!("N={n}: corr = {r:.4}"));
    }
    Ok(rep)
}

/// Laws of large numbers: point-to-line free energy, the diagonal-avoiding profile under
/// the alpha = 0 diagonal, and the top-curve average of the line ensemble.
pub fn run_lln_profile(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<StatReport> {
    cfg.validate()?;
    let mut rep = StatReport::empty(ExperimentKind::Lln, cfg.clone());
    let c = cfg.params.constants()?;
    let target_alpha0 = -2.0 * digamma(cfg.params.theta)?;
    let mut boot = Boot { seed: cfg.seed, next: 0 };
    let mut gaps_pl = Vec::new();
    let mut gaps_vt = Vec::new();
    for &n in &cfg.sizes {
        let nf = n as f64;
        let per_env = par_map(threads, cfg.samples, |e| {
            let env = cfg.env(n, cfg.flavor, TAG_ENV, e)?;
            let pl = partition_table(&env, cfg.mode())?.point_to_line(1)? / nf;
            let alt = cfg.env(n, Flavor::AlphaZeroDiagonal, TAG_ENV_ALT, e)?;
            let vt = vq_profile(&symmetrize(&alt), 2 * n, cfg.mode())?.log_vtilde / nf;
            Ok([pl, vt])
        })?;
        let pl: Vec<f64> = per_env.iter().map(|v| v[0]).collect();
        let vt: Vec<f64> = per_env.iter().map(|v| v[1]).collect();
        rep.est(n, "median_point_to_line_1_over_N", boot.est(n, &pl, median));
        rep.est(n, "median_log_vtilde_2N_over_N_alpha0", boot.est(n, &vt, median));
        gaps_pl.push((n, boot.est(n, &pl, |s| (median(s) - c.r).abs())));
        gaps_vt.push((n, boot.est(n, &vt, |s| (median(s) - target_alpha0).abs())));
    }
    if cfg.sizes.len() >= 2 {
        let (ok, d) = trend(&gaps_pl, Direction::Decreasing, true);
        rep.check("point_to_line_approaches_R", ok, d);
        let (ok, d) = trend(&gaps_vt, Direction::Decreasing, true);
        rep.check("vtilde_approaches_alpha0_limit", ok, d);
    }
    match c.k_star() {
        None => rep.check("delta_k_positive", false, "no k with delta_k > 0"),
        Some(k) => {
            let k = k as usize;
            let dk = c.delta_k(k as u32);
            rep.check("delta_k_positive", dk > 0.0, format!("k* = {k}, delta = {dk:.6}"));
            let level = c.r - 0.5 * dk;
            let mut fractions = Vec::new();
            for &n in &cfg.ensemble_sizes {
                let pmax = (2 * n + 2).checked_sub(4 * k).filter(|&v| v >= 1).ok_or_else(|| {
                    Error::Domain(format!("ensemble size {n} too small for {} curves", 2 * k))
                })?;
                let per_env = par_map(threads, cfg.ensemble_samples, |e| {
                    let env = generate_with(
                        cfg.params,
                        n + 1,
                        cfg.flavor,
                        cfg.seed,
                        stream_id(n, TAG_ENSEMBLE, e as u64),
                        Precision::Dyadic,
                        GenOptions::default(),
                    )?;
                    let le = line_ensemble(&symmetrize(&env), n, 2 * k, Mode::Exact)?;
                    let sup = (1..=pmax)
                        .map(|p| (1..=2 * k).map(|i| le.h(i, p)).sum::<f64>() / (2 * k) as f64)
                        .fold(f64::NEG_INFINITY, f64::max);
                    Ok(sup / n as f64)
                })?;
                rep.est(n, "median_top_curve_average_over_N", boot.est(n, &per_env, median));
                let below: Vec<f64> = per_env.iter().map(|&v| f64::from(u8::from(v <= level))).collect();
                let f = boot.est(n, &below, mean);
                rep.est(n, "fraction_below_R_minus_half_delta", f);
                fractions.push((n, f));
            }
            if fractions.len() >= 2 {
                let (ok, d) = trend(&fractions, Direction::Increasing, false);
                rep.check("top_curve_average_below_level_trend", ok, d);
            }
        }
    }
    Ok(rep)
}
