//! Acceptance criteria, one line each. Exit status is nonzero when any criterion fails.

mod common;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use common::{
    confined_paths, digamma_series, disjoint_families, exact_path_sum, increment_cdf, log_gamma_cdf, simpson,
    small_configs, trigamma_series, Exact,
};
use hslg_lab::environment::{generate_dyadic_environment, generate_environment, symmetrize, Environment, Flavor};
use hslg_lab::experiments::{run_experiment, ExperimentConfig, ExperimentKind, StatReport};
use hslg_lab::gibbs::{mcmc_sample_gibbs, sample_irw, DiamondDomain, McmcConfig};
use hslg_lab::lgrw::{increment_density, qr0_identity, sample_increment};
use hslg_lab::multilayer::zsym_multi_lgv;
use hslg_lab::polymer::{partition_table, sample_path, Mode};
use hslg_lab::rng::RngStream;
use hslg_lab::special_fn::{digamma, trigamma, ModelParams};
use hslg_lab::stats::{chi_square, ks_one_sample, quantile};
use hslg_lab::verify::{verify_identity, verify_sbd, verify_umap};

const SEED: u64 = 2024;
const SIGNIFICANCE: f64 = 1e-3;

fn params() -> ModelParams {
    ModelParams::new(1.0, -0.5).unwrap()
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

type Check = fn() -> Result<Outcome, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ac1() -> Result<Outcome, String> {
    let mut mismatches = 0usize;
    let mut sites = 0usize;
    let mut worst = 0.0f64;
    let mut first = None;
    for n in 2..=6 {
        let paths: HashMap<(usize, usize), Vec<Vec<(usize, usize)>>> = generate_environment(params(), n, Flavor::Standard, 0, 0)
            .map_err(err)?
            .sites()
            .map(|(i, j, _)| ((i, j), confined_paths(i, j)))
            .collect();
        for s in 0..50 {
            let env = generate_dyadic_environment(params(), n, Flavor::Standard, SEED, s).map_err(err)?;
            let exact = partition_table(&env, Mode::Exact).map_err(err)?;
            let float = partition_table(&env, Mode::LogFloat).map_err(err)?;
            for (i, j, _) in env.sites() {
                sites += 1;
                let want = exact_path_sum(&paths[&(i, j)], &|a, b| Exact::from_f64(env.w(a, b)));
                let got = exact.exact(i, j).unwrap();
                if got.to_string() != want.render() {
                    mismatches += 1;
                    first.get_or_insert(format!("n={n} stream={s} ({i},{j})"));
                }
                worst = worst.max((float.log_z(i, j) - got.ln()).abs());
            }
        }
    }
    Ok(outcome(
        mismatches == 0 && worst <= 1e-10,
        format!(
            "{sites} sites over 250 environments, {mismatches} exact mismatches{}, max float log error {worst:.2e}",
            first.map(|f| format!(" (first at {f})")).unwrap_or_default()
        ),
    ))
}

fn ac2() -> Result<Outcome, String> {
    let r = verify_identity(params(), &[2, 3, 4, 5, 6], 50, SEED).map_err(err)?;
    Ok(outcome(r.passed(), format!("{} sites checked, {} failures", r.checks, r.failures.len())))
}

fn sym_exact(env: &Environment, i: usize, j: usize) -> Exact {
    let w = Exact::from_f64(env.w(i.max(j), i.min(j)));
    if i == j {
        w.half()
    } else {
        w
    }
}

fn ac3() -> Result<Outcome, String> {
    let n_env = 6;
    let mut checks = 0usize;
    let mut failures = Vec::new();
    for s in 0..25 {
        let env = generate_dyadic_environment(params(), n_env, Flavor::Standard, SEED, s).map_err(err)?;
        let senv = symmetrize(&env);
        for r in 1..=3 {
            for m in 1..=n_env {
                for n in r..=n_env {
                    let lib = zsym_multi_lgv(&senv, m, n, r, Mode::Exact).map_err(err)?.exact.unwrap();
                    let starts: Vec<_> = (0..r).map(|a| (1, r - a)).collect();
                    let ends: Vec<_> = (0..r).map(|a| (m, n - a)).collect();
                    let want = disjoint_families(&starts, &ends).iter().fold(Exact::zero(), |acc, fam| {
                        acc.add(&exact_path_sum(&[fam.concat()], &|i, j| sym_exact(&env, i, j)))
                    });
                    checks += 1;
                    if lib.to_string() != want.render() {
                        failures.push(format!("stream={s} r={r} ({m},{n})"));
                    }
                }
            }
        }
    }
    Ok(outcome(
        failures.is_empty(),
        format!(
            "{checks} determinants against disjoint families, {} mismatches{}",
            failures.len(),
            failures.first().map(|f| format!(" (first at {f})")).unwrap_or_default()
        ),
    ))
}

fn ac4() -> Result<Outcome, String> {
    let u = verify_umap(params(), &[(2, 2), (3, 2), (4, 3), (4, 4)], &[1, 2], 5, SEED).map_err(err)?;
    let s = verify_sbd(params(), 6, &[1, 2], 100, SEED).map_err(err)?;
    Ok(outcome(
        u.passed() && s.passed(),
        format!(
            "U map: {} checks, {} violations; bound: {} (environment, m, n, k) cases, {} violations",
            u.checks,
            u.failures.len(),
            s.checks,
            s.failures.len()
        ),
    ))
}

fn experiment(kind: ExperimentKind, flavor: Flavor, sizes: Option<Vec<usize>>) -> Result<StatReport, String> {
    let mut cfg = ExperimentConfig::defaults(kind, params(), flavor, SEED);
    if let Some(s) = sizes {
        cfg.sizes = s;
    }
    run_experiment(kind, &cfg, None).map_err(err)
}

fn ac5() -> Result<Outcome, String> {
    let t = Instant::now();
    let rep = experiment(ExperimentKind::Walk, Flavor::Stationary, None)?;
    let ks: Vec<_> = rep.criteria.iter().filter(|c| c.name.starts_with("ks_increment_")).collect();
    let p1 = rep.statistic(64, "ks_increment_r1").and_then(|s| s.p_value).unwrap_or(f64::NAN);
    let walk_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let (_, qr0) = qr0_identity(params(), 100_000, &mut RngStream::new(SEED, 5)).map_err(err)?;
    let qr0_secs = t.elapsed().as_secs_f64();
    let ok_walk = !ks.is_empty() && ks.iter().all(|c| c.passed) && walk_secs < 300.0;
    let ok_qr0 = qr0.p > SIGNIFICANCE && qr0_secs < 300.0;
    Ok(outcome(
        ok_walk && ok_qr0,
        format!(
            "(i) stationary N=64, 5000 envs: r=1 p={p1:.3}, {}/{} increment KS tests pass ({walk_secs:.0}s); (ii) Q R_0, 1e5 draws: D={:.4} p={:.3} ({qr0_secs:.0}s)",
            ks.iter().filter(|c| c.passed).count(),
            ks.len(),
            qr0.d,
            qr0.p
        ),
    ))
}

fn ac6() -> Result<Outcome, String> {
    let p = params();
    let tau = p.constants().map_err(err)?.tau;
    let f = |x: f64| increment_density(p, x).unwrap();
    let mass = simpson(&f, -40.0, 40.0, 8000);
    let first = simpson(&|x| x * f(x), -40.0, 40.0, 8000);

    let mut rng = RngStream::new(SEED, 6);
    let bins = 200;
    let edges: Vec<f64> = (1..bins)
        .map(|k| {
            let q = k as f64 / bins as f64;
            let (mut lo, mut hi) = (-60.0, 60.0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if increment_cdf(1.0, -0.5, mid) < q {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    let draws = 1_000_000;
    let mut obs = vec![0.0; bins];
    for _ in 0..draws {
        let x = sample_increment(p, &mut rng).map_err(err)?;
        obs[edges.partition_point(|e| *e < x)] += 1.0;
    }
    let (_, chi_p) = chi_square(&obs, &vec![draws as f64 / bins as f64; bins], 0).map_err(err)?;

    let mut worst = 0.0f64;
    for k in 1..=80 {
        let z = k as f64 * 0.125;
        worst = worst.max((digamma(z).map_err(err)? - digamma_series(z)).abs());
        worst = worst.max((trigamma(z).map_err(err)? - trigamma_series(z)).abs());
    }
    let ok = (mass - 1.0).abs() <= 1e-6 && (first - tau).abs() <= 1e-5 && chi_p > SIGNIFICANCE && worst <= 1e-10;
    Ok(outcome(
        ok,
        format!(
            "mass-1 = {:.1e}, mean-tau = {:.1e}, chi-square p = {chi_p:.3}, polygamma vs series max error {worst:.1e}",
            mass - 1.0,
            first - tau
        ),
    ))
}

fn ac7() -> Result<Outcome, String> {
    let rep = experiment(ExperimentKind::Walk, Flavor::Standard, None)?;
    let d: Vec<f64> =
        [128, 256, 512].iter().map(|&n| rep.statistic(n, "ks2_increment_r1").map_or(f64::NAN, |s| s.value)).collect();
    let strict = d.windows(2).all(|w| w[1] < w[0]);
    let c = rep.criterion("ks2_r1_decreasing_in_N").map(|c| c.passed).unwrap_or(false);
    Ok(outcome(strict && c, format!("KS distance r=1 at N=128/256/512: {:.4} / {:.4} / {:.4}", d[0], d[1], d[2])))
}

fn ac8() -> Result<Outcome, String> {
    let rep = experiment(ExperimentKind::Pinning, Flavor::Standard, None)?;
    let med: Vec<f64> =
        [64, 128, 256].iter().map(|&n| rep.statistic(n, "median_tail_k10").map_or(f64::NAN, |s| s.value)).collect();
    let deep = rep.statistic(256, "median_deep_tail").map_or(f64::NAN, |s| s.value);
    let bound = 10.0 * (-16.0f64).exp();
    let decreasing = med.windows(2).all(|w| w[1] < w[0]);
    Ok(outcome(
        decreasing && deep <= bound,
        format!(
            "median tail k=10 at N=64/128/256: {:.3e} / {:.3e} / {:.3e} (decreasing: {decreasing}); deep-tail median N=256: {deep:.3e} vs {bound:.3e}",
            med[0], med[1], med[2]
        ),
    ))
}

fn ac9() -> Result<Outcome, String> {
    let rep = experiment(ExperimentKind::Fluct, Flavor::Standard, Some(vec![512]))?;
    let get = |name: &str| rep.statistic(512, name).map_or(f64::NAN, |s| s.value);
    let (m, v, c) = (get("mean_diag"), get("var_diag"), get("corr_diag_offdiag"));
    Ok(outcome(
        (-0.3..=0.3).contains(&m) && (0.7..=1.3).contains(&v) && c > 0.9,
        format!("N=512, 1000 envs: mean {m:.4}, variance {v:.4}, off-diagonal correlation {c:.4}"),
    ))
}

fn ac10() -> Result<Outcome, String> {
    // (a) exact path sampler at n = 3
    let n = 3;
    let env = generate_environment(params(), n, Flavor::Standard, SEED, 0).map_err(err)?;
    let t = partition_table(&env, Mode::LogFloat).map_err(err)?;
    let paths: Vec<_> = (0..n).flat_map(|r| confined_paths(n + r, n - r)).collect();
    let weights: Vec<f64> = paths.iter().map(|p| p.iter().map(|&(i, j)| env.w(i, j)).product()).collect();
    let total: f64 = weights.iter().sum();
    let draws = 1_000_000;
    let mut counts: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut rng = RngStream::new(SEED, 10);
    for _ in 0..draws {
        *counts.entry(sample_path(&t, &env, &mut rng).sites().to_vec()).or_default() += 1;
    }
    let rel = paths
        .iter()
        .zip(&weights)
        .map(|(p, w)| {
            let e = w / total;
            (*counts.get(p).unwrap_or(&0) as f64 / draws as f64 - e).abs() / e
        })
        .fold(0.0, f64::max);
    let min_prob = weights.iter().fold(f64::INFINITY, |a, w| a.min(w / total));

    // (b) single-edge conditional
    let d = DiamondDomain::new(2, [(1, 1)]).map_err(err)?;
    let y = 0.3;
    let cfg = McmcConfig { burn_in: 100, thin: 3, samples: 100_000, min_ess: 1000.0 };
    let run = mcmc_sample_gibbs(&d, params(), &[y, -200.0], &cfg, &mut RngStream::new(SEED, 11)).map_err(err)?;
    let x: Vec<f64> = run.site(0).iter().map(|u| u - y).collect();
    let ks = ks_one_sample(&x, |s| log_gamma_cdf(1.5, s)).map_err(err)?;

    // (c) IRW sup scaling, boundary (0, -sqrt T)
    let mut q95 = Vec::new();
    for tt in [16usize, 64, 256] {
        let (draws, _) = sample_irw(
            params(),
            tt,
            0.0,
            -(tt as f64).sqrt(),
            &McmcConfig::default(),
            true,
            &mut RngStream::new(SEED, 12 + tt as u64),
        )
        .map_err(err)?;
        let sups: Vec<f64> = draws.iter().map(|s| s.sup_abs()).collect();
        q95.push(quantile(&sups, 0.95));
    }
    let ratios = [q95[1] / q95[0] / 2.0, q95[2] / q95[1] / 2.0];
    let scaling = ratios.iter().all(|r| (1.0 / 1.6..=1.6).contains(r));
    Ok(outcome(
        rel <= 0.02 && ks.p > SIGNIFICANCE && run.converged && scaling,
        format!(
            "path sampler max relative error {:.2}% over 1e6 draws (smallest path probability {min_prob:.4}); single-edge KS p={:.3}; IRW q95 ratios / sqrt law: {:.3}, {:.3}",
            100.0 * rel,
            ks.p,
            ratios[0],
            ratios[1]
        ),
    ))
}

fn ac11() -> Result<Outcome, String> {
    let mut checked = 0;
    let mut differing = Vec::new();
    for (kind, cfg) in small_configs(SEED) {
        let base = run_experiment(kind, &cfg, Some(1)).map_err(err)?.to_csv().map_err(err)?;
        for threads in [2, 4] {
            checked += 1;
            if run_experiment(kind, &cfg, Some(threads)).map_err(err)?.to_csv().map_err(err)? != base {
                differing.push(format!("{kind}/{:?} threads={threads}", cfg.flavor));
            }
        }
    }
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Pinning, params(), Flavor::Standard, SEED);
    cfg.sizes = vec![64];
    cfg.samples = 200;
    let a = run_experiment(ExperimentKind::Pinning, &cfg, Some(1)).map_err(err)?.to_csv().map_err(err)?;
    let b = run_experiment(ExperimentKind::Pinning, &cfg, Some(3)).map_err(err)?.to_csv().map_err(err)?;
    checked += 1;
    if a != b {
        differing.push("pinning N=64 threads=3".into());
    }
    Ok(outcome(differing.is_empty(), format!("{checked} reruns compared byte for byte, differing: {differing:?}")))
}

fn main() {
    let checks: [(&str, &str, Check, Duration); 11] = [
        ("AC-1", "exact DP oracle", ac1, Duration::from_secs(30)),
        ("AC-2", "symmetrization identity", ac2, Duration::from_secs(10)),
        ("AC-3", "determinant vs enumeration", ac3, Duration::from_secs(60)),
        ("AC-4", "U map and multilayer bound", ac4, Duration::from_secs(120)),
        ("AC-5", "exact distributional identities", ac5, Duration::from_secs(600)),
        ("AC-6", "density analytics", ac6, Duration::from_secs(60)),
        ("AC-7", "walk convergence trend", ac7, Duration::from_secs(1200)),
        ("AC-8", "pinning tails", ac8, Duration::from_secs(900)),
        ("AC-9", "Gaussian fluctuations", ac9, Duration::from_secs(1200)),
        ("AC-10", "samplers", ac10, Duration::from_secs(600)),
        ("AC-11", "determinism", ac11, Duration::MAX),
    ];
    let mut failed = 0;
    for (id, title, check, budget) in checks {
        let t = Instant::now();
        let res = check();
        let el = t.elapsed();
        let (passed, detail) = match res {
            Ok(o) => (o.passed && el < budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let over = if el >= budget { format!(", over the {}s budget", budget.as_secs()) } else { String::new() };
        println!("{id:<6} {} {title}: {detail} [{:.1}s{over}]", if passed { "PASS" } else { "FAIL" }, el.as_secs_f64());
        failed += usize::from(!passed);
    }
    println!("acceptance: {} of 11 criteria pass", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
