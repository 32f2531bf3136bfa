mod common;

use std::collections::HashMap;

use common::{confined_paths, exact_path_sum, float_path_sum, sym_weight, Exact};
use hslg_lab::environment::{generate_dyadic_environment, generate_environment, symmetrize, Flavor};
use hslg_lab::multilayer::zsym_single;
use hslg_lab::polymer::{endpoint_pmf, partition_table, sample_path, Mode};
use hslg_lab::rng::RngStream;
use hslg_lab::special_fn::ModelParams;

fn params() -> ModelParams {
    ModelParams::new(1.0, -0.5).unwrap()
}

#[test]
fn exact_dp_matches_enumeration_at_every_site() {
    for n in 2..=6 {
        for s in 0..4 {
            let env = generate_dyadic_environment(params(), n, Flavor::Standard, 77, s).unwrap();
            let t = partition_table(&env, Mode::Exact).unwrap();
            for (i, j, _) in env.sites() {
                let want = exact_path_sum(&confined_paths(i, j), &|a, b| Exact::from_f64(env.w(a, b)));
                assert_eq!(t.exact(i, j).unwrap().to_string(), want.render(), "n={n} stream={s} site ({i},{j})");
            }
        }
    }
}

#[test]
fn point_to_line_matches_all_confined_paths() {
    let n = 3;
    let env = generate_environment(params(), n, Flavor::Standard, 5, 0).unwrap();
    let t = partition_table(&env, Mode::LogFloat).unwrap();
    let all: Vec<_> = (0..n).flat_map(|r| confined_paths(n + r, n - r)).collect();
    assert_eq!(all.len(), 6);
    let want = float_path_sum(&all, &|i, j| env.w(i, j)).ln();
    assert!((t.point_to_line(0).unwrap() - want).abs() < 1e-10);
}

#[test]
fn symmetrization_identity_against_enumeration() {
    for s in 0..5 {
        let env = generate_dyadic_environment(params(), 5, Flavor::Standard, 13, s).unwrap();
        let senv = symmetrize(&env);
        for (m, k, _) in env.sites() {
            let paths = common::paths_to(m, k, &|_, _| true);
            let zs = exact_path_sum(&paths, &|i, j| {
                let w = Exact::from_f64(env.w(i.max(j), i.min(j)));
                if i == j {
                    w.half()
                } else {
                    w
                }
            });
            let lib = zsym_single(&senv, m, k, Mode::Exact).unwrap().exact.unwrap();
            assert_eq!(lib.to_string(), zs.render(), "site ({m},{k})");
            let z = partition_table(&env, Mode::Exact).unwrap();
            assert_eq!(zs.mul(&Exact::from_f64(2.0)).render(), z.exact(m, k).unwrap().to_string());
            let f = float_path_sum(&paths, &|i, j| sym_weight(&|a, b| env.w(a, b), i, j));
            assert!((f.ln() - lib.ln()).abs() < 1e-12);
        }
    }
}

#[test]
fn endpoint_pmf_against_sampled_paths() {
    let n = 4;
    let env = generate_environment(params(), n, Flavor::Standard, 21, 0).unwrap();
    let t = partition_table(&env, Mode::LogFloat).unwrap();
    let pmf = endpoint_pmf(&t);
    assert!((pmf.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let mut rng = RngStream::new(21, 99);
    let draws = 1_000_000;
    let mut counts = vec![0usize; n];
    for _ in 0..draws {
        let p = sample_path(&t, &env, &mut rng);
        assert!(p.sites().iter().all(|&(i, j)| j <= i));
        counts[p.endpoint().0 - n] += 1;
    }
    let tv: f64 = counts.iter().zip(&pmf.probs).map(|(c, p)| (*c as f64 / draws as f64 - p).abs()).sum::<f64>() / 2.0;
    assert!(tv <= 0.01, "total variation {tv}");
}

#[test]
fn path_sampler_matches_gibbs_weights() {
    let n = 3;
    let env = generate_environment(params(), n, Flavor::Standard, 2024, 0).unwrap();
    let t = partition_table(&env, Mode::LogFloat).unwrap();
    let paths: Vec<_> = (0..n).flat_map(|r| confined_paths(n + r, n - r)).collect();
    let weights: Vec<f64> = paths.iter().map(|p| p.iter().map(|&(i, j)| env.w(i, j)).product()).collect();
    let total: f64 = weights.iter().sum();
    let draws = 1_000_000;
    let mut counts: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut rng = RngStream::new(2024, 1);
    for _ in 0..draws {
        *counts.entry(sample_path(&t, &env, &mut rng).sites().to_vec()).or_default() += 1;
    }
    assert!(counts.keys().all(|k| paths.contains(k)));
    let obs: Vec<f64> = paths.iter().map(|p| *counts.get(p).unwrap_or(&0) as f64).collect();
    let exp: Vec<f64> = weights.iter().map(|w| w / total * draws as f64).collect();
    let stat: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e).powi(2) / e).sum();
    // 0.999 quantile of chi-square with 5 degrees of freedom
    assert!(stat < 20.515, "chi-square {stat}");
}

#[test]
fn scaling_weights_leaves_pmf_unchanged() {
    let env = generate_environment(params(), 12, Flavor::Standard, 8, 0).unwrap();
    let a = endpoint_pmf(&partition_table(&env, Mode::LogFloat).unwrap());
    let b = endpoint_pmf(&partition_table(&env.scaled(3.7), Mode::LogFloat).unwrap());
    for (x, y) in a.probs.iter().zip(&b.probs) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn increment_vector_starts_at_zero() {
    let env = generate_environment(params(), 10, Flavor::Standard, 3, 0).unwrap();
    let v = partition_table(&env, Mode::LogFloat).unwrap().increment_vector(5).unwrap();
    assert_eq!(v[0], 0.0);
    assert_eq!(v.len(), 6);
}
