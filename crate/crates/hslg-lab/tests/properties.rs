use proptest::prelude::*;

use hslg_lab::cli::parse_config;
use hslg_lab::environment::{generate_dyadic_environment, generate_environment, symmetrize, Environment, Flavor};
use hslg_lab::exact::Dyadic;
use hslg_lab::gibbs::{gibbs_log_density, DiamondDomain};
use hslg_lab::multilayer::zsym_single;
use hslg_lab::polymer::{endpoint_pmf, log_add_exp, partition_table, Mode};
use hslg_lab::special_fn::{digamma, polygamma, trigamma, ModelParams};
use hslg_lab::stats::{ks_one_sample, ks_two_sample};

fn bound_params() -> impl Strategy<Value = ModelParams> {
    (0.2f64..4.0, 0.05f64..0.95).prop_map(|(theta, frac)| ModelParams::new(theta, -frac * theta).unwrap())
}

fn flavor() -> impl Strategy<Value = Flavor> {
    prop_oneof![Just(Flavor::Standard), Just(Flavor::Stationary)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn digamma_recurrence(z in 0.05f64..50.0) {
        let lhs = digamma(z + 1.0).unwrap() - digamma(z).unwrap();
        prop_assert!((lhs - 1.0 / z).abs() <= 1e-11 * (1.0 / z).max(1.0));
        prop_assert!(trigamma(z).unwrap() > trigamma(z + 0.5).unwrap());
        prop_assert!(polygamma(2, z).unwrap() < 0.0);
    }

    #[test]
    fn bound_phase_constants(p in bound_params()) {
        let c = p.constants().unwrap();
        prop_assert!(c.tau > 0.0 && c.sigma2 > 0.0 && c.walk_var > 0.0);
        prop_assert!((1..20).all(|k| c.delta_k(k) < c.delta_k(k + 1)));
        if let Some(k) = c.k_star() {
            prop_assert!(c.delta_k(k) > 0.0);
            prop_assert!(k == 1 || c.delta_k(k - 1) <= 0.0);
        }
    }

    #[test]
    fn environment_text_roundtrip(p in bound_params(), n in 1usize..8, seed: u64, stream in 0u64..1000, f in flavor()) {
        let env = generate_environment(p, n, f, seed, stream).unwrap();
        let back = Environment::from_text(&env.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), env.to_text());
        prop_assert_eq!(generate_environment(p, n, f, seed, stream).unwrap().to_text(), env.to_text());
    }

    #[test]
    fn pmf_is_a_distribution_and_scale_free(p in bound_params(), n in 2usize..20, seed: u64, c in 0.01f64..100.0) {
        let env = generate_environment(p, n, Flavor::Standard, seed, 0).unwrap();
        let t = partition_table(&env, Mode::LogFloat).unwrap();
        let pmf = endpoint_pmf(&t);
        prop_assert!(pmf.probs.iter().all(|&q| q >= 0.0));
        prop_assert!((pmf.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let scaled = endpoint_pmf(&partition_table(&env.scaled(c), Mode::LogFloat).unwrap());
        for (a, b) in pmf.probs.iter().zip(&scaled.probs) {
            prop_assert!((a - b).abs() < 1e-11);
        }
        for m in 1..n {
            prop_assert!(t.point_to_line(m).unwrap() <= t.point_to_line(m - 1).unwrap());
        }
    }

    #[test]
    fn symmetrization_identity_holds_exactly(p in bound_params(), n in 1usize..6, seed: u64) {
        let env = generate_dyadic_environment(p, n, Flavor::Standard, seed, 0).unwrap();
        let t = partition_table(&env, Mode::Exact).unwrap();
        let s = symmetrize(&env);
        for (i, j, _) in env.sites() {
            let zs = zsym_single(&s, i, j, Mode::Exact).unwrap().exact.unwrap();
            prop_assert!(zs.scale2(1) == *t.exact(i, j).unwrap());
        }
    }

    #[test]
    fn gibbs_density_translation(shift in -5.0f64..5.0, vals in proptest::collection::vec(-3.0f64..3.0, 10)) {
        let d = DiamondDomain::new(4, [(1, 2), (1, 3), (2, 2), (2, 3)]).unwrap();
        let p = ModelParams::new(1.0, -0.5).unwrap();
        let (u, b) = vals.split_at(d.interior.len());
        let b = &b[..d.boundary.len()];
        let up: Vec<f64> = u.iter().map(|x| x + shift).collect();
        let bp: Vec<f64> = b.iter().map(|x| x + shift).collect();
        let a = gibbs_log_density(&d, p, u, b).unwrap();
        let c = gibbs_log_density(&d, p, &up, &bp).unwrap();
        prop_assert!((a - c).abs() < 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn log_add_exp_is_symmetric(a in -700.0f64..700.0, b in -700.0f64..700.0) {
        let x = log_add_exp(a, b);
        prop_assert_eq!(x, log_add_exp(b, a));
        prop_assert!(x >= a.max(b) && x <= a.max(b) + std::f64::consts::LN_2 + 1e-12);
    }

    #[test]
    fn dyadic_arithmetic_matches_small_integers(a in -1000i64..1000, b in -1000i64..1000, k in -20i64..20) {
        let (x, y) = (Dyadic::from_int(a), Dyadic::from_int(b));
        prop_assert!(&x + &y == Dyadic::from_int(a + b));
        prop_assert!(&x * &y == Dyadic::from_int(a * b));
        prop_assert_eq!(x.scale2(k).to_f64(), a as f64 * 2f64.powi(k as i32));
    }

    #[test]
    fn ks_statistics_are_bounded(x in proptest::collection::vec(-10.0f64..10.0, 8..60), y in proptest::collection::vec(-10.0f64..10.0, 8..60)) {
        let r = ks_two_sample(&x, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.d) && (0.0..=1.0).contains(&r.p));
        prop_assert_eq!(r.d, ks_two_sample(&y, &x).unwrap().d);
        prop_assert_eq!(ks_two_sample(&x, &x).unwrap().d, 0.0);
        let u = ks_one_sample(&x, |t| ((t + 10.0) / 20.0).clamp(0.0, 1.0)).unwrap();
        prop_assert!((0.0..=1.0).contains(&u.d));
    }

    #[test]
    fn config_lines_parse_or_name_the_line(key in "[a-z_]{1,12}", pad in 0usize..5) {
        let text = format!("# header\n{}{key} = 1\n", " ".repeat(pad));
        match parse_config(&text) {
            Ok(_) => prop_assert!(hslg_lab::cli::CONFIG_KEYS.contains(&key.as_str())),
            Err(e) => prop_assert!(e.to_string().starts_with("line 2:")),
        }
    }
}
