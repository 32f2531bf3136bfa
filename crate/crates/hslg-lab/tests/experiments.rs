mod common;

use hslg_lab::experiments::{run_experiment, ExperimentKind, StatReport};

#[test]
fn thread_count_does_not_change_csv() {
    for (kind, cfg) in common::small_configs(5) {
        let a = run_experiment(kind, &cfg, Some(1)).unwrap().to_csv().unwrap();
        let b = run_experiment(kind, &cfg, Some(3)).unwrap().to_csv().unwrap();
        assert_eq!(a, b, "{kind} ({:?})", cfg.flavor);
    }
}

#[test]
fn reports_carry_criteria_and_roundtrip_as_json() {
    for (kind, cfg) in common::small_configs(6) {
        let rep = run_experiment(kind, &cfg, None).unwrap();
        assert!(!rep.criteria.is_empty(), "{kind}");
        assert!(!rep.rows.is_empty(), "{kind}");
        let back: StatReport = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        assert_eq!(back.criteria, rep.criteria);
        assert_eq!(back.to_csv().unwrap(), rep.to_csv().unwrap());
        let width = rep.header.len();
        assert!(rep.rows.iter().all(|r| r.len() == width));
    }
}

#[test]
fn pinning_k0_tail_is_exactly_one() {
    let (_, cfg) = common::small_configs(7).into_iter().find(|(k, _)| *k == ExperimentKind::Pinning).unwrap();
    let rep = run_experiment(ExperimentKind::Pinning, &cfg, None).unwrap();
    for &n in &cfg.sizes {
        assert!(rep.criterion(&format!("tail_k0_is_one_N{n}")).unwrap().passed);
        assert_eq!(rep.statistic(n, "median_tail_k0").unwrap().value, 1.0);
    }
}

#[test]
fn emit_csv_writes_metadata() {
    let (kind, cfg) = common::small_configs(8).remove(0);
    let rep = run_experiment(kind, &cfg, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    rep.emit_csv(&path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), rep.to_csv().unwrap());
    let meta = std::fs::read_to_string(dir.path().join("r.csv.meta")).unwrap();
    for key in ["experiment", "version", "seed", "passed"] {
        assert!(meta.contains(key), "{meta}");
    }
}
