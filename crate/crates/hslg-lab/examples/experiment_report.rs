//! A reduced pinning experiment written as CSV with its metadata sidecar.

use hslg_lab::environment::Flavor;
use hslg_lab::experiments::{run_experiment, ExperimentConfig, ExperimentKind};
use hslg_lab::special_fn::ModelParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams::new(1.0, -0.5)?;
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Pinning, params, Flavor::Standard, 99);
    cfg.sizes = vec![16, 32];
    cfg.samples = 100;
    let rep = run_experiment(ExperimentKind::Pinning, &cfg, None)?;
    let out = std::env::temp_dir().join("pinning_example.csv");
    rep.emit_csv(&out)?;
    print!("{}", std::fs::read_to_string(&out)?);
    for c in &rep.criteria {
        println!("{} {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}
