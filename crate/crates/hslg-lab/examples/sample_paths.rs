//! Exact path sampling: endpoint frequencies against the quenched pmf.

use hslg_lab::environment::{generate_environment, Flavor};
use hslg_lab::polymer::{endpoint_pmf, partition_table, sample_path, Mode};
use hslg_lab::rng::RngStream;
use hslg_lab::special_fn::ModelParams;

fn main() -> hslg_lab::Result<()> {
    let params = ModelParams::new(1.0, -0.5)?;
    let n = 6;
    let env = generate_environment(params, n, Flavor::Standard, 5, 0)?;
    let table = partition_table(&env, Mode::LogFloat)?;
    let pmf = endpoint_pmf(&table);
    let mut rng = RngStream::new(5, 1);
    let draws = 100_000;
    let mut counts = vec![0usize; n];
    for _ in 0..draws {
        let (i, _) = sample_path(&table, &env, &mut rng).endpoint();
        counts[i - n] += 1;
    }
    for (r, c) in counts.iter().enumerate() {
        println!("r={r}: sampled {:.4} exact {:.4}", *c as f64 / draws as f64, pmf.probs[r]);
    }
    Ok(())
}
