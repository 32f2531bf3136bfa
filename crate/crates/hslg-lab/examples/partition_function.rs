//! Log partition functions in float and exact arithmetic, and the quenched endpoint law.

use hslg_lab::environment::{generate_dyadic_environment, Flavor};
use hslg_lab::polymer::{endpoint_pmf, partition_table, Mode};
use hslg_lab::special_fn::ModelParams;

fn main() -> hslg_lab::Result<()> {
    let params = ModelParams::new(1.0, -0.5)?;
    let n = 8;
    let env = generate_dyadic_environment(params, n, Flavor::Standard, 11, 0)?;
    let float = partition_table(&env, Mode::LogFloat)?;
    let exact = partition_table(&env, Mode::Exact)?;
    let z = exact.exact(n, n).expect("exact mode");
    println!("log Z({n},{n}): float {:.15}, exact {:.15}", float.log_z(n, n), z.ln());

    let pmf = endpoint_pmf(&float);
    for (r, p) in pmf.probs.iter().enumerate() {
        println!("P(endpoint = ({}, {})) = {p:.6}", n + r, n - r);
    }
    println!("tail mass at k=2: {:.6}", pmf.tail(2));
    Ok(())
}
