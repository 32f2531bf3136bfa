//! The half-space partition function is twice the symmetrized one, exactly.

use hslg_lab::environment::{generate_dyadic_environment, symmetrize, Flavor};
use hslg_lab::multilayer::zsym_single;
use hslg_lab::polymer::{partition_table, Mode};
use hslg_lab::special_fn::ModelParams;

fn main() -> hslg_lab::Result<()> {
    let params = ModelParams::new(1.0, -0.5)?;
    let env = generate_dyadic_environment(params, 5, Flavor::Standard, 3, 0)?;
    let table = partition_table(&env, Mode::Exact)?;
    let s = symmetrize(&env);
    for (i, j, _) in env.sites().filter(|&(i, j, _)| i == j || i == 5) {
        let zs = zsym_single(&s, i, j, Mode::Exact)?.exact.expect("exact mode");
        let z = table.exact(i, j).expect("exact mode");
        println!("({i},{j}): 2 Z_sym == Z: {}", zs.scale2(1) == *z);
    }
    Ok(())
}
