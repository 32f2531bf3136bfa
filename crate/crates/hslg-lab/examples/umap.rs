//! Exhaustive check of the path-pair map and the multilayer upper bound.

use hslg_lab::environment::{generate_dyadic_environment, symmetrize, Flavor};
use hslg_lab::special_fn::ModelParams;
use hslg_lab::umap::{check_sbd_inequality, verify_domain};

fn main() -> hslg_lab::Result<()> {
    let params = ModelParams::new(1.0, -0.5)?;
    let envs: Vec<_> = (0..3).map(|s| generate_dyadic_environment(params, 5, Flavor::Standard, 1, s)).collect::<Result<_, _>>()?;
    let senvs: Vec<_> = envs.iter().map(symmetrize).collect();
    for (m, n) in [(2, 2), (3, 2), (4, 3), (4, 4)] {
        let r = verify_domain(1, m, n, &senvs)?;
        println!(
            "({m},{n}) x=1: {} pairs, {} images, max preimages {}, violations {}",
            r.pairs,
            r.images,
            r.max_preimages,
            r.violations.len()
        );
    }
    let r = check_sbd_inequality(&senvs[0], 6, 4, 2)?;
    println!("bound (6,4) k=2: log lhs {:.4} <= log rhs {:.4}: {}", r.lhs, r.rhs, r.holds);
    Ok(())
}
