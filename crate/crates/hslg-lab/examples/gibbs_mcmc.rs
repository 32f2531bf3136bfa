//! Slice-sampling Gibbs chain on a small diamond domain.

use hslg_lab::gibbs::{mcmc_sample_gibbs, DiamondDomain, McmcConfig};
use hslg_lab::rng::RngStream;
use hslg_lab::special_fn::ModelParams;
use hslg_lab::stats::{mean, variance};

fn main() -> hslg_lab::Result<()> {
    let params = ModelParams::new(1.0, -0.5)?;
    let domain = DiamondDomain::new(4, [(1, 2), (1, 3), (2, 2), (2, 3)])?;
    println!("interior {:?}", domain.interior);
    println!("boundary {:?}", domain.boundary);
    let boundary: Vec<f64> = (0..domain.boundary.len()).map(|k| k as f64 * 0.5).collect();
    let mut rng = RngStream::new(17, 0);
    let run = mcmc_sample_gibbs(&domain, params, &boundary, &McmcConfig::default(), &mut rng)?;
    println!("ess {:.0}, converged {}", run.ess, run.converged);
    for (k, v) in domain.interior.iter().enumerate() {
        let x = run.site(k);
        println!("{v:?}: mean {:+.4} var {:.4}", mean(&x), variance(&x));
    }
    Ok(())
}
