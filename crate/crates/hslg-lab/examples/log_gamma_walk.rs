//! Increment law, walk samples, the limiting endpoint pmf and the Q R_0 identity.

use hslg_lab::lgrw::{increment_cdf, increment_density, qr0_identity, sample_limiting_pmf, sample_walk};
use hslg_lab::rng::RngStream;
use hslg_lab::special_fn::ModelParams;

fn main() -> hslg_lab::Result<()> {
    let params = ModelParams::new(1.0, -0.5)?;
    for x in [-2.0, 0.0, 2.0, 5.0] {
        println!("x={x:+}: p={:.6} F={:.6}", increment_density(params, x)?, increment_cdf(params, x)?);
    }
    let mut rng = RngStream::new(31, 0);
    let walk = sample_walk(params, 10, &mut rng)?;
    println!("S_0..S_10 = {:.3?}", walk.values);

    let pmf = sample_limiting_pmf(params, 5, 1e-12, &mut rng)?;
    println!("Q = {:.6}, limiting pmf head {:.4?}", pmf.q, pmf.probs);

    let (_, ks) = qr0_identity(params, 10_000, &mut rng)?;
    println!("Q R_0 against inverse gamma: D={:.4} p={:.3}", ks.d, ks.p);
    Ok(())
}
