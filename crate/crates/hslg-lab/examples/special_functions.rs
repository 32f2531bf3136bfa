//! Polygamma values and the model constants at a few parameter points.

use hslg_lab::special_fn::{digamma, polygamma, trigamma, ModelParams};

fn main() -> hslg_lab::Result<()> {
    for z in [0.5, 1.0, 2.5, 10.0] {
        println!("z={z:>4}: psi={:+.12} psi'={:.12} psi''={:+.12}", digamma(z)?, trigamma(z)?, polygamma(2, z)?);
    }
    for (theta, alpha) in [(1.0, -0.5), (2.0, -0.25), (1.5, -1.0)] {
        let c = ModelParams::new(theta, alpha)?.constants()?;
        println!(
            "theta={theta} alpha={alpha}: R={:.6} tau={:.6} sigma2={:.6} walk var={:.6} k*={:?}",
            c.r,
            c.tau,
            c.sigma2,
            c.walk_var,
            c.k_star()
        );
    }
    Ok(())
}
