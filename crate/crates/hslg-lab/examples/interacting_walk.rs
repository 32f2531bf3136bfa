//! Interacting random walk pair: sup norm against the square-root law.

use hslg_lab::gibbs::{sample_irw, McmcConfig};
use hslg_lab::rng::RngStream;
use hslg_lab::special_fn::ModelParams;
use hslg_lab::stats::quantile;

fn main() -> hslg_lab::Result<()> {
    let params = ModelParams::new(1.0, -0.5)?;
    let cfg = McmcConfig { samples: 300, ..McmcConfig::default() };
    let mut prev = None;
    for t in [16, 64] {
        let mut rng = RngStream::new(23, t as u64);
        let (draws, run) = sample_irw(params, t, 0.0, 0.0, &cfg, true, &mut rng)?;
        let sups: Vec<f64> = draws.iter().map(|s| s.sup_abs()).collect();
        let q = quantile(&sups, 0.95);
        print!("T={t}: q95 sup {q:.2}, ess {:.0}", run.ess);
        if let Some(p) = prev {
            print!(", ratio {:.2} (sqrt law 2)", q / p);
        }
        println!();
        prev = Some(q);
    }
    Ok(())
}
