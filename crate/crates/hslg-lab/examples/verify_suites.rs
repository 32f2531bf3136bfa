//! The exact verification suites on a small budget.

use hslg_lab::special_fn::ModelParams;
use hslg_lab::verify::{verify_dp, verify_identity, verify_lgv, verify_sbd, verify_umap};

fn main() -> hslg_lab::Result<()> {
    let p = ModelParams::new(1.0, -0.5)?;
    let reports = [
        verify_dp(p, &[2, 3, 4], 5, 1)?,
        verify_identity(p, &[2, 3, 4], 5, 1)?,
        verify_lgv(p, 4, 2, 3, 1)?,
        verify_umap(p, &[(2, 2), (3, 2)], &[1, 2], 2, 1)?,
        verify_sbd(p, 5, &[1, 2], 5, 1)?,
    ];
    for r in &reports {
        println!("{:>8}: {} checks, {} skipped, passed {}", r.name, r.checks, r.skipped, r.passed());
    }
    Ok(())
}
