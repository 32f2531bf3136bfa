//! Multilayer partition functions by determinant and by enumeration, and the line ensemble.

use hslg_lab::environment::{generate_dyadic_environment, symmetrize, Flavor};
use hslg_lab::multilayer::{line_ensemble, zsym_multi_bruteforce, zsym_multi_lgv};
use hslg_lab::polymer::Mode;
use hslg_lab::special_fn::ModelParams;

fn main() -> hslg_lab::Result<()> {
    let params = ModelParams::new(1.0, -0.5)?;
    let env = generate_dyadic_environment(params, 5, Flavor::Standard, 9, 0)?;
    let s = symmetrize(&env);
    for r in 1..=3 {
        let det = zsym_multi_lgv(&s, 5, 4, r, Mode::Exact)?;
        let brute = zsym_multi_bruteforce(&s, 5, 4, r)?;
        println!("r={r}: log Z^(r)(5,4) = {:.12}, determinant equals enumeration: {}", det.log_value, det.exact == brute.exact);
    }

    let le = line_ensemble(&s, 4, 2, Mode::Exact)?;
    for k in 1..=2 {
        let curve: Vec<String> = (1..=le.curve_len(k)).map(|p| format!("{:.3}", le.h(k, p))).collect();
        println!("H^({k}) = [{}]", curve.join(", "));
    }
    Ok(())
}
