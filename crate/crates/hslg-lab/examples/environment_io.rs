//! Generate an environment, write it out and read it back.

use hslg_lab::environment::{generate_environment, Environment, Flavor};
use hslg_lab::special_fn::ModelParams;

fn main() -> hslg_lab::Result<()> {
    let params = ModelParams::new(1.0, -0.5)?;
    let env = generate_environment(params, 5, Flavor::Stationary, 2024, 0)?;
    let path = std::env::temp_dir().join("hslg_env_example.txt");
    env.write(&path)?;
    let back = Environment::read(&path)?;
    assert_eq!(back.to_text(), env.to_text());
    println!("{} sites, rng {}", back.num_sites(), back.rng_id());
    for (i, j, w) in back.sites().take(6) {
        println!("W({i},{j}) = {w:.6}");
    }
    std::fs::remove_file(&path).ok();
    Ok(())
}
