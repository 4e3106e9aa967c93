//! Writes the bundled scenarios as JSON configs into the given directory.

use std::path::PathBuf;

use gridscope_core::simulate::scenarios;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "configs".into()));
    std::fs::create_dir_all(&dir)?;
    let mut small = scenarios::calibrated_scenario(7);
    small.duration = 3 * 86_400;
    for s in &mut small.sites {
        s.pilot_arrival_rate /= 12.0;
    }
    for (name, cfg) in [
        ("calibrated.json", scenarios::emit_calibrated_scenario()),
        ("small.json", small),
        ("default.json", scenarios::default_scenario(1)),
        ("chain.json", scenarios::chain_scenario(0.4, 2050.0, 62, 1)),
    ] {
        std::fs::write(dir.join(name), cfg.to_json() + "\n")?;
    }
    Ok(())
}
