//! Survey design on the 48-electrode ring around the liner: geometric
//! factors of named arrays and the size of the full quadrupole enumeration
//! under different geometric-factor caps.
//!
//!     cargo run --release --example survey_design

use ertsens::analytic::geometric_factor;
use ertsens::scenario::build_case;
use ertsens::survey::{enumerate_configs, wenner_alpha};

fn main() -> anyhow::Result<()> {
    let spec = build_case(1, None, None)?;
    let positions = spec.electrode_positions()?;
    let lines = spec.electrode_lines()?;
    println!("{} electrodes on {} lines", positions.len(), lines.len());

    for q in wenner_alpha(&lines[0], 1)?.iter().take(3) {
        println!("{q:?}: K = {:.3} m", geometric_factor(&q.points(&positions)?)?);
    }

    for k_max in [f64::INFINITY, 1e4, 1e3, 1e2] {
        println!("k_max {k_max:>8}: {:>7} configurations", enumerate_configs(&positions, k_max).len());
    }
    Ok(())
}
