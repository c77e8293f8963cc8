//! Landfill scenario: global sensitivity of a strided configuration subset
//! around a liner, with and without a hole in the liner bottom. Uses a
//! coarser grading than the CLI so that it finishes in well under a minute.
//!
//!     cargo run --release --example landfill_scenario [case]

use ertsens::mesh::Grading;
use ertsens::scenario::{build_case, landfill_slices, run, ConfigSource, SLICE_DEPTHS};

fn main() -> anyhow::Result<()> {
    let case: u8 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    for hole in [None, Some(0.1)] {
        let mut spec = build_case(case, hole, None)?;
        spec.grading = Grading { near_electrode: 0.08, near_liner: 0.1, boundary: 2.0, growth: 1.8 };
        spec.configs = ConfigSource::Enumerate { k_max: 1e4, stride: 1024 };
        let r = run(&spec)?;
        println!(
            "case {case}, hole {hole:?}: {} cells, {} configurations, {:.1} s",
            r.mesh.domain.num_cells(),
            r.configs.len(),
            r.timings.mesh + r.timings.assembly + r.timings.factorization + r.timings.greens + r.timings.sensitivity
        );
        for s in landfill_slices(&spec, &r, &SLICE_DEPTHS)? {
            println!("  {:.2} m below liner: min {:.3e} max {:.3e} average {:.3e}", s.depth, s.metrics.min, s.metrics.max, s.metrics.average);
        }
    }
    Ok(())
}
