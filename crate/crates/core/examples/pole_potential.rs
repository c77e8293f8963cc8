//! Forward modelling of a single current electrode in a homogeneous
//! half-space, compared with the closed-form potential ρI/(2πr) at a second
//! electrode and along a surface line.
//!
//!     cargo run --release --example pole_potential

use ertsens::analytic::halfspace_potential;
use ertsens::fvm::{assemble_system, MaterialField};
use ertsens::greens::{factorize, solve_greens};
use ertsens::mesh::{build_box_mesh, BoxMeshSpec, ElectrodeSpec, Grading, PointLocator};

fn main() -> anyhow::Result<()> {
    let (rho, current, r) = (100.0, 1.0, 0.66);
    let pad = 40.0;
    let spec = BoxMeshSpec {
        lo: [-pad, -pad, -pad],
        hi: [pad + r, pad, 0.0],
        grading: Grading { near_electrode: 0.05, near_liner: 0.05, boundary: 10.0, growth: 1.6 },
        liner: None,
        electrodes: vec![ElectrodeSpec { x: 0.0, y: 0.0, length: 0.05 }, ElectrodeSpec { x: r, y: 0.0, length: 0.05 }],
    };
    let mesh = build_box_mesh(&spec)?;
    println!("{} cells", mesh.domain.num_cells());

    let materials = MaterialField::homogeneous(&mesh, rho, 1.0, 2e-7, 1.0, 2.5e-3);
    let system = assemble_system(&mesh, &materials)?;
    let greens = solve_greens(&mesh, &system, &factorize(&system)?, current)?;

    let v = greens.potential_at(0, 1)?;
    let exact = halfspace_potential(rho, current, [0.0; 3], [r, 0.0, 0.0])?;
    println!("electrode 1: {v:.4} V, half-space {exact:.4} V ({:+.2}%)", 100.0 * (v - exact) / exact);

    // Cell values just below the surface, which carry the usual cell-size error.
    let locator = PointLocator::new(&mesh.domain);
    let phi = greens.domain_potential(0);
    println!("{:>6} {:>10} {:>10}", "x (m)", "numerical", "analytic");
    for x in [0.2, 0.5, 1.0, 2.0, 5.0] {
        let p = [x, 0.3, -0.02];
        let c = locator.locate(p).ok_or_else(|| anyhow::anyhow!("{p:?} is outside the mesh"))?;
        println!("{x:>6} {:>10.4} {:>10.4}", phi[c], halfspace_potential(rho, current, [0.0; 3], p)?);
    }
    Ok(())
}
