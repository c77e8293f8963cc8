//! Sensitivity of a quadrupole reading to the resistivity of individual
//! cells, including a cell of a resistive liner, checked against central
//! finite differences of full forward solves.
//!
//!     cargo run --release --example sensitivity_check

use ertsens::fvm::{assemble_system, MaterialField};
use ertsens::greens::{factorize, solve_greens};
use ertsens::mesh::{build_box_mesh, BoxMeshSpec, ElectrodeSpec, Grading, LinerSpec, PointLocator};
use ertsens::sensitivity::{fd_sensitivity, quadrupole_field, CellRef};
use ertsens::survey::Quadrupole;

fn main() -> anyhow::Result<()> {
    let spec = BoxMeshSpec {
        lo: [0.0; 3],
        hi: [3.0, 3.0, 1.5],
        grading: Grading { near_electrode: 0.2, near_liner: 0.2, boundary: 0.6, growth: 1.6 },
        liner: Some(LinerSpec { lo: [1.2, 1.2, 1.2], hi: [1.8, 1.8, 1.5], hole: None }),
        electrodes: [(1.0, 1.5), (1.5, 1.5), (2.0, 1.5), (1.5, 2.0)].iter().map(|&(x, y)| ElectrodeSpec { x, y, length: 0.1 }).collect(),
    };
    let mesh = build_box_mesh(&spec)?;
    println!("{} cells, {} liner cells", mesh.domain.num_cells(), mesh.num_liner_cells());
    let rho_liner = 1e15;
    let materials = MaterialField::homogeneous(&mesh, 100.0, rho_liner, 2e-7, 2e-3, 2.5e-3);
    let system = assemble_system(&mesh, &materials)?;
    let greens = solve_greens(&mesh, &system, &factorize(&system)?, 1.0)?;

    // Electrode 1 sits inside the liner.
    let q = Quadrupole::new(0, 2, 1, 3);
    println!("reading {:.6e} V", greens.reading(&q, 1.0)?);
    let field = quadrupole_field(&mesh, &greens, &q, &materials)?;

    let locator = PointLocator::new(&mesh.domain);
    let shallow = locator.locate([1.1, 1.5, 1.42]).expect("inside the box");
    let deep = locator.locate([1.5, 1.4, 0.9]).expect("inside the box");
    let liner = (0..mesh.num_liner_cells()).max_by(|&a, &b| field.liner[a].abs().total_cmp(&field.liner[b].abs())).expect("liner cells");
    for (name, cell, adjoint, rho) in [
        ("shallow", CellRef::Domain(shallow), field.domain[shallow], materials.rho[shallow]),
        ("deep", CellRef::Domain(deep), field.domain[deep], materials.rho[deep]),
        ("liner", CellRef::Liner(liner), field.liner[liner], rho_liner),
    ] {
        let fd = fd_sensitivity(&mesh, &materials, &q, cell, 1e-3 * rho, 1.0)?;
        println!("{name:>8}: adjoint {adjoint:+.6e}  finite difference {fd:+.6e}  rel {:.1e}", ((adjoint - fd) / fd).abs());
    }
    Ok(())
}
