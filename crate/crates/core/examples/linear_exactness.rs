//! The cell-centred multipoint flux discretization reproduces affine
//! potentials exactly on unstructured tetrahedra.
//!
//!     cargo run --release --example linear_exactness [mesh.msh]

use ertsens::fvm::assemble_subdomain;
use ertsens::fvm::mpfa::boundary_bcs;
use ertsens::mesh::msh::load_msh;
use ertsens::sparse::lu_solve;

fn main() -> anyhow::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/validation.msh").into());
    let mesh = load_msh(&path)?;
    let grid = &mesh.domain;
    let exact = |p: &[f64; 3]| 2.0 - 0.5 * p[0] + 0.25 * p[1] + p[2];

    let bcs = boundary_bcs(grid, |_| true)?;
    let disc = assemble_subdomain(grid, &vec![0.01; grid.num_cells()], &bcs, &[])?;
    let nodal: Vec<f64> = grid.nodes.iter().map(exact).collect();
    let p = lu_solve(&disc.stiffness, &disc.dirichlet.matvec(&nodal))?;

    let geo = grid.geometry()?;
    let err = p.iter().zip(&geo.cell_centroid).map(|(v, c)| (v - exact(c)).abs()).fold(0.0, f64::max);
    let flux = disc.face_fluxes(&p, &[], Some(&nodal))?;
    let ferr = (0..geo.num_faces())
        .map(|f| {
            let n = geo.face_normal[f];
            let exact = -0.01 * geo.face_measure[f] * (-0.5 * n[0] + 0.25 * n[1] + n[2]);
            (flux[f] - exact).abs()
        })
        .fold(0.0, f64::max);
    println!("{} cells: max potential error {err:.2e}, max face flux error {ferr:.2e}", grid.num_cells());
    Ok(())
}
