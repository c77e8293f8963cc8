//! Homogeneous validation on an unstructured tetrahedral mesh read from MSH:
//! Wenner-alpha and dipole-dipole sensitivity along lines under the array,
//! compared with the half-space kernel, and a VTK file of both fields.
//!
//!     cargo run --release --example validation_fixture [mesh.msh] [out.vtk]

use ertsens::io::{write_vtk, VtkField};
use ertsens::mesh::msh::load_msh;
use ertsens::scenario::{run_validation, validation_arrays, validation_spec};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/validation.msh").into());
    let mesh = load_msh(&path)?;
    println!("{path}: {} tetrahedra, {} electrodes", mesh.domain.num_cells(), mesh.electrodes.len());

    let arrays = validation_arrays();
    let run = run_validation(&validation_spec(), &mesh, &arrays)?;
    for p in &run.probes {
        let verdict = match p.threshold {
            Some(t) if p.passed() => format!("<= {t}%"),
            Some(t) => format!("> {t}%"),
            None => String::new(),
        };
        println!("{:>14} at {:.2} m: RMSE {:6.2}% {verdict}", p.array, p.depth, p.rmse_percent);
    }

    if let Some(out) = args.next() {
        let fields: Vec<VtkField> = run.fields.iter().map(|(name, f)| VtkField { name: name.clone(), values: f.domain.clone() }).collect();
        std::fs::write(&out, write_vtk(&mesh.domain, "validation sensitivity", &fields)?)?;
        println!("wrote {out}");
    }
    Ok(())
}
