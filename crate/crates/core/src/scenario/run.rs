//! Scenario execution: mesh, assembly, Green solves and global sensitivity.

use std::time::Instant;

use serde::Serialize;

use super::{slice_samples, summarize, ScenarioSpec, SliceMetrics};
use crate::error::{Error, Result};
use crate::fvm::{assemble_system, MaterialField};
use crate::greens::{factorize_with, solve_greens, GreensTable};
use crate::mesh::{build_box_mesh, MixedDimMesh, Point, PointLocator};
use crate::sensitivity::{accumulate_global, volume_normalize, SensitivityField};
use crate::survey::Quadrupole;

/// Depths below the liner bottom at which slices are reported (m).
pub const SLICE_DEPTHS: [f64; 3] = [0.15, 0.6, 1.2];

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub mesh: f64,
    pub assembly: f64,
    pub factorization: f64,
    pub greens: f64,
    pub sensitivity: f64,
}

pub struct ScenarioRun {
    pub mesh: MixedDimMesh,
    pub materials: MaterialField,
    pub greens: GreensTable,
    pub configs: Vec<Quadrupole>,
    /// Global sensitivity normalized by cell volume.
    pub field: SensitivityField,
    pub timings: Timings,
}

/// Builds the mesh and the resistivity field of a scenario.
pub fn prepare(spec: &ScenarioSpec) -> Result<(MixedDimMesh, MaterialField)> {
    spec.validate()?;
    let mesh = build_box_mesh(&spec.mesh_spec()?)?;
    let materials = spec.materials(&mesh)?;
    Ok((mesh, materials))
}

/// Runs a scenario from specification to the per-volume global sensitivity.
pub fn run(spec: &ScenarioSpec) -> Result<ScenarioRun> {
    let mut timings = Timings::default();
    let t = Instant::now();
    let (mesh, materials) = prepare(spec)?;
    timings.mesh = t.elapsed().as_secs_f64();
    log::info!("mesh: {} cells, {} liner cells, {} electrodes", mesh.domain.num_cells(), mesh.num_liner_cells(), mesh.electrodes.len());

    let t = Instant::now();
    let system = assemble_system(&mesh, &materials)?;
    timings.assembly = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let fact = factorize_with(&system, spec.solver)?;
    timings.factorization = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let greens = solve_greens(&mesh, &system, &fact, spec.current)?;
    drop(fact);
    drop(system);
    timings.greens = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let configs = spec.configurations()?;
    log::info!("accumulating {} configurations", configs.len());
    let raw = accumulate_global(&mesh, &greens, &materials, &configs)?;
    let thickness = spec.liner.as_ref().map_or(1.0, |l| l.thickness);
    let field = volume_normalize(&raw, &mesh, thickness)?;
    timings.sensitivity = t.elapsed().as_secs_f64();

    Ok(ScenarioRun { mesh, materials, greens, configs, field, timings })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthSlice {
    pub depth: f64,
    pub z: f64,
    #[serde(flatten)]
    pub metrics: SliceMetrics,
    #[serde(skip)]
    pub samples: Vec<(Point, f64)>,
}

/// Slice metrics over the 1 × 1 m window under the liner at each of `depths`
/// below the liner bottom.
pub fn landfill_slices(spec: &ScenarioSpec, run: &ScenarioRun, depths: &[f64]) -> Result<Vec<DepthSlice>> {
    let liner = spec.liner.as_ref().ok_or(Error::Scenario("slices are defined relative to the liner".into()))?;
    let (lo, hi) = liner.placed();
    let locator = PointLocator::new(&run.mesh.domain);
    let window = [[lo[0], hi[0]], [lo[1], hi[1]]];
    depths
        .iter()
        .map(|&depth| {
            let z = lo[2] - depth;
            if z < spec.domain_lo[2] {
                return Err(Error::Scenario(format!("slice depth {depth} m is below the domain bottom")));
            }
            let samples = slice_samples(&run.field.domain, &locator, z, window)?;
            Ok(DepthSlice { depth, z, metrics: summarize(&samples), samples })
        })
        .collect()
}

/// Vertical probe through the centre of the liner footprint from the surface
/// to the domain bottom.
pub fn center_probe(spec: &ScenarioSpec, run: &ScenarioRun, n: usize) -> Result<Vec<(Point, f64)>> {
    let [x, y] = match &spec.liner {
        Some(l) => l.center(),
        None => [0.5 * (spec.domain_lo[0] + spec.domain_hi[0]), 0.5 * (spec.domain_lo[1] + spec.domain_hi[1])],
    };
    let locator = PointLocator::new(&run.mesh.domain);
    super::line_probe(&run.field.domain, &locator, [x, y, spec.domain_hi[2]], [x, y, spec.domain_lo[2]], n)
}
