//! Homogeneous half-space comparison: numerical sensitivities of the
//! validation arrays against the analytic kernel along horizontal lines.

use serde::Serialize;

use super::{line_probe, rmse_percent, ScenarioSpec};
use crate::analytic;
use crate::error::{Error, Result};
use crate::fvm::{assemble_system, MaterialField};
use crate::greens::{factorize_with, solve_greens, GreensTable};
use crate::mesh::{MixedDimMesh, Point, PointLocator};
use crate::sensitivity::{quadrupole_field, volume_normalize, SensitivityField};
use crate::survey::Quadrupole;

/// Depths of the horizontal probe lines below the surface (m).
pub const PROBE_DEPTHS: [f64; 3] = [0.15, 0.2, 0.3];
pub const PROBE_SAMPLES: usize = 200;

/// Maximum %RMSE per (array, depth); depths without an entry are reported only.
pub const RMSE_THRESHOLDS: [(&str, f64, f64); 4] =
    [("wenner_alpha", 0.15, 12.0), ("dipole_dipole", 0.15, 8.0), ("wenner_alpha", 0.3, 3.0), ("dipole_dipole", 0.3, 3.0)];

/// Named arrays on the four validation electrodes.
pub fn validation_arrays() -> Vec<(String, Quadrupole)> {
    vec![("wenner_alpha".into(), Quadrupole::new(0, 3, 1, 2)), ("dipole_dipole".into(), Quadrupole::new(1, 0, 2, 3))]
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSample {
    pub at: Point,
    pub numerical: f64,
    pub analytic: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeComparison {
    pub array: String,
    pub depth: f64,
    pub rmse_percent: f64,
    pub threshold: Option<f64>,
    #[serde(skip)]
    pub samples: Vec<ProbeSample>,
}

impl ProbeComparison {
    pub fn passed(&self) -> bool {
        self.threshold.is_none_or(|t| self.rmse_percent <= t)
    }
}

pub struct ValidationRun {
    pub greens: GreensTable,
    pub materials: MaterialField,
    /// Per-volume sensitivity per named array.
    pub fields: Vec<(String, SensitivityField)>,
    pub probes: Vec<ProbeComparison>,
}

fn threshold(array: &str, depth: f64) -> Option<f64> {
    RMSE_THRESHOLDS.iter().find(|(a, d, _)| *a == array && (d - depth).abs() < 1e-12).map(|t| t.2)
}

/// Solves the validation setup on `mesh` and compares each array's
/// per-volume sensitivity with the half-space kernel along lines from the
/// first to the last electrode at each probe depth.
pub fn run_validation(spec: &ScenarioSpec, mesh: &MixedDimMesh, arrays: &[(String, Quadrupole)]) -> Result<ValidationRun> {
    if spec.liner.is_some() || spec.rho_inside != spec.rho_outside {
        return Err(Error::Scenario("validation compares against a homogeneous half-space".into()));
    }
    let materials = spec.materials(mesh)?;
    let system = assemble_system(mesh, &materials)?;
    let fact = factorize_with(&system, spec.solver)?;
    let greens = solve_greens(mesh, &system, &fact, spec.current)?;
    drop(fact);
    let positions = spec.electrode_positions()?;
    let (first, last) = match (positions.first(), positions.last()) {
        (Some(a), Some(b)) if positions.len() >= 2 => (*a, *b),
        _ => return Err(Error::Scenario("validation needs at least two electrodes".into())),
    };
    let locator = PointLocator::new(&mesh.domain);
    let mut fields = Vec::new();
    let mut probes = Vec::new();
    for (name, q) in arrays {
        let field = volume_normalize(&quadrupole_field(mesh, &greens, q, &materials)?, mesh, 1.0)?;
        let pts = q.points(&positions)?;
        for &depth in &PROBE_DEPTHS {
            let z = spec.domain_hi[2] - depth;
            // Keep the end samples off the vertical through the outer electrodes.
            let h = 0.5 / PROBE_SAMPLES as f64;
            let lerp = |t: f64| [first[0] + t * (last[0] - first[0]), first[1] + t * (last[1] - first[1]), z];
            let series = line_probe(&field.domain, &locator, lerp(h), lerp(1.0 - h), PROBE_SAMPLES)?;
            let samples = series
                .into_iter()
                .map(|(at, numerical)| {
                    let analytic = analytic::quadrupole_kernel(&pts, at, spec.current)?;
                    Ok(ProbeSample { at, numerical, analytic })
                })
                .collect::<Result<Vec<_>>>()?;
            let num: Vec<f64> = samples.iter().map(|s| s.numerical).collect();
            let ana: Vec<f64> = samples.iter().map(|s| s.analytic).collect();
            probes.push(ProbeComparison {
                array: name.clone(),
                depth,
                rmse_percent: rmse_percent(&num, &ana)?,
                threshold: threshold(name, depth),
                samples,
            });
        }
        fields.push((name.clone(), field));
    }
    Ok(ValidationRun { greens, materials, fields, probes })
}
