//! End-to-end experiment descriptions: the homogeneous validation setup and
//! the box-liner landfill cases, from specification to global sensitivity.

mod metrics;
mod run;
mod validation;

pub use metrics::{line_probe, rmse_percent, slice_metrics, slice_samples, summarize, SliceMetrics, SLICE_SAMPLES};
pub use run::{center_probe, landfill_slices, prepare, run, DepthSlice, ScenarioRun, Timings, SLICE_DEPTHS};
pub use validation::{run_validation, validation_arrays, ProbeComparison, ProbeSample, ValidationRun, PROBE_DEPTHS, PROBE_SAMPLES, RMSE_THRESHOLDS};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fvm::MaterialField;
use crate::greens::SolverOptions;
use crate::mesh::{BoxMeshSpec, ElectrodeSpec, Grading, HoleSpec, LinerSpec, MixedDimMesh, Point};
use crate::survey::{self, Quadrupole};

/// Box-shaped open liner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LinerParams {
    pub lo: Point,
    pub hi: Point,
    /// Thickness ε (m).
    pub thickness: f64,
    /// Resistivity ρ_λ (Ω·m).
    pub rho: f64,
    /// Diameter of a hole centred in the bottom panel (m).
    #[serde(default)]
    pub hole_diameter: Option<f64>,
    /// Downward shift applied to the whole box (m).
    #[serde(default)]
    pub shift: f64,
    /// When false the membrane is left out of the mesh; the box still sets
    /// the inside resistivity and the slice window.
    #[serde(default = "enabled")]
    pub membrane: bool,
}

fn enabled() -> bool {
    true
}

impl LinerParams {
    /// Liner box after the shift.
    pub fn placed(&self) -> (Point, Point) {
        let mut lo = self.lo;
        let mut hi = self.hi;
        lo[2] -= self.shift;
        hi[2] -= self.shift;
        (lo, hi)
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.lo[0] + self.hi[0]), 0.5 * (self.lo[1] + self.hi[1])]
    }

    pub fn bottom(&self) -> f64 {
        self.placed().0[2]
    }
}

/// Electrode layout: one of the landfill cases or explicit top positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Layout {
    Case(u8),
    Explicit(Vec<[f64; 2]>),
}

/// Where the measurement configurations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ConfigSource {
    /// In-line Wenner-alpha and dipole-dipole arrays along every electrode line.
    NamedArrays,
    /// Named arrays plus every `stride`-th configuration of the enumeration
    /// filtered by `k_max` (m). `stride = 1` uses the whole enumeration.
    Enumerate {
        k_max: f64,
        stride: usize,
    },
    Explicit(Vec<Quadrupole>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub domain_lo: Point,
    pub domain_hi: Point,
    pub grading: Grading,
    pub liner: Option<LinerParams>,
    /// Resistivity inside the liner box (Ω·m).
    pub rho_inside: f64,
    /// Resistivity everywhere else (Ω·m).
    pub rho_outside: f64,
    pub layout: Layout,
    pub electrode_length: f64,
    pub electrode_radius: f64,
    pub rho_electrode: f64,
    /// Injection current (A).
    pub current: f64,
    pub configs: ConfigSource,
    #[serde(default)]
    pub solver: SolverOptions,
}

/// Liner box shared by the landfill cases.
const LINER_LO: Point = [4.5, 4.5, 2.9];
const LINER_HI: Point = [5.5, 5.5, 3.0];
const WALL_OFFSET: f64 = 0.04;

/// Default strided subset of the enumeration used by scenario runs.
pub const DEFAULT_STRIDE: usize = 128;
pub const DEFAULT_K_MAX: f64 = 1e4;

/// Mesh grading of the landfill cases. Sizes are coarser than the 0.02 m used
/// around electrodes in the reference study so that a single-core direct
/// solve fits in a few gigabytes.
pub fn landfill_grading() -> Grading {
    Grading { near_electrode: 0.04, near_liner: 0.05, boundary: 2.0, growth: 1.8 }
}

fn symmetric(offsets: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = offsets.iter().flat_map(|&o| [5.0 - o, 5.0 + o]).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Electrodes along the four sides of a square ring at distance `d` from the
/// centre, `along` giving the positions along each side.
fn ring(d: f64, along: &[f64]) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for &a in along {
        out.push([a, 5.0 - d]);
    }
    for &a in along {
        out.push([5.0 + d, a]);
    }
    for &a in along.iter().rev() {
        out.push([a, 5.0 + d]);
    }
    for &a in along.iter().rev() {
        out.push([5.0 - d, a]);
    }
    out
}

/// Top positions of the electrodes of a landfill case.
pub fn case_layout(case: u8) -> Result<Vec<[f64; 2]>> {
    let outer = 0.5 + WALL_OFFSET;
    let inner = 0.5 - WALL_OFFSET;
    match case {
        1 => {
            let along: Vec<f64> = (0..6).map(|i| 0.04 + 0.08 * i as f64).collect();
            Ok(ring(outer, &symmetric(&along)))
        }
        2 => {
            let mut v = ring(outer, &symmetric(&[0.08, 0.24, 0.40]));
            v.extend(ring(inner, &symmetric(&[0.06, 0.18, 0.30])));
            Ok(v)
        }
        3 => {
            let mut v = ring(outer, &symmetric(&[0.08, 0.24, 0.40]));
            for y in symmetric(&[0.07, 0.21, 0.35]) {
                for x in symmetric(&[0.1, 0.3]) {
                    v.push([x, y]);
                }
            }
            Ok(v)
        }
        _ => Err(Error::Scenario(format!("unknown case {case}, expected 1, 2 or 3"))),
    }
}

/// One of the three landfill cases, optionally with a hole in the liner
/// bottom and a downward liner shift.
pub fn build_case(case: u8, hole_diameter: Option<f64>, shift: Option<f64>) -> Result<ScenarioSpec> {
    case_layout(case)?;
    for (what, v) in [("hole diameter", hole_diameter), ("shift", shift)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Scenario(format!("{what} must be positive, got {v}")));
            }
        }
    }
    if let Some(h) = hole_diameter {
        if !(0.02..=0.1).contains(&h) {
            log::warn!("hole diameter {h} m is outside the studied range 0.02-0.1 m");
        }
    }
    if let Some(s) = shift {
        if s != 0.05 {
            log::warn!("liner shift {s} m differs from the studied 0.05 m");
        }
    }
    let spec = ScenarioSpec {
        domain_lo: [0.0; 3],
        domain_hi: [10.0, 10.0, 3.0],
        grading: landfill_grading(),
        liner: Some(LinerParams {
            lo: LINER_LO,
            hi: LINER_HI,
            thickness: 2e-3,
            rho: 1e15,
            hole_diameter,
            shift: shift.unwrap_or(0.0),
            membrane: true,
        }),
        rho_inside: 20.0,
        rho_outside: 100.0,
        layout: Layout::Case(case),
        electrode_length: 0.05,
        electrode_radius: 2.5e-3,
        rho_electrode: 2e-7,
        current: 1.0,
        configs: ConfigSource::Enumerate { k_max: DEFAULT_K_MAX, stride: DEFAULT_STRIDE },
        solver: SolverOptions::default(),
    };
    spec.validate()?;
    Ok(spec)
}

/// Electrode spacing of the homogeneous validation line (m).
pub const VALIDATION_SPACING: f64 = 2.0 / 3.0;

/// Homogeneous 100 Ω·m box with four surface electrodes from (2, 2) to (4, 2).
pub fn validation_spec() -> ScenarioSpec {
    let q = Quadrupole::new;
    ScenarioSpec {
        domain_lo: [0.0; 3],
        domain_hi: [6.0, 4.0, 2.0],
        grading: Grading { near_electrode: 0.05, near_liner: 0.05, boundary: 0.5, growth: 1.5 },
        liner: None,
        rho_inside: 100.0,
        rho_outside: 100.0,
        layout: Layout::Explicit((0..4).map(|i| [2.0 + VALIDATION_SPACING * i as f64, 2.0]).collect()),
        electrode_length: 0.05,
        electrode_radius: 2.5e-3,
        rho_electrode: 2e-7,
        current: 1.0,
        // Wenner-alpha C1-P1-P2-C2 and dipole-dipole C2-C1-P1-P2 (n = 1).
        configs: ConfigSource::Explicit(vec![q(0, 3, 1, 2), q(1, 0, 2, 3)]),
        solver: SolverOptions::default(),
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Scenario(m));
        for k in 0..3 {
            if !(self.domain_hi[k] > self.domain_lo[k]) {
                return err("domain box is empty".into());
            }
        }
        for (what, v) in [
            ("rho_inside", self.rho_inside),
            ("rho_outside", self.rho_outside),
            ("electrode_length", self.electrode_length),
            ("electrode_radius", self.electrode_radius),
            ("rho_electrode", self.rho_electrode),
            ("current", self.current),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return err(format!("{what} must be positive, got {v}"));
            }
        }
        if let Some(l) = &self.liner {
            if !(l.thickness > 0.0 && l.rho > 0.0 && l.shift >= 0.0) {
                return err("liner thickness and resistivity must be positive, shift non-negative".into());
            }
            let (lo, hi) = l.placed();
            for k in 0..3 {
                if !(lo[k] > self.domain_lo[k] && hi[k] <= self.domain_hi[k] && hi[k] > lo[k]) {
                    return err("liner box is not inside the domain".into());
                }
            }
            if l.hole_diameter.is_some() && !l.membrane {
                return err("a hole needs the liner membrane".into());
            }
            if let Some(h) = l.hole_diameter {
                if !(h > 0.0) || h >= (hi[0] - lo[0]).min(hi[1] - lo[1]) {
                    return err(format!("hole diameter {h} does not fit the liner bottom"));
                }
            }
        }
        for (e, p) in self.electrode_positions()?.iter().enumerate() {
            if !(p[0] > self.domain_lo[0] && p[0] < self.domain_hi[0] && p[1] > self.domain_lo[1] && p[1] < self.domain_hi[1]) {
                return err(format!("electrode {e} lies outside the domain"));
            }
        }
        if let ConfigSource::Enumerate { k_max, stride } = self.configs {
            if !(k_max > 0.0) || stride == 0 {
                return err("enumeration needs positive k_max and stride".into());
            }
        }
        Ok(())
    }

    /// Top points of the electrodes on the surface.
    pub fn electrode_positions(&self) -> Result<Vec<Point>> {
        let xy = match &self.layout {
            Layout::Case(c) => case_layout(*c)?,
            Layout::Explicit(v) => v.clone(),
        };
        Ok(xy.into_iter().map(|[x, y]| [x, y, self.domain_hi[2]]).collect())
    }

    pub fn mesh_spec(&self) -> Result<BoxMeshSpec> {
        let liner = self.liner.as_ref().filter(|l| l.membrane).map(|l| {
            let (lo, hi) = l.placed();
            LinerSpec { lo, hi, hole: l.hole_diameter.map(|d| HoleSpec { center: l.center(), diameter: d }) }
        });
        let electrodes = self.electrode_positions()?.iter().map(|p| ElectrodeSpec { x: p[0], y: p[1], length: self.electrode_length }).collect();
        Ok(BoxMeshSpec { lo: self.domain_lo, hi: self.domain_hi, grading: self.grading, liner, electrodes })
    }

    /// Resistivities: `rho_inside` for cells whose centroid lies within the
    /// liner box, `rho_outside` elsewhere.
    pub fn materials(&self, mesh: &MixedDimMesh) -> Result<MaterialField> {
        let (rho_liner, thickness) = self.liner.as_ref().map_or((1.0, 1.0), |l| (l.rho, l.thickness));
        let mut m = MaterialField::homogeneous(mesh, self.rho_outside, rho_liner, self.rho_electrode, thickness, self.electrode_radius);
        if let Some(l) = &self.liner {
            let (lo, hi) = l.placed();
            for (c, r) in mesh.domain.geometry()?.cell_centroid.iter().zip(m.rho.iter_mut()) {
                if (0..3).all(|k| c[k] > lo[k] && c[k] < hi[k]) {
                    *r = self.rho_inside;
                }
            }
        }
        Ok(m)
    }

    /// Electrode lines used for the named arrays: the rows of electrodes that
    /// share a y (or x) coordinate, ordered along the line.
    pub fn electrode_lines(&self) -> Result<Vec<Vec<usize>>> {
        let pos = self.electrode_positions()?;
        let mut lines = Vec::new();
        for axis in 0..2 {
            let other = 1 - axis;
            let mut keys: Vec<f64> = pos.iter().map(|p| p[other]).collect();
            keys.sort_by(f64::total_cmp);
            keys.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            for k in keys {
                let mut line: Vec<usize> = (0..pos.len()).filter(|&i| (pos[i][other] - k).abs() < 1e-9).collect();
                if line.len() >= 4 {
                    line.sort_by(|&a, &b| pos[a][axis].total_cmp(&pos[b][axis]));
                    lines.push(line);
                }
            }
        }
        Ok(lines)
    }

    /// In-line Wenner-alpha arrays at every spacing and dipole-dipole arrays
    /// with unit dipoles and separations 1 to 4 along every electrode line.
    pub fn named_arrays(&self) -> Result<Vec<Quadrupole>> {
        let mut out = Vec::new();
        for line in self.electrode_lines()? {
            for step in 1..=(line.len() - 1) / 3 {
                out.extend(survey::wenner_alpha(&line, step)?);
            }
            for n in 1..=4 {
                out.extend(survey::dipole_dipole(&line, 1, n)?);
            }
        }
        Ok(out)
    }

    /// The configuration list of a run, deterministic and free of duplicates
    /// (configurations are compared in canonical form).
    pub fn configurations(&self) -> Result<Vec<Quadrupole>> {
        let mut out = match &self.configs {
            ConfigSource::Explicit(v) => {
                for q in v {
                    q.validate()?;
                }
                return Ok(v.clone());
            }
            ConfigSource::NamedArrays => self.named_arrays()?,
            ConfigSource::Enumerate { k_max, stride } => {
                let mut v = self.named_arrays()?;
                let pos = self.electrode_positions()?;
                v.extend(survey::enumerate_configs(&pos, *k_max).into_iter().step_by(*stride).map(|(q, _)| q));
                v
            }
        };
        let mut seen = std::collections::HashSet::new();
        out.retain(|q| seen.insert(q.canonical()));
        Ok(out)
    }
}
