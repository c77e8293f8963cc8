//! Subcommand implementations. Each returns the process exit status on
//! success; errors are mapped by [`exit_code`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{probe_csv, read_vtk, write_vtk, VtkField};
use crate::mesh::{build_box_mesh, msh::load_msh, Point, PointLocator};
use crate::scenario::{
    self, build_case, center_probe, landfill_slices, line_probe, run_validation, validation_arrays, validation_spec, ScenarioSpec, SLICE_DEPTHS,
};
use crate::survey::{configs_csv, enumerate_configs, Quadrupole};

pub const EXIT_OK: i32 = 0;
pub const EXIT_THRESHOLD: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Samples of the vertical centre probe written by scenario runs.
pub const CENTER_PROBE_SAMPLES: usize = 301;

/// Configuration and input problems map to 2, failures during the
/// computation to 3.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Scenario(_)
        | Error::Quadrupole(_)
        | Error::MeshSpec(_)
        | Error::Material(_)
        | Error::Json(_)
        | Error::MshParse { .. }
        | Error::MshBinary
        | Error::MshVersion(_)
        | Error::UnsupportedElement { .. }
        | Error::LinerNotConforming { .. }
        | Error::ElectrodeNotConforming { .. }
        | Error::MissingGroup(_)
        | Error::FieldFile(_)
        | Error::PointOutside(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

struct Artifacts {
    root: PathBuf,
}

impl Artifacts {
    fn new(root: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    fn write(&self, rel: &str, content: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, content)?;
        log::info!("wrote {}", path.display());
        Ok(())
    }
}

fn out_dir(cfg: &RunConfig, default: &str) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn runtime(cfg: &RunConfig, t: Instant, stages: Value) -> Value {
    if cfg.timings {
        json!({ "total": t.elapsed().as_secs_f64(), "stages": stages })
    } else {
        Value::Null
    }
}

fn depth_key(d: f64) -> String {
    format!("{d}")
}

fn array_names(spec: &ScenarioSpec) -> Result<Vec<(String, Quadrupole)>> {
    if spec.configs == validation_spec().configs {
        return Ok(validation_arrays());
    }
    Ok(spec.configurations()?.into_iter().enumerate().map(|(i, q)| (format!("config_{i}"), q)).collect())
}

/// Homogeneous half-space validation with analytic line probes.
pub fn cmd_validate(cfg: &RunConfig) -> Result<i32> {
    let spec = cfg.validation_spec()?;
    let arrays = array_names(&spec)?;
    let t = Instant::now();
    let mesh = match &cfg.mesh_file {
        Some(p) => load_msh(p)?,
        None => build_box_mesh(&spec.mesh_spec()?)?,
    };
    let run = run_validation(&spec, &mesh, &arrays)?;
    let solve_s = t.elapsed().as_secs_f64();

    let out = Artifacts::new(out_dir(cfg, "validation_out"))?;
    let mut rmse: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut failures = Vec::new();
    for p in &run.probes {
        rmse.entry(p.array.clone()).or_default().insert(depth_key(p.depth), p.rmse_percent);
        if !p.passed() {
            failures.push(json!({ "array": p.array, "depth": p.depth, "rmse": p.rmse_percent, "threshold": p.threshold }));
        }
        let num: Vec<(Point, f64)> = p.samples.iter().map(|s| (s.at, s.numerical)).collect();
        let ana: Vec<(Point, f64)> = p.samples.iter().map(|s| (s.at, s.analytic)).collect();
        out.write(&format!("probes/{}_{}_numerical.csv", p.array, depth_key(p.depth)), &probe_csv(&num))?;
        out.write(&format!("probes/{}_{}_analytic.csv", p.array, depth_key(p.depth)), &probe_csv(&ana))?;
    }

    let positions = spec.electrode_positions()?;
    let locator = PointLocator::new(&mesh.domain);
    let mut slices = Map::new();
    for (name, field) in &run.fields {
        let fields = [
            VtkField { name: "sensitivity".into(), values: field.domain.clone() },
            VtkField { name: "resistivity".into(), values: run.materials.rho.clone() },
        ];
        out.write(&format!("fields/{name}.vtk"), &write_vtk(&mesh.domain, name, &fields)?)?;
        let samples = vertical_slice(&field.domain, &locator, &spec, &positions)?;
        slices.insert(name.clone(), json!({ "plane_y": positions[0][1], "samples": samples.len() }));
        out.write(&format!("slices/{name}_vertical.csv"), &probe_csv(&samples))?;
    }

    let thresholds: Vec<Value> = scenario::RMSE_THRESHOLDS.iter().map(|(a, d, t)| json!({ "array": a, "depth": d, "max_percent": t })).collect();
    let summary = json!({
        "rmse": rmse,
        "thresholds": thresholds,
        "failures": failures,
        "slices": slices,
        "counts": {
            "cells": mesh.domain.num_cells(),
            "electrodes": mesh.electrodes.len(),
            "configurations": arrays.len(),
        },
        "params": {
            "scenario": spec,
            "mesh_file": cfg.mesh_file,
            "probe_samples": scenario::PROBE_SAMPLES,
        },
        "runtime_s": runtime(cfg, t, json!({ "solve": solve_s })),
    });
    out.write("summary.json", &pretty(&summary)?)?;
    for p in &run.probes {
        println!(
            "{:>14} {:>5} m  rmse {:7.2}%  {}",
            p.array,
            p.depth,
            p.rmse_percent,
            match p.threshold {
                Some(th) if p.rmse_percent <= th => format!("pass (≤ {th}%)"),
                Some(th) => format!("FAIL (> {th}%)"),
                None => "reported".into(),
            }
        );
    }
    Ok(if failures.is_empty() { EXIT_OK } else { EXIT_THRESHOLD })
}

type Map = serde_json::Map<String, Value>;

/// Field values on the vertical plane through the electrode line, from one
/// metre beyond the outer electrodes and one metre deep.
fn vertical_slice(values: &[f64], locator: &PointLocator, spec: &ScenarioSpec, positions: &[Point]) -> Result<Vec<(Point, f64)>> {
    const NX: usize = 120;
    const NZ: usize = 40;
    let x0 = (positions.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min) - 1.0).max(spec.domain_lo[0]);
    let x1 = (positions.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max) + 1.0).min(spec.domain_hi[0]);
    let top = spec.domain_hi[2];
    let bottom = (top - 1.0).max(spec.domain_lo[2]);
    let y = positions[0][1];
    let mut out = Vec::with_capacity(NX * NZ);
    for k in 0..NZ {
        let z = top - (top - bottom) * (k as f64 + 0.5) / NZ as f64;
        let row = line_probe(values, locator, [x0, y, z], [x1, y, z], NX)?;
        out.extend(row);
    }
    Ok(out)
}

fn pretty(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Landfill scenario: global sensitivity, depth slices and centre probe.
pub fn cmd_scenario(cfg: &RunConfig) -> Result<i32> {
    let spec = cfg.scenario_spec()?;
    let t = Instant::now();
    let run = scenario::run(&spec)?;
    let slices = if spec.liner.is_some() { landfill_slices(&spec, &run, &SLICE_DEPTHS)? } else { Vec::new() };
    let probe = center_probe(&spec, &run, CENTER_PROBE_SAMPLES)?;

    let out = Artifacts::new(out_dir(cfg, "scenario_out"))?;
    let fields = [
        VtkField { name: "sensitivity".into(), values: run.field.domain.clone() },
        VtkField { name: "resistivity".into(), values: run.materials.rho.clone() },
    ];
    out.write("fields/sensitivity.vtk", &write_vtk(&run.mesh.domain, "global sensitivity per volume", &fields)?)?;
    if let Some(liner) = &run.mesh.liner {
        let f = [VtkField { name: "sensitivity".into(), values: run.field.liner.clone() }];
        out.write("fields/liner.vtk", &write_vtk(liner, "liner sensitivity per volume", &f)?)?;
    }
    for s in &slices {
        out.write(&format!("slices/depth_{}.csv", depth_key(s.depth)), &probe_csv(&s.samples))?;
    }
    out.write("probes/center_vertical.csv", &probe_csv(&probe))?;

    let summary = json!({
        "rmse": {},
        "slices": slices,
        "counts": {
            "cells": run.mesh.domain.num_cells(),
            "liner_cells": run.mesh.num_liner_cells(),
            "electrodes": run.mesh.electrodes.len(),
            "configurations": run.configs.len(),
        },
        "params": spec,
        "runtime_s": runtime(cfg, t, serde_json::to_value(run.timings)?),
    });
    out.write("summary.json", &pretty(&summary)?)?;
    for s in &slices {
        println!("{:>5} m below liner  min {:.4e}  max {:.4e}  avg {:.4e}", s.depth, s.metrics.min, s.metrics.max, s.metrics.average);
    }
    Ok(EXIT_OK)
}

/// Electrode positions for enumeration: a case layout or a scenario document.
fn enumeration_positions(cfg: &RunConfig) -> Result<Vec<Point>> {
    match (&cfg.scenario, cfg.case) {
        (Some(_), Some(_)) => Err(Error::Config("give either a scenario document or a case, not both".into())),
        (Some(s), None) => s.electrode_positions(),
        (None, Some(c)) => build_case(c, None, None).map_err(|e| Error::Config(e.to_string()))?.electrode_positions(),
        (None, None) => Err(Error::Config("a case (1, 2 or 3) or a scenario document is required".into())),
    }
}

/// Canonical configuration list filtered by geometric factor. Without
/// `--out` the CSV goes to stdout and the count line to stderr.
pub fn cmd_enumerate(cfg: &RunConfig) -> Result<i32> {
    if let Some(k) = cfg.kmax {
        if k.is_nan() || k < 0.0 {
            return Err(Error::Config(format!("kmax must be non-negative, got {k}")));
        }
    }
    let positions = enumeration_positions(cfg)?;
    let k_max = cfg.kmax.unwrap_or(f64::INFINITY);
    let configs = enumerate_configs(&positions, k_max);
    let csv = configs_csv(&configs);
    match &cfg.out {
        Some(dir) => {
            Artifacts::new(dir.clone())?.write("configurations.csv", &csv)?;
            println!("count {}", configs.len());
        }
        None => {
            print!("{csv}");
            eprintln!("count {}", configs.len());
        }
    }
    Ok(EXIT_OK)
}

/// Re-extracts a line probe from a field file written by this tool.
pub fn cmd_probe(field_file: &Path, field: &str, from: Point, to: Point, samples: usize, out: Option<&Path>) -> Result<i32> {
    let text = std::fs::read_to_string(field_file).map_err(|e| Error::FieldFile(format!("{}: {e}", field_file.display())))?;
    let (grid, fields) = read_vtk(&text)?;
    if grid.dim != 3 {
        return Err(Error::FieldFile("probes need a 3D field file".into()));
    }
    let values = fields.into_iter().find(|f| f.name == field).ok_or_else(|| Error::FieldFile(format!("no field named {field:?}")))?;
    let locator = PointLocator::new(&grid);
    let series = line_probe(&values.values, &locator, from, to, samples)?;
    let csv = probe_csv(&series);
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}

/// Parses `x,y,z`.
pub fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok([x, y, z]),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}
