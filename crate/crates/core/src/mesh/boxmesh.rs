//! Graded tensor-product box mesher with Kuhn (6 tetrahedra per hexahedron)
//! subdivision, an optional open-box liner and vertical electrodes.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::grid::{cross, dot, norm, sub, Point, SubdomainGrid};
use super::{ElectrodeInfo, MixedDimMesh};
use crate::error::{Error, Result};

/// Target cell sizes. Spacing grows geometrically by `growth` per cell away
/// from electrodes and the liner until it reaches `boundary`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Grading {
    pub near_electrode: f64,
    pub near_liner: f64,
    pub boundary: f64,
    pub growth: f64,
}

impl Grading {
    pub fn uniform(h: f64) -> Self {
        Self { near_electrode: h, near_liner: h, boundary: h, growth: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct HoleSpec {
    /// Horizontal position of the hole center on the liner bottom.
    pub center: [f64; 2],
    pub diameter: f64,
}

/// Open box (bottom and four walls, no lid) spanning `lo..hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LinerSpec {
    pub lo: Point,
    pub hi: Point,
    pub hole: Option<HoleSpec>,
}

/// Vertical electrode hanging from the top surface at (x, y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ElectrodeSpec {
    pub x: f64,
    pub y: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct BoxMeshSpec {
    pub lo: Point,
    pub hi: Point,
    pub grading: Grading,
    pub liner: Option<LinerSpec>,
    pub electrodes: Vec<ElectrodeSpec>,
}

struct Zone {
    a: f64,
    b: f64,
    h: f64,
}

fn spacing(x: f64, zones: &[Zone], boundary: f64, growth: f64) -> f64 {
    let mut h = boundary;
    for z in zones {
        let dist = if x < z.a {
            z.a - x
        } else if x > z.b {
            x - z.b
        } else {
            0.0
        };
        h = h.min(z.h + (growth - 1.0) * dist);
    }
    h
}

/// Lattice coordinates along one axis: every breakpoint is a lattice point and
/// each gap is filled by equal increments of ∫ 1/h.
fn axis_points(lo: f64, hi: f64, mut breaks: Vec<f64>, zones: &[Zone], boundary: f64, growth: f64) -> Vec<f64> {
    const SAMPLES: usize = 256;
    let tol = 1e-9 * (hi - lo);
    breaks.push(lo);
    breaks.push(hi);
    breaks.retain(|&b| b >= lo - tol && b <= hi + tol);
    breaks.sort_by(f64::total_cmp);
    let mut uniq: Vec<f64> = Vec::new();
    for b in breaks {
        match uniq.last() {
            Some(&l) if b - l <= tol => {}
            _ => uniq.push(b.clamp(lo, hi)),
        }
    }
    *uniq.last_mut().unwrap() = hi;
    uniq[0] = lo;

    let mut pts = vec![lo];
    for w in uniq.windows(2) {
        let (u, v) = (w[0], w[1]);
        let dx = (v - u) / SAMPLES as f64;
        let mut cum = vec![0.0];
        for s in 0..SAMPLES {
            let x = u + (s as f64 + 0.5) * dx;
            cum.push(cum[s] + dx / spacing(x, zones, boundary, growth));
        }
        let total = cum[SAMPLES];
        let n = ((total - 1e-6).ceil() as usize).max(1);
        let mut s = 0;
        for k in 1..n {
            let target = total * k as f64 / n as f64;
            while cum[s + 1] < target {
                s += 1;
            }
            let t = (target - cum[s]) / (cum[s + 1] - cum[s]);
            pts.push(u + (s as f64 + t) * dx);
        }
        pts.push(v);
    }
    pts
}

fn nearest(axis: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, &a) in axis.iter().enumerate() {
        if (a - x).abs() < (axis[best] - x).abs() {
            best = i;
        }
    }
    best
}

fn validate(spec: &BoxMeshSpec) -> Result<()> {
    let g = &spec.grading;
    for (name, v) in [("near_electrode", g.near_electrode), ("near_liner", g.near_liner), ("boundary", g.boundary)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::MeshSpec(format!("grading {name} must be positive, got {v}")));
        }
    }
    if !(g.growth >= 1.0 && g.growth.is_finite()) {
        return Err(Error::MeshSpec(format!("grading growth must be at least 1, got {}", g.growth)));
    }
    for k in 0..3 {
        if !(spec.hi[k] > spec.lo[k]) {
            return Err(Error::MeshSpec("domain box is empty".into()));
        }
    }
    if let Some(l) = &spec.liner {
        for k in 0..3 {
            if !(l.lo[k] > spec.lo[k] && l.hi[k] <= spec.hi[k] && l.hi[k] > l.lo[k]) {
                return Err(Error::MeshSpec("liner box is not inside the domain".into()));
            }
            if k < 2 && l.hi[k] >= spec.hi[k] {
                return Err(Error::MeshSpec("liner walls touch the lateral boundary".into()));
            }
        }
        if let Some(h) = &l.hole {
            let wx = l.hi[0] - l.lo[0];
            let wy = l.hi[1] - l.lo[1];
            if !(h.diameter > 0.0) || h.diameter > wx.min(wy) {
                return Err(Error::MeshSpec(format!("hole diameter {} does not fit the liner bottom", h.diameter)));
            }
            let r = 0.5 * h.diameter;
            if h.center[0] - r < l.lo[0] || h.center[0] + r > l.hi[0] || h.center[1] - r < l.lo[1] || h.center[1] + r > l.hi[1] {
                return Err(Error::MeshSpec("hole extends beyond the liner bottom".into()));
            }
        }
    }
    let depth = spec.hi[2] - spec.lo[2];
    for (e, el) in spec.electrodes.iter().enumerate() {
        if !(el.length > 0.0) || el.length >= depth {
            return Err(Error::MeshSpec(format!("electrode {e} length {} must be in (0, {depth})", el.length)));
        }
        if el.x <= spec.lo[0] || el.x >= spec.hi[0] || el.y <= spec.lo[1] || el.y >= spec.hi[1] {
            return Err(Error::MeshSpec(format!("electrode {e} lies outside the domain")));
        }
    }
    Ok(())
}

/// Builds the mesh, computes geometry and mortars.
pub fn build_box_mesh(spec: &BoxMeshSpec) -> Result<MixedDimMesh> {
    validate(spec)?;
    let g = &spec.grading;
    let mut axes = Vec::with_capacity(3);
    for k in 0..3 {
        let mut breaks = Vec::new();
        let mut zones = Vec::new();
        if let Some(l) = &spec.liner {
            breaks.extend([l.lo[k], l.hi[k]]);
            zones.push(Zone { a: l.lo[k], b: l.hi[k], h: g.near_liner });
            if let (Some(h), true) = (&l.hole, k < 2) {
                let r = 0.5 * h.diameter;
                let c = h.center[k];
                breaks.extend([c - r, c, c + r]);
                zones.push(Zone { a: c - r, b: c + r, h: g.near_liner.min(r) });
            }
        }
        for el in &spec.electrodes {
            if k < 2 {
                let x = if k == 0 { el.x } else { el.y };
                breaks.push(x);
                zones.push(Zone { a: x, b: x, h: g.near_electrode });
            } else {
                let tip = spec.hi[2] - el.length;
                breaks.push(tip);
                zones.push(Zone { a: tip, b: spec.hi[2], h: g.near_electrode });
            }
        }
        axes.push(axis_points(spec.lo[k], spec.hi[k], breaks, &zones, g.boundary, g.growth));
    }
    let (nx, ny, nz) = (axes[0].len(), axes[1].len(), axes[2].len());
    let id = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
    let mut nodes = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                nodes.push([axes[0][i], axes[1][j], axes[2][k]]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::with_capacity((nx - 1) * (ny - 1) * (nz - 1) * 24);
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                for p in PERMS {
                    let mut v = [i, j, k];
                    let mut tet = [id(i, j, k), 0, 0, 0];
                    for (s, &axis) in p.iter().enumerate() {
                        v[axis] += 1;
                        tet[s + 1] = id(v[0], v[1], v[2]);
                    }
                    let pts: Vec<Point> = tet.iter().map(|&n| nodes[n]).collect();
                    if super::grid::signed_volume(&pts) < 0.0 {
                        tet.swap(1, 2);
                    }
                    cells.extend_from_slice(&tet);
                }
            }
        }
    }
    let mut mesh = MixedDimMesh::new(SubdomainGrid::new(3, nodes, cells));
    mesh.domain.compute_geometry(spec.hi[2])?;

    if let Some(l) = &spec.liner {
        mesh.liner = Some(liner_grid(&mesh.domain, &axes, l)?);
    }
    let (ax, ay, az) = (&axes[0], &axes[1], &axes[2]);
    for el in &spec.electrodes {
        let i = nearest(ax, el.x);
        let j = nearest(ay, el.y);
        let ktip = nearest(az, spec.hi[2] - el.length).min(nz - 2);
        let ids: Vec<usize> = (ktip..nz).rev().map(|k| id(i, j, k)).collect();
        let pts: Vec<Point> = ids.iter().map(|&n| mesh.domain.nodes[n]).collect();
        let nseg = ids.len() - 1;
        let cells = (0..nseg).flat_map(|s| [s, s + 1]).collect();
        let mut grid = SubdomainGrid::new(1, pts.clone(), cells);
        grid.parent_nodes = Some(ids);
        mesh.electrodes.push(grid);
        mesh.electrode_info.push(ElectrodeInfo {
            anchor: pts[0],
            length: pts[0][2] - pts[nseg][2],
            snap_distance: ((ax[i] - el.x).powi(2) + (ay[j] - el.y).powi(2)).sqrt(),
        });
    }
    mesh.compute_geometry()?;
    mesh.build_mortars()?;
    Ok(mesh)
}

fn liner_grid(domain: &SubdomainGrid, axes: &[Vec<f64>], l: &LinerSpec) -> Result<SubdomainGrid> {
    let geo = domain.geometry()?;
    let idx = |k: usize, x: f64| nearest(&axes[k], x);
    let lo = [idx(0, l.lo[0]), idx(1, l.lo[1]), idx(2, l.lo[2])];
    let hi = [idx(0, l.hi[0]), idx(1, l.hi[1]), idx(2, l.hi[2])];
    let (nx, ny) = (axes[0].len(), axes[1].len());
    let ijk = |n: usize| [n % nx, (n / nx) % ny, n / (nx * ny)];
    let inside = |v: [usize; 3], skip: usize| (0..3).all(|k| k == skip || (lo[k] <= v[k] && v[k] <= hi[k]));

    let mut parents: Vec<usize> = Vec::new();
    let mut local = std::collections::HashMap::new();
    let mut cells = Vec::new();
    for f in 0..geo.num_faces() {
        let fnodes = &geo.face_nodes[f * 3..f * 3 + 3];
        let v: Vec<[usize; 3]> = fnodes.iter().map(|&n| ijk(n)).collect();
        // (axis, plane index, outward sign) of each open-box panel.
        let panels = [(2, lo[2], -1.0), (0, lo[0], -1.0), (0, hi[0], 1.0), (1, lo[1], -1.0), (1, hi[1], 1.0)];
        let Some(&(axis, _, sign)) = panels.iter().find(|&&(axis, plane, _)| v.iter().all(|p| p[axis] == plane && inside(*p, axis))) else {
            continue;
        };
        let c = geo.face_centroid[f];
        if axis == 2 {
            if let Some(h) = &l.hole {
                let r = ((c[0] - h.center[0]).powi(2) + (c[1] - h.center[1]).powi(2)).sqrt();
                if r < 0.5 * h.diameter {
                    continue;
                }
            }
        }
        let mut tri = [fnodes[0], fnodes[1], fnodes[2]];
        let p: Vec<Point> = tri.iter().map(|&n| domain.nodes[n]).collect();
        let n = cross(sub(p[1], p[0]), sub(p[2], p[0]));
        let mut out = [0.0; 3];
        out[axis] = sign;
        if dot(n, out) < 0.0 {
            tri.swap(1, 2);
        }
        debug_assert!(norm(n) > 0.0);
        for node in tri {
            let l = *local.entry(node).or_insert_with(|| {
                parents.push(node);
                parents.len() - 1
            });
            cells.push(l);
        }
    }
    if cells.is_empty() {
        return Err(Error::MeshSpec("liner does not cover any lattice face".into()));
    }
    let nodes = parents.iter().map(|&n| domain.nodes[n]).collect();
    let mut grid = SubdomainGrid::new(2, nodes, cells);
    grid.parent_nodes = Some(parents);
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(h: f64) -> BoxMeshSpec {
        BoxMeshSpec { lo: [0.0; 3], hi: [1.0; 3], grading: Grading::uniform(h), liner: None, electrodes: vec![] }
    }

    #[test]
    fn unit_cube_single_hex() {
        let m = build_box_mesh(&cube(1.0)).unwrap();
        assert_eq!(m.domain.num_cells(), 6);
        let geo = m.domain.geometry().unwrap();
        for v in &geo.cell_measure {
            assert!((v - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!(m.mortars.is_empty());
    }

    #[test]
    fn graded_axis_hits_breakpoints_and_grows() {
        let zones = [Zone { a: 5.0, b: 5.0, h: 0.1 }];
        let p = axis_points(0.0, 10.0, vec![5.0], &zones, 2.0, 1.5);
        assert!(p.contains(&5.0));
        assert_eq!(p[0], 0.0);
        assert_eq!(*p.last().unwrap(), 10.0);
        let h: Vec<f64> = p.windows(2).map(|w| w[1] - w[0]).collect();
        let i = p.iter().position(|&x| x == 5.0).unwrap();
        assert!(h[i] < 0.15 && h[i - 1] < 0.15);
        assert!(h[0] > 1.0);
        assert!(h.iter().all(|&s| s <= 2.0 + 1e-12));
    }

    #[test]
    fn electrode_longer_than_depth_is_rejected() {
        let mut s = cube(0.5);
        s.electrodes.push(ElectrodeSpec { x: 0.5, y: 0.5, length: 1.5 });
        assert!(matches!(build_box_mesh(&s), Err(Error::MeshSpec(_))));
    }

    #[test]
    fn liner_covers_open_box() {
        let spec = BoxMeshSpec {
            lo: [0.0, 0.0, 0.0],
            hi: [2.0, 2.0, 1.0],
            grading: Grading::uniform(0.25),
            liner: Some(LinerSpec { lo: [0.5, 0.5, 0.5], hi: [1.5, 1.5, 1.0], hole: None }),
            electrodes: vec![ElectrodeSpec { x: 1.0, y: 1.0, length: 0.25 }],
        };
        let m = build_box_mesh(&spec).unwrap();
        let area: f64 = m.liner.as_ref().unwrap().geometry().unwrap().cell_measure.iter().sum();
        assert!((area - (1.0 + 4.0 * 0.5)).abs() < 1e-12);
        assert_eq!(m.mortars.len(), 3);
        assert_eq!(m.mortars[0].cells.len(), m.num_liner_cells());
        // Outward-oriented liner: PLUS cells lie outside the box.
        let geo = m.domain.geometry().unwrap();
        for mc in &m.mortars[0].cells {
            let c = geo.cell_centroid[mc.side_cell];
            let inside = c[0] > 0.5 && c[0] < 1.5 && c[1] > 0.5 && c[1] < 1.5 && c[2] > 0.5;
            assert!(!inside);
        }
        assert_eq!(m.electrodes[0].num_cells(), 1);
        assert_eq!(m.mortars[2].cells.len(), 1);
    }
}
