//! Conforming mixed-dimensional meshes: a 3D tetrahedral domain, an optional
//! 2D liner surface made of domain faces, and 1D electrodes made of domain edges.

pub mod boxmesh;
pub mod grid;
pub mod locate;
pub mod msh;

use std::collections::HashMap;

use serde::Serialize;

pub use boxmesh::{build_box_mesh, BoxMeshSpec, ElectrodeSpec, Grading, HoleSpec, LinerSpec};
pub use grid::{FaceTag, GridGeometry, Point, SubdomainGrid, NONE};
pub use locate::PointLocator;

use crate::error::{Error, Result};
use grid::{dot, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum MortarKind {
    LinerPlus,
    LinerMinus,
    Electrode(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MortarCell {
    /// Cell of the lower-dimensional grid.
    pub low_cell: usize,
    /// 3D face (liner sides) or host tetrahedron (electrodes).
    pub high: usize,
    /// For liner sides, the 3D cell on this side of the face.
    pub side_cell: usize,
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MortarInterface {
    pub id: usize,
    pub kind: MortarKind,
    pub cells: Vec<MortarCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElectrodeInfo {
    /// Surface point where the electrode is connected.
    pub anchor: Point,
    pub length: f64,
    /// Horizontal distance between the requested and the realized anchor.
    pub snap_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedDimMesh {
    pub domain: SubdomainGrid,
    pub liner: Option<SubdomainGrid>,
    pub electrodes: Vec<SubdomainGrid>,
    pub electrode_info: Vec<ElectrodeInfo>,
    pub mortars: Vec<MortarInterface>,
}

impl MixedDimMesh {
    pub fn new(domain: SubdomainGrid) -> Self {
        Self { domain, liner: None, electrodes: Vec::new(), electrode_info: Vec::new(), mortars: Vec::new() }
    }

    pub fn num_liner_cells(&self) -> usize {
        self.liner.as_ref().map_or(0, |l| l.num_cells())
    }

    pub fn z_top(&self) -> f64 {
        self.domain.bounding_box().1[2]
    }

    /// Computes geometry on every grid; boundary faces on the top plane get
    /// the TOP tag.
    pub fn compute_geometry(&mut self) -> Result<()> {
        let z_top = self.z_top();
        self.domain.compute_geometry(z_top)?;
        if let Some(l) = self.liner.as_mut() {
            l.compute_geometry(z_top)?;
        }
        for e in &mut self.electrodes {
            e.compute_geometry(z_top)?;
        }
        Ok(())
    }

    pub fn has_mortars(&self) -> bool {
        !self.mortars.is_empty() || (self.liner.is_none() && self.electrodes.is_empty())
    }

    /// Builds the liner side interfaces (PLUS then MINUS) and one interface per
    /// electrode.
    pub fn build_mortars(&mut self) -> Result<()> {
        let geo = self.domain.geometry()?;
        let mut mortars = Vec::new();
        if let Some(liner) = &self.liner {
            let parents = liner.parent_nodes.as_ref().ok_or(Error::MeshSpec("liner without parent nodes".into()))?;
            let index = face_index(&self.domain)?;
            let mut plus = Vec::with_capacity(liner.num_cells());
            let mut minus = Vec::with_capacity(liner.num_cells());
            for k in 0..liner.num_cells() {
                let mut key: Vec<usize> = liner.cell(k).iter().map(|&n| parents[n]).collect();
                key.sort_unstable();
                let f = *index.get(&key).ok_or(Error::LinerOnBoundary(k))?;
                let [c0, c1] = geo.face_cells[f];
                if c1 == NONE {
                    return Err(Error::LinerOnBoundary(k));
                }
                let n = liner_normal(liner, k);
                let side0 = dot(sub(geo.cell_centroid[c0], geo.face_centroid[f]), n);
                let (cp, cm) = if side0 > 0.0 { (c0, c1) } else { (c1, c0) };
                let area = geo.face_measure[f];
                plus.push(MortarCell { low_cell: k, high: f, side_cell: cp, measure: area });
                minus.push(MortarCell { low_cell: k, high: f, side_cell: cm, measure: area });
            }
            mortars.push(MortarInterface { id: 0, kind: MortarKind::LinerPlus, cells: plus });
            mortars.push(MortarInterface { id: 1, kind: MortarKind::LinerMinus, cells: minus });
        }
        let node_cells = self.domain.node_cells();
        for (e, grid) in self.electrodes.iter().enumerate() {
            let parents = grid.parent_nodes.as_ref().ok_or(Error::MeshSpec("electrode without parent nodes".into()))?;
            let egeo = grid.geometry()?;
            let mut cells = Vec::with_capacity(grid.num_cells());
            for c in 0..grid.num_cells() {
                let a = parents[grid.cell(c)[0]];
                let b = parents[grid.cell(c)[1]];
                let host = node_cells[a]
                    .iter()
                    .copied()
                    .find(|&t| self.domain.cell(t).contains(&b))
                    .ok_or(Error::ElectrodeOutside { electrode: e, cell: c })?;
                cells.push(MortarCell { low_cell: c, high: host, side_cell: host, measure: egeo.cell_measure[c] });
            }
            let id = mortars.len();
            mortars.push(MortarInterface { id, kind: MortarKind::Electrode(e), cells });
        }
        self.mortars = mortars;
        Ok(())
    }

    pub fn liner_mortar(&self, kind: MortarKind) -> Option<&MortarInterface> {
        self.mortars.iter().find(|m| m.kind == kind)
    }

    pub fn electrode_mortar(&self, e: usize) -> Option<&MortarInterface> {
        self.mortars.iter().find(|m| m.kind == MortarKind::Electrode(e))
    }

    /// Volume associated with each liner cell: thickness times area.
    pub fn liner_volumes(&self, thickness: f64) -> Result<Vec<f64>> {
        match &self.liner {
            Some(l) => Ok(l.geometry()?.cell_measure.iter().map(|a| a * thickness).collect()),
            None => Ok(Vec::new()),
        }
    }
}

/// Unit normal of liner triangle `k` following its node orientation.
pub fn liner_normal(liner: &SubdomainGrid, k: usize) -> Point {
    let p = liner.cell_points(k);
    let n = grid::cross(sub(p[1], p[0]), sub(p[2], p[0]));
    grid::scale(n, 1.0 / grid::norm(n))
}

pub(crate) fn face_index(grid: &SubdomainGrid) -> Result<HashMap<Vec<usize>, usize>> {
    let geo = grid.geometry()?;
    let d = grid.dim;
    Ok((0..geo.num_faces()).map(|f| (geo.face_nodes[f * d..(f + 1) * d].to_vec(), f)).collect())
}

/// Attaches a liner and electrodes given by 3D node ids to a tetrahedral grid,
/// checking that liner triangles are 3D faces and electrode segments 3D edges.
/// `electrode_segments[e]` lists (element id, node a, node b) in any order.
pub fn attach_lower_dimensional(
    domain: SubdomainGrid,
    liner_tris: &[(i64, [usize; 3])],
    electrode_segments: &[Vec<(i64, [usize; 2])>],
) -> Result<MixedDimMesh> {
    use std::collections::HashSet;
    let mut faces: HashSet<[usize; 3]> = HashSet::new();
    let mut edges: HashSet<[usize; 2]> = HashSet::new();
    for c in 0..domain.num_cells() {
        let t = domain.cell(c);
        for i in 0..4 {
            let mut f = [t[(i + 1) % 4], t[(i + 2) % 4], t[(i + 3) % 4]];
            f.sort_unstable();
            faces.insert(f);
            for j in i + 1..4 {
                edges.insert([t[i].min(t[j]), t[i].max(t[j])]);
            }
        }
    }
    let mut mesh = MixedDimMesh::new(domain);
    if !liner_tris.is_empty() {
        let mut local: HashMap<usize, usize> = HashMap::new();
        let mut parents = Vec::new();
        let mut cells = Vec::with_capacity(liner_tris.len() * 3);
        for &(id, tri) in liner_tris {
            let mut key = tri;
            key.sort_unstable();
            if !faces.contains(&key) {
                return Err(Error::LinerNotConforming { element: id });
            }
            for n in tri {
                let l = *local.entry(n).or_insert_with(|| {
                    parents.push(n);
                    parents.len() - 1
                });
                cells.push(l);
            }
        }
        let nodes = parents.iter().map(|&n| mesh.domain.nodes[n]).collect();
        let mut g = SubdomainGrid::new(2, nodes, cells);
        g.parent_nodes = Some(parents);
        mesh.liner = Some(g);
    }
    for (e, segs) in electrode_segments.iter().enumerate() {
        for &(id, [a, b]) in segs {
            if !edges.contains(&[a.min(b), a.max(b)]) {
                return Err(Error::ElectrodeNotConforming { electrode: e, element: id });
            }
        }
        let (grid, info) = electrode_chain(&mesh.domain, segs.iter().map(|s| s.1).collect(), e)?;
        mesh.electrodes.push(grid);
        mesh.electrode_info.push(info);
    }
    Ok(mesh)
}

/// Orders a set of segments into a chain starting at the topmost node.
fn electrode_chain(domain: &SubdomainGrid, segs: Vec<[usize; 2]>, e: usize) -> Result<(SubdomainGrid, ElectrodeInfo)> {
    if segs.is_empty() {
        return Err(Error::MeshSpec(format!("electrode {e} has no segments")));
    }
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for s in &segs {
        adj.entry(s[0]).or_default().push(s[1]);
        adj.entry(s[1]).or_default().push(s[0]);
    }
    let mut ends: Vec<usize> = adj.iter().filter(|(_, v)| v.len() == 1).map(|(&k, _)| k).collect();
    if ends.len() != 2 || adj.values().any(|v| v.len() > 2) {
        return Err(Error::MeshSpec(format!("electrode {e} segments do not form a simple chain")));
    }
    ends.sort_by(|&a, &b| domain.nodes[b][2].total_cmp(&domain.nodes[a][2]).then(a.cmp(&b)));
    let mut order = vec![ends[0]];
    let mut prev = usize::MAX;
    let mut cur = ends[0];
    while order.len() <= segs.len() {
        let next = adj[&cur].iter().copied().find(|&n| n != prev);
        match next {
            Some(n) => {
                prev = cur;
                cur = n;
                order.push(n);
            }
            None => break,
        }
    }
    if order.len() != segs.len() + 1 {
        return Err(Error::MeshSpec(format!("electrode {e} segments do not form a simple chain")));
    }
    let nodes: Vec<Point> = order.iter().map(|&n| domain.nodes[n]).collect();
    let cells: Vec<usize> = (0..segs.len()).flat_map(|i| [i, i + 1]).collect();
    let length = (0..segs.len()).map(|i| grid::norm(sub(nodes[i + 1], nodes[i]))).sum();
    let info = ElectrodeInfo { anchor: nodes[0], length, snap_distance: 0.0 };
    let mut g = SubdomainGrid::new(1, nodes, cells);
    g.parent_nodes = Some(order);
    Ok((g, info))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_tets() -> SubdomainGrid {
        SubdomainGrid::new(
            3,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]],
            vec![0, 1, 2, 3, 0, 2, 1, 4],
        )
    }

    #[test]
    fn shared_face_becomes_liner_with_two_sides() {
        let mut m = attach_lower_dimensional(two_tets(), &[(7, [0, 1, 2])], &[]).unwrap();
        m.compute_geometry().unwrap();
        m.build_mortars().unwrap();
        assert_eq!(m.mortars.len(), 2);
        let p = &m.mortars[0].cells[0];
        let q = &m.mortars[1].cells[0];
        assert_eq!(p.high, q.high);
        assert_ne!(p.side_cell, q.side_cell);
        // Triangle (0,1,2) has normal +z, so PLUS is the upper tetrahedron.
        assert_eq!(p.side_cell, 0);
    }

    #[test]
    fn nonconforming_liner_is_reported() {
        let err = attach_lower_dimensional(two_tets(), &[(42, [1, 3, 4])], &[]).unwrap_err();
        assert!(matches!(err, Error::LinerNotConforming { element: 42 }));
    }

    #[test]
    fn electrode_chain_starts_at_top() {
        let m = attach_lower_dimensional(two_tets(), &[], &[vec![(1, [0, 4]), (2, [3, 0])]]).unwrap();
        let e = &m.electrodes[0];
        assert_eq!(e.parent_nodes.as_ref().unwrap(), &vec![3, 0, 4]);
        assert!((m.electrode_info[0].length - 2.0).abs() < 1e-15);
        let err = attach_lower_dimensional(two_tets(), &[], &[vec![(5, [3, 4])]]).unwrap_err();
        assert!(matches!(err, Error::ElectrodeNotConforming { electrode: 0, element: 5 }));
    }

    #[test]
    fn boundary_liner_is_rejected_by_mortars() {
        let mut m = attach_lower_dimensional(two_tets(), &[(1, [0, 1, 3])], &[]).unwrap();
        m.compute_geometry().unwrap();
        assert!(matches!(m.build_mortars(), Err(Error::LinerOnBoundary(0))));
    }
}
