//! Simplicial grids of dimension 1, 2 or 3 embedded in 3D space.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Sentinel for a missing neighbour in [`GridGeometry::face_cells`].
pub const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum FaceTag {
    Interior,
    /// Boundary face on the top (ground surface) plane.
    Top,
    /// Any other boundary face.
    Outer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridGeometry {
    /// Sorted node ids of each face, stride `dim`.
    pub face_nodes: Vec<usize>,
    /// Owner and neighbour cell of each face; the owner is the first cell
    /// that referenced the face. Boundary faces have `NONE` as neighbour.
    pub face_cells: Vec<[usize; 2]>,
    pub face_measure: Vec<f64>,
    pub face_centroid: Vec<Point>,
    /// Unit normal pointing out of the owner cell, tangent to the owner cell
    /// for grids of dimension below 3.
    pub face_normal: Vec<Point>,
    pub face_tag: Vec<FaceTag>,
    /// Face opposite each local node, stride `dim + 1`.
    pub cell_faces: Vec<usize>,
    pub cell_measure: Vec<f64>,
    pub cell_centroid: Vec<Point>,
}

impl GridGeometry {
    pub fn num_faces(&self) -> usize {
        self.face_cells.len()
    }

    pub fn is_boundary(&self, f: usize) -> bool {
        self.face_cells[f][1] == NONE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainGrid {
    pub dim: usize,
    pub nodes: Vec<Point>,
    /// Node ids of each cell, stride `dim + 1`.
    pub cells: Vec<usize>,
    /// For lower-dimensional grids, the 3D node each local node coincides with.
    pub parent_nodes: Option<Vec<usize>>,
    pub geometry: Option<GridGeometry>,
}

pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Point, b: Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn centroid(pts: &[Point]) -> Point {
    let mut c = [0.0; 3];
    for p in pts {
        c = add(c, *p);
    }
    scale(c, 1.0 / pts.len() as f64)
}

/// Measure of a k-simplex given by its vertices (k = pts.len() - 1 ≤ 3).
pub fn simplex_measure(pts: &[Point]) -> f64 {
    match pts.len() {
        1 => 1.0,
        2 => norm(sub(pts[1], pts[0])),
        3 => 0.5 * norm(cross(sub(pts[1], pts[0]), sub(pts[2], pts[0]))),
        4 => signed_volume(pts).abs(),
        _ => 0.0,
    }
}

pub fn signed_volume(pts: &[Point]) -> f64 {
    dot(sub(pts[1], pts[0]), cross(sub(pts[2], pts[0]), sub(pts[3], pts[0]))) / 6.0
}

/// Gradients of the barycentric coordinates of a simplex of dimension
/// `pts.len() - 1`, restricted to the simplex's tangent space.
pub fn barycentric_gradients(pts: &[Point]) -> Option<Vec<Point>> {
    let d = pts.len() - 1;
    let e: Vec<Point> = (1..=d).map(|i| sub(pts[i], pts[0])).collect();
    let mut gram = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            gram[i * d + j] = dot(e[i], e[j]);
        }
    }
    let inv = crate::dense::small_inverse(d, &gram)?;
    let mut grads = vec![[0.0; 3]; d + 1];
    for k in 0..d {
        let mut g = [0.0; 3];
        for j in 0..d {
            g = add(g, scale(e[j], inv[k * d + j]));
        }
        grads[k + 1] = g;
        grads[0] = sub(grads[0], g);
    }
    Some(grads)
}

impl SubdomainGrid {
    pub fn new(dim: usize, nodes: Vec<Point>, cells: Vec<usize>) -> Self {
        assert!((1..=3).contains(&dim));
        assert_eq!(cells.len() % (dim + 1), 0);
        Self { dim, nodes, cells, parent_nodes: None, geometry: None }
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let n = self.dim + 1;
        &self.cells[c * n..(c + 1) * n]
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cell(c).iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn geometry(&self) -> Result<&GridGeometry> {
        self.geometry.as_ref().ok_or(Error::NoGeometry)
    }

    pub fn face(&self, f: usize) -> Result<&[usize]> {
        let g = self.geometry()?;
        Ok(&g.face_nodes[f * self.dim..(f + 1) * self.dim])
    }

    pub fn cell_face_ids(&self, c: usize) -> Result<&[usize]> {
        let g = self.geometry()?;
        let n = self.dim + 1;
        Ok(&g.cell_faces[c * n..(c + 1) * n])
    }

    /// Populates faces, measures, centroids, normals and boundary tags.
    /// Boundary faces with every node on `z = z_top` are tagged [`FaceTag::Top`].
    pub fn compute_geometry(&mut self, z_top: f64) -> Result<()> {
        let d = self.dim;
        let nc = self.num_cells();
        let mut cell_measure = Vec::with_capacity(nc);
        let mut cell_centroid = Vec::with_capacity(nc);
        for c in 0..nc {
            let pts = self.cell_points(c);
            cell_measure.push(simplex_measure(&pts));
            cell_centroid.push(centroid(&pts));
        }
        let mean = cell_measure.iter().sum::<f64>() / nc.max(1) as f64;
        for (c, &m) in cell_measure.iter().enumerate() {
            if !(m > 1e-14 * mean) {
                return Err(Error::DegenerateCell { dim: d, cell: c, measure: m });
            }
        }

        let mut index: HashMap<Vec<usize>, usize> = HashMap::with_capacity(nc * (d + 1));
        let mut face_nodes = Vec::new();
        let mut face_cells: Vec<[usize; 2]> = Vec::new();
        let mut cell_faces = Vec::with_capacity(nc * (d + 1));
        for c in 0..nc {
            let cn = self.cell(c).to_vec();
            for i in 0..=d {
                let mut key: Vec<usize> = cn.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &n)| n).collect();
                key.sort_unstable();
                let f = match index.get(&key) {
                    Some(&f) => {
                        if face_cells[f][1] != NONE {
                            return Err(Error::MeshSpec(format!("face {key:?} shared by more than two {d}d cells")));
                        }
                        face_cells[f][1] = c;
                        f
                    }
                    None => {
                        let f = face_cells.len();
                        face_nodes.extend_from_slice(&key);
                        face_cells.push([c, NONE]);
                        index.insert(key, f);
                        f
                    }
                };
                cell_faces.push(f);
            }
        }

        let nf = face_cells.len();
        let mut face_measure = Vec::with_capacity(nf);
        let mut face_centroid = Vec::with_capacity(nf);
        let mut face_normal = vec![[0.0; 3]; nf];
        let mut face_tag = Vec::with_capacity(nf);
        let scale_len = mean.powf(1.0 / d as f64);
        for f in 0..nf {
            let pts: Vec<Point> = face_nodes[f * d..(f + 1) * d].iter().map(|&n| self.nodes[n]).collect();
            face_measure.push(simplex_measure(&pts));
            face_centroid.push(centroid(&pts));
            let tag = if face_cells[f][1] != NONE {
                FaceTag::Interior
            } else if pts.iter().all(|p| (p[2] - z_top).abs() <= 1e-10 * scale_len.max(1.0)) {
                FaceTag::Top
            } else {
                FaceTag::Outer
            };
            face_tag.push(tag);
        }
        for c in 0..nc {
            let pts = self.cell_points(c);
            let grads = barycentric_gradients(&pts).ok_or(Error::DegenerateCell { dim: d, cell: c, measure: cell_measure[c] })?;
            for i in 0..=d {
                let f = cell_faces[c * (d + 1) + i];
                if face_cells[f][0] == c {
                    let g = grads[i];
                    face_normal[f] = scale(g, -1.0 / norm(g));
                }
            }
        }
        self.geometry = Some(GridGeometry {
            face_nodes,
            face_cells,
            face_measure,
            face_centroid,
            face_normal,
            face_tag,
            cell_faces,
            cell_measure,
            cell_centroid,
        });
        Ok(())
    }

    /// Outward unit normal of cell `c` at its local face `i` (opposite local node `i`).
    pub fn outward_normal(&self, c: usize, i: usize) -> Point {
        let pts = self.cell_points(c);
        let g = barycentric_gradients(&pts).expect("non-degenerate cell")[i];
        scale(g, -1.0 / norm(g))
    }

    /// Node → incident cells adjacency, cells in increasing order.
    pub fn node_cells(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for c in 0..self.num_cells() {
            for &n in self.cell(c) {
                adj[n].push(c);
            }
        }
        adj
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.nodes {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_tet() -> SubdomainGrid {
        SubdomainGrid::new(3, vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], vec![0, 1, 2, 3])
    }

    #[test]
    fn tet_geometry() {
        let mut g = unit_tet();
        g.compute_geometry(1.0).unwrap();
        let geo = g.geometry().unwrap();
        assert_eq!(geo.num_faces(), 4);
        assert!((geo.cell_measure[0] - 1.0 / 6.0).abs() < 1e-15);
        for f in 0..4 {
            assert!((norm(geo.face_normal[f]) - 1.0).abs() < 1e-12);
            let out = sub(geo.face_centroid[f], geo.cell_centroid[0]);
            assert!(dot(out, geo.face_normal[f]) > 0.0);
            assert_eq!(geo.face_tag[f], FaceTag::Outer);
        }
    }

    #[test]
    fn degenerate_cell_is_rejected() {
        let mut g = SubdomainGrid::new(3, vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]], vec![0, 1, 2, 3]);
        assert!(matches!(g.compute_geometry(0.0), Err(Error::DegenerateCell { cell: 0, .. })));
    }

    #[test]
    fn embedded_triangle_normals_are_tangent() {
        let mut g = SubdomainGrid::new(2, vec![[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 0.0, 0.0]], vec![0, 1, 2]);
        g.compute_geometry(1.0).unwrap();
        let geo = g.geometry().unwrap();
        assert!((geo.cell_measure[0] - 0.5).abs() < 1e-15);
        for f in 0..3 {
            assert!(geo.face_normal[f][1].abs() < 1e-15);
            assert!((norm(geo.face_normal[f]) - 1.0).abs() < 1e-12);
        }
        let top = (0..3).filter(|&f| geo.face_tag[f] == FaceTag::Top).count();
        assert_eq!(top, 1);
    }

    #[test]
    fn barycentric_gradients_partition_unity() {
        let pts = [[0.1, 0.2, 0.3], [1.0, 0.1, 0.0], [0.2, 1.3, 0.1], [0.0, 0.1, 0.9]];
        let g = barycentric_gradients(&pts).unwrap();
        for j in 0..4 {
            for i in 0..4 {
                let v = dot(g[i], sub(pts[j], pts[0])) + if i == 0 { 1.0 } else { 0.0 };
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
