//! Cell-centered multi-point flux approximation on simplicial grids.
//!
//! The scheme is the vertex-based multipoint flux mixed method: lowest-order
//! BDM velocities with one flux unknown per (face, vertex) pair and a vertex
//! quadrature for the mass term, so every interaction region around a mesh
//! vertex decouples and its subface fluxes are eliminated locally. The result
//! is a symmetric cell-centered stiffness matrix, exact for affine potentials
//! on homogeneous regions, with a locally conservative face flux operator.
//!
//! Faces can be free (interior, or Dirichlet on the boundary), Neumann (zero
//! flux), or tied to interface unknowns carrying a prescribed uniform normal
//! flux per unit area (the mortar exchange fields).

use crate::dense::{cholesky, cholesky_solve, Dense};
use crate::error::{Error, Result};
use crate::mesh::grid::{dot, sub, Point, SubdomainGrid, NONE};
use crate::sparse::{Csr, PatternBuilder, Triplets};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceBc {
    /// Interior face, or boundary face with Dirichlet data.
    Free,
    /// Zero normal flux.
    Neumann,
    /// Flux imposed by interface unknowns, per side (owner, neighbour);
    /// `NONE` marks a side without a cell.
    Tied([usize; 2]),
}

/// Face fluxes (outward from the owner cell) as linear maps of the cell
/// potentials, the tied interface unknowns and the nodal Dirichlet data.
#[derive(Debug, Clone)]
pub struct FluxOperator {
    pub cells: Csr,
    pub tied: Csr,
    pub nodes: Csr,
}

#[derive(Debug, Clone)]
pub struct SubdomainDiscretization {
    /// Cell equations: `stiffness p + coupling j = dirichlet g + sources`.
    pub stiffness: Csr,
    pub coupling: Csr,
    pub dirichlet: Csr,
    /// Weak trace equations of the tied unknowns:
    /// `tied_cells p + tied_tied j + |f| trace = tied_dirichlet g`.
    pub tied_cells: Csr,
    pub tied_tied: Csr,
    pub tied_dirichlet: Csr,
    pub flux: FluxOperator,
    /// Subface fluxes of free faces, row `f * dim + s` for the subface of face
    /// `f` at its `s`-th node.
    pub subflux: FluxOperator,
    pub bcs: Vec<FaceBc>,
    pub tied_measure: Vec<f64>,
    pub coefficient: Vec<f64>,
}

/// Default boundary conditions: Dirichlet on boundary faces of the given tag
/// predicate, Neumann elsewhere on the boundary.
pub fn boundary_bcs(grid: &SubdomainGrid, dirichlet: impl Fn(usize) -> bool) -> Result<Vec<FaceBc>> {
    let geo = grid.geometry()?;
    Ok((0..geo.num_faces()).map(|f| if !geo.is_boundary(f) || dirichlet(f) { FaceBc::Free } else { FaceBc::Neumann }).collect())
}

struct LocalDof {
    /// Index into the free or tied list.
    index: usize,
    tied: bool,
    sign: f64,
}

/// Assembles the cell-centered operator of one grid. `tied_measure[t]` is the
/// area of the face carrying tied unknown `t`.
pub fn assemble_subdomain(grid: &SubdomainGrid, coefficient: &[f64], bcs: &[FaceBc], tied_measure: &[f64]) -> Result<SubdomainDiscretization> {
    let geo = grid.geometry()?;
    let d = grid.dim;
    let nc = grid.num_cells();
    let nf = geo.num_faces();
    let nn = grid.nodes.len();
    let nt = tied_measure.len();
    if coefficient.len() != nc {
        return Err(Error::SizeMismatch { what: "coefficient", got: coefficient.len(), expected: nc });
    }
    if bcs.len() != nf {
        return Err(Error::SizeMismatch { what: "face conditions", got: bcs.len(), expected: nf });
    }
    if let Some(c) = coefficient.iter().position(|&k| !(k > 0.0 && k.is_finite())) {
        return Err(Error::Material(format!("coefficient of cell {c} is {}, must be positive", coefficient[c])));
    }

    let node_cells = grid.node_cells();
    let mut stiff = PatternBuilder::new(nc, nc, |c, out| {
        for &n in grid.cell(c) {
            out.extend_from_slice(&node_cells[n]);
        }
    });
    let mut flux_cells = PatternBuilder::new(nf, nc, |f, out| {
        for &n in &geo.face_nodes[f * d..(f + 1) * d] {
            out.extend_from_slice(&node_cells[n]);
        }
    });
    let mut sub_cells = PatternBuilder::new(nf * d, nc, |row, out| out.extend_from_slice(&node_cells[geo.face_nodes[row]]));
    let mut sub_tied = Triplets::new(nf * d, nt);
    let mut sub_nodes = Triplets::new(nf * d, nn);
    let mut dirichlet = Triplets::new(nc, nn);
    let mut coupling = Triplets::new(nc, nt);
    let mut tied_cells = Triplets::new(nt, nc);
    let mut tied_tied = Triplets::new(nt, nt);
    let mut tied_dirichlet = Triplets::new(nt, nn);
    let mut flux_tied = Triplets::new(nf, nt);
    let mut flux_nodes = Triplets::new(nf, nn);

    let mut free: Vec<usize> = Vec::new();
    let mut tied: Vec<usize> = Vec::new();
    for r in 0..nn {
        let star = &node_cells[r];
        if star.is_empty() {
            continue;
        }
        free.clear();
        tied.clear();
        // Per star cell: (local dof, opposite node) of its faces at r.
        let mut cell_dofs: Vec<Vec<(LocalDof, Point)>> = Vec::with_capacity(star.len());
        for &c in star {
            let cn = grid.cell(c);
            let faces = &geo.cell_faces[c * (d + 1)..(c + 1) * (d + 1)];
            let mut dofs = Vec::with_capacity(d);
            for i in 0..=d {
                if cn[i] == r {
                    continue;
                }
                let f = faces[i];
                let owner = geo.face_cells[f][0] == c;
                let dof = match bcs[f] {
                    FaceBc::Neumann => continue,
                    FaceBc::Free => {
                        let index = position_or_push(&mut free, f);
                        LocalDof { index, tied: false, sign: if owner { 1.0 } else { -1.0 } }
                    }
                    FaceBc::Tied(sides) => {
                        let t = sides[if owner { 0 } else { 1 }];
                        if t == NONE {
                            return Err(Error::MeshSpec(format!("tied face {f} has no unknown for cell {c}")));
                        }
                        LocalDof { index: position_or_push(&mut tied, t), tied: true, sign: 1.0 }
                    }
                };
                dofs.push((dof, grid.nodes[cn[i]]));
            }
            cell_dofs.push(dofs);
        }
        let (nfr, ntr, ncl) = (free.len(), tied.len(), star.len());
        if nfr + ntr == 0 {
            continue;
        }
        // Local mass over [free | tied] subface unknowns.
        let nl = nfr + ntr;
        let mut mass = Dense::zeros(nl, nl);
        let xr = grid.nodes[r];
        for (k, &c) in star.iter().enumerate() {
            let w = 1.0 / ((d + 1) as f64 * geo.cell_measure[c] * coefficient[c]);
            let dofs = &cell_dofs[k];
            for (a, pa) in dofs {
                let ia = a.index + if a.tied { nfr } else { 0 };
                let va = sub(xr, *pa);
                for (b, pb) in dofs {
                    let ib = b.index + if b.tied { nfr } else { 0 };
                    mass.add(ia, ib, w * a.sign * b.sign * dot(va, sub(xr, *pb)));
                }
            }
        }
        // Divergence rows for the free unknowns and tied-side cells.
        let mut df = Dense::zeros(nfr, ncl);
        let mut dt = Dense::zeros(ntr, ncl);
        for (k, dofs) in cell_dofs.iter().enumerate() {
            for (a, _) in dofs {
                if a.tied {
                    dt.add(a.index, k, 1.0);
                } else {
                    df.a[a.index * ncl + k] = a.sign;
                }
            }
        }
        // Dirichlet data weights on boundary free faces.
        let mut gnodes: Vec<usize> = Vec::new();
        let mut gw: Vec<(usize, usize, f64)> = Vec::new();
        for (a, &f) in free.iter().enumerate() {
            if geo.is_boundary(f) {
                for &j in &geo.face_nodes[f * d..(f + 1) * d] {
                    let w = if j == r { 2.0 } else { 1.0 } / (d + 1) as f64;
                    gw.push((a, position_or_push(&mut gnodes, j), w));
                }
            }
        }
        let tscale: Vec<f64> = tied.iter().map(|&t| tied_measure[t] / d as f64).collect();

        // Block split of the mass matrix.
        let mut mff = Dense::zeros(nfr, nfr);
        let mut mft = Dense::zeros(nfr, ntr);
        let mut mtt = Dense::zeros(ntr, ntr);
        for i in 0..nfr {
            for j in 0..nfr {
                mff.a[i * nfr + j] = mass.at(i, j);
            }
            for j in 0..ntr {
                mft.a[i * ntr + j] = mass.at(i, nfr + j);
            }
        }
        for i in 0..ntr {
            for j in 0..ntr {
                mtt.a[i * ntr + j] = mass.at(nfr + i, nfr + j);
            }
        }
        // X [D_f | G | M_ft T] in one multi-column solve.
        let ng = gnodes.len();
        let ncols = ncl + ng + ntr;
        let mut rhs = Dense::zeros(nfr, ncols);
        for i in 0..nfr {
            for k in 0..ncl {
                rhs.a[i * ncols + k] = df.at(i, k);
            }
            for j in 0..ntr {
                rhs.a[i * ncols + ncl + ng + j] = mft.at(i, j) * tscale[j];
            }
        }
        for &(a, g, w) in &gw {
            rhs.a[a * ncols + ncl + g] += w;
        }
        if nfr > 0 {
            let l = cholesky(mff).ok_or_else(|| Error::Singular {
                dof: r,
                block: "interaction region",
                reason: "local mass matrix is not positive definite".into(),
            })?;
            cholesky_solve(&l, &mut rhs);
        }
        let x = |i: usize, col: usize| rhs.a[i * ncols + col];

        for (ka, &ca) in star.iter().enumerate() {
            // Cell rows: D_f^T X D_f, D_f^T X G, (-D_f^T X M_ft + D_t^T) T.
            for i in 0..nfr {
                let s = df.at(i, ka);
                if s == 0.0 {
                    continue;
                }
                for (kb, &cb) in star.iter().enumerate() {
                    let v = s * x(i, kb);
                    if v != 0.0 {
                        stiff.add(ca, cb, v);
                    }
                }
                for (g, &node) in gnodes.iter().enumerate() {
                    dirichlet.push(ca, node, s * x(i, ncl + g));
                }
                for (j, &t) in tied.iter().enumerate() {
                    coupling.push(ca, t, -s * x(i, ncl + ng + j));
                }
            }
            for (j, &t) in tied.iter().enumerate() {
                if dt.at(j, ka) != 0.0 {
                    coupling.push(ca, t, dt.at(j, ka) * tscale[j]);
                }
            }
        }
        // Tied rows: T^T (M_tf X D_f - D_t), T^T (M_tt - M_tf X M_ft) T, T^T M_tf X G.
        for (j, &t) in tied.iter().enumerate() {
            let mut row = vec![0.0; ncols];
            for i in 0..nfr {
                let m = mft.at(i, j);
                if m != 0.0 {
                    for (col, v) in row.iter_mut().enumerate() {
                        *v += m * x(i, col);
                    }
                }
            }
            let sj = tscale[j];
            for (k, &c) in star.iter().enumerate() {
                tied_cells.push(t, c, sj * (row[k] - dt.at(j, k)));
            }
            for (g, &node) in gnodes.iter().enumerate() {
                tied_dirichlet.push(t, node, sj * row[ncl + g]);
            }
            for (i2, &t2) in tied.iter().enumerate() {
                let v = mtt.at(j, i2) * tscale[i2] - row[ncl + ng + i2];
                tied_tied.push(t, t2, sj * v);
            }
        }
        // Face flux rows: X (D_f p - G g - M_ft T j).
        for (i, &f) in free.iter().enumerate() {
            let slot = geo.face_nodes[f * d..(f + 1) * d].iter().position(|&n| n == r).expect("face contains its vertex");
            let row = f * d + slot;
            for (k, &c) in star.iter().enumerate() {
                let v = x(i, k);
                if v != 0.0 {
                    flux_cells.add(f, c, v);
                    sub_cells.add(row, c, v);
                }
            }
            for (g, &node) in gnodes.iter().enumerate() {
                flux_nodes.push(f, node, -x(i, ncl + g));
                sub_nodes.push(row, node, -x(i, ncl + g));
            }
            for (j, &t) in tied.iter().enumerate() {
                flux_tied.push(f, t, -x(i, ncl + ng + j));
                sub_tied.push(row, t, -x(i, ncl + ng + j));
            }
        }
    }

    Ok(SubdomainDiscretization {
        stiffness: stiff.finish(),
        coupling: coupling.to_csr(),
        dirichlet: dirichlet.to_csr(),
        tied_cells: tied_cells.to_csr(),
        tied_tied: tied_tied.to_csr(),
        tied_dirichlet: tied_dirichlet.to_csr(),
        flux: FluxOperator { cells: flux_cells.finish(), tied: flux_tied.to_csr(), nodes: flux_nodes.to_csr() },
        subflux: FluxOperator { cells: sub_cells.finish(), tied: sub_tied.to_csr(), nodes: sub_nodes.to_csr() },
        bcs: bcs.to_vec(),
        tied_measure: tied_measure.to_vec(),
        coefficient: coefficient.to_vec(),
    })
}

fn position_or_push(v: &mut Vec<usize>, x: usize) -> usize {
    match v.iter().position(|&y| y == x) {
        Some(i) => i,
        None => {
            v.push(x);
            v.len() - 1
        }
    }
}

impl FluxOperator {
    fn apply(&self, potential: &[f64], tied: &[f64], nodal: Option<&[f64]>) -> Result<Vec<f64>> {
        let nc = self.cells.ncols;
        if potential.len() != nc {
            return Err(Error::SizeMismatch { what: "potential", got: potential.len(), expected: nc });
        }
        if tied.len() != self.tied.ncols {
            return Err(Error::SizeMismatch { what: "tied unknowns", got: tied.len(), expected: self.tied.ncols });
        }
        let mut q = self.cells.matvec(potential);
        if self.tied.nnz() > 0 {
            self.tied.matvec_add(1.0, tied, &mut q);
        }
        if let Some(g) = nodal {
            if g.len() != self.nodes.ncols {
                return Err(Error::SizeMismatch { what: "nodal data", got: g.len(), expected: self.nodes.ncols });
            }
            self.nodes.matvec_add(1.0, g, &mut q);
        }
        Ok(q)
    }
}

impl SubdomainDiscretization {
    /// Face fluxes (outward from the owner) of free faces; zero elsewhere.
    pub fn face_fluxes(&self, potential: &[f64], tied: &[f64], nodal: Option<&[f64]>) -> Result<Vec<f64>> {
        self.flux.apply(potential, tied, nodal)
    }

    /// Potential gradients at the vertices of every cell (stride `dim + 1`,
    /// entry `i` at local node `i`) from the vertex values of the BDM
    /// velocity. Averaging `σ² ∇a·∇b` over these vertices with weight
    /// `|E| / (dim + 1)` reproduces the scheme's own mass quadrature, which is
    /// what the discrete resistivity derivative differentiates.
    pub fn vertex_gradients(&self, grid: &SubdomainGrid, potential: &[f64], tied: &[f64], nodal: Option<&[f64]>) -> Result<Vec<Point>> {
        let geo = grid.geometry()?;
        let d = grid.dim;
        let nc = grid.num_cells();
        let subq = self.subflux.apply(potential, tied, nodal)?;
        let mut out = vec![[0.0; 3]; nc * (d + 1)];
        for c in 0..nc {
            let cn = grid.cell(c);
            let faces = &geo.cell_faces[c * (d + 1)..(c + 1) * (d + 1)];
            let s = -1.0 / (geo.cell_measure[c] * self.coefficient[c]);
            for (ir, &r) in cn.iter().enumerate() {
                let xr = grid.nodes[r];
                let mut u = [0.0; 3];
                for (i, &f) in faces.iter().enumerate() {
                    if i == ir {
                        continue;
                    }
                    let owner = geo.face_cells[f][0] == c;
                    let w = match self.bcs[f] {
                        FaceBc::Free => {
                            let slot = geo.face_nodes[f * d..(f + 1) * d].iter().position(|&n| n == r).expect("face contains its vertex");
                            let q = subq[f * d + slot];
                            if owner {
                                q
                            } else {
                                -q
                            }
                        }
                        FaceBc::Neumann => 0.0,
                        FaceBc::Tied(sides) => geo.face_measure[f] / d as f64 * tied[sides[if owner { 0 } else { 1 }]],
                    };
                    let v = sub(xr, grid.nodes[cn[i]]);
                    for k in 0..3 {
                        u[k] += w * v[k];
                    }
                }
                out[c * (d + 1) + ir] = [u[0] * s, u[1] * s, u[2] * s];
            }
        }
        Ok(out)
    }

    /// Outward flux of every cell through each of its faces (stride `dim + 1`,
    /// face opposite local node `i`), including tied faces.
    pub fn cell_face_fluxes(&self, grid: &SubdomainGrid, face_flux: &[f64], tied: &[f64]) -> Result<Vec<f64>> {
        let geo = grid.geometry()?;
        let d = grid.dim;
        let nc = grid.num_cells();
        let mut out = vec![0.0; nc * (d + 1)];
        for c in 0..nc {
            for i in 0..=d {
                let f = geo.cell_faces[c * (d + 1) + i];
                let owner = geo.face_cells[f][0] == c;
                out[c * (d + 1) + i] = match self.bcs[f] {
                    FaceBc::Free => {
                        if owner {
                            face_flux[f]
                        } else {
                            -face_flux[f]
                        }
                    }
                    FaceBc::Neumann => 0.0,
                    FaceBc::Tied(sides) => {
                        let t = sides[if owner { 0 } else { 1 }];
                        geo.face_measure[f] * tied[t]
                    }
                };
            }
        }
        Ok(out)
    }

    /// Per-cell potential gradients from the lowest-order Raviart–Thomas
    /// reconstruction of the outward cell fluxes, evaluated at the centroid.
    pub fn cell_gradients(&self, grid: &SubdomainGrid, cell_flux: &[f64]) -> Result<Vec<Point>> {
        let geo = grid.geometry()?;
        let d = grid.dim;
        let nc = grid.num_cells();
        if cell_flux.len() != nc * (d + 1) {
            return Err(Error::SizeMismatch { what: "cell fluxes", got: cell_flux.len(), expected: nc * (d + 1) });
        }
        let mut grads = Vec::with_capacity(nc);
        for c in 0..nc {
            let xc = geo.cell_centroid[c];
            let cn = grid.cell(c);
            let mut u = [0.0; 3];
            for i in 0..=d {
                let v = sub(xc, grid.nodes[cn[i]]);
                let w = cell_flux[c * (d + 1) + i];
                for k in 0..3 {
                    u[k] += w * v[k];
                }
            }
            let s = -1.0 / (d as f64 * geo.cell_measure[c] * self.coefficient[c]);
            grads.push([u[0] * s, u[1] * s, u[2] * s]);
        }
        Ok(grads)
    }
}
