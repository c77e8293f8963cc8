//! Global saddle-point system over all grids and interfaces.
//!
//! Unknown ordering: 3D cell potentials, liner cell potentials, electrode cell
//! potentials (electrode by electrode), liner exchange fields (PLUS side then
//! MINUS side) and electrode exchange fields. Exchange fields are positive
//! from the 3D domain into the lower-dimensional object.

use std::ops::Range;

use super::material::MaterialField;
use super::mpfa::{assemble_subdomain, FaceBc, SubdomainDiscretization};
use crate::error::{Error, Result};
use crate::mesh::{FaceTag, MixedDimMesh, MortarKind, NONE};
use crate::sparse::{Csr, Triplets};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    pub n_domain: usize,
    pub n_liner: usize,
    /// Start of each electrode's cells in the electrode block, plus the end.
    pub electrode_cells: Vec<usize>,
    /// Start of each electrode's mortar cells in the electrode-mortar block, plus the end.
    pub electrode_mortars: Vec<usize>,
}

impl DofMap {
    pub fn domain(&self) -> Range<usize> {
        0..self.n_domain
    }
    pub fn liner(&self) -> Range<usize> {
        let s = self.n_domain;
        s..s + self.n_liner
    }
    pub fn electrodes(&self) -> Range<usize> {
        let s = self.liner().end;
        s..s + self.electrode_cells.last().copied().unwrap_or(0)
    }
    pub fn electrode(&self, e: usize) -> Range<usize> {
        let s = self.electrodes().start;
        s + self.electrode_cells[e]..s + self.electrode_cells[e + 1]
    }
    pub fn liner_mortars(&self) -> Range<usize> {
        let s = self.electrodes().end;
        s..s + 2 * self.n_liner
    }
    pub fn electrode_mortars_range(&self) -> Range<usize> {
        let s = self.liner_mortars().end;
        s..s + self.electrode_mortars.last().copied().unwrap_or(0)
    }
    pub fn electrode_mortar(&self, e: usize) -> Range<usize> {
        let s = self.electrode_mortars_range().start;
        s + self.electrode_mortars[e]..s + self.electrode_mortars[e + 1]
    }
    pub fn len(&self) -> usize {
        self.electrode_mortars_range().end
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn num_electrodes(&self) -> usize {
        self.electrode_cells.len().saturating_sub(1)
    }

    /// Human-readable name of the block holding `dof`.
    pub fn block_name(&self, dof: usize) -> &'static str {
        if self.domain().contains(&dof) {
            "3d potential"
        } else if self.liner().contains(&dof) {
            "liner potential"
        } else if self.electrodes().contains(&dof) {
            "electrode potential"
        } else if self.liner_mortars().contains(&dof) {
            "liner exchange"
        } else {
            "electrode exchange"
        }
    }
}

/// Named blocks of the saddle-point operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    A,
    ALiner,
    AElectrode,
    MLiner,
    MElectrode,
    BLiner,
    BElectrode,
    CLiner,
    CElectrode,
    /// Coupling columns of the 3D rows (−B_λᵀ, −B_γᵀ up to row scaling).
    BLinerT,
    BElectrodeT,
    CLinerT,
    CElectrodeT,
}

#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    /// Symmetric operator `S P K S`: `K` is the block system, `P` negates the
    /// mortar rows and `S = diag(scale)` equilibrates it.
    pub matrix: Csr,
    pub scale: Vec<f64>,
    pub dofs: DofMap,
    pub domain: SubdomainDiscretization,
    pub liner: Option<SubdomainDiscretization>,
    pub electrodes: Vec<SubdomainDiscretization>,
    /// 3D cells with at least one Dirichlet face.
    pub anchored: Vec<usize>,
    pub materials: MaterialField,
}

impl DiscreteSystem {
    pub fn block(&self, b: Block) -> Csr {
        let d = &self.dofs;
        let (r, c) = match b {
            Block::A => (d.domain(), d.domain()),
            Block::ALiner => (d.liner(), d.liner()),
            Block::AElectrode => (d.electrodes(), d.electrodes()),
            Block::MLiner => (d.liner_mortars(), d.liner_mortars()),
            Block::MElectrode => (d.electrode_mortars_range(), d.electrode_mortars_range()),
            Block::BLiner => (d.liner_mortars(), d.domain()),
            Block::BElectrode => (d.electrode_mortars_range(), d.domain()),
            Block::CLiner => (d.liner_mortars(), d.liner()),
            Block::CElectrode => (d.electrode_mortars_range(), d.electrodes()),
            Block::BLinerT => (d.domain(), d.liner_mortars()),
            Block::BElectrodeT => (d.domain(), d.electrode_mortars_range()),
            Block::CLinerT => (d.liner(), d.liner_mortars()),
            Block::CElectrodeT => (d.electrodes(), d.electrode_mortars_range()),
        };
        self.matrix.slice(r, c)
    }

    /// Blocks that must be empty in the saddle-point pattern: (rows, cols).
    pub fn zero_blocks(&self) -> Vec<(Range<usize>, Range<usize>)> {
        let d = &self.dofs;
        vec![
            (d.domain(), d.liner()),
            (d.domain(), d.electrodes()),
            (d.liner(), d.domain()),
            (d.liner(), d.electrodes()),
            (d.liner(), d.electrode_mortars_range()),
            (d.electrodes(), d.domain()),
            (d.electrodes(), d.liner()),
            (d.electrodes(), d.liner_mortars()),
            (d.liner_mortars(), d.electrodes()),
            (d.liner_mortars(), d.electrode_mortars_range()),
            (d.electrode_mortars_range(), d.liner()),
            (d.electrode_mortars_range(), d.liner_mortars()),
        ]
    }

    /// Global index of the topmost cell of electrode `e`.
    pub fn electrode_top(&self, e: usize) -> Result<usize> {
        if e >= self.dofs.num_electrodes() {
            return Err(Error::IndexOutOfRange { what: "electrode", index: e, len: self.dofs.num_electrodes() });
        }
        Ok(self.dofs.electrode(e).start)
    }

    /// Right-hand side injecting current `current` (A) at the top of electrode `e`.
    pub fn electrode_rhs(&self, e: usize, current: f64) -> Result<Vec<f64>> {
        let top = self.electrode_top(e)?;
        let mut b = vec![0.0; self.dofs.len()];
        b[top] = current;
        Ok(b)
    }
}

/// Entries below this fraction of the larger adjacent diagonal are rounding
/// residue of the local eliminations and are dropped.
const DROP_TOLERANCE: f64 = 1e-13;

/// Symmetric scaling: unit diagonal for cell and liner mortar unknowns, unit
/// largest coupling for electrode mortars (their diagonal is the tiny
/// electrode resistance). The result is symmetrized and purged of rounding
/// residue.
fn equilibrate(k: &Csr, dofs: &DofMap) -> (Csr, Vec<f64>) {
    let n = k.nrows;
    let em = dofs.electrode_mortars_range();
    let mut scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = k.get(i, i).abs();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    for i in em.clone() {
        let m = k.row(i).filter(|&(j, _)| j != i && !em.contains(&j)).map(|(j, v)| (v * scale[j]).abs()).fold(0.0, f64::max);
        if m > 0.0 {
            scale[i] = 1.0 / m;
        }
    }
    let kt = k.transpose();
    let diag: Vec<f64> = (0..n).map(|i| (k.get(i, i) * scale[i] * scale[i]).abs()).collect();
    let mut t = Triplets::new(n, n);
    for (i, j, v) in k.iter() {
        let v = 0.5 * (v + kt.get(i, j)) * scale[i] * scale[j];
        if i == j || v.abs() >= DROP_TOLERANCE * diag[i].max(diag[j]) {
            t.push(i, j, v);
        }
    }
    // Entries present only in the transpose.
    for (i, j, v) in kt.iter() {
        if k.get(i, j) == 0.0 {
            let v = 0.5 * v * scale[i] * scale[j];
            if v.abs() >= DROP_TOLERANCE * diag[i].max(diag[j]) {
                t.push(i, j, v);
            }
        }
    }
    (t.to_csr(), scale)
}

fn push_csr(t: &mut Triplets, a: &Csr, row0: usize, col0: usize, scale: f64) {
    for (i, j, v) in a.iter() {
        t.push(row0 + i, col0 + j, scale * v);
    }
}

/// Assembles the full block system with homogeneous Dirichlet data on OUTER
/// faces and zero flux on TOP faces, electrode tips and the liner rim.
pub fn assemble_system(mesh: &MixedDimMesh, materials: &MaterialField) -> Result<DiscreteSystem> {
    materials.validate(mesh)?;
    let geo = mesh.domain.geometry()?;
    if !mesh.has_mortars() {
        return Err(Error::MissingMortars);
    }
    let nl = mesh.num_liner_cells();
    let plus = mesh.liner_mortar(MortarKind::LinerPlus);
    let minus = mesh.liner_mortar(MortarKind::LinerMinus);
    if nl > 0 && (plus.is_none() || minus.is_none()) {
        return Err(Error::MissingMortars);
    }

    // 3D grid with tied liner faces.
    let mut bcs: Vec<FaceBc> = geo
        .face_tag
        .iter()
        .map(|t| match t {
            FaceTag::Interior | FaceTag::Outer => FaceBc::Free,
            FaceTag::Top => FaceBc::Neumann,
        })
        .collect();
    let mut tied_measure = vec![0.0; 2 * nl];
    if let (Some(plus), Some(minus)) = (plus, minus) {
        for (side, iface) in [plus, minus].into_iter().enumerate() {
            for mc in &iface.cells {
                let f = mc.high;
                let t = side * nl + mc.low_cell;
                tied_measure[t] = mc.measure;
                let slot = usize::from(geo.face_cells[f][0] != mc.side_cell);
                let mut sides = match bcs[f] {
                    FaceBc::Tied(s) => s,
                    _ => [NONE, NONE],
                };
                sides[slot] = t;
                bcs[f] = FaceBc::Tied(sides);
            }
        }
    }
    let sigma: Vec<f64> = materials.rho.iter().map(|r| 1.0 / r).collect();
    let domain = assemble_subdomain(&mesh.domain, &sigma, &bcs, &tied_measure)?;
    let anchored: Vec<usize> = {
        let mut a: Vec<usize> = (0..geo.num_faces()).filter(|&f| geo.face_tag[f] == FaceTag::Outer).map(|f| geo.face_cells[f][0]).collect();
        a.sort_unstable();
        a.dedup();
        a
    };

    let liner = match &mesh.liner {
        Some(l) => {
            let coef: Vec<f64> = materials.rho_liner.iter().map(|r| materials.thickness / r).collect();
            let lbcs = super::mpfa::boundary_bcs(l, |_| false)?;
            Some(assemble_subdomain(l, &coef, &lbcs, &[])?)
        }
        None => None,
    };
    let area = materials.electrode_area();
    let mut electrodes = Vec::with_capacity(mesh.electrodes.len());
    let mut electrode_cells = vec![0];
    let mut electrode_mortars = vec![0];
    for (e, g) in mesh.electrodes.iter().enumerate() {
        let coef = vec![area / materials.rho_electrode[e]; g.num_cells()];
        let ebcs = super::mpfa::boundary_bcs(g, |_| false)?;
        electrodes.push(assemble_subdomain(g, &coef, &ebcs, &[])?);
        electrode_cells.push(electrode_cells[e] + g.num_cells());
        let nm = mesh.electrode_mortar(e).map_or(0, |m| m.cells.len());
        electrode_mortars.push(electrode_mortars[e] + nm);
    }
    let dofs = DofMap { n_domain: mesh.domain.num_cells(), n_liner: nl, electrode_cells, electrode_mortars };
    let n = dofs.len();
    let mut t = Triplets::new(n, n);

    // 3D rows.
    push_csr(&mut t, &domain.stiffness, 0, 0, 1.0);
    push_csr(&mut t, &domain.coupling, 0, dofs.liner_mortars().start, 1.0);

    // Liner rows and (negated) liner mortar rows.
    if let Some(ld) = &liner {
        let r0 = dofs.liner().start;
        push_csr(&mut t, &ld.stiffness, r0, r0, 1.0);
        let m0 = dofs.liner_mortars().start;
        for tdof in 0..2 * nl {
            let k = tdof % nl;
            let a = tied_measure[tdof];
            let res = materials.liner_side_resistance(k);
            let row = m0 + tdof;
            t.push(r0 + k, row, -a);
            for (j, v) in domain.tied_cells.row(tdof) {
                t.push(row, j, -v);
            }
            for (j, v) in domain.tied_tied.row(tdof) {
                t.push(row, m0 + j, -v);
            }
            t.push(row, row, -a * res);
            t.push(row, r0 + k, -a);
        }
    }

    // Electrode rows and (negated) electrode mortar rows.
    for (e, ed) in electrodes.iter().enumerate() {
        let r0 = dofs.electrode(e).start;
        push_csr(&mut t, &ed.stiffness, r0, r0, 1.0);
        let Some(iface) = mesh.electrode_mortar(e) else { continue };
        let m0 = dofs.electrode_mortar(e).start;
        let rho = materials.rho_electrode[e];
        for (m, mc) in iface.cells.iter().enumerate() {
            let len = mc.measure;
            let row = m0 + m;
            t.push(mc.high, row, len);
            t.push(r0 + mc.low_cell, row, -len);
            t.push(row, row, -rho * len);
            t.push(row, r0 + mc.low_cell, -len);
            t.push(row, mc.high, len);
        }
    }
    let (matrix, scale) = equilibrate(&t.to_csr(), &dofs);

    Ok(DiscreteSystem { matrix, scale, dofs, domain, liner, electrodes, anchored, materials: materials.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{liner_materials, liner_mesh};

    #[test]
    fn operator_is_symmetric_with_saddle_point_pattern() {
        let mesh = liner_mesh();
        let sys = assemble_system(&mesh, &liner_materials(&mesh, 1e8)).unwrap();
        assert!(sys.matrix.asymmetry() < 1e-15);
        for (rows, cols) in sys.zero_blocks() {
            assert_eq!(sys.matrix.slice(rows.clone(), cols.clone()).nnz(), 0, "{rows:?} x {cols:?}");
        }
        assert!(sys.block(Block::BLiner).nnz() > 0);
        assert!(sys.block(Block::CElectrode).nnz() > 0);
        assert_eq!(sys.dofs.num_electrodes(), 4);
        assert!(sys.electrode_rhs(4, 1.0).is_err());
        let b = sys.electrode_rhs(2, 0.5).unwrap();
        assert_eq!(b.iter().sum::<f64>(), 0.5);
    }

    #[test]
    fn material_sizes_are_checked() {
        let mesh = liner_mesh();
        let mut m = liner_materials(&mesh, 1e8);
        m.rho_liner.pop();
        assert!(matches!(assemble_system(&mesh, &m), Err(Error::SizeMismatch { .. })));
    }
}
