//! Sensitivity fields ∂(reading)/∂ρ per cell, composed from Green compounds.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fvm::{assemble_system, MaterialField};
use crate::greens::{factorize, GreensTable};
use crate::mesh::grid::{dot, Point};
use crate::mesh::MixedDimMesh;
use crate::survey::Quadrupole;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Normalization {
    Raw,
    PerVolume,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityField {
    /// One value per 3D cell.
    pub domain: Vec<f64>,
    /// One value per liner cell.
    pub liner: Vec<f64>,
    pub normalization: Normalization,
    pub provenance: Vec<Quadrupole>,
}

/// Cell whose resistivity is perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellRef {
    Domain(usize),
    Liner(usize),
}

/// Gram-matrix based evaluator: sensitivities of any configuration reduce to
/// signed sums of per-cell products of electrode gradients.
struct Kernel<'a> {
    mesh: &'a MixedDimMesh,
    greens: &'a GreensTable,
    materials: &'a MaterialField,
}

impl Kernel<'_> {
    fn domain_factor(&self, c: usize) -> Result<f64> {
        let vol = self.mesh.domain.geometry()?.cell_measure[c];
        let sigma = 1.0 / self.materials.rho[c];
        Ok(sigma * sigma * vol / self.greens.current)
    }

    /// Vertex-quadrature mean of ∇g^a·∇g^b over cell `c`.
    fn domain_pair(&self, c: usize, a: usize, b: usize) -> f64 {
        vertex_mean(&self.greens.domain_vertex_gradients[a], &self.greens.domain_vertex_gradients[b], c, 4)
    }

    /// Liner cell value for electrodes a, b with the 1/I scaling applied.
    fn liner_pair(&self, k: usize, a: usize, b: usize) -> Result<f64> {
        let liner = self.mesh.liner.as_ref().ok_or(Error::Scenario("mesh has no liner".into()))?;
        let area = liner.geometry()?.cell_measure[k];
        let eps = self.materials.thickness;
        let sigma = 1.0 / self.materials.rho_liner[k];
        let nl = self.mesh.num_liner_cells();
        let (wa, wb) = (self.greens.liner_exchange(a), self.greens.liner_exchange(b));
        let grad = vertex_mean(&self.greens.liner_vertex_gradients[a], &self.greens.liner_vertex_gradients[b], k, 3);
        let tangential = eps * sigma * sigma * area * grad;
        // Each side carries half of the through-thickness resistance.
        let exchange = 0.5 * eps * area * (wa[k] * wb[k] + wa[nl + k] * wb[nl + k]);
        Ok((tangential + exchange) / self.greens.current)
    }
}

fn vertex_mean(ga: &[Point], gb: &[Point], c: usize, stride: usize) -> f64 {
    (stride * c..stride * (c + 1)).map(|i| dot(ga[i], gb[i])).sum::<f64>() / stride as f64
}

fn check_electrodes(greens: &GreensTable, q: &Quadrupole) -> Result<()> {
    q.validate()?;
    for e in [q.c1, q.c2, q.p1, q.p2].into_iter().flatten() {
        if e >= greens.num_electrodes() {
            return Err(Error::IndexOutOfRange { what: "electrode", index: e, len: greens.num_electrodes() });
        }
    }
    Ok(())
}

/// Raw pole-pole sensitivity for current electrode `a` and potential electrode `b`.
pub fn pole_pole_field(mesh: &MixedDimMesh, greens: &GreensTable, a: usize, b: usize, materials: &MaterialField) -> Result<SensitivityField> {
    if a == b {
        return Err(Error::Quadrupole("pole-pole sensitivity needs two distinct electrodes".into()));
    }
    quadrupole_field(mesh, greens, &Quadrupole::pole_pole(a, b), materials)
}

/// Raw sensitivity of a configuration: the signed combination of its
/// pole-pole fields.
pub fn quadrupole_field(mesh: &MixedDimMesh, greens: &GreensTable, q: &Quadrupole, materials: &MaterialField) -> Result<SensitivityField> {
    check_electrodes(greens, q)?;
    let kern = Kernel { mesh, greens, materials };
    let terms: Vec<(usize, usize, f64)> = q.terms().collect();
    let nc = mesh.domain.num_cells();
    let mut domain = vec![0.0; nc];
    for (c, v) in domain.iter_mut().enumerate() {
        let s: f64 = terms.iter().map(|&(a, b, sg)| sg * kern.domain_pair(c, a, b)).sum();
        *v = s * kern.domain_factor(c)?;
    }
    let mut liner = vec![0.0; mesh.num_liner_cells()];
    for (k, v) in liner.iter_mut().enumerate() {
        let mut s = 0.0;
        for &(a, b, sg) in &terms {
            s += sg * kern.liner_pair(k, a, b)?;
        }
        *v = s;
    }
    Ok(SensitivityField { domain, liner, normalization: Normalization::Raw, provenance: vec![*q] })
}

/// Cell-wise sum of absolute values, accumulated in input order.
pub fn global_field(fields: &[SensitivityField]) -> Result<SensitivityField> {
    let first = fields.first().ok_or(Error::Scenario("no fields to accumulate".into()))?;
    let mut out = SensitivityField {
        domain: vec![0.0; first.domain.len()],
        liner: vec![0.0; first.liner.len()],
        normalization: first.normalization,
        provenance: Vec::new(),
    };
    for f in fields {
        if f.normalization != first.normalization {
            return Err(Error::Normalization("cannot combine raw and per-volume fields".into()));
        }
        if f.domain.len() != out.domain.len() || f.liner.len() != out.liner.len() {
            return Err(Error::SizeMismatch { what: "sensitivity field", got: f.domain.len(), expected: out.domain.len() });
        }
        for (o, v) in out.domain.iter_mut().zip(&f.domain) {
            *o += v.abs();
        }
        for (o, v) in out.liner.iter_mut().zip(&f.liner) {
            *o += v.abs();
        }
        out.provenance.extend_from_slice(&f.provenance);
    }
    Ok(out)
}

/// Global (Σ|·|) raw field over many configurations without materializing
/// each one: per cell, the electrode-gradient Gram matrix is formed once.
pub fn accumulate_global(mesh: &MixedDimMesh, greens: &GreensTable, materials: &MaterialField, configs: &[Quadrupole]) -> Result<SensitivityField> {
    for q in configs {
        check_electrodes(greens, q)?;
    }
    let ne = greens.num_electrodes();
    let kern = Kernel { mesh, greens, materials };
    let terms: Vec<Vec<(usize, usize, f64)>> = configs.iter().map(|q| q.terms().collect()).collect();
    let nc = mesh.domain.num_cells();
    let mut domain = vec![0.0; nc];
    // Cells are independent; each worker keeps its own Gram buffer.
    domain.par_iter_mut().enumerate().try_for_each_init(
        || vec![0.0; ne * ne],
        |gram, (c, out)| -> Result<()> {
            for a in 0..ne {
                for b in a..ne {
                    let v = kern.domain_pair(c, a, b);
                    gram[a * ne + b] = v;
                    gram[b * ne + a] = v;
                }
            }
            let mut acc = 0.0;
            for t in &terms {
                let s: f64 = t.iter().map(|&(a, b, sg)| sg * gram[a * ne + b]).sum();
                acc += s.abs();
            }
            *out = acc * kern.domain_factor(c)?;
            Ok(())
        },
    )?;
    let mut gram = vec![0.0; ne * ne];
    let nl = mesh.num_liner_cells();
    let mut liner = vec![0.0; nl];
    for (k, out) in liner.iter_mut().enumerate() {
        for a in 0..ne {
            for b in a..ne {
                let v = kern.liner_pair(k, a, b)?;
                gram[a * ne + b] = v;
                gram[b * ne + a] = v;
            }
        }
        let mut acc = 0.0;
        for t in &terms {
            let s: f64 = t.iter().map(|&(a, b, sg)| sg * gram[a * ne + b]).sum();
            acc += s.abs();
        }
        *out = acc;
    }
    Ok(SensitivityField { domain, liner, normalization: Normalization::Raw, provenance: configs.to_vec() })
}

/// Divides by the physical cell volume: V for 3D cells, ε·A for liner cells.
pub fn volume_normalize(field: &SensitivityField, mesh: &MixedDimMesh, thickness: f64) -> Result<SensitivityField> {
    if field.normalization == Normalization::PerVolume {
        return Err(Error::Normalization("field is already normalized".into()));
    }
    let vol = &mesh.domain.geometry()?.cell_measure;
    let lvol = mesh.liner_volumes(thickness)?;
    if field.domain.len() != vol.len() || field.liner.len() != lvol.len() {
        return Err(Error::SizeMismatch { what: "sensitivity field", got: field.domain.len(), expected: vol.len() });
    }
    Ok(SensitivityField {
        domain: field.domain.iter().zip(vol).map(|(v, w)| v / w).collect(),
        liner: field.liner.iter().zip(&lvol).map(|(v, w)| v / w).collect(),
        normalization: Normalization::PerVolume,
        provenance: field.provenance.clone(),
    })
}

/// Reading of `q` for the given materials from a fresh assembly and solve.
pub fn direct_reading(mesh: &MixedDimMesh, materials: &MaterialField, q: &Quadrupole, current: f64) -> Result<f64> {
    q.validate()?;
    let system = assemble_system(mesh, materials)?;
    let fact = factorize(&system)?;
    let mut rhs = vec![0.0; system.dofs.len()];
    for (e, s) in [(q.c1, 1.0), (q.c2, -1.0)] {
        if let Some(e) = e {
            let b = system.electrode_rhs(e, s * current)?;
            for (r, v) in rhs.iter_mut().zip(b) {
                *r += v;
            }
        }
    }
    let x = fact.solve(&rhs)?;
    let mut v = 0.0;
    for (e, s) in [(q.p1, 1.0), (q.p2, -1.0)] {
        if let Some(e) = e {
            v += s * x[system.electrode_top(e)?];
        }
    }
    Ok(v)
}

/// Central finite difference of the reading with respect to one cell's
/// resistivity: (V(ρ+δ) − V(ρ−δ)) / 2δ.
pub fn fd_sensitivity(mesh: &MixedDimMesh, materials: &MaterialField, q: &Quadrupole, cell: CellRef, delta: f64, current: f64) -> Result<f64> {
    let rho = match cell {
        CellRef::Domain(i) => *materials.rho.get(i).ok_or(Error::IndexOutOfRange { what: "3d cell", index: i, len: materials.rho.len() })?,
        CellRef::Liner(i) => {
            *materials.rho_liner.get(i).ok_or(Error::IndexOutOfRange { what: "liner cell", index: i, len: materials.rho_liner.len() })?
        }
    };
    if !(delta > 0.0) || rho - delta <= 0.0 {
        return Err(Error::FdStep(format!("step {delta} must be positive and below the resistivity {rho}")));
    }
    let eval = |r: f64| {
        let mut m = materials.clone();
        match cell {
            CellRef::Domain(i) => m.rho[i] = r,
            CellRef::Liner(i) => m.rho_liner[i] = r,
        }
        direct_reading(mesh, &m, q, current)
    };
    Ok((eval(rho + delta)? - eval(rho - delta)?) / (2.0 * delta))
}
