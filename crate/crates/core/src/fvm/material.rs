use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::MixedDimMesh;

/// Resistivities (Ω·m) per cell of every grid, plus the thin-object
/// dimensions used in the dimensional reductions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialField {
    pub rho: Vec<f64>,
    pub rho_liner: Vec<f64>,
    /// One resistivity per electrode.
    pub rho_electrode: Vec<f64>,
    /// Liner thickness ε (m).
    pub thickness: f64,
    /// Electrode radius r (m).
    pub radius: f64,
}

impl MaterialField {
    pub fn homogeneous(mesh: &MixedDimMesh, rho: f64, rho_liner: f64, rho_electrode: f64, thickness: f64, radius: f64) -> Self {
        Self {
            rho: vec![rho; mesh.domain.num_cells()],
            rho_liner: vec![rho_liner; mesh.num_liner_cells()],
            rho_electrode: vec![rho_electrode; mesh.electrodes.len()],
            thickness,
            radius,
        }
    }

    pub fn validate(&self, mesh: &MixedDimMesh) -> Result<()> {
        let checks = [
            ("3d resistivity", self.rho.len(), mesh.domain.num_cells()),
            ("liner resistivity", self.rho_liner.len(), mesh.num_liner_cells()),
            ("electrode resistivity", self.rho_electrode.len(), mesh.electrodes.len()),
        ];
        for (what, got, expected) in checks {
            if got != expected {
                return Err(Error::SizeMismatch { what, got, expected });
            }
        }
        for (name, v) in [("rho", &self.rho), ("rho_liner", &self.rho_liner), ("rho_electrode", &self.rho_electrode)] {
            if let Some(i) = v.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
                return Err(Error::Material(format!("{name}[{i}] = {} is not a positive finite resistivity", v[i])));
            }
        }
        if !(self.thickness > 0.0 && self.thickness.is_finite()) {
            return Err(Error::Material(format!("liner thickness {} must be positive", self.thickness)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Material(format!("electrode radius {} must be positive", self.radius)));
        }
        Ok(())
    }

    /// Interface resistance of one liner side: the through-thickness
    /// resistance ε ρ_λ is split into two series halves.
    pub fn liner_side_resistance(&self, k: usize) -> f64 {
        0.5 * self.thickness * self.rho_liner[k]
    }

    /// Conductance per unit area across the whole liner (both sides in series).
    pub fn liner_conductance(&self, k: usize) -> f64 {
        1.0 / (self.thickness * self.rho_liner[k])
    }

    pub fn electrode_area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}
