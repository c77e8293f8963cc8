//! Artifact formats: legacy VTK for cell fields and CSV for probe series.

pub mod csv;
pub mod vtk;

pub use csv::{probe_csv, read_probe_csv};
pub use vtk::{read_vtk, write_vtk, VtkField};

use std::fmt;

/// Shortest round-trip decimal, switching to exponent notation for very
/// small or large magnitudes.
#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || !a.is_finite() || (1e-4..1e16).contains(&a) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::Num;

    #[test]
    fn num_round_trips() {
        for v in [0.0, -0.0, 1.5, 1.8037370167332514e-17, 6.02e23, -3e-5, 1e-4, 123456.789, f64::MAX, f64::MIN_POSITIVE] {
            let s = Num(v).to_string();
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(Num(1.8037370167332514e-17).to_string(), "1.8037370167332514e-17");
        assert_eq!(Num(2.75).to_string(), "2.75");
    }
}
