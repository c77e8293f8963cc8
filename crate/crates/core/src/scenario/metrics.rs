//! Metric extraction from per-cell fields: horizontal slices, line probes and
//! percent RMSE between series.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{Point, PointLocator};
use crate::sensitivity::{Normalization, SensitivityField};

/// Samples per axis of a slice window.
pub const SLICE_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceMetrics {
    pub min: f64,
    pub max: f64,
    /// Mean of the uniformly spaced samples, i.e. the area-weighted average.
    pub average: f64,
}

/// Midpoints of a 50 × 50 subdivision of the horizontal window
/// `[x0, x1] × [y0, y1]` at height `z`, with the containing cell's value.
pub fn slice_samples(values: &[f64], locator: &PointLocator, z: f64, window: [[f64; 2]; 2]) -> Result<Vec<(Point, f64)>> {
    let n = SLICE_SAMPLES;
    let [[x0, x1], [y0, y1]] = window;
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        let y = y0 + (y1 - y0) * (j as f64 + 0.5) / n as f64;
        for i in 0..n {
            let x = x0 + (x1 - x0) * (i as f64 + 0.5) / n as f64;
            out.push(([x, y, z], sample(values, locator, [x, y, z])?));
        }
    }
    Ok(out)
}

/// Min, max and area-weighted average of a per-volume field over a
/// horizontal window, from the samples of [`slice_samples`].
pub fn slice_metrics(field: &SensitivityField, locator: &PointLocator, z: f64, window: [[f64; 2]; 2]) -> Result<SliceMetrics> {
    if field.normalization != Normalization::PerVolume {
        return Err(Error::Normalization("slice metrics need a per-volume field".into()));
    }
    Ok(summarize(&slice_samples(&field.domain, locator, z, window)?))
}

pub fn summarize(samples: &[(Point, f64)]) -> SliceMetrics {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &(_, v) in samples {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    SliceMetrics { min, max, average: sum / samples.len() as f64 }
}

fn sample(values: &[f64], locator: &PointLocator, p: Point) -> Result<f64> {
    let c = locator.locate(p).ok_or(Error::PointOutside(p))?;
    values.get(c).copied().ok_or(Error::IndexOutOfRange { what: "cell", index: c, len: values.len() })
}

/// `n` evenly spaced samples from `a` to `b` (both included), each taking the
/// value of its containing cell.
pub fn line_probe(values: &[f64], locator: &PointLocator, a: Point, b: Point, n: usize) -> Result<Vec<(Point, f64)>> {
    if n < 2 {
        return Err(Error::Scenario("a line probe needs at least two samples".into()));
    }
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])];
            Ok((p, sample(values, locator, p)?))
        })
        .collect()
}

/// 100 · RMS(numerical − analytic) / RMS(analytic).
pub fn rmse_percent(numerical: &[f64], analytic: &[f64]) -> Result<f64> {
    if numerical.len() != analytic.len() {
        return Err(Error::SizeMismatch { what: "numerical series", got: numerical.len(), expected: analytic.len() });
    }
    let diff: f64 = numerical.iter().zip(analytic).map(|(n, a)| (n - a) * (n - a)).sum();
    let norm: f64 = analytic.iter().map(|a| a * a).sum();
    if !(norm > 0.0) {
        return Err(Error::Scenario("analytic series has zero RMS".into()));
    }
    Ok(100.0 * (diff / norm).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, BoxMeshSpec, Grading};

    fn cube() -> crate::mesh::MixedDimMesh {
        let spec = BoxMeshSpec { lo: [0.0; 3], hi: [1.0; 3], grading: Grading::uniform(0.25), liner: None, electrodes: vec![] };
        build_box_mesh(&spec).unwrap()
    }

    fn constant(n: usize, c: f64) -> SensitivityField {
        SensitivityField { domain: vec![c; n], liner: vec![], normalization: Normalization::PerVolume, provenance: vec![] }
    }

    #[test]
    fn constant_slice() {
        let mesh = cube();
        let loc = PointLocator::new(&mesh.domain);
        let f = constant(mesh.domain.num_cells(), 3.5);
        let m = slice_metrics(&f, &loc, 0.4, [[0.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(m, SliceMetrics { min: 3.5, max: 3.5, average: 3.5 });
        assert!(slice_metrics(&f, &loc, -0.5, [[0.0, 1.0], [0.0, 1.0]]).is_err());
        let raw = SensitivityField { normalization: Normalization::Raw, ..f };
        assert!(slice_metrics(&raw, &loc, 0.4, [[0.0, 1.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn probe_is_piecewise_constant() {
        let mesh = cube();
        let loc = PointLocator::new(&mesh.domain);
        let values: Vec<f64> = (0..mesh.domain.num_cells()).map(|c| c as f64).collect();
        let s = line_probe(&values, &loc, [0.1, 0.1, 0.0], [0.1, 0.1, 1.0], 11).unwrap();
        assert_eq!(s.len(), 11);
        for (p, v) in &s {
            assert_eq!(*v, loc.locate(*p).unwrap() as f64);
        }
        assert!(line_probe(&values, &loc, [0.5, 0.5, 0.5], [0.5, 0.5, 2.0], 5).is_err());
    }

    #[test]
    fn rmse_examples() {
        let a = [1.0, -2.0, 3.0];
        assert_eq!(rmse_percent(&a, &a).unwrap(), 0.0);
        let n: Vec<f64> = a.iter().map(|v| 1.1 * v).collect();
        assert!((rmse_percent(&n, &a).unwrap() - 10.0).abs() < 1e-12);
        assert!(rmse_percent(&a, &[0.0; 3]).is_err());
        assert!(rmse_percent(&a, &[1.0]).is_err());
    }
}
