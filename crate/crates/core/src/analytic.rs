//! Closed-form homogeneous half-space results for surface electrodes.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::grid::{dot, norm, sub};
use crate::mesh::Point;

/// Potential (V) at `obs` due to current `current` injected at surface point `src`.
pub fn halfspace_potential(rho: f64, current: f64, src: Point, obs: Point) -> Result<f64> {
    let r = norm(sub(obs, src));
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(rho * current / (2.0 * PI * r))
}

/// Per-volume pole-pole sensitivity at `p` for electrodes at `a` and `b`:
/// I/(4π²) (p−a)·(p−b) / (|p−a|³ |p−b|³). Independent of ρ.
pub fn pole_pole_kernel(a: Point, b: Point, p: Point, current: f64) -> Result<f64> {
    let u = sub(p, a);
    let v = sub(p, b);
    let (ru, rv) = (norm(u), norm(v));
    if ru == 0.0 || rv == 0.0 || a == b {
        return Err(Error::CoincidentPoints);
    }
    Ok(current / (4.0 * PI * PI) * dot(u, v) / (ru.powi(3) * rv.powi(3)))
}

/// Signed combination of pole-pole kernels for electrodes `[c1, c2, p1, p2]`,
/// absent (remote) electrodes contributing nothing.
pub fn quadrupole_kernel(q: &[Option<Point>; 4], p: Point, current: f64) -> Result<f64> {
    let mut v = 0.0;
    for (c, sc) in [(q[0], 1.0), (q[1], -1.0)] {
        for (m, sm) in [(q[2], 1.0), (q[3], -1.0)] {
            if let (Some(c), Some(m)) = (c, m) {
                v += sc * sm * pole_pole_kernel(c, m, p, current)?;
            }
        }
    }
    Ok(v)
}

/// |K| = 2π / |1/r(c1,p1) − 1/r(c2,p1) − 1/r(c1,p2) + 1/r(c2,p2)| (m).
pub fn geometric_factor(q: &[Option<Point>; 4]) -> Result<f64> {
    let mut s = 0.0;
    for (c, sc) in [(q[0], 1.0), (q[1], -1.0)] {
        for (m, sm) in [(q[2], 1.0), (q[3], -1.0)] {
            if let (Some(c), Some(m)) = (c, m) {
                let r = norm(sub(c, m));
                if r == 0.0 {
                    return Err(Error::CoincidentPoints);
                }
                s += sc * sm / r;
            }
        }
    }
    if s == 0.0 || !s.is_finite() {
        return Err(Error::DegenerateGeometry);
    }
    Ok((2.0 * PI / s).abs())
}
