use std::fmt::Write;

use super::Num;
use crate::error::{Error, Result};
use crate::mesh::Point;

pub const PROBE_HEADER: &str = "x,y,z,value";

/// Probe series as CSV with header `x,y,z,value`. Floats use the shortest
/// representation that round-trips.
pub fn probe_csv(series: &[(Point, f64)]) -> String {
    let mut s = String::with_capacity(32 * (series.len() + 1));
    s.push_str(PROBE_HEADER);
    s.push('\n');
    for (p, v) in series {
        let _ = writeln!(s, "{},{},{},{}", Num(p[0]), Num(p[1]), Num(p[2]), Num(*v));
    }
    s
}

pub fn read_probe_csv(text: &str) -> Result<Vec<(Point, f64)>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(PROBE_HEADER) {
        return Err(Error::FieldFile(format!("probe CSV must start with {PROBE_HEADER:?}")));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: Vec<f64> =
                l.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| Error::FieldFile(format!("{l:?}: {e}")))).collect::<Result<_>>()?;
            match v[..] {
                [x, y, z, value] => Ok(([x, y, z], value)),
                _ => Err(Error::FieldFile(format!("expected 4 columns in {l:?}"))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = vec![([0.1, 0.2, 2.75], 1.0 / 3.0), ([1e-17, -0.0, 3.0], 5e300)];
        let text = probe_csv(&s);
        assert!(text.starts_with("x,y,z,value\n0.1,0.2,2.75,"));
        assert_eq!(read_probe_csv(&text).unwrap(), s);
        assert!(read_probe_csv("a,b\n").is_err());
    }
}
