//! Electrode configurations: named arrays and exhaustive enumeration.

use std::fmt::Write as _;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::{Error, Result};
use crate::mesh::Point;

/// Current electrodes C1, C2 and potential electrodes P1, P2; `None` marks a
/// remote electrode at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, JsonSchema)]
pub struct Quadrupole {
    pub c1: Option<usize>,
    pub c2: Option<usize>,
    pub p1: Option<usize>,
    pub p2: Option<usize>,
}

impl Quadrupole {
    pub fn new(c1: usize, c2: usize, p1: usize, p2: usize) -> Self {
        Self { c1: Some(c1), c2: Some(c2), p1: Some(p1), p2: Some(p2) }
    }

    pub fn pole_pole(c1: usize, p1: usize) -> Self {
        Self { c1: Some(c1), c2: None, p1: Some(p1), p2: None }
    }

    pub fn pole_dipole(c1: usize, p1: usize, p2: usize) -> Self {
        Self { c1: Some(c1), c2: None, p1: Some(p1), p2: Some(p2) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c1.is_none() && self.c2.is_none() {
            return Err(Error::Quadrupole("no current electrode".into()));
        }
        if self.p1.is_none() && self.p2.is_none() {
            return Err(Error::Quadrupole("no potential electrode".into()));
        }
        let present: Vec<usize> = [self.c1, self.c2, self.p1, self.p2].into_iter().flatten().collect();
        for i in 0..present.len() {
            for j in i + 1..present.len() {
                if present[i] == present[j] {
                    return Err(Error::Quadrupole(format!("electrode {} used twice", present[i])));
                }
            }
        }
        Ok(())
    }

    /// Signed pole-pole terms (current electrode, potential electrode, sign).
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, f64)> {
        let cs = [(self.c1, 1.0), (self.c2, -1.0)];
        let ps = [(self.p1, 1.0), (self.p2, -1.0)];
        cs.into_iter().flat_map(move |(c, sc)| ps.into_iter().filter_map(move |(p, sp)| Some((c?, p?, sc * sp))))
    }

    /// Current and potential pairs exchanged.
    pub fn reciprocal(&self) -> Self {
        Self { c1: self.p1, c2: self.p2, p1: self.c1, p2: self.c2 }
    }

    /// Map to electrode positions.
    pub fn points(&self, positions: &[Point]) -> Result<[Option<Point>; 4]> {
        let get = |i: Option<usize>| -> Result<Option<Point>> {
            match i {
                None => Ok(None),
                Some(i) => positions.get(i).copied().map(Some).ok_or(Error::IndexOutOfRange { what: "electrode", index: i, len: positions.len() }),
            }
        };
        Ok([get(self.c1)?, get(self.c2)?, get(self.p1)?, get(self.p2)?])
    }

    /// Canonical form with reciprocal duplicates identified: lower index
    /// first within each pair (remote last); a single electrode pair carries
    /// the current, otherwise the pair with the lower first index does.
    pub fn canonical(&self) -> Self {
        fn order(a: Option<usize>, b: Option<usize>) -> (Option<usize>, Option<usize>) {
            match (a, b) {
                (Some(x), Some(y)) if y < x => (Some(y), Some(x)),
                (None, Some(y)) => (Some(y), None),
                _ => (a, b),
            }
        }
        let c = order(self.c1, self.c2);
        let p = order(self.p1, self.p2);
        let key = |pair: (Option<usize>, Option<usize>)| (pair.0.unwrap_or(usize::MAX), pair.1.unwrap_or(usize::MAX));
        let swap = match pair_rank(p).cmp(&pair_rank(c)) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Equal => key(p) < key(c),
            std::cmp::Ordering::Greater => false,
        };
        let (c, p) = if swap { (p, c) } else { (c, p) };
        Self { c1: c.0, c2: c.1, p1: p.0, p2: p.1 }
    }
}

fn pair_rank(pair: (Option<usize>, Option<usize>)) -> usize {
    usize::from(pair.0.is_some()) + usize::from(pair.1.is_some())
}

fn sort_key(q: &Quadrupole) -> (usize, usize, usize, usize) {
    let k = |i: Option<usize>| i.unwrap_or(usize::MAX);
    (k(q.c1), k(q.c2), k(q.p1), k(q.p2))
}

/// In-line Wenner-alpha arrays C1-P1-P2-C2 with electrode spacing `step`
/// (in electrode indices along `line`).
pub fn wenner_alpha(line: &[usize], step: usize) -> Result<Vec<Quadrupole>> {
    if line.len() < 4 {
        return Err(Error::Quadrupole(format!("Wenner array needs at least 4 electrodes, got {}", line.len())));
    }
    if step == 0 {
        return Err(Error::Quadrupole("array step must be positive".into()));
    }
    let span = 3 * step;
    Ok((0..line.len().saturating_sub(span)).map(|i| Quadrupole::new(line[i], line[i + span], line[i + step], line[i + 2 * step])).collect())
}

/// In-line dipole-dipole arrays C2-C1-P1-P2 with dipole length `step` and
/// separation `n` dipole lengths.
pub fn dipole_dipole(line: &[usize], step: usize, n: usize) -> Result<Vec<Quadrupole>> {
    if line.len() < 4 {
        return Err(Error::Quadrupole(format!("dipole-dipole array needs at least 4 electrodes, got {}", line.len())));
    }
    if step == 0 || n == 0 {
        return Err(Error::Quadrupole("array step and separation must be positive".into()));
    }
    let span = (n + 2) * step;
    Ok((0..line.len().saturating_sub(span))
        .map(|i| {
            let c2 = line[i];
            let c1 = line[i + step];
            let p1 = line[i + step + n * step];
            Quadrupole::new(c1, c2, p1, line[i + span])
        })
        .collect())
}

/// Every admissible configuration of the layout with geometric factor below
/// `k_max` (m), sorted by canonical form, with its geometric factor.
///
/// An infinite `k_max` disables the filter; configurations whose geometric
/// factor is undefined (zero potential difference in a half-space) are then
/// reported with an infinite factor.
pub fn enumerate_configs(positions: &[Point], k_max: f64) -> Vec<(Quadrupole, f64)> {
    let n = positions.len();
    let mut out = Vec::new();
    let keep = |q: Quadrupole, out: &mut Vec<(Quadrupole, f64)>| match q.points(positions).and_then(|p| analytic::geometric_factor(&p)) {
        Ok(k) if k < k_max || k_max == f64::INFINITY => out.push((q, k)),
        Err(_) if k_max == f64::INFINITY => out.push((q, f64::INFINITY)),
        _ => {}
    };
    for a in 0..n {
        for b in a + 1..n {
            for c in a + 1..n {
                if c == b {
                    continue;
                }
                for d in c + 1..n {
                    if d != b {
                        keep(Quadrupole::new(a, b, c, d), &mut out);
                    }
                }
            }
        }
    }
    for c in 0..n {
        for p in 0..n {
            for q in p + 1..n {
                if p != c && q != c {
                    keep(Quadrupole::pole_dipole(c, p, q), &mut out);
                }
            }
        }
    }
    for c in 0..n {
        for p in c + 1..n {
            keep(Quadrupole::pole_pole(c, p), &mut out);
        }
    }
    out.sort_by_key(|(q, _)| sort_key(q));
    out
}

/// CSV rendering `x0,x1,y0,y1,k_factor`, remote electrodes as -1.
pub fn configs_csv(configs: &[(Quadrupole, f64)]) -> String {
    let mut s = String::from("x0,x1,y0,y1,k_factor\n");
    let f = |i: Option<usize>| i.map_or("-1".to_string(), |v| v.to_string());
    for (q, k) in configs {
        let _ = writeln!(s, "{},{},{},{},{}", f(q.c1), f(q.c2), f(q.p1), f(q.p2), crate::io::Num(*k));
    }
    s
}
