//! Small dense kernels for the per-vertex interaction-region solves.

/// Row-major square matrix.
#[derive(Debug, Clone)]
pub struct Dense {
    pub n: usize,
    pub m: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self { n, m, a: vec![0.0; n * m] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.m + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.m + j] += v;
    }
}

/// In-place Cholesky factorization of a symmetric positive definite matrix
/// (lower triangle). Returns `None` if a pivot is not positive.
pub fn cholesky(mut a: Dense) -> Option<Dense> {
    let n = a.n;
    for j in 0..n {
        let mut d = a.at(j, j);
        for k in 0..j {
            d -= a.at(j, k) * a.at(j, k);
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        a.a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a.at(i, j);
            for k in 0..j {
                s -= a.at(i, k) * a.at(j, k);
            }
            a.a[i * n + j] = s / d;
        }
    }
    Some(a)
}

/// Solves L L^T x = b for every column of `b` (row-major n × m).
pub fn cholesky_solve(l: &Dense, b: &mut Dense) {
    let n = l.n;
    let m = b.m;
    for c in 0..m {
        for i in 0..n {
            let mut s = b.a[i * m + c];
            for k in 0..i {
                s -= l.at(i, k) * b.a[k * m + c];
            }
            b.a[i * m + c] = s / l.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = b.a[i * m + c];
            for k in i + 1..n {
                s -= l.at(k, i) * b.a[k * m + c];
            }
            b.a[i * m + c] = s / l.at(i, i);
        }
    }
}

/// Inverse of a d × d matrix (d ≤ 3), row-major. `None` when singular.
pub fn small_inverse(d: usize, m: &[f64]) -> Option<Vec<f64>> {
    match d {
        1 => (m[0] != 0.0).then(|| vec![1.0 / m[0]]),
        2 => {
            let det = m[0] * m[3] - m[1] * m[2];
            (det != 0.0).then(|| vec![m[3] / det, -m[1] / det, -m[2] / det, m[0] / det])
        }
        3 => {
            let c00 = m[4] * m[8] - m[5] * m[7];
            let c01 = m[5] * m[6] - m[3] * m[8];
            let c02 = m[3] * m[7] - m[4] * m[6];
            let det = m[0] * c00 + m[1] * c01 + m[2] * c02;
            if det == 0.0 {
                return None;
            }
            let inv = 1.0 / det;
            Some(vec![
                c00 * inv,
                (m[2] * m[7] - m[1] * m[8]) * inv,
                (m[1] * m[5] - m[2] * m[4]) * inv,
                c01 * inv,
                (m[0] * m[8] - m[2] * m[6]) * inv,
                (m[2] * m[3] - m[0] * m[5]) * inv,
                c02 * inv,
                (m[1] * m[6] - m[0] * m[7]) * inv,
                (m[0] * m[4] - m[1] * m[3]) * inv,
            ])
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd() {
        let mut a = Dense::zeros(3, 3);
        let vals = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        a.a.copy_from_slice(&vals);
        let l = cholesky(a).unwrap();
        let mut b = Dense::zeros(3, 1);
        b.a.copy_from_slice(&[1.0, 2.0, 3.0]);
        cholesky_solve(&l, &mut b);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| vals[i * 3 + j] * b.a[j]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_3x3() {
        let m = [2.0, 0.0, 1.0, 1.0, 3.0, 0.0, 0.0, 1.0, 4.0];
        let inv = small_inverse(3, &m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| m[i * 3 + k] * inv[k * 3 + j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!(small_inverse(2, &[1.0, 2.0, 2.0, 4.0]).is_none());
    }
}
