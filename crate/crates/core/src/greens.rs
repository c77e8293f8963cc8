//! One factorization, one solve per electrode: the discrete σ-weighted Green
//! compound of every electrode, with per-cell gradients.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::prelude::Solve;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LdltRef, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, Par, Side};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fvm::{DiscreteSystem, DofMap};
use crate::mesh::{MixedDimMesh, Point, NONE};
use crate::sparse::Csr;
use crate::survey::Quadrupole;
enum Solver {
    Ldlt { symbolic: SymbolicCholesky<usize>, values: Vec<f64> },
    Lu(Lu<usize, f64>),
}

/// Factorized operator of a [`DiscreteSystem`]. The electrode mortar unknowns
/// form a diagonal block and are condensed out before factorization; the
/// remaining symmetric quasi-definite matrix is factorized as `L D Lᵀ` with a
/// fill-reducing ordering, falling back to sparse LU when the backward error
/// of the symmetric factorization is not acceptable.
pub struct Factorization {
    solver: Option<Solver>,
    options: SolverOptions,
    /// Reduced index of every unknown, `NONE` for condensed ones.
    reduced: Vec<usize>,
    kept: Vec<usize>,
    condensed: Vec<usize>,
    matrix: Csr,
    scale: Vec<f64>,
    mortar_start: usize,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Every connected block of unknowns must reach a Dirichlet-anchored 3D cell,
/// otherwise its potential is only defined up to a constant.
fn check_anchoring(system: &DiscreteSystem) -> Result<()> {
    let n = system.dofs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for (i, j, _) in system.matrix.iter() {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut anchored = vec![false; n];
    for &c in &system.anchored {
        let r = find(&mut parent, c);
        anchored[r] = true;
    }
    for dof in 0..n {
        let r = find(&mut parent, dof);
        if !anchored[r] {
            return Err(Error::Singular { dof, block: system.dofs.block_name(dof), reason: "is not connected to any Dirichlet boundary".into() });
        }
    }
    Ok(())
}

fn singular(system: &DiscreteSystem, index: usize, reason: &str) -> Error {
    let n = system.dofs.len();
    Error::Singular { dof: index, block: system.dofs.block_name(index.min(n.saturating_sub(1))), reason: reason.into() }
}

/// Factorizes the assembled operator once for any number of right-hand sides.
pub fn factorize(system: &DiscreteSystem) -> Result<Factorization> {
    factorize_with(system, SolverOptions::default())
}

/// Iterative refinement and acceptance settings of the direct solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    /// Refinement steps on the full scaled system after each direct solve.
    pub refinement_steps: usize,
    /// Largest accepted normwise backward error.
    pub backward_error: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { refinement_steps: 2, backward_error: 1e-8 }
    }
}

pub fn factorize_with(system: &DiscreteSystem, options: SolverOptions) -> Result<Factorization> {
    if !(options.backward_error > 0.0 && options.backward_error < 1.0) {
        return Err(Error::Factorization(format!("backward error tolerance {} must lie in (0, 1)", options.backward_error)));
    }
    check_anchoring(system)?;
    let a = &system.matrix;
    let n = system.dofs.len();
    let em = system.dofs.electrode_mortars_range();
    let condensed: Vec<usize> = em.clone().collect();
    let kept: Vec<usize> = (0..n).filter(|i| !em.contains(i)).collect();
    let mut reduced = vec![NONE; n];
    for (r, &i) in kept.iter().enumerate() {
        reduced[i] = r;
    }
    let nr = kept.len();
    let mut trip: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(a.nnz());
    for &i in &kept {
        for (j, v) in a.row(i) {
            if reduced[j] != NONE {
                trip.push(Triplet::new(reduced[i], reduced[j], v));
            }
        }
    }
    for &m in &condensed {
        let amm = a.get(m, m);
        if amm == 0.0 {
            return Err(singular(system, m, "has a zero electrode resistance"));
        }
        let nb: Vec<(usize, f64)> = a.row(m).filter(|&(j, _)| j != m).collect();
        if let Some(&(j, _)) = nb.iter().find(|(j, _)| reduced[*j] == NONE) {
            return Err(singular(system, j, "couples two electrode mortar cells"));
        }
        for &(j, vj) in &nb {
            for &(k, vk) in &nb {
                trip.push(Triplet::new(reduced[j], reduced[k], -vj * vk / amm));
            }
        }
    }
    let full = SparseColMat::<usize, f64>::try_new_from_triplets(nr, nr, &trip).map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let mut fact = Factorization {
        solver: None,
        options,
        reduced,
        kept,
        condensed,
        matrix: a.clone(),
        scale: system.scale.clone(),
        mortar_start: system.dofs.liner_mortars().start,
    };
    let lower: Vec<Triplet<usize, usize, f64>> = trip.iter().filter(|t| t.row >= t.col).copied().collect();
    match ldlt(nr, &lower) {
        Ok(solver) => {
            fact.solver = Some(solver);
            if fact.probe().is_ok() {
                return Ok(fact);
            }
            log::warn!("symmetric factorization is inaccurate, falling back to LU");
        }
        Err(e) => log::warn!("symmetric factorization failed ({e}), falling back to LU"),
    }
    let lu = full.sp_lu().map_err(|e| match e {
        LuError::SymbolicSingular { index } => singular(system, fact.kept[index.min(nr.saturating_sub(1))], "has no admissible pivot"),
        LuError::Generic(g) => Error::Factorization(format!("{g:?}")),
    })?;
    fact.solver = Some(Solver::Lu(lu));
    fact.probe()?;
    Ok(fact)
}

fn ldlt(n: usize, lower: &[Triplet<usize, usize, f64>]) -> Result<Solver, String> {
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, lower).map_err(|e| format!("{e:?}"))?;
    let symbolic =
        factorize_symbolic_cholesky(a.symbolic(), Side::Lower, SymmetricOrdering::Amd, Default::default()).map_err(|e| format!("{e:?}"))?;
    let mut values = vec![0.0; symbolic.len_val()];
    let mut mem = MemBuffer::new(symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default()));
    symbolic
        .factorize_numeric_ldlt(&mut values, a.as_ref(), Side::Lower, Default::default(), Par::Seq, MemStack::new(&mut mem), Default::default())
        .map_err(|e| format!("{e:?}"))?;
    Ok(Solver::Ldlt { symbolic, values })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.matrix.nrows
    }

    /// True when the symmetric factorization is in use.
    pub fn is_symmetric(&self) -> bool {
        matches!(self.solver, Some(Solver::Ldlt { .. }))
    }

    /// Backward-error check on a fixed pseudo-random right-hand side.
    fn probe(&self) -> Result<()> {
        let n = self.dim();
        let b: Vec<f64> = (0..n).map(|i| ((i as f64 * 0.618_033_988_75).fract() - 0.5) * self.scale[i]).collect();
        self.solve_scaled(&[b]).map(|_| ())
    }

    /// One pass through the condensed factorization.
    fn apply_inverse(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.dim();
        let nr = self.kept.len();
        let a = &self.matrix;
        let mut b = Mat::<f64>::from_fn(nr, rhs.len(), |r, j| rhs[j][self.kept[r]]);
        for &m in &self.condensed {
            let amm = a.get(m, m);
            for (j, bj) in rhs.iter().enumerate() {
                if bj[m] != 0.0 {
                    for (k, v) in a.row(m).filter(|&(k, _)| k != m) {
                        b[(self.reduced[k], j)] -= v * bj[m] / amm;
                    }
                }
            }
        }
        let x = match self.solver.as_ref().expect("factorization is complete") {
            Solver::Lu(lu) => lu.solve(&b),
            Solver::Ldlt { symbolic, values } => {
                let mut mem = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(rhs.len(), Par::Seq));
                LdltRef::new(symbolic, values).solve_in_place_with_conj(Conj::No, b.as_mut(), Par::Seq, MemStack::new(&mut mem));
                b
            }
        };
        rhs.iter()
            .enumerate()
            .map(|(j, bj)| {
                let mut xj = vec![0.0; n];
                for (r, &i) in self.kept.iter().enumerate() {
                    xj[i] = x[(r, j)];
                }
                for &m in &self.condensed {
                    let s: f64 = a.row(m).filter(|&(k, _)| k != m).map(|(k, v)| v * xj[k]).sum();
                    xj[m] = (bj[m] - s) / a.get(m, m);
                }
                xj
            })
            .collect()
    }

    /// Approximate solution of `A d = r` by GMRES, left-preconditioned with
    /// the factorization and with the products `A v` formed in compensated
    /// arithmetic. All right-hand sides advance in lockstep so that each
    /// iteration needs one batched pass through the factorization.
    fn correction(&self, r: &[Vec<f64>]) -> Vec<Vec<f64>> {
        const MAX_ITER: usize = 12;
        const TOL: f64 = 1e-13;
        let a = &self.matrix;
        let n = self.dim();
        let zero = vec![0.0; n];
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        struct Krylov {
            basis: Vec<Vec<f64>>,
            /// Columns of the Hessenberg matrix after the Givens rotations.
            r: Vec<Vec<f64>>,
            cs: Vec<(f64, f64)>,
            g: Vec<f64>,
            beta: f64,
            done: bool,
        }
        let mut ks: Vec<Krylov> = self
            .apply_inverse(r)
            .into_iter()
            .map(|z| {
                let beta = dot(&z, &z).sqrt();
                let done = !(beta > 0.0) || !beta.is_finite();
                let basis = if done { Vec::new() } else { vec![z.iter().map(|v| v / beta).collect()] };
                Krylov { basis, r: Vec::new(), cs: Vec::new(), g: vec![beta], beta, done }
            })
            .collect();
        for _ in 0..MAX_ITER {
            let active: Vec<usize> = (0..ks.len()).filter(|&j| !ks[j].done).collect();
            if active.is_empty() {
                break;
            }
            let av: Vec<Vec<f64>> = active
                .iter()
                .map(|&j| {
                    let v = ks[j].basis.last().expect("active Krylov space is non-empty");
                    a.residual_compensated(v, &zero, &zero).into_iter().map(|x| -x).collect()
                })
                .collect();
            for (&j, mut w) in active.iter().zip(self.apply_inverse(&av)) {
                let k = &mut ks[j];
                let mut h: Vec<f64> = Vec::with_capacity(k.basis.len() + 1);
                for v in &k.basis {
                    let c = dot(&w, v);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= c * vi;
                    }
                    h.push(c);
                }
                let hn = dot(&w, &w).sqrt();
                h.push(hn);
                for (i, &(c, s)) in k.cs.iter().enumerate() {
                    let (a, b) = (h[i], h[i + 1]);
                    h[i] = c * a + s * b;
                    h[i + 1] = -s * a + c * b;
                }
                let last = h.len() - 1;
                let rho = h[last - 1].hypot(h[last]);
                let (c, s) = if rho > 0.0 { (h[last - 1] / rho, h[last] / rho) } else { (1.0, 0.0) };
                h[last - 1] = rho;
                h[last] = 0.0;
                k.cs.push((c, s));
                let gk = k.g[last - 1];
                k.g[last - 1] = c * gk;
                k.g.push(-s * gk);
                h.pop();
                k.r.push(h);
                if k.g[last].abs() <= TOL * k.beta || !(hn > 0.0) || !hn.is_finite() {
                    k.done = true;
                } else {
                    k.basis.push(w.into_iter().map(|v| v / hn).collect());
                }
            }
        }
        ks.into_iter()
            .map(|k| {
                let m = k.r.len();
                let mut y = vec![0.0; m];
                for i in (0..m).rev() {
                    let s: f64 = (i + 1..m).map(|l| k.r[l][i] * y[l]).sum();
                    y[i] = if k.r[i][i] != 0.0 { (k.g[i] - s) / k.r[i][i] } else { 0.0 };
                }
                let mut d = vec![0.0; n];
                for (yi, v) in y.iter().zip(&k.basis) {
                    for (di, vi) in d.iter_mut().zip(v) {
                        *di += yi * vi;
                    }
                }
                d
            })
            .collect()
    }

    /// Solve with iterative refinement and a backward-error check. The
    /// iterate is carried as a pair of doubles: potentials behind a very
    /// resistive liner reach ~1e12 V while the electrode exchange currents
    /// depend on their differences at the 1e-6 V level.
    fn solve_scaled(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        // Bounds the memory held by the Krylov bases.
        const CHUNK: usize = 8;
        let mut out = Vec::with_capacity(rhs.len());
        for chunk in rhs.chunks(CHUNK) {
            out.extend(self.solve_chunk(chunk)?);
        }
        Ok(out)
    }

    fn solve_chunk(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let a = &self.matrix;
        let mut x = self.correction(rhs);
        let mut lo: Vec<Vec<f64>> = x.iter().map(|xj| vec![0.0; xj.len()]).collect();
        for _ in 0..self.options.refinement_steps {
            let r: Vec<Vec<f64>> = x.iter().zip(&lo).zip(rhs).map(|((xj, lj), bj)| a.residual_compensated(xj, lj, bj)).collect();
            let dx = self.correction(&r);
            for ((xj, lj), dj) in x.iter_mut().zip(lo.iter_mut()).zip(dx) {
                for ((h, l), d) in xj.iter_mut().zip(lj.iter_mut()).zip(dj) {
                    let t = *l + d;
                    let s = *h + t;
                    let z = s - *h;
                    *l = (*h - (s - z)) + (t - z);
                    *h = s;
                }
            }
        }
        for (xj, lj) in x.iter_mut().zip(&lo) {
            for (h, l) in xj.iter_mut().zip(lj) {
                *h += l;
            }
        }
        let anorm = a.max_abs();
        for (xj, bj) in x.iter().zip(rhs) {
            if xj.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            let r = a.matvec(xj);
            let res = r.iter().zip(bj).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let xmax = xj.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let bmax = bj.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = anorm * xmax + bmax;
            if scale > 0.0 && res > self.options.backward_error * scale {
                return Err(Error::Factorization(format!("backward error {:e} too large", res / scale)));
            }
        }
        Ok(x)
    }

    /// Solves the block system for several right-hand sides at once, checking
    /// the backward error of each solve.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        for b in rhs {
            if b.len() != n {
                return Err(Error::SizeMismatch { what: "right-hand side", got: b.len(), expected: n });
            }
        }
        let scaled: Vec<Vec<f64>> = rhs
            .iter()
            .map(|b| b.iter().zip(&self.scale).enumerate().map(|(i, (v, s))| if i >= self.mortar_start { -v * s } else { v * s }).collect())
            .collect();
        let x = self.solve_scaled(&scaled)?;
        Ok(x.into_iter().map(|x| x.iter().zip(&self.scale).map(|(v, s)| v * s).collect()).collect())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve_many(&[rhs.to_vec()])?.pop().unwrap())
    }
}

/// Per-cell gradients of a solution on the 3D grid and the liner grid.
pub fn cell_gradients(mesh: &MixedDimMesh, system: &DiscreteSystem, solution: &[f64]) -> Result<(Vec<Point>, Vec<Point>)> {
    let d = &system.dofs;
    if solution.len() != d.len() {
        return Err(Error::SizeMismatch { what: "solution", got: solution.len(), expected: d.len() });
    }
    let p = &solution[d.domain()];
    let j = &solution[d.liner_mortars()];
    let q = system.domain.face_fluxes(p, j, None)?;
    let cf = system.domain.cell_face_fluxes(&mesh.domain, &q, j)?;
    let g3 = system.domain.cell_gradients(&mesh.domain, &cf)?;
    let gl = match (&system.liner, &mesh.liner) {
        (Some(ld), Some(lg)) => {
            let pl = &solution[d.liner()];
            let q = ld.face_fluxes(pl, &[], None)?;
            let cf = ld.cell_face_fluxes(lg, &q, &[])?;
            ld.cell_gradients(lg, &cf)?
        }
        _ => Vec::new(),
    };
    Ok((g3, gl))
}

/// Per-cell vertex gradients (stride `dim + 1`) on the 3D grid and the liner grid.
pub fn vertex_gradients(mesh: &MixedDimMesh, system: &DiscreteSystem, solution: &[f64]) -> Result<(Vec<Point>, Vec<Point>)> {
    let d = &system.dofs;
    if solution.len() != d.len() {
        return Err(Error::SizeMismatch { what: "solution", got: solution.len(), expected: d.len() });
    }
    let p = &solution[d.domain()];
    let j = &solution[d.liner_mortars()];
    let g3 = system.domain.vertex_gradients(&mesh.domain, p, j, None)?;
    let gl = match (&system.liner, &mesh.liner) {
        (Some(ld), Some(lg)) => ld.vertex_gradients(lg, &solution[d.liner()], &[], None)?,
        _ => Vec::new(),
    };
    Ok((g3, gl))
}

/// Green compound of every electrode for injection current `current`.
#[derive(Debug, Clone)]
pub struct GreensTable {
    pub current: f64,
    pub dofs: DofMap,
    /// Full solution vector per electrode.
    pub solutions: Vec<Vec<f64>>,
    /// Centroid gradients per electrode and cell.
    pub domain_gradients: Vec<Vec<Point>>,
    pub liner_gradients: Vec<Vec<Point>>,
    /// Vertex gradients per electrode, stride `dim + 1` per cell.
    pub domain_vertex_gradients: Vec<Vec<Point>>,
    pub liner_vertex_gradients: Vec<Vec<Point>>,
    /// Global index of each electrode's topmost cell.
    pub tops: Vec<usize>,
}

/// Solves the Green compound of all electrodes with one multi-RHS solve.
pub fn solve_greens(mesh: &MixedDimMesh, system: &DiscreteSystem, fact: &Factorization, current: f64) -> Result<GreensTable> {
    let ne = system.dofs.num_electrodes();
    let rhs: Vec<Vec<f64>> = (0..ne).map(|e| system.electrode_rhs(e, current)).collect::<Result<_>>()?;
    let solutions = if ne > 0 { fact.solve_many(&rhs)? } else { Vec::new() };
    let mut domain_gradients = Vec::with_capacity(ne);
    let mut liner_gradients = Vec::with_capacity(ne);
    let mut domain_vertex_gradients = Vec::with_capacity(ne);
    let mut liner_vertex_gradients = Vec::with_capacity(ne);
    for s in &solutions {
        let (g3, gl) = cell_gradients(mesh, system, s)?;
        domain_gradients.push(g3);
        liner_gradients.push(gl);
        let (g3, gl) = vertex_gradients(mesh, system, s)?;
        domain_vertex_gradients.push(g3);
        liner_vertex_gradients.push(gl);
    }
    let tops = (0..ne).map(|e| system.electrode_top(e)).collect::<Result<_>>()?;
    Ok(GreensTable {
        current,
        dofs: system.dofs.clone(),
        solutions,
        domain_gradients,
        liner_gradients,
        domain_vertex_gradients,
        liner_vertex_gradients,
        tops,
    })
}

impl GreensTable {
    pub fn num_electrodes(&self) -> usize {
        self.solutions.len()
    }

    fn check(&self, e: usize) -> Result<()> {
        if e >= self.num_electrodes() {
            return Err(Error::IndexOutOfRange { what: "electrode", index: e, len: self.num_electrodes() });
        }
        Ok(())
    }

    /// Potential of electrode `at` (its topmost cell) under injection at `source`.
    pub fn potential_at(&self, source: usize, at: usize) -> Result<f64> {
        self.check(source)?;
        self.check(at)?;
        Ok(self.solutions[source][self.tops[at]])
    }

    pub fn domain_potential(&self, e: usize) -> &[f64] {
        &self.solutions[e][self.dofs.domain()]
    }

    pub fn liner_potential(&self, e: usize) -> &[f64] {
        &self.solutions[e][self.dofs.liner()]
    }

    /// Liner exchange fields, PLUS side then MINUS side.
    pub fn liner_exchange(&self, e: usize) -> &[f64] {
        &self.solutions[e][self.dofs.liner_mortars()]
    }

    pub fn electrode_exchange(&self, e: usize, of: usize) -> &[f64] {
        &self.solutions[e][self.dofs.electrode_mortar(of)]
    }

    /// Net current (A) flowing from electrode `of` into the ground in the
    /// solution for source `e`.
    pub fn electrode_outflow(&self, mesh: &MixedDimMesh, e: usize, of: usize) -> Result<f64> {
        self.check(e)?;
        self.check(of)?;
        let Some(iface) = mesh.electrode_mortar(of) else { return Ok(0.0) };
        let j = self.electrode_exchange(e, of);
        Ok(-iface.cells.iter().zip(j).map(|(mc, v)| mc.measure * v).sum::<f64>())
    }

    /// Voltage between the potential electrodes for the given configuration,
    /// scaled to injection current `current`.
    pub fn reading(&self, q: &Quadrupole, current: f64) -> Result<f64> {
        q.validate()?;
        let mut v = 0.0;
        for (c, p, sign) in q.terms() {
            v += sign * self.potential_at(c, p)?;
        }
        Ok(v * current / self.current)
    }
}
