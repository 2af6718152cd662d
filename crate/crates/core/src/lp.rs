//! Small dense linear programs: maximize `objective⊤c` subject to
//! `a⊤c ≤ b` rows, `g⊤c ≥ h` rows and `c ≥ var_lower`.
//!
//! [`lp_maximize`] is a two-phase tableau simplex with Bland's rule, so the
//! returned vertex is a deterministic function of the input. It is meant
//! for a handful of variables and at most a few dozen rows.
//! [`RowGenerationSolver`] handles the p-value programs, which have few
//! variables but thousands of rows: it solves over a small working set and
//! adds the most violated pool row until the optimum is feasible for every
//! eligible row. [`lp_brute_oracle`] enumerates vertices and exists to
//! check the other two.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{dot, solve};

/// Primal feasibility tolerance, in the units of the constraint data.
pub const FEAS_TOL: f64 = 1e-9;
/// Reduced-cost tolerance, relative to the largest objective coefficient.
pub const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;

/// One linear inequality row.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    /// `coeffs⊤c ≤ bound`
    pub upper_rows: Vec<Constraint>,
    /// `coeffs⊤c ≥ bound`
    pub lower_rows: Vec<Constraint>,
    pub var_lower: Vec<f64>,
}

impl LinearProgram {
    /// A program with no rows and `c ≥ 0`.
    pub fn new(objective: Vec<f64>) -> Self {
        let dim = objective.len();
        Self { objective, upper_rows: Vec::new(), lower_rows: Vec::new(), var_lower: alloc::vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    pub fn with_upper(mut self, coeffs: Vec<f64>, bound: f64) -> Self {
        self.upper_rows.push(Constraint { coeffs, bound });
        self
    }

    pub fn with_lower(mut self, coeffs: Vec<f64>, bound: f64) -> Self {
        self.lower_rows.push(Constraint { coeffs, bound });
        self
    }

    pub fn row_count(&self) -> usize {
        self.upper_rows.len() + self.lower_rows.len()
    }

    fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim == 0 {
            return Err(Error::Dimension { expected: 1, got: 0 });
        }
        if self.var_lower.len() != dim {
            return Err(Error::Dimension { expected: dim, got: self.var_lower.len() });
        }
        for row in self.upper_rows.iter().chain(&self.lower_rows) {
            if row.coeffs.len() != dim {
                return Err(Error::Dimension { expected: dim, got: row.coeffs.len() });
            }
        }
        Ok(())
    }

    /// Largest constraint violation at `c` (0 when feasible).
    pub fn max_violation(&self, c: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.upper_rows {
            worst = worst.max(dot(&row.coeffs, c) - row.bound);
        }
        for row in &self.lower_rows {
            worst = worst.max(row.bound - dot(&row.coeffs, c));
        }
        for (v, l) in c.iter().zip(&self.var_lower) {
            worst = worst.max(l - v);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a solve. `value` is `−∞` for infeasible programs and `+∞`
/// for unbounded ones; `c_star` is empty unless the status is optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub c_star: Vec<f64>,
    pub value: f64,
}

impl LpSolution {
    fn infeasible() -> Self {
        Self { status: LpStatus::Infeasible, c_star: Vec::new(), value: f64::NEG_INFINITY }
    }

    fn unbounded() -> Self {
        Self { status: LpStatus::Unbounded, c_star: Vec::new(), value: f64::INFINITY }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Dense simplex tableau. Columns are the shifted structural variables,
/// one slack per row, then the phase-one artificials; the last column is
/// the right-hand side.
struct Tableau {
    rows: usize,
    cols: usize,
    width: usize,
    first_artificial: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
    budget: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.cols]
    }

    fn pivot(&mut self, pr: usize, pc: usize) -> Result<()> {
        self.pivots += 1;
        if self.pivots > self.budget {
            return Err(Error::PivotBudget(self.budget));
        }
        let w = self.width;
        let p = self.data[pr * w + pc];
        for k in 0..w {
            self.data[pr * w + k] /= p;
        }
        self.data[pr * w + pc] = 1.0;
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f == 0.0 {
                continue;
            }
            for k in 0..w {
                self.data[r * w + k] -= f * self.data[pr * w + k];
            }
            self.data[r * w + pc] = 0.0;
        }
        self.basis[pr] = pc;
        Ok(())
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for (j, dj) in d.iter_mut().enumerate() {
                *dj -= cb * self.at(r, j);
            }
        }
        d
    }

    /// Maximizes `cost⊤x` from the current basic feasible solution.
    /// Columns at or beyond `col_limit` never enter.
    fn optimize(&mut self, cost: &[f64], col_limit: usize) -> Result<Step> {
        loop {
            let d = self.reduced_costs(cost);
            // Bland: lowest-index improving column
            let entering = (0..col_limit).find(|&j| d[j] > OPT_TOL && !self.basis.contains(&j));
            let Some(e) = entering else {
                return Ok(Step::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, e);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * lratio.abs().max(1.0);
                        if ratio < lratio && !tie || tie && self.basis[r] < self.basis[lr] {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((lr, _)) = leave else {
                return Ok(Step::Unbounded);
            };
            self.pivot(lr, e)?;
        }
    }
}

/// Solves `lp` with the two-phase tableau simplex and Bland's rule.
///
/// The pivot budget is `50·(L + rows)`; exceeding it is reported as
/// [`Error::PivotBudget`].
pub fn lp_maximize(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let dim = lp.dim();

    // Shift c = var_lower + y and write every row as a⊤y ≤ r, scaled so that
    // max |a_k| = 1.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(lp.row_count());
    let shifted = |row: &Constraint, sign: f64| -> (Vec<f64>, f64) {
        let a: Vec<f64> = row.coeffs.iter().map(|v| sign * v).collect();
        let r = sign * row.bound - dot(&a, &lp.var_lower);
        (a, r)
    };
    for (a, r) in lp.upper_rows.iter().map(|row| shifted(row, 1.0)).chain(lp.lower_rows.iter().map(|row| shifted(row, -1.0))) {
        let s = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if s == 0.0 {
            if r < -FEAS_TOL {
                return Ok(LpSolution::infeasible());
            }
            continue;
        }
        rows.push((a.iter().map(|v| v / s).collect(), r / s));
    }

    let m = rows.len();
    let n_art = rows.iter().filter(|(_, r)| *r < 0.0).count();
    let first_artificial = dim + m;
    let cols = first_artificial + n_art;
    let width = cols + 1;
    let mut t = Tableau {
        rows: m,
        cols,
        width,
        first_artificial,
        data: alloc::vec![0.0; m * width],
        basis: alloc::vec![0; m],
        pivots: 0,
        budget: 50 * (dim + lp.row_count()).max(1),
    };
    let mut next_art = first_artificial;
    for (i, (a, r)) in rows.iter().enumerate() {
        let base = i * width;
        let sign = if *r < 0.0 { -1.0 } else { 1.0 };
        for (d, v) in t.data[base..base + dim].iter_mut().zip(a.iter()) {
            *d = sign * v;
        }
        t.data[base + dim + i] = sign;
        t.data[base + cols] = sign * r;
        if *r < 0.0 {
            t.data[base + next_art] = 1.0;
            t.basis[i] = next_art;
            next_art += 1;
        } else {
            t.basis[i] = dim + i;
        }
    }

    if n_art > 0 {
        let mut cost = alloc::vec![0.0; cols];
        for c in cost.iter_mut().skip(first_artificial) {
            *c = -1.0;
        }
        t.optimize(&cost, cols)?;
        let infeas: f64 = (0..m).filter(|&r| t.basis[r] >= first_artificial).map(|r| t.rhs(r)).sum();
        if infeas > FEAS_TOL {
            return Ok(LpSolution::infeasible());
        }
        // drive zero-level artificials out of the basis
        for r in 0..m {
            if t.basis[r] < first_artificial {
                continue;
            }
            if let Some(j) = (0..first_artificial).find(|&j| t.at(r, j).abs() > 1e-9 && !t.basis.contains(&j)) {
                t.pivot(r, j)?;
            }
        }
    }

    let scale = lp.objective.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut cost = alloc::vec![0.0; cols];
    if scale > 0.0 {
        for (c, v) in cost.iter_mut().zip(&lp.objective) {
            *c = v / scale;
        }
        if let Step::Unbounded = t.optimize(&cost, t.first_artificial)? {
            return Ok(LpSolution::unbounded());
        }
    }

    let mut c_star = lp.var_lower.clone();
    for r in 0..m {
        let b = t.basis[r];
        if b < dim {
            c_star[b] += t.rhs(r).max(0.0);
        }
    }
    let value = dot(&lp.objective, &c_star);
    Ok(LpSolution { status: LpStatus::Optimal, c_star, value })
}

/// Maximizes by enumerating every vertex: each choice of `L` active
/// hyperplanes among rows and variable bounds is solved and kept when
/// feasible. Only for `L ≤ 3`.
///
/// Unboundedness is detected by capping every variable at `var_lower + 1e7`
/// and checking whether the best vertex touches a cap.
pub fn lp_brute_oracle(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let dim = lp.dim();
    if dim > 3 {
        return Err(Error::Unsupported(alloc::format!("vertex enumeration is limited to 3 variables, got {dim}")));
    }
    const CAP: f64 = 1e7;
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    planes.extend(lp.upper_rows.iter().map(|r| (r.coeffs.clone(), r.bound)));
    planes.extend(lp.lower_rows.iter().map(|r| (r.coeffs.clone(), r.bound)));
    for k in 0..dim {
        let mut e = alloc::vec![0.0; dim];
        e[k] = 1.0;
        planes.push((e.clone(), lp.var_lower[k]));
        planes.push((e, lp.var_lower[k] + CAP));
    }
    let feasible = |c: &[f64]| -> bool {
        lp.max_violation(c) <= FEAS_TOL && c.iter().zip(&lp.var_lower).all(|(v, l)| *v <= l + CAP + FEAS_TOL)
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |idx: &[usize]| {
        let mut a = Vec::with_capacity(dim * dim);
        let mut b = Vec::with_capacity(dim);
        for &i in idx {
            a.extend_from_slice(&planes[i].0);
            b.push(planes[i].1);
        }
        if let Some(c) = solve(a, b, 1e-12) {
            if feasible(&c) {
                let v = dot(&lp.objective, &c);
                if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best = Some((v, c));
                }
            }
        }
    };
    let h = planes.len();
    match dim {
        1 => (0..h).for_each(|i| consider(&[i])),
        2 => {
            for i in 0..h {
                for j in i + 1..h {
                    consider(&[i, j]);
                }
            }
        }
        _ => {
            for i in 0..h {
                for j in i + 1..h {
                    for k in j + 1..h {
                        consider(&[i, j, k]);
                    }
                }
            }
        }
    }
    Ok(match best {
        None => LpSolution::infeasible(),
        Some((_, c)) if c.iter().zip(&lp.var_lower).any(|(v, l)| *v >= l + CAP * 0.5) => LpSolution::unbounded(),
        Some((value, c_star)) => LpSolution { status: LpStatus::Optimal, c_star, value },
    })
}

/// A dense pool of `a⊤c ≤ b` rows sharing one dimension.
#[derive(Debug, Clone, Default)]
pub struct RowPool {
    dim: usize,
    coeffs: Vec<f64>,
    bounds: Vec<f64>,
}

impl RowPool {
    pub fn new(dim: usize) -> Self {
        Self { dim, coeffs: Vec::new(), bounds: Vec::new() }
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        Self { dim, coeffs: Vec::with_capacity(dim * rows), bounds: Vec::with_capacity(rows) }
    }

    pub fn push(&mut self, coeffs: &[f64], bound: f64) {
        assert_eq!(coeffs.len(), self.dim, "row length must match pool dimension");
        self.coeffs.extend_from_slice(coeffs);
        self.bounds.push(bound);
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> (&[f64], f64) {
        (&self.coeffs[i * self.dim..(i + 1) * self.dim], self.bounds[i])
    }

    fn violation(&self, i: usize, c: &[f64]) -> f64 {
        let (a, b) = self.row(i);
        dot(a, c) - b
    }
}

/// Lazily constrained solver for programs whose rows live in a [`RowPool`].
///
/// The working set persists between calls, trimmed to the rows active at
/// the last optimum, which makes a sweep over closely related objectives
/// cheap. Each call is exact: the returned optimum satisfies every
/// eligible pool row within `FEAS_TOL`, and since it is optimal for a
/// relaxation it is optimal for the full program.
#[derive(Debug, Clone, Default)]
pub struct RowGenerationSolver {
    working: Vec<usize>,
}

impl RowGenerationSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn working_set(&self) -> &[usize] {
        &self.working
    }

    pub fn reset(&mut self) {
        self.working.clear();
    }

    /// Maximizes over `base`'s own rows plus the pool rows whose indices
    /// fall in `eligible`.
    pub fn solve(&mut self, base: &LinearProgram, pool: &RowPool, eligible: &[Range<usize>]) -> Result<LpSolution> {
        if pool.dim() != base.dim() {
            return Err(Error::Dimension { expected: base.dim(), got: pool.dim() });
        }
        let in_scope = |i: usize| eligible.iter().any(|r| r.contains(&i));
        self.working.retain(|&i| in_scope(i));
        loop {
            let mut lp = base.clone();
            for &i in &self.working {
                let (a, b) = pool.row(i);
                lp.upper_rows.push(Constraint { coeffs: a.to_vec(), bound: b });
            }
            let sol = lp_maximize(&lp)?;
            if !sol.is_optimal() {
                return Ok(sol);
            }
            let mut worst: Option<(usize, f64)> = None;
            for range in eligible {
                for i in range.clone() {
                    let v = pool.violation(i, &sol.c_star);
                    if v > FEAS_TOL && worst.is_none_or(|(_, w)| v > w) {
                        worst = Some((i, v));
                    }
                }
            }
            match worst {
                Some((i, _)) if !self.working.contains(&i) => self.working.push(i),
                _ => {
                    self.working.retain(|&i| pool.violation(i, &sol.c_star) > -FEAS_TOL);
                    return Ok(sol);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn single_bound() {
        let lp = LinearProgram::new(vec![1.0]).with_upper(vec![1.0], 0.3);
        let s = lp_maximize(&lp).unwrap();
        assert!(s.is_optimal());
        assert!((s.value - 0.3).abs() < 1e-12);
    }

    #[test]
    fn two_variable_vertex() {
        let lp = LinearProgram::new(vec![1.0, 1.0]).with_upper(vec![1.0, 1.0], 1.0).with_upper(vec![1.0, 0.0], 0.2);
        let s = lp_maximize(&lp).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        // Bland picks c1 first, so the optimum is the vertex (0.2, 0.8)
        assert!((s.c_star[0] - 0.2).abs() < 1e-12 && (s.c_star[1] - 0.8).abs() < 1e-12, "{:?}", s.c_star);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let lp = LinearProgram::new(vec![1.0]).with_lower(vec![1.0], 0.9).with_upper(vec![1.0], 0.5);
        let s = lp_maximize(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert_eq!(lp_brute_oracle(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let lp = LinearProgram::new(vec![1.0, 1.0]).with_upper(vec![1.0, -1.0], 1.0);
        assert_eq!(lp_maximize(&lp).unwrap().status, LpStatus::Unbounded);
        assert_eq!(lp_brute_oracle(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn pinched_feasible_point() {
        let lp = LinearProgram::new(vec![1.0, 2.0, -1.0])
            .with_upper(vec![1.0, 1.0, 1.0], 0.6)
            .with_lower(vec![1.0, 1.0, 1.0], 0.6)
            .with_upper(vec![1.0, 0.0, 0.0], 0.1)
            .with_lower(vec![1.0, 0.0, 0.0], 0.1)
            .with_upper(vec![0.0, 1.0, 0.0], 0.2)
            .with_lower(vec![0.0, 1.0, 0.0], 0.2);
        let s = lp_maximize(&lp).unwrap();
        let o = lp_brute_oracle(&lp).unwrap();
        for sol in [&s, &o] {
            assert!((sol.c_star[0] - 0.1).abs() < 1e-9);
            assert!((sol.c_star[1] - 0.2).abs() < 1e-9);
            assert!((sol.c_star[2] - 0.3).abs() < 1e-9);
        }
    }

    #[test]
    fn nonzero_variable_lower_bounds() {
        let mut lp = LinearProgram::new(vec![-1.0, -1.0]).with_upper(vec![1.0, 1.0], 5.0);
        lp.var_lower = vec![1.0, -2.0];
        let s = lp_maximize(&lp).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!((s.c_star[0] - 1.0).abs() < 1e-12 && (s.c_star[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_rows_do_not_cycle() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0, 1.0]);
        for _ in 0..30 {
            lp = lp.with_upper(vec![1.0, 1.0, 1.0], 1.0).with_upper(vec![1.0, 0.0, 0.0], 0.0);
        }
        let s = lp_maximize(&lp).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_objective_returns_feasible_point() {
        let lp = LinearProgram::new(vec![0.0, 0.0]).with_lower(vec![1.0, 1.0], 0.5).with_upper(vec![1.0, 1.0], 1.0);
        let s = lp_maximize(&lp).unwrap();
        assert!(s.is_optimal());
        assert!(lp.max_violation(&s.c_star) <= FEAS_TOL);
    }

    #[test]
    fn dimension_errors() {
        let mut lp = LinearProgram::new(vec![1.0, 1.0]).with_upper(vec![1.0], 1.0);
        assert!(lp_maximize(&lp).is_err());
        lp.upper_rows.clear();
        lp.var_lower = vec![0.0];
        assert!(lp_maximize(&lp).is_err());
        let big = LinearProgram::new(vec![1.0; 4]);
        assert!(matches!(lp_brute_oracle(&big), Err(Error::Unsupported(_))));
    }

    #[test]
    fn row_generation_matches_full_solve() {
        let base = LinearProgram::new(vec![0.3, 0.5, 0.9]).with_upper(vec![1.0, 1.0, 1.0], 1.0);
        let mut pool = RowPool::new(3);
        for k in 0..200 {
            let t = k as f64 / 200.0;
            pool.push(&[t, t * t, libm::sqrt(t)], 0.2 + 0.5 * t);
        }
        let mut full = base.clone();
        for i in 0..pool.len() {
            let (a, b) = pool.row(i);
            full = full.with_upper(a.to_vec(), b);
        }
        let want = lp_maximize(&full).unwrap();
        let mut solver = RowGenerationSolver::new();
        let all = 0..pool.len();
        let got = solver.solve(&base, &pool, &[all]).unwrap();
        assert!((got.value - want.value).abs() < 1e-10);
        assert!(full.max_violation(&got.c_star) <= FEAS_TOL);
        assert!(solver.working_set().len() <= 3);
    }
}
