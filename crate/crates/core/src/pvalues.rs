//! The four p-value constructions for composite nulls.
//!
//! * `max`: `max_k φ_k(x)`, valid whatever the prior.
//! * `mix`: `ν⊤φ(x)`, needs the true prior.
//! * `seq` / `glb`: the largest `c⊤φ(x)` over sub-probability weights `c`
//!   that keep `c⊤φ` below the empirical distribution (up to the `ε_n`
//!   margin and the Gamma bound for the smallest ranks). `seq` at the
//!   `i`-th smallest observation only uses constraints at or above it;
//!   `glb` uses all of them for every observation.
//!
//! All routines take the sorted s-domain sample and return p-values in
//! the same order.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::empirical::{build_grid, epsilon_n, EcdfView};
use crate::error::{domain, Error, Result};
use crate::lp::{LinearProgram, RowGenerationSolver, RowPool};
use crate::model::{NullFamily, Prior};
use crate::special::gamma_upper_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Glb,
    Max,
    Mix,
    Seq,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Seq, Method::Glb, Method::Max, Method::Mix];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Glb => "glb",
            Method::Max => "max",
            Method::Mix => "mix",
            Method::Seq => "seq",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "glb" => Some(Method::Glb),
            "max" => Some(Method::Max),
            "mix" => Some(Method::Mix),
            "seq" => Some(Method::Seq),
            _ => None,
        }
    }

    /// Whether the method solves linear programs and so carries
    /// optimizing coefficients.
    pub fn has_coefficients(self) -> bool {
        matches!(self, Method::Seq | Method::Glb)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sign of the `ε_n` margin on the grid-pair increment constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairMargin {
    /// `c⊤[φ(t₂) − φ(t₁)] ≤ 𝔽_n(t₂) − 𝔽_n(t₁) + ε_n`
    #[default]
    Relaxed,
    /// `c⊤[φ(t₂) − φ(t₁)] ≤ 𝔽_n(t₂) − 𝔽_n(t₁) − ε_n`
    Tight,
}

impl PairMargin {
    fn sign(self) -> f64 {
        match self {
            PairMargin::Relaxed => 1.0,
            PairMargin::Tight => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PairMargin::Relaxed => "relaxed",
            PairMargin::Tight => "tight",
        }
    }
}

/// Knobs of the constrained programs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintVariant {
    /// Lower bound on `Σc_k`; 0 for the plain programs, 0.9 for the primed.
    pub sum_lower: f64,
    pub pair_margin: PairMargin,
    /// `β` in the Gamma bound `Γ̄*(1/n; j, 1/β)/n`.
    pub gamma_beta: f64,
    /// Ranks `j ≤ n^small_rank_exponent` use the Gamma bound.
    pub small_rank_exponent: f64,
}

impl Default for ConstraintVariant {
    fn default() -> Self {
        Self { sum_lower: 0.0, pair_margin: PairMargin::Relaxed, gamma_beta: 0.95, small_rank_exponent: 0.2 }
    }
}

impl ConstraintVariant {
    /// The primed programs, `0.9 ≤ Σc_k ≤ 1`.
    pub fn primed() -> Self {
        Self { sum_lower: 0.9, ..Self::default() }
    }

    pub fn with_margin(self, pair_margin: PairMargin) -> Self {
        Self { pair_margin, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sum_lower) {
            return Err(domain(alloc::format!("sum_lower must lie in [0, 1], got {}", self.sum_lower)));
        }
        if !(self.gamma_beta > 0.0 && self.gamma_beta < 1.0) {
            return Err(domain(alloc::format!("gamma_beta must lie in (0, 1), got {}", self.gamma_beta)));
        }
        if !(self.small_rank_exponent.is_finite() && self.small_rank_exponent < 1.0) {
            return Err(domain(alloc::format!(
                "small_rank_exponent must be finite and below 1, got {}",
                self.small_rank_exponent
            )));
        }
        Ok(())
    }
}

/// P-values aligned to the sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueSet {
    pub method: Method,
    pub p: Vec<f64>,
    /// Optimizing weights per observation (`seq` and `glb` only).
    pub coeffs: Option<Vec<Vec<f64>>>,
    /// `true` where the requested program was infeasible and a fallback
    /// value was used: the plain program's value for the primed variant,
    /// the `max` p-value when the plain program itself is infeasible.
    pub infeasible: Vec<bool>,
}

impl PValueSet {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn infeasible_count(&self) -> usize {
        self.infeasible.iter().filter(|&&f| f).count()
    }
}

/// `φ(x_i)` for every observation, computed once and shared by all the
/// p-value constructions.
#[derive(Debug, Clone)]
pub struct PhiTable<'a> {
    x: &'a [f64],
    family: &'a NullFamily,
    dim: usize,
    values: Vec<f64>,
}

impl<'a> PhiTable<'a> {
    /// `x` must be sorted.
    pub fn new(x: &'a [f64], family: &'a NullFamily) -> Result<Self> {
        if x.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(domain("observations must be sorted"));
        }
        let dim = family.len();
        let mut values = alloc::vec![0.0; x.len() * dim];
        for (i, &xi) in x.iter().enumerate() {
            family.cdf_into(xi, &mut values[i * dim..(i + 1) * dim])?;
        }
        Ok(Self { x, family, dim, values })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn max(&self) -> PValueSet {
        let p = (0..self.len()).map(|i| self.row(i).iter().copied().fold(0.0, f64::max)).collect();
        PValueSet { method: Method::Max, p, coeffs: None, infeasible: alloc::vec![false; self.len()] }
    }

    pub fn mix(&self, prior: &Prior) -> Result<PValueSet> {
        if prior.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: prior.len() });
        }
        let w = prior.weights();
        let p = (0..self.len())
            .map(|i| self.row(i).iter().zip(w).map(|(a, b)| a * b).sum::<f64>().min(1.0))
            .collect();
        Ok(PValueSet { method: Method::Mix, p, coeffs: None, infeasible: alloc::vec![false; self.len()] })
    }

    /// LP p-values under the standard constraints built from the sample;
    /// `mode` must be [`Method::Seq`] or [`Method::Glb`].
    pub fn constrained(&self, variant: &ConstraintVariant, mode: Method) -> Result<PValueSet> {
        variant.validate()?;
        let set = ConstraintSet::from_sample(self, variant)?;
        self.solve_constrained(&set, variant.sum_lower, mode)
    }

    /// Maximizes `c⊤φ(x_i)` for every `i` over the rows of `set` that are
    /// eligible for `mode`, with `c ≥ 0` and `sum_lower ≤ Σc ≤ 1`.
    pub fn solve_constrained(&self, set: &ConstraintSet, sum_lower: f64, mode: Method) -> Result<PValueSet> {
        if !mode.has_coefficients() {
            return Err(domain(alloc::format!("constrained p-values need mode seq or glb, got {mode}")));
        }
        if set.observations() != self.len() || set.dim() != self.dim {
            return Err(Error::Dimension { expected: self.len(), got: set.observations() });
        }
        let n = self.len();
        let dim = self.dim;
        let base = simplex_program(dim, sum_lower);
        let base_plain = simplex_program(dim, 0.0);
        let primed = sum_lower > 0.0;

        let mut solver = RowGenerationSolver::new();
        let mut fallback_solver = RowGenerationSolver::new();
        let mut p = alloc::vec![0.0; n];
        let mut coeffs = alloc::vec![Vec::new(); n];
        let mut infeasible = alloc::vec![false; n];

        for i in (0..n).rev() {
            let eligible = set.eligible(i, self.x[i], mode);
            let objective = self.row(i);
            let mut lp = base.clone();
            lp.objective.copy_from_slice(objective);
            let mut sol = solver.solve(&lp, &set.pool, &eligible)?;
            if !sol.is_optimal() {
                infeasible[i] = true;
                if primed {
                    let mut lp = base_plain.clone();
                    lp.objective.copy_from_slice(objective);
                    sol = fallback_solver.solve(&lp, &set.pool, &eligible)?;
                }
            }
            if sol.is_optimal() {
                p[i] = sol.value.clamp(0.0, 1.0);
                coeffs[i] = sol.c_star;
            } else {
                // even the plain program is empty: fall back to the max
                // p-value, attained at the vertex of the best component
                let (k, v) = objective
                    .iter()
                    .copied()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
                p[i] = v;
                let mut e = alloc::vec![0.0; dim];
                e[k] = 1.0;
                coeffs[i] = e;
            }
        }
        Ok(PValueSet { method: mode, p, coeffs: Some(coeffs), infeasible })
    }
}

/// The rows shared by all the LP p-value programs of one sample.
///
/// Pool layout: rows `0..n` are `c⊤φ(x_j) ≤ u_j`; after them come the
/// grid-pair rows, pushed in nonincreasing order of their left end `t₁`
/// so that the pairs with `t₁ ≥ x_i` form a prefix.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    n: usize,
    pool: RowPool,
    pair_t1: Vec<f64>,
}

impl ConstraintSet {
    /// Observation rows `c⊤φ(x_j) ≤ upper[j]` and no pairs yet.
    pub fn new(phi: &PhiTable<'_>, upper: &[f64]) -> Result<Self> {
        if upper.len() != phi.len() {
            return Err(Error::Dimension { expected: phi.len(), got: upper.len() });
        }
        let mut pool = RowPool::with_capacity(phi.dim, phi.len());
        for (j, &u) in upper.iter().enumerate() {
            pool.push(phi.row(j), u);
        }
        Ok(Self { n: phi.len(), pool, pair_t1: Vec::new() })
    }

    /// Appends `coeffs⊤c ≤ bound`, active in `seq` mode for observations
    /// `x_i ≤ t1`. Left ends must arrive in nonincreasing order.
    pub fn push_pair(&mut self, t1: f64, coeffs: &[f64], bound: f64) -> Result<()> {
        if let Some(&last) = self.pair_t1.last() {
            if t1 > last {
                return Err(domain("pair rows must be pushed in nonincreasing order of t1"));
            }
        }
        if coeffs.len() != self.pool.dim() {
            return Err(Error::Dimension { expected: self.pool.dim(), got: coeffs.len() });
        }
        self.pool.push(coeffs, bound);
        self.pair_t1.push(t1);
        Ok(())
    }

    /// Rows `c⊤φ(x_j) ≤ u_j` with [`u_bounds`] and, for every pair of grid
    /// points `t₁ < t₂`, `c⊤[φ(t₂) − φ(t₁)] ≤ 𝔽_n(t₂) − 𝔽_n(t₁) ± ε_n`.
    pub fn from_sample(phi: &PhiTable<'_>, variant: &ConstraintVariant) -> Result<Self> {
        let n = phi.len();
        let dim = phi.dim;
        let view = EcdfView::new(phi.x);
        let eps = epsilon_n(n)?;
        let u = u_bounds(phi.x, variant)?;
        let grid = build_grid(&view)?;
        let g = grid.points();
        let m = g.len();

        let mut phi_grid = alloc::vec![0.0; m * dim];
        for (a, &t) in g.iter().enumerate() {
            phi.family.cdf_into(t, &mut phi_grid[a * dim..(a + 1) * dim])?;
        }
        let ecdf_grid: Vec<f64> = g.iter().map(|&t| view.ecdf(t)).collect();

        let mut set = Self::new(phi, &u)?;
        let margin = variant.pair_margin.sign() * eps;
        let mut diff = alloc::vec![0.0; dim];
        for a in (0..m).rev() {
            for b in a + 1..m {
                for k in 0..dim {
                    diff[k] = phi_grid[b * dim + k] - phi_grid[a * dim + k];
                }
                set.push_pair(g[a], &diff, ecdf_grid[b] - ecdf_grid[a] + margin)?;
            }
        }
        Ok(set)
    }

    pub fn observations(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.pool.dim()
    }

    pub fn pair_count(&self) -> usize {
        self.pair_t1.len()
    }

    pub fn pool(&self) -> &RowPool {
        &self.pool
    }

    /// Pool index ranges in force for observation `i` at value `x_i`.
    pub fn eligible(&self, i: usize, x_i: f64, mode: Method) -> [Range<usize>; 2] {
        let n = self.n;
        match mode {
            Method::Seq => [i..n, n..n + self.pair_t1.partition_point(|&t| t >= x_i)],
            _ => [0..n, n..n + self.pair_t1.len()],
        }
    }

    /// The complete program for observation `i`, every eligible row spelled
    /// out. Used to cross-check the row-generation path.
    pub fn program_for(&self, phi: &PhiTable<'_>, i: usize, sum_lower: f64, mode: Method) -> LinearProgram {
        let mut lp = simplex_program(self.dim(), sum_lower);
        lp.objective.copy_from_slice(phi.row(i));
        for range in self.eligible(i, phi.x[i], mode) {
            for r in range {
                let (a, b) = self.pool.row(r);
                lp = lp.with_upper(a.to_vec(), b);
            }
        }
        lp
    }
}

/// `c ≥ 0`, `sum_lower ≤ Σc ≤ 1`.
fn simplex_program(dim: usize, sum_lower: f64) -> LinearProgram {
    let ones = alloc::vec![1.0; dim];
    let lp = LinearProgram::new(alloc::vec![0.0; dim]).with_upper(ones.clone(), 1.0);
    if sum_lower > 0.0 {
        lp.with_lower(ones, sum_lower)
    } else {
        lp
    }
}

/// Upper bounds `u_j` for `c⊤φ(x_(j))`: `Γ̄*(1/n; j, 1/β)/n` for ranks
/// `j ≤ n^small_rank_exponent`, `j/n + ε_n` above. `j` is the rank count
/// `R_n(x_(j))`, so tied observations share a bound.
pub fn u_bounds(x: &[f64], variant: &ConstraintVariant) -> Result<Vec<f64>> {
    variant.validate()?;
    let n = x.len();
    let eps = epsilon_n(n)?;
    let nf = n as f64;
    let cutoff = libm::pow(nf, variant.small_rank_exponent);
    let view = EcdfView::new(x);
    let scale = 1.0 / variant.gamma_beta;
    x.iter()
        .map(|&xj| {
            let rank = view.rank_count(xj);
            if rank as f64 <= cutoff {
                Ok(gamma_upper_quantile(1.0 / nf, rank as f64, scale)? / nf)
            } else {
                Ok(rank as f64 / nf + eps)
            }
        })
        .collect()
}

pub fn p_max_all(x: &[f64], family: &NullFamily) -> Result<PValueSet> {
    Ok(PhiTable::new(x, family)?.max())
}

pub fn p_mix_all(x: &[f64], family: &NullFamily, prior: &Prior) -> Result<PValueSet> {
    PhiTable::new(x, family)?.mix(prior)
}

pub fn p_constrained(x: &[f64], family: &NullFamily, variant: &ConstraintVariant, mode: Method) -> Result<PValueSet> {
    PhiTable::new(x, family)?.constrained(variant, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{table1_preset, Distribution, Region};
    use alloc::vec;

    fn preset1() -> (NullFamily, Prior) {
        let m = table1_preset(1).unwrap();
        (m.family().clone(), m.prior().clone())
    }

    #[test]
    fn max_and_mix_at_zero() {
        let (fam, prior) = preset1();
        let x = [0.0];
        assert!((p_max_all(&x, &fam).unwrap().p[0] - 0.977_249_868_051_820_8).abs() < 1e-12);
        // 0.75·0.5 + 0.15·Φ(1) + 0.1·Φ(2)
        assert!((p_mix_all(&x, &fam, &prior).unwrap().p[0] - 0.598_926_698_715_463_5).abs() < 1e-12);
    }

    #[test]
    fn single_component_collapse() {
        let fam = NullFamily::new(vec![Distribution::normal(0.0, 1.0).unwrap()], Region::Lower).unwrap();
        let x = [-1.0, 0.0, 2.0];
        let a = p_max_all(&x, &fam).unwrap();
        let b = p_mix_all(&x, &fam, &Prior::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(a.p, b.p);
    }

    #[test]
    fn degenerate_prior_and_limits() {
        let (fam, _) = preset1();
        let x = [-2.0, 0.5, 40.0];
        let phi = PhiTable::new(&x, &fam).unwrap();
        let e2 = Prior::new(vec![0.0, 1.0, 0.0]).unwrap();
        let mix = phi.mix(&e2).unwrap();
        for i in 0..3 {
            assert_eq!(mix.p[i], phi.row(i)[1]);
        }
        assert_eq!(mix.p[2], 1.0);
    }

    #[test]
    fn unsorted_input_rejected() {
        let (fam, _) = preset1();
        assert!(p_max_all(&[1.0, 0.0], &fam).is_err());
    }

    #[test]
    fn u_bound_thresholds() {
        let n = 5000;
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let v = ConstraintVariant::default();
        let u = u_bounds(&x, &v).unwrap();
        let eps = epsilon_n(n).unwrap();
        // ⌊5000^0.2⌋ = 5: ranks 1..5 use the Gamma bound
        for j in 1..=5 {
            assert!(u[j - 1] < j as f64 / n as f64 + eps);
            let g = gamma_upper_quantile(1.0 / n as f64, j as f64, 1.0 / 0.95).unwrap() / n as f64;
            assert_eq!(u[j - 1], g);
        }
        assert_eq!(u[5], 6.0 / 5000.0 + eps);
        // rank 1: -ln(1/n)/(0.95 n)
        let want = libm::log(5000.0) / 0.95 / 5000.0;
        assert!((u[0] - want).abs() < 1e-15);
        assert!((u[0] - 1.793_093_303_456_05e-3).abs() < 1e-15);
        assert!((u[4000] - (4001.0 / 5000.0 + 0.041_272_734_804_992_6)).abs() < 1e-14);
    }

    #[test]
    fn mode_must_be_lp() {
        let (fam, _) = preset1();
        let x = [-1.0, 0.0, 1.0];
        assert!(p_constrained(&x, &fam, &ConstraintVariant::default(), Method::Max).is_err());
    }

    #[test]
    fn variant_validation() {
        let v = ConstraintVariant { sum_lower: 1.5, ..Default::default() };
        assert!(v.validate().is_err());
        let v = ConstraintVariant { gamma_beta: 1.0, ..Default::default() };
        assert!(v.validate().is_err());
    }
}
