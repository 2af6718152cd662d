//! Step-up rejection, Monte-Carlo error metrics and the finite-sample
//! remainder of the sequential procedure's FDR bound.

use alloc::vec::Vec;

use crate::empirical::{epsilon_n, grid_size, EcdfView};
use crate::error::{domain, Error, Result};

/// Outcome of one step-up pass.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    /// `R`, the number of rejected hypotheses.
    pub rejections: usize,
    /// Aligned to the sorted sample.
    pub rejected: Vec<bool>,
    pub alpha: f64,
}

impl TestOutcome {
    /// `V`, the number of rejected true nulls, given the hidden labels
    /// (`true` = null holds).
    pub fn false_rejections(&self, labels: &[bool]) -> Result<usize> {
        if labels.len() != self.rejected.len() {
            return Err(Error::Dimension { expected: self.rejected.len(), got: labels.len() });
        }
        Ok(self.rejected.iter().zip(labels).filter(|(r, l)| **r && **l).count())
    }
}

/// Step-up rule on p-values `p` evaluated at the sorted sample `x`:
/// `R = max{i ≥ 0 : p_(i)/α ≤ (R_n(x_(i)) ∨ 1)/n}`, rejecting every
/// observation with `x ≤ x_(R)`.
///
/// `p[i]` is the p-value *at* `x[i]`; it need not be sorted. Rank counts
/// (`≤` semantics) are used instead of `i` so tied observations are
/// rejected or kept together.
pub fn bh_reject(p: &[f64], x: &[f64], alpha: f64) -> Result<TestOutcome> {
    if p.len() != x.len() {
        return Err(Error::Dimension { expected: x.len(), got: p.len() });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(alloc::format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = x.len();
    let view = EcdfView::new(x);
    let nf = n as f64;
    let cut = (0..n).rev().find(|&i| {
        let r = view.rank_count(x[i]).max(1) as f64;
        p[i] * nf <= alpha * r
    });
    let mut rejected = alloc::vec![false; n];
    let rejections = match cut {
        None => 0,
        Some(i) => {
            let r = view.rank_count(x[i]);
            rejected[..r].iter_mut().for_each(|v| *v = true);
            r
        }
    };
    Ok(TestOutcome { rejections, rejected, alpha })
}

/// Per-repetition counts feeding [`run_metrics`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepOutcome {
    /// Total hypotheses `n`.
    pub n: usize,
    /// True nulls `N`.
    pub nulls: usize,
    /// Rejections `R`.
    pub rejections: usize,
    /// Rejected true nulls `V`.
    pub false_rejections: usize,
}

impl RepOutcome {
    pub fn fdp(&self) -> f64 {
        self.false_rejections as f64 / self.rejections.max(1) as f64
    }

    /// `(R − V)/((n − N) ∨ 1)`.
    pub fn tpp(&self) -> f64 {
        (self.rejections - self.false_rejections) as f64 / (self.n - self.nulls).max(1) as f64
    }
}

/// Monte-Carlo averages over repetitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub reps: usize,
    /// `E[V/(R ∨ 1)]`
    pub fdr: f64,
    /// `E[V/R | R > 0]`; `None` when no repetition rejects anything.
    pub pfdr: Option<f64>,
    /// `E[(R − V)/((n − N) ∨ 1)]`
    pub power: f64,
    /// Standard deviation of `(R − V)/(n − N)` across repetitions.
    pub sd_tpp: f64,
    /// Standard deviation of the false discovery proportion.
    pub sd_fdp: f64,
    /// `E[1{R > 0}/(R ∨ 1)]`
    pub mean_inv_rejections: f64,
}

impl Metrics {
    pub fn fdr_standard_error(&self) -> f64 {
        self.sd_fdp / libm::sqrt(self.reps as f64)
    }

    pub fn power_standard_error(&self) -> f64 {
        self.sd_tpp / libm::sqrt(self.reps as f64)
    }
}

fn mean_sd(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (count, sum) = v.clone().fold((0usize, 0.0), |(c, s), x| (c + 1, s + x));
    let mean = sum / count as f64;
    if count < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.map(|x| (x - mean) * (x - mean)).sum();
    (mean, libm::sqrt(ss / (count - 1) as f64))
}

pub fn run_metrics(outcomes: &[RepOutcome]) -> Result<Metrics> {
    if outcomes.is_empty() {
        return Err(domain("metrics need at least one repetition"));
    }
    for o in outcomes {
        if o.false_rejections > o.rejections || o.rejections > o.n || o.nulls > o.n {
            return Err(domain(alloc::format!("inconsistent repetition counts {o:?}")));
        }
    }
    let (fdr, sd_fdp) = mean_sd(outcomes.iter().map(RepOutcome::fdp));
    let (power, sd_tpp) = mean_sd(outcomes.iter().map(RepOutcome::tpp));
    let positive: Vec<f64> = outcomes.iter().filter(|o| o.rejections > 0).map(RepOutcome::fdp).collect();
    let pfdr = if positive.is_empty() { None } else { Some(positive.iter().sum::<f64>() / positive.len() as f64) };
    let mean_inv_rejections = outcomes
        .iter()
        .map(|o| if o.rejections > 0 { 1.0 / o.rejections as f64 } else { 0.0 })
        .sum::<f64>()
        / outcomes.len() as f64;
    Ok(Metrics { reps: outcomes.len(), fdr, pfdr, power, sd_tpp, sd_fdp, mean_inv_rejections })
}

/// Inputs of the remainder `r_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RnBoundInputs {
    pub n: usize,
    pub epsilon_n: f64,
    pub grid_size: usize,
    /// Number of small ranks under the Gamma bound, `a_n`.
    pub a_n: f64,
    pub beta: f64,
}

impl RnBoundInputs {
    /// `ε_n = √(ln n/n)`, `|T_n| = ⌊(ln n)²⌋`, `a_n = n^exponent`.
    pub fn standard(n: usize, beta: f64, small_rank_exponent: f64) -> Result<Self> {
        Ok(Self {
            n,
            epsilon_n: epsilon_n(n)?,
            grid_size: grid_size(n),
            a_n: libm::pow(n as f64, small_rank_exponent),
            beta,
        })
    }
}

/// `r_n = 2(1 + |T_n|)·exp(−2nε_n²) + a_n·[1/n + (β e^{1−β})^{n+1}]`.
pub fn fdr_bound_rn(inputs: &RnBoundInputs) -> Result<f64> {
    let RnBoundInputs { n, epsilon_n, grid_size, a_n, beta } = *inputs;
    if n == 0 || !(epsilon_n > 0.0) || grid_size == 0 || !(a_n > 0.0) {
        return Err(domain(alloc::format!("r_n inputs must be positive: {inputs:?}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(domain(alloc::format!("beta must lie in (0, 1], got {beta}")));
    }
    let nf = n as f64;
    let dkw = 2.0 * (1.0 + grid_size as f64) * libm::exp(-2.0 * nf * epsilon_n * epsilon_n);
    let ratio = beta * libm::exp(1.0 - beta);
    let gamma = a_n * (1.0 / nf + libm::pow(ratio, nf + 1.0));
    Ok(dkw + gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn step_up_hand_example() {
        let x = [0.1, 0.2, 0.3];
        let o = bh_reject(&[0.01, 0.02, 0.9], &x, 0.25).unwrap();
        assert_eq!(o.rejections, 2);
        assert_eq!(o.rejected, vec![true, true, false]);
    }

    #[test]
    fn all_or_nothing() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(bh_reject(&[1.0; 4], &x, 0.25).unwrap().rejections, 0);
        let o = bh_reject(&[0.0; 4], &x, 0.25).unwrap();
        assert_eq!(o.rejections, 4);
        assert!(o.rejected.iter().all(|&r| r));
    }

    #[test]
    fn step_up_not_step_down() {
        // the first p-value fails its own threshold but the second passes
        let x = [1.0, 2.0];
        let o = bh_reject(&[0.2, 0.2], &x, 0.25).unwrap();
        assert_eq!(o.rejections, 2);
    }

    #[test]
    fn ties_rejected_together() {
        let x = [0.5, 1.0, 1.0, 2.0];
        let o = bh_reject(&[0.01, 0.1, 0.1, 0.99], &x, 0.25).unwrap();
        assert_eq!(o.rejections, 3);
    }

    #[test]
    fn bad_alpha() {
        assert!(bh_reject(&[0.1], &[0.0], 0.0).is_err());
        assert!(bh_reject(&[0.1], &[0.0], 1.0).is_err());
        assert!(bh_reject(&[0.1, 0.2], &[0.0], 0.1).is_err());
    }

    #[test]
    fn metric_formulas() {
        let o = RepOutcome { n: 20, nulls: 10, rejections: 4, false_rejections: 1 };
        let m = run_metrics(&[o]).unwrap();
        assert_eq!(m.fdr, 0.25);
        assert_eq!(m.power, 0.3);
        assert_eq!(m.pfdr, Some(0.25));
        assert_eq!(m.sd_tpp, 0.0);
    }

    #[test]
    fn zero_rejection_reps() {
        let a = RepOutcome { n: 20, nulls: 10, rejections: 4, false_rejections: 2 };
        let b = RepOutcome { n: 20, nulls: 10, rejections: 0, false_rejections: 0 };
        let m = run_metrics(&[a, b]).unwrap();
        assert_eq!(m.fdr, 0.25);
        assert_eq!(m.pfdr, Some(0.5));
        assert_eq!(m.mean_inv_rejections, 0.125);
        let m = run_metrics(&[b, b]).unwrap();
        assert_eq!(m.pfdr, None);
        assert_eq!(m.fdr, 0.0);
    }

    #[test]
    fn no_false_nulls_power_guard() {
        let o = RepOutcome { n: 10, nulls: 10, rejections: 3, false_rejections: 3 };
        let m = run_metrics(&[o]).unwrap();
        assert_eq!(m.power, 0.0);
        assert_eq!(m.fdr, 1.0);
    }

    #[test]
    fn rn_at_5000() {
        let inputs = RnBoundInputs::standard(5000, 0.95, 0.2).unwrap();
        assert_eq!(inputs.grid_size, 72);
        let r = fdr_bound_rn(&inputs).unwrap();
        assert!((r - 9.64e-3).abs() < 1e-4, "{r}");
    }

    #[test]
    fn rn_limits() {
        let base = RnBoundInputs::standard(5000, 0.95, 0.2).unwrap();
        let one = fdr_bound_rn(&RnBoundInputs { beta: 1.0, ..base }).unwrap();
        let dkw = 2.0 * 73.0 / (5000.0 * 5000.0);
        assert!((one - (dkw + base.a_n * (1.0 / 5000.0 + 1.0))).abs() < 1e-12);
        assert!(one > fdr_bound_rn(&base).unwrap());
        let big = fdr_bound_rn(&RnBoundInputs::standard(1_000_000, 0.95, 0.2).unwrap()).unwrap();
        assert!(big < 1e-3, "{big}");
    }
}
