//! Maximum likelihood estimation of the null prior weights, treating every
//! observation as a true null, and a numeric check of the condition under
//! which that estimate is consistent despite contamination.

use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::linalg::{dot, solve};
use crate::model::NullFamily;
use crate::quad::adaptive_simpson;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Search set for the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MleMode {
    /// `c ≥ 0`, `Σc = 1`; fitted by EM.
    #[default]
    Simplex,
    /// `Σc = 1` with `c⊤f(x_i) > 0` at every observation; weights may go
    /// negative. Fitted by damped Newton on the affine hull.
    Extended,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub nu_hat: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood after each iteration, starting from the initial
    /// uniform weights.
    pub history: Vec<f64>,
}

/// Densities `f_k(x_i)` as an `n × L` row-major matrix.
fn density_matrix(x: &[f64], family: &NullFamily) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() * family.len());
    for &xi in x {
        out.extend(family.density_vector(xi));
    }
    out
}

fn ll_from_matrix(c: &[f64], dens: &[f64]) -> Option<f64> {
    let dim = c.len();
    let mut total = 0.0;
    for row in dens.chunks_exact(dim) {
        let q = dot(c, row);
        if !(q > 0.0) {
            return None;
        }
        total += libm::log(q);
    }
    Some(total)
}

/// `ℓ(c) = Σ_i ln(c⊤f(x_i))`.
pub fn log_likelihood(c: &[f64], x: &[f64], family: &NullFamily) -> Result<f64> {
    if c.len() != family.len() {
        return Err(Error::Dimension { expected: family.len(), got: c.len() });
    }
    let mut total = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let q = dot(c, &family.density_vector(xi));
        if !(q > 0.0) {
            return Err(Error::ZeroDensity { index: i, x: xi });
        }
        total += libm::log(q);
    }
    Ok(total)
}

/// EM fixed-point iteration `c_k ← (1/n)·Σ_i c_k f_k(x_i)/(c⊤f(x_i))` from
/// the uniform start, stopping once `max_k |Δc_k| < tol`.
pub fn em_fit_prior(x: &[f64], family: &NullFamily, max_iter: usize, tol: f64) -> Result<MleResult> {
    if x.is_empty() {
        return Err(domain("MLE needs at least one observation"));
    }
    let dim = family.len();
    let n = x.len() as f64;
    let dens = density_matrix(x, family);
    let mut c = alloc::vec![1.0 / dim as f64; dim];
    for (i, row) in dens.chunks_exact(dim).enumerate() {
        if !(dot(&c, row) > 0.0) {
            return Err(Error::ZeroDensity { index: i, x: x[i] });
        }
    }
    let mut history = alloc::vec![ll_from_matrix(&c, &dens).expect("checked positive")];
    let mut next = alloc::vec![0.0; dim];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        next.iter_mut().for_each(|v| *v = 0.0);
        for row in dens.chunks_exact(dim) {
            let q = dot(&c, row);
            for k in 0..dim {
                next[k] += c[k] * row[k] / q;
            }
        }
        let total: f64 = next.iter().sum();
        let mut delta: f64 = 0.0;
        for k in 0..dim {
            // renormalize to keep Σc = 1 against rounding drift
            let v = next[k] / n * (n / total);
            delta = delta.max((v - c[k]).abs());
            c[k] = v;
        }
        history.push(ll_from_matrix(&c, &dens).ok_or(Error::ZeroDensity { index: 0, x: x[0] })?);
        if delta < tol {
            converged = true;
            break;
        }
    }
    let log_likelihood = *history.last().expect("nonempty");
    Ok(MleResult { nu_hat: c, log_likelihood, iterations, converged, history })
}

/// Damped Newton ascent of `ℓ` on `{Σc = 1}` keeping `c⊤f(x_i) > 0` at every
/// observation.
pub fn extended_fit_prior(x: &[f64], family: &NullFamily, max_iter: usize, tol: f64) -> Result<MleResult> {
    if x.is_empty() {
        return Err(domain("MLE needs at least one observation"));
    }
    let dim = family.len();
    let dens = density_matrix(x, family);
    let mut c = alloc::vec![1.0 / dim as f64; dim];
    let mut ll = ll_from_matrix(&c, &dens).ok_or_else(|| {
        let i = dens.chunks_exact(dim).position(|row| !(dot(&c, row) > 0.0)).unwrap_or(0);
        Error::ZeroDensity { index: i, x: x[i] }
    })?;
    let mut history = alloc::vec![ll];
    if dim == 1 {
        return Ok(MleResult { nu_hat: c, log_likelihood: ll, iterations: 0, converged: true, history });
    }
    // reduced coordinates: c = c0 + Z v with Z e_k = e_k − e_L, k < L
    let m = dim - 1;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut grad = alloc::vec![0.0; m];
        let mut hess = alloc::vec![0.0; m * m];
        for row in dens.chunks_exact(dim) {
            let q = dot(&c, row);
            let d: Vec<f64> = (0..m).map(|k| (row[k] - row[dim - 1]) / q).collect();
            for a in 0..m {
                grad[a] += d[a];
                for b in 0..m {
                    hess[a * m + b] += d[a] * d[b];
                }
            }
        }
        // Newton direction solves (−H) step = grad with −H = Σ d d⊤
        let step = solve(hess, grad.clone(), 1e-300).unwrap_or(grad);
        let mut full = alloc::vec![0.0; dim];
        full[..m].copy_from_slice(&step);
        full[dim - 1] = -step.iter().sum::<f64>();
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = c.iter().zip(&full).map(|(a, b)| a + t * b).collect();
            if let Some(v) = ll_from_matrix(&trial, &dens) {
                if v >= ll {
                    let change = full.iter().fold(0.0_f64, |acc, s| acc.max((t * s).abs()));
                    c = trial;
                    ll = v;
                    moved = true;
                    history.push(ll);
                    if change < tol {
                        converged = true;
                    }
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            // no ascent along the Newton direction: stationary to precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    Ok(MleResult { nu_hat: c, log_likelihood: ll, iterations, converged, history })
}

pub fn fit_prior(x: &[f64], family: &NullFamily, mode: MleMode, max_iter: usize, tol: f64) -> Result<MleResult> {
    match mode {
        MleMode::Simplex => em_fit_prior(x, family, max_iter, tol),
        MleMode::Extended => extended_fit_prior(x, family, max_iter, tol),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoCheck {
    /// `∫ρ f_k` per component.
    pub integrals: Vec<f64>,
    pub satisfied: bool,
}

/// Evaluates `∫ρ(s) f_k(s) ds` for every component by adaptive Simpson on
/// `range`, widened until each component's mass outside it is below
/// `1e-12`, and reports whether all integrals are within `tol` of 1.
pub fn check_rho_condition<F: Fn(f64) -> f64>(
    rho: F,
    family: &NullFamily,
    range: (f64, f64),
    tol: f64,
) -> Result<RhoCheck> {
    let (mut lo, mut hi) = range;
    if !(lo < hi) {
        return Err(domain(alloc::format!("quadrature range must be increasing, got ({lo}, {hi})")));
    }
    let region = family.region();
    let outside = |lo: f64, hi: f64| -> f64 {
        family
            .components()
            .iter()
            .map(|d| {
                let below = if lo > 0.0 || region != crate::model::Region::Absolute { region.region_cdf(d, lo) } else { 0.0 };
                below + (1.0 - region.region_cdf(d, hi))
            })
            .fold(0.0, f64::max)
    };
    let mut widen = 0;
    while outside(lo, hi) > 1e-12 {
        let w = hi - lo;
        lo -= 0.5 * w;
        hi += 0.5 * w;
        widen += 1;
        if widen > 60 {
            return Err(domain("could not find a quadrature range covering the null mass"));
        }
    }
    let mut negative: Option<f64> = None;
    let mut integrals = Vec::with_capacity(family.len());
    for d in family.components() {
        let v = adaptive_simpson(
            |s| {
                let r = rho(s);
                if r < 0.0 && negative.is_none() {
                    negative = Some(s);
                }
                r * region.region_pdf(d, s)
            },
            lo,
            hi,
            1e-12,
            50,
        );
        if let Some(s) = negative {
            return Err(domain(alloc::format!("rho is negative at {s}")));
        }
        integrals.push(v);
    }
    let satisfied = integrals.iter().all(|v| (v - 1.0).abs() <= tol);
    Ok(RhoCheck { integrals, satisfied })
}
