//! Rank counts, the empirical CDF, the `ε_n` margin and the constraint grid.

use alloc::vec::Vec;

use crate::error::{domain, Error, Result};

/// Read-only empirical-distribution view over sorted observations.
#[derive(Debug, Clone, Copy)]
pub struct EcdfView<'a> {
    x: &'a [f64],
}

impl<'a> EcdfView<'a> {
    /// `x` must be sorted in nondecreasing order.
    pub fn new(x: &'a [f64]) -> Self {
        debug_assert!(x.windows(2).all(|w| w[0] <= w[1]), "EcdfView needs sorted data");
        Self { x }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn values(&self) -> &'a [f64] {
        self.x
    }

    /// `R_n(t) = #{i : x_i ≤ t}`.
    pub fn rank_count(&self, t: f64) -> usize {
        self.x.partition_point(|&v| v <= t)
    }

    /// `𝔽_n(t) = R_n(t)/n`.
    pub fn ecdf(&self, t: f64) -> f64 {
        if self.x.is_empty() {
            return 0.0;
        }
        self.rank_count(t) as f64 / self.x.len() as f64
    }
}

/// `ε_n = √(ln n / n)`.
pub fn epsilon_n(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(domain(alloc::format!("epsilon_n needs n >= 2, got {n}")));
    }
    let n = n as f64;
    Ok(libm::sqrt(libm::log(n) / n))
}

/// Number of grid points, `⌊(ln n)²⌋`, never fewer than the two endpoints.
pub fn grid_size(n: usize) -> usize {
    let l = libm::log(n as f64);
    (libm::floor(l * l) as usize).max(2)
}

/// Equally spaced points from `min x` to `max x`, both included.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintGrid {
    points: Vec<f64>,
}

impl ConstraintGrid {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn build_grid(view: &EcdfView<'_>) -> Result<ConstraintGrid> {
    let n = view.len();
    if n < 2 {
        return Err(domain(alloc::format!("constraint grid needs n >= 2, got {n}")));
    }
    let lo = view.x[0];
    let hi = view.x[n - 1];
    if !(lo < hi) {
        return Err(Error::DegenerateSample(n));
    }
    let size = grid_size(n);
    let step = (hi - lo) / (size - 1) as f64;
    let mut points: Vec<f64> = (0..size).map(|k| lo + k as f64 * step).collect();
    points[size - 1] = hi;
    Ok(ConstraintGrid { points })
}

/// `sup_t |𝔽_n(t) − Q(t)|`, evaluated at the jump points where the
/// supremum is attained for a continuous `Q`.
pub fn ks_distance<F: FnMut(f64) -> f64>(view: &EcdfView<'_>, mut q: F) -> f64 {
    let n = view.len() as f64;
    let mut sup: f64 = 0.0;
    let x = view.x;
    let mut i = 0;
    while i < x.len() {
        let mut j = i;
        while j + 1 < x.len() && x[j + 1] == x[i] {
            j += 1;
        }
        let qv = q(x[i]);
        let below = i as f64 / n;
        let at = (j + 1) as f64 / n;
        sup = sup.max((qv - below).abs()).max((at - qv).abs());
        i = j + 1;
    }
    sup
}
