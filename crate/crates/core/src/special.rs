//! Scalar special functions: standard normal, regularized incomplete gamma
//! and its inverse, and the noncentral t distribution.

use crate::error::{domain, Result};
use crate::quad::gauss_kronrod;
use core::f64::consts::{FRAC_1_SQRT_2, LN_2};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF, `Φ(x) = erfc(−x/√2)/2`.
///
/// Saturates to exactly 0 or 1 far in the tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x - LN_SQRT_2PI)
}

fn check_shape(shape: f64) -> Result<()> {
    if shape > 0.0 && shape.is_finite() {
        Ok(())
    } else {
        Err(domain(alloc::format!("gamma shape must be positive and finite, got {shape}")))
    }
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 100_000;

/// Computes `(P, Q)` for the regularized incomplete gamma function.
///
/// Below `x < a + 1` the power series for `P` converges fast; above it the
/// Lentz continued fraction for `Q` does. The complementary value is taken
/// by subtraction, so the directly computed tail keeps full relative
/// accuracy.
fn inc_gamma_pq(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let log_prefix = a * libm::log(x) - x - libm::lgamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..GAMMA_MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * GAMMA_EPS {
                break;
            }
        }
        let p = (libm::exp(log_prefix) * sum).min(1.0);
        (p, 1.0 - p)
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < GAMMA_EPS {
                break;
            }
        }
        let q = (libm::exp(log_prefix) * h).min(1.0);
        (1.0 - q, q)
    }
}

/// Regularized lower incomplete gamma `P(shape, x)`.
pub fn reg_lower_gamma(shape: f64, x: f64) -> Result<f64> {
    check_shape(shape)?;
    if x.is_nan() || x < 0.0 {
        return Err(domain(alloc::format!("incomplete gamma needs x >= 0, got {x}")));
    }
    Ok(inc_gamma_pq(shape, x).0)
}

/// Regularized upper incomplete gamma `Q(shape, x) = 1 − P(shape, x)`,
/// accurate in the far upper tail.
pub fn reg_upper_gamma(shape: f64, x: f64) -> Result<f64> {
    check_shape(shape)?;
    if x.is_nan() || x < 0.0 {
        return Err(domain(alloc::format!("incomplete gamma needs x >= 0, got {x}")));
    }
    Ok(inc_gamma_pq(shape, x).1)
}

fn ln_gamma_density(shape: f64, y: f64) -> f64 {
    (shape - 1.0) * libm::log(y) - y - libm::lgamma(shape)
}

#[derive(Clone, Copy)]
enum Tail {
    Lower,
    Upper,
}

/// Finds the standardized (`scale = 1`) point whose `tail` mass is `z`.
///
/// Newton steps on `ln(tail mass)` stay inside a bisection bracket that
/// starts at `[0, 50·shape]` and is widened while it does not straddle the
/// root.
fn invert_gamma(shape: f64, z: f64, tail: Tail) -> f64 {
    let ln_z = libm::log(z);
    // g(y) = ln(tail(y)) - ln z; decreasing in y for the upper tail,
    // increasing for the lower one.
    let g = |y: f64| -> f64 {
        let (p, q) = inc_gamma_pq(shape, y);
        let m = match tail {
            Tail::Lower => p,
            Tail::Upper => q,
        };
        libm::log(m) - ln_z
    };
    let sign = match tail {
        Tail::Lower => 1.0,
        Tail::Upper => -1.0,
    };
    let mut lo = 0.0_f64;
    let mut hi = 50.0 * shape.max(1.0);
    while sign * g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut y = match tail {
        Tail::Upper => (shape - 1.0).max(0.0) - ln_z,
        Tail::Lower => libm::exp((ln_z + libm::lgamma(shape + 1.0)) / shape),
    };
    if !(y > lo && y < hi) {
        y = 0.5 * (lo + hi);
    }
    for _ in 0..300 {
        let gy = g(y);
        if gy == 0.0 {
            return y;
        }
        if sign * gy < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let (p, q) = inc_gamma_pq(shape, y);
        let mass = match tail {
            Tail::Lower => p,
            Tail::Upper => q,
        };
        // d/dy ln(mass) = ±density/mass
        let dens = libm::exp(ln_gamma_density(shape, y));
        let deriv = sign * dens / mass;
        let mut next = if deriv.is_finite() && deriv != 0.0 { y - gy / deriv } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 1e-15 * y.abs().max(1e-300) || hi - lo <= 1e-15 * hi {
            return next;
        }
        y = next;
    }
    y
}

/// Upper-tail quantile of `Gamma(shape, scale)`: the `x` with
/// `1 − P(shape, x/scale) = z`.
pub fn gamma_upper_quantile(z: f64, shape: f64, scale: f64) -> Result<f64> {
    check_shape(shape)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(domain(alloc::format!("gamma scale must be positive, got {scale}")));
    }
    if !(z > 0.0 && z < 1.0) {
        return Err(domain(alloc::format!("tail probability must lie in (0, 1), got {z}")));
    }
    Ok(scale * invert_gamma(shape, z, Tail::Upper))
}

/// Lower-tail quantile of `Gamma(shape, scale)`.
pub fn gamma_lower_quantile(p: f64, shape: f64, scale: f64) -> Result<f64> {
    check_shape(shape)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(domain(alloc::format!("gamma scale must be positive, got {scale}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(alloc::format!("tail probability must lie in (0, 1), got {p}")));
    }
    Ok(scale * invert_gamma(shape, p, Tail::Lower))
}

/// Noncentral t distribution with `df` degrees of freedom and
/// noncentrality `delta`.
///
/// With `T = (Z + δ)/S`, `S = √(V/df)`, `V ~ χ²_df`, the CDF is
/// `∫ Φ(x·s − δ) f_S(s) ds`. The integration range for `s` is cut at the
/// `1e-17` quantiles of `V` once at construction, so every evaluation is a
/// single adaptive Gauss–Kronrod pass over a range holding all the mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralT {
    df: f64,
    delta: f64,
    s_lo: f64,
    s_hi: f64,
    ln_norm: f64,
}

const NCT_TAIL: f64 = 1e-17;

impl NoncentralT {
    pub fn new(df: f64, delta: f64) -> Result<Self> {
        if !(df > 0.0 && df.is_finite()) {
            return Err(domain(alloc::format!("noncentral t needs df > 0, got {df}")));
        }
        if !delta.is_finite() {
            return Err(domain("noncentral t needs a finite noncentrality"));
        }
        let half = 0.5 * df;
        let v_lo = 2.0 * invert_gamma(half, NCT_TAIL, Tail::Lower);
        let v_hi = 2.0 * invert_gamma(half, NCT_TAIL, Tail::Upper);
        let ln_norm = LN_2 + half * libm::log(half) - libm::lgamma(half);
        Ok(Self {
            df,
            delta,
            s_lo: libm::sqrt(v_lo / df),
            s_hi: libm::sqrt(v_hi / df),
            ln_norm,
        })
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn scale_density(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        libm::exp(self.ln_norm + (self.df - 1.0) * libm::log(s) - 0.5 * self.df * s * s)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            return 1.0;
        }
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        let v = gauss_kronrod(
            |s| std_normal_cdf(x * s - self.delta) * self.scale_density(s),
            self.s_lo,
            self.s_hi,
            1e-13,
            0.0,
            200,
        );
        v.clamp(0.0, 1.0)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !x.is_finite() {
            return 0.0;
        }
        let v = gauss_kronrod(
            |s| s * std_normal_pdf(x * s - self.delta) * self.scale_density(s),
            self.s_lo,
            self.s_hi,
            1e-14,
            1e-12,
            200,
        );
        v.max(0.0)
    }
}

/// CDF of the noncentral t distribution.
pub fn noncentral_t_cdf(x: f64, df: f64, delta: f64) -> Result<f64> {
    Ok(NoncentralT::new(df, delta)?.cdf(x))
}

/// Density of a normal distribution with the given mean and standard
/// deviation.
pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    std_normal_pdf((x - mean) / sd) / sd
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        // mpmath ncdf(1.96)
        assert!((std_normal_cdf(1.96) - 0.975_002_104_851_779_6).abs() < 1e-12);
        assert_eq!(std_normal_cdf(-40.0), 0.0);
        assert_eq!(std_normal_cdf(40.0), 1.0);
    }

    #[test]
    fn normal_cdf_symmetry() {
        let mut x = -8.0;
        while x < 8.0 {
            let s = std_normal_cdf(x) + std_normal_cdf(-x);
            assert!((s - 1.0).abs() < 1e-15, "x={x}");
            x += 0.173;
        }
    }

    #[test]
    fn lower_gamma_special_cases() {
        for &x in &[0.0, 0.1, 1.0, 2.5, 10.0, 40.0] {
            let p = reg_lower_gamma(1.0, x).unwrap();
            assert!((p - (1.0 - libm::exp(-x))).abs() < 1e-14, "x={x}");
        }
        // 1 - 2/e
        assert!((reg_lower_gamma(2.0, 1.0).unwrap() - 0.264_241_117_657_115_4).abs() < 1e-12);
        assert_eq!(reg_lower_gamma(3.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn lower_gamma_rejects_bad_shape() {
        assert!(reg_lower_gamma(0.0, 1.0).is_err());
        assert!(reg_lower_gamma(-2.0, 1.0).is_err());
        assert!(reg_lower_gamma(1.0, -1.0).is_err());
    }

    #[test]
    fn upper_quantile_values() {
        let e_inv = libm::exp(-1.0);
        assert!((gamma_upper_quantile(e_inv, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        // -(1/0.95) ln 0.5
        let v = gamma_upper_quantile(0.5, 1.0, 1.0 / 0.95).unwrap();
        assert!((v - 0.729_628_611_115_731_9).abs() < 1e-12);
        // bisection oracle (mpmath, 40 digits)
        let v = gamma_upper_quantile(0.5, 2.0, 1.0).unwrap();
        assert!((v - 1.678_346_990_016_660_6).abs() < 1e-10);
    }

    #[test]
    fn upper_quantile_tiny_tail() {
        for &(z, a) in &[(1e-6, 1.0), (2e-4, 3.0), (1e-12, 5.0), (1e-3, 0.5)] {
            let x = gamma_upper_quantile(z, a, 1.0).unwrap();
            let q = reg_upper_gamma(a, x).unwrap();
            assert!(((q - z) / z).abs() < 1e-9, "z={z} a={a} q={q}");
        }
    }

    #[test]
    fn upper_quantile_domain() {
        assert!(gamma_upper_quantile(0.0, 1.0, 1.0).is_err());
        assert!(gamma_upper_quantile(1.0, 1.0, 1.0).is_err());
        assert!(gamma_upper_quantile(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn lower_quantile_inverts() {
        for &(p, a) in &[(1e-17, 10.0), (0.3, 2.0), (1e-5, 0.5)] {
            let x = gamma_lower_quantile(p, a, 1.0).unwrap();
            let got = reg_lower_gamma(a, x).unwrap();
            assert!(((got - p) / p).abs() < 1e-9, "p={p} a={a} got={got}");
        }
    }

    #[test]
    fn noncentral_t_values() {
        assert!((noncentral_t_cdf(0.0, 20.0, 0.0).unwrap() - 0.5).abs() < 1e-12);
        // mpmath quadrature of the chi mixture; scipy.stats.nct agrees
        let cases = [
            (-1.0, 20.0, -1.0, 0.504_934_076_258_186_4),
            (0.5, 20.0, -2.0, 0.993_544_251_552_232_4),
            (-6.0, 20.0, -4.0, 0.079_299_165_204_491_83),
            (2.0, 5.0, 1.0, 0.778_074_662_616_214_9),
        ];
        for (x, df, d, want) in cases {
            let got = noncentral_t_cdf(x, df, d).unwrap();
            assert!((got - want).abs() < 1e-10, "({x},{df},{d}) {got} vs {want}");
        }
    }

    #[test]
    fn noncentral_t_density() {
        let t = NoncentralT::new(20.0, -1.0).unwrap();
        assert!((t.pdf(-1.0) - 0.389_183_436_402_662_1).abs() < 1e-10);
        let t = NoncentralT::new(20.0, -2.0).unwrap();
        assert!((t.pdf(-3.0) - 0.230_340_873_533_721_6).abs() < 1e-10);
    }

    #[test]
    fn noncentral_t_large_df_limit() {
        for &(x, d) in &[(0.3, -0.5), (-1.0, -1.0), (2.0, 1.5)] {
            let got = noncentral_t_cdf(x, 1e6, d).unwrap();
            assert!((got - std_normal_cdf(x - d)).abs() < 1e-3);
        }
    }

    #[test]
    fn noncentral_t_domain() {
        assert!(noncentral_t_cdf(0.0, 0.0, 0.0).is_err());
        assert!(noncentral_t_cdf(0.0, -3.0, 0.0).is_err());
    }
}
