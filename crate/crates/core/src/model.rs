//! Null families, region transforms and the random mixture model.
//!
//! Observations live in the *s-domain* from the moment they are sampled:
//! the region transform `s(x)` is applied once, so that the rejection
//! regions are always `{s ≤ t}` and the significance level of region `t`
//! under null `k` is the s-domain CDF `φ_k(t)`.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution as _, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::special::{normal_pdf, std_normal_cdf, NoncentralT};

/// A univariate continuous distribution from the supported families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Normal { mean: f64, sd: f64 },
    NoncentralT(NoncentralT),
}

impl Distribution {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::InvalidModel(format!("normal needs finite mean and sd > 0, got ({mean}, {sd})")));
        }
        Ok(Self::Normal { mean, sd })
    }

    pub fn noncentral_t(df: f64, delta: f64) -> Result<Self> {
        NoncentralT::new(df, delta)
            .map(Self::NoncentralT)
            .map_err(|e| Error::InvalidModel(format!("{e}")))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal { mean, sd } => std_normal_cdf((x - mean) / sd),
            Self::NoncentralT(t) => t.cdf(x),
        }
    }

    /// Survival function `1 − F(x)`.
    pub fn sf(&self, x: f64) -> f64 {
        match self {
            Self::Normal { mean, sd } => std_normal_cdf((mean - x) / sd),
            Self::NoncentralT(t) => 1.0 - t.cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal { mean, sd } => normal_pdf(x, *mean, *sd),
            Self::NoncentralT(t) => t.pdf(x),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            Self::NoncentralT(t) => {
                let z: f64 = StandardNormal.sample(rng);
                // df > 0 is checked at construction
                let v: f64 = ChiSquared::new(t.df()).expect("positive df").sample(rng);
                (z + t.delta()) / libm::sqrt(v / t.df())
            }
        }
    }
}

/// The nested rejection regions `D_t` and their scalar index `s(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Region {
    /// `D_t = (−∞, t]`, `s(x) = x`.
    #[default]
    Lower,
    /// `D_t = [−t, ∞)`, `s(x) = −x`.
    Upper,
    /// `D_t = [−t, t]`, `s(x) = |x|`.
    Absolute,
}

impl Region {
    pub fn transform(self, x: f64) -> f64 {
        match self {
            Region::Lower => x,
            Region::Upper => -x,
            Region::Absolute => x.abs(),
        }
    }

    /// Probability of `D_t` under `dist`.
    pub fn region_cdf(self, dist: &Distribution, t: f64) -> f64 {
        match self {
            Region::Lower => dist.cdf(t),
            Region::Upper => dist.sf(-t),
            Region::Absolute => {
                if t <= 0.0 {
                    0.0
                } else {
                    (dist.cdf(t) - dist.cdf(-t)).max(0.0)
                }
            }
        }
    }

    /// Density of `s(X)` at `s` when `X ~ dist`.
    pub fn region_pdf(self, dist: &Distribution, s: f64) -> f64 {
        match self {
            Region::Lower => dist.pdf(s),
            Region::Upper => dist.pdf(-s),
            Region::Absolute => {
                if s < 0.0 {
                    0.0
                } else {
                    dist.pdf(s) + dist.pdf(-s)
                }
            }
        }
    }
}

/// The `L` candidate null distributions together with the region type.
#[derive(Debug, Clone, PartialEq)]
pub struct NullFamily {
    components: Vec<Distribution>,
    region: Region,
}

impl NullFamily {
    pub fn new(components: Vec<Distribution>, region: Region) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidModel("null family needs at least one component".into()));
        }
        Ok(Self { components, region })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Distribution] {
        &self.components
    }

    pub fn region(&self) -> Region {
        self.region
    }

    /// `φ(t) = (φ_1(t), …, φ_L(t))`.
    pub fn cdf_vector(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = alloc::vec![0.0; self.len()];
        self.cdf_into(t, &mut out)?;
        Ok(out)
    }

    /// Writes `φ(t)` into `out`, which must have length `L`.
    pub fn cdf_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        if t.is_nan() {
            return Err(domain("cdf_vector at NaN"));
        }
        if self.region == Region::Absolute && t < 0.0 {
            return Err(domain(format!("absolute-value region needs t >= 0, got {t}")));
        }
        if out.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: out.len() });
        }
        for (o, d) in out.iter_mut().zip(&self.components) {
            *o = self.region.region_cdf(d, t);
        }
        Ok(())
    }

    /// s-domain densities `(f_1(s), …, f_L(s))`.
    pub fn density_vector(&self, s: f64) -> Vec<f64> {
        self.components.iter().map(|d| self.region.region_pdf(d, s)).collect()
    }
}

/// Prior weights over the null family.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior(Vec<f64>);

impl Prior {
    pub fn new(nu: Vec<f64>) -> Result<Self> {
        if nu.is_empty() {
            return Err(Error::InvalidModel("prior needs at least one weight".into()));
        }
        if let Some(w) = nu.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidModel(format!("prior weights must be nonnegative, got {w}")));
        }
        let total: f64 = nu.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!("prior weights must sum to 1, got {total}")));
        }
        Ok(Self(nu))
    }

    pub fn uniform(len: usize) -> Self {
        Self(alloc::vec![1.0 / len as f64; len])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Random mixture: with probability `a` an observation is a false null
/// drawn from `alt`, otherwise a true null from component `k` with
/// probability `ν_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    family: NullFamily,
    prior: Prior,
    a: f64,
    alt: Distribution,
}

impl MixtureModel {
    /// `a` may be 0 (all nulls true) but must stay below 1.
    pub fn new(family: NullFamily, prior: Prior, a: f64, alt: Distribution) -> Result<Self> {
        if prior.len() != family.len() {
            return Err(Error::InvalidModel(format!(
                "prior has {} weights for {} null components",
                prior.len(),
                family.len()
            )));
        }
        if !(0.0..1.0).contains(&a) {
            return Err(Error::InvalidModel(format!("false-null fraction must lie in [0, 1), got {a}")));
        }
        if family.components().contains(&alt) {
            return Err(Error::InvalidModel("alternative coincides with a null component".into()));
        }
        Ok(Self { family, prior, a, alt })
    }

    pub fn family(&self) -> &NullFamily {
        &self.family
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn alt(&self) -> &Distribution {
        &self.alt
    }

    pub fn with_a(&self, a: f64) -> Result<Self> {
        Self::new(self.family.clone(), self.prior.clone(), a, self.alt)
    }

    /// CDF of `s(X)` under the full mixture,
    /// `Q(t) = (1 − a)·ν⊤φ(t) + a·G(D_t)`.
    pub fn mixture_cdf(&self, t: f64) -> Result<f64> {
        let phi = self.family.cdf_vector(t)?;
        let null: f64 = phi.iter().zip(self.prior.weights()).map(|(p, w)| p * w).sum();
        let alt = self.family.region().region_cdf(&self.alt, t);
        Ok((1.0 - self.a) * null + self.a * alt)
    }
}

/// Where an observation came from. Hidden from every p-value routine; only
/// metrics look at it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Null(usize),
    Alternative,
}

/// Sorted s-domain observations with their hidden origins.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    x: Vec<f64>,
    origin: Vec<Origin>,
}

impl LabeledSample {
    /// Sorts the observations, carrying origins along. Ties keep their
    /// input order.
    pub fn new(values: Vec<f64>, origin: Vec<Origin>) -> Result<Self> {
        if values.len() != origin.len() {
            return Err(Error::Dimension { expected: values.len(), got: origin.len() });
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(domain("sample contains NaN"));
        }
        let mut pairs: Vec<(f64, Origin)> = values.into_iter().zip(origin).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (x, origin) = pairs.into_iter().unzip();
        Ok(Self { x, origin })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn origin(&self) -> &[Origin] {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `true` where the null hypothesis holds.
    pub fn labels(&self) -> Vec<bool> {
        self.origin.iter().map(|o| matches!(o, Origin::Null(_))).collect()
    }

    pub fn null_count(&self) -> usize {
        self.origin.iter().filter(|o| matches!(o, Origin::Null(_))).count()
    }
}

/// Mixes a master seed and a stream index into an independent 64-bit seed
/// (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `n` labeled observations from `model`, transformed to the
/// s-domain and sorted. Deterministic in `seed`.
pub fn sample_mixture(model: &MixtureModel, n: usize, seed: u64) -> LabeledSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let region = model.family.region();
    let weights = model.prior.weights();
    let mut values = Vec::with_capacity(n);
    let mut origin = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let (dist, o) = if u < model.a {
            (&model.alt, Origin::Alternative)
        } else {
            let mut v = (u - model.a) / (1.0 - model.a);
            let mut k = weights.len() - 1;
            for (j, w) in weights.iter().enumerate() {
                if v < *w {
                    k = j;
                    break;
                }
                v -= w;
            }
            (&model.family.components[k], Origin::Null(k))
        };
        values.push(region.transform(dist.sample(&mut rng)));
        origin.push(o);
    }
    LabeledSample::new(values, origin).expect("finite draws")
}

/// The five simulation settings, all with `a = 0.05` and lower-tail
/// regions.
pub fn table1_preset(id: u32) -> Result<MixtureModel> {
    let n = |m: f64, s: f64| Distribution::normal(m, s);
    let t = |d: f64| Distribution::noncentral_t(20.0, d);
    let (nulls, nu, alt) = match id {
        1 => (alloc::vec![n(0.0, 1.0)?, n(-1.0, 1.0)?, n(-2.0, 1.0)?], alloc::vec![0.75, 0.15, 0.10], n(-4.0, 1.0)?),
        2 => (alloc::vec![t(0.0)?, t(-1.0)?, t(-2.0)?], alloc::vec![0.75, 0.15, 0.10], t(-4.0)?),
        3 => (alloc::vec![n(0.0, 1.0)?, n(-1.0, 1.0)?, n(-2.0, 1.0)?], alloc::vec![0.60, 0.25, 0.15], n(-4.0, 1.0)?),
        4 => (alloc::vec![n(0.0, 1.0)?, n(-1.0, 1.5)?, n(-2.0, 1.5)?], alloc::vec![0.75, 0.15, 0.10], n(-4.0, 1.0)?),
        5 => (
            alloc::vec![n(0.0, 1.0)?, n(-1.0, 1.0)?, n(-2.0, 1.0)?, n(-3.0, 1.0)?, n(-4.0, 1.0)?],
            alloc::vec![0.65, 0.15, 0.10, 0.05, 0.05],
            n(-5.0, 1.0)?,
        ),
        _ => return Err(Error::InvalidModel(format!("unknown preset {id}, expected 1..=5"))),
    };
    MixtureModel::new(NullFamily::new(nulls, Region::Lower)?, Prior::new(nu)?, 0.05, alt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn preset1_family(region: Region) -> NullFamily {
        let m = table1_preset(1).unwrap();
        NullFamily::new(m.family().components().to_vec(), region).unwrap()
    }

    #[test]
    fn cdf_vector_lower() {
        let phi = preset1_family(Region::Lower).cdf_vector(0.0).unwrap();
        let want = [0.5, 0.841_344_746_068_542_9, 0.977_249_868_051_820_8];
        for (g, w) in phi.iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
        let far = preset1_family(Region::Lower).cdf_vector(-60.0).unwrap();
        assert!(far.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn cdf_vector_absolute_and_upper() {
        let fam = NullFamily::new(vec![Distribution::normal(0.0, 1.0).unwrap()], Region::Absolute).unwrap();
        let v = fam.cdf_vector(1.0).unwrap()[0];
        assert!((v - 0.682_689_492_137_085_9).abs() < 1e-12);
        assert!(fam.cdf_vector(-0.5).is_err());

        let up = preset1_family(Region::Upper).cdf_vector(1.0).unwrap();
        // P(X >= -1) for N(0,1), N(-1,1), N(-2,1)
        let want = [0.841_344_746_068_542_9, 0.5, 0.158_655_253_931_457_05];
        for (g, w) in up.iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_vector_monotone_and_continuous() {
        let fam = preset1_family(Region::Lower);
        let mut prev = fam.cdf_vector(-10.0).unwrap();
        let mut t = -10.0;
        while t < 6.0 {
            t += 0.01;
            let cur = fam.cdf_vector(t).unwrap();
            for (c, p) in cur.iter().zip(&prev) {
                assert!(c >= p);
                assert!(c - p < 0.005);
            }
            prev = cur;
        }
    }

    #[test]
    fn presets_match_table() {
        let m = table1_preset(1).unwrap();
        assert_eq!(m.a(), 0.05);
        assert_eq!(m.prior().weights(), &[0.75, 0.15, 0.10]);
        assert_eq!(m.alt(), &Distribution::normal(-4.0, 1.0).unwrap());
        let m = table1_preset(2).unwrap();
        assert_eq!(m.family().components()[2], Distribution::noncentral_t(20.0, -2.0).unwrap());
        assert_eq!(m.alt(), &Distribution::noncentral_t(20.0, -4.0).unwrap());
        let m = table1_preset(4).unwrap();
        assert_eq!(m.family().components()[1], Distribution::normal(-1.0, 1.5).unwrap());
        let m = table1_preset(5).unwrap();
        assert_eq!(m.family().len(), 5);
        assert_eq!(m.prior().weights(), &[0.65, 0.15, 0.10, 0.05, 0.05]);
        assert_eq!(m.alt(), &Distribution::normal(-5.0, 1.0).unwrap());
        assert!(table1_preset(0).is_err());
        assert!(table1_preset(6).is_err());
    }

    #[test]
    fn model_validation() {
        let fam = preset1_family(Region::Lower);
        let alt = Distribution::normal(-4.0, 1.0).unwrap();
        assert!(Prior::new(vec![0.5, 0.4, 0.2]).is_err());
        assert!(Prior::new(vec![1.2, -0.2]).is_err());
        let prior = Prior::new(vec![0.75, 0.15, 0.10]).unwrap();
        assert!(MixtureModel::new(fam.clone(), prior.clone(), 1.0, alt).is_err());
        assert!(MixtureModel::new(fam.clone(), prior.clone(), 0.05, fam.components()[0]).is_err());
        assert!(MixtureModel::new(fam, Prior::new(vec![0.5, 0.5]).unwrap(), 0.05, alt).is_err());
        assert!(Distribution::normal(0.0, 0.0).is_err());
        assert!(Distribution::noncentral_t(0.0, 1.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_sorted() {
        let m = table1_preset(1).unwrap();
        let a = sample_mixture(&m, 500, 42);
        let b = sample_mixture(&m, 500, 42);
        assert_eq!(a, b);
        assert!(a.x().windows(2).all(|w| w[0] <= w[1]));
        assert_ne!(a, sample_mixture(&m, 500, 43));
    }

    #[test]
    fn degenerate_mixture_is_all_null() {
        let m = table1_preset(1).unwrap().with_a(1e-12).unwrap();
        let s = sample_mixture(&m, 1000, 7);
        assert!(s.labels().iter().all(|&l| l));
    }

    #[test]
    fn false_fraction_within_three_se() {
        let m = table1_preset(1).unwrap();
        let n = 100_000;
        let s = sample_mixture(&m, n, 2024);
        let frac = (n - s.null_count()) as f64 / n as f64;
        let se = libm::sqrt(0.05 * 0.95 / n as f64);
        assert!((frac - 0.05).abs() < 3.0 * se, "frac={frac}");
    }

    #[test]
    fn ties_keep_input_order() {
        let s = LabeledSample::new(vec![1.0, 0.0, 1.0], vec![Origin::Null(0), Origin::Null(1), Origin::Alternative]).unwrap();
        assert_eq!(s.x(), &[0.0, 1.0, 1.0]);
        assert_eq!(s.origin(), &[Origin::Null(1), Origin::Null(0), Origin::Alternative]);
    }

    #[test]
    fn region_transform_matches_cdf() {
        // P(s(X) <= t) estimated from draws should match φ(t) for each region
        let d = Distribution::normal(-0.5, 1.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<f64> = (0..20_000).map(|_| d.sample(&mut rng)).collect();
        for region in [Region::Lower, Region::Upper, Region::Absolute] {
            for &t in &[0.2, 0.9, 1.7] {
                let emp = draws.iter().filter(|&&x| region.transform(x) <= t).count() as f64 / 20_000.0;
                assert!((emp - region.region_cdf(&d, t)).abs() < 0.015, "{region:?} t={t}");
            }
        }
    }
}
