//! Repeated sample → p-values → step-up → metrics runs, with the averaged
//! order-statistic curves.

use lpfdr_core::bh::{bh_reject, run_metrics, Metrics, RepOutcome};
use lpfdr_core::model::{derive_seed, sample_mixture, MixtureModel};
use lpfdr_core::pvalues::{ConstraintVariant, Method, PValueSet, PhiTable};
use lpfdr_core::{Error, Result};
use rayon::prelude::*;

/// Repetitions per work unit. Fixed so that the floating-point reduction
/// order, and hence the report, does not depend on the thread count.
const CHUNK: usize = 4;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: MixtureModel,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub methods: Vec<Method>,
    pub variant: ConstraintVariant,
    pub seed: u64,
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

impl SimConfig {
    /// `n = 5000`, `200` repetitions, `α = 0.25`, every method, plain
    /// constraints.
    pub fn new(model: MixtureModel) -> Self {
        Self {
            model,
            n: 5000,
            reps: 200,
            alpha: 0.25,
            methods: Method::ALL.to_vec(),
            variant: ConstraintVariant::default(),
            seed: 1,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Domain("reps must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::Domain(format!("n must be at least 2, got {}", self.n)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.threads == Some(0) {
            return Err(Error::Domain("threads must be at least 1".into()));
        }
        self.variant.validate()
    }

    /// Sorted, deduplicated method list.
    fn method_list(&self) -> Vec<Method> {
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub method: Method,
    pub metrics: Metrics,
    /// `(i/n, n·p̄_(i)/i)` for `i = 1..n`.
    pub curve: Vec<(f64, f64)>,
    /// `c̄_{k,(i)}`, indexed `[i][k]`; only for `seq` and `glb`.
    pub coeff_curve: Option<Vec<Vec<f64>>>,
    /// Repetitions in which the requested constraint set was infeasible
    /// somewhere and a fallback value was used.
    pub reps_with_fallback: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    /// One entry per method, in alphabetical order.
    pub methods: Vec<MethodReport>,
    pub outcomes: Vec<Vec<RepOutcome>>,
}

impl SimReport {
    pub fn method(&self, m: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == m)
    }
}

/// Running sums of sorted p-values (and aligned coefficients) across
/// repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveAccumulator {
    n: usize,
    dim: usize,
    count: usize,
    p_sum: Vec<f64>,
    c_sum: Vec<f64>,
}

impl CurveAccumulator {
    /// `dim = 0` tracks p-values only.
    pub fn new(n: usize, dim: usize) -> Self {
        Self { n, dim, count: 0, p_sum: vec![0.0; n], c_sum: vec![0.0; n * dim] }
    }

    /// Adds one repetition's sorted p-values and, when tracking
    /// coefficients, the weights aligned to them.
    pub fn add(&mut self, sorted_p: &[f64], coeffs: Option<&[Vec<f64>]>) -> Result<()> {
        if sorted_p.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: sorted_p.len() });
        }
        for (s, p) in self.p_sum.iter_mut().zip(sorted_p) {
            *s += p;
        }
        if self.dim > 0 {
            let coeffs = coeffs.ok_or_else(|| Error::Unsupported("coefficient curve without coefficients".into()))?;
            if coeffs.len() != self.n {
                return Err(Error::Dimension { expected: self.n, got: coeffs.len() });
            }
            for (i, row) in coeffs.iter().enumerate() {
                if row.len() != self.dim {
                    return Err(Error::Dimension { expected: self.dim, got: row.len() });
                }
                for (s, c) in self.c_sum[i * self.dim..(i + 1) * self.dim].iter_mut().zip(row) {
                    *s += c;
                }
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.n != self.n || other.dim != self.dim {
            return Err(Error::Dimension { expected: self.n, got: other.n });
        }
        for (s, o) in self.p_sum.iter_mut().zip(&other.p_sum) {
            *s += o;
        }
        for (s, o) in self.c_sum.iter_mut().zip(&other.c_sum) {
            *s += o;
        }
        self.count += other.count;
        Ok(())
    }

    pub fn curve(&self) -> Vec<(f64, f64)> {
        let n = self.n as f64;
        let reps = self.count.max(1) as f64;
        self.p_sum
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let i1 = (i + 1) as f64;
                (i1 / n, n * (s / reps) / i1)
            })
            .collect()
    }

    pub fn coeff_curve(&self) -> Option<Vec<Vec<f64>>> {
        if self.dim == 0 {
            return None;
        }
        let reps = self.count.max(1) as f64;
        Some(self.c_sum.chunks_exact(self.dim).map(|r| r.iter().map(|c| c / reps).collect()).collect())
    }
}

/// Averages sorted p-values over repetitions and returns
/// `(i/n, n·p̄_(i)/i)`.
pub fn pvalue_curves(reps: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let n = reps.first().map_or(0, Vec::len);
    let mut acc = CurveAccumulator::new(n, 0);
    for r in reps {
        acc.add(r, None)?;
    }
    Ok(acc.curve())
}

/// Averages per-repetition coefficient rows, already aligned to the sorted
/// p-values, into `(i/n, k, c̄_{k,(i)})` with `k` counted from 1.
pub fn coefficient_curves(method: Method, reps: &[Vec<Vec<f64>>]) -> Result<Vec<(f64, usize, f64)>> {
    if !method.has_coefficients() {
        return Err(Error::Unsupported(format!("method {method} has no coefficients")));
    }
    let n = reps.first().map_or(0, Vec::len);
    let dim = reps.first().and_then(|r| r.first()).map_or(0, Vec::len);
    let mut acc = CurveAccumulator::new(n, dim);
    for r in reps {
        acc.add(&vec![0.0; n], Some(r))?;
    }
    let nf = n as f64;
    let mut out = Vec::with_capacity(n * dim);
    for (i, row) in acc.coeff_curve().unwrap_or_default().into_iter().enumerate() {
        for (k, c) in row.into_iter().enumerate() {
            out.push(((i + 1) as f64 / nf, k + 1, c));
        }
    }
    Ok(out)
}

/// Sorts p-values ascending (stable) and permutes the coefficients alike.
fn sort_aligned(set: PValueSet) -> (Vec<f64>, Option<Vec<Vec<f64>>>) {
    let mut order: Vec<usize> = (0..set.p.len()).collect();
    order.sort_by(|&a, &b| set.p[a].total_cmp(&set.p[b]));
    let p = order.iter().map(|&i| set.p[i]).collect();
    let coeffs = set.coeffs.map(|c| order.iter().map(|&i| c[i].clone()).collect());
    (p, coeffs)
}

struct RepResult {
    outcomes: Vec<RepOutcome>,
    fallback: Vec<bool>,
}

fn run_rep(config: &SimConfig, methods: &[Method], rep: usize, accs: &mut [CurveAccumulator]) -> Result<RepResult> {
    let sample = sample_mixture(&config.model, config.n, derive_seed(config.seed, rep as u64));
    let labels = sample.labels();
    let nulls = sample.null_count();
    let family = config.model.family();
    let phi = PhiTable::new(sample.x(), family)?;
    let mut outcomes = Vec::with_capacity(methods.len());
    let mut fallback = Vec::with_capacity(methods.len());
    for (m, acc) in methods.iter().zip(accs.iter_mut()) {
        let set = match m {
            Method::Max => phi.max(),
            Method::Mix => phi.mix(config.model.prior())?,
            Method::Seq | Method::Glb => phi.constrained(&config.variant, *m)?,
        };
        fallback.push(set.infeasible_count() > 0);
        let test = bh_reject(&set.p, sample.x(), config.alpha)?;
        outcomes.push(RepOutcome {
            n: config.n,
            nulls,
            rejections: test.rejections,
            false_rejections: test.false_rejections(&labels)?,
        });
        let (p, coeffs) = sort_aligned(set);
        acc.add(&p, coeffs.as_deref())?;
    }
    Ok(RepResult { outcomes, fallback })
}

fn new_accumulators(config: &SimConfig, methods: &[Method]) -> Vec<CurveAccumulator> {
    let dim = config.model.family().len();
    methods.iter().map(|m| CurveAccumulator::new(config.n, if m.has_coefficients() { dim } else { 0 })).collect()
}

fn run_chunks(config: &SimConfig, methods: &[Method]) -> Result<Vec<(Vec<CurveAccumulator>, Vec<RepResult>)>> {
    let chunks = config.reps.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut accs = new_accumulators(config, methods);
            let reps = (c * CHUNK..((c + 1) * CHUNK).min(config.reps))
                .map(|rep| run_rep(config, methods, rep, &mut accs))
                .collect::<Result<Vec<_>>>()?;
            Ok((accs, reps))
        })
        .collect()
}

/// Runs `config.reps` independent repetitions. Repetition `r` draws its
/// sample from `derive_seed(config.seed, r)`, so results are identical for
/// any thread count.
pub fn run_simulation(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let methods = config.method_list();
    let chunks = match config.threads {
        None => run_chunks(config, &methods)?,
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?
            .install(|| run_chunks(config, &methods))?,
    };

    let mut accs = new_accumulators(config, &methods);
    let mut outcomes = vec![Vec::with_capacity(config.reps); methods.len()];
    let mut fallbacks = vec![0usize; methods.len()];
    for (chunk_accs, reps) in &chunks {
        for (a, c) in accs.iter_mut().zip(chunk_accs) {
            a.merge(c)?;
        }
        for r in reps {
            for (k, o) in r.outcomes.iter().enumerate() {
                outcomes[k].push(*o);
                fallbacks[k] += r.fallback[k] as usize;
            }
        }
    }
    let reports = methods
        .iter()
        .zip(&accs)
        .zip(&outcomes)
        .zip(&fallbacks)
        .map(|(((m, acc), outs), fb)| {
            Ok(MethodReport {
                method: *m,
                metrics: run_metrics(outs)?,
                curve: acc.curve(),
                coeff_curve: acc.coeff_curve(),
                reps_with_fallback: *fb,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimReport { n: config.n, reps: config.reps, alpha: config.alpha, methods: reports, outcomes })
}
