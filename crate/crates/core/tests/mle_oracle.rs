use lpfdr_core::mle::{em_fit_prior, log_likelihood, DEFAULT_MAX_ITER, DEFAULT_TOL};
use lpfdr_core::model::{sample_mixture, Distribution, MixtureModel, NullFamily, Prior, Region};
use proptest::prelude::*;

fn family() -> NullFamily {
    NullFamily::new(vec![Distribution::normal(0.0, 1.0).unwrap(), Distribution::normal(-2.0, 1.0).unwrap()], Region::Lower)
        .unwrap()
}

#[test]
fn em_recovers_two_component_weights() {
    let fam = family();
    let m = MixtureModel::new(fam.clone(), Prior::new(vec![0.7, 0.3]).unwrap(), 0.0, Distribution::normal(3.0, 1.0).unwrap()).unwrap();
    let s = sample_mixture(&m, 20_000, 2024);
    let r = em_fit_prior(s.x(), &fam, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
    assert!((r.nu_hat[0] - 0.7).abs() < 0.03, "{:?}", r.nu_hat);

    // grid search over the simplex edge as an independent maximizer
    let mut best = (f64::NEG_INFINITY, 0.5);
    let mut width = 0.5;
    for _ in 0..4 {
        let centre = best.1;
        for k in -20..=20 {
            let w = (centre + width * k as f64 / 20.0).clamp(0.0, 1.0);
            let ll = log_likelihood(&[w, 1.0 - w], s.x(), &fam).unwrap();
            if ll > best.0 {
                best = (ll, w);
            }
        }
        width /= 10.0;
    }
    assert!((r.nu_hat[0] - best.1).abs() < 2e-4, "{} vs {}", r.nu_hat[0], best.1);
    assert!(r.log_likelihood >= best.0 - 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn log_likelihood_concave(
        x in prop::collection::vec(-5.0f64..3.0, 1..40),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        t in 0.0f64..1.0,
    ) {
        let fam = family();
        let la = log_likelihood(&[a, 1.0 - a], &x, &fam).unwrap();
        let lb = log_likelihood(&[b, 1.0 - b], &x, &fam).unwrap();
        let m = t * a + (1.0 - t) * b;
        let lm = log_likelihood(&[m, 1.0 - m], &x, &fam).unwrap();
        prop_assert!(lm >= t * la + (1.0 - t) * lb - 1e-9 * (1.0 + la.abs() + lb.abs()));
    }

    #[test]
    fn em_history_nondecreasing(seed in 0u64..1000) {
        let fam = family();
        let m = MixtureModel::new(fam.clone(), Prior::new(vec![0.4, 0.6]).unwrap(), 0.05, Distribution::normal(-4.0, 1.0).unwrap()).unwrap();
        let s = sample_mixture(&m, 300, seed);
        let r = em_fit_prior(s.x(), &fam, 2000, 1e-10).unwrap();
        for w in r.history.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-10 * w[0].abs());
        }
    }
}
