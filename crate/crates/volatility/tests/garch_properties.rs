use causvol_volatility::garch::{garch_filter, garch_loglik, simulate_garch, GarchParams, VarianceInit};
use causvol_volatility::mcmc::gelman_rubin;
use causvol_volatility::{fit_garch_bayes, Family, Feature, McmcConfig, ModelSpec, PriorConfig};
use proptest::prelude::*;

fn base() -> ModelSpec {
    ModelSpec::new(Family::Garch, Feature::Base)
}

#[test]
fn likelihood_peaks_near_the_true_arch_coefficient() {
    let spec = base();
    let truth = GarchParams::new(0.0, 0.1, 0.1, 0.8);
    let seeds = 40;
    let mut wins = 0;
    for seed in 0..seeds {
        let y = simulate_garch(&spec, &truth, 5000, seed).unwrap();
        let at = garch_loglik(&spec, &truth, &y).unwrap();
        let lo = garch_loglik(&spec, &GarchParams { alpha1: 0.05, ..truth }, &y).unwrap();
        let hi = garch_loglik(&spec, &GarchParams { alpha1: 0.15, ..truth }, &y).unwrap();
        wins += (at > lo && at > hi) as usize;
    }
    assert!(wins * 100 >= 95 * seeds as usize, "{wins}/{seeds}");
}

#[test]
fn zero_ma_coefficient_reproduces_the_base_likelihood() {
    let truth = GarchParams::new(0.1, 0.2, 0.15, 0.7);
    let y = simulate_garch(&base(), &truth, 800, 3).unwrap();
    let a = garch_loglik(&base(), &truth, &y).unwrap();
    let b = garch_loglik(&ModelSpec::new(Family::Garch, Feature::Ma1), &GarchParams { psi: 0.0, ..truth }, &y).unwrap();
    assert!((a - b).abs() <= 1e-12 * a.abs());
}

#[test]
fn independent_chains_agree() {
    let spec = base();
    let y = simulate_garch(&spec, &GarchParams::new(0.0, 0.1, 0.1, 0.8), 1000, 11).unwrap();
    let prior = PriorConfig::default();
    let fits: Vec<_> = (0..3)
        .map(|s| fit_garch_bayes(&spec, &y, &prior, &McmcConfig { burn_in: 2000, draws: 4000, seed: 100 + s, thin_paths: 10 }).unwrap())
        .collect();
    let refs: Vec<_> = fits.iter().collect();
    for (name, r) in spec.param_names().iter().zip(gelman_rubin(&refs).unwrap()) {
        assert!(r < 1.1, "{name}: {r}");
    }
}

fn params() -> impl Strategy<Value = (ModelSpec, GarchParams)> {
    (0.01f64..2.0, 0.0f64..0.5, 0.0f64..0.95, 0.0f64..0.3, 0.0f64..0.3, 0usize..3).prop_filter_map(
        "stationary",
        |(a0, a1, b1, extra, psi, kind)| {
            let (spec, p) = match kind {
                0 => (ModelSpec::new(Family::Garch, Feature::TwoLags), GarchParams { beta2: extra, ..GarchParams::new(0.0, a0, a1, b1) }),
                1 => (ModelSpec::new(Family::Garch, Feature::Leverage), GarchParams { gamma: extra, ..GarchParams::new(0.0, a0, a1, b1) }),
                _ => (ModelSpec::new(Family::Garch, Feature::Ma1), GarchParams { psi, ..GarchParams::new(0.0, a0, a1, b1) }),
            };
            p.validate(&spec).is_ok().then_some((spec, p))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conditional_variances_stay_positive((spec, p) in params(), seed in 0u64..1000) {
        let y = simulate_garch(&spec, &p, 400, seed).unwrap();
        for init in [VarianceInit::Unconditional, VarianceInit::SampleVariance] {
            let (s2, _) = garch_filter(&spec, &p, y.values(), init).unwrap();
            prop_assert!(s2.iter().all(|v| *v > 0.0 && v.is_finite()));
        }
    }
}
