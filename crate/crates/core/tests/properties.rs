use causvol_core::bds::{bds_test_values, correlation_integral_values, EpsRule};
use causvol_core::nonparam::{dp_test, hj_test, Bandwidth as NpBandwidth};
use causvol_core::quantile::{st_statistic, QuantileGrid};
use causvol_core::rng::stream;
use causvol_core::series::{deflate, describe_values, log_returns, spearman_values};
use causvol_core::unit_root::{adf_test, pp_test, Bandwidth, Deterministic, InfoCriterion};
use causvol_core::var::{fit_var, granger_wald};
use causvol_core::{Period, Series};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

fn noise(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(seed, "prop", 0);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
    let e = noise(seed, n);
    let mut y = vec![0.0; n];
    for t in 1..n {
        y[t] = phi * y[t - 1] + e[t];
    }
    y
}

fn monthly(name: &str, v: Vec<f64>) -> Series {
    Series::new(name, Period::new(1990, 1).unwrap(), v).unwrap()
}

fn affine(s: &Series, a: f64, b: f64) -> Series {
    s.with_values(s.name(), s.values().iter().map(|v| a * v + b).collect()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn deflation_is_undone_by_the_price_index(seed in 0u64..10_000, n in 2usize..60) {
        let nominal: Vec<f64> = noise(seed, n).iter().map(|e| 50.0 * (0.3 * e).exp()).collect();
        let cpi: Vec<f64> = noise(seed + 1, n).iter().map(|e| 100.0 + 20.0 * e.abs()).collect();
        let real = deflate(&monthly("p", nominal.clone()), &monthly("cpi", cpi.clone())).unwrap();
        for ((r, c), p) in real.values().iter().zip(&cpi).zip(&nominal) {
            prop_assert!(((r * c / 100.0) - p).abs() <= 1e-10 * p.abs());
        }
    }

    #[test]
    fn returns_ignore_the_price_scale(seed in 0u64..10_000, scale in 1e-3f64..1e3) {
        let p: Vec<f64> = noise(seed, 40).iter().map(|e| 10.0 * (0.2 * e).exp()).collect();
        let a = log_returns(&monthly("p", p.clone())).unwrap();
        let b = log_returns(&monthly("p", p.iter().map(|v| v * scale).collect())).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn rank_correlation_survives_increasing_transforms(seed in 0u64..10_000, k in 0.1f64..3.0) {
        let x = noise(seed, 50);
        let y: Vec<f64> = x.iter().zip(noise(seed + 7, 50)).map(|(a, e)| a + e).collect();
        let base = spearman_values(&x, &y).unwrap();
        let tx: Vec<f64> = x.iter().map(|v| (k * v).exp()).collect();
        let ty: Vec<f64> = y.iter().map(|v| v.powi(3) + k * v).collect();
        prop_assert_eq!(base, spearman_values(&tx, &ty).unwrap());
    }

    #[test]
    fn summary_statistics_ignore_order(seed in 0u64..10_000, n in 5usize..80) {
        let x = noise(seed, n);
        let mut y = x.clone();
        y.shuffle(&mut stream(seed, "shuffle", 0));
        let a = describe_values(&x).unwrap();
        let b = describe_values(&y).unwrap();
        prop_assert_eq!(a.median, b.median);
        prop_assert_eq!(a.max, b.max);
        prop_assert_eq!(a.min, b.min);
        for (u, v) in [(a.mean, b.mean), (a.std_dev, b.std_dev), (a.skewness, b.skewness), (a.kurtosis, b.kurtosis), (a.jarque_bera_stat, b.jarque_bera_stat)] {
            prop_assert!(close(u, v, 1e-10));
        }
    }

    #[test]
    fn correlation_integral_is_monotone(seed in 0u64..10_000, eps in 0.2f64..2.0, m in 1usize..5) {
        let x = ar1(seed, 60, 0.5);
        let c = correlation_integral_values(&x, m, eps).unwrap();
        prop_assert!(correlation_integral_values(&x, m + 1, eps).unwrap() <= c);
        prop_assert!(correlation_integral_values(&x, m, eps * 1.3).unwrap() >= c);
    }

    #[test]
    fn bds_is_affine_invariant(seed in 0u64..10_000, a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let x = ar1(seed, 150, 0.3);
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let r1 = bds_test_values(&x, 2..=4, EpsRule::TimesStd(0.7)).unwrap();
        let r2 = bds_test_values(&y, 2..=4, EpsRule::TimesStd(0.7)).unwrap();
        for (d1, d2) in r1.per_dimension.iter().zip(&r2.per_dimension) {
            prop_assert!((d1.statistic - d2.statistic).abs() < 1e-8);
        }
    }

    #[test]
    fn unit_root_statistics_are_affine_invariant(seed in 0u64..10_000, a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let s = monthly("y", ar1(seed, 120, 0.9));
        let t = affine(&s, a, b);
        for det in [Deterministic::Constant, Deterministic::ConstantTrend] {
            let x = adf_test(&s, det, 4, InfoCriterion::Aic).unwrap();
            let y = adf_test(&t, det, 4, InfoCriterion::Aic).unwrap();
            prop_assert_eq!(x.lag_or_bandwidth, y.lag_or_bandwidth);
            prop_assert!((x.statistic - y.statistic).abs() < 1e-8);
            let x = pp_test(&s, det, Bandwidth::NeweyWestAuto).unwrap();
            let y = pp_test(&t, det, Bandwidth::NeweyWestAuto).unwrap();
            prop_assert!((x.statistic - y.statistic).abs() < 1e-8);
        }
    }

    #[test]
    fn wald_statistic_is_affine_invariant(seed in 0u64..10_000, a in 0.01f64..100.0, b in -50.0f64..50.0, p in 1usize..4) {
        let x = monthly("x", ar1(seed, 120, 0.4));
        let y = monthly("y", ar1(seed + 1, 120, 0.2));
        let base = granger_wald(&fit_var(&[x.clone(), y.clone()], p).unwrap(), "x", "y").unwrap();
        let moved = granger_wald(&fit_var(&[affine(&x, a, b), y], p).unwrap(), "x", "y").unwrap();
        prop_assert!(close(base.chi_sq, moved.chi_sq, 1e-8));
    }

    #[test]
    fn nonparametric_statistics_are_affine_invariant(seed in 0u64..10_000, a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let x = monthly("x", noise(seed, 120));
        let y = monthly("y", noise(seed + 1, 120));
        let (x2, y2) = (affine(&x, a, b), affine(&y, a, -b));
        let h1 = hj_test(&x, &y, 1, 1.5).unwrap();
        let h2 = hj_test(&x2, &y2, 1, 1.5).unwrap();
        prop_assert!((h1.statistic - h2.statistic).abs() < 1e-8);
        let d1 = dp_test(&x, &y, 1, NpBandwidth::Fixed(1.5)).unwrap();
        let d2 = dp_test(&x2, &y2, 1, NpBandwidth::Fixed(1.5)).unwrap();
        prop_assert!((d1.statistic - d2.statistic).abs() < 1e-8);
    }

    #[test]
    fn st_is_nonnegative_and_ignores_grid_order(seed in 0u64..10_000, a in 0.01f64..100.0) {
        let y = monthly("y", ar1(seed, 80, 0.3));
        let z = monthly("z", noise(seed + 3, 80));
        let levels = vec![0.1, 0.3, 0.5, 0.7, 0.9];
        let mut shuffled = levels.clone();
        shuffled.shuffle(&mut stream(seed, "grid", 0));
        let g = QuantileGrid::custom(levels).unwrap();
        let s = st_statistic(&y, &z, 1, &g, 1).unwrap();
        prop_assert!(s >= 0.0);
        let s2 = st_statistic(&y, &z, 1, &QuantileGrid::custom(shuffled).unwrap(), 1).unwrap();
        prop_assert!((s - s2).abs() < 1e-8);
        let s3 = st_statistic(&y, &affine(&z, a, 1.0), 1, &g, 1).unwrap();
        prop_assert!((s - s3).abs() < 1e-8);
    }
}
