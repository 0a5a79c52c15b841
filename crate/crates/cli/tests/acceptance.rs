//! Acceptance report: one line per criterion with the measured value and the
//! pinned tolerance. Criteria listed in `KNOWN_FAILURES` are reported like the
//! rest but do not fail the run; any other failure does.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use causvol_core::bds::{bds_test, EpsRule};
use causvol_core::nonparam::{self, dp_test, hj_test};
use causvol_core::quantile::{fit_qar, st_statistic, subsample_pvalue, subsample_pvalues, QuantileGrid, SubsamplingConfig};
use causvol_core::rng::stream;
use causvol_core::series::{describe, pearson};
use causvol_core::unit_root::{adf_test, perron_break_test, pp_test, Bandwidth, Deterministic, InfoCriterion};
use causvol_core::var::{fit_var, granger_wald};
use causvol_core::Series;
use causvol_volatility::marglik::{MarglikConfig, ProposalFamily};
use causvol_volatility::sv::simulate_sv_with_states;
use causvol_volatility::{
    extract_volatility, fit_bayes, marginal_likelihood, simulate_garch, simulate_sv, Family, Feature, GarchParams,
    McmcConfig, ModelSpec, PriorConfig, SvParams,
};
use rand::Rng;
use rand_distr::StandardNormal;

#[path = "../../core/tests/support/st_oracle.rs"]
mod st_oracle;
#[path = "../../volatility/tests/support/conjugate.rs"]
mod conjugate;

const KNOWN_FAILURES: [usize; 2] = [2, 6];
const MASTER: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn normals(label: &str, seed: u64, n: usize) -> Vec<f64> {
    let mut rng = stream(MASTER, label, seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn ar1(label: &str, seed: u64, n: usize, phi: f64) -> Vec<f64> {
    let e = normals(label, seed, n + 100);
    let mut y = vec![0.0; n + 100];
    for t in 1..y.len() {
        y[t] = phi * y[t - 1] + e[t];
    }
    y.split_off(100)
}

fn series(name: &str, v: Vec<f64>) -> Series {
    Series::from_values(name, v).unwrap()
}

fn rate(hits: usize, n: usize) -> f64 {
    hits as f64 / n as f64
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

// 1. Size of the subsampling S_T test.
const C1_SEEDS: u64 = 200;
const C1_BAND: (f64, f64) = (0.01, 0.10);

fn c1() -> Outcome {
    let grid = QuantileGrid::deciles();
    let mut rejects = 0;
    for s in 0..C1_SEEDS {
        let y = series("y", ar1("c1y", s, 500, 0.3));
        let z = series("z", ar1("c1z", s, 500, 0.3));
        let o = subsample_pvalue(&y, &z, 1, &grid, 1, &SubsamplingConfig { k: 5.0, seed: s }).unwrap();
        rejects += (o.p_value <= 0.05) as usize;
    }
    let r = rate(rejects, C1_SEEDS as usize);
    Outcome {
        pass: within(r, C1_BAND.0, C1_BAND.1),
        detail: format!("S_T size: rejection rate {r:.3} at 5% over {C1_SEEDS} seeds, need [{}, {}]", C1_BAND.0, C1_BAND.1),
    }
}

// 2. Tail power against a lower-tail causal design.
const C2_SEEDS: u64 = 100;
const C2_LOWER_MIN: f64 = 0.60;
const C2_MEDIAN_MAX: f64 = 0.25;

fn c2() -> Outcome {
    let grids = [QuantileGrid::single(0.1).unwrap(), QuantileGrid::single(0.5).unwrap()];
    let (mut lower, mut median) = (0, 0);
    for s in 0..C2_SEEDS {
        let n = 600;
        let z = normals("c2z", s, n);
        let e = normals("c2e", s, n);
        let q = causvol_core::stats::quantile(&z, 0.2);
        let y: Vec<f64> = (0..n)
            .map(|t| if t > 0 && z[t - 1] < q { 0.8 * z[t - 1] + e[t] } else { e[t] })
            .collect();
        let out = subsample_pvalues(&series("y", y), &series("z", z), 1, &grids, 1, &SubsamplingConfig { k: 5.0, seed: s }).unwrap();
        lower += (out[0].p_value <= 0.10) as usize;
        median += (out[1].p_value <= 0.10) as usize;
    }
    let (l, m) = (rate(lower, C2_SEEDS as usize), rate(median, C2_SEEDS as usize));
    Outcome {
        pass: l >= C2_LOWER_MIN && m <= C2_MEDIAN_MAX,
        detail: format!(
            "S_T tail power: rejection at 10% {l:.3} on {{0.1}} (need >= {C2_LOWER_MIN}), {m:.3} on {{0.5}} (need <= {C2_MEDIAN_MAX}), {C2_SEEDS} seeds"
        ),
    }
}

// 3. Matrix-form S_T against the brute-force triple loop, bitwise.
const C3_CASES: u64 = 100;

fn c3() -> Outcome {
    let grids = [QuantileGrid::deciles(), QuantileGrid::single(0.1).unwrap(), QuantileGrid::single(0.5).unwrap()];
    let mut equal = 0;
    for s in 0..C3_CASES {
        let n = 30 + (s % 3) as usize;
        let y = ar1("c3y", s, n, 0.4);
        let z = normals("c3z", s, n);
        let g = &grids[(s % 3) as usize];
        let fast = st_statistic(&series("y", y.clone()), &series("z", z.clone()), 1, g, 1).unwrap();
        let slow = st_oracle::st_bruteforce(&y, &z, 1, 1, g.levels());
        equal += (fast.to_bits() == slow.to_bits()) as usize;
    }
    Outcome {
        pass: equal == C3_CASES as usize,
        detail: format!("S_T oracle: {equal}/{C3_CASES} instances with T <= 32 bitwise equal"),
    }
}

// 4. QAR in-sample coverage.
const C4_SEEDS: u64 = 50;
const C4_T: usize = 2000;

fn c4() -> Outcome {
    let grid = QuantileGrid::deciles();
    let tol = 2.0 / (C4_T as f64).sqrt();
    let mut worst: f64 = 0.0;
    let mut ok = 0;
    for s in 0..C4_SEEDS {
        let y = ar1("c4", s, C4_T, 0.5);
        let m = fit_qar(&series("y", y.clone()), 1, &grid).unwrap();
        let dev = grid
            .levels()
            .iter()
            .enumerate()
            .map(|(j, tau)| (m.coverage(&y, j) - tau).abs())
            .fold(0.0, f64::max);
        worst = worst.max(dev);
        ok += (dev <= tol) as usize;
    }
    Outcome {
        pass: ok == C4_SEEDS as usize,
        detail: format!("QAR coverage: {ok}/{C4_SEEDS} datasets within tau +- {tol:.4} at every decile, worst {worst:.4}"),
    }
}

fn within_3sd(fit: &causvol_volatility::PosteriorDraws, truth: &[f64]) -> bool {
    let (m, sd) = (fit.posterior_mean(), fit.posterior_sd());
    truth.iter().enumerate().all(|(j, t)| (m[j] - t).abs() <= 3.0 * sd[j])
}

// 5. GARCH(1,1) posterior recovery.
const C5_SEEDS: u64 = 50;
const C5_MIN: f64 = 0.90;

fn c5() -> Outcome {
    let spec = ModelSpec::new(Family::Garch, Feature::Base);
    let p = GarchParams::new(0.0, 0.1, 0.1, 0.8);
    let truth = p.to_vec(&spec);
    let mut ok = 0;
    for s in 0..C5_SEEDS {
        let y = simulate_garch(&spec, &p, 2000, 5000 + s).unwrap();
        let mc = McmcConfig { burn_in: 2000, draws: 4000, seed: s, thin_paths: 10 };
        ok += within_3sd(&fit_bayes(&spec, &y, &PriorConfig::default(), &mc).unwrap(), &truth) as usize;
    }
    let r = rate(ok, C5_SEEDS as usize);
    Outcome {
        pass: r >= C5_MIN,
        detail: format!("GARCH recovery: {ok}/{C5_SEEDS} seeds with every posterior mean within 3 sd of truth, need >= {C5_MIN}"),
    }
}

// 6. SV posterior recovery and volatility extraction.
const C6_SEEDS: u64 = 50;
const C6_MIN: f64 = 0.85;
const C6_CORR: f64 = 0.8;

fn c6() -> Outcome {
    let spec = ModelSpec::new(Family::Sv, Feature::Base);
    let p = SvParams::new(0.0, -1.0, 0.95, 0.04);
    let truth = p.to_vec(&spec);
    let (mut ok, mut corr) = (0, Vec::new());
    for s in 0..C6_SEEDS {
        let (y, h) = simulate_sv_with_states(&spec, &p, 2000, 6000 + s).unwrap();
        let mc = McmcConfig { burn_in: 500, draws: 1500, seed: s, thin_paths: 10 };
        let fit = fit_bayes(&spec, &y, &PriorConfig::default(), &mc).unwrap();
        ok += within_3sd(&fit, &truth) as usize;
        let vol = extract_volatility(&fit).unwrap();
        let true_vol: Vec<f64> = h.iter().map(|v| (0.5 * v).exp()).collect();
        corr.push(pearson(vol.values(), &true_vol));
    }
    let r = rate(ok, C6_SEEDS as usize);
    let mean_corr = corr.iter().sum::<f64>() / corr.len() as f64;
    Outcome {
        pass: r >= C6_MIN && mean_corr > C6_CORR,
        detail: format!(
            "SV recovery: {ok}/{C6_SEEDS} seeds within 3 sd (need >= {C6_MIN}); mean volatility correlation {mean_corr:.3} at T = 2000 (need > {C6_CORR})"
        ),
    }
}

// 7. Conjugate marginal-likelihood oracle and the Monte Carlo rate of the nse.
const C7_REPEATS: u64 = 50;
const C7_ABS: f64 = 0.05;
const C7_RATE_TOL: f64 = 0.20;

fn c7() -> Outcome {
    let mut ok = 0;
    let mut ratios = Vec::new();
    for s in 0..C7_REPEATS {
        let c = conjugate::conjugate(100, 5000, 7000 + s);
        let cfg = |n, seed| MarglikConfig { n_is_draws: n, seed, ..MarglikConfig::default() };
        let e = conjugate::estimate(&c, &cfg(5000, s));
        ok += ((e.log_ml - c.log_evidence).abs() <= C7_ABS.max(3.0 * e.nse)) as usize;
        let a = conjugate::estimate(&c, &cfg(1000, 100 + s));
        let b = conjugate::estimate(&c, &cfg(2000, 200 + s));
        ratios.push(b.nse / a.nse);
    }
    let ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let target = 0.5f64.sqrt();
    let rate_ok = (ratio / target - 1.0).abs() <= C7_RATE_TOL;
    Outcome {
        pass: ok == C7_REPEATS as usize && rate_ok,
        detail: format!(
            "marginal likelihood: {ok}/{C7_REPEATS} within max({C7_ABS}, 3 nse) of the closed form; nse ratio at 2x draws {ratio:.3} vs {target:.3} +- {:.0}%",
            100.0 * C7_RATE_TOL
        ),
    }
}

// 8. Model selection on data from a known variant.
const C8_SEEDS: u64 = 10;

fn log_ml(spec: ModelSpec, y: &Series, mc: &McmcConfig, seed: u64) -> Option<f64> {
    let prior = PriorConfig::default();
    let cfg = MarglikConfig {
        n_is_draws: 2000,
        inner_draws: 50,
        seed,
        proposal: ProposalFamily::FullCovariance,
        scale: 1.0,
    };
    marginal_likelihood(&fit_bayes(&spec, y, &prior, mc).unwrap(), y.values(), &prior, &cfg).ok().map(|e| e.log_ml)
}

/// Whether `a` is preferred; a degenerate estimate on either side is a miss.
fn prefers(a: Option<f64>, b: Option<f64>, degenerate: &mut usize) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a > b,
        _ => {
            *degenerate += 1;
            false
        }
    }
}

fn c8() -> Outcome {
    let (gt, g) = (ModelSpec::new(Family::Garch, Feature::StudentT), ModelSpec::new(Family::Garch, Feature::Base));
    let (sm, sb) = (ModelSpec::new(Family::Sv, Feature::Ma1), ModelSpec::new(Family::Sv, Feature::Base));
    let (mut garch_ok, mut sv_ok, mut degenerate) = (0, 0, 0);
    for s in 0..C8_SEEDS {
        let p = GarchParams { nu: 5.0, ..GarchParams::new(0.0, 0.1, 0.1, 0.8) };
        let y = simulate_garch(&gt, &p, 1500, 8000 + s).unwrap();
        let mc = McmcConfig { burn_in: 2000, draws: 3000, seed: s, thin_paths: 10 };
        garch_ok += prefers(log_ml(gt, &y, &mc, s), log_ml(g, &y, &mc, s), &mut degenerate) as usize;

        let p = SvParams { psi: 0.5, ..SvParams::new(0.0, -1.0, 0.95, 0.04) };
        let y = simulate_sv(&sm, &p, 1000, 8500 + s).unwrap();
        let mc = McmcConfig { burn_in: 1000, draws: 1500, seed: s, thin_paths: 10 };
        sv_ok += prefers(log_ml(sm, &y, &mc, s), log_ml(sb, &y, &mc, s), &mut degenerate) as usize;
    }
    Outcome {
        pass: garch_ok >= 8 && sv_ok >= 7,
        detail: format!("model selection: GARCH-t beats GARCH {garch_ok}/{C8_SEEDS} (need 8), SV-MA beats SV {sv_ok}/{C8_SEEDS} (need 7), {degenerate} comparisons with a degenerate IS estimate"),
    }
}

// 9. Diagnostic batteries.
fn c9() -> Outcome {
    let mut parts: Vec<(bool, String)> = Vec::new();

    let dims = 2..=2;
    let eps = EpsRule::TimesStd(0.7);
    let n = 200;
    let size = (0..n)
        .filter(|&s| bds_test(&series("x", normals("c9bds", s, 1000)), dims.clone(), eps).unwrap().per_dimension[0].p_value <= 0.05)
        .count();
    let garch = ModelSpec::new(Family::Garch, Feature::Base);
    let power = |gp: GarchParams| {
        let hits = (0..100)
            .filter(|&s| {
                let y = simulate_garch(&garch, &gp, 1000, 9000 + s).unwrap();
                bds_test(&y, dims.clone(), eps).unwrap().per_dimension[0].p_value <= 0.01
            })
            .count();
        rate(hits, 100)
    };
    let sz = rate(size, n as usize);
    let pw = power(GarchParams::new(0.0, 0.1, 0.2, 0.7));
    let weak = power(GarchParams::new(0.0, 0.1, 0.1, 0.8));
    parts.push((within(sz, 0.02, 0.10), format!("BDS size {sz:.3} [0.02, 0.10]")));
    parts.push((
        pw >= 0.90,
        format!("BDS power {pw:.2} >= 0.90 on GARCH(0.1, 0.2, 0.7), {weak:.2} on GARCH(0.1, 0.1, 0.8) not gated"),
    ));

    let rw = |s: u64| {
        let e = normals("c9rw", s, 500);
        let mut acc = 0.0;
        series("y", e.iter().map(|v| { acc += v; acc }).collect())
    };
    let ar = |s: u64| series("y", ar1("c9ar", s, 500, 0.5));
    let adf = |y: &Series| adf_test(y, Deterministic::Constant, 12, InfoCriterion::Sic).unwrap().rejects(0.05);
    let pp = |y: &Series| pp_test(y, Deterministic::Constant, Bandwidth::NeweyWestAuto).unwrap().rejects(0.05);
    let walks: Vec<Series> = (0..200).map(rw).collect();
    let ars: Vec<Series> = (0..200).map(ar).collect();
    for (name, test) in [("ADF", &adf as &dyn Fn(&Series) -> bool), ("PP", &pp)] {
        let keep = rate(walks.iter().filter(|y| !test(y)).count(), 200);
        let rej = rate(ars.iter().filter(|y| test(y)).count(), 200);
        parts.push((keep >= 0.90, format!("{name} non-rejection on random walks {keep:.3} >= 0.90")));
        parts.push((rej >= 0.95, format!("{name} power on AR(0.5) {rej:.3} >= 0.95")));
    }

    let tb = 200;
    let found = (0..100u64)
        .filter(|&s| {
            let mut y = ar1("c9pb", s, 400, 0.5);
            for v in &mut y[tb..] {
                *v += 4.0;
            }
            let y = series("y", y);
            let r = perron_break_test(&y).unwrap();
            let est = r.break_date.unwrap().ordinal() - y.start().ordinal();
            (est - tb as i64).abs() <= 6
        })
        .count();
    parts.push((found >= 80, format!("Perron break within 6 months {found}/100 >= 80")));

    let granger = |s: u64, b: f64| {
        let n = 2000;
        let x = ar1("c9gx", s, n, 0.5);
        let e = normals("c9ge", s, n);
        let mut y = vec![0.0; n];
        for t in 1..n {
            y[t] = 0.3 * y[t - 1] + b * x[t - 1] + e[t];
        }
        let m = fit_var(&[series("x", x), series("y", y)], 1).unwrap();
        granger_wald(&m, "x", "y").unwrap().p_value <= 0.05
    };
    let gs = rate((0..500).filter(|&s| granger(s, 0.0)).count(), 500);
    let gp = rate((0..500).filter(|&s| granger(10_000 + s, 0.4)).count(), 500);
    parts.push((within(gs, 0.02, 0.09), format!("Granger size {gs:.3} [0.02, 0.09]")));
    parts.push((gp >= 0.95, format!("Granger power {gp:.3} >= 0.95")));

    let (mut hj, mut dp) = (0, 0);
    for s in 0..200 {
        let x = series("x", normals("c9nx", s, 800));
        let y = series("y", normals("c9ny", s, 800));
        hj += (hj_test(&x, &y, 1, nonparam::DEFAULT_BANDWIDTH).unwrap().p_value <= 0.05) as usize;
        dp += (dp_test(&x, &y, 1, nonparam::Bandwidth::Fixed(nonparam::DEFAULT_BANDWIDTH)).unwrap().p_value <= 0.05) as usize;
    }
    let (hj, dp) = (rate(hj, 200), rate(dp, 200));
    parts.push((within(hj, 0.02, 0.10), format!("H&J size {hj:.3} [0.02, 0.10]")));
    parts.push((within(dp, 0.02, 0.10), format!("D&P size {dp:.3} [0.02, 0.10]")));

    Outcome {
        pass: parts.iter().all(|p| p.0),
        detail: format!(
            "diagnostics: {}",
            parts
                .iter()
                .map(|(ok, d)| if *ok { d.clone() } else { format!("{d} (FAIL)") })
                .collect::<Vec<_>>()
                .join("; ")
        ),
    }
}

// 10. Two golden-fixture runs give byte-identical files.
fn c10() -> Outcome {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/golden.toml");
    let lc = causvol_cli::LoadedConfig::from_path(&cfg).unwrap();
    let read = |dir: &Path| -> BTreeMap<String, Vec<u8>> {
        fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap() != causvol_cli::manifest::TIMINGS_FILE)
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
            .collect()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    causvol_cli::run(&lc, Some(a.path())).unwrap();
    causvol_cli::run(&lc, Some(b.path())).unwrap();
    let (fa, fb) = (read(a.path()), read(b.path()));
    let same = fa == fb;
    Outcome {
        pass: same && !fa.is_empty(),
        detail: format!("determinism: two golden runs, {} files, byte-identical: {same}", fa.len()),
    }
}

// 11. Soft replication scorecard, only with vintage data supplied.
const C11_ENV: &str = "CAUSVOL_REPLICATION_CSV";

fn c11() -> Option<Outcome> {
    let path = std::env::var(C11_ENV).ok()?;
    let lc_text = format!(
        "schema_version = 1\nseed = 1\n[data]\npath = {path:?}\ncpi = \"cpi\"\n\
         commodities = [{{ column = \"oil\" }}, {{ column = \"gold\" }}]\n\
         causes = [{{ column = \"pci\", name = \"partisan\", log = true }}]\n"
    );
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("replication.toml");
    fs::write(&cfg, lc_text).unwrap();
    let lc = causvol_cli::LoadedConfig::from_path(&cfg).unwrap();
    let raw = match causvol_cli::data::read(&lc) {
        Ok(r) => r,
        Err(_) => return Some(Outcome { pass: false, detail: format!("replication: cannot read {path}") }),
    };
    let ds = causvol_cli::data::build(&lc, raw).unwrap();
    let mut lines = Vec::new();
    let close = |got: f64, want: f64| ((got - want) / want).abs() <= 0.02;
    let table2 = [("gold", -0.064, 3.895, 89.468), ("oil", -0.119, 7.437, 280.452)];
    for (name, mean, sd, jb) in table2 {
        let s = ds.returns.iter().find(|s| s.name() == name).unwrap();
        let d = describe(s).unwrap();
        let ok = close(d.mean, mean) && close(d.std_dev, sd) && close(d.jarque_bera_stat, jb);
        lines.push(format!("{name} summary {}", if ok { "match" } else { "differs" }));
    }
    for (name, want) in [("oil", "2008m12"), ("gold", "1982m9")] {
        let s = ds.returns.iter().find(|s| s.name() == name).unwrap();
        let got = perron_break_test(s).unwrap().break_date.map(|d| d.label()).unwrap_or_default();
        lines.push(format!("{name} break {got} vs {want}"));
    }
    let pci = &ds.causes[0];
    let grid = QuantileGrid::deciles();
    for (name, tail) in [("oil", 0usize), ("gold", 8usize)] {
        let s = ds.returns.iter().find(|s| s.name() == name).unwrap();
        let (z, y) = causvol_cli::data::align(pci, s).unwrap();
        let t = causvol_core::quantile::causality_table(&y, &z, &[1], &grid, &SubsamplingConfig::default()).unwrap();
        let p = t.rows[0].per_tau[tail].outcome.p_value;
        lines.push(format!("{name} tail cell p = {p:.3}"));
    }
    Some(Outcome {
        pass: true,
        detail: format!("replication scorecard (non-gating): {}", lines.join("; ")),
    })
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(usize, fn() -> Outcome); 10] = [
        (1, c1),
        (2, c2),
        (3, c3),
        (4, c4),
        (5, c5),
        (6, c6),
        (7, c7),
        (8, c8),
        (9, c9),
        (10, c10),
    ];
    let filter: Option<usize> = std::env::var("CAUSVOL_CRITERION").ok().and_then(|v| v.parse().ok());
    let mut unexpected = Vec::new();
    for (id, f) in criteria {
        if filter.is_some_and(|k| k != id) {
            continue;
        }
        let t0 = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status} {} [{:.1}s]", o.detail, t0.elapsed().as_secs_f64());
        if !o.pass && !KNOWN_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    if filter.is_none_or(|k| k == 11) {
        match c11() {
            Some(o) => println!("criterion 11 REPORT {}", o.detail),
            None => println!("criterion 11 REPORT skipped: set {C11_ENV} to a CSV of the original data vintage"),
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
