//! Regenerates `data/sample.csv`: synthetic monthly oil and gold prices, a
//! consumer price index and a political-conflict index, 1981-01 to 2017-10.
//!
//! Returns follow an SV-MA process. The lagged conflict index scales the
//! lower-tail shocks of oil and the upper-tail shocks of gold.
//!
//! cargo run -p causvol-cli --example make_sample_data > crates/cli/data/sample.csv

use causvol_core::rng::stream;
use causvol_core::Period;
use rand::Rng;
use rand_distr::StandardNormal;

const SEED: u64 = 20171031;
const N: usize = 442;
const TAIL: f64 = 0.8416;

struct Commodity {
    start: f64,
    mu_h: f64,
    phi: f64,
    sigma_h: f64,
    psi: f64,
    lower: bool,
}

fn prices(c: &Commodity, pci_z: &[f64], label: &str) -> Vec<f64> {
    let mut rng = stream(SEED, label, 0);
    let mut h = c.mu_h;
    let mut e_prev = 0.0;
    let mut log_p = c.start.ln();
    let mut out = vec![c.start];
    for t in 1..N {
        h = c.mu_h + c.phi * (h - c.mu_h) + c.sigma_h * rng.sample::<f64, _>(StandardNormal);
        let mut u: f64 = rng.sample(StandardNormal);
        let amp = 1.0 + 0.9 * pci_z[t - 1].tanh().max(0.0);
        if (c.lower && u < -TAIL) || (!c.lower && u > TAIL) {
            u *= amp;
        }
        let e = (h / 2.0).exp() * u;
        log_p += (e + c.psi * e_prev) / 100.0;
        e_prev = e;
        out.push(log_p.exp());
    }
    out
}

fn main() {
    let mut rng = stream(SEED, "pci", 0);
    let (m, phi, sd) = (4.627, 0.9, 0.266 * (1.0f64 - 0.81).sqrt());
    let mut x = m;
    let mut log_pci = Vec::with_capacity(N);
    for _ in 0..N {
        x = m + phi * (x - m) + sd * rng.sample::<f64, _>(StandardNormal);
        log_pci.push(x);
    }
    let pci_z: Vec<f64> = log_pci.iter().map(|v| (v - m) / 0.266).collect();

    let mut rng = stream(SEED, "cpi", 0);
    let mut cpi = Vec::with_capacity(N);
    let mut lc = 88.0f64.ln();
    for _ in 0..N {
        lc += 0.0025 + 0.002 * rng.sample::<f64, _>(StandardNormal);
        cpi.push(lc.exp());
    }

    let oil = Commodity {
        start: 38.0,
        mu_h: 3.9,
        phi: 0.95,
        sigma_h: 0.25,
        psi: 0.3,
        lower: true,
    };
    let gold = Commodity {
        start: 560.0,
        mu_h: 2.6,
        phi: 0.95,
        sigma_h: 0.2,
        psi: 0.2,
        lower: false,
    };
    let real_oil = prices(&oil, &pci_z, "oil");
    let real_gold = prices(&gold, &pci_z, "gold");

    let start = Period::new(1981, 1).expect("valid month");
    println!("date,oil,gold,cpi,pci");
    for t in 0..N {
        let nominal = cpi[t] / cpi[0];
        println!(
            "{},{:.4},{:.4},{:.3},{:.3}",
            start.offset(t as i64),
            real_oil[t] * nominal,
            real_gold[t] * nominal,
            cpi[t],
            log_pci[t].exp()
        );
    }
}
