//! Observation log-density `log p(y | h, theta)` with its gradient and a
//! nonnegative (clamped) negative Hessian in `h`.

use statrs::function::gamma::ln_gamma;

use super::SvParams;
use crate::spec::{Feature, ModelSpec};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub(crate) struct ObsModel<'a> {
    feature: Feature,
    p: SvParams,
    resid: Vec<f64>,
    y: &'a [f64],
    tconst: f64,
}

/// Gradient and negative Hessian; `nh1[i]` is the `(i, i-1)` entry.
pub(crate) struct ObsDerivs {
    pub grad: Vec<f64>,
    pub nh0: Vec<f64>,
    pub nh1: Vec<f64>,
}

impl<'a> ObsModel<'a> {
    pub(crate) fn new(spec: &ModelSpec, p: &SvParams, y: &'a [f64]) -> Self {
        let resid = if spec.has(Feature::Ma1) {
            let mut e = Vec::with_capacity(y.len());
            let mut prev = 0.0;
            for &v in y {
                let cur = v - p.mu - p.psi * prev;
                e.push(cur);
                prev = cur;
            }
            e
        } else {
            y.iter().map(|v| v - p.mu).collect()
        };
        let tconst = if spec.has(Feature::StudentT) {
            ln_gamma(0.5 * (p.nu + 1.0)) - ln_gamma(0.5 * p.nu) - 0.5 * (std::f64::consts::PI * (p.nu - 2.0)).ln()
        } else {
            0.0
        };
        // rho = 0 is plain SV; the base formula keeps the two bit-identical
        let feature = if spec.feature == Feature::Leverage && p.rho == 0.0 {
            Feature::Base
        } else {
            spec.feature
        };
        Self {
            feature,
            p: *p,
            resid,
            y,
            tconst,
        }
    }

    /// Per-observation value and first two derivatives in `h_t`.
    fn term(&self, t: usize, h: f64) -> (f64, f64, f64) {
        let e = self.resid[t];
        let p = &self.p;
        match self.feature {
            Feature::InMean => {
                let e = e - p.lambda * h;
                let eh = (-h).exp();
                let s = e * e * eh;
                let v = -0.5 * (LN_2PI + h + s);
                let d1 = -0.5 + 0.5 * s + p.lambda * e * eh;
                let d2 = -0.5 * s - 2.0 * p.lambda * e * eh - p.lambda * p.lambda * eh;
                (v, d1, d2)
            }
            Feature::StudentT => {
                let s = e * e * (-h).exp() / (p.nu - 2.0);
                let v = self.tconst - 0.5 * h - 0.5 * (p.nu + 1.0) * s.ln_1p();
                let d1 = -0.5 + 0.5 * (p.nu + 1.0) * s / (1.0 + s);
                let d2 = -0.5 * (p.nu + 1.0) * s / ((1.0 + s) * (1.0 + s));
                (v, d1, d2)
            }
            Feature::Jump if p.kappa > 0.0 => {
                let ex = h.exp();
                let comp = |lw: f64, var: f64, r: f64| {
                    let a = lw - 0.5 * (LN_2PI + var.ln() + r * r / var);
                    let da = ex * (-0.5 / var + 0.5 * r * r / (var * var));
                    let d2a = da + ex * ex * (0.5 / (var * var) - r * r / (var * var * var));
                    (a, da, d2a)
                };
                let (a0, g0, k0) = comp((1.0 - p.kappa).ln(), ex, e);
                let (a1, g1, k1) = comp(p.kappa.ln(), ex + p.sigma_j * p.sigma_j, e - p.mu_j);
                let m = a0.max(a1);
                let (w0, w1) = ((a0 - m).exp(), (a1 - m).exp());
                let z = w0 + w1;
                let (p0, p1) = (w0 / z, w1 / z);
                let d1 = p0 * g0 + p1 * g1;
                let d2 = p0 * (k0 + g0 * g0) + p1 * (k1 + g1 * g1) - d1 * d1;
                (m + z.ln(), d1, d2)
            }
            _ => {
                let s = e * e * (-h).exp();
                (-0.5 * (LN_2PI + h + s), -0.5 + 0.5 * s, -0.5 * s)
            }
        }
    }

    fn leverage_term(&self, t: usize, h0: f64, h1: f64) -> (f64, f64, f64, f64, f64, f64) {
        let p = &self.p;
        let sig = p.sigma_h2.sqrt();
        let c = 1.0 - p.rho * p.rho;
        let u = (self.y[t] - p.mu) * (-0.5 * h0).exp();
        let eta = (h1 - p.mu_h) - p.phi * (h0 - p.mu_h);
        let r = u - p.rho * eta / sig;
        let ra = -0.5 * u + p.rho * p.phi / sig;
        let rb = -p.rho / sig;
        let v = -0.5 * (LN_2PI + c.ln() + h0) - r * r / (2.0 * c);
        let g0 = -0.5 - r * ra / c;
        let g1 = -r * rb / c;
        let n00 = (ra * ra + (0.25 * r * u).max(0.0)) / c;
        let n01 = ra * rb / c;
        let n11 = rb * rb / c;
        (v, g0, g1, n00, n01, n11)
    }

    pub(crate) fn value(&self, h: &[f64]) -> f64 {
        let n = h.len();
        if self.feature == Feature::Leverage {
            let mut s = 0.0;
            for t in 0..n - 1 {
                s += self.leverage_term(t, h[t], h[t + 1]).0;
            }
            let e = self.resid[n - 1];
            return s - 0.5 * (LN_2PI + h[n - 1] + e * e * (-h[n - 1]).exp());
        }
        (0..n).map(|t| self.term(t, h[t]).0).sum()
    }

    pub(crate) fn derivs(&self, h: &[f64]) -> ObsDerivs {
        let n = h.len();
        let mut d = ObsDerivs {
            grad: vec![0.0; n],
            nh0: vec![0.0; n],
            nh1: vec![0.0; n],
        };
        if self.feature == Feature::Leverage {
            for t in 0..n - 1 {
                let (_, g0, g1, n00, n01, n11) = self.leverage_term(t, h[t], h[t + 1]);
                d.grad[t] += g0;
                d.grad[t + 1] += g1;
                d.nh0[t] += n00;
                d.nh0[t + 1] += n11;
                d.nh1[t + 1] += n01;
            }
            let e = self.resid[n - 1];
            let s = e * e * (-h[n - 1]).exp();
            d.grad[n - 1] += -0.5 + 0.5 * s;
            d.nh0[n - 1] += 0.5 * s;
            return d;
        }
        for t in 0..n {
            let (_, g, k) = self.term(t, h[t]);
            d.grad[t] = g;
            d.nh0[t] = (-k).max(0.0);
        }
        d
    }
}
