//! Symmetric matrices with two sub-diagonals and their Cholesky factors.

#[derive(Debug, Clone, PartialEq)]
pub struct Band2 {
    /// `d0[i] = A[i][i]`, `d1[i] = A[i][i-1]`, `d2[i] = A[i][i-2]`.
    pub d0: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl Band2 {
    pub fn zeros(n: usize) -> Self {
        Self {
            d0: vec![0.0; n],
            d1: vec![0.0; n],
            d2: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.d0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d0.is_empty()
    }

    /// Principal sub-matrix on `range`.
    pub fn sub(&self, range: std::ops::Range<usize>) -> Band2 {
        let mut b = Band2 {
            d0: self.d0[range.clone()].to_vec(),
            d1: self.d1[range.clone()].to_vec(),
            d2: self.d2[range].to_vec(),
        };
        for i in 0..b.len().min(2) {
            b.d2[i] = 0.0;
        }
        if let Some(v) = b.d1.first_mut() {
            *v = 0.0;
        }
        b
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.d0[i] * x[i];
                if i >= 1 {
                    s += self.d1[i] * x[i - 1];
                }
                if i >= 2 {
                    s += self.d2[i] * x[i - 2];
                }
                if i + 1 < n {
                    s += self.d1[i + 1] * x[i + 1];
                }
                if i + 2 < n {
                    s += self.d2[i + 2] * x[i + 2];
                }
                s
            })
            .collect()
    }

    pub fn quad(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.len() {
            s += self.d0[i] * x[i] * x[i];
            if i >= 1 {
                s += 2.0 * self.d1[i] * x[i] * x[i - 1];
            }
            if i >= 2 {
                s += 2.0 * self.d2[i] * x[i] * x[i - 2];
            }
        }
        s
    }

    pub fn cholesky(&self) -> Option<BandChol> {
        let n = self.len();
        let mut l0 = vec![0.0; n];
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        for i in 0..n {
            if i >= 2 {
                l2[i] = self.d2[i] / l0[i - 2];
            }
            if i >= 1 {
                let c = if i >= 2 { l2[i] * l1[i - 1] } else { 0.0 };
                l1[i] = (self.d1[i] - c) / l0[i - 1];
            }
            let d = self.d0[i] - l1[i] * l1[i] - l2[i] * l2[i];
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            l0[i] = d.sqrt();
        }
        Some(BandChol { l0, l1, l2 })
    }
}

/// Lower factor `L` with `A = L L'`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandChol {
    l0: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl BandChol {
    pub fn log_det(&self) -> f64 {
        2.0 * self.l0.iter().map(|v| v.ln()).sum::<f64>()
    }

    /// Solves `L x = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            if i >= 1 {
                s -= self.l1[i] * x[i - 1];
            }
            if i >= 2 {
                s -= self.l2[i] * x[i - 2];
            }
            x[i] = s / self.l0[i];
        }
        x
    }

    /// Solves `L' x = b`.
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.l1[i + 1] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.l2[i + 2] * x[i + 2];
            }
            x[i] = s / self.l0[i];
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }
}
