//! Oracles shared by the property and acceptance suites. Nothing here calls
//! into the library's algebra or root finding.
#![allow(dead_code)]

use rand::Rng;

/// Univariate polynomial known by its factors: `lead * prod (x - r) * prod ((x - a)^2 + b^2)`.
#[derive(Debug, Clone)]
pub struct FactoredPoly {
    pub lead: f64,
    pub roots: Vec<f64>,
    pub complex_pairs: Vec<(f64, f64)>,
}

impl FactoredPoly {
    pub fn degree(&self) -> usize {
        self.roots.len() + 2 * self.complex_pairs.len()
    }

    /// Ascending coefficients by repeated convolution.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut c = vec![self.lead];
        let mul = |c: &[f64], f: &[f64]| {
            let mut out = vec![0.0; c.len() + f.len() - 1];
            for (i, a) in c.iter().enumerate() {
                for (j, b) in f.iter().enumerate() {
                    out[i + j] += a * b;
                }
            }
            out
        };
        for &r in &self.roots {
            c = mul(&c, &[-r, 1.0]);
        }
        for &(a, b) in &self.complex_pairs {
            c = mul(&c, &[a * a + b * b, -2.0 * a, 1.0]);
        }
        c
    }

    /// Roots in `(lo, hi]`.
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        self.roots.iter().filter(|&&r| r > lo && r <= hi).count()
    }
}

pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Random polynomial of degree `1..=max_degree` whose real roots lie in
/// `[lo, hi]`, pairwise more than `sep` apart. Roots come singly or as close
/// pairs; longer clusters are not resolvable in double precision.
pub fn random_factored<R: Rng>(rng: &mut R, max_degree: usize, lo: f64, hi: f64, sep: f64) -> FactoredPoly {
    let degree = rng.random_range(1..=max_degree);
    let n_pairs = rng.random_range(0..=degree / 2);
    let n_real = degree - 2 * n_pairs;
    let far = (hi - lo) / 100.0;
    let mut roots: Vec<f64> = Vec::with_capacity(n_real);
    while roots.len() < n_real {
        let r = rng.random_range(lo..hi);
        if roots.iter().any(|&o| (o - r).abs() <= far) {
            continue;
        }
        roots.push(r);
        if roots.len() < n_real && rng.random_bool(0.5) {
            let partner = r + sep * rng.random_range(1.5..5.0);
            if partner <= hi && roots[..roots.len() - 1].iter().all(|&o| (o - partner).abs() > far) {
                roots.push(partner);
            }
        }
    }
    let complex_pairs = (0..n_pairs)
        .map(|_| (rng.random_range(lo..hi), rng.random_range(0.05..2.0)))
        .collect();
    let mag = rng.random_range(0.5..2.0);
    FactoredPoly {
        lead: if rng.random_bool(0.5) { mag } else { -mag },
        roots,
        complex_pairs,
    }
}

/// Sign changes of `f` over `n` equally spaced points of `[a, b]`, skipping exact zeros.
pub fn sign_changes(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> usize {
    let mut last = 0.0f64;
    let mut changes = 0;
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        let v = f(x);
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            changes += 1;
        }
        last = v;
    }
    changes
}

/// Sample mean and its standard error.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Dense bivariate polynomial `sum c[i][j] x^i s^j`.
#[derive(Debug, Clone)]
pub struct Bivariate {
    pub coeffs: Vec<Vec<f64>>,
}

impl Bivariate {
    pub fn random<R: Rng>(rng: &mut R, deg_x: usize, deg_s: usize) -> Self {
        let coeffs = (0..=deg_x)
            .map(|_| {
                (0..=deg_s)
                    .map(|_| {
                        if rng.random_bool(0.7) {
                            rng.random_range(-2.0..2.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Bivariate { coeffs }
    }

    pub fn eval(&self, x: f64, s: f64) -> f64 {
        let row: Vec<f64> = self.coeffs.iter().map(|c| horner(c, s)).collect();
        horner(&row, x)
    }

    pub fn terms(&self) -> Vec<(Vec<u32>, f64)> {
        let mut out = Vec::new();
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                out.push((vec![i as u32, j as u32], c));
            }
        }
        out
    }
}

/// Exceedance bound evaluated with one multiplication per step.
pub fn delta_by_steps(alpha: f64, eta: f64, kappa: f64, gamma: f64, horizon: u32) -> f64 {
    if eta >= gamma / (1.0 - kappa) {
        let mut survive = 1.0 - alpha / eta;
        for _ in 0..horizon {
            survive *= 1.0 - gamma / eta;
        }
        1.0 - survive
    } else {
        let mut kt = 1.0;
        for _ in 0..horizon {
            kt *= kappa;
        }
        alpha / eta * kt + gamma / ((1.0 - kappa) * eta) * (1.0 - kt)
    }
}
