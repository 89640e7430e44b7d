//! Dense univariate polynomials, Sturm sequences and exact-to-isolation
//! interval minimization.

use super::{PolyError, Polynomial, ZERO_TOL};

/// Isolating intervals are refined to this width.
pub const ISOLATION_WIDTH: f64 = 1e-10;

/// Dense univariate polynomial, ascending coefficients, no trailing zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly {
    coeffs: Vec<f64>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value together with `sum |c_i| |x|^i`, the scale used for sign decisions.
    fn eval_with_scale(&self, x: f64) -> (f64, f64) {
        let ax = x.abs();
        self.coeffs
            .iter()
            .rev()
            .fold((0.0, 0.0), |(v, s), &c| (v * x + c, s * ax + c.abs()))
    }

    fn sign_at(&self, x: f64) -> i8 {
        let (v, s) = self.eval_with_scale(x);
        if v.abs() <= ZERO_TOL * s {
            0
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn derivative(&self) -> UniPoly {
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Scales to unit max-abs coefficient and drops leading coefficients that
    /// are negligible relative to that scale.
    fn normalized(&self) -> UniPoly {
        let m = self.max_abs();
        if m == 0.0 {
            return UniPoly::new(Vec::new());
        }
        let mut c: Vec<f64> = self.coeffs.iter().map(|x| x / m).collect();
        while matches!(c.last(), Some(x) if x.abs() <= ZERO_TOL) {
            c.pop();
        }
        UniPoly::new(c)
    }

    /// Quotient and remainder of Euclidean division by `d` (assumed nonzero).
    fn div_rem(&self, d: &UniPoly) -> (UniPoly, UniPoly) {
        let n = self.coeffs.len();
        let m = d.coeffs.len();
        if n < m {
            return (UniPoly::new(Vec::new()), self.clone());
        }
        let lead = d.coeffs[m - 1];
        let mut r = self.coeffs.clone();
        let mut q = vec![0.0; n - m + 1];
        for k in (0..=n - m).rev() {
            let f = r[k + m - 1] / lead;
            q[k] = f;
            for j in 0..m {
                r[k + j] -= f * d.coeffs[j];
            }
            r[k + m - 1] = 0.0;
        }
        r.truncate(m - 1);
        (UniPoly::new(q), UniPoly::new(r))
    }

    /// Remainder after dividing by `d`, with both operands normalized first
    /// and coefficients below the zero threshold discarded.
    fn normalized_rem(&self, d: &UniPoly) -> UniPoly {
        let a = self.normalized();
        let b = d.normalized();
        let (_, r) = a.div_rem(&b);
        let mut c = r.coeffs;
        for x in c.iter_mut() {
            if x.abs() <= ZERO_TOL {
                *x = 0.0;
            }
        }
        UniPoly::new(c)
    }

    /// Monic-free GCD by the Euclidean algorithm on normalized remainders.
    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let mut a = self.normalized();
        let mut b = other.normalized();
        while !b.is_zero() {
            let r = a.normalized_rem(&b);
            a = b;
            b = r.normalized();
        }
        a
    }

    /// `self / gcd(self, self')`: same distinct roots, all simple.
    pub fn square_free(&self) -> UniPoly {
        let p = self.normalized();
        if p.degree() < 2 {
            return p;
        }
        let g = p.gcd(&p.derivative());
        if g.degree() == 0 {
            return p;
        }
        let (q, _) = p.div_rem(&g);
        q.normalized()
    }

    pub fn to_polynomial(&self, var: &str) -> Polynomial {
        Polynomial::univariate(var, &self.coeffs)
    }
}

/// Sturm sequence of the square-free part of a polynomial.
#[derive(Debug, Clone)]
pub struct SturmChain {
    chain: Vec<UniPoly>,
}

impl SturmChain {
    pub fn new(p: &UniPoly) -> Result<Self, PolyError> {
        if p.normalized().is_zero() {
            return Err(PolyError::ZeroPolynomial);
        }
        let p0 = p.square_free();
        let mut chain = vec![p0.clone()];
        let mut prev = p0.clone();
        let mut cur = p0.derivative().normalized();
        while !cur.is_zero() {
            chain.push(cur.clone());
            let r = prev.normalized_rem(&cur);
            prev = cur;
            cur = r.normalized().scaled(-1.0);
        }
        Ok(SturmChain { chain })
    }

    /// The square-free polynomial the chain is built from.
    pub fn base(&self) -> &UniPoly {
        &self.chain[0]
    }

    fn variations(&self, x: f64) -> usize {
        let mut count = 0;
        let mut last = 0i8;
        for p in &self.chain {
            let s = p.sign_at(x);
            if s != 0 {
                if last != 0 && s != last {
                    count += 1;
                }
                last = s;
            }
        }
        count
    }

    /// Number of distinct real roots in `(a, b]`.
    pub fn count(&self, a: f64, b: f64) -> usize {
        self.variations(a).saturating_sub(self.variations(b))
    }

    /// Isolates every distinct root in `(a, b]` to an interval of width at
    /// most `width`, returning the midpoints in ascending order.
    pub fn isolate(&self, a: f64, b: f64, width: f64) -> Vec<f64> {
        let base = self.base();
        let mut roots = Vec::new();
        let mut stack = vec![(a, b, self.count(a, b))];
        while let Some((lo, hi, n)) = stack.pop() {
            if n == 0 {
                continue;
            }
            if hi - lo <= width {
                roots.push(0.5 * (lo + hi));
                continue;
            }
            if n == 1 {
                let (slo, shi) = (base.sign_at(lo), base.sign_at(hi));
                if shi == 0 {
                    roots.push(hi);
                    continue;
                }
                if slo != 0 && slo != shi {
                    roots.push(bisect_sign_change(base, lo, hi, slo, width));
                    continue;
                }
            }
            let mid = 0.5 * (lo + hi);
            let left = self.count(lo, mid);
            stack.push((mid, hi, n.saturating_sub(left)));
            stack.push((lo, mid, left));
        }
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        roots
    }
}

impl UniPoly {
    fn scaled(&self, k: f64) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|c| c * k).collect())
    }
}

fn bisect_sign_change(p: &UniPoly, mut lo: f64, mut hi: f64, slo: i8, width: f64) -> f64 {
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        // raw floating sign: the root is already isolated
        let v = p.eval(mid);
        if v == 0.0 {
            return mid;
        }
        let s = if v > 0.0 { 1 } else { -1 };
        if s == slo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn univariate_of(p: &Polynomial) -> Result<UniPoly, PolyError> {
    p.to_univariate().map(|(_, u)| u)
}

/// Number of distinct real roots of a univariate polynomial in `(a, b]`.
pub fn sturm_root_count(p: &Polynomial, a: f64, b: f64) -> Result<usize, PolyError> {
    if !(a < b) {
        return Err(PolyError::InvalidInterval { lo: a, hi: b });
    }
    let u = univariate_of(p)?;
    Ok(SturmChain::new(&u)?.count(a, b))
}

/// Minimum of a univariate polynomial on `[a, b]` and the smallest point
/// attaining it, from the endpoints and the isolated critical points.
pub fn min_on_interval(p: &Polynomial, a: f64, b: f64) -> Result<(f64, f64), PolyError> {
    if !(a <= b) {
        return Err(PolyError::InvalidInterval { lo: a, hi: b });
    }
    Ok(UniPoly::min_on(&univariate_of(p)?, a, b))
}

impl UniPoly {
    /// See [`min_on_interval`].
    pub fn min_on(&self, a: f64, b: f64) -> (f64, f64) {
        let mut candidates = vec![a];
        if b > a {
            let d = self.derivative();
            if d.normalized().degree() > 0 {
                if let Ok(chain) = SturmChain::new(&d) {
                    candidates.extend(
                        chain
                            .isolate(a, b, ISOLATION_WIDTH)
                            .into_iter()
                            .filter(|&r| r > a && r < b),
                    );
                }
            }
            candidates.push(b);
        }
        let mut best = (self.eval(a), a);
        for &x in &candidates[1..] {
            let v = self.eval(x);
            if v < best.0 - ZERO_TOL * (1.0 + best.0.abs()) {
                best = (v, x);
            }
        }
        best
    }
}
