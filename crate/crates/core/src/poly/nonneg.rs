//! Nonnegativity of a polynomial on a box.
//!
//! Polynomials with a single active variable are checked exactly through
//! [`min_on_interval`](super::min_on_interval). Anything else falls back to a
//! grid scan with a Lipschitz margin, which can only prove nonnegativity when
//! the grid minimum clears `L * h * sqrt(n) / 2`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{IntervalBox, PolyError, Polynomial, ZERO_TOL};

/// Total number of grid points used for multivariate checks.
const GRID_BUDGET: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegReport {
    pub verdict: Verdict,
    /// Minimum found over the box (exact for univariate, grid minimum otherwise).
    pub margin: f64,
    /// Point attaining `margin`.
    pub witness: BTreeMap<String, f64>,
}

impl NonnegReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

pub fn nonneg_on_box(p: &Polynomial, domain: &IntervalBox) -> Result<NonnegReport, PolyError> {
    let active = p.active_vars();
    for v in &active {
        if domain.get(v).is_none() {
            return Err(PolyError::UnknownVariable(v.clone()));
        }
    }
    // Variables of the box that p does not depend on sit at their lower bound.
    let mut witness: BTreeMap<String, f64> = domain
        .intervals()
        .iter()
        .map(|iv| (iv.var.clone(), iv.lo))
        .collect();

    if active.len() <= 1 {
        let (var, u) = p.to_univariate()?;
        let (margin, at) = match &var {
            Some(v) => {
                let iv = domain.get(v).unwrap();
                u.min_on(iv.lo, iv.hi)
            }
            None => (u.eval(0.0), 0.0),
        };
        if let Some(v) = var {
            witness.insert(v, at);
        }
        let verdict = if margin >= -ZERO_TOL {
            Verdict::Holds
        } else {
            Verdict::Fails
        };
        return Ok(NonnegReport {
            verdict,
            margin,
            witness,
        });
    }

    let q = p.with_vars(&domain.vars())?;
    let n = domain.dim();
    let per_dim = ((GRID_BUDGET as f64).powf(1.0 / n as f64).floor() as usize).max(2);
    let ivs = domain.intervals();
    let steps: Vec<f64> = ivs
        .iter()
        .map(|iv| (iv.hi - iv.lo) / (per_dim - 1) as f64)
        .collect();

    let mut idx = vec![0usize; n];
    let mut point = vec![0.0; n];
    let mut best = f64::INFINITY;
    let mut best_point = point.clone();
    loop {
        for d in 0..n {
            point[d] = ivs[d].lo + steps[d] * idx[d] as f64;
        }
        let v = q.eval_ordered(&point);
        if v < best {
            best = v;
            best_point.copy_from_slice(&point);
        }
        let mut d = 0;
        while d < n {
            idx[d] += 1;
            if idx[d] < per_dim {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == n {
            break;
        }
    }
    for (iv, &x) in ivs.iter().zip(&best_point) {
        witness.insert(iv.var.clone(), x);
    }

    let h = steps.iter().cloned().fold(0.0, f64::max);
    let slack = lipschitz_bound(&q, domain) * h * (n as f64).sqrt() / 2.0;
    let verdict = if best < -ZERO_TOL {
        Verdict::Fails
    } else if best >= slack {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    };
    Ok(NonnegReport {
        verdict,
        margin: best,
        witness,
    })
}

/// Euclidean norm bound on the gradient over the box, from coefficient sums
/// with every variable replaced by its largest magnitude.
fn lipschitz_bound(p: &Polynomial, domain: &IntervalBox) -> f64 {
    let bounds: Vec<f64> = domain
        .intervals()
        .iter()
        .map(|iv| iv.lo.abs().max(iv.hi.abs()))
        .collect();
    let mut grad = vec![0.0; bounds.len()];
    for (e, c) in p.terms() {
        for (i, g) in grad.iter_mut().enumerate() {
            if e[i] == 0 {
                continue;
            }
            let mut t = c.abs() * e[i] as f64;
            for (j, (&k, &b)) in e.iter().zip(&bounds).enumerate() {
                let k = if j == i { k - 1 } else { k };
                t *= b.powi(k as i32);
            }
            *g += t;
        }
    }
    grad.iter().map(|g| g * g).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(var: &str, lo: f64, hi: f64) -> IntervalBox {
        IntervalBox::interval(var, lo, hi).unwrap()
    }

    #[test]
    fn univariate_examples() {
        let p = Polynomial::univariate("x", &[1.0, -2.0, 1.0]);
        let r = nonneg_on_box(&p, &unit("x", 0.0, 8.0)).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert!(r.margin.abs() < 1e-15);

        let r = nonneg_on_box(&Polynomial::univariate("x", &[-3.0, 1.0]), &unit("x", 0.0, 8.0))
            .unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert_eq!(r.witness["x"], 0.0);
    }

    #[test]
    fn level_below_unsafe_value_fails() {
        let bbar = Polynomial::univariate("x", &[0.0369, -0.0849, 0.0814, -0.0345, 0.0054]);
        let p = bbar.scale(-1.0).add_constant(4.4);
        let r = nonneg_on_box(&p, &unit("x", 7.0, 8.0)).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        // bbar is increasing on [7, 8], so the deepest violation is at 8
        assert_eq!(r.witness["x"], 8.0);
        assert!(r.margin < 4.4 - 4.5631);
        let r = nonneg_on_box(&bbar.add_constant(-4.4), &unit("x", 7.0, 8.0)).unwrap();
        assert!(r.holds());
    }

    #[test]
    fn constant_polynomials() {
        let b = unit("x", 0.0, 1.0);
        assert!(nonneg_on_box(&Polynomial::constant(0.5), &b).unwrap().holds());
        assert_eq!(
            nonneg_on_box(&Polynomial::constant(-0.5), &b).unwrap().verdict,
            Verdict::Fails
        );
    }

    #[test]
    fn multivariate_tri_state() {
        let b = IntervalBox::new(&[("x", -1.0, 1.0), ("y", -1.0, 1.0)]).unwrap();
        let x = Polynomial::var("x");
        let y = Polynomial::var("y");
        let pos = (&x.pow(2) + &y.pow(2)).add_constant(1.0);
        assert_eq!(nonneg_on_box(&pos, &b).unwrap().verdict, Verdict::Holds);
        let neg = (&x * &y).add_constant(-0.5);
        let r = nonneg_on_box(&neg, &b).unwrap();
        assert_eq!(r.verdict, Verdict::Fails);
        assert!(neg.eval(&[("x", r.witness["x"]), ("y", r.witness["y"])]).unwrap() < 0.0);
        let touching = &x.pow(2) + &y.pow(2);
        assert_eq!(nonneg_on_box(&touching, &b).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn unknown_variable_is_error() {
        let p = Polynomial::var("y");
        assert!(nonneg_on_box(&p, &unit("x", 0.0, 1.0)).is_err());
    }
}
