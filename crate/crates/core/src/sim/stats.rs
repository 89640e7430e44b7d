use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Exact two-sided binomial interval for `successes` out of `trials` at the
/// given confidence level.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> Interval {
    assert!(trials > 0 && successes <= trials);
    assert!(confidence > 0.0 && confidence < 1.0);
    let a = 1.0 - confidence;
    let (k, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0)
            .expect("positive shapes")
            .inverse_cdf(a / 2.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k)
            .expect("positive shapes")
            .inverse_cdf(1.0 - a / 2.0)
    };
    Interval { lo, hi }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_successes_closed_form() {
        // upper bound solves (1 - p)^n = a / 2
        let ci = clopper_pearson(0, 1000, 0.99);
        assert_eq!(ci.lo, 0.0);
        let oracle = 1.0 - 0.005f64.powf(1.0 / 1000.0);
        assert!((ci.hi - oracle).abs() < 1e-9, "{} vs {oracle}", ci.hi);
        assert!((ci.hi - 0.0053).abs() < 1e-4);
    }

    #[test]
    fn all_successes_closed_form() {
        let ci = clopper_pearson(50, 50, 0.95);
        assert_eq!(ci.hi, 1.0);
        assert!((ci.lo - 0.025f64.powf(1.0 / 50.0)).abs() < 1e-9);
    }

    #[test]
    fn interior_values_bracket_estimate() {
        // reference values from the binomial tail definition
        let ci = clopper_pearson(10, 100, 0.95);
        assert!((ci.lo - 0.04900).abs() < 1e-4, "{ci:?}");
        assert!((ci.hi - 0.17622).abs() < 1e-4, "{ci:?}");
    }
}
