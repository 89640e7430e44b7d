//! Finite-horizon bound on the probability that the lifted certificate
//! reaches level `eta` within `T` transitions:
//!
//! ```text
//! delta = 1 - (1 - alpha/eta) (1 - gamma/eta)^T                         if eta >= gamma / (1 - kappa)
//! delta = (alpha/eta) kappa^T + gamma / ((1 - kappa) eta) (1 - kappa^T)   otherwise
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::Acbc;

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error("kappa = {0} must satisfy 0 < kappa < 1")]
    Kappa(f64),
    #[error("eta = {eta} must exceed alpha = {alpha}")]
    Levels { alpha: f64, eta: f64 },
    #[error("alpha = {0} must be >= 0")]
    Alpha(f64),
    #[error("gamma = {0} must be >= 0")]
    Gamma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundCase {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub alpha: f64,
    pub eta: f64,
    pub kappa: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyBound {
    /// `raw` clamped to `[0, 1]`.
    pub delta: f64,
    pub raw: f64,
    pub case: BoundCase,
    pub horizon: u64,
    pub inputs: BoundInputs,
}

impl SafetyBound {
    /// Lower bound on the probability of staying below `eta`.
    pub fn safety(&self) -> f64 {
        1.0 - self.delta
    }
}

pub fn compute_delta(
    alpha: f64,
    eta: f64,
    kappa: f64,
    gamma: f64,
    horizon: u64,
) -> Result<SafetyBound, BoundError> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(BoundError::Kappa(kappa));
    }
    if !(alpha >= 0.0) {
        return Err(BoundError::Alpha(alpha));
    }
    if !(gamma >= 0.0) {
        return Err(BoundError::Gamma(gamma));
    }
    if !(eta > alpha && eta.is_finite()) {
        return Err(BoundError::Levels { alpha, eta });
    }
    let t = i32::try_from(horizon).ok();
    let pow = |b: f64| match t {
        Some(t) => b.powi(t),
        None => b.powf(horizon as f64),
    };
    let (case, raw) = if eta >= gamma / (1.0 - kappa) {
        (
            BoundCase::First,
            1.0 - (1.0 - alpha / eta) * pow(1.0 - gamma / eta),
        )
    } else {
        let kt = pow(kappa);
        (
            BoundCase::Second,
            alpha / eta * kt + gamma / ((1.0 - kappa) * eta) * (1.0 - kt),
        )
    };
    Ok(SafetyBound {
        delta: raw.clamp(0.0, 1.0),
        raw,
        case,
        horizon,
        inputs: BoundInputs {
            alpha,
            eta,
            kappa,
            gamma,
        },
    })
}

pub fn bound_for(acbc: &Acbc, horizon: u64) -> Result<SafetyBound, BoundError> {
    compute_delta(acbc.alpha, acbc.eta, acbc.kappa, acbc.gamma, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_reported_guarantee() {
        let b = compute_delta(0.13, 4.4, 0.99, 0.0012, 100).unwrap();
        assert_eq!(b.case, BoundCase::First);
        assert!((b.safety() - 0.9443).abs() < 1e-4);
    }

    #[test]
    fn second_and_third_reported_guarantees() {
        let b = compute_delta(1.0032 * 0.12, 1.0005 * 4.6, 0.99, 0.003, 100).unwrap();
        assert!((b.safety() - 0.9124).abs() < 1e-4);
        let b = compute_delta(0.9975 * 0.16, 0.9825 * 4.2, 0.997, 0.003, 100).unwrap();
        assert!((b.safety() - 0.8939).abs() < 1e-4);
    }

    #[test]
    fn second_branch_clamps() {
        let b = compute_delta(0.1, 1.0, 0.5, 0.6, 10).unwrap();
        assert_eq!(b.case, BoundCase::Second);
        let oracle = 0.1 * 0.5f64.powi(10) + 1.2 * (1.0 - 0.5f64.powi(10));
        assert!((b.raw - oracle).abs() < 1e-15);
        assert!((b.raw - 1.1988).abs() < 1e-3);
        assert_eq!(b.delta, 1.0);
    }

    #[test]
    fn vanishing_constants_give_zero() {
        for (eta, kappa, t) in [(1.0, 0.5, 0), (4.4, 0.99, 100), (0.1, 0.01, 7)] {
            assert_eq!(compute_delta(0.0, eta, kappa, 0.0, t).unwrap().delta, 0.0);
        }
    }

    #[test]
    fn zero_horizon_is_level_ratio_in_both_branches() {
        let a = compute_delta(0.13, 4.4, 0.99, 0.0012, 0).unwrap();
        assert_eq!(a.case, BoundCase::First);
        assert!((a.raw - 0.13 / 4.4).abs() < 1e-15);
        let b = compute_delta(0.1, 1.0, 0.5, 0.6, 0).unwrap();
        assert_eq!(b.case, BoundCase::Second);
        assert!((b.raw - 0.1).abs() < 1e-15);
    }

    #[test]
    fn tie_selects_first_branch() {
        // gamma / (1 - kappa) = 0.5 exactly
        let b = compute_delta(0.1, 0.5, 0.5, 0.25, 3).unwrap();
        assert_eq!(b.case, BoundCase::First);
    }

    #[test]
    fn preconditions_name_constraint() {
        assert_eq!(compute_delta(0.1, 1.0, 1.0, 0.0, 1), Err(BoundError::Kappa(1.0)));
        assert_eq!(
            compute_delta(1.0, 1.0, 0.5, 0.0, 1),
            Err(BoundError::Levels { alpha: 1.0, eta: 1.0 })
        );
        assert_eq!(compute_delta(0.1, 1.0, 0.5, -1.0, 1), Err(BoundError::Gamma(-1.0)));
        assert_eq!(compute_delta(-0.1, 1.0, 0.5, 0.0, 1), Err(BoundError::Alpha(-0.1)));
    }
}
