//! Lifting a certificate of the hybrid system to the counter-augmented system:
//! `B(x, z) = beta(z) * bbar(x)`.
//!
//! | regime | condition                 | beta(z)                      |
//! |--------|---------------------------|------------------------------|
//! | R1     | kappa1 > 0, kappa2 < 1    | 1                            |
//! | R2     | kappa1 > 0, kappa2 >= 1   | exp(kappa1 tau eps1 z)       |
//! | R3     | kappa1 <= 0, kappa2 < 1   | kappa2^(z / eps2)            |
//!
//! `kappa1 <= 0` with `kappa2 >= 1` has no construction.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{jump_expectation, CbcCandidate, CertifyError};
use crate::model::{JumpParams, ShsModel};
use crate::poly::{nonneg_on_box, IntervalBox, Polynomial, Verdict};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("unsupported regime: kappa1 = {kappa1}, kappa2 = {kappa2} (no construction for kappa1 <= 0 with kappa2 >= 1)")]
    UnsupportedRegime { kappa1: f64, kappa2: f64 },
    #[error("eps1 = {0} must lie in (0, 1)")]
    Eps1(f64),
    #[error("eps2 = {eps2} must exceed q2 = {q2}")]
    Eps2 { eps2: f64, q2: u32 },
    #[error("level separation violated: beta_eta * etabar = {eta} <= beta_alpha * alphabar = {alpha}")]
    LevelSeparation { alpha: f64, eta: f64 },
    #[error("jump contraction violated at z = {z}: ln(kappa2) - kappa1 tau z = {value} >= 0")]
    JumpContraction { z: u32, value: f64 },
    #[error("kappa = {0} outside (0, 1)")]
    KappaRange(f64),
    #[error("counter z = {z} outside 0..={q2}")]
    CounterOutOfRange { z: u32, q2: u32 },
    #[error(transparent)]
    Certify(#[from] CertifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    R1,
    R2,
    R3,
}

impl Regime {
    pub fn select(kappa1: f64, kappa2: f64) -> Result<Regime, AugmentError> {
        match (kappa1 > 0.0, kappa2 >= 1.0) {
            (true, false) if kappa2 > 0.0 => Ok(Regime::R1),
            (true, true) => Ok(Regime::R2),
            (false, false) if kappa2 > 0.0 => Ok(Regime::R3),
            _ => Err(AugmentError::UnsupportedRegime { kappa1, kappa2 }),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

pub const DEFAULT_EPS1: f64 = 0.1;

/// `q2 + 1`.
pub fn default_eps2(jump: &JumpParams) -> f64 {
    jump.q2 as f64 + 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acbc {
    pub base: CbcCandidate,
    pub regime: Regime,
    pub jump: JumpParams,
    pub eps1: f64,
    pub eps2: f64,
    pub alpha: f64,
    pub eta: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub beta_alpha: f64,
    pub beta_eta: f64,
}

fn beta_formula(regime: Regime, c: &CbcCandidate, tau: f64, eps1: f64, eps2: f64, z: f64) -> f64 {
    match regime {
        Regime::R1 => 1.0,
        Regime::R2 => (c.kappa1 * tau * eps1 * z).exp(),
        Regime::R3 => c.kappa2.powf(z / eps2),
    }
}

pub fn construct_acbc(
    cand: &CbcCandidate,
    jump: &JumpParams,
    eps1: f64,
    eps2: f64,
) -> Result<Acbc, AugmentError> {
    if !(eps1 > 0.0 && eps1 < 1.0) {
        return Err(AugmentError::Eps1(eps1));
    }
    if !(eps2 > jump.q2 as f64) {
        return Err(AugmentError::Eps2 { eps2, q2: jump.q2 });
    }
    let regime = Regime::select(cand.kappa1, cand.kappa2)?;
    let (k1, k2, g1, g2) = (cand.kappa1, cand.kappa2, cand.gamma1, cand.gamma2);
    let tau = jump.tau;
    let (q1, q2) = (jump.q1 as f64, jump.q2 as f64);
    let decay = (-k1 * tau).exp();

    let (beta_alpha, beta_eta, kappa, gamma) = match regime {
        Regime::R1 => (1.0, 1.0, decay.max(k2), (decay * tau * g1).max(g2)),
        Regime::R2 => (
            (k1 * tau * eps1 * q2).exp(),
            (k1 * tau * eps1 * q1).exp(),
            (-k1 * tau * (1.0 - eps1))
                .exp()
                .max((-k1 * tau * eps1 * q1).exp() * k2),
            ((k1 * tau * eps1 * q2).exp() * decay * tau * g1).max(g2),
        ),
        Regime::R3 => (
            k2.powf(q1 / eps2),
            k2.powf(q2 / eps2),
            (decay * k2.powf(1.0 / eps2)).max(k2.powf((eps2 - q2) / eps2)),
            (k2.powf(1.0 / eps2) * decay * tau * g1).max(g2),
        ),
    };

    let alpha = beta_alpha * cand.alphabar;
    let eta = beta_eta * cand.etabar;
    if !(eta > alpha) {
        return Err(AugmentError::LevelSeparation { alpha, eta });
    }
    for z in jump.q1..=jump.q2 {
        let value = k2.ln() - k1 * tau * z as f64;
        if !(value < 0.0) {
            return Err(AugmentError::JumpContraction { z, value });
        }
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(AugmentError::KappaRange(kappa));
    }

    Ok(Acbc {
        base: cand.clone(),
        regime,
        jump: *jump,
        eps1,
        eps2,
        alpha,
        eta,
        kappa,
        gamma,
        beta_alpha,
        beta_eta,
    })
}

impl Acbc {
    pub fn beta(&self, z: u32) -> Result<f64, AugmentError> {
        if z > self.jump.q2 {
            return Err(AugmentError::CounterOutOfRange { z, q2: self.jump.q2 });
        }
        Ok(self.beta_unchecked(z))
    }

    fn beta_unchecked(&self, z: u32) -> f64 {
        beta_formula(
            self.regime,
            &self.base,
            self.jump.tau,
            self.eps1,
            self.eps2,
            z as f64,
        )
    }

    /// `B(x, z)` for a fixed counter value.
    pub fn certificate_at(&self, z: u32) -> Result<Polynomial, AugmentError> {
        Ok(self.base.bbar.scale(self.beta(z)?))
    }

    /// `B(x, z)` at a physical state given in the certificate's variable order.
    pub fn value(&self, x: &[(&str, f64)], z: u32) -> Result<f64, AugmentError> {
        let b = self.base.bbar.eval(x).map_err(CertifyError::from)?;
        Ok(self.beta(z)? * b)
    }

    /// Scalar one-step inequalities that make the lifted supermartingale
    /// condition follow from the base conditions, for every admissible
    /// `(scenario, z)`: `(coefficient slack, constant slack)`, both `>= 0`
    /// when the construction is sound.
    ///
    /// Flow, `z <= q2 - 1`: `kappa beta(z) - beta(z+1) e^{-kappa1 tau}` and
    /// `gamma - beta(z+1) e^{-kappa1 tau} tau gamma1`.
    /// Jump, `q1 <= z <= q2`: `kappa beta(z) - beta(0) kappa2` and
    /// `gamma - beta(0) gamma2`.
    pub fn one_step_slacks(&self) -> Vec<StepSlack> {
        let c = &self.base;
        let tau = self.jump.tau;
        let decay = (-c.kappa1 * tau).exp();
        let mut out = Vec::new();
        for z in 0..=self.jump.q2 {
            let bz = self.beta_unchecked(z);
            if z < self.jump.q2 {
                let next = self.beta_unchecked(z + 1) * decay;
                out.push(StepSlack {
                    scenario: crate::model::Scenario::Flow,
                    z,
                    coefficient: self.kappa * bz - next,
                    constant: self.gamma - next * tau * c.gamma1,
                });
            }
            if self.jump.q1 <= z {
                let b0 = self.beta_unchecked(0);
                out.push(StepSlack {
                    scenario: crate::model::Scenario::Jump,
                    z,
                    coefficient: self.kappa * bz - b0 * c.kappa2,
                    constant: self.gamma - b0 * c.gamma2,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSlack {
    pub scenario: crate::model::Scenario,
    pub z: u32,
    pub coefficient: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcbcCondition {
    Initial,
    Unsafe,
    Flow,
    Jump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcbcEntry {
    pub condition: AcbcCondition,
    /// Counter value the check was made at.
    pub z: u32,
    pub verdict: Verdict,
    pub margin: f64,
    pub witness: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcbcReport {
    /// `eta > alpha`; when false no polynomial checks are run.
    pub levels_separated: bool,
    pub entries: Vec<AcbcEntry>,
}

impl AcbcReport {
    pub fn verdict(&self) -> Verdict {
        if !self.levels_separated {
            return Verdict::Fails;
        }
        let vs: Vec<Verdict> = self.entries.iter().map(|e| e.verdict).collect();
        if vs.contains(&Verdict::Fails) {
            Verdict::Fails
        } else if vs.contains(&Verdict::Inconclusive) {
            Verdict::Inconclusive
        } else {
            Verdict::Holds
        }
    }

    pub fn worst(&self, condition: AcbcCondition) -> Option<&AcbcEntry> {
        self.entries
            .iter()
            .filter(|e| e.condition == condition)
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
    }
}

/// Checks the lifted certificate directly on the augmented system. The flow
/// step uses the analytic bound `E[bbar(x(tau))] <= e^{-kappa1 tau}(bbar(x) + tau gamma1)`,
/// which presumes the base flow condition; the jump step uses the exact
/// conditional expectation of `bbar` after the jump.
pub fn check_acbc_conditions(
    model: &ShsModel,
    acbc: &Acbc,
    domain: &IntervalBox,
) -> Result<AcbcReport, AugmentError> {
    if !(acbc.eta > acbc.alpha) {
        return Ok(AcbcReport {
            levels_separated: false,
            entries: Vec::new(),
        });
    }
    let c = &acbc.base;
    let b = &c.bbar;
    let tau = acbc.jump.tau;
    let decay = (-c.kappa1 * tau).exp();
    let jexp = jump_expectation(model, b, &c.nu_jump)?;
    let mut entries = Vec::new();
    let mut push = |condition, z, p: &Polynomial, set: &IntervalBox| -> Result<(), AugmentError> {
        let r = nonneg_on_box(p, set).map_err(CertifyError::from)?;
        entries.push(AcbcEntry {
            condition,
            z,
            verdict: r.verdict,
            margin: r.margin,
            witness: r.witness,
        });
        Ok(())
    };

    let b0 = acbc.beta(0)?;
    push(
        AcbcCondition::Initial,
        0,
        &b.scale(-b0).add_constant(acbc.alpha),
        &model.initial_set,
    )?;
    for z in 0..=acbc.jump.q2 {
        let bz = acbc.beta(z)?;
        push(
            AcbcCondition::Unsafe,
            z,
            &b.scale(bz).add_constant(-acbc.eta),
            &model.unsafe_set,
        )?;
    }
    for z in 0..=acbc.jump.q2 {
        let bz = acbc.beta(z)?;
        let rhs = b.scale(acbc.kappa * bz).add_constant(acbc.gamma);
        if z < acbc.jump.q2 {
            let next = acbc.beta(z + 1)? * decay;
            let lhs = b.scale(next).add_constant(next * tau * c.gamma1);
            push(AcbcCondition::Flow, z, &(&rhs - &lhs), domain)?;
        }
        if acbc.jump.q1 <= z {
            push(AcbcCondition::Jump, z, &(&rhs - &jexp.scale(b0)), domain)?;
        }
    }
    Ok(AcbcReport {
        levels_separated: true,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_study::{CaseStudy, EPS1, EPS2};

    fn build(case: &CaseStudy) -> Acbc {
        construct_acbc(&case.candidate(), &case.model().jump, EPS1, EPS2).unwrap()
    }

    #[test]
    fn regimes_of_the_three_cases() {
        let r: Vec<Regime> = CaseStudy::all().iter().map(|c| build(c).regime).collect();
        assert_eq!(r, vec![Regime::R1, Regime::R2, Regime::R3]);
    }

    #[test]
    fn first_case_constants() {
        let a = build(&CaseStudy::first());
        assert_eq!((a.beta_alpha, a.beta_eta), (1.0, 1.0));
        // max{e^{-0.001}, 0.99}: the exponential wins
        assert!((a.kappa - (-0.001f64).exp()).abs() < 1e-15);
        assert!((a.gamma - 0.0012).abs() < 1e-15);
        assert_eq!((a.alpha, a.eta), (0.13, 4.4));
    }

    #[test]
    fn second_case_constants() {
        let a = build(&CaseStudy::all()[1]);
        assert!((a.beta_alpha - (0.04547f64 * 0.1 * 0.1 * 7.0).exp()).abs() < 1e-15);
        assert!((a.beta_alpha - 1.0032).abs() < 1e-3);
        assert!((a.beta_eta - 1.0005).abs() < 1e-3);
        // the jump term e^{-kappa1 tau eps1 q1} kappa2 dominates e^{-kappa1 tau (1 - eps1)}
        assert!((a.kappa - (-0.04547f64 * 0.1 * 0.1).exp() * 1.00001).abs() < 1e-15);
        assert!(a.kappa > (-0.04547f64 * 0.1 * 0.9).exp());
        assert_eq!(a.gamma, 0.003);
    }

    #[test]
    fn third_case_constants() {
        let a = build(&CaseStudy::all()[2]);
        assert!((a.beta_alpha - 0.98f64.powf(1.0 / 8.0)).abs() < 1e-15);
        assert!((a.beta_eta - 0.98f64.powf(7.0 / 8.0)).abs() < 1e-15);
        assert!((a.beta_eta - 0.9825).abs() < 1e-3);
        assert!((a.kappa - 0.997).abs() < 1e-3);
        assert_eq!(a.gamma, 0.003);
        assert!((a.beta(7).unwrap() - 0.98248).abs() < 1e-5);
        assert!(matches!(
            a.beta(8),
            Err(AugmentError::CounterOutOfRange { z: 8, q2: 7 })
        ));
    }

    #[test]
    fn unsupported_regime() {
        let mut c = CaseStudy::first().candidate();
        c.kappa1 = -0.1;
        c.kappa2 = 1.5;
        let err = construct_acbc(&c, &CaseStudy::first().model().jump, 0.1, 8.0).unwrap_err();
        assert!(matches!(err, AugmentError::UnsupportedRegime { .. }));
    }

    #[test]
    fn jump_contraction_names_offending_counter() {
        let mut c = CaseStudy::all()[1].candidate();
        // ln(1.01) ~ 0.00995 exceeds kappa1 tau z = 0.004547 z for z = 1, 2
        c.kappa2 = 1.01;
        let err = construct_acbc(&c, &CaseStudy::first().model().jump, 0.1, 8.0).unwrap_err();
        assert!(matches!(err, AugmentError::JumpContraction { z: 1, .. }), "{err}");
    }

    #[test]
    fn level_separation_failure() {
        let mut c = CaseStudy::all()[2].candidate();
        c.etabar = 0.161;
        let err = construct_acbc(&c, &CaseStudy::first().model().jump, 0.1, 8.0).unwrap_err();
        assert!(matches!(err, AugmentError::LevelSeparation { .. }));
    }

    #[test]
    fn eps_preconditions() {
        let c = CaseStudy::first().candidate();
        let j = CaseStudy::first().model().jump;
        assert!(matches!(construct_acbc(&c, &j, 1.0, 8.0), Err(AugmentError::Eps1(_))));
        assert!(matches!(construct_acbc(&c, &j, 0.1, 7.0), Err(AugmentError::Eps2 { .. })));
        assert_eq!(default_eps2(&j), 8.0);
    }

    #[test]
    fn one_step_slacks_nonnegative_for_cases() {
        for case in CaseStudy::all() {
            for s in build(&case).one_step_slacks() {
                assert!(s.coefficient >= -1e-15, "case {} {s:?}", case.id);
                assert!(s.constant >= -1e-15, "case {} {s:?}", case.id);
            }
        }
    }

    #[test]
    fn beta_monotone_by_regime() {
        let r2 = build(&CaseStudy::all()[1]);
        let r3 = build(&CaseStudy::all()[2]);
        for z in 0..7 {
            assert!(r2.beta(z + 1).unwrap() >= r2.beta(z).unwrap());
            assert!(r3.beta(z + 1).unwrap() <= r3.beta(z).unwrap());
        }
        assert_eq!(r2.beta(0).unwrap(), 1.0);
        // beta_alpha / beta_eta are the extremes over the jump counters
        let jumps = |a: &Acbc| (1..=7).map(|z| a.beta(z).unwrap()).collect::<Vec<_>>();
        let j2 = jumps(&r2);
        assert_eq!(r2.beta_alpha, j2.iter().cloned().fold(f64::MIN, f64::max));
        assert_eq!(r2.beta_eta, j2.iter().cloned().fold(f64::MAX, f64::min));
        let j3 = jumps(&r3);
        assert_eq!(r3.beta_alpha, j3.iter().cloned().fold(f64::MIN, f64::max));
        assert_eq!(r3.beta_eta, j3.iter().cloned().fold(f64::MAX, f64::min));
    }

    #[test]
    fn first_case_level_checks_reduce_to_base_checks() {
        let case = CaseStudy::first();
        let m = case.model();
        let a = build(&case);
        let r = check_acbc_conditions(&m, &a, &m.state_set).unwrap();
        let base = crate::certify::check_cbc(&m, &case.candidate(), &m.state_set).unwrap();
        let init = r.worst(AcbcCondition::Initial).unwrap();
        assert_eq!(init.margin, base.get(crate::certify::ConditionId::Initial).margin);
        let uns = r.worst(AcbcCondition::Unsafe).unwrap();
        assert_eq!(uns.margin, base.get(crate::certify::ConditionId::Unsafe).margin);
        assert_eq!(init.verdict, Verdict::Holds);
        assert_eq!(uns.verdict, Verdict::Holds);
    }

    #[test]
    fn unseparated_levels_fail_precondition() {
        let case = CaseStudy::first();
        let m = case.model();
        let mut a = build(&case);
        a.eta = a.alpha;
        let r = check_acbc_conditions(&m, &a, &m.state_set).unwrap();
        assert!(!r.levels_separated);
        assert_eq!(r.verdict(), Verdict::Fails);
    }

    #[test]
    fn second_case_last_jump_step_scalar_comparison() {
        let a = build(&CaseStudy::all()[1]);
        let s = a
            .one_step_slacks()
            .into_iter()
            .find(|s| s.scenario == crate::model::Scenario::Jump && s.z == 7)
            .unwrap();
        // kappa2 * bbar + gamma2 <= kappa * beta(7) * bbar + gamma for bbar in [0, max]
        for bv in [0.0, 1.0, 5.0, 20.0] {
            let lhs = 1.00001 * bv + 0.003;
            let rhs = a.kappa * a.beta(7).unwrap() * bv + a.gamma;
            assert!(lhs <= rhs);
        }
        assert!(s.coefficient > 0.0);
    }

    #[test]
    fn acbc_json_round_trip() {
        let a = build(&CaseStudy::all()[1]);
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"regime\":\"R2\""));
        let back: Acbc = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
    }
}
