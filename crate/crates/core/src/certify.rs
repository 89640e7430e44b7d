//! Control barrier certificate conditions.
//!
//! A candidate `bbar` with constants `(kappa1, kappa2, gamma1, gamma2,
//! alphabar, etabar)` and feedback laws for the flow and jump inputs is a
//! certificate when, on the verification domain,
//!
//! ```text
//! bbar <= alphabar                      on X0
//! bbar >= etabar                        on Xu
//! L bbar <= -kappa1 bbar + gamma1       (flow, nu = nu_flow(x))
//! E[bbar(f2)] <= kappa2 bbar + gamma2   (jump, nu = nu_jump(x))
//! bbar >= 0
//! ```
//!
//! where `L` is the generator of the jump diffusion:
//! `grad(bbar) f1 + 1/2 tr(sigma sigma^T hess(bbar)) + sum_j lambda_j (bbar(x + rho e_j) - bbar(x))`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ShsModel;
use crate::poly::{nonneg_on_box, IntervalBox, NonnegReport, PolyError, Polynomial, Verdict};

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("candidate invariant violated: {0}")]
    Invariant(&'static str),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbcCandidate {
    pub bbar: Polynomial,
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub alphabar: f64,
    pub etabar: f64,
    pub nu_flow: Vec<Polynomial>,
    pub nu_jump: Vec<Polynomial>,
}

impl CbcCandidate {
    /// Sign constraints on the constants. Nonnegativity of `bbar` itself is a
    /// checked condition, not part of this.
    pub fn validate(&self) -> Result<(), CertifyError> {
        let finite = [
            self.kappa1,
            self.kappa2,
            self.gamma1,
            self.gamma2,
            self.alphabar,
            self.etabar,
        ]
        .iter()
        .all(|c| c.is_finite());
        if !finite {
            return Err(CertifyError::Invariant("constants are finite"));
        }
        if !(self.kappa2 > 0.0) {
            return Err(CertifyError::Invariant("kappa2 > 0"));
        }
        if self.gamma1 < 0.0 || self.gamma2 < 0.0 {
            return Err(CertifyError::Invariant("gamma1, gamma2 >= 0"));
        }
        if self.alphabar < 0.0 {
            return Err(CertifyError::Invariant("alphabar >= 0"));
        }
        if !(self.etabar > self.alphabar) {
            return Err(CertifyError::Invariant("etabar > alphabar"));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

fn controller_subs<'a>(
    model: &'a ShsModel,
    controllers: &'a [Polynomial],
) -> Result<Vec<(&'a str, &'a Polynomial)>, CertifyError> {
    if controllers.len() != model.m() {
        return Err(CertifyError::Dimension(format!(
            "{} controllers for {} inputs",
            controllers.len(),
            model.m()
        )));
    }
    Ok(model
        .input_vars
        .iter()
        .map(String::as_str)
        .zip(controllers)
        .collect())
}

fn check_dims(model: &ShsModel) -> Result<(), CertifyError> {
    let n = model.n();
    if model.f1.len() != n || model.f2.len() != n || model.sigma.len() != n || model.rho.len() != n
    {
        return Err(CertifyError::Dimension(format!(
            "dynamics must have {n} rows"
        )));
    }
    if model.rho.iter().any(|r| r.len() != model.lambda.len()) {
        return Err(CertifyError::Dimension(
            "rho columns must match lambda".into(),
        ));
    }
    Ok(())
}

fn over_state(model: &ShsModel, p: Polynomial) -> Result<Polynomial, CertifyError> {
    let mut vars = model.state_vars.clone();
    for v in p.active_vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    Ok(p.with_vars(&vars)?)
}

/// Generator with the input left symbolic: a polynomial in `(x, nu)`.
pub fn generator_symbolic(model: &ShsModel, bbar: &Polynomial) -> Result<Polynomial, CertifyError> {
    check_dims(model)?;
    let xs = &model.state_vars;
    let grad: Vec<Polynomial> = xs.iter().map(|v| bbar.derivative(v)).collect();

    let mut out = Polynomial::zero(xs);
    for (g, f) in grad.iter().zip(&model.f1) {
        out = &out + &(g * f);
    }

    // 1/2 tr(sigma sigma^T H) = 1/2 sum_{i,k} (sum_c sigma_ic sigma_kc) d2B/dx_i dx_k
    for i in 0..xs.len() {
        for (k, xk) in xs.iter().enumerate() {
            let mut cov = Polynomial::zero(xs);
            for (a, b) in model.sigma[i].iter().zip(&model.sigma[k]) {
                cov = &cov + &(a * b);
            }
            if cov.is_zero() {
                continue;
            }
            let h = grad[i].derivative(xk);
            out = &out + &(&cov * &h).scale(0.5);
        }
    }

    for (j, &rate) in model.lambda.iter().enumerate() {
        if rate == 0.0 {
            continue;
        }
        let shifted: Vec<Polynomial> = xs
            .iter()
            .enumerate()
            .map(|(i, v)| &Polynomial::var(v) + &model.rho[i][j])
            .collect();
        let subs: Vec<(&str, &Polynomial)> = xs.iter().map(String::as_str).zip(&shifted).collect();
        let diff = &bbar.substitute_all(&subs) - bbar;
        out = &out + &diff.scale(rate);
    }
    over_state(model, out)
}

/// Generator of `bbar` under the flow feedback `nu_flow`: a polynomial in `x`.
pub fn generator(
    model: &ShsModel,
    bbar: &Polynomial,
    nu_flow: &[Polynomial],
) -> Result<Polynomial, CertifyError> {
    let subs = controller_subs(model, nu_flow)?;
    let sym = generator_symbolic(model, bbar)?;
    over_state(model, sym.substitute_all(&subs))
}

/// `E[bbar(f2(x, nu, s))]` over the jump noise with the input left symbolic.
pub fn jump_expectation_symbolic(
    model: &ShsModel,
    bbar: &Polynomial,
) -> Result<Polynomial, CertifyError> {
    check_dims(model)?;
    let subs: Vec<(&str, &Polynomial)> = model
        .state_vars
        .iter()
        .map(String::as_str)
        .zip(&model.f2)
        .collect();
    let composed = bbar.substitute_all(&subs);
    let order = model
        .noise_vars
        .iter()
        .map(|v| composed.degree_in(v) as usize)
        .max()
        .unwrap_or(0);
    let moments = model.noise_moments(order);
    let refs: Vec<(&str, &crate::poly::NoiseMoments)> =
        moments.iter().map(|(v, m)| (v.as_str(), m)).collect();
    over_state(model, composed.expect(&refs)?)
}

/// `E[bbar(f2(x, nu_jump(x), s)) | x]`: a polynomial in `x`.
pub fn jump_expectation(
    model: &ShsModel,
    bbar: &Polynomial,
    nu_jump: &[Polynomial],
) -> Result<Polynomial, CertifyError> {
    let subs = controller_subs(model, nu_jump)?;
    let sym = jump_expectation_symbolic(model, bbar)?;
    over_state(model, sym.substitute_all(&subs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionId {
    Initial,
    Unsafe,
    Flow,
    Jump,
    Nonneg,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditionId::Initial => "initial",
            ConditionId::Unsafe => "unsafe",
            ConditionId::Flow => "flow",
            ConditionId::Jump => "jump",
            ConditionId::Nonneg => "nonneg",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub verdict: Verdict,
    pub margin: f64,
    pub witness: BTreeMap<String, f64>,
}

impl ConditionReport {
    fn from_nonneg(condition: ConditionId, r: NonnegReport) -> Self {
        ConditionReport {
            condition,
            verdict: r.verdict,
            margin: r.margin,
            witness: r.witness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbcReport {
    pub conditions: Vec<ConditionReport>,
}

impl CbcReport {
    pub fn get(&self, id: ConditionId) -> &ConditionReport {
        self.conditions
            .iter()
            .find(|c| c.condition == id)
            .expect("all five conditions are reported")
    }

    /// Fails if any condition fails, inconclusive if any is inconclusive.
    pub fn verdict(&self) -> Verdict {
        let vs: Vec<Verdict> = self.conditions.iter().map(|c| c.verdict).collect();
        if vs.contains(&Verdict::Fails) {
            Verdict::Fails
        } else if vs.contains(&Verdict::Inconclusive) {
            Verdict::Inconclusive
        } else {
            Verdict::Holds
        }
    }

    pub fn min_margin(&self) -> f64 {
        self.conditions
            .iter()
            .map(|c| c.margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// The five defining polynomials, each required to be nonnegative on its set.
pub struct ConditionPolynomials {
    pub initial: Polynomial,
    pub unsafe_: Polynomial,
    pub flow: Polynomial,
    pub jump: Polynomial,
    pub nonneg: Polynomial,
}

pub fn condition_polynomials(
    model: &ShsModel,
    cand: &CbcCandidate,
) -> Result<ConditionPolynomials, CertifyError> {
    let b = &cand.bbar;
    let gen = generator(model, b, &cand.nu_flow)?;
    let jexp = jump_expectation(model, b, &cand.nu_jump)?;
    Ok(ConditionPolynomials {
        initial: b.scale(-1.0).add_constant(cand.alphabar),
        unsafe_: b.add_constant(-cand.etabar),
        flow: (&gen.scale(-1.0) - &b.scale(cand.kappa1)).add_constant(cand.gamma1),
        jump: (&b.scale(cand.kappa2) - &jexp).add_constant(cand.gamma2),
        nonneg: b.clone(),
    })
}

/// Checks all five conditions; `domain` is where the flow, jump and
/// nonnegativity conditions are required (normally the state set).
pub fn check_cbc(
    model: &ShsModel,
    cand: &CbcCandidate,
    domain: &IntervalBox,
) -> Result<CbcReport, CertifyError> {
    let polys = condition_polynomials(model, cand)?;
    let checks = [
        (ConditionId::Initial, &polys.initial, &model.initial_set),
        (ConditionId::Unsafe, &polys.unsafe_, &model.unsafe_set),
        (ConditionId::Flow, &polys.flow, domain),
        (ConditionId::Jump, &polys.jump, domain),
        (ConditionId::Nonneg, &polys.nonneg, domain),
    ];
    let mut conditions = Vec::with_capacity(5);
    for (id, p, set) in checks {
        conditions.push(ConditionReport::from_nonneg(id, nonneg_on_box(p, set)?));
    }
    Ok(CbcReport { conditions })
}

/// Multipliers for the sum-of-squares form of the conditions. Set multipliers
/// pair with the box inequalities `(x_i - lo)(hi - x_i) >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SosMultipliers {
    pub l0: Vec<Polynomial>,
    pub lu: Vec<Polynomial>,
    pub l: Vec<Polynomial>,
    pub l_nu: Vec<Polynomial>,
    pub lhat: Vec<Polynomial>,
    pub lhat_nu: Vec<Polynomial>,
    /// Input set `U`; `None` leaves the input unconstrained.
    pub input_set: Option<IntervalBox>,
}

impl SosMultipliers {
    /// All-zero multipliers with an unconstrained input set.
    pub fn zero(model: &ShsModel) -> Self {
        let z = |k: usize| vec![Polynomial::constant(0.0); k];
        SosMultipliers {
            l0: z(model.initial_set.dim()),
            lu: z(model.unsafe_set.dim()),
            l: z(model.state_set.dim()),
            l_nu: Vec::new(),
            lhat: z(model.state_set.dim()),
            lhat_nu: Vec::new(),
            input_set: None,
        }
    }
}

/// The four expressions that must be sums of squares, as polynomials in
/// `(x, nu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SosExpressions {
    pub initial: Polynomial,
    pub unsafe_: Polynomial,
    pub flow: Polynomial,
    pub jump: Polynomial,
}

fn dot(name: &str, l: &[Polynomial], g: &[Polynomial]) -> Result<Polynomial, CertifyError> {
    if l.len() != g.len() {
        return Err(CertifyError::Dimension(format!(
            "multiplier `{name}` has {} entries, set has {} inequalities",
            l.len(),
            g.len()
        )));
    }
    Ok(l.iter()
        .zip(g)
        .fold(Polynomial::constant(0.0), |acc, (a, b)| &acc + &(a * b)))
}

pub fn assemble_sos(
    model: &ShsModel,
    cand: &CbcCandidate,
    mult: &SosMultipliers,
) -> Result<SosExpressions, CertifyError> {
    let b = &cand.bbar;
    let g0 = model.initial_set.inequalities();
    let gu = model.unsafe_set.inequalities();
    let g = model.state_set.inequalities();
    let gnu = mult
        .input_set
        .as_ref()
        .map(IntervalBox::inequalities)
        .unwrap_or_default();

    let controller_gap = |laws: &[Polynomial]| -> Result<Polynomial, CertifyError> {
        let subs = controller_subs(model, laws)?;
        Ok(subs.iter().fold(Polynomial::constant(0.0), |acc, (v, law)| {
            &acc + &(&Polynomial::var(v) - *law)
        }))
    };

    let initial = &(&b.scale(-1.0) - &dot("l0", &mult.l0, &g0)?).add_constant(cand.alphabar)
        + &Polynomial::zero(&model.state_vars);
    let unsafe_ = (b - &dot("lu", &mult.lu, &gu)?).add_constant(-cand.etabar);

    let gen = generator_symbolic(model, b)?;
    let flow = &(&(&gen.scale(-1.0) - &b.scale(cand.kappa1)).add_constant(cand.gamma1)
        - &controller_gap(&cand.nu_flow)?)
        - &(&dot("l", &mult.l, &g)? + &dot("l_nu", &mult.l_nu, &gnu)?);

    let jexp = jump_expectation_symbolic(model, b)?;
    let jump = &(&(&b.scale(cand.kappa2) - &jexp).add_constant(cand.gamma2)
        - &controller_gap(&cand.nu_jump)?)
        - &(&dot("lhat", &mult.lhat, &g)? + &dot("lhat_nu", &mult.lhat_nu, &gnu)?);

    Ok(SosExpressions {
        initial,
        unsafe_,
        flow,
        jump,
    })
}

impl SosExpressions {
    /// Substitutes the feedback laws for the inputs: flow law into the flow
    /// expression, jump law into the jump expression.
    pub fn close_loop(
        &self,
        model: &ShsModel,
        cand: &CbcCandidate,
    ) -> Result<SosExpressions, CertifyError> {
        let flow_subs = controller_subs(model, &cand.nu_flow)?;
        let jump_subs = controller_subs(model, &cand.nu_jump)?;
        Ok(SosExpressions {
            initial: self.initial.clone(),
            unsafe_: self.unsafe_.clone(),
            flow: over_state(model, self.flow.substitute_all(&flow_subs))?,
            jump: over_state(model, self.jump.substitute_all(&jump_subs))?,
        })
    }

    /// Nonnegativity of the closed-loop expressions: initial on X0, unsafe on
    /// Xu, flow and jump on `domain`.
    pub fn check(
        &self,
        model: &ShsModel,
        cand: &CbcCandidate,
        domain: &IntervalBox,
    ) -> Result<Vec<NonnegReport>, CertifyError> {
        let closed = self.close_loop(model, cand)?;
        Ok(vec![
            nonneg_on_box(&closed.initial, &model.initial_set)?,
            nonneg_on_box(&closed.unsafe_, &model.unsafe_set)?,
            nonneg_on_box(&closed.flow, domain)?,
            nonneg_on_box(&closed.jump, domain)?,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_study::CaseStudy;
    use crate::model::{JumpParams, NoiseSampler};

    fn x() -> Polynomial {
        Polynomial::var("x")
    }

    /// One-dimensional model with the given dynamics and the case-study sets.
    fn toy(f1: Polynomial, sigma: f64, rho: f64, lambda: f64, f2: Polynomial) -> ShsModel {
        let mut m = CaseStudy::first().model();
        m.f1 = vec![f1];
        m.sigma = vec![vec![Polynomial::constant(sigma)]];
        m.rho = vec![vec![Polynomial::constant(rho)]];
        m.lambda = vec![lambda];
        m.f2 = vec![f2];
        m.noise = vec![NoiseSampler::default()];
        m.jump = JumpParams {
            tau: 0.1,
            q1: 1,
            q2: 7,
        };
        m
    }

    fn nu0() -> Vec<Polynomial> {
        vec![Polynomial::constant(0.0)]
    }

    #[test]
    fn generator_pure_drift() {
        let m = toy(x().scale(-1.0), 0.0, 0.0, 0.0, x());
        let g = generator(&m, &x().pow(2), &nu0()).unwrap();
        assert!(g.approx_eq(&x().pow(2).scale(-2.0), 1e-15), "{g}");
    }

    #[test]
    fn generator_linear_certificate_sees_only_poisson_shift() {
        let m = toy(Polynomial::constant(0.0), 3.0, 0.25, 0.8, x());
        let g = generator(&m, &x(), &nu0()).unwrap();
        assert!(g.approx_eq(&Polynomial::constant(0.8 * 0.25), 1e-15), "{g}");
    }

    #[test]
    fn generator_case_one_at_origin() {
        let case = CaseStudy::first();
        let m = case.model();
        let c = case.candidate();
        let g = generator(&m, &c.bbar, &c.nu_flow).unwrap();
        let b = |x: f64| c.bbar.eval(&[("x", x)]).unwrap();
        // drift at 0 is b1 * 3 = 1.5, sigma^2 / 2 = 0.18
        let oracle = -0.0849 * 1.5 + 0.18 * (2.0 * 0.0814) + 0.5 * (b(0.5) - b(0.0));
        let v = g.eval(&[("x", 0.0)]).unwrap();
        assert!((v - oracle).abs() < 1e-12);
        assert!((v + 0.1112).abs() < 2e-3);
    }

    #[test]
    fn generator_rejects_wrong_controller_count() {
        let case = CaseStudy::first();
        let m = case.model();
        let err = generator(&m, &x(), &[]).unwrap_err();
        assert!(matches!(err, CertifyError::Dimension(_)));
    }

    #[test]
    fn jump_expectation_examples() {
        let s = Polynomial::var("varsigma");
        let m = toy(Polynomial::constant(0.0), 0.0, 0.0, 0.0, &x() + &s);
        let e = jump_expectation(&m, &x().pow(2), &nu0()).unwrap();
        assert!(e.approx_eq(&x().pow(2).add_constant(1.0), 1e-15), "{e}");

        let m = toy(Polynomial::constant(0.0), 0.0, 0.0, 0.0, Polynomial::constant(0.0));
        let bbar = Polynomial::univariate("x", &[2.0, 1.0, 3.0]);
        let e = jump_expectation(&m, &bbar, &nu0()).unwrap();
        assert!(e.approx_eq(&Polynomial::constant(2.0), 0.0));
    }

    #[test]
    fn jump_expectation_case_one_degree_and_origin_value() {
        let case = CaseStudy::first();
        let m = case.model();
        let c = case.candidate();
        let e = jump_expectation(&m, &c.bbar, &c.nu_jump).unwrap();
        assert_eq!(e.degree(), 12);
        // E[bbar(0.156 + 0.5 s)] via Gaussian moments, written out by hand
        let coeffs = [0.0369, -0.0849, 0.0814, -0.0345, 0.0054];
        let mu: f64 = 0.156;
        let moments = [1.0, 0.0, 0.25, 0.0, 3.0 * 0.0625];
        let mut oracle = 0.0;
        for (k, &ck) in coeffs.iter().enumerate() {
            for j in 0..=k {
                let binom = (1..=j).fold(1.0, |b, i| b * (k - i + 1) as f64 / i as f64);
                oracle += ck * binom * mu.powi((k - j) as i32) * moments[j];
            }
        }
        assert!((e.eval(&[("x", 0.0)]).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn case_one_level_set_conditions_hold() {
        let case = CaseStudy::first();
        let m = case.model();
        let r = check_cbc(&m, &case.candidate(), &m.state_set).unwrap();
        for id in [ConditionId::Initial, ConditionId::Unsafe, ConditionId::Nonneg] {
            assert_eq!(r.get(id).verdict, Verdict::Holds, "{id}");
        }
        let unsafe_margin = r.get(ConditionId::Unsafe).margin;
        assert!((unsafe_margin - 0.1631).abs() < 1e-3);
        assert_eq!(r.get(ConditionId::Unsafe).witness["x"], 7.0);
    }

    #[test]
    fn raised_unsafe_level_fails_at_left_end() {
        let case = CaseStudy::first();
        let m = case.model();
        let mut c = case.candidate();
        c.etabar = 5.0;
        let r = check_cbc(&m, &c, &m.state_set).unwrap();
        let u = r.get(ConditionId::Unsafe);
        assert_eq!(u.verdict, Verdict::Fails);
        assert_eq!(u.witness["x"], 7.0);
        assert!((u.margin - (4.5631 - 5.0)).abs() < 1e-4);
    }

    #[test]
    fn zero_certificate_fails_unsafe_condition() {
        let case = CaseStudy::first();
        let m = case.model();
        let mut c = case.candidate();
        c.bbar = Polynomial::zero(&["x"]);
        c.alphabar = 0.0;
        c.etabar = 1.0;
        let r = check_cbc(&m, &c, &m.state_set).unwrap();
        assert_eq!(r.get(ConditionId::Unsafe).verdict, Verdict::Fails);
        assert_eq!(r.verdict(), Verdict::Fails);
    }

    #[test]
    fn candidate_invariants() {
        let mut c = CaseStudy::first().candidate();
        assert!(c.validate().is_ok());
        c.etabar = c.alphabar;
        assert!(matches!(c.validate(), Err(CertifyError::Invariant("etabar > alphabar"))));
        let mut c = CaseStudy::first().candidate();
        c.kappa2 = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn sos_initial_with_zero_multipliers_is_level_gap() {
        let case = CaseStudy::first();
        let m = case.model();
        let c = case.candidate();
        let sos = assemble_sos(&m, &c, &SosMultipliers::zero(&m)).unwrap();
        let expected = c.bbar.scale(-1.0).add_constant(c.alphabar);
        assert!(sos.initial.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn sos_flow_closed_loop_matches_generator() {
        let case = CaseStudy::first();
        let m = case.model();
        let c = case.candidate();
        let sos = assemble_sos(&m, &c, &SosMultipliers::zero(&m)).unwrap();
        // with nu free the controller gap is present
        assert!(sos.flow.vars().contains(&"nu".to_string()));
        let closed = sos.close_loop(&m, &c).unwrap();
        let gen = generator(&m, &c.bbar, &c.nu_flow).unwrap();
        let expected = (&gen.scale(-1.0) - &c.bbar.scale(0.01)).add_constant(0.0015);
        assert!(closed.flow.approx_eq(&expected, 1e-12), "{}", closed.flow);
        let jexp = jump_expectation(&m, &c.bbar, &c.nu_jump).unwrap();
        let expected = (&c.bbar.scale(0.99) - &jexp).add_constant(0.0012);
        assert!(closed.jump.approx_eq(&expected, 1e-12));
    }

    #[test]
    fn sos_set_multipliers_enter_with_box_inequalities() {
        let case = CaseStudy::first();
        let m = case.model();
        let c = case.candidate();
        let mut mult = SosMultipliers::zero(&m);
        mult.l0 = vec![Polynomial::constant(0.1)];
        let sos = assemble_sos(&m, &c, &mult).unwrap();
        // at x = 0.75 the X0 inequality is 0.75 * 0.75
        let plain = c.alphabar - c.bbar.eval(&[("x", 0.75)]).unwrap();
        let v = sos.initial.eval(&[("x", 0.75)]).unwrap();
        assert!((v - (plain - 0.1 * 0.5625)).abs() < 1e-12);
        mult.l = vec![];
        assert!(matches!(
            assemble_sos(&m, &c, &mult),
            Err(CertifyError::Dimension(_))
        ));
    }
}
