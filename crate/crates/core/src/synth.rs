//! Randomized search for certificate candidates, using the exact checker as a
//! feasibility oracle.
//!
//! Each restart starts from a random point (restart 0 from the warm start when
//! given) and improves the sorted vector of condition margins, compared
//! lexicographically, one coordinate at a time with a golden-section search
//! on an adaptive bracket. The level constants `alphabar`
//! and `etabar` are never searched: they are derived from the certificate's
//! extrema on `X0` and `Xu`. A candidate is only reported feasible after an
//! independent `check_cbc` call confirms every condition with positive margin.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{check_cbc, CbcCandidate, CbcReport, CertifyError};
use crate::model::ShsModel;
use crate::poly::{nonneg_on_box, IntervalBox, Polynomial, Verdict};
use crate::sim::trajectory_rng;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid template: {0}")]
    Template(String),
    #[error(transparent)]
    Certify(#[from] CertifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantRanges {
    pub kappa1: Range,
    pub kappa2: Range,
    pub gamma1: Range,
    pub gamma2: Range,
    pub alphabar: Range,
    pub etabar: Range,
}

impl Default for ConstantRanges {
    fn default() -> Self {
        ConstantRanges {
            kappa1: Range::new(-1.0, 1.0),
            kappa2: Range::new(1e-3, 2.0),
            gamma1: Range::new(0.0, 1.0),
            gamma2: Range::new(0.0, 1.0),
            alphabar: Range::new(0.0, 1.0),
            etabar: Range::new(1.0, 10.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthTemplate {
    pub cert_degree: u32,
    pub flow_degree: u32,
    pub jump_degree: u32,
    pub ranges: ConstantRanges,
    /// Certificate coefficients start in `[-coef_bound, coef_bound]`.
    pub coef_bound: f64,
    /// Controller coefficients start in `[-controller_bound, controller_bound]`.
    pub controller_bound: f64,
    /// Total objective evaluations across restarts.
    pub budget: u64,
    pub restarts: u32,
    pub seed: u64,
    /// Search stops once the objective reaches this value.
    pub target_margin: f64,
    /// Gap left between the certificate's extrema and the derived levels.
    pub level_slack: f64,
}

impl Default for SynthTemplate {
    fn default() -> Self {
        SynthTemplate {
            cert_degree: 4,
            flow_degree: 1,
            jump_degree: 1,
            ranges: ConstantRanges::default(),
            coef_bound: 1.0,
            controller_bound: 5.0,
            budget: 100_000,
            restarts: 8,
            seed: 0,
            target_margin: 1e-6,
            level_slack: 1e-4,
        }
    }
}

impl SynthTemplate {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |s: &str| Err(SynthError::Template(s.to_string()));
        if self.cert_degree < 2 || self.cert_degree % 2 != 0 {
            return bad("cert_degree must be even and >= 2");
        }
        let r = &self.ranges;
        for (name, range) in [
            ("kappa1", r.kappa1),
            ("kappa2", r.kappa2),
            ("gamma1", r.gamma1),
            ("gamma2", r.gamma2),
            ("alphabar", r.alphabar),
            ("etabar", r.etabar),
        ] {
            if !(range.lo <= range.hi) || !range.lo.is_finite() || !range.hi.is_finite() {
                return Err(SynthError::Template(format!("{name} range lo <= hi")));
            }
        }
        if !(r.kappa2.lo > 0.0) {
            return bad("kappa2 range must be positive");
        }
        if r.gamma1.lo < 0.0 || r.gamma2.lo < 0.0 || r.alphabar.lo < 0.0 {
            return bad("gamma1, gamma2, alphabar ranges must be nonnegative");
        }
        if r.etabar.hi <= r.alphabar.lo {
            return bad("etabar range lies below alphabar range");
        }
        if !(self.coef_bound > 0.0 && self.controller_bound >= 0.0) {
            return bad("coefficient bounds must be positive");
        }
        if self.restarts < 1 {
            return bad("restarts >= 1");
        }
        if !(self.level_slack >= 0.0) {
            return bad("level_slack >= 0");
        }
        Ok(())
    }
}

/// Smallest of the five condition margins; `-inf` when the check cannot run.
pub fn margin_objective(model: &ShsModel, cand: &CbcCandidate, domain: &IntervalBox) -> f64 {
    match check_cbc(model, cand, domain) {
        Ok(r) => {
            let m = r.min_margin();
            if m.is_nan() {
                f64::NEG_INFINITY
            } else {
                m
            }
        }
        Err(_) => f64::NEG_INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthStatus {
    Feasible,
    InfeasibleAtBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthResult {
    pub status: SynthStatus,
    pub candidate: CbcCandidate,
    /// Margin of `candidate` from an independent check.
    pub margin: f64,
    pub report: CbcReport,
    pub evaluations: u64,
    /// Restart that produced the candidate.
    pub restart: u32,
}

/// All monomials of total degree `<= d` over `n` variables, in graded order.
fn monomials(n: usize, d: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=d {
        let mut cur = vec![0u32; n];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, i: usize, left: u32) {
    if i + 1 == cur.len() {
        cur[i] = left;
        out.push(cur.clone());
        return;
    }
    for k in (0..=left).rev() {
        cur[i] = k;
        fill(out, cur, i + 1, left - k);
    }
}

/// Parameter layout: certificate coefficients, flow then jump controller
/// coefficients per input, then `kappa1, kappa2, gamma1, gamma2`.
struct Layout {
    vars: Vec<String>,
    cert: Vec<Vec<u32>>,
    flow: Vec<Vec<u32>>,
    jump: Vec<Vec<u32>>,
    m: usize,
    bounds: Vec<Range>,
}

impl Layout {
    fn new(model: &ShsModel, t: &SynthTemplate) -> Self {
        let n = model.n();
        let cert = monomials(n, t.cert_degree);
        let flow = monomials(n, t.flow_degree);
        let jump = monomials(n, t.jump_degree);
        let m = model.m();
        let mut bounds = Vec::new();
        for e in &cert {
            // pure top powers stay positive
            if e.iter().any(|&k| k == t.cert_degree) {
                bounds.push(Range::new(1e-9, t.coef_bound));
            } else {
                bounds.push(Range::new(-t.coef_bound, t.coef_bound));
            }
        }
        let cb = Range::new(-t.controller_bound, t.controller_bound);
        bounds.extend(std::iter::repeat_n(cb, m * (flow.len() + jump.len())));
        let r = &t.ranges;
        bounds.extend([r.kappa1, r.kappa2, r.gamma1, r.gamma2]);
        Layout {
            vars: model.state_vars.clone(),
            cert,
            flow,
            jump,
            m,
            bounds,
        }
    }

    fn poly(&self, basis: &[Vec<u32>], coefs: &[f64]) -> Polynomial {
        Polynomial::from_terms(&self.vars, basis.iter().cloned().zip(coefs.iter().copied()))
            .expect("basis matches variables")
    }

    fn decode(&self, theta: &[f64]) -> CbcCandidate {
        let mut at = 0;
        let mut take = |k: usize| {
            let s = &theta[at..at + k];
            at += k;
            s
        };
        let bbar = self.poly(&self.cert, take(self.cert.len()));
        let nu_flow = (0..self.m)
            .map(|_| self.poly(&self.flow, take(self.flow.len())))
            .collect();
        let nu_jump = (0..self.m)
            .map(|_| self.poly(&self.jump, take(self.jump.len())))
            .collect();
        let c = take(4);
        CbcCandidate {
            bbar,
            kappa1: c[0],
            kappa2: c[1],
            gamma1: c[2],
            gamma2: c[3],
            alphabar: 0.0,
            etabar: 0.0,
            nu_flow,
            nu_jump,
        }
    }

    fn project(&self, p: &Polynomial, basis: &[Vec<u32>], what: &str) -> Result<Vec<f64>, SynthError> {
        let q = p
            .with_vars(&self.vars)
            .map_err(|e| SynthError::Template(format!("warm start {what}: {e}")))?;
        for (e, _) in q.terms() {
            if !basis.contains(e) {
                return Err(SynthError::Template(format!(
                    "warm start {what} has a term outside the template degree"
                )));
            }
        }
        Ok(basis.iter().map(|e| q.coefficient(e)).collect())
    }

    fn encode(&self, c: &CbcCandidate) -> Result<Vec<f64>, SynthError> {
        if c.nu_flow.len() != self.m || c.nu_jump.len() != self.m {
            return Err(SynthError::Template(
                "warm start controller count differs from model inputs".into(),
            ));
        }
        let mut theta = self.project(&c.bbar, &self.cert, "certificate")?;
        for p in &c.nu_flow {
            theta.extend(self.project(p, &self.flow, "flow controller")?);
        }
        for p in &c.nu_jump {
            theta.extend(self.project(p, &self.jump, "jump controller")?);
        }
        theta.extend([c.kappa1, c.kappa2, c.gamma1, c.gamma2]);
        Ok(theta)
    }

    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|b| if b.hi > b.lo { rng.random_range(b.lo..=b.hi) } else { b.lo })
            .collect()
    }
}

/// Tightest valid level constants for `bbar`, pushed into the template
/// ranges, plus the smallest slack against those ranges.
fn derive_levels(
    model: &ShsModel,
    bbar: &Polynomial,
    t: &SynthTemplate,
) -> Result<(f64, f64, f64), CertifyError> {
    let max_x0 = -nonneg_on_box(&bbar.scale(-1.0), &model.initial_set)?.margin;
    let min_xu = nonneg_on_box(bbar, &model.unsafe_set)?.margin;
    let r = &t.ranges;
    let alphabar = (max_x0.max(0.0) + t.level_slack).max(r.alphabar.lo);
    let etabar = (min_xu - t.level_slack).min(r.etabar.hi);
    let slack = (r.alphabar.hi - alphabar)
        .min(etabar - r.etabar.lo)
        .min(etabar - alphabar);
    Ok((alphabar, etabar, slack))
}

/// All margins of a candidate in ascending order. Compared lexicographically
/// so that raising one of several tied margins counts as progress.
#[derive(Debug, Clone, PartialEq)]
struct Score(Vec<f64>);

impl Score {
    fn worst() -> Self {
        Score(vec![f64::NEG_INFINITY])
    }

    fn min(&self) -> f64 {
        self.0[0]
    }

    fn better_than(&self, other: &Score) -> bool {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Greater => return true,
                std::cmp::Ordering::Less => return false,
                std::cmp::Ordering::Equal => {}
            }
        }
        self.0.len() > other.0.len()
    }
}

struct Search<'a> {
    model: &'a ShsModel,
    domain: &'a IntervalBox,
    template: &'a SynthTemplate,
    layout: Layout,
}

impl Search<'_> {
    fn candidate(&self, theta: &[f64]) -> (CbcCandidate, Score) {
        let mut c = self.layout.decode(theta);
        let Ok((a, e, slack)) = derive_levels(self.model, &c.bbar, self.template) else {
            return (c, Score::worst());
        };
        c.alphabar = a;
        c.etabar = e;
        let Ok(report) = check_cbc(self.model, &c, self.domain) else {
            return (c, Score::worst());
        };
        let mut margins: Vec<f64> = report
            .conditions
            .iter()
            .map(|r| if r.margin.is_nan() { f64::NEG_INFINITY } else { r.margin })
            .collect();
        margins.push(slack);
        margins.sort_by(f64::total_cmp);
        (c, Score(margins))
    }

    fn score(&self, theta: &[f64]) -> Score {
        self.candidate(theta).1
    }

    /// Coordinate-wise golden-section ascent with a per-coordinate bracket
    /// that doubles after a move to its edge and halves otherwise.
    fn run(&self, mut theta: Vec<f64>, budget: u64, rng: &mut impl Rng) -> (Vec<f64>, f64, u64) {
        const INV_PHI: f64 = 0.618_033_988_749_895;
        const GOLDEN_ITERS: usize = 10;
        if budget == 0 {
            return (theta, f64::NEG_INFINITY, 0);
        }
        let bounds: Vec<Range> = self
            .layout
            .bounds
            .iter()
            .zip(&theta)
            .map(|(b, &v)| Range::new(b.lo.min(v), b.hi.max(v)))
            .collect();
        let width: Vec<f64> = bounds.iter().map(|b| (b.hi - b.lo).max(1e-12)).collect();
        let mut radius: Vec<f64> = theta
            .iter()
            .zip(&width)
            .map(|(v, w)| (0.5 * v.abs()).max(0.05 * w).min(*w))
            .collect();
        let mut best = self.score(&theta);
        let mut evals = 1;
        let target = self.template.target_margin;
        let dims = theta.len();

        while evals < budget && best.min() < target {
            let mut order: Vec<usize> = (0..dims).collect();
            for i in (1..dims).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            let mut moved = false;
            for &i in &order {
                if evals >= budget || best.min() >= target {
                    break;
                }
                let b = bounds[i];
                let old = theta[i];
                let (mut lo, mut hi) = ((old - radius[i]).max(b.lo), (old + radius[i]).min(b.hi));
                if !(hi > lo) {
                    radius[i] = (radius[i] * 0.5).max(1e-12 * width[i]);
                    continue;
                }
                let mut probe = theta.clone();
                let mut eval_at = |v: f64, evals: &mut u64| {
                    probe[i] = v;
                    *evals += 1;
                    self.score(&probe)
                };
                let mut c = hi - INV_PHI * (hi - lo);
                let mut d = lo + INV_PHI * (hi - lo);
                let mut fc = eval_at(c, &mut evals);
                let mut fd = eval_at(d, &mut evals);
                let mut arg = old;
                let mut val = best.clone();
                for _ in 0..GOLDEN_ITERS {
                    for (x, f) in [(c, &fc), (d, &fd)] {
                        if f.better_than(&val) {
                            arg = x;
                            val = f.clone();
                        }
                    }
                    if evals >= budget || val.min() >= target {
                        break;
                    }
                    if !fd.better_than(&fc) {
                        hi = d;
                        d = c;
                        fd = fc;
                        c = hi - INV_PHI * (hi - lo);
                        fc = eval_at(c, &mut evals);
                    } else {
                        lo = c;
                        c = d;
                        fc = fd;
                        d = lo + INV_PHI * (hi - lo);
                        fd = eval_at(d, &mut evals);
                    }
                }
                for (x, f) in [(c, &fc), (d, &fd)] {
                    if f.better_than(&val) {
                        arg = x;
                        val = f.clone();
                    }
                }
                if val.better_than(&best) {
                    theta[i] = arg;
                    best = val;
                    moved = true;
                    if (arg - old).abs() > 0.5 * radius[i] {
                        radius[i] = (radius[i] * 2.0).min(width[i]);
                    }
                } else {
                    radius[i] = (radius[i] * 0.5).max(1e-12 * width[i]);
                }
            }
            if !moved && radius.iter().zip(&width).all(|(r, w)| *r <= 1e-9 * w) {
                break;
            }
        }
        (theta, best.min(), evals)
    }
}

/// Searches for a certificate of the template's shape. `warm` seeds restart 0;
/// with a zero budget it is returned as is.
pub fn search(
    model: &ShsModel,
    template: &SynthTemplate,
    domain: &IntervalBox,
    warm: Option<&CbcCandidate>,
) -> Result<SynthResult, SynthError> {
    template.validate()?;
    let layout = Layout::new(model, template);
    let warm_theta = warm.map(|c| layout.encode(c)).transpose()?;

    if template.budget == 0 {
        let cand = match warm {
            Some(c) => c.clone(),
            None => {
                let mut rng = trajectory_rng(template.seed, 0);
                let s = Search {
                    model,
                    domain,
                    template,
                    layout,
                };
                s.candidate(&s.layout.random(&mut rng)).0
            }
        };
        return finish(model, domain, cand, 0, 0);
    }

    let search = Search {
        model,
        domain,
        template,
        layout,
    };
    let restarts = template.restarts as u64;
    let per = template.budget / restarts;
    let share = |r: u64| per + if r == 0 { template.budget % restarts } else { 0 };
    let start = |r: u64| {
        let mut rng = trajectory_rng(template.seed, r);
        let theta = match (&warm_theta, r) {
            (Some(w), 0) => w.clone(),
            _ => search.layout.random(&mut rng),
        };
        let (theta, value, evals) = search.run(theta, share(r), &mut rng);
        (r, theta, value, evals)
    };

    // A warm start that succeeds alone spares the random restarts.
    let mut results = Vec::new();
    let first = if warm_theta.is_some() { 1 } else { 0 };
    if first == 1 {
        results.push(start(0));
        if results[0].2 >= template.target_margin {
            return report_best(&search, results);
        }
    }
    results.extend((first..restarts).into_par_iter().map(start).collect::<Vec<_>>());
    report_best(&search, results)
}

fn report_best(
    search: &Search<'_>,
    results: Vec<(u64, Vec<f64>, f64, u64)>,
) -> Result<SynthResult, SynthError> {
    let evaluations = results.iter().map(|r| r.3).sum();
    let best = results
        .into_iter()
        .reduce(|a, b| if b.2 > a.2 { b } else { a })
        .expect("at least one restart");
    let (cand, _) = search.candidate(&best.1);
    finish(search.model, search.domain, cand, evaluations, best.0 as u32)
}

fn finish(
    model: &ShsModel,
    domain: &IntervalBox,
    candidate: CbcCandidate,
    evaluations: u64,
    restart: u32,
) -> Result<SynthResult, SynthError> {
    let report = check_cbc(model, &candidate, domain)?;
    let margin = report.min_margin();
    let feasible = report.verdict() == Verdict::Holds
        && margin > 0.0
        && candidate.validate().is_ok();
    Ok(SynthResult {
        status: if feasible {
            SynthStatus::Feasible
        } else {
            SynthStatus::InfeasibleAtBudget
        },
        candidate,
        margin,
        report,
        evaluations,
        restart,
    })
}
