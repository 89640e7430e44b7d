//! Stochastic hybrid system description, its augmented (counter-carrying)
//! form and jump schedules.
//!
//! Flow between jumps follows
//! `dx = f1(x, nu) dt + sigma(x) dW + rho(x) dP`, with `nu` held constant over
//! each sampling period `tau`. At jump instants `x <- f2(x, nu, s)` with `s`
//! drawn i.i.d. Consecutive jumps are between `q1 * tau` and `q2 * tau` apart.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{IntervalBox, NoiseMoments, Polynomial};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed model JSON at line {line}, column {column}: {msg}")]
    Json {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("invalid jump schedule `{0}`")]
    Schedule(String),
}

impl From<serde_json::Error> for ModelError {
    fn from(e: serde_json::Error) -> Self {
        ModelError::Json {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpParams {
    pub tau: f64,
    pub q1: u32,
    pub q2: u32,
}

impl JumpParams {
    /// Counter after taking `scenario` from `z`, or `None` when inadmissible.
    pub fn transition(&self, z: u32, scenario: Scenario) -> Option<u32> {
        match scenario {
            Scenario::Flow if z < self.q2 => Some(z + 1),
            Scenario::Jump if self.q1 <= z && z <= self.q2 => Some(0),
            _ => None,
        }
    }

    pub fn admissible(&self, z: u32) -> Vec<Scenario> {
        [Scenario::Flow, Scenario::Jump]
            .into_iter()
            .filter(|s| self.transition(z, *s).is_some())
            .collect()
    }
}

/// Distribution of one component of the jump noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sampler", rename_all = "lowercase")]
pub enum NoiseSampler {
    Gaussian { mean: f64, std: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Default for NoiseSampler {
    fn default() -> Self {
        NoiseSampler::Gaussian { mean: 0.0, std: 1.0 }
    }
}

impl NoiseSampler {
    pub fn moments(&self, order: usize) -> NoiseMoments {
        match *self {
            NoiseSampler::Gaussian { mean, std } => NoiseMoments::gaussian(mean, std, order),
            NoiseSampler::Uniform { lo, hi } => NoiseMoments::uniform(lo, hi, order),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseSampler::Gaussian { mean, std } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + std * z
            }
            NoiseSampler::Uniform { lo, hi } => {
                if hi > lo {
                    rng.random_range(lo..hi)
                } else {
                    lo
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShsModel {
    pub state_vars: Vec<String>,
    pub input_vars: Vec<String>,
    #[serde(default)]
    pub noise_vars: Vec<String>,
    /// Drift, one entry per state, over state and input variables.
    pub f1: Vec<Polynomial>,
    /// Diffusion, `n x b`, over state variables.
    pub sigma: Vec<Vec<Polynomial>>,
    /// Poisson reset, `n x r`, over state variables.
    pub rho: Vec<Vec<Polynomial>>,
    /// Poisson rates per unit time, one per column of `rho`.
    pub lambda: Vec<f64>,
    /// Jump map over state, input and noise variables.
    pub f2: Vec<Polynomial>,
    /// One sampler per noise variable.
    #[serde(default)]
    pub noise: Vec<NoiseSampler>,
    pub jump: JumpParams,
    #[serde(rename = "X")]
    pub state_set: IntervalBox,
    #[serde(rename = "X0")]
    pub initial_set: IntervalBox,
    #[serde(rename = "Xu")]
    pub unsafe_set: IntervalBox,
}

/// A broken model invariant: which field and which rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

impl ShsModel {
    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn n(&self) -> usize {
        self.state_vars.len()
    }

    pub fn m(&self) -> usize {
        self.input_vars.len()
    }

    /// Number of Brownian channels.
    pub fn brownian_dim(&self) -> usize {
        self.sigma.first().map(Vec::len).unwrap_or(0)
    }

    /// Number of Poisson channels.
    pub fn poisson_dim(&self) -> usize {
        self.lambda.len()
    }

    /// Moments of each noise component up to `order`, paired with its name.
    pub fn noise_moments(&self, order: usize) -> Vec<(String, NoiseMoments)> {
        self.noise_vars
            .iter()
            .zip(&self.noise)
            .map(|(v, s)| (v.clone(), s.moments(order)))
            .collect()
    }

    /// Checks every structural invariant; an empty list means the model is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |field: &str, rule: String| {
            out.push(Violation {
                field: field.to_string(),
                rule,
            })
        };
        let n = self.n();
        let all_vars: Vec<&String> = self
            .state_vars
            .iter()
            .chain(&self.input_vars)
            .chain(&self.noise_vars)
            .collect();
        for (i, v) in all_vars.iter().enumerate() {
            if all_vars[..i].contains(v) {
                bad("vars", format!("variable `{v}` declared twice"));
            }
        }
        if n == 0 {
            bad("state_vars", "n >= 1".into());
        }
        let check_vars = |p: &Polynomial, allowed: &[&Vec<String>]| -> Option<String> {
            p.active_vars()
                .into_iter()
                .find(|v| !allowed.iter().any(|a| a.contains(v)))
        };
        if self.f1.len() != n {
            bad("f1", format!("length n = {n}"));
        }
        for p in &self.f1 {
            if let Some(v) = check_vars(p, &[&self.state_vars, &self.input_vars]) {
                bad("f1", format!("depends only on (x, nu), found `{v}`"));
            }
        }
        if self.f2.len() != n {
            bad("f2", format!("length n = {n}"));
        }
        for p in &self.f2 {
            if let Some(v) = check_vars(p, &[&self.state_vars, &self.input_vars, &self.noise_vars]) {
                bad("f2", format!("depends only on (x, nu, noise), found `{v}`"));
            }
        }
        if self.sigma.len() != n {
            bad("sigma", format!("n = {n} rows"));
        }
        let b = self.brownian_dim();
        if self.sigma.iter().any(|row| row.len() != b) {
            bad("sigma", "all rows have equal length".into());
        }
        for p in self.sigma.iter().flatten() {
            if let Some(v) = check_vars(p, &[&self.state_vars]) {
                bad("sigma", format!("depends only on x, found `{v}`"));
            }
        }
        if self.rho.len() != n {
            bad("rho", format!("n = {n} rows"));
        }
        if self.rho.iter().any(|row| row.len() != self.lambda.len()) {
            bad("rho", "column count equals length of lambda".into());
        }
        for p in self.rho.iter().flatten() {
            if let Some(v) = check_vars(p, &[&self.state_vars]) {
                bad("rho", format!("depends only on x, found `{v}`"));
            }
        }
        for (j, &l) in self.lambda.iter().enumerate() {
            if !(l >= 0.0 && l.is_finite()) {
                bad("lambda", format!("lambda_{j} >= 0"));
            }
        }
        if self.noise.len() != self.noise_vars.len() {
            bad("noise", "one sampler per noise variable".into());
        }
        for s in &self.noise {
            match *s {
                NoiseSampler::Gaussian { std, .. } if !(std >= 0.0) => {
                    bad("noise", "std >= 0".into())
                }
                NoiseSampler::Uniform { lo, hi } if !(lo <= hi) => bad("noise", "lo <= hi".into()),
                _ => {}
            }
        }
        if !(self.jump.tau > 0.0 && self.jump.tau.is_finite()) {
            bad("jump", "tau > 0".into());
        }
        if self.jump.q1 < 1 {
            bad("jump", "q1 >= 1".into());
        }
        if self.jump.q1 > self.jump.q2 {
            bad("jump", "q1 <= q2".into());
        }
        let mut sorted_state = self.state_vars.clone();
        sorted_state.sort();
        for (name, bx) in [
            ("X", &self.state_set),
            ("X0", &self.initial_set),
            ("Xu", &self.unsafe_set),
        ] {
            let mut vs = bx.vars();
            vs.sort();
            if vs != sorted_state {
                bad(name, "one interval per state variable".into());
            }
        }
        if !self.initial_set.is_subset_of(&self.state_set) {
            bad("X0", "X0 ⊆ X".into());
        }
        if !self.unsafe_set.is_subset_of(&self.state_set) {
            bad("Xu", "Xu ⊆ X".into());
        }
        out
    }

    /// Point in `self.state_vars` order, paired with names for polynomial evaluation.
    pub fn named_state<'a>(&'a self, x: &[f64]) -> Vec<(&'a str, f64)> {
        self.state_vars
            .iter()
            .map(String::as_str)
            .zip(x.iter().copied())
            .collect()
    }

    /// `x` reordered to match the variable order of `bx`.
    pub fn in_box_order(&self, bx: &IntervalBox, x: &[f64]) -> Vec<f64> {
        bx.intervals()
            .iter()
            .map(|iv| {
                self.state_vars
                    .iter()
                    .position(|v| *v == iv.var)
                    .map(|i| x[i])
                    .unwrap_or(f64::NAN)
            })
            .collect()
    }

    pub fn in_unsafe_set(&self, x: &[f64]) -> bool {
        self.unsafe_set.contains(&self.in_box_order(&self.unsafe_set, x))
    }

    pub fn in_state_set(&self, x: &[f64]) -> bool {
        self.state_set.contains(&self.in_box_order(&self.state_set, x))
    }
}

/// Which of the two transitions of the augmented system is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Flow,
    Jump,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Flow => "flow",
            Scenario::Jump => "jump",
        })
    }
}

/// State of the augmented system: physical state and the number of sampling
/// periods since the last jump, capped at `q2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedState {
    pub x: Vec<f64>,
    pub z: u32,
}

impl AugmentedState {
    /// Output map of the augmented system: the physical state.
    pub fn output(&self) -> &[f64] {
        &self.x
    }
}

/// Who picks the gap between consecutive jumps, in sampling periods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JumpSchedule {
    Fixed(u32),
    Cyclic(Vec<u32>),
    UniformRandom,
}

impl JumpSchedule {
    pub fn validate(&self, jump: &JumpParams) -> Result<(), ModelError> {
        let ok = |d: u32| jump.q1 <= d && d <= jump.q2;
        let valid = match self {
            JumpSchedule::Fixed(d) => ok(*d),
            JumpSchedule::Cyclic(ds) => !ds.is_empty() && ds.iter().all(|&d| ok(d)),
            JumpSchedule::UniformRandom => true,
        };
        if valid {
            Ok(())
        } else {
            Err(ModelError::Schedule(format!(
                "{self}: every gap must lie in {}..={}",
                jump.q1, jump.q2
            )))
        }
    }
}

impl fmt::Display for JumpSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpSchedule::Fixed(d) => write!(f, "fixed:{d}"),
            JumpSchedule::Cyclic(ds) => {
                let s: Vec<String> = ds.iter().map(u32::to_string).collect();
                write!(f, "cyclic:{}", s.join(","))
            }
            JumpSchedule::UniformRandom => write!(f, "uniform"),
        }
    }
}

impl FromStr for JumpSchedule {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        let err = || ModelError::Schedule(s.to_string());
        let s = s.trim();
        if s == "uniform" {
            return Ok(JumpSchedule::UniformRandom);
        }
        if let Some(d) = s.strip_prefix("fixed:") {
            return d.trim().parse().map(JumpSchedule::Fixed).map_err(|_| err());
        }
        if let Some(ds) = s.strip_prefix("cyclic:") {
            let gaps: Result<Vec<u32>, _> = ds.split(',').map(|d| d.trim().parse()).collect();
            return match gaps {
                Ok(g) if !g.is_empty() => Ok(JumpSchedule::Cyclic(g)),
                _ => Err(err()),
            };
        }
        Err(err())
    }
}

impl Serialize for JumpSchedule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for JumpSchedule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Produces the successive jump gaps of a schedule.
#[derive(Debug, Clone)]
pub struct GapSequence<'a> {
    schedule: &'a JumpSchedule,
    jump: JumpParams,
    position: usize,
}

impl<'a> GapSequence<'a> {
    pub fn new(schedule: &'a JumpSchedule, jump: JumpParams) -> Self {
        GapSequence {
            schedule,
            jump,
            position: 0,
        }
    }

    pub fn next_gap<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u32 {
        let d = match self.schedule {
            JumpSchedule::Fixed(d) => *d,
            JumpSchedule::Cyclic(ds) => ds[self.position % ds.len()],
            JumpSchedule::UniformRandom => rng.random_range(self.jump.q1..=self.jump.q2),
        };
        self.position += 1;
        d
    }
}
