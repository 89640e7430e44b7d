//! Seeded simulation of the augmented system.
//!
//! Flow transitions integrate the jump diffusion over one sampling period
//! with Euler–Maruyama (exact Poisson counts per substep) under an input held
//! at `nu_flow(x)`. Jump transitions apply the jump map once and take no
//! physical time. Trajectory `i` of a batch draws from ChaCha stream `i` of
//! the master seed, so results do not depend on the worker count.

mod stats;

use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::Acbc;
use crate::bound::{bound_for, BoundError};
use crate::certify::CbcCandidate;
use crate::model::{GapSequence, JumpSchedule, ModelError, NoiseSampler, Scenario, ShsModel};
use crate::poly::{PolyError, Polynomial};

pub use stats::{clopper_pearson, Interval};

pub const DEFAULT_SUBSTEPS: u32 = 20;
pub const CONFIDENCE: f64 = 0.99;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("state became non-finite at transition {transition} (substep {substep:?})")]
    BlowUp {
        transition: u64,
        substep: Option<u32>,
    },
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("{scenario} inadmissible at z = {z} (transition {transition})")]
    Inadmissible {
        transition: u64,
        z: u32,
        scenario: Scenario,
    },
    #[error(transparent)]
    Schedule(#[from] ModelError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub substeps_per_tau: u32,
    /// Number of augmented transitions.
    pub horizon: u64,
    pub n_trajectories: u64,
    pub master_seed: u64,
    pub schedule: JumpSchedule,
    /// Fixed start; `None` samples uniformly from the initial set.
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            substeps_per_tau: DEFAULT_SUBSTEPS,
            horizon: 100,
            n_trajectories: 1000,
            master_seed: 0,
            schedule: JumpSchedule::UniformRandom,
            initial_state: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, model: &ShsModel) -> Result<(), SimError> {
        if self.substeps_per_tau < 1 {
            return Err(SimError::Config("substeps_per_tau >= 1".into()));
        }
        if self.n_trajectories < 1 {
            return Err(SimError::Config("n_trajectories >= 1".into()));
        }
        if let Some(x0) = &self.initial_state {
            if x0.len() != model.n() {
                return Err(SimError::Config(format!(
                    "initial state has {} entries, model has {}",
                    x0.len(),
                    model.n()
                )));
            }
        }
        self.schedule.validate(&model.jump)?;
        Ok(())
    }
}

/// Feedback laws over the state variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Controllers {
    pub flow: Vec<Polynomial>,
    pub jump: Vec<Polynomial>,
}

impl Controllers {
    pub fn from_candidate(c: &CbcCandidate) -> Self {
        Controllers {
            flow: c.nu_flow.clone(),
            jump: c.nu_jump.clone(),
        }
    }

    /// Zero input for every channel.
    pub fn zero(m: usize) -> Self {
        Controllers {
            flow: vec![Polynomial::constant(0.0); m],
            jump: vec![Polynomial::constant(0.0); m],
        }
    }
}

/// Independent generator for trajectory `stream` of a batch.
pub fn trajectory_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Model with every polynomial re-expressed over a fixed variable order so
/// that evaluation is positional.
struct Compiled {
    n: usize,
    f1: Vec<Polynomial>,
    sigma: Vec<Vec<Polynomial>>,
    rho: Vec<Vec<Polynomial>>,
    lambda: Vec<f64>,
    f2: Vec<Polynomial>,
    noise: Vec<NoiseSampler>,
}

impl Compiled {
    fn new(model: &ShsModel) -> Result<Self, SimError> {
        let violations = model.validate();
        if let Some(v) = violations.first() {
            return Err(SimError::Model(v.to_string()));
        }
        let xs = &model.state_vars;
        let xnu: Vec<String> = xs.iter().chain(&model.input_vars).cloned().collect();
        let xnus: Vec<String> = xnu.iter().chain(&model.noise_vars).cloned().collect();
        let over = |p: &Polynomial, vars: &[String]| p.with_vars(vars);
        Ok(Compiled {
            n: model.n(),
            f1: model.f1.iter().map(|p| over(p, &xnu)).collect::<Result<_, _>>()?,
            sigma: model
                .sigma
                .iter()
                .map(|row| row.iter().map(|p| over(p, xs)).collect())
                .collect::<Result<_, _>>()?,
            rho: model
                .rho
                .iter()
                .map(|row| row.iter().map(|p| over(p, xs)).collect())
                .collect::<Result<_, _>>()?,
            lambda: model.lambda.clone(),
            f2: model.f2.iter().map(|p| over(p, &xnus)).collect::<Result<_, _>>()?,
            noise: model.noise.clone(),
        })
    }

    /// Err carries the failing substep.
    fn flow<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        nu: &[f64],
        tau: f64,
        substeps: u32,
        rng: &mut R,
    ) -> Result<Vec<f64>, u32> {
        let h = tau / substeps as f64;
        let sqrt_h = h.sqrt();
        let poisson: Vec<Option<Poisson<f64>>> = self
            .lambda
            .iter()
            .map(|&l| (l * h > 0.0).then(|| Poisson::new(l * h).expect("positive rate")))
            .collect();
        let b = self.sigma.first().map(Vec::len).unwrap_or(0);
        let mut xnu: Vec<f64> = x.iter().chain(nu).copied().collect();
        let mut dw = vec![0.0; b];
        let mut dp = vec![0.0; poisson.len()];
        let mut next = vec![0.0; self.n];
        for s in 0..substeps {
            for w in dw.iter_mut() {
                let g: f64 = StandardNormal.sample(rng);
                *w = sqrt_h * g;
            }
            for (p, dist) in dp.iter_mut().zip(&poisson) {
                *p = dist.as_ref().map(|d| d.sample(rng)).unwrap_or(0.0);
            }
            let state = &xnu[..self.n];
            for i in 0..self.n {
                let mut v = state[i] + self.f1[i].eval_ordered(&xnu) * h;
                for (c, w) in dw.iter().enumerate() {
                    v += self.sigma[i][c].eval_ordered(state) * w;
                }
                for (j, p) in dp.iter().enumerate() {
                    if *p != 0.0 {
                        v += self.rho[i][j].eval_ordered(state) * p;
                    }
                }
                next[i] = v;
            }
            if next.iter().any(|v| !v.is_finite()) {
                return Err(s);
            }
            xnu[..self.n].copy_from_slice(&next);
        }
        xnu.truncate(self.n);
        Ok(xnu)
    }

    fn jump<R: Rng + ?Sized>(&self, x: &[f64], nu: &[f64], rng: &mut R) -> Option<Vec<f64>> {
        let mut point: Vec<f64> = x.iter().chain(nu).copied().collect();
        for s in &self.noise {
            point.push(s.sample(rng));
        }
        let out: Vec<f64> = self.f2.iter().map(|p| p.eval_ordered(&point)).collect();
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

/// One Euler–Maruyama flow over `tau` with the input held at `nu`.
pub fn flow_step<R: Rng + ?Sized>(
    model: &ShsModel,
    x: &[f64],
    nu: &[f64],
    tau: f64,
    substeps: u32,
    rng: &mut R,
) -> Result<Vec<f64>, SimError> {
    if substeps < 1 {
        return Err(SimError::Config("substeps >= 1".into()));
    }
    Compiled::new(model)?
        .flow(x, nu, tau, substeps, rng)
        .map_err(|s| SimError::BlowUp {
            transition: 0,
            substep: Some(s),
        })
}

/// One application of the jump map with a fresh noise sample.
pub fn jump_step<R: Rng + ?Sized>(
    model: &ShsModel,
    x: &[f64],
    nu: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>, SimError> {
    Compiled::new(model)?
        .jump(x, nu, rng)
        .ok_or(SimError::BlowUp {
            transition: 0,
            substep: None,
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub k: u64,
    pub time: f64,
    pub x: Vec<f64>,
    pub z: u32,
    /// Transition that produced this point; `None` at `k = 0`.
    pub scenario: Option<Scenario>,
    /// `beta(z) bbar(x)` when a lifted certificate was supplied.
    pub b_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub master_seed: u64,
    pub stream: u64,
    pub points: Vec<TrajectoryPoint>,
    /// Jump gaps in sampling periods, in the order they were scheduled.
    pub gaps: Vec<u32>,
    pub first_unsafe: Option<u64>,
    pub first_exceed: Option<u64>,
    /// First transition with the state outside `X`.
    pub first_exit: Option<u64>,
    /// Transition at which the state became non-finite; the path stops there.
    pub blow_up: Option<u64>,
}

struct Lifted {
    bbar: Polynomial,
    betas: Vec<f64>,
    eta: f64,
}

struct Runner<'a> {
    model: &'a ShsModel,
    dyn_: Compiled,
    flow_law: Vec<Polynomial>,
    jump_law: Vec<Polynomial>,
    lifted: Option<Lifted>,
    config: &'a SimConfig,
}

impl<'a> Runner<'a> {
    fn new(
        model: &'a ShsModel,
        controllers: &Controllers,
        config: &'a SimConfig,
        acbc: Option<&Acbc>,
    ) -> Result<Self, SimError> {
        config.validate(model)?;
        let dyn_ = Compiled::new(model)?;
        let xs = &model.state_vars;
        let law = |ps: &[Polynomial], name: &str| -> Result<Vec<Polynomial>, SimError> {
            if ps.len() != model.m() {
                return Err(SimError::Config(format!(
                    "{name} controller has {} entries, model has {} inputs",
                    ps.len(),
                    model.m()
                )));
            }
            Ok(ps.iter().map(|p| p.with_vars(xs)).collect::<Result<_, _>>()?)
        };
        let lifted = match acbc {
            Some(a) => Some(Lifted {
                bbar: a.base.bbar.with_vars(xs)?,
                betas: (0..=model.jump.q2)
                    .map(|z| a.beta(z).expect("z within 0..=q2"))
                    .collect(),
                eta: a.eta,
            }),
            None => None,
        };
        Ok(Runner {
            model,
            dyn_,
            flow_law: law(&controllers.flow, "flow")?,
            jump_law: law(&controllers.jump, "jump")?,
            lifted,
            config,
        })
    }

    fn initial_state(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        if let Some(x0) = &self.config.initial_state {
            return x0.clone();
        }
        let sample = self.model.initial_set.sample_uniform(rng);
        let vars = self.model.initial_set.vars();
        self.model
            .state_vars
            .iter()
            .map(|v| sample[vars.iter().position(|w| w == v).expect("validated")])
            .collect()
    }

    fn run(&self, stream: u64, record: bool) -> Result<Trajectory, SimError> {
        let cfg = self.config;
        let jump = self.model.jump;
        let mut rng = trajectory_rng(cfg.master_seed, stream);
        let mut x = self.initial_state(&mut rng);
        let mut gaps = GapSequence::new(&cfg.schedule, jump);
        let mut gap = gaps.next_gap(&mut rng);
        let mut traj = Trajectory {
            master_seed: cfg.master_seed,
            stream,
            points: Vec::new(),
            gaps: vec![gap],
            first_unsafe: None,
            first_exceed: None,
            first_exit: None,
            blow_up: None,
        };
        let mut z = 0u32;
        let mut flows = 0u64;
        self.observe(&mut traj, 0, 0.0, &x, z, None, record);

        for k in 1..=cfg.horizon {
            let scenario = if z == gap {
                Scenario::Jump
            } else {
                Scenario::Flow
            };
            let Some(z_next) = jump.transition(z, scenario) else {
                return Err(SimError::Inadmissible {
                    transition: k,
                    z,
                    scenario,
                });
            };
            let next = match scenario {
                Scenario::Flow => {
                    let nu: Vec<f64> = self.flow_law.iter().map(|p| p.eval_ordered(&x)).collect();
                    self.dyn_
                        .flow(&x, &nu, jump.tau, cfg.substeps_per_tau, &mut rng)
                        .ok()
                }
                Scenario::Jump => {
                    let nu: Vec<f64> = self.jump_law.iter().map(|p| p.eval_ordered(&x)).collect();
                    self.dyn_.jump(&x, &nu, &mut rng)
                }
            };
            let Some(next) = next else {
                traj.blow_up = Some(k);
                if self.lifted.is_some() {
                    traj.first_exceed.get_or_insert(k);
                }
                traj.first_exit.get_or_insert(k);
                break;
            };
            x = next;
            z = z_next;
            if scenario == Scenario::Flow {
                flows += 1;
            } else {
                gap = gaps.next_gap(&mut rng);
                traj.gaps.push(gap);
            }
            let time = flows as f64 * jump.tau;
            self.observe(&mut traj, k, time, &x, z, Some(scenario), record);
        }
        Ok(traj)
    }

    #[allow(clippy::too_many_arguments)]
    fn observe(
        &self,
        traj: &mut Trajectory,
        k: u64,
        time: f64,
        x: &[f64],
        z: u32,
        scenario: Option<Scenario>,
        record: bool,
    ) {
        if traj.first_unsafe.is_none() && self.model.in_unsafe_set(x) {
            traj.first_unsafe = Some(k);
        }
        if traj.first_exit.is_none() && !self.model.in_state_set(x) {
            traj.first_exit = Some(k);
        }
        let b_value = self.lifted.as_ref().map(|l| l.betas[z as usize] * l.bbar.eval_ordered(x));
        if let (Some(b), Some(l)) = (b_value, &self.lifted) {
            if traj.first_exceed.is_none() && b >= l.eta {
                traj.first_exceed = Some(k);
            }
        }
        if record {
            traj.points.push(TrajectoryPoint {
                k,
                time,
                x: x.to_vec(),
                z,
                scenario,
                b_value,
            });
        }
    }
}

/// Single trajectory on stream 0 of `config.master_seed`.
pub fn simulate(
    model: &ShsModel,
    controllers: &Controllers,
    config: &SimConfig,
    acbc: Option<&Acbc>,
) -> Result<Trajectory, SimError> {
    simulate_stream(model, controllers, config, acbc, 0)
}

/// Trajectory `stream` of the batch defined by `config.master_seed`. Fails on
/// blow-up.
pub fn simulate_stream(
    model: &ShsModel,
    controllers: &Controllers,
    config: &SimConfig,
    acbc: Option<&Acbc>,
    stream: u64,
) -> Result<Trajectory, SimError> {
    let runner = Runner::new(model, controllers, config, acbc)?;
    let traj = runner.run(stream, true)?;
    match traj.blow_up {
        Some(k) => Err(SimError::BlowUp {
            transition: k,
            substep: None,
        }),
        None => Ok(traj),
    }
}

/// The first `count` trajectories of the batch, fully recorded. Blown-up
/// paths are returned truncated rather than as errors.
pub fn simulate_batch(
    model: &ShsModel,
    controllers: &Controllers,
    config: &SimConfig,
    acbc: Option<&Acbc>,
    count: u64,
) -> Result<Vec<Trajectory>, SimError> {
    let runner = Runner::new(model, controllers, config, acbc)?;
    (0..count)
        .into_par_iter()
        .map(|i| runner.run(i, true))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub n_trajectories: u64,
    pub horizon: u64,
    pub substeps_per_tau: u32,
    pub master_seed: u64,
    pub schedule: JumpSchedule,
    pub unsafe_count: u64,
    pub exceed_count: u64,
    pub exit_count: u64,
    pub blowups: u64,
    pub p_unsafe_hat: f64,
    pub p_exceed_hat: f64,
    pub p_exit_hat: f64,
    pub confidence: f64,
    pub ci_unsafe: Interval,
    pub ci_exceed: Interval,
    /// Theoretical bound on the exceedance probability over `horizon`.
    pub delta: f64,
    /// Lower end of the exceedance interval lies above `delta`.
    pub violation: bool,
    /// Lower end of the unsafe-entry interval lies above `delta`.
    pub unsafe_violation: bool,
    /// Every trajectory that entered the unsafe set also exceeded `eta`.
    pub unsafe_implies_exceed: bool,
}

pub fn monte_carlo(
    model: &ShsModel,
    controllers: &Controllers,
    acbc: &Acbc,
    config: &SimConfig,
) -> Result<MonteCarloReport, SimError> {
    let delta = bound_for(acbc, config.horizon)?.delta;
    let runner = Runner::new(model, controllers, config, Some(acbc))?;
    let outcomes: Vec<Trajectory> = (0..config.n_trajectories)
        .into_par_iter()
        .map(|i| runner.run(i, false))
        .collect::<Result<_, _>>()?;

    let count = |f: &dyn Fn(&Trajectory) -> bool| outcomes.iter().filter(|t| f(t)).count() as u64;
    let unsafe_count = count(&|t| t.first_unsafe.is_some());
    let exceed_count = count(&|t| t.first_exceed.is_some());
    let exit_count = count(&|t| t.first_exit.is_some());
    let blowups = count(&|t| t.blow_up.is_some());
    let unsafe_not_exceed = count(&|t| t.first_unsafe.is_some() && t.first_exceed.is_none());

    let n = config.n_trajectories;
    let ci_unsafe = clopper_pearson(unsafe_count, n, CONFIDENCE);
    let ci_exceed = clopper_pearson(exceed_count, n, CONFIDENCE);
    Ok(MonteCarloReport {
        n_trajectories: n,
        horizon: config.horizon,
        substeps_per_tau: config.substeps_per_tau,
        master_seed: config.master_seed,
        schedule: config.schedule.clone(),
        unsafe_count,
        exceed_count,
        exit_count,
        blowups,
        p_unsafe_hat: unsafe_count as f64 / n as f64,
        p_exceed_hat: exceed_count as f64 / n as f64,
        p_exit_hat: exit_count as f64 / n as f64,
        confidence: CONFIDENCE,
        ci_unsafe,
        ci_exceed,
        delta,
        violation: ci_exceed.lo > delta,
        unsafe_violation: ci_unsafe.lo > delta,
        unsafe_implies_exceed: unsafe_not_exceed == 0,
    })
}

/// Writes one trajectory as CSV with columns
/// `k, time, z, scenario, x_1..x_n, B_value`.
pub fn write_csv<W: io::Write>(traj: &Trajectory, out: W) -> Result<(), SimError> {
    let n = traj.points.first().map(|p| p.x.len()).unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["k", "time", "z", "scenario"].map(String::from).to_vec();
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.push("B_value".into());
    w.write_record(&header)?;
    for p in &traj.points {
        let mut row = vec![
            p.k.to_string(),
            p.time.to_string(),
            p.z.to_string(),
            p.scenario.map(|s| s.to_string()).unwrap_or_else(|| "init".into()),
        ];
        row.extend(p.x.iter().map(f64::to_string));
        row.push(p.b_value.map(|b| b.to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
