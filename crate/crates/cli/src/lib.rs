//! Command-line front end: model ingestion, certificate checks, lifting,
//! bounds, simulation, synthesis and case reproduction.
//!
//! Exit codes: 0 success, 1 a checked condition fails (or a stage fails),
//! 2 a check is inconclusive, 3 malformed input or a broken input invariant.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use shs_barrier::augment::{check_acbc_conditions, AugmentError, DEFAULT_EPS1};
use shs_barrier::bound::bound_for;
use shs_barrier::case_study::CaseBundle;
use shs_barrier::certify::CertifyError;
use shs_barrier::model::ModelError;
use shs_barrier::poly::Verdict;
use shs_barrier::repro::{run_repro, ReproConfig};
use shs_barrier::sim::{monte_carlo, simulate_batch, write_csv, Controllers, SimConfig, Trajectory};
use shs_barrier::synth::{search, SynthStatus, SynthTemplate};
use shs_barrier::{check_cbc, construct_acbc, Acbc, CbcCandidate, IntervalBox, JumpSchedule, ShsModel};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_INCONCLUSIVE: u8 = 2;
pub const EXIT_INPUT: u8 = 3;

/// Problems with what the user handed in. Always exit code 3.
#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: malformed JSON at line {line}, column {column}: {msg}")]
    Json {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{path}: invariant `{invariant}` violated")]
    Invariant { path: String, invariant: String },
    #[error("{0}")]
    Argument(String),
}

/// A pipeline stage could not complete. Exit code 1.
#[derive(Debug, Error)]
#[error("stage `{stage}` failed: {message}")]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "shsbc", version, about = "Barrier-certificate safety verification for stochastic hybrid systems")]
pub struct Cli {
    /// Directory receiving reports, trajectories and the run manifest.
    #[arg(long, global = true, default_value = "shsbc-out")]
    pub out: PathBuf,
    /// Master seed for simulation and synthesis.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Encoding of the report printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the five certificate conditions.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        /// Domain for the flow, jump and nonnegativity conditions, e.g. `x=0:8`.
        /// Defaults to the model's state set.
        #[arg(long)]
        domain: Option<String>,
    },
    /// Lift a certificate to the counter-augmented system.
    Augment {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPS1)]
        eps1: f64,
        /// Defaults to q2 + 1.
        #[arg(long)]
        eps2: Option<f64>,
        /// Also check the lifted conditions on the model's state set.
        #[arg(long)]
        check: bool,
    },
    /// Probability bound over a horizon from a lifted certificate.
    Bound {
        #[arg(long)]
        acbc: PathBuf,
        #[arg(long, default_value_t = 100)]
        horizon: u64,
    },
    /// Simulate closed-loop trajectories; with `--acbc`, estimate the
    /// exceedance probability and compare with the bound.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        acbc: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        runs: u64,
        #[arg(long, default_value_t = 100)]
        horizon: u64,
        #[arg(long, default_value_t = shs_barrier::sim::DEFAULT_SUBSTEPS)]
        substeps: u32,
        /// `fixed:d`, `cyclic:d1,d2,...` or `uniform`.
        #[arg(long, default_value = "uniform")]
        schedule: JumpSchedule,
        /// Trajectories written as CSV when estimating.
        #[arg(long, default_value_t = 10)]
        record: u64,
    },
    /// Search for a certificate.
    Synthesize {
        #[arg(long)]
        model: PathBuf,
        /// Template JSON; defaults apply to missing fields.
        #[arg(long)]
        template: Option<PathBuf>,
        /// Candidate to start from.
        #[arg(long)]
        warm: Option<PathBuf>,
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Reproduce a bundled benchmark case end to end.
    Repro {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        case: u8,
        #[arg(long, default_value_t = 1000)]
        runs: u64,
        #[arg(long, default_value_t = shs_barrier::sim::DEFAULT_SUBSTEPS)]
        substeps: u32,
        #[arg(long, default_value = "uniform")]
        schedule: JumpSchedule,
        /// Trajectories written as CSV.
        #[arg(long, default_value_t = 10)]
        plot: u64,
        /// Extra schedules to estimate under, reported as diagnostics.
        #[arg(long)]
        diagnose: Vec<JumpSchedule>,
        /// Treat failed conditions and estimator violations as failures.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Record of one invocation. Everything except `wall_clock_unix_ms` is a
/// function of the inputs and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub seed: u64,
    pub version: String,
    pub wall_clock_unix_ms: u64,
    pub outputs: Vec<FileDigest>,
    pub exit_code: u8,
}

pub const MANIFEST: &str = "manifest.json";

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Run {
    out: PathBuf,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl Run {
    fn read(&mut self, path: &Path) -> Result<String> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256(text.as_bytes()),
        });
        Ok(text)
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: sha256(bytes),
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    fn write_trajectories(&mut self, trajs: &[Trajectory]) -> Result<()> {
        for t in trajs {
            let mut buf = Vec::new();
            write_csv(t, &mut buf)?;
            self.write_bytes(&format!("trajectories/traj_{:04}.csv", t.stream), &buf)?;
        }
        Ok(())
    }

    fn model(&mut self, path: &Path) -> Result<ShsModel> {
        let text = self.read(path)?;
        let p = path.display().to_string();
        let model = ShsModel::from_json(&text).map_err(|e| match e {
            ModelError::Json { line, column, msg } => InputError::Json {
                path: p.clone(),
                line,
                column,
                msg,
            },
            other => InputError::Invariant {
                path: p.clone(),
                invariant: other.to_string(),
            },
        })?;
        if let Some(v) = model.validate().first() {
            return Err(InputError::Invariant {
                path: p,
                invariant: v.to_string(),
            }
            .into());
        }
        Ok(model)
    }

    fn json<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        let text = self.read(path)?;
        serde_json::from_str(&text).map_err(|e| {
            InputError::Json {
                path: path.display().to_string(),
                line: e.line(),
                column: e.column(),
                msg: e.to_string(),
            }
            .into()
        })
    }

    fn candidate(&mut self, path: &Path, model: &ShsModel) -> Result<CbcCandidate> {
        let cand: CbcCandidate = self.json(path)?;
        let invariant = |invariant: String| InputError::Invariant {
            path: path.display().to_string(),
            invariant,
        };
        if let Err(e) = cand.validate() {
            return Err(invariant(invariant_name(&e)).into());
        }
        if cand.nu_flow.len() != model.m() || cand.nu_jump.len() != model.m() {
            return Err(invariant(format!("one controller per input ({} inputs)", model.m())).into());
        }
        Ok(cand)
    }

    fn acbc(&mut self, path: &Path) -> Result<Acbc> {
        let acbc: Acbc = self.json(path)?;
        if let Err(e) = acbc.base.validate() {
            return Err(InputError::Invariant {
                path: path.display().to_string(),
                invariant: invariant_name(&e),
            }
            .into());
        }
        Ok(acbc)
    }
}

fn invariant_name(e: &CertifyError) -> String {
    match e {
        CertifyError::Invariant(name) => name.to_string(),
        other => other.to_string(),
    }
}

/// Parses `x=0:8,y=-1:1`.
pub fn parse_domain(spec: &str) -> Result<IntervalBox, InputError> {
    let bad = || InputError::Argument(format!("domain `{spec}`: expected var=lo:hi[,var=lo:hi...]"));
    let mut bounds = Vec::new();
    for part in spec.split(',') {
        let (var, range) = part.split_once('=').ok_or_else(bad)?;
        let (lo, hi) = range.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        bounds.push((var.trim().to_string(), lo, hi));
    }
    IntervalBox::new(&bounds).map_err(|e| InputError::Argument(format!("domain `{spec}`: {e}")))
}

fn domain_or_state_set(spec: &Option<String>, model: &ShsModel) -> Result<IntervalBox> {
    Ok(match spec {
        Some(s) => parse_domain(s)?,
        None => model.state_set.clone(),
    })
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Holds => EXIT_OK,
        Verdict::Fails => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn augment_error(e: AugmentError) -> anyhow::Error {
    match e {
        AugmentError::Eps1(_) | AugmentError::Eps2 { .. } => InputError::Argument(e.to_string()).into(),
        AugmentError::Certify(CertifyError::Invariant(name)) => InputError::Invariant {
            path: "candidate".into(),
            invariant: name.into(),
        }
        .into(),
        other => StageError {
            stage: "augment".into(),
            message: other.to_string(),
        }
        .into(),
    }
}

/// Flattens a JSON value into `path,value` rows.
pub fn to_csv_rows(value: &serde_json::Value) -> Result<String> {
    fn walk(prefix: &str, v: &serde_json::Value, rows: &mut Vec<(String, String)>) {
        let join = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            serde_json::Value::Object(m) => m.iter().for_each(|(k, v)| walk(&join(k), v, rows)),
            serde_json::Value::Array(a) => a
                .iter()
                .enumerate()
                .for_each(|(i, v)| walk(&join(&i.to_string()), v, rows)),
            serde_json::Value::String(s) => rows.push((prefix.to_string(), s.clone())),
            serde_json::Value::Null => rows.push((prefix.to_string(), String::new())),
            other => rows.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", value, &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["field", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Result of a command: the stdout report and the exit code.
pub struct Outcome {
    pub report: serde_json::Value,
    pub code: u8,
}

fn outcome<T: Serialize>(report: &T, code: u8) -> Result<Outcome> {
    Ok(Outcome {
        report: serde_json::to_value(report)?,
        code,
    })
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    trajectories: u64,
    first_unsafe: Vec<Option<u64>>,
    blow_ups: Vec<Option<u64>>,
}

fn execute(cli: &Cli, run: &mut Run, seed: &mut u64) -> Result<Outcome> {
    match &cli.command {
        Command::Verify {
            model,
            candidate,
            domain,
        } => {
            let m = run.model(model)?;
            let c = run.candidate(candidate, &m)?;
            let dom = domain_or_state_set(domain, &m)?;
            let report = check_cbc(&m, &c, &dom).map_err(|e| InputError::Argument(e.to_string()))?;
            run.write_json("cbc_report.json", &report)?;
            outcome(&report, verdict_code(report.verdict()))
        }
        Command::Augment {
            model,
            candidate,
            eps1,
            eps2,
            check,
        } => {
            let m = run.model(model)?;
            let c = run.candidate(candidate, &m)?;
            let eps2 = eps2.unwrap_or_else(|| shs_barrier::augment::default_eps2(&m.jump));
            let acbc = construct_acbc(&c, &m.jump, *eps1, eps2).map_err(augment_error)?;
            run.write_json("acbc.json", &acbc)?;
            if *check {
                let report = check_acbc_conditions(&m, &acbc, &m.state_set).map_err(augment_error)?;
                run.write_json("acbc_check.json", &report)?;
                return outcome(&report, verdict_code(report.verdict()));
            }
            outcome(&acbc, EXIT_OK)
        }
        Command::Bound { acbc, horizon } => {
            let a = run.acbc(acbc)?;
            let bound = bound_for(&a, *horizon).map_err(|e| StageError {
                stage: "bound".into(),
                message: e.to_string(),
            })?;
            run.write_json("bound.json", &bound)?;
            outcome(&bound, EXIT_OK)
        }
        Command::Simulate {
            model,
            candidate,
            acbc,
            runs,
            horizon,
            substeps,
            schedule,
            record,
        } => {
            let m = run.model(model)?;
            let c = run.candidate(candidate, &m)?;
            let a = acbc.as_ref().map(|p| run.acbc(p)).transpose()?;
            let cfg = SimConfig {
                substeps_per_tau: *substeps,
                horizon: *horizon,
                n_trajectories: *runs,
                master_seed: *seed,
                schedule: schedule.clone(),
                initial_state: None,
            };
            cfg.validate(&m).map_err(|e| InputError::Argument(e.to_string()))?;
            let ctl = Controllers::from_candidate(&c);
            let sim_stage = |e: shs_barrier::sim::SimError| StageError {
                stage: "simulate".into(),
                message: e.to_string(),
            };
            match a {
                Some(a) => {
                    let report = monte_carlo(&m, &ctl, &a, &cfg).map_err(sim_stage)?;
                    let trajs =
                        simulate_batch(&m, &ctl, &cfg, Some(&a), (*record).min(*runs)).map_err(sim_stage)?;
                    run.write_trajectories(&trajs)?;
                    run.write_json("monte_carlo.json", &report)?;
                    let code = if report.violation { EXIT_FAIL } else { EXIT_OK };
                    outcome(&report, code)
                }
                None => {
                    let trajs = simulate_batch(&m, &ctl, &cfg, None, *runs).map_err(sim_stage)?;
                    run.write_trajectories(&trajs)?;
                    let summary = SimulateSummary {
                        trajectories: *runs,
                        first_unsafe: trajs.iter().map(|t| t.first_unsafe).collect(),
                        blow_ups: trajs.iter().map(|t| t.blow_up).collect(),
                    };
                    run.write_json("simulation.json", &summary)?;
                    outcome(&summary, EXIT_OK)
                }
            }
        }
        Command::Synthesize {
            model,
            template,
            warm,
            domain,
            budget,
        } => {
            let m = run.model(model)?;
            let mut t: SynthTemplate = match template {
                Some(p) => run.json(p)?,
                None => SynthTemplate::default(),
            };
            match cli.seed {
                Some(s) => t.seed = s,
                None => *seed = t.seed,
            }
            if let Some(b) = budget {
                t.budget = *b;
            }
            let w = warm.as_ref().map(|p| run.candidate(p, &m)).transpose()?;
            let dom = domain_or_state_set(domain, &m)?;
            let result = search(&m, &t, &dom, w.as_ref()).map_err(|e| match e {
                shs_barrier::synth::SynthError::Template(msg) => anyhow::Error::from(InputError::Invariant {
                    path: "template".into(),
                    invariant: msg,
                }),
                other => StageError {
                    stage: "synthesize".into(),
                    message: other.to_string(),
                }
                .into(),
            })?;
            run.write_json("candidate.json", &result.candidate)?;
            run.write_json("synth_result.json", &result)?;
            let code = match result.status {
                SynthStatus::Feasible => EXIT_OK,
                SynthStatus::InfeasibleAtBudget => EXIT_FAIL,
            };
            outcome(&result, code)
        }
        Command::Repro {
            case,
            runs,
            substeps,
            schedule,
            plot,
            diagnose,
            strict,
        } => {
            let bundle = CaseBundle::bundled();
            let file = bundle.case(*case).ok_or_else(|| InputError::Argument(format!("no case {case}")))?;
            let cfg = ReproConfig {
                master_seed: *seed,
                n_trajectories: *runs,
                substeps_per_tau: *substeps,
                schedule: schedule.clone(),
                plot_trajectories: *plot,
                diagnostic_schedules: diagnose.clone(),
            };
            let out = run_repro(file, &cfg).map_err(|e| StageError {
                stage: e.stage.to_string(),
                message: e.message,
            })?;
            let s = &out.summary;
            run.write_json("model.json", &file.model)?;
            run.write_json("candidate.json", &file.candidate)?;
            run.write_json("acbc.json", &s.acbc)?;
            run.write_json("summary.json", s)?;
            run.write_trajectories(&out.trajectories)?;

            eprintln!(
                "case {}: verify {:?} (min margin {:.6}); lifted with regime {}, kappa {:.6}, gamma {:.6}",
                s.case,
                s.verify_verdict,
                s.verify.min_margin(),
                s.acbc.regime,
                s.acbc.kappa,
                s.acbc.gamma
            );
            eprintln!(
                "bound over {} transitions: safety >= {:.4} (printed {:.4}), full precision {:.4}",
                s.horizon,
                s.printed.bound.safety(),
                s.printed.printed_safety,
                s.full_precision.safety()
            );
            let mc = &s.monte_carlo;
            eprintln!(
                "monte carlo ({} runs): unsafe {:.4}, exceed {:.4} (99% interval [{:.4}, {:.4}]) vs delta {:.4}",
                mc.n_trajectories, mc.p_unsafe_hat, mc.p_exceed_hat, mc.ci_exceed.lo, mc.ci_exceed.hi, mc.delta
            );
            let findings = s.findings();
            for f in &findings {
                eprintln!("finding: {f}");
            }
            let code = if *strict && !findings.is_empty() {
                EXIT_FAIL
            } else {
                EXIT_OK
            };
            outcome(s, code)
        }
    }
}

fn write_manifest(run: &Run, cli_args: &[String], seed: u64, code: u8) -> Result<()> {
    let manifest = RunManifest {
        command: cli_args.to_vec(),
        inputs: run.inputs.clone(),
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_unix_ms: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
        outputs: run.outputs.clone(),
        exit_code: code,
    };
    fs::create_dir_all(&run.out)?;
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(run.out.join(MANIFEST), text)?;
    Ok(())
}

fn error_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<InputError>().is_some() {
        EXIT_INPUT
    } else {
        EXIT_FAIL
    }
}

/// Runs a parsed command line, prints the report, writes the manifest and
/// returns the exit code.
pub fn run(cli: Cli, args: &[String]) -> u8 {
    let mut run = Run {
        out: cli.out.clone(),
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    let mut seed = cli.seed.unwrap_or(0);
    let code = match execute(&cli, &mut run, &mut seed) {
        Ok(o) => {
            let printed = match cli.format {
                Format::Json => serde_json::to_string_pretty(&o.report).map(|s| s + "\n").map_err(Into::into),
                Format::Csv => to_csv_rows(&o.report),
            };
            match printed {
                Ok(text) => {
                    print!("{text}");
                    o.code
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    EXIT_FAIL
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            error_code(&e)
        }
    };
    if let Err(e) = write_manifest(&run, args, seed, code) {
        eprintln!("error: writing manifest: {e:#}");
        return code.max(EXIT_FAIL);
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_parsing() {
        let b = parse_domain("x=0:8").unwrap();
        assert_eq!(b.vars(), vec!["x".to_string()]);
        assert!(parse_domain("x=0").is_err());
        assert!(parse_domain("x=3:1").is_err());
    }

    #[test]
    fn csv_flattening() {
        let v = serde_json::json!({"a": [1, {"b": "p,q"}], "c": null});
        let text = to_csv_rows(&v).unwrap();
        assert_eq!(text, "field,value\na.0,1\na.1.b,\"p,q\"\nc,\n");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
