//! The one-dimensional benchmark: a cubic jump diffusion on `X = [0, 8]`
//! with initial set `[0, 1.5]` and unsafe set `[7, 8]`, in three
//! parameterizations, each with a published degree-4 certificate and affine
//! controllers.
//!
//! ```text
//! dx = (a1 x^3 + b1 nu) dt + 0.6 dW + 0.5 dP,   lambda = 0.5
//! x+ = a2 x^3 + b2 nu + 0.5 s
//! tau = 0.1, q1 = 1, q2 = 7
//! ```

use serde::{Deserialize, Serialize};

use crate::certify::CbcCandidate;
use crate::model::{JumpParams, NoiseSampler, ShsModel};
use crate::poly::{IntervalBox, Polynomial};

const BUNDLE: &str = include_str!("../data/case_study.json");

/// Constants as printed for the lifted certificate and the final guarantee.
/// These are rounded and are not all reproducible from the certificate data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reported {
    pub beta_alpha: f64,
    pub beta_eta: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub safety: f64,
}

impl Reported {
    pub fn alpha(&self, alphabar: f64) -> f64 {
        self.beta_alpha * alphabar
    }

    pub fn eta(&self, etabar: f64) -> f64 {
        self.beta_eta * etabar
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudy {
    pub id: u8,
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    /// Certificate coefficients, constant term first.
    pub bbar: [f64; 5],
    /// `(slope, intercept)` of the flow controller.
    pub nu_flow: (f64, f64),
    /// `(slope, intercept)` of the jump controller.
    pub nu_jump: (f64, f64),
    pub alphabar: f64,
    pub etabar: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub reported: Reported,
}

pub const EPS1: f64 = 0.1;
pub const EPS2: f64 = 8.0;
pub const HORIZON: u64 = 100;

impl CaseStudy {
    pub fn all() -> [CaseStudy; 3] {
        [
            CaseStudy {
                id: 1,
                a1: -0.4,
                b1: 0.5,
                a2: 0.01,
                b2: 0.06,
                bbar: [0.0369, -0.0849, 0.0814, -0.0345, 0.0054],
                nu_flow: (-0.05152, 3.0),
                nu_jump: (-0.06145, 2.6),
                alphabar: 0.13,
                etabar: 4.4,
                gamma1: 0.0015,
                gamma2: 0.0012,
                kappa1: 0.01,
                kappa2: 0.99,
                reported: Reported {
                    beta_alpha: 1.0,
                    beta_eta: 1.0,
                    kappa: 0.99,
                    gamma: 0.0012,
                    safety: 0.9443,
                },
            },
            CaseStudy {
                id: 2,
                a1: -0.3,
                b1: 0.2,
                a2: 1.01,
                b2: 1.0,
                bbar: [0.0617, -0.1375, 0.1163, -0.0438, 0.0061],
                nu_flow: (-0.02152, 4.0),
                nu_jump: (-0.99, 2.0),
                alphabar: 0.12,
                etabar: 4.6,
                gamma1: 0.0025,
                gamma2: 0.003,
                kappa1: 0.04547,
                kappa2: 1.00001,
                reported: Reported {
                    beta_alpha: 1.0032,
                    beta_eta: 1.0005,
                    kappa: 0.99,
                    gamma: 0.003,
                    safety: 0.9124,
                },
            },
            CaseStudy {
                id: 3,
                a1: 0.01,
                b1: 0.7,
                a2: 0.02,
                b2: 0.9,
                bbar: [0.1581, -0.3031, 0.2158, -0.0673, 0.0077],
                nu_flow: (-0.2852, 2.5),
                nu_jump: (-0.19, 3.0),
                alphabar: 0.16,
                etabar: 4.2,
                gamma1: 0.003,
                gamma2: 0.003,
                kappa1: -0.0005,
                kappa2: 0.98,
                reported: Reported {
                    beta_alpha: 0.9975,
                    beta_eta: 0.9825,
                    kappa: 0.997,
                    gamma: 0.003,
                    safety: 0.8939,
                },
            },
        ]
    }

    pub fn first() -> CaseStudy {
        Self::all()[0].clone()
    }

    pub fn by_id(id: u8) -> Option<CaseStudy> {
        Self::all().into_iter().find(|c| c.id == id)
    }

    pub fn model(&self) -> ShsModel {
        let vars = ["x", "nu"];
        let x = Polynomial::var("x");
        let nu = Polynomial::var("nu");
        let s = Polynomial::var("varsigma");
        let f1 = (&x.pow(3).scale(self.a1) + &nu.scale(self.b1)).with_vars(&vars).unwrap();
        let f2 = (&(&x.pow(3).scale(self.a2) + &nu.scale(self.b2)) + &s.scale(0.5))
            .with_vars(&["x", "nu", "varsigma"])
            .unwrap();
        ShsModel {
            state_vars: vec!["x".into()],
            input_vars: vec!["nu".into()],
            noise_vars: vec!["varsigma".into()],
            f1: vec![f1],
            sigma: vec![vec![Polynomial::constant(0.6).with_vars(&["x"]).unwrap()]],
            rho: vec![vec![Polynomial::constant(0.5).with_vars(&["x"]).unwrap()]],
            lambda: vec![0.5],
            f2: vec![f2],
            noise: vec![NoiseSampler::default()],
            jump: JumpParams {
                tau: 0.1,
                q1: 1,
                q2: 7,
            },
            state_set: IntervalBox::interval("x", 0.0, 8.0).unwrap(),
            initial_set: IntervalBox::interval("x", 0.0, 1.5).unwrap(),
            unsafe_set: IntervalBox::interval("x", 7.0, 8.0).unwrap(),
        }
    }

    pub fn candidate(&self) -> CbcCandidate {
        let affine = |(slope, intercept): (f64, f64)| Polynomial::univariate("x", &[intercept, slope]);
        CbcCandidate {
            bbar: Polynomial::univariate("x", &self.bbar),
            kappa1: self.kappa1,
            kappa2: self.kappa2,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            alphabar: self.alphabar,
            etabar: self.etabar,
            nu_flow: vec![affine(self.nu_flow)],
            nu_jump: vec![affine(self.nu_jump)],
        }
    }

    pub fn to_file(&self) -> CaseFile {
        CaseFile {
            id: self.id,
            model: self.model(),
            candidate: self.candidate(),
            eps1: EPS1,
            eps2: EPS2,
            horizon: HORIZON,
            reported: self.reported,
        }
    }
}

/// One entry of the bundled case file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFile {
    pub id: u8,
    pub model: ShsModel,
    pub candidate: CbcCandidate,
    pub eps1: f64,
    pub eps2: f64,
    pub horizon: u64,
    pub reported: Reported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseBundle {
    pub cases: Vec<CaseFile>,
}

impl CaseBundle {
    /// The bundled `case_study.json`.
    pub fn bundled() -> CaseBundle {
        serde_json::from_str(BUNDLE).expect("bundled case file is valid")
    }

    pub fn from_builders() -> CaseBundle {
        CaseBundle {
            cases: CaseStudy::all().iter().map(CaseStudy::to_file).collect(),
        }
    }

    pub fn case(&self, id: u8) -> Option<&CaseFile> {
        self.cases.iter().find(|c| c.id == id)
    }

    pub fn raw_json() -> &'static str {
        BUNDLE
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_file_matches_builders() {
        let built = CaseBundle::from_builders();
        if std::env::var_os("REGENERATE_CASE_STUDY").is_some() {
            let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/case_study.json");
            let mut s = serde_json::to_string_pretty(&built).unwrap();
            s.push('\n');
            std::fs::write(path, s).unwrap();
            return;
        }
        assert_eq!(CaseBundle::bundled(), built);
    }

    #[test]
    fn certificate_at_unsafe_boundary() {
        let b = CaseStudy::first().candidate().bbar;
        // Horner by hand
        let c = [0.0369, -0.0849, 0.0814, -0.0345, 0.0054];
        let horner = c.iter().rev().fold(0.0, |acc, &k| acc * 7.0 + k);
        let v = b.eval(&[("x", 7.0)]).unwrap();
        assert!((v - horner).abs() < 1e-12);
        assert!((v - 4.5631).abs() < 1e-4);
        let d = b.derivative("x").eval(&[("x", 0.0)]).unwrap();
        assert_eq!(d, -0.0849);
    }

    #[test]
    fn jump_map_mean_at_origin() {
        let case = CaseStudy::first();
        let m = case.model();
        let nu = case.candidate().nu_jump[0].eval(&[("x", 0.0)]).unwrap();
        let mean = m.f2[0]
            .eval(&[("x", 0.0), ("nu", nu), ("varsigma", 0.0)])
            .unwrap();
        assert!((mean - 0.156).abs() < 1e-12);
    }
}
