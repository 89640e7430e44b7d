//! Verification toolkit for control barrier certificates of stochastic hybrid
//! systems: jump-diffusion flow interleaved with stochastic jumps at sampled
//! instants.

pub mod augment;
pub mod bound;
pub mod case_study;
pub mod certify;
pub mod model;
pub mod poly;
pub mod repro;
pub mod sim;
pub mod synth;

pub use augment::{construct_acbc, Acbc, Regime};
pub use bound::{compute_delta, SafetyBound};
pub use certify::{check_cbc, CbcCandidate, CbcReport};
pub use model::{AugmentedState, JumpParams, JumpSchedule, ShsModel};
pub use poly::{IntervalBox, NoiseMoments, Polynomial};
