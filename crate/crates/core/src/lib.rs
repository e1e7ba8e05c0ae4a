//! Backward-conditional collider models of EPR/Bell and GHZ experiments.
//!
//! The hidden variable `λ` sits downstream of outcomes and settings
//! (`P(a1,a2,λ|α1,α2) = P(a1|α1) P(a2|α2) P(λ|a1,a2,α1,α2)`), and quantum
//! statistics reappear once a run is conditioned on a particular `λ`.
//! Everything is computed by direct enumeration over small discrete tables,
//! either exactly (rational backend) or in `f64`.
//!
//! Modules, bottom-up:
//!
//! - [`dist`]: joint tables, marginalization, conditioning, expectations.
//! - [`quantum`]: closed-form Bell-state, GHZ and PR-box predictions.
//! - [`backward`]: the two-wing collider model, SI / no-signalling / LC checks
//!   and the signalling counterexample.
//! - [`ghz`]: the three-wing model and the classical-assignment exhaustion.
//! - [`chsh`]: the CHSH functional, LHV and quantum bounds, the PR-box model.
//! - [`sim`]: seeded Monte Carlo replay with postselection on `λ`.

pub mod backward;
pub mod chsh;
pub mod dist;
pub mod error;
pub mod ghz;
pub mod prob;
pub mod quantum;
pub mod report;
pub mod sim;

pub use backward::{
    bell_backward_model, signalling_counterexample_model, BackwardModel, ColliderKernel,
    LambdaSpace, SettingDomain, Wing,
};
pub use chsh::{
    backward_model_chsh, chsh_value, lhv_max_chsh, pr_box_backward_model, quantum_chsh_scan,
    ChshConfig, DeterministicStrategy, ScanReport,
};
pub use dist::{Assignment, Joint, Value, Variable};
pub use error::{Error, Result};
pub use ghz::{classical_assignment_exhaustion, ghz_allowed, ghz_backward_model, GhzModel};
pub use prob::{Backend, Prob, Rational};
pub use quantum::{Angle, BellState, BinarySetting, Outcome, SettingSpec};
pub use report::{CheckKind, CheckReport, WitnessReport, WorstCase};

/// Tool version embedded in every emitted report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
