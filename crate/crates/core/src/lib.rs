//! Retrospective human causal responsibility in interactions with
//! intelligent decision-support systems.
//!
//! Three measures are provided:
//!
//! | Measure | Scope | Definition |
//! |---------|-------|------------|
//! | [`responsibility::resp_average`] | repeated interactions | H(Z \| Y) / H(Z) |
//! | [`responsibility::resp_information`] | single event | D(x_a, x_aS) / (D(x_a, x_aS) + D(x_a, x_aH)) |
//! | [`responsibility::reasonability`] | single event | p(chosen) / max p under SoftMax |
//!
//! `D` is the Jensen-Shannon distance (base-2, bounded in `[0, 1]`), and
//! `x_aS`, `x_aH`, `x_a` are the posteriors over environment states using
//! only the system output, only the human observation, and both.
//!
//! The [`sdt`] module specializes the single-event measures to a binary
//! alert system under equal-variance Gaussian signal detection theory.
//! [`simulator`] generates seeded interaction logs from the same model and
//! computes the exact average measure by quadrature, [`event_log`]
//! estimates it from CSV logs, and [`sweep`] evaluates the single-event
//! measures over grids of detection sensitivities.

pub mod event_log;
pub mod info;
pub mod responsibility;
pub mod sdt;
pub mod simulator;
pub mod sweep;

mod error;

pub use error::{Error, Result};
pub use info::{JointTable, ProbDist};
pub use responsibility::{ActionSet, AnalysisReport};
pub use sdt::{ConfusionRates, PayoffMatrix, Scenario, SystemBeta, SystemOutput};
