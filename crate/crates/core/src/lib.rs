//! Nonparametric estimation for right-censored data whose lifetimes and
//! censoring times are negatively associated (NA) sequences.
//!
//! The crate is organised bottom-up:
//!
//! - [`sample`]: censored samples, step functions and evaluation grids.
//! - [`generate`]: NA uniform generators, parametric marginals and censored
//!   dataset assembly.
//! - [`estimators`]: `L_n`, at-risk counts, `F_{*n}`, Kaplan-Meier and the
//!   cumulative hazard estimator.
//! - [`kernel`]: compact kernels, bandwidth schedules and kernel smoothing of
//!   step measures and of model quantities.
//! - [`oracle`]: closed-form population quantities, the influence function
//!   `eta` and strong-representation remainders.
//! - [`diagnostics`]: the three-term decomposition of `f_n - f̄_n`.
//! - [`harness`]: seeded Monte Carlo rate experiments and their reports.
//! - [`io`]: CSV/JSON sample formats.

pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod generate;
pub mod harness;
pub mod io;
pub mod kernel;
pub mod oracle;
pub mod quadrature;
pub mod sample;

pub use error::{Error, Result};
pub use estimators::KmFit;
pub use generate::{Marginal, NaScheme, SchemeKind};
pub use kernel::{BandwidthSchedule, Kernel};
pub use oracle::ParametricModel;
pub use sample::{CensoredSample, EvaluationGrid, Side, StepFunction};
