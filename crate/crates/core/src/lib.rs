//! Streaming temporal smoothing of classifier outputs on the probability
//! simplex.
//!
//! Class-probability vectors from one or more classifiers are treated as
//! Dirichlet draws whose concentration parameter is tracked over time with a
//! conjugate prior. Each new observation updates the prior through a
//! minorization-maximization search for the posterior mode, weighted by a
//! per-classifier trust coefficient.
//!
//! Module map:
//!
//! * [`specfn`]: log-gamma, digamma and monotone inversion.
//! * [`dirichlet`]: densities, modes and the posterior objective.
//! * [`filter`]: the MM mode solver and the per-observation update.
//! * [`fusion`]: classifier schedules and the Raw / Simple / Single / Multiple smoothers.
//! * [`harness`]: synthetic benchmark generation and evaluation metrics.
//! * [`cli`]: the command-line surface and stream formats.

pub mod cli;
pub mod dirichlet;
pub mod error;
pub mod filter;
pub mod fusion;
pub mod harness;
pub mod specfn;

pub use dirichlet::{ConjugatePriorParams, DirichletParams, ProbabilityVector};
pub use error::{Error, Result};
pub use filter::{FilterConfig, FilterState, Observation};
pub use fusion::{ClassifierProfile, SchedulePolicy, Smoother, SmootherKind};
pub use harness::{MarkovChainSpec, MetricsReport, SyntheticClassifierSpec};
pub use specfn::SpecFnMode;
