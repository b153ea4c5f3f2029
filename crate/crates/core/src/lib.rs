//! Active subspace discovery for black-box objectives.
//!
//! Fit a surrogate (Kriging or sparse Legendre PCE) to sampled designs, average
//! outer products of its gradients, and read the problem's dominant directions
//! off the eigendecomposition. The reduced coordinates and eigenvalue decay feed
//! a small rule set that flags ridge structure, unimodality and multimodality.

pub mod analyze;
pub mod asm;
pub mod config;
pub mod csvio;
pub mod design;
pub mod diagnose;
pub mod ego;
pub mod eigen;
pub mod error;
pub mod functions;
pub mod kriging;
pub mod optim;
pub mod par;
pub mod pce;
pub mod rng;
pub mod surrogate;
pub mod svg;

pub use analyze::{analyze, run_analysis, run_optimize, AnalysisOutcome};
pub use asm::{ActiveSubspace, ActivityScores, GradientSet, SamplingMode};
pub use config::{AnalysisConfig, OptimizeConfig};
pub use design::{DesignSpace, SampleSet};
pub use diagnose::{DiagnosisReport, Flag, Thresholds};
pub use ego::{EgoConfig, EgoResult};
pub use error::{Error, Result};
pub use functions::TestFunction;
pub use kriging::KrigingModel;
pub use pce::{PceConfig, PceModel};
pub use surrogate::{GradientMethod, Surrogate};
