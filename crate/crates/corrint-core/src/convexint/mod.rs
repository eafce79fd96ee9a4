//! Steps, stages, the iteration, the single-step homotopy and the embedding check.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::DecompositionError;
use crate::evaluation::EvalError;

pub mod cutoff;
pub mod embedding;
pub mod homotopy;
pub mod iterate;
pub mod probe;
pub mod report;
pub mod stage;
pub mod step;
pub mod survey;

pub use cutoff::CutoffProfile;
pub use embedding::{check_embedding, EmbeddingReport};
pub use homotopy::{homotopy_bounds, homotopy_scale, step_homotopy, HomotopySample};
pub use iterate::{iterate, IterateFailure, IterateParams, IterateResult};
pub use probe::ProbeSpec;
pub use report::{IterationRecord, RunReport, RunStatus, StageRecord, StepRecord};
pub use stage::{do_stage, DeltaRule, StageOutcome, StageParams};
pub use step::{do_step, StepOutcome, StepParams};
pub use survey::probes_for;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvexIntError {
    #[error("λ search exhausted at λ = {lambda:e} ({reason})")]
    LambdaCapExceeded { lambda: f64, reason: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error("estimate {name} violated: measured {measured:e} > bound {bound:e}")]
    EstimateViolated { name: String, measured: f64, bound: f64 },
    #[error("shortness lost at {x:?}: defect eigenvalue {eigenvalue:e}")]
    ShortnessLost { x: Vec<f64>, eigenvalue: f64 },
    #[error("not converged after {stages} stages: defect {achieved:e}")]
    NotConverged { stages: usize, achieved: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Geometric λ search and probe-grid policy shared by all steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSearch {
    pub lambda0: f64,
    pub factor: f64,
    pub lambda_max: f64,
    /// Probe samples per period along each axis (at least 8).
    pub samples_per_period: f64,
    /// Minimum probes per axis.
    pub probe_floor: usize,
    /// Largest probe grid a single measurement may use.
    pub probe_budget: usize,
    pub seed: u64,
}

impl Default for LambdaSearch {
    fn default() -> Self {
        Self {
            lambda0: 4.0,
            factor: 2.0,
            lambda_max: 1e9,
            samples_per_period: 8.0,
            probe_floor: 64,
            probe_budget: 20_000_000,
            seed: 0,
        }
    }
}

impl LambdaSearch {
    pub fn validate(&self) -> Result<(), ConvexIntError> {
        let bad = |m: &str| Err(ConvexIntError::InvalidParams(m.to_string()));
        if !(self.lambda0 > 0.0) {
            return bad("lambda0 must be positive");
        }
        if !(self.factor > 1.0) {
            return bad("lambda_factor must exceed 1");
        }
        if !(self.samples_per_period >= 8.0) {
            return bad("probe density must be at least 8 samples per period");
        }
        if self.probe_floor < 2 {
            return bad("probe floor must be at least 2");
        }
        Ok(())
    }
}
