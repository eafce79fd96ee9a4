//! Serializable run records. Every residual is a supremum over the probe
//! grid stored next to it.

use serde::{Deserialize, Serialize};

use super::probe::ProbeSpec;

pub const REPORT_SCHEMA: &str = "corrint.run-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Global step index (1-based).
    pub k: usize,
    pub term: usize,
    pub direction: [f64; 2],
    /// False when the coefficient vanished on the probes and no layer was added.
    pub active: bool,
    pub lambda: f64,
    pub trial_lambdas: Vec<f64>,
    pub remainder_sup: f64,
    pub remainder_bound: f64,
    pub c0_sup: f64,
    pub c0_bound: f64,
    pub e_over_lambda_sup: f64,
    pub e_over_lambda_bound: f64,
    /// `sup |Γ|(|ξ|+|ζ|)/λ`, the a-priori C⁰ bound of the layer.
    pub layer_c0_bound: f64,
    pub amp_sup: f64,
    pub grid_nodes: usize,
    pub probes: ProbeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub eps: f64,
    pub ell: Option<f64>,
    pub delta: f64,
    /// `0.9·min{λ_min off Ω_{ℓ/2}, ε/(2 sup), √ε}`.
    pub delta_margin_rule: f64,
    /// Cap from the target tolerance, when that rule is active.
    pub delta_tol_cap: Option<f64>,
    pub m: usize,
    pub m0_bound: usize,
    pub coefficient_sign_change: bool,
    pub defect_sup_before: f64,
    pub defect_sup_collar_before: f64,
    pub defect_min_eig_off_collar_before: f64,
    pub defect_sup_after: f64,
    pub defect_min_eig_after: f64,
    pub defect_min_eig_off_collar_after: f64,
    pub c0_drift: f64,
    pub c1_drift: f64,
    pub c1_constant: f64,
    pub c1_bound: f64,
    /// `c1_drift / sqrt(defect_sup_before)`, the measured stage constant.
    pub c1_ratio: f64,
    pub probes_before: ProbeSpec,
    pub probes_after: ProbeSpec,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub eps: f64,
    pub tol: f64,
    pub max_stages: usize,
    pub eps_schedule: Vec<f64>,
    pub initial_defect_sup: f64,
    pub final_defect_sup: f64,
    pub final_defect_min_eig: f64,
    pub c0_distance_to_base: f64,
    /// Base map values on the boundary face reproduced bit-for-bit.
    pub boundary_exact: Option<bool>,
    pub boundary_points: usize,
    pub final_probes: ProbeSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    NotConverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub model: String,
    pub seed: u64,
    pub status: RunStatus,
    pub error: Option<String>,
    pub stages: Vec<StageRecord>,
    pub iteration: Option<IterationRecord>,
}

impl RunReport {
    pub fn new(model: &str, seed: u64) -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            model: model.to_string(),
            seed,
            status: RunStatus::NotConverged,
            error: None,
            stages: Vec::new(),
            iteration: None,
        }
    }
}
