//! Stages with budgets `ε_k = ε·(90/π⁴)/k⁴` until the sampled defect drops
//! below the target.

use std::f64::consts::PI;

use crate::evaluation::LayeredMap;
use crate::geomcore::{Pt, SymMatField};

use super::report::{IterationRecord, RunReport, RunStatus};
use super::stage::{do_stage, DeltaRule, StageParams};
use super::survey::{probes_for, survey};
use super::{ConvexIntError, LambdaSearch};

#[derive(Debug, Clone, PartialEq)]
pub struct IterateParams {
    pub model: String,
    pub eps: f64,
    pub tol: f64,
    pub max_stages: usize,
    pub delta_rule: DeltaRule,
    pub pre_rotate: bool,
    pub search: LambdaSearch,
}

impl IterateParams {
    pub fn new(model: &str, eps: f64, tol: f64, max_stages: usize) -> Self {
        Self {
            model: model.to_string(),
            eps,
            tol,
            max_stages,
            delta_rule: DeltaRule::default(),
            pre_rotate: false,
            search: LambdaSearch::default(),
        }
    }
}

/// `ε_k` for stage `k ≥ 1`; the budgets sum to `ε`.
pub fn eps_schedule(eps: f64, k: usize) -> f64 {
    eps * (90.0 / PI.powi(4)) / (k as f64).powi(4)
}

#[derive(Debug, Clone)]
pub struct IterateResult {
    pub map: LayeredMap,
    pub report: RunReport,
    /// Per stage: the map before its last active step and that step's layer.
    pub last_steps: Vec<Option<(LayeredMap, crate::evaluation::CorrugationLayer)>>,
}

/// A run that stopped early; carries the partial map and report.
#[derive(Debug, Clone)]
pub struct IterateFailure {
    pub error: ConvexIntError,
    pub partial: IterateResult,
}

pub fn iterate(u0: &LayeredMap, g: &SymMatField, p: &IterateParams) -> Result<IterateResult, Box<IterateFailure>> {
    let mut report = RunReport::new(&p.model, p.search.seed);
    let mut res = IterateResult { map: u0.clone(), report: report.clone(), last_steps: Vec::new() };
    let fail = |error: ConvexIntError, mut res: IterateResult, status: RunStatus| {
        res.report.status = status;
        res.report.error = Some(error.to_string());
        Box::new(IterateFailure { error, partial: res })
    };
    if !(p.eps > 0.0 && p.tol > 0.0) {
        let e = ConvexIntError::InvalidParams("need ε > 0 and tol > 0".into());
        return Err(fail(e, res, RunStatus::Failed));
    }
    let initial = match survey(u0, g, &probes_for(u0, &p.search, 0x1417), None) {
        Ok(s) => s,
        Err(e) => return Err(fail(e.into(), res, RunStatus::Failed)),
    };
    if initial.min_eig < -1e-10 {
        let n = u0.n();
        let e = ConvexIntError::ShortnessLost { x: initial.min_eig_at[..n].to_vec(), eigenvalue: initial.min_eig };
        return Err(fail(e, res, RunStatus::Failed));
    }

    let mut map = u0.clone();
    let mut defect = initial.sup;
    let mut ell_cap = None;
    let mut steps = 0;
    let mut schedule = Vec::new();
    let mut error = None;
    for k in 1..=p.max_stages {
        if defect <= p.tol {
            break;
        }
        let eps_k = eps_schedule(p.eps, k);
        schedule.push(eps_k);
        let sp = StageParams {
            eps: eps_k,
            tol: p.tol,
            delta_rule: p.delta_rule,
            pre_rotate: p.pre_rotate,
            search: p.search,
            ell_cap,
            decomposition_samples: 96,
        };
        match do_stage(&map, g, &sp, k, steps) {
            Ok(out) => {
                steps += out.record.steps.len();
                defect = out.record.defect_sup_after;
                ell_cap = out.ell;
                report.stages.push(out.record);
                res.last_steps.push(out.last_step);
                map = out.map;
            }
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    let converged = error.is_none() && defect <= p.tol;
    if error.is_none() && !converged {
        error = Some(ConvexIntError::NotConverged { stages: report.stages.len(), achieved: defect });
    }

    let d0 = u0.depth();
    let final_probes = probes_for(&map, &p.search, 0xF1A1);
    match survey(&map, g, &final_probes, Some(d0)) {
        Ok(fs) => {
            let (exact, count) = boundary_check(u0, &map, &final_probes);
            report.iteration = Some(IterationRecord {
                eps: p.eps,
                tol: p.tol,
                max_stages: p.max_stages,
                eps_schedule: schedule,
                initial_defect_sup: initial.sup,
                final_defect_sup: fs.sup,
                final_defect_min_eig: fs.min_eig,
                c0_distance_to_base: fs.c0,
                boundary_exact: exact,
                boundary_points: count,
                final_probes,
            });
        }
        Err(e) => {
            error.get_or_insert(e.into());
        }
    }
    res.map = map;
    match error {
        None => {
            report.status = RunStatus::Converged;
            res.report = report;
            Ok(res)
        }
        Some(e) => {
            let status = if matches!(e, ConvexIntError::NotConverged { .. }) {
                RunStatus::NotConverged
            } else {
                RunStatus::Failed
            };
            res.report = report;
            Err(fail(e, res, status))
        }
    }
}

/// Compare both maps on the boundary face, bit for bit.
fn boundary_check(u0: &LayeredMap, map: &LayeredMap, probes: &super::ProbeSpec) -> (Option<bool>, usize) {
    let dom = &map.domain;
    let Some(b) = dom.boundary_axis else {
        return (None, 0);
    };
    let other = 1 - b;
    let count = if dom.dim > 1 { probes.counts[other] } else { 1 };
    let mut exact = true;
    for i in 0..count {
        let mut x = Pt::zeros();
        x[b] = dom.lo[b];
        if dom.dim > 1 {
            x[other] = dom.lo[other] + dom.width(other) * i as f64 / count as f64;
        }
        match (u0.eval_map(&x), map.eval_map(&x)) {
            (Ok(a), Ok(c)) => exact &= a.iter().zip(c.iter()).all(|(p, q)| p.to_bits() == q.to_bits()),
            _ => exact = false,
        }
    }
    (Some(exact), count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_sums_to_eps() {
        let s: f64 = (1..200_000).map(|k| eps_schedule(0.5, k)).sum();
        assert!((s - 0.5).abs() < 1e-12);
        // Summable square roots as well.
        let r: f64 = (1..200_000).map(|k| eps_schedule(0.5, k).sqrt()).sum();
        assert!(r.is_finite() && r < 2.0);
    }
}
