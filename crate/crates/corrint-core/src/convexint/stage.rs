//! One stage: choose `ℓ` and `δ` from the sampled defect, decompose it and
//! run one step per active term.

use serde::{Deserialize, Serialize};

use crate::decomposition::{decompose_fixed, sample_grid, DecomposeOptions};
use crate::evaluation::{defect_field, CorrugationLayer, EvalError, LayeredMap};
use crate::geomcore::{pullback_fast, SymMatField};

use super::cutoff::CutoffProfile;
use super::report::StageRecord;
use super::step::{do_step, StepParams};
use super::survey::{probes_for, survey, LEVELS};
use super::{ConvexIntError, LambdaSearch};

/// How `δ` is chosen once the sampled bounds are known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaRule {
    /// `δ = 0.9·min{λ_min off Ω_{ℓ/2}, ε/(2 sup), √ε}`.
    Margin,
    /// The margin rule, further capped so that `δ·sup + δ²/2 ≤ 0.8·tol`,
    /// and `ℓ` chosen with collar defect below `tol/2`.
    #[default]
    ToleranceAware,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageParams {
    pub eps: f64,
    pub tol: f64,
    pub delta_rule: DeltaRule,
    pub pre_rotate: bool,
    pub search: LambdaSearch,
    /// Largest admissible `ℓ` (the previous stage's).
    pub ell_cap: Option<f64>,
    /// Per-axis samples used to validate the decomposition.
    pub decomposition_samples: usize,
}

impl StageParams {
    pub fn new(eps: f64, tol: f64) -> Self {
        Self {
            eps,
            tol,
            delta_rule: DeltaRule::default(),
            pre_rotate: false,
            search: LambdaSearch::default(),
            ell_cap: None,
            decomposition_samples: 96,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub map: LayeredMap,
    pub record: StageRecord,
    pub ell: Option<f64>,
    /// Map before the last active step together with that step's layer.
    pub last_step: Option<(LayeredMap, CorrugationLayer)>,
}

const MARGIN: f64 = 0.9;
/// Defect sups at or below this are treated as already isometric.
const ZERO_DEFECT: f64 = 1e-12;

/// Run one stage on `u` with C⁰ budget `p.eps`. `stage` numbers the stage and
/// `step_offset` the steps already taken.
pub fn do_stage(
    u: &LayeredMap,
    g: &SymMatField,
    p: &StageParams,
    stage: usize,
    step_offset: usize,
) -> Result<StageOutcome, ConvexIntError> {
    p.search.validate()?;
    if !(p.eps > 0.0 && p.tol > 0.0) {
        return Err(ConvexIntError::InvalidParams("need ε > 0 and tol > 0".into()));
    }
    let n = u.n();
    let salt = 0x5157_0000 + stage as u64;
    let probes_before = probes_for(u, &p.search, salt);
    let sv = survey(u, g, &probes_before, None)?;
    let mut record = StageRecord {
        stage,
        eps: p.eps,
        ell: None,
        delta: 0.0,
        delta_margin_rule: 0.0,
        delta_tol_cap: None,
        m: 0,
        m0_bound: 0,
        coefficient_sign_change: false,
        defect_sup_before: sv.sup,
        defect_sup_collar_before: 0.0,
        defect_min_eig_off_collar_before: sv.min_eig,
        defect_sup_after: sv.sup,
        defect_min_eig_after: sv.min_eig,
        defect_min_eig_off_collar_after: sv.min_eig,
        c0_drift: 0.0,
        c1_drift: 0.0,
        c1_constant: 1.0,
        c1_bound: sv.sup.sqrt(),
        c1_ratio: 0.0,
        probes_before: probes_before.clone(),
        probes_after: probes_before,
        steps: Vec::new(),
    };
    if sv.sup <= ZERO_DEFECT {
        return Ok(StageOutcome { map: u.clone(), record, ell: p.ell_cap, last_step: None });
    }

    // ℓ: the largest dyadic width whose collar carries a small defect.
    let collar_target = match p.delta_rule {
        DeltaRule::Margin => 0.5 * p.eps,
        DeltaRule::ToleranceAware => 0.5 * p.eps.min(p.tol),
    };
    let level = if sv.ell0.is_some() {
        let first = (0..LEVELS).find(|&j| p.ell_cap.is_none_or(|c| sv.ell(j).unwrap() <= c * (1.0 + 1e-12)));
        let found = first.and_then(|j0| (j0..LEVELS).find(|&j| sv.collar_sup[j] < collar_target));
        match found {
            Some(j) => Some(j),
            None => {
                return Err(ConvexIntError::InvalidParams(
                    "sampled defect does not vanish toward the boundary".into(),
                ))
            }
        }
    } else {
        None
    };
    let ell = level.and_then(|j| sv.ell(j));
    record.ell = ell;
    record.defect_sup_collar_before = level.map_or(0.0, |j| sv.collar_sup[j]);

    let lmin = sv.min_eig_off(level);
    record.defect_min_eig_off_collar_before = lmin;
    if !(lmin > 0.0) {
        let at = level.map_or(sv.min_eig_at, |j| sv.off_min_at[j]);
        return Err(ConvexIntError::ShortnessLost { x: at[..n].to_vec(), eigenvalue: lmin });
    }
    let margin = MARGIN * lmin.min(p.eps / (2.0 * sv.sup)).min(p.eps.sqrt()).min(1.0);
    record.delta_margin_rule = margin;
    let delta = match p.delta_rule {
        DeltaRule::Margin => margin,
        DeltaRule::ToleranceAware => {
            let cap = -sv.sup + (sv.sup * sv.sup + 1.6 * p.tol).sqrt();
            record.delta_tol_cap = Some(cap);
            margin.min(cap)
        }
    };
    record.delta = delta;

    let defect = defect_field(u, g);
    let samples = sample_grid(&u.domain, p.decomposition_samples);
    let dec = decompose_fixed(&defect, &samples, DecomposeOptions { pre_rotate: p.pre_rotate })?;
    record.m0_bound = dec.m0_bound;
    record.coefficient_sign_change = dec.sign_change;

    // Terms whose coefficient is numerically zero everywhere are dropped.
    let rules: Vec<_> = dec.terms.iter().map(|t| t.rule).collect();
    let cutoff = ell.map(CutoffProfile::new);
    let term_sup = record.probes_before.try_fold(
        || [0.0f64; 4],
        |acc, _, x| -> Result<(), EvalError> {
            if let (Some(c), Some(d)) = (cutoff, u.domain.dist_to_boundary(x)) {
                if c.eval(d) == 0.0 {
                    return Ok(());
                }
            }
            let j = u.eval_full(x)?.1;
            let d = g.eval(x) - pullback_fast(&j, n);
            for (k, r) in rules.iter().enumerate() {
                acc[k] = acc[k].max(r.coeff(&d));
            }
            Ok(())
        },
        |a, b| std::array::from_fn(|k| a[k].max(b[k])),
    )?;
    let active: Vec<_> = rules.iter().enumerate().filter(|(k, _)| term_sup[*k] > 1e-12 * sv.sup).map(|(_, r)| *r).collect();
    let m = active.len().max(1);
    record.m = active.len();

    let step = StepParams {
        delta,
        ell,
        eps_step: p.eps / m as f64,
        e_bound: sv.sup.sqrt() / m as f64,
        m,
        search: p.search,
    };
    let stage_depth = u.depth();
    let mut map = u.clone();
    let mut last_step = None;
    for (i, rule) in active.iter().enumerate() {
        let out = do_step(&map, g, *rule, stage_depth, &step, step_offset + i + 1)?;
        record.steps.push(out.record);
        if let Some(layer) = out.layer {
            last_step = Some((map.clone(), layer));
        }
        map = out.map;
    }

    let probes_after = probes_for(&map, &p.search, salt ^ 0xAF7E);
    let after = survey(&map, g, &probes_after, Some(stage_depth))?;
    let c1_constant = std::f64::consts::SQRT_2 * dec.m0_bound as f64 + 1.0;
    record.probes_after = probes_after;
    record.defect_sup_after = after.sup;
    record.defect_min_eig_after = after.min_eig;
    record.defect_min_eig_off_collar_after = after.min_eig_off(level);
    record.c0_drift = after.c0;
    record.c1_drift = after.c1;
    record.c1_constant = c1_constant;
    record.c1_bound = c1_constant * sv.sup.sqrt();
    record.c1_ratio = after.c1 / sv.sup.sqrt();

    if after.min_eig < -1e-10 {
        return Err(ConvexIntError::ShortnessLost { x: after.min_eig_at[..n].to_vec(), eigenvalue: after.min_eig });
    }
    let off = after.min_eig_off(level);
    if off < 0.5 * delta * delta - 1e-10 {
        let at = level.map_or(after.min_eig_at, |j| after.off_min_at[j]);
        return Err(ConvexIntError::ShortnessLost { x: at[..n].to_vec(), eigenvalue: off });
    }
    let check = |name: &str, measured: f64, bound: f64| {
        if measured <= bound {
            Ok(())
        } else {
            Err(ConvexIntError::EstimateViolated { name: name.into(), measured, bound })
        }
    };
    check("c0", after.c0, p.eps)?;
    check("metricerror", after.sup, p.eps)?;
    check("c1", after.c1, record.c1_bound)?;
    Ok(StageOutcome { map, record, ell, last_step })
}
