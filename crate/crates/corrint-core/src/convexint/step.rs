//! One step: add a single primitive metric `(1−δ)η²a²ν⊗ν` with a
//! corrugation layer whose frequency is the smallest trial value passing the
//! measured step conditions.

use std::f64::consts::TAU;

use crate::decomposition::TermRule;
use crate::evaluation::{CorrugationLayer, EvalError, LayerSpec, LayeredMap};
use crate::geomcore::{jac_norm, pullback_fast, sym_norm, ChartDomain, Pt, SymMatField};

use super::cutoff::CutoffProfile;
use super::probe::ProbeSpec;
use super::report::StepRecord;
use super::survey::probes_for;
use super::{ConvexIntError, LambdaSearch};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub delta: f64,
    pub ell: Option<f64>,
    /// C⁰ budget per step, `ε/m`.
    pub eps_step: f64,
    /// Bound on `‖λ⁻¹E‖`, `(defect sup)^{1/2}/m`.
    pub e_bound: f64,
    pub m: usize,
    pub search: LambdaSearch,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub map: LayeredMap,
    /// The accepted layer; `None` for a vanishing coefficient.
    pub layer: Option<CorrugationLayer>,
    pub record: StepRecord,
}

/// Smallest admissible frequency `≥ lambda` for which the layer is periodic
/// along every periodic axis it oscillates across.
pub fn quantize_lambda(domain: &ChartDomain, nu: &Pt, lambda: f64) -> Result<f64, ConvexIntError> {
    let mut unit: Option<f64> = None;
    for a in 0..domain.dim {
        if let Some(p) = domain.period(a) {
            let c = nu[a].abs();
            if c < 1e-14 {
                continue;
            }
            let u = TAU / (c * p);
            match unit {
                None => unit = Some(u),
                Some(v) if ((u - v) / v).abs() < 1e-12 => {}
                Some(_) => {
                    return Err(ConvexIntError::InvalidParams(
                        "direction incommensurate with the periodic axes".into(),
                    ))
                }
            }
        }
    }
    Ok(match unit {
        Some(u) => (lambda / u - 1e-9).ceil().max(1.0) * u,
        None => lambda,
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct Sups {
    r: f64,
    c0: f64,
    e: f64,
    amp: f64,
    layer_c0: f64,
}

impl Sups {
    fn merge(self, o: Self) -> Self {
        Self {
            r: self.r.max(o.r),
            c0: self.c0.max(o.c0),
            e: self.e.max(o.e),
            amp: self.amp.max(o.amp),
            layer_c0: self.layer_c0.max(o.layer_c0),
        }
    }
}

enum Reject {
    Eval(EvalError),
    Violated,
}

/// Append one layer for the term `rule` of the stage whose input is the
/// prefix of depth `stage_depth`.
pub fn do_step(
    prev: &LayeredMap,
    g: &SymMatField,
    rule: TermRule,
    stage_depth: usize,
    p: &StepParams,
    k: usize,
) -> Result<StepOutcome, ConvexIntError> {
    p.search.validate()?;
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return Err(ConvexIntError::InvalidParams("need 0 < δ < 1".into()));
    }
    if p.m == 0 {
        return Err(ConvexIntError::InvalidParams("need m ≥ 1".into()));
    }
    let n = prev.n();
    let nu = rule.direction();
    let cutoff = p.ell.map(CutoffProfile::new);
    let remainder_bound = p.delta * p.delta / (2.0 * p.m as f64);
    let mut record = StepRecord {
        k,
        term: rule.index,
        direction: [nu[0], nu[1]],
        active: false,
        lambda: 0.0,
        trial_lambdas: Vec::new(),
        remainder_sup: 0.0,
        remainder_bound,
        c0_sup: 0.0,
        c0_bound: p.eps_step,
        e_over_lambda_sup: 0.0,
        e_over_lambda_bound: p.e_bound,
        layer_c0_bound: 0.0,
        amp_sup: 0.0,
        grid_nodes: 0,
        probes: probes_for(prev, &p.search, k as u64),
    };

    // A coefficient vanishing on the probes makes the layer a no-op.
    let coeff_sup = record.probes.try_fold(
        || 0.0f64,
        |acc, _, x| -> Result<(), EvalError> {
            let eta = match (cutoff, prev.domain.dist_to_boundary(x)) {
                (Some(c), Some(d)) => c.eval(d),
                _ => 1.0,
            };
            if eta == 0.0 {
                return Ok(());
            }
            let jd = prev.eval_with_prefix(x, stage_depth)?.j_prefix;
            *acc = acc.max(rule.coeff(&(g.eval(x) - pullback_fast(&jd, n))));
            Ok(())
        },
        f64::max,
    )?;
    if coeff_sup == 0.0 {
        return Ok(StepOutcome { map: prev.clone(), layer: None, record });
    }
    record.active = true;

    let spec = LayerSpec {
        lambda: 1.0,
        nu,
        delta: p.delta,
        cutoff,
        rule,
        stage_depth,
        metric: g.clone(),
    };
    let template = prev.build_layer(spec)?;
    record.grid_nodes = template.grid_nodes();
    let start = p.search.lambda0.max(prev.lambda_max());
    let prev_freq = prev.axis_frequencies();

    for j in 0.. {
        let lambda = quantize_lambda(&prev.domain, &nu, start * p.search.factor.powi(j))?;
        if lambda > p.search.lambda_max {
            return Err(ConvexIntError::LambdaCapExceeded { lambda, reason: "lambda_max reached".into() });
        }
        let mut freqs = prev_freq;
        for (a, f) in freqs.iter_mut().enumerate().take(n) {
            *f = f.max(lambda * nu[a].abs());
        }
        let probes = ProbeSpec::new(
            &prev.domain,
            freqs,
            p.search.samples_per_period,
            p.search.probe_floor,
            p.search.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ j as u64,
        );
        if probes.total() > p.search.probe_budget {
            return Err(ConvexIntError::LambdaCapExceeded {
                lambda,
                reason: format!("probe grid of {} points exceeds budget {}", probes.total(), p.search.probe_budget),
            });
        }
        record.trial_lambdas.push(lambda);
        let layer = template.with_lambda(lambda);
        let map = prev.with_built_layer(layer.clone());
        let res = probes.try_fold(
            Sups::default,
            |acc, _, x| {
                let pr = map.probe_last(x).map_err(Reject::Eval)?;
                let r = sym_norm(&pr.remainder(&nu, n), n);
                let c0 = (pr.u - pr.u_prev).norm();
                let e = jac_norm(&pr.e_over_lambda(), n);
                if !(r <= remainder_bound && c0 <= p.eps_step && e <= p.e_bound) {
                    return Err(Reject::Violated);
                }
                acc.r = acc.r.max(r);
                acc.c0 = acc.c0.max(c0);
                acc.e = acc.e.max(e);
                acc.amp = acc.amp.max(pr.amp);
                acc.layer_c0 = acc.layer_c0.max(pr.gamma_norm * pr.frame_norm / lambda);
                Ok(())
            },
            Sups::merge,
        );
        match res {
            Ok(s) => {
                record.lambda = lambda;
                record.remainder_sup = s.r;
                record.c0_sup = s.c0;
                record.e_over_lambda_sup = s.e;
                record.amp_sup = s.amp;
                record.layer_c0_bound = s.layer_c0;
                record.probes = probes;
                return Ok(StepOutcome { map, layer: Some(layer), record });
            }
            Err(Reject::Eval(e)) => return Err(e.into()),
            Err(Reject::Violated) => continue,
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::FnBaseMap;
    use crate::geomcore::{Jac, Sym, Tv};
    use std::sync::Arc;

    fn circle() -> (LayeredMap, SymMatField) {
        let base = FnBaseMap::new(1, |x| Tv::new(0.5 * x[0].cos(), 0.5 * x[0].sin(), 0.0))
            .with_jac(|x| Jac::new(-0.5 * x[0].sin(), 0.0, 0.5 * x[0].cos(), 0.0, 0.0, 0.0));
        let d = ChartDomain::new(vec![0.0], vec![TAU], None, &[0]).unwrap();
        (LayeredMap::new(Arc::new(base), d), SymMatField::constant(1, Sym::new(1.0, 0.0, 0.0, 0.0)))
    }

    fn params(delta: f64) -> StepParams {
        StepParams { delta, ell: None, eps_step: 0.5, e_bound: 0.75f64.sqrt(), m: 1, search: LambdaSearch::default() }
    }

    #[test]
    fn quantization_respects_period() {
        let d = ChartDomain::new(vec![0.0, 0.0], vec![1.0, TAU], Some(0), &[1]).unwrap();
        let l = quantize_lambda(&d, &Pt::new(0.6, 0.8), 10.0).unwrap();
        assert!(l >= 10.0);
        let q = l * 0.8;
        assert!((q - q.round()).abs() < 1e-9);
        assert_eq!(quantize_lambda(&d, &Pt::new(1.0, 0.0), 10.3).unwrap(), 10.3);
    }

    #[test]
    fn accepted_step_meets_remainder_bound() {
        let (m, g) = circle();
        let out = do_step(&m, &g, TermRule { dim: 1, index: 0, rot: Sym::identity() }, 0, &params(0.3), 1).unwrap();
        let r = &out.record;
        assert!(r.active);
        assert!(r.remainder_sup <= r.remainder_bound);
        assert!(r.probes.samples_per_period.unwrap() >= 8.0);
        assert_eq!(r.lambda, *r.trial_lambdas.last().unwrap());
        // Smallest passing trial: the one before failed somewhere.
        assert!(r.trial_lambdas.len() > 1);
        // Defect after the step is δ·¾ up to the remainder.
        let (_, j) = out.map.eval_full(&Pt::new(0.4, 0.0)).unwrap();
        let d = 1.0 - pullback_fast(&j, 1)[(0, 0)];
        assert!((d - 0.3 * 0.75).abs() <= r.remainder_bound);
    }

    #[test]
    fn vanishing_coefficient_is_a_no_op() {
        let (m, _) = circle();
        let g = SymMatField::constant(1, Sym::new(0.2, 0.0, 0.0, 0.0));
        let out = do_step(&m, &g, TermRule { dim: 1, index: 0, rot: Sym::identity() }, 0, &params(0.3), 1).unwrap();
        assert!(!out.record.active);
        assert_eq!(out.map.depth(), 0);
        let x = Pt::new(1.1, 0.0);
        assert_eq!(out.map.eval_map(&x).unwrap(), m.eval_map(&x).unwrap());
    }

    #[test]
    fn lambda_cap_is_reported() {
        let (m, g) = circle();
        let mut p = params(0.01);
        p.search.lambda_max = 100.0;
        let r = do_step(&m, &g, TermRule { dim: 1, index: 0, rot: Sym::identity() }, 0, &p, 1);
        assert!(matches!(r, Err(ConvexIntError::LambdaCapExceeded { .. })));
    }
}
