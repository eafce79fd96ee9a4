use std::f64::consts::TAU;
use std::sync::Arc;

use crate::evaluation::FnBaseMap;
use crate::geomcore::{ChartDomain, Jac, Sym, SymMatField, Tv};

use super::ModelSpec;

/// The unit circle's arc-length metric with the half-radius circle as base.
pub fn model_circle() -> ModelSpec {
    let base = FnBaseMap::new(1, |x| Tv::new(0.5 * x[0].cos(), 0.5 * x[0].sin(), 0.0))
        .with_jac(|x| Jac::new(-0.5 * x[0].sin(), 0.0, 0.5 * x[0].cos(), 0.0, 0.0, 0.0));
    ModelSpec {
        name: "circle".into(),
        domain: ChartDomain::new(vec![0.0], vec![TAU], None, &[0]).unwrap(),
        metric: SymMatField::constant(1, Sym::new(1.0, 0.0, 0.0, 0.0)),
        base: Arc::new(base),
        defect: Some(SymMatField::constant(1, Sym::new(0.75, 0.0, 0.0, 0.0))),
        trace: None,
    }
}
