//! Band of the squashed sphere `Φ_ε(ϑ,φ) = (1−ε sin²ϑ)(cosϑ cosφ, cosϑ sinφ, sinϑ)`
//! on one side of the equator, in chart coordinates `(d, φ)` with `ϑ = ±d`.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::evaluation::FnBaseMap;
use crate::geomcore::{ChartDomain, Jac, Pt, Sym, SymMatField, Tv};

use super::{ModelError, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    #[default]
    North,
    South,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::North => 1.0,
            Side::South => -1.0,
        }
    }
}

/// `g_{S²} − Φ_ε*g₀` in `(ϑ, φ)`.
pub fn sphere_band_defect(eps: f64, theta: f64) -> Sym {
    let s = theta.sin();
    let c = theta.cos();
    let rho = 1.0 - eps * s * s;
    let drho = -eps * (2.0 * theta).sin();
    Sym::new(1.0 - rho * rho - drho * drho, 0.0, 0.0, (1.0 - rho * rho) * c * c)
}

pub fn model_sphere_band(eps: f64, side: Side, theta_max: f64) -> Result<ModelSpec, ModelError> {
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(ModelError::InvalidParameter(format!("sphere band needs 0 < ε ≤ 0.1, got {eps}")));
    }
    if !(theta_max > 0.0 && theta_max < 1.5) {
        return Err(ModelError::InvalidParameter(format!("theta_max must lie in (0, 1.5), got {theta_max}")));
    }
    let sg = side.sign();
    let eval = move |x: &Pt| {
        let th = sg * x[0];
        let rho = 1.0 - eps * th.sin().powi(2);
        rho * Tv::new(th.cos() * x[1].cos(), th.cos() * x[1].sin(), th.sin())
    };
    let jac = move |x: &Pt| {
        let th = sg * x[0];
        let (st, ct) = th.sin_cos();
        let (sp, cp) = x[1].sin_cos();
        let rho = 1.0 - eps * st * st;
        let drho = -eps * (2.0 * th).sin();
        let dth = drho * Tv::new(ct * cp, ct * sp, st) + rho * Tv::new(-st * cp, -st * sp, ct);
        let dphi = rho * ct * Tv::new(-sp, cp, 0.0);
        let mut j = Jac::zeros();
        j.set_column(0, &(sg * dth));
        j.set_column(1, &dphi);
        j
    };
    let metric = SymMatField::new(2, |x| Sym::new(1.0, 0.0, 0.0, x[0].cos().powi(2)));
    let defect = SymMatField::new(2, move |x| sphere_band_defect(eps, sg * x[0]));
    let name = match side {
        Side::North => "sphere-band",
        Side::South => "sphere-band-south",
    };
    Ok(ModelSpec {
        name: name.into(),
        domain: ChartDomain::new(vec![0.0, 0.0], vec![theta_max, TAU], Some(0), &[1]).unwrap(),
        metric,
        base: Arc::new(FnBaseMap::new(2, eval).with_jac(jac)),
        defect: Some(defect),
        trace: Some(Arc::new(|p: f64| Tv::new(p.cos(), p.sin(), 0.0))),
    })
}
