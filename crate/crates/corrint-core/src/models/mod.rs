//! Concrete geometries: each pairs a chart domain and target metric with an
//! adapted short map.

mod circle;
mod coin;
mod dirichlet;
mod normal_data;
mod obstruction;
mod sphere_band;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::evaluation::{BaseMap, LayeredMap};
use crate::geomcore::{pullback_fast, sym_eigenvalues, sym_norm, ChartDomain, Pt, SymMatField, Tv};

pub use circle::model_circle;
pub use coin::{coin_constant, coin_curve, model_coin, CoinCurve};
pub use dirichlet::{model_dirichlet_disk, model_dirichlet_flat};
pub use normal_data::{
    equator_normal_data, flat_segment_normal_data, psi_normal_data, short_map_from_normal_data, BoundaryData,
    NormalDataMap,
};
pub use obstruction::{model_obstruction_metric, psi_profile, ObstructionReport};
pub use sphere_band::{model_sphere_band, sphere_band_defect, Side};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("h − ⟨Ā, ν̄⟩ is not positive definite at x = {x} (value {eigenvalue})")]
    HypothesisFailed { x: f64, eigenvalue: f64 },
    #[error("conformal factor out of range at {x:?}: {value}")]
    PhiRangeError { x: Vec<f64>, value: f64 },
    #[error("defect vanishes away from the boundary at {x:?} (min eigenvalue {eigenvalue})")]
    EqualityOffBoundary { x: Vec<f64>, eigenvalue: f64 },
    #[error("no band width in which the defect is positive was found")]
    BandCollapsed,
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown model {0:?}")]
    Unknown(String),
}

/// Boundary trace `f`, as a function of the tangential chart coordinate.
pub type TraceFn = Arc<dyn Fn(f64) -> Tv + Send + Sync>;

#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub domain: ChartDomain,
    pub metric: SymMatField,
    pub base: Arc<dyn BaseMap>,
    /// Closed-form `g − u₀*g₀`, when known.
    pub defect: Option<SymMatField>,
    /// The boundary immersion `f`, when the domain has a boundary.
    pub trace: Option<TraceFn>,
}

impl std::fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelSpec").field("name", &self.name).field("domain", &self.domain).finish_non_exhaustive()
    }
}

/// Sampled validation of a model's adapted short map.
#[derive(Debug, Clone, Serialize)]
pub struct ModelCheck {
    pub name: String,
    pub samples: usize,
    pub defect_sup: f64,
    pub defect_min_eig: f64,
    /// Defect sup on `B`.
    pub boundary_defect_sup: Option<f64>,
    /// Smallest eigenvalue at samples at least `0.05·width` from `B`.
    pub interior_min_eig: f64,
    /// `sup |u₀ − f|` on `B`.
    pub trace_error: Option<f64>,
    /// Largest deviation from the closed-form defect.
    pub closed_form_error: Option<f64>,
    pub pass: bool,
}

impl ModelSpec {
    pub fn n(&self) -> usize {
        self.domain.dim
    }

    pub fn layered(&self) -> LayeredMap {
        LayeredMap::new(self.base.clone(), self.domain.clone())
    }

    pub fn defect_at(&self, x: &Pt) -> crate::geomcore::Sym {
        self.metric.eval(x) - pullback_fast(&self.base.jac(x), self.n())
    }

    /// Sample the defect on a `per_axis`-point grid (closed at the boundary
    /// axis, half-open on periodic axes).
    pub fn check(&self, per_axis: usize) -> ModelCheck {
        let n = self.n();
        let dom = &self.domain;
        let per_axis = per_axis.max(2);
        let coord = |a: usize, i: usize| {
            let den = if dom.periodic[a] { per_axis } else { per_axis - 1 };
            dom.lo[a] + dom.width(a) * i as f64 / den as f64
        };
        let mut c = ModelCheck {
            name: self.name.clone(),
            samples: 0,
            defect_sup: 0.0,
            defect_min_eig: f64::INFINITY,
            boundary_defect_sup: dom.boundary_axis.map(|_| 0.0),
            interior_min_eig: f64::INFINITY,
            trace_error: self.trace.as_ref().map(|_| 0.0),
            closed_form_error: self.defect.as_ref().map(|_| 0.0),
            pass: false,
        };
        let count = if n == 1 { per_axis } else { per_axis * per_axis };
        for k in 0..count {
            let mut x = Pt::zeros();
            x[0] = coord(0, k % per_axis);
            if n == 2 {
                x[1] = coord(1, k / per_axis);
            }
            let d = self.defect_at(&x);
            let norm = sym_norm(&d, n);
            let lmin = sym_eigenvalues(&d, n)[0];
            c.samples += 1;
            c.defect_sup = c.defect_sup.max(norm);
            c.defect_min_eig = c.defect_min_eig.min(lmin);
            if let Some(f) = &self.defect {
                let e = sym_norm(&(f.eval(&x) - d), n);
                c.closed_form_error = c.closed_form_error.map(|v| v.max(e));
            }
            match dom.boundary_axis {
                Some(b) => {
                    let dist = x[b] - dom.lo[b];
                    if dist == 0.0 {
                        c.boundary_defect_sup = c.boundary_defect_sup.map(|v| v.max(norm));
                        if let Some(f) = &self.trace {
                            let e = (self.base.eval(&x) - f(x[1 - b])).norm();
                            c.trace_error = c.trace_error.map(|v| v.max(e));
                        }
                    } else if dist >= 0.05 * dom.width(b) {
                        c.interior_min_eig = c.interior_min_eig.min(lmin);
                    }
                }
                None => c.interior_min_eig = c.interior_min_eig.min(lmin),
            }
        }
        c.pass = c.defect_min_eig >= -1e-12
            && c.interior_min_eig > 0.0
            && c.boundary_defect_sup.is_none_or(|v| v <= 1e-10)
            && c.trace_error.is_none_or(|v| v <= 1e-10)
            && c.closed_form_error.is_none_or(|v| v <= 1e-10);
        c
    }
}

/// Names accepted by [`model_by_name`].
pub const MODEL_NAMES: [&str; 6] = ["circle", "sphere-band", "coin", "dirichlet-disk", "equator", "psi"];

/// Parameters for [`model_by_name`]; unused fields are ignored.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub eps_geom: f64,
    pub side: Side,
    pub theta_max: f64,
    pub a: f64,
    pub eps_band: f64,
    pub psi1: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { eps_geom: 0.05, side: Side::North, theta_max: 1.0, a: 0.3, eps_band: 0.2, psi1: 3.0 }
    }
}

pub fn model_by_name(name: &str, p: &ModelParams) -> Result<ModelSpec, ModelError> {
    match name {
        "circle" => Ok(model_circle()),
        "sphere-band" => model_sphere_band(p.eps_geom, p.side, p.theta_max),
        "coin" => model_coin(p.a, p.eps_band),
        "dirichlet-disk" => model_dirichlet_flat(),
        "equator" => short_map_from_normal_data(&equator_normal_data(), p.eps_band).map(|m| m.spec),
        "psi" => short_map_from_normal_data(&psi_normal_data(p.psi1), p.eps_band).map(|m| m.spec),
        other => Err(ModelError::Unknown(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_named_model_validates() {
        for name in MODEL_NAMES {
            let m = model_by_name(name, &ModelParams::default()).unwrap();
            let c = m.check(41);
            assert!(c.pass, "{name}: {c:?}");
        }
        assert!(matches!(model_by_name("torus", &ModelParams::default()), Err(ModelError::Unknown(_))));
    }
}
