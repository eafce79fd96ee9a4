//! Adapted short maps `u(t,x) = f(x) − s(t)ν̄(x)`, `s(t) = t − t²/2`, built from
//! a boundary curve and a unit normal field along it.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::sync::Arc;

use crate::evaluation::FnBaseMap;
use crate::geomcore::{sym_eigenvalues, sym_norm, ChartDomain, Jac, Pt, Sym, SymMatField, Tv};

use super::obstruction::psi_profile;
use super::{ModelError, ModelSpec};

type CurveFn = Arc<dyn Fn(f64) -> Tv + Send + Sync>;
type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Data along a one-dimensional `Σ` with parameter `x ∈ [x_lo, x_hi]`. The
/// metric lives on the chart `(t, x)` and is in Fermi form near `t = 0`
/// (`g_tt = 1`, `g_tx = 0`), with `−∂_t` the normal of `Σ`.
#[derive(Clone)]
pub struct BoundaryData {
    pub name: String,
    pub x_lo: f64,
    pub x_hi: f64,
    pub periodic: bool,
    pub f: CurveFn,
    pub df: CurveFn,
    pub nubar: CurveFn,
    pub dnubar: CurveFn,
    pub metric: SymMatField,
    /// `h(∂_x, ∂_x)`, the second fundamental form of `Σ` in `(M, g)`.
    pub h: ScalarFn,
    /// `Ā(∂_x, ∂_x)`, the second fundamental form of `f(Σ)` in `ℝ³`.
    pub abar: CurveFn,
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundaryData").field("name", &self.name).finish_non_exhaustive()
    }
}

impl BoundaryData {
    pub fn samples(&self, count: usize) -> Vec<f64> {
        let den = if self.periodic { count } else { count - 1 };
        (0..count).map(|k| self.x_lo + (self.x_hi - self.x_lo) * k as f64 / den as f64).collect()
    }

    /// `g_xx` on `Σ`.
    pub fn g_tangent(&self, x: f64) -> f64 {
        self.metric.eval(&Pt::new(0.0, x))[(1, 1)]
    }

    /// `h − ⟨Ā, ν̄⟩` on `∂_x`, normalized by `g_xx`.
    pub fn hypothesis_margin(&self, x: f64) -> f64 {
        ((self.h)(x) - (self.abar)(x).dot(&(self.nubar)(x))) / self.g_tangent(x)
    }

    /// Largest of `||ν̄| − 1|` and `|⟨ν̄, f′⟩|` over the samples.
    pub fn normal_residual(&self, count: usize) -> f64 {
        self.samples(count)
            .into_iter()
            .map(|x| {
                let nu = (self.nubar)(x);
                ((nu.norm() - 1.0).abs()).max(nu.dot(&(self.df)(x)).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// The constructed map with the band width actually used.
#[derive(Debug, Clone)]
pub struct NormalDataMap {
    pub spec: ModelSpec,
    pub eps_band: f64,
    pub halvings: usize,
}

fn s(t: f64) -> f64 {
    t - 0.5 * t * t
}

fn ds(t: f64) -> f64 {
    1.0 - t
}

const HYPOTHESIS_SAMPLES: usize = 256;

pub fn short_map_from_normal_data(bd: &BoundaryData, eps_band: f64) -> Result<NormalDataMap, ModelError> {
    if !(eps_band > 0.0 && eps_band <= 1.0) {
        return Err(ModelError::InvalidParameter(format!("band width must lie in (0, 1], got {eps_band}")));
    }
    let res = bd.normal_residual(HYPOTHESIS_SAMPLES);
    if res > 1e-10 {
        return Err(ModelError::InvalidParameter(format!("ν̄ is not a unit normal along f (residual {res:e})")));
    }
    for x in bd.samples(HYPOTHESIS_SAMPLES) {
        let v = bd.hypothesis_margin(x);
        if !(v > 1e-12) {
            return Err(ModelError::HypothesisFailed { x, eigenvalue: v });
        }
    }

    let (f, df, nu, dnu) = (bd.f.clone(), bd.df.clone(), bd.nubar.clone(), bd.dnubar.clone());
    let base = FnBaseMap::new(2, {
        let (f, nu) = (f.clone(), nu.clone());
        move |p: &Pt| f(p[1]) - s(p[0]) * nu(p[1])
    })
    .with_jac(move |p: &Pt| {
        let mut j = Jac::zeros();
        j.set_column(0, &(-ds(p[0]) * nu(p[1])));
        j.set_column(1, &(df(p[1]) - s(p[0]) * dnu(p[1])));
        j
    });
    let base = Arc::new(base);
    let periodic: &[usize] = if bd.periodic { &[1] } else { &[] };

    let mut eps = eps_band;
    for halvings in 0..40 {
        let domain = ChartDomain::new(vec![0.0, bd.x_lo], vec![eps, bd.x_hi], Some(0), periodic)
            .map_err(|e| ModelError::InvalidParameter(e.to_string()))?;
        let spec = ModelSpec {
            name: bd.name.clone(),
            domain,
            metric: bd.metric.clone(),
            base: base.clone(),
            defect: None,
            trace: Some(bd.f.clone()),
        };
        if band_is_positive(&spec, bd) {
            return Ok(NormalDataMap { spec, eps_band: eps, halvings });
        }
        eps *= 0.5;
    }
    Err(ModelError::BandCollapsed)
}

/// Defect zero on `t = 0` and positive definite at `t > 0` on the samples.
fn band_is_positive(spec: &ModelSpec, bd: &BoundaryData) -> bool {
    let width = spec.domain.hi[0];
    let xs = bd.samples(64);
    for &x in &xs {
        if sym_norm(&spec.defect_at(&Pt::new(0.0, x)), 2) > 1e-10 {
            return false;
        }
        for k in 1..=32 {
            let d = spec.defect_at(&Pt::new(width * k as f64 / 32.0, x));
            if !(sym_eigenvalues(&d, 2)[0] > 0.0) {
                return false;
            }
        }
    }
    true
}

/// The equator of the round `S²` with chart `(ϑ, φ)`, band on the northern
/// side and `ν̄ = (e_r − e₃)/√2`.
pub fn equator_normal_data() -> BoundaryData {
    BoundaryData {
        name: "equator".into(),
        x_lo: 0.0,
        x_hi: TAU,
        periodic: true,
        f: Arc::new(|p| Tv::new(p.cos(), p.sin(), 0.0)),
        df: Arc::new(|p| Tv::new(-p.sin(), p.cos(), 0.0)),
        nubar: Arc::new(|p| FRAC_1_SQRT_2 * Tv::new(p.cos(), p.sin(), -1.0)),
        dnubar: Arc::new(|p| FRAC_1_SQRT_2 * Tv::new(-p.sin(), p.cos(), 0.0)),
        metric: SymMatField::new(2, |x| Sym::new(1.0, 0.0, 0.0, x[0].cos().powi(2))),
        h: Arc::new(|_| 0.0),
        abar: Arc::new(|p| -Tv::new(p.cos(), p.sin(), 0.0)),
    }
}

/// The unit circle in `ℝ²×{0}` as the boundary of `r ≥ 1` with the metric
/// `dr² + Ψ(r)dφ²`, `Ψ(1) = 1`, `Ψ′(1) = psi1`, and `ν̄ = −e_r`.
pub fn psi_normal_data(psi1: f64) -> BoundaryData {
    let psi = psi_profile(psi1);
    BoundaryData {
        name: "psi".into(),
        x_lo: 0.0,
        x_hi: TAU,
        periodic: true,
        f: Arc::new(|p| Tv::new(p.cos(), p.sin(), 0.0)),
        df: Arc::new(|p| Tv::new(-p.sin(), p.cos(), 0.0)),
        nubar: Arc::new(|p| -Tv::new(p.cos(), p.sin(), 0.0)),
        dnubar: Arc::new(|p| -Tv::new(-p.sin(), p.cos(), 0.0)),
        metric: SymMatField::new(2, move |x| Sym::new(1.0, 0.0, 0.0, psi(1.0 + x[0]))),
        h: Arc::new(move |_| 0.5 * psi1),
        abar: Arc::new(|p| -Tv::new(p.cos(), p.sin(), 0.0)),
    }
}

/// A straight segment in the flat plane; `h` and `Ā` both vanish.
pub fn flat_segment_normal_data() -> BoundaryData {
    BoundaryData {
        name: "flat-segment".into(),
        x_lo: 0.0,
        x_hi: 1.0,
        periodic: false,
        f: Arc::new(|x| Tv::new(x, 0.0, 0.0)),
        df: Arc::new(|_| Tv::new(1.0, 0.0, 0.0)),
        nubar: Arc::new(|_| Tv::new(0.0, -1.0, 0.0)),
        dnubar: Arc::new(|_| Tv::zeros()),
        metric: SymMatField::constant(2, Sym::identity()),
        h: Arc::new(|_| 0.0),
        abar: Arc::new(|_| Tv::zeros()),
    }
}
