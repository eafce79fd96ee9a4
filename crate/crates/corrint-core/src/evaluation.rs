//! Layered maps: a smooth base map followed by corrugation layers
//! `u_k = u_{k−1} + λ_k⁻¹ [Γ₁(s, λ_k⟨x,ν_k⟩) ξ_k + Γ₂(s, λ_k⟨x,ν_k⟩) ζ_k]`.
//!
//! Frames and amplitudes are recomputed at every evaluation point from the
//! exact Jacobian of the previous layers. Only their gradients, which enter
//! the `λ⁻¹E` term, come from a per-layer interpolant (or, for the oracle
//! backend, from finite differences of the on-demand fields).

use std::sync::Arc;

use nalgebra::DVector;
use thiserror::Error;

use crate::convexint::cutoff::CutoffProfile;
use crate::corrugation::CorrugationProfile;
use crate::decomposition::TermRule;
use crate::geomcore::{frame_fast, jac_norm, pullback_fast, ChartDomain, Frame, Jac, Pt, Sym, SymMatField, Tv};
use crate::interp::GridInterp;

/// Layers whose grid would exceed this many nodes fall back to on-demand fields.
pub const MAX_GRID_NODES: usize = 8_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("immersion lost at {position:?} (layer {layer})")]
    ImmersionLost { position: Vec<f64>, layer: usize },
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
}

pub trait BaseMap: Send + Sync {
    fn eval(&self, x: &Pt) -> Tv;
    fn jac(&self, x: &Pt) -> Jac;
    fn analytic(&self) -> bool {
        true
    }
}

type PointFn = Arc<dyn Fn(&Pt) -> Tv + Send + Sync>;
type JacFn = Arc<dyn Fn(&Pt) -> Jac + Send + Sync>;

/// Base map from closures; without a Jacobian closure the Jacobian is a
/// fourth-order central difference with step `1e-4`.
#[derive(Clone)]
pub struct FnBaseMap {
    n: usize,
    eval: PointFn,
    jac: Option<JacFn>,
}

impl FnBaseMap {
    pub fn new(n: usize, eval: impl Fn(&Pt) -> Tv + Send + Sync + 'static) -> Self {
        Self { n, eval: Arc::new(eval), jac: None }
    }

    pub fn with_jac(mut self, jac: impl Fn(&Pt) -> Jac + Send + Sync + 'static) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }
}

impl BaseMap for FnBaseMap {
    fn eval(&self, x: &Pt) -> Tv {
        (self.eval)(x)
    }

    fn jac(&self, x: &Pt) -> Jac {
        match &self.jac {
            Some(j) => j(x),
            None => {
                let h = 1e-4;
                let mut out = Jac::zeros();
                for a in 0..self.n {
                    let mut e = Pt::zeros();
                    e[a] = h;
                    let d = (-(self.eval)(&(x + 2.0 * e)) + (self.eval)(&(x + e)) * 8.0
                        - (self.eval)(&(x - e)) * 8.0
                        + (self.eval)(&(x - 2.0 * e)))
                        / (12.0 * h);
                    out.set_column(a, &d);
                }
                out
            }
        }
    }

    fn analytic(&self) -> bool {
        self.jac.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldBackend {
    /// Gradients of frame and amplitude from a quintic interpolant per layer.
    #[default]
    Grid,
    /// Gradients by finite differences of fields recomputed on demand.
    OnDemand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianBackend {
    /// Chain rule through the layers.
    #[default]
    Analytic,
    /// Fourth-order differences of `eval_map` with `h = min(1e-4, 1e-2/λ_max)`.
    FiniteDifference,
}

/// Parameters of one corrugation layer.
#[derive(Debug, Clone)]
pub struct LayerSpec {
    pub lambda: f64,
    pub nu: Pt,
    pub delta: f64,
    pub cutoff: Option<CutoffProfile>,
    pub rule: TermRule,
    /// Layer count of the map whose defect this layer's coefficient is read from.
    pub stage_depth: usize,
    pub metric: SymMatField,
}

/// Number of interpolated field components: `w = a|ξ̃|`, `ξ`, `ζ`.
const NF: usize = 7;

#[derive(Debug, Clone)]
pub struct CorrugationLayer {
    pub spec: LayerSpec,
    /// Extra amplitude factor, `1` except for homotopy frames.
    pub amp_scale: f64,
    grid: Option<Arc<GridInterp<NF>>>,
    fd_step: f64,
}

impl CorrugationLayer {
    pub fn lambda(&self) -> f64 {
        self.spec.lambda
    }

    pub fn nu(&self) -> Pt {
        self.spec.nu
    }

    pub fn grid_nodes(&self) -> usize {
        self.grid.as_ref().map_or(0, |g| g.len())
    }

    pub fn grid_spacing(&self) -> Option<[f64; 2]> {
        self.grid.as_ref().map(|g| g.spacing())
    }

    /// Same layer (and grid) with another frequency.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut l = self.clone();
        l.spec.lambda = lambda;
        l
    }

    /// Same layer with its amplitude multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        let mut l = self.clone();
        l.amp_scale = scale;
        l
    }
}

struct State {
    u: Tv,
    j: Jac,
    jd: Jac,
}

#[derive(Clone)]
pub struct LayeredMap {
    pub base: Arc<dyn BaseMap>,
    pub layers: Vec<Arc<CorrugationLayer>>,
    pub domain: ChartDomain,
    pub backend: FieldBackend,
}

impl std::fmt::Debug for LayeredMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LayeredMap")
            .field("domain", &self.domain)
            .field("layers", &self.layers.len())
            .field("backend", &self.backend)
            .finish_non_exhaustive()
    }
}

impl LayeredMap {
    pub fn new(base: Arc<dyn BaseMap>, domain: ChartDomain) -> Self {
        Self { base, layers: Vec::new(), domain, backend: FieldBackend::Grid }
    }

    pub fn with_backend(mut self, backend: FieldBackend) -> Self {
        self.backend = backend;
        self
    }

    pub fn n(&self) -> usize {
        self.domain.dim
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// The map made of the first `depth` layers.
    pub fn prefix(&self, depth: usize) -> Self {
        let mut m = self.clone();
        m.layers.truncate(depth);
        m
    }

    pub fn lambda_max(&self) -> f64 {
        self.layers.iter().map(|l| l.spec.lambda).fold(0.0, f64::max)
    }

    /// Largest frequency present along each chart axis.
    pub fn axis_frequencies(&self) -> [f64; 2] {
        let mut f = [0.0f64; 2];
        for l in &self.layers {
            for (a, fa) in f.iter_mut().enumerate() {
                *fa = fa.max(l.spec.lambda * l.spec.nu[a].abs());
            }
        }
        f
    }

    /// Grid spacing for a layer appended to this map.
    pub fn layer_grid_spacing(&self) -> [f64; 2] {
        let f = self.axis_frequencies();
        let mut h = [1.0; 2];
        for (a, ha) in h.iter_mut().enumerate().take(self.n()) {
            let base = self.domain.width(a) / 128.0;
            *ha = if f[a] > 0.0 { base.min(std::f64::consts::TAU / (64.0 * f[a])) } else { base };
        }
        h
    }

    /// Nodes the grid of a layer appended to this map would need.
    pub fn next_grid_nodes(&self) -> usize {
        let c = GridInterp::<NF>::node_counts(&self.domain, self.layer_grid_spacing());
        c[0] * c[1]
    }

    /// Append a layer, sampling its gradient grid from the current map.
    pub fn with_layer(&self, spec: LayerSpec) -> Result<Self, EvalError> {
        Ok(self.with_built_layer(self.build_layer(spec)?))
    }

    /// Construct a layer to be appended to this map without appending it.
    pub fn build_layer(&self, spec: LayerSpec) -> Result<CorrugationLayer, EvalError> {
        let depth = self.depth();
        if spec.stage_depth > depth || self.layers.last().is_some_and(|l| l.spec.stage_depth > spec.stage_depth) {
            return Err(EvalError::InvalidLayer("stage depth out of order".into()));
        }
        if !(spec.lambda > 0.0) || !(spec.delta >= 0.0 && spec.delta < 1.0) {
            return Err(EvalError::InvalidLayer("need λ > 0 and 0 ≤ δ < 1".into()));
        }
        let lm = self.lambda_max();
        let fd_step = if lm > 0.0 { (1e-2 / lm).min(1e-4) } else { 1e-4 };
        let mut layer = CorrugationLayer { spec, amp_scale: 1.0, grid: None, fd_step };
        if self.backend == FieldBackend::Grid && self.next_grid_nodes() <= MAX_GRID_NODES {
            let n = self.n();
            let failed = std::sync::Mutex::new(None::<Pt>);
            let grid = GridInterp::build(&self.domain, self.layer_grid_spacing(), |x| {
                match self.run(x, depth).ok().and_then(|st| fields(&layer.spec, n, x, &st.j, &st.jd)) {
                    Some(f) => f,
                    None => {
                        failed.lock().unwrap().get_or_insert(*x);
                        [0.0; NF]
                    }
                }
            });
            if let Some(x) = failed.into_inner().unwrap() {
                return Err(EvalError::ImmersionLost { position: x.as_slice()[..n].to_vec(), layer: depth });
            }
            layer.grid = Some(Arc::new(grid));
        }
        Ok(layer)
    }

    /// Append an already constructed layer (sharing its grid).
    pub fn with_built_layer(&self, layer: CorrugationLayer) -> Self {
        let mut out = self.clone();
        out.layers.push(Arc::new(layer));
        out
    }

    fn run(&self, x: &Pt, depth: usize) -> Result<State, EvalError> {
        let x = self.domain.wrap(x);
        let mut st = State { u: self.base.eval(&x), j: self.base.jac(&x), jd: Jac::zeros() };
        st.jd = st.j;
        for i in 0..depth {
            let layer = &self.layers[i];
            if layer.spec.stage_depth == i {
                st.jd = st.j;
            }
            self.apply(i, &x, &mut st)?;
        }
        if let Some(next) = self.layers.get(depth) {
            if next.spec.stage_depth == depth {
                st.jd = st.j;
            }
        }
        Ok(st)
    }

    fn cutoff_at(&self, spec: &LayerSpec, x: &Pt) -> (f64, f64) {
        match (spec.cutoff, self.domain.dist_to_boundary(x)) {
            (Some(c), Some(d)) => (c.eval(d), c.deriv(d)),
            _ => (1.0, 0.0),
        }
    }

    fn field_gradients(&self, i: usize, x: &Pt) -> Result<[[f64; NF]; 2], EvalError> {
        let layer = &self.layers[i];
        if let Some(g) = &layer.grid {
            return Ok(g.eval_grad(x).1);
        }
        let n = self.n();
        let h = layer.fd_step;
        let mut out = [[0.0; NF]; 2];
        for (a, row) in out.iter_mut().enumerate().take(n) {
            let mut e = Pt::zeros();
            e[a] = h;
            let mut vals = [[0.0; NF]; 4];
            for (k, off) in [2.0, 1.0, -1.0, -2.0].iter().enumerate() {
                let y = x + e * *off;
                vals[k] = self.layer_fields(i, &y)?;
            }
            for c in 0..NF {
                row[c] = (-vals[0][c] + 8.0 * vals[1][c] - 8.0 * vals[2][c] + vals[3][c]) / (12.0 * h);
            }
        }
        Ok(out)
    }

    /// `[a|ξ̃|, ξ, ζ]` of layer `i` at `x`, computed from the exact prefix.
    fn layer_fields(&self, i: usize, x: &Pt) -> Result<[f64; NF], EvalError> {
        let st = self.run(x, i)?;
        fields(&self.layers[i].spec, self.n(), x, &st.j, &st.jd)
            .ok_or_else(|| EvalError::ImmersionLost { position: x.as_slice()[..self.n()].to_vec(), layer: i })
    }

    fn apply(&self, i: usize, x: &Pt, st: &mut State) -> Result<(), EvalError> {
        let layer = &self.layers[i];
        let spec = &layer.spec;
        let (eta, deta) = self.cutoff_at(spec, x);
        if eta == 0.0 || layer.amp_scale == 0.0 {
            return Ok(());
        }
        let n = self.n();
        let f = fields(spec, n, x, &st.j, &st.jd)
            .ok_or_else(|| EvalError::ImmersionLost { position: x.as_slice()[..n].to_vec(), layer: i })?;
        let grads = self.field_gradients(i, x)?;
        let c = (1.0 - spec.delta).sqrt() * layer.amp_scale;
        let w = f[0];
        let s = c * eta * w;
        let mut ds = Pt::zeros();
        for a in 0..n {
            ds[a] = c * eta * grads[a][0];
        }
        if let Some(b) = self.domain.boundary_axis {
            ds[b] += c * deta * w;
        }
        let xi = Tv::new(f[1], f[2], f[3]);
        let zeta = Tv::new(f[4], f[5], f[6]);
        let lambda = spec.lambda;
        let t = lambda * spec.nu.dot(x);
        let jet = CorrugationProfile::global().jet(s, t);

        let mut e = (xi * jet.ds[0] + zeta * jet.ds[1]) * ds.transpose();
        for a in 0..n {
            let dxi = Tv::new(grads[a][1], grads[a][2], grads[a][3]);
            let dzeta = Tv::new(grads[a][4], grads[a][5], grads[a][6]);
            let col = dxi * jet.g[0] + dzeta * jet.g[1];
            for r in 0..3 {
                e[(r, a)] += col[r];
            }
        }
        st.u += (xi * jet.g[0] + zeta * jet.g[1]) / lambda;
        st.j += (xi * jet.dt[0] + zeta * jet.dt[1]) * spec.nu.transpose() + e / lambda;
        Ok(())
    }

    /// Quantities of the last layer at `x`: values and Jacobians before and
    /// after it, its amplitude, `|ξ̃|` and the leading term `∂tΓ₁ξ⊗ν + ∂tΓ₂ζ⊗ν`.
    pub fn probe_last(&self, x: &Pt) -> Result<LastLayerProbe, EvalError> {
        let depth = self.depth();
        assert!(depth > 0, "probe_last needs a layer");
        let x = self.domain.wrap(x);
        let mut st = self.run(&x, depth - 1)?;
        let (u_prev, j_prev) = (st.u, st.j);
        let i = depth - 1;
        let layer = &self.layers[i];
        let n = self.n();
        let f = fields(&layer.spec, n, &x, &st.j, &st.jd)
            .ok_or_else(|| EvalError::ImmersionLost { position: x.as_slice()[..n].to_vec(), layer: i })?;
        let frame = frame_fast(&st.j, n, &layer.spec.nu)
            .ok_or_else(|| EvalError::ImmersionLost { position: x.as_slice()[..n].to_vec(), layer: i })?;
        let (eta, _) = self.cutoff_at(&layer.spec, &x);
        let s = (1.0 - layer.spec.delta).sqrt() * layer.amp_scale * eta * f[0];
        let jet = CorrugationProfile::global().jet(s, layer.spec.lambda * layer.spec.nu.dot(&x));
        let xi = Tv::new(f[1], f[2], f[3]);
        let zeta = Tv::new(f[4], f[5], f[6]);
        let main = (xi * jet.dt[0] + zeta * jet.dt[1]) * layer.spec.nu.transpose();
        self.apply(i, &x, &mut st)?;
        Ok(LastLayerProbe {
            u_prev,
            j_prev,
            u: st.u,
            j: st.j,
            amp: s,
            xi_tilde_norm: frame.xi_tilde_norm,
            main,
            gamma_norm: (jet.g[0] * jet.g[0] + jet.g[1] * jet.g[1]).sqrt(),
            frame_norm: xi.norm() + zeta.norm(),
        })
    }

    /// Value and analytic Jacobian.
    pub fn eval_full(&self, x: &Pt) -> Result<(Tv, Jac), EvalError> {
        let st = self.run(x, self.depth())?;
        Ok((st.u, st.j))
    }

    pub fn eval_map(&self, x: &Pt) -> Result<Tv, EvalError> {
        Ok(self.eval_full(x)?.0)
    }

    pub fn eval_jacobian(&self, x: &Pt, backend: JacobianBackend) -> Result<Jac, EvalError> {
        match backend {
            JacobianBackend::Analytic => Ok(self.eval_full(x)?.1),
            JacobianBackend::FiniteDifference => self.fd_jacobian(x),
        }
    }

    /// Value and Jacobian of this map and of its prefix of depth `d`, in one pass.
    pub fn eval_with_prefix(&self, x: &Pt, d: usize) -> Result<PrefixEval, EvalError> {
        let x = self.domain.wrap(x);
        let mut st = State { u: self.base.eval(&x), j: self.base.jac(&x), jd: Jac::zeros() };
        st.jd = st.j;
        let (mut up, mut jp) = (st.u, st.j);
        for i in 0..self.depth() {
            if i == d {
                (up, jp) = (st.u, st.j);
            }
            if self.layers[i].spec.stage_depth == i {
                st.jd = st.j;
            }
            self.apply(i, &x, &mut st)?;
        }
        if d >= self.depth() {
            (up, jp) = (st.u, st.j);
        }
        Ok(PrefixEval { u: st.u, j: st.j, u_prefix: up, j_prefix: jp })
    }

    fn fd_jacobian(&self, x: &Pt) -> Result<Jac, EvalError> {
        let lm = self.lambda_max();
        let h = if lm > 0.0 { (1e-2 / lm).min(1e-4) } else { 1e-4 };
        let mut out = Jac::zeros();
        for a in 0..self.n() {
            let mut e = Pt::zeros();
            e[a] = h;
            let periodic = self.domain.periodic[a];
            let lo_room = x[a] - 2.0 * h >= self.domain.lo[a];
            let hi_room = x[a] + 2.0 * h <= self.domain.hi[a];
            let col = if periodic || (lo_room && hi_room) {
                let f = |k: f64| self.eval_map(&(x + e * k));
                (-f(2.0)? + f(1.0)? * 8.0 - f(-1.0)? * 8.0 + f(-2.0)?) / (12.0 * h)
            } else {
                let sgn = if lo_room { -1.0 } else { 1.0 };
                let f = |k: f64| self.eval_map(&(x + e * (sgn * k)));
                (f(0.0)? * -25.0 + f(1.0)? * 48.0 - f(2.0)? * 36.0 + f(3.0)? * 16.0 - f(4.0)? * 3.0)
                    / (12.0 * h * sgn)
            };
            out.set_column(a, &col);
        }
        Ok(out)
    }

    /// Frame `(ξ, ζ, |ξ̃|)` of layer `i` at `x`.
    pub fn layer_frame(&self, i: usize, x: &Pt) -> Result<Frame, EvalError> {
        let n = self.n();
        let f = self.layer_fields(i, x)?;
        let st = self.run(x, i)?;
        let lf = frame_fast(&st.j, n, &self.layers[i].spec.nu)
            .ok_or_else(|| EvalError::ImmersionLost { position: x.as_slice()[..n].to_vec(), layer: i })?;
        Ok(Frame {
            xi: DVector::from_column_slice(&f[1..1 + n + 1]),
            zeta: DVector::from_column_slice(&f[4..4 + n + 1]),
            xi_tilde_norm: lf.xi_tilde_norm,
        })
    }

    /// Amplitude `s(x)` of layer `i`.
    pub fn layer_amp(&self, i: usize, x: &Pt) -> Result<f64, EvalError> {
        let layer = &self.layers[i];
        let (eta, _) = self.cutoff_at(&layer.spec, &self.domain.wrap(x));
        if eta == 0.0 || layer.amp_scale == 0.0 {
            return Ok(0.0);
        }
        let f = self.layer_fields(i, x)?;
        Ok((1.0 - layer.spec.delta).sqrt() * layer.amp_scale * eta * f[0])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PrefixEval {
    pub u: Tv,
    pub j: Jac,
    pub u_prefix: Tv,
    pub j_prefix: Jac,
}

#[derive(Debug, Clone, Copy)]
pub struct LastLayerProbe {
    pub u_prev: Tv,
    pub j_prev: Jac,
    pub u: Tv,
    pub j: Jac,
    pub amp: f64,
    pub xi_tilde_norm: f64,
    pub main: Jac,
    pub gamma_norm: f64,
    pub frame_norm: f64,
}

impl LastLayerProbe {
    /// `λ⁻¹E`.
    pub fn e_over_lambda(&self) -> Jac {
        self.j - self.j_prev - self.main
    }

    /// `∇uᵀ∇u − ∇u_prevᵀ∇u_prev − (1−δ)η²a²ν⊗ν`.
    pub fn remainder(&self, nu: &Pt, n: usize) -> Sym {
        let inc = (self.amp / self.xi_tilde_norm).powi(2);
        let mut r = pullback_fast(&self.j, n) - pullback_fast(&self.j_prev, n) - nu * nu.transpose() * inc;
        if n == 1 {
            r[(0, 1)] = 0.0;
            r[(1, 0)] = 0.0;
            r[(1, 1)] = 0.0;
        }
        r
    }
}

/// `[a|ξ̃|, ξ, ζ]` from the Jacobian `j` before the layer and the stage-input
/// Jacobian `jd`.
fn fields(spec: &LayerSpec, n: usize, x: &Pt, j: &Jac, jd: &Jac) -> Option<[f64; NF]> {
    let fr = frame_fast(j, n, &spec.nu)?;
    let d: Sym = spec.metric.eval(x) - pullback_fast(jd, n);
    let a = spec.rule.coeff(&d).sqrt();
    Some([a * fr.xi_tilde_norm, fr.xi[0], fr.xi[1], fr.xi[2], fr.zeta[0], fr.zeta[1], fr.zeta[2]])
}

/// `x ↦ g(x) − ∇uᵀ∇u`; entries are NaN where the map fails to evaluate.
pub fn defect_field(m: &LayeredMap, g: &SymMatField) -> SymMatField {
    let m = m.clone();
    let g = g.clone();
    let n = m.n();
    SymMatField::new(n, move |x| match m.eval_full(x) {
        Ok((_, j)) => g.eval(x) - pullback_fast(&j, n),
        Err(_) => Sym::from_element(f64::NAN),
    })
}

/// Operator norm of the Jacobian at `x`.
pub fn jacobian_norm(m: &LayeredMap, x: &Pt) -> Result<f64, EvalError> {
    Ok(jac_norm(&m.eval_full(x)?.1, m.n()))
}
