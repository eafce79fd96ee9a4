//! Chart domains, symmetric form fields, pullback metrics and the corrugation frame.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3x2, Vector2, Vector3};
use thiserror::Error;

/// Chart point. Maps in this crate live on charts of dimension 1 or 2; for
/// `n = 1` the second coordinate is carried along as zero.
pub type Pt = Vector2<f64>;
/// Vector in the target space; for `n = 1` the third component is zero.
pub type Tv = Vector3<f64>;
/// Jacobian `∂_j u^i`, padded to 3×2.
pub type Jac = Matrix3x2<f64>;
/// Symmetric form, padded to 2×2.
pub type Sym = Matrix2<f64>;

/// Largest chart dimension supported by the layered evaluator.
pub const MAX_DIM: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("invalid chart domain: {0}")]
    InvalidDomain(String),
    #[error("immersion lost at {position:?}")]
    ImmersionLost { position: Option<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartDomain {
    pub dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub boundary_axis: Option<usize>,
    pub periodic: Vec<bool>,
}

impl ChartDomain {
    pub fn new(
        lo: Vec<f64>,
        hi: Vec<f64>,
        boundary_axis: Option<usize>,
        periodic_axes: &[usize],
    ) -> Result<Self, GeomError> {
        let dim = lo.len();
        if dim == 0 || dim != hi.len() {
            return Err(GeomError::InvalidDomain("bounds have mismatched length".into()));
        }
        if dim > MAX_DIM {
            return Err(GeomError::InvalidDomain(format!("dimension {dim} exceeds {MAX_DIM}")));
        }
        for i in 0..dim {
            if !(lo[i] < hi[i]) {
                return Err(GeomError::InvalidDomain(format!("axis {i}: lo must be < hi")));
            }
        }
        let mut periodic = vec![false; dim];
        for &a in periodic_axes {
            if a >= dim {
                return Err(GeomError::InvalidDomain(format!("periodic axis {a} out of range")));
            }
            periodic[a] = true;
        }
        if let Some(b) = boundary_axis {
            if b >= dim {
                return Err(GeomError::InvalidDomain(format!("boundary axis {b} out of range")));
            }
            if periodic[b] {
                return Err(GeomError::InvalidDomain("boundary axis cannot be periodic".into()));
            }
        }
        Ok(Self { dim, lo, hi, boundary_axis, periodic })
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn period(&self, axis: usize) -> Option<f64> {
        self.periodic[axis].then(|| self.width(axis))
    }

    /// Chart distance to `B`, i.e. `x_b − lo_b` on the boundary axis.
    pub fn dist_to_boundary(&self, x: &Pt) -> Option<f64> {
        self.boundary_axis.map(|b| x[b] - self.lo[b])
    }

    /// Whether `x` lies in `Ω̄_j` (chart distance to `B` at most `j`).
    pub fn in_collar(&self, x: &Pt, j: f64) -> bool {
        self.dist_to_boundary(x).is_some_and(|d| d <= j)
    }

    /// Reduce periodic coordinates into `[lo, hi)`.
    pub fn wrap(&self, x: &Pt) -> Pt {
        let mut y = *x;
        for i in 0..self.dim {
            if self.periodic[i] && (y[i] < self.lo[i] || y[i] >= self.hi[i]) {
                let p = self.width(i);
                y[i] = self.lo[i] + (y[i] - self.lo[i]).rem_euclid(p);
                if y[i] >= self.hi[i] {
                    y[i] = self.lo[i];
                }
            }
        }
        y
    }

    pub fn contains(&self, x: &Pt) -> bool {
        (0..self.dim).all(|i| self.periodic[i] || (x[i] >= self.lo[i] && x[i] <= self.hi[i]))
    }

    pub fn center(&self) -> Pt {
        let mut c = Pt::zeros();
        for i in 0..self.dim {
            c[i] = 0.5 * (self.lo[i] + self.hi[i]);
        }
        c
    }
}

/// A position-dependent symmetric `n × n` form.
#[derive(Clone)]
pub struct SymMatField {
    pub dim: usize,
    f: Arc<dyn Fn(&Pt) -> Sym + Send + Sync>,
}

impl std::fmt::Debug for SymMatField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymMatField").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl SymMatField {
    pub fn new(dim: usize, f: impl Fn(&Pt) -> Sym + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f) }
    }

    pub fn constant(dim: usize, m: Sym) -> Self {
        Self::new(dim, move |_| m)
    }

    /// Evaluate and symmetrize; entries outside the `dim` block are zeroed.
    pub fn eval(&self, x: &Pt) -> Sym {
        let m = (self.f)(x);
        let mut s = Sym::zeros();
        for i in 0..self.dim {
            for j in 0..self.dim {
                s[(i, j)] = if i == j { m[(i, i)] } else { 0.5 * (m[(i, j)] + m[(j, i)]) };
            }
        }
        s
    }

    /// Sampled Cholesky check of positive definiteness.
    pub fn is_positive_definite_on(&self, samples: &[Pt]) -> bool {
        samples.iter().all(|x| {
            let m = self.eval(x);
            let d = DMatrix::from_fn(self.dim, self.dim, |i, j| m[(i, j)]);
            d.cholesky().is_some()
        })
    }
}

/// Corrugation frame built from a Jacobian and a direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub xi: DVector<f64>,
    pub zeta: DVector<f64>,
    pub xi_tilde_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankStatus {
    Full,
    Deficient(usize),
}

/// `∇uᵀ∇u` together with the numerical rank of `∇u`.
pub fn pullback_metric(jac: &DMatrix<f64>) -> (DMatrix<f64>, RankStatus) {
    let n = jac.ncols();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = jac.column(i).dot(&jac.column(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let rank = jac.clone().svd(false, false).rank(1e-12 * jac.norm().max(f64::MIN_POSITIVE));
    let status = if rank == n { RankStatus::Full } else { RankStatus::Deficient(rank) };
    (g, status)
}

fn det_laplace(cols: &[&[f64]], rows: &[usize]) -> f64 {
    let k = rows.len();
    if k == 1 {
        return cols[0][rows[0]];
    }
    if k == 2 {
        return cols[0][rows[0]] * cols[1][rows[1]] - cols[1][rows[0]] * cols[0][rows[1]];
    }
    let mut acc = 0.0;
    let mut sub = Vec::with_capacity(k - 1);
    for (p, &r) in rows.iter().enumerate() {
        sub.clear();
        sub.extend(rows.iter().copied().filter(|&q| q != r));
        let term = cols[0][r] * det_laplace(&cols[1..], &sub);
        if p % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Generalized cross product `⋆(∂₁u ∧ … ∧ ∂ₙu)`: the vector `ζ̃` with
/// `⟨ζ̃, w⟩ = det[∂₁u, …, ∂ₙu, w]`.
///
/// Inputs are put in a canonical order before the cofactor expansion, so that
/// permuting them changes only the sign, bit for bit.
pub fn hodge_normal(partials: &[DVector<f64>]) -> DVector<f64> {
    let n = partials.len();
    assert!(n >= 1, "hodge_normal needs at least one vector");
    let dim = n + 1;
    assert!(partials.iter().all(|p| p.len() == dim), "vectors must live in R^(n+1)");

    let mut order: Vec<usize> = (0..n).collect();
    let key = |i: usize| partials[i].iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    order.sort_by_key(|&i| key(i));
    let mut inversions = 0;
    for a in 0..n {
        for b in a + 1..n {
            if order[a] > order[b] {
                inversions += 1;
            }
        }
    }
    let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
    let cols: Vec<&[f64]> = order.iter().map(|&i| partials[i].as_slice()).collect();

    let mut out = DVector::zeros(dim);
    for i in 0..dim {
        let rows: Vec<usize> = (0..dim).filter(|&r| r != i).collect();
        // Expanding det[v₁ … vₙ e_i] along its last column.
        let cof = if (i + n).is_multiple_of(2) { 1.0 } else { -1.0 };
        out[i] = sign * cof * det_laplace(&cols, &rows);
    }
    out
}

/// `ξ̃ = ∇u (∇uᵀ∇u)⁻¹ ν`, `ξ = ξ̃/|ξ̃|²`, `ζ = ζ̃/(|ζ̃||ξ̃|)`.
pub fn corr_frame(jac: &DMatrix<f64>, nu: &DVector<f64>) -> Result<Frame, GeomError> {
    let (g, status) = pullback_metric(jac);
    if status != RankStatus::Full {
        return Err(GeomError::ImmersionLost { position: None });
    }
    let ginv_nu = g
        .clone()
        .cholesky()
        .ok_or(GeomError::ImmersionLost { position: None })?
        .solve(nu);
    let xi_t = jac * ginv_nu;
    let xt = xi_t.norm();
    let partials: Vec<DVector<f64>> = (0..jac.ncols()).map(|j| jac.column(j).into_owned()).collect();
    let zeta_t = hodge_normal(&partials);
    let zt = zeta_t.norm();
    if xt == 0.0 || zt == 0.0 || !xt.is_finite() {
        return Err(GeomError::ImmersionLost { position: None });
    }
    Ok(Frame { xi: &xi_t / (xt * xt), zeta: zeta_t / (zt * xt), xi_tilde_norm: xt })
}

/// Fixed-size frame used on hot evaluation paths.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalFrame {
    pub xi: Tv,
    pub zeta: Tv,
    pub xi_tilde_norm: f64,
}

pub fn pullback_fast(j: &Jac, n: usize) -> Sym {
    let mut g = Sym::zeros();
    for a in 0..n {
        for b in a..n {
            let v = j.column(a).dot(&j.column(b));
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

pub(crate) fn frame_fast(j: &Jac, n: usize, nu: &Pt) -> Option<LocalFrame> {
    if n == 1 {
        let c = Tv::new(j[(0, 0)], j[(1, 0)], 0.0);
        let g = c.norm_squared();
        if !(g > 0.0) || !g.is_finite() {
            return None;
        }
        let xi_t = c * (nu[0] / g);
        let xt = xi_t.norm();
        let zeta_t = Tv::new(-c[1], c[0], 0.0);
        let zt = zeta_t.norm();
        return Some(LocalFrame { xi: xi_t / (xt * xt), zeta: zeta_t / (zt * xt), xi_tilde_norm: xt });
    }
    let g = pullback_fast(j, 2);
    let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    if !(det > 1e-300) || !det.is_finite() {
        return None;
    }
    let w0 = (g[(1, 1)] * nu[0] - g[(0, 1)] * nu[1]) / det;
    let w1 = (-g[(1, 0)] * nu[0] + g[(0, 0)] * nu[1]) / det;
    let xi_t: Tv = j.column(0) * w0 + j.column(1) * w1;
    let xt = xi_t.norm();
    let zeta_t = j.column(0).cross(&j.column(1));
    let zt = zeta_t.norm();
    if xt == 0.0 || zt == 0.0 {
        return None;
    }
    Some(LocalFrame { xi: xi_t / (xt * xt), zeta: zeta_t / (zt * xt), xi_tilde_norm: xt })
}

/// Eigenvalues of the leading `n × n` block, ascending.
pub fn sym_eigenvalues(m: &Sym, n: usize) -> [f64; 2] {
    if n == 1 {
        return [m[(0, 0)], m[(0, 0)]];
    }
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    [mean - r, mean + r]
}

/// Operator norm of the leading `n × n` block of a symmetric matrix.
pub fn sym_norm(m: &Sym, n: usize) -> f64 {
    let [l0, l1] = sym_eigenvalues(m, n);
    l0.abs().max(l1.abs())
}

/// Operator norm of a padded `(n+1) × n` matrix.
pub fn jac_norm(j: &Jac, n: usize) -> f64 {
    let g = pullback_fast(j, n);
    sym_eigenvalues(&g, n)[1].max(0.0).sqrt()
}


#[cfg(test)]
fn dmatrix_from_jac(j: &Jac, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n + 1, n, |r, c| j[(r, c)])
}
