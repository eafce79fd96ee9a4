//! Fixed-direction decomposition of a positive semidefinite defect into
//! primitive metrics `a_k² ν_k⊗ν_k`.
//!
//! For `n = 2` and a diagonally dominant form `A` the directions are
//! `e₁, e₂, (e₁+e₂)/√2, (e₁−e₂)/√2` with coefficients
//! `(a₁₁−|a₁₂|, a₂₂−|a₁₂|, 2 max(a₁₂,0), 2 max(−a₁₂,0))`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use thiserror::Error;

use crate::geomcore::{sym_eigenvalues, ChartDomain, Pt, Sym, SymMatField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompositionError {
    #[error("diagonal dominance violated at {x:?}: {matrix:?}")]
    DominanceViolated { x: Vec<f64>, matrix: [[f64; 2]; 2] },
    #[error("defect not positive semidefinite at {x:?} (eigenvalue {eigenvalue:e})")]
    NotPsd { x: Vec<f64>, eigenvalue: f64 },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
}

/// How term `index` reads its coefficient off a defect matrix. `rot` maps
/// rotated coordinates back to the chart (identity unless pre-rotated).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermRule {
    pub dim: usize,
    pub index: usize,
    pub rot: Sym,
}

impl TermRule {
    /// `a_k²` for the defect `d` given in chart coordinates, clamped at zero.
    pub fn coeff(&self, d: &Sym) -> f64 {
        if self.dim == 1 {
            return d[(0, 0)].max(0.0);
        }
        let r = self.rot.transpose() * d * self.rot;
        let b = 0.5 * (r[(0, 1)] + r[(1, 0)]);
        let v = match self.index {
            0 => r[(0, 0)] - b.abs(),
            1 => r[(1, 1)] - b.abs(),
            2 => 2.0 * b.max(0.0),
            _ => 2.0 * (-b).max(0.0),
        };
        v.max(0.0)
    }

    pub fn direction(&self) -> Pt {
        if self.dim == 1 {
            return Pt::new(1.0, 0.0);
        }
        let local = match self.index {
            0 => Pt::new(1.0, 0.0),
            1 => Pt::new(0.0, 1.0),
            2 => Pt::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
            _ => Pt::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        };
        self.rot * local
    }
}

/// A primitive term `a²(x) ν⊗ν` whose coefficient is a closure over the defect.
#[derive(Clone)]
pub struct PrimitiveTerm {
    pub direction: Pt,
    pub rule: TermRule,
    coeff: Arc<dyn Fn(&Pt) -> f64 + Send + Sync>,
}

impl PrimitiveTerm {
    /// `a²(x)`.
    pub fn coeff_sq(&self, x: &Pt) -> f64 {
        (self.coeff)(x)
    }
}

impl std::fmt::Debug for PrimitiveTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrimitiveTerm").field("direction", &self.direction).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub struct PrimitiveDecomposition {
    pub dim: usize,
    pub terms: Vec<PrimitiveTerm>,
    pub m: usize,
    pub m0_bound: usize,
    /// Set when `a₁₂` changes sign on the samples (coefficients only Lipschitz).
    pub sign_change: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DecomposeOptions {
    /// Rotate to the eigenbasis of the sample-averaged defect first.
    pub pre_rotate: bool,
}

/// Sample points: a tensor grid with `per_axis` points per axis, endpoints
/// included on non-periodic axes.
pub fn sample_grid(domain: &ChartDomain, per_axis: usize) -> Vec<Pt> {
    let per_axis = per_axis.max(2);
    let axis = |i: usize| -> Vec<f64> {
        let (lo, hi) = (domain.lo[i], domain.hi[i]);
        if domain.periodic[i] {
            (0..per_axis).map(|k| lo + (hi - lo) * k as f64 / per_axis as f64).collect()
        } else {
            (0..per_axis).map(|k| lo + (hi - lo) * k as f64 / (per_axis - 1) as f64).collect()
        }
    };
    let a0 = axis(0);
    if domain.dim == 1 {
        return a0.into_iter().map(|x| Pt::new(x, 0.0)).collect();
    }
    let a1 = axis(1);
    let mut out = Vec::with_capacity(a0.len() * a1.len());
    for &x in &a0 {
        for &y in &a1 {
            out.push(Pt::new(x, y));
        }
    }
    out
}

fn principal_rotation(defect: &SymMatField, samples: &[Pt]) -> Sym {
    let mut avg = Sym::zeros();
    for x in samples {
        avg += defect.eval(x);
    }
    avg /= samples.len().max(1) as f64;
    let (a, b, d) = (avg[(0, 0)], avg[(0, 1)], avg[(1, 1)]);
    let theta = 0.5 * (2.0 * b).atan2(a - d);
    let (s, c) = theta.sin_cos();
    Sym::new(c, -s, s, c)
}

/// Decompose `defect` with fixed directions; validates on `samples`.
pub fn decompose_fixed(
    defect: &SymMatField,
    samples: &[Pt],
    opts: DecomposeOptions,
) -> Result<PrimitiveDecomposition, DecompositionError> {
    let n = defect.dim;
    if !(1..=2).contains(&n) {
        return Err(DecompositionError::UnsupportedDimension(n));
    }
    let rot = if n == 2 && opts.pre_rotate { principal_rotation(defect, samples) } else { Sym::identity() };
    let count = if n == 1 { 1 } else { 4 };
    let rules: Vec<TermRule> = (0..count).map(|index| TermRule { dim: n, index, rot }).collect();

    let mut m0 = 0;
    let (mut pos, mut neg) = (false, false);
    for x in samples {
        let d = defect.eval(x);
        let scale = d.abs().max().max(1.0);
        if n == 2 {
            let r = rot.transpose() * d * rot;
            let b = 0.5 * (r[(0, 1)] + r[(1, 0)]);
            let slack = 1e-12 * scale;
            if r[(0, 0)] < b.abs() - slack || r[(1, 1)] < b.abs() - slack {
                return Err(DecompositionError::DominanceViolated {
                    x: x.as_slice()[..n].to_vec(),
                    matrix: [[d[(0, 0)], d[(0, 1)]], [d[(1, 0)], d[(1, 1)]]],
                });
            }
            pos |= b > 0.0;
            neg |= b < 0.0;
        }
        let lmin = sym_eigenvalues(&d, n)[0];
        if lmin < -1e-10 {
            return Err(DecompositionError::NotPsd { x: x.as_slice()[..n].to_vec(), eigenvalue: lmin });
        }
        let active = rules.iter().filter(|r| r.coeff(&d) > 0.0).count();
        m0 = m0.max(active);
    }

    let terms = rules
        .iter()
        .map(|&rule| {
            let field = defect.clone();
            PrimitiveTerm {
                direction: rule.direction(),
                rule,
                coeff: Arc::new(move |x: &Pt| rule.coeff(&field.eval(x))),
            }
        })
        .collect();
    Ok(PrimitiveDecomposition { dim: n, terms, m: count, m0_bound: m0, sign_change: pos && neg })
}

/// `Σ a_k²(x) ν_k⊗ν_k`.
pub fn reconstruct(dec: &PrimitiveDecomposition, x: &Pt) -> Sym {
    let mut out = Sym::zeros();
    for t in &dec.terms {
        let nu = t.direction;
        out += nu * nu.transpose() * t.coeff_sq(x);
    }
    if dec.dim == 1 {
        out[(0, 1)] = 0.0;
        out[(1, 0)] = 0.0;
        out[(1, 1)] = 0.0;
    }
    out
}
