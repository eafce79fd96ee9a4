use serde::Serialize;

use crate::evaluation::LayeredMap;
use crate::geomcore::{Pt, SymMatField};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LengthComparison {
    /// `∫|γ̇|_g`.
    pub intrinsic: f64,
    /// Length of `u∘γ` in Euclidean space.
    pub extrinsic: f64,
}

/// Trapezoid sums over `samples` intervals of `[0, 1]` for a curve given as
/// position and velocity.
pub fn length_comparison(
    m: &LayeredMap,
    g: &SymMatField,
    curve: &dyn Fn(f64) -> (Pt, Pt),
    samples: usize,
) -> Result<LengthComparison, AnalysisError> {
    let samples = samples.max(1);
    let h = 1.0 / samples as f64;
    let mut out = LengthComparison { intrinsic: 0.0, extrinsic: 0.0 };
    for k in 0..=samples {
        let w = if k == 0 || k == samples { 0.5 * h } else { h };
        let (x, v) = curve(k as f64 * h);
        let (_, j) = m.eval_full(&x)?;
        out.intrinsic += w * v.dot(&(g.eval(&x) * v)).max(0.0).sqrt();
        out.extrinsic += w * (j * v).norm();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::FnBaseMap;
    use crate::geomcore::{ChartDomain, Jac, Sym, Tv};
    use std::sync::Arc;

    #[test]
    fn identity_map_lengths_agree() {
        let base = FnBaseMap::new(2, |x| Tv::new(x[0], x[1], 0.0)).with_jac(|_| Jac::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0));
        let d = ChartDomain::new(vec![-2.0, -2.0], vec![2.0, 2.0], None, &[]).unwrap();
        let m = LayeredMap::new(Arc::new(base), d);
        let g = SymMatField::constant(2, Sym::identity());
        let curve = |t: f64| (Pt::new(t, t * t), Pt::new(1.0, 2.0 * t));
        let l = length_comparison(&m, &g, &curve, 2000).unwrap();
        assert!((l.intrinsic - l.extrinsic).abs() < 1e-12);
        // ∫₀¹ √(1 + 4t²) dt
        let exact = 0.5 * 5f64.sqrt() + 0.25 * (2.0 + 5f64.sqrt()).ln();
        assert!((l.intrinsic - exact).abs() < 1e-6);
    }
}
