//! The coin pushed through a hole: the annulus metric `α*g_{ℝ²}` with
//! `α(r,t) = (1+r+r²)(cos t, sin t)` and the cylinder `β(r,s) = f_a(s) + r e₃`
//! over the arc-length parametrized ellipse `γ_a(t) = C_a(cos t, a sin t)`.

use std::f64::consts::TAU;
use std::sync::Arc;

use crate::evaluation::FnBaseMap;
use crate::geomcore::{ChartDomain, Jac, Pt, Sym, SymMatField, Tv};
use crate::ode::{integrate_steps, DenseSolution, OdeOptions};
use crate::quadrature::integrate1;

use super::{ModelError, ModelSpec};

fn speed(a: f64, t: f64) -> f64 {
    (t.sin().powi(2) + a * a * t.cos().powi(2)).sqrt()
}

/// `C_a`, the scale giving `γ_a` length `2π`, by bisection on the length map.
pub fn coin_constant(a: f64) -> f64 {
    let length = |c: f64| integrate1(|t| c * speed(a, t), 0.0, TAU, 1e-14);
    let (mut lo, mut hi) = (0.0, 1.0);
    while length(hi) < TAU {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if length(mid) < TAU {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `f_a`, the ellipse reparametrized by arc length on `[0, 2π)`.
#[derive(Debug, Clone)]
pub struct CoinCurve {
    pub a: f64,
    pub c: f64,
    tau: DenseSolution<1>,
    /// `2π/τ(2π)`, closing the curve exactly.
    seam: f64,
}

impl CoinCurve {
    fn tau(&self, s: f64) -> f64 {
        let w = s.rem_euclid(TAU);
        let turns = (s - w) / TAU;
        self.tau.eval(w)[0] * self.seam + turns * TAU
    }

    /// Parameter of `γ_a` reached after arc length `2π`.
    pub fn end_parameter(&self) -> f64 {
        self.tau.end()[0]
    }

    pub fn point(&self, s: f64) -> Tv {
        let t = self.tau(s);
        Tv::new(self.c * t.cos(), self.c * self.a * t.sin(), 0.0)
    }

    pub fn tangent(&self, s: f64) -> Tv {
        let t = self.tau(s);
        let v = Tv::new(-t.sin(), self.a * t.cos(), 0.0);
        v / v.norm()
    }

    /// Largest pairwise distance among `samples` equally spaced points.
    pub fn diameter(&self, samples: usize) -> f64 {
        let pts: Vec<Tv> = (0..samples).map(|k| self.point(TAU * k as f64 / samples as f64)).collect();
        let mut d: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                d = d.max((p - q).norm());
            }
        }
        d
    }
}

pub fn coin_curve(a: f64) -> Result<CoinCurve, ModelError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(ModelError::InvalidParameter(format!("coin needs a > 0, got {a}")));
    }
    let c = coin_constant(a);
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-12, h_max: 0.05, ..OdeOptions::default() };
    let steps = integrate_steps(|_, y: &[f64; 1]| [1.0 / (c * speed(a, y[0]))], 0.0, [0.0], TAU, opts)
        .map_err(|e| ModelError::InvalidParameter(format!("arc-length integration: {e}")))?;
    let tau = DenseSolution::new(steps);
    let seam = TAU / tau.end()[0];
    Ok(CoinCurve { a, c, tau, seam })
}

pub fn model_coin(a: f64, eps_band: f64) -> Result<ModelSpec, ModelError> {
    if !(eps_band > 0.0 && eps_band <= 1.0) {
        return Err(ModelError::InvalidParameter(format!("coin band width must lie in (0, 1], got {eps_band}")));
    }
    let curve = Arc::new(coin_curve(a)?);
    let (c1, c2, c3) = (curve.clone(), curve.clone(), curve.clone());
    let base = FnBaseMap::new(2, move |x: &Pt| c1.point(x[1]) + Tv::new(0.0, 0.0, x[0])).with_jac(move |x: &Pt| {
        let mut j = Jac::zeros();
        j.set_column(0, &Tv::new(0.0, 0.0, 1.0));
        j.set_column(1, &c2.tangent(x[1]));
        j
    });
    let metric = SymMatField::new(2, |x| {
        let r = x[0];
        Sym::new((1.0 + 2.0 * r).powi(2), 0.0, 0.0, (1.0 + r + r * r).powi(2))
    });
    let defect = SymMatField::new(2, |x| {
        let r = x[0];
        Sym::new(4.0 * r * (1.0 + r), 0.0, 0.0, r * (1.0 + r) * (2.0 + r + r * r))
    });
    Ok(ModelSpec {
        name: "coin".into(),
        domain: ChartDomain::new(vec![0.0, 0.0], vec![eps_band, TAU], Some(0), &[1]).unwrap(),
        metric,
        base: Arc::new(base),
        defect: Some(defect),
        trace: Some(Arc::new(move |s| c3.point(s))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_circle_case() {
        let c = coin_curve(1.0).unwrap();
        assert!((c.c - 1.0).abs() < 1e-12);
        for k in 0..16 {
            let s = 0.4 * k as f64;
            assert!((c.point(s) - Tv::new(s.cos(), s.sin(), 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn arc_length_normalization() {
        for a in [0.3, 0.5, 1.0] {
            let c = coin_curve(a).unwrap();
            let len = integrate1(|t| c.c * speed(a, t), 0.0, TAU, 1e-14);
            assert!((len - TAU).abs() < 1e-10, "a = {a}");
            assert!((c.end_parameter() - TAU).abs() < 1e-9, "a = {a}");
            // Unit speed, measured by differences of the reparametrized curve.
            let h = 1e-5;
            for k in 0..50 {
                let s = 0.123 * k as f64;
                let v = (c.point(s + h) - c.point(s - h)) / (2.0 * h);
                assert!((v.norm() - 1.0).abs() < 1e-7, "a = {a}, s = {s}: {}", v.norm() - 1.0);
            }
        }
    }

    #[test]
    fn defect_matches_closed_form() {
        let m = model_coin(0.3, 0.2).unwrap();
        let d = m.defect_at(&Pt::new(0.1, 1.0));
        assert!((d[(0, 0)] - 0.44).abs() < 1e-10);
        assert!((d[(1, 1)] - 0.1 * 1.1 * 2.11).abs() < 1e-10);
        assert!(d[(0, 1)].abs() < 1e-10);
        assert!(m.check(33).pass);
    }

    #[test]
    fn diameter_tends_to_pi() {
        let mut prev = f64::INFINITY;
        for a in [0.3, 0.1, 0.05] {
            let c = coin_curve(a).unwrap();
            let d = c.diameter(1024);
            // For a < 1 the diameter is the major axis.
            assert!((d - 2.0 * c.c).abs() < 1e-4);
            assert!(d < PI);
            assert!(PI - d < prev);
            prev = PI - d;
        }
        assert!(prev / PI < 0.02);
    }
}
