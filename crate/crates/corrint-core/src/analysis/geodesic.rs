//! Geodesics on a two-dimensional chart by single shooting.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::Serialize;

use crate::geomcore::{Pt, Sym, SymMatField};
use crate::ode::{integrate_steps, OdeOptions};

use super::{christoffel_fd, AnalysisError};

/// `Γ^k_ij` indexed `[k][i][j]`.
pub type Christoffel = Arc<dyn Fn(&Pt) -> [[[f64; 2]; 2]; 2] + Send + Sync>;

#[derive(Clone)]
pub struct GeodesicModel {
    pub metric: SymMatField,
    /// Closed-form symbols; differences of the metric otherwise.
    pub christoffel: Option<Christoffel>,
    pub tol: f64,
}

impl std::fmt::Debug for GeodesicModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeodesicModel").field("tol", &self.tol).finish_non_exhaustive()
    }
}

fn to_dmatrix(s: &Sym) -> DMatrix<f64> {
    DMatrix::from_fn(2, 2, |i, j| s[(i, j)])
}

impl GeodesicModel {
    pub fn new(metric: SymMatField) -> Self {
        assert_eq!(metric.dim, 2, "geodesics need a two-dimensional chart");
        Self { metric, christoffel: None, tol: 1e-12 }
    }

    pub fn with_christoffel(mut self, c: Christoffel) -> Self {
        self.christoffel = Some(c);
        self
    }

    pub fn euclidean() -> Self {
        Self::new(SymMatField::constant(2, Sym::identity())).with_christoffel(Arc::new(|_| [[[0.0; 2]; 2]; 2]))
    }

    /// Unit sphere in polar coordinates `(θ, φ)`, `θ` measured from the pole.
    pub fn round_sphere() -> Self {
        Self::new(SymMatField::new(2, |x| Sym::new(1.0, 0.0, 0.0, x[0].sin().powi(2)))).with_christoffel(Arc::new(
            |x| {
                let (s, c) = x[0].sin_cos();
                [[[0.0, 0.0], [0.0, -s * c]], [[0.0, c / s], [c / s, 0.0]]]
            },
        ))
    }

    pub fn gamma(&self, x: &Pt) -> [[[f64; 2]; 2]; 2] {
        match &self.christoffel {
            Some(c) => c(x),
            None => {
                let g = self.metric.clone();
                let m = move |y: &[f64]| to_dmatrix(&g.eval(&Pt::new(y[0], y[1])));
                let gam = christoffel_fd(&m, &[x[0], x[1]], 1e-4);
                std::array::from_fn(|k| std::array::from_fn(|i| std::array::from_fn(|j| gam[k][(i, j)])))
            }
        }
    }

    /// Largest `|∂_k g_ij − g_lj Γ^l_ki − g_il Γ^l_kj|` over the probes.
    pub fn compatibility_residual(&self, probes: &[Pt]) -> f64 {
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        for x in probes {
            let g = self.metric.eval(x);
            let gam = self.gamma(x);
            for k in 0..2 {
                let mut e = Pt::zeros();
                e[k] = h;
                let dg = (self.metric.eval(&(x - 2.0 * e)) - self.metric.eval(&(x - e)) * 8.0
                    + self.metric.eval(&(x + e)) * 8.0
                    - self.metric.eval(&(x + 2.0 * e)))
                    / (12.0 * h);
                for i in 0..2 {
                    for j in 0..2 {
                        let rhs: f64 = (0..2).map(|l| g[(l, j)] * gam[l][k][i] + g[(i, l)] * gam[l][k][j]).sum();
                        worst = worst.max((dg[(i, j)] - rhs).abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest `|Γ^k_ij − Γ^k_ji|` over the probes.
    pub fn symmetry_residual(&self, probes: &[Pt]) -> f64 {
        probes
            .iter()
            .map(|x| {
                let g = self.gamma(x);
                (0..2).map(|k| (g[k][0][1] - g[k][1][0]).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    fn speed(&self, x: &Pt, v: &Pt) -> f64 {
        v.dot(&(self.metric.eval(x) * v)).max(0.0).sqrt()
    }

    /// End point and relative speed drift of the geodesic with initial
    /// velocity `w`, followed for unit time.
    fn shoot(&self, p: &Pt, w: &Pt) -> Result<(Pt, f64), AnalysisError> {
        let rhs = |_: f64, y: &[f64; 4]| {
            let x = Pt::new(y[0], y[1]);
            let g = self.gamma(&x);
            let v = [y[2], y[3]];
            let acc = |k: usize| -(0..2).map(|i| (0..2).map(|j| g[k][i][j] * v[i] * v[j]).sum::<f64>()).sum::<f64>();
            [y[2], y[3], acc(0), acc(1)]
        };
        let opts = OdeOptions { rtol: self.tol, atol: self.tol, h0: 1e-2, max_steps: 200_000, ..OdeOptions::default() };
        let steps = integrate_steps(rhs, 0.0, [p[0], p[1], w[0], w[1]], 1.0, opts)
            .map_err(|_| AnalysisError::ShootingDiverged { residual: f64::INFINITY, iterations: 0 })?;
        let s0 = self.speed(p, w);
        let mut drift: f64 = 0.0;
        for st in &steps {
            let y = st.y1;
            let s = self.speed(&Pt::new(y[0], y[1]), &Pt::new(y[2], y[3]));
            if s0 > 0.0 {
                drift = drift.max((s - s0).abs() / s0);
            }
        }
        let end = steps.last().map_or(*p, |st| Pt::new(st.y1[0], st.y1[1]));
        Ok((end, drift))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeodesicResult {
    pub distance: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Relative change of `|γ̇|_g` along the integration.
    pub speed_drift: f64,
}

/// Length of the geodesic from `p` to `q`, by Newton's method on the
/// initial velocity.
pub fn geodesic_distance(gm: &GeodesicModel, p: &Pt, q: &Pt) -> Result<GeodesicResult, AnalysisError> {
    let mut w = q - p;
    let target = Vector2::new(q[0], q[1]);
    let resid = |w: &Pt| -> Result<(Vector2<f64>, f64), AnalysisError> {
        let (e, drift) = gm.shoot(p, w)?;
        Ok((Vector2::new(e[0], e[1]) - target, drift))
    };
    let (mut r, mut drift) = resid(&w)?;
    let stop = 1e-14 * (1.0 + q.norm());
    let mut it = 0;
    while r.norm() > stop && it < 60 {
        it += 1;
        let hs = 1e-7 * w.norm().max(1e-4);
        let mut jm = Matrix2::zeros();
        for a in 0..2 {
            let mut e = Pt::zeros();
            e[a] = hs;
            let (rp, _) = resid(&(w + e))?;
            let (rm, _) = resid(&(w - e))?;
            jm.set_column(a, &((rp - rm) / (2.0 * hs)));
        }
        let Some(inv) = jm.try_inverse() else {
            return Err(AnalysisError::ShootingDiverged { residual: r.norm(), iterations: it });
        };
        let dw = inv * r;
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let cand = w - scale * Pt::new(dw[0], dw[1]);
            let (rc, dc) = resid(&cand)?;
            if rc.norm() < r.norm() {
                w = cand;
                r = rc;
                drift = dc;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let residual = r.norm();
    if !(residual <= 1e-10) {
        return Err(AnalysisError::ShootingDiverged { residual, iterations: it });
    }
    Ok(GeodesicResult { distance: gm.speed(p, &w), residual, iterations: it, speed_drift: drift })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionFit {
    pub c3: f64,
    pub c4: f64,
    /// `(t, d(p, γ(t)))` on the ladder.
    pub ladder: Vec<[f64; 2]>,
}

/// Fit `d(p, γ(t)) − t ≈ c₃t³ + c₄t⁴` on `t ∈ {T, T/2, T/4, T/8}` for a
/// unit-speed `curve` (position and velocity) with `γ(0) = p`.
pub fn expansion_check(
    gm: &GeodesicModel,
    curve: &dyn Fn(f64) -> (Pt, Pt),
    big_t: f64,
) -> Result<ExpansionFit, AnalysisError> {
    let (p, _) = curve(0.0);
    let ts = [big_t, big_t / 2.0, big_t / 4.0, big_t / 8.0];
    for &t in std::iter::once(&0.0).chain(ts.iter()) {
        let (x, v) = curve(t);
        let s = gm.speed(&x, &v);
        if (s - 1.0).abs() > 1e-10 {
            return Err(AnalysisError::NotUnitSpeed { t, speed: s });
        }
    }
    let mut ladder = Vec::new();
    // Relative residuals: (d − t)/t³ = c₃ + c₄t.
    let mut a = DMatrix::zeros(4, 2);
    let mut b = nalgebra::DVector::zeros(4);
    for (i, &t) in ts.iter().enumerate() {
        let d = geodesic_distance(gm, &p, &curve(t).0)?.distance;
        ladder.push([t, d]);
        a[(i, 0)] = 1.0;
        a[(i, 1)] = t;
        b[i] = (d - t) / t.powi(3);
    }
    let sol = a.svd(true, true).solve(&b, 1e-15).expect("least squares");
    Ok(ExpansionFit { c3: sol[0], c4: sol[1], ladder })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_distances() {
        let gm = GeodesicModel::euclidean();
        let r = geodesic_distance(&gm, &Pt::new(0.0, 0.0), &Pt::new(3.0, 4.0)).unwrap();
        assert!((r.distance - 5.0).abs() < 1e-12);
        let r = geodesic_distance(&gm, &Pt::new(1.0, 1.0), &Pt::new(1.0, 1.0)).unwrap();
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn great_circle_oracle() {
        for gm in [GeodesicModel::round_sphere(), GeodesicModel::new(GeodesicModel::round_sphere().metric)] {
            let (p, q) = (Pt::new(1.0, 0.2), Pt::new(1.6, 1.1));
            let unit = |x: &Pt| {
                let (s, c) = x[0].sin_cos();
                nalgebra::Vector3::new(s * x[1].cos(), s * x[1].sin(), c)
            };
            let theta = unit(&p).dot(&unit(&q)).acos();
            let r = geodesic_distance(&gm, &p, &q).unwrap();
            assert!((r.distance - theta).abs() < 1e-8, "{} vs {theta}", r.distance);
            assert!(r.speed_drift < 1e-8);
        }
    }

    #[test]
    fn christoffel_invariants() {
        let probes: Vec<Pt> = (0..10).map(|k| Pt::new(0.3 + 0.2 * k as f64, 0.7 * k as f64)).collect();
        for gm in [GeodesicModel::round_sphere(), GeodesicModel::new(GeodesicModel::round_sphere().metric)] {
            assert!(gm.symmetry_residual(&probes) < 1e-12);
            assert!(gm.compatibility_residual(&probes) < 1e-6);
        }
    }

    #[test]
    fn straight_line_has_no_cubic_term() {
        let gm = GeodesicModel::euclidean();
        let d = Pt::new(0.6, 0.8);
        let fit = expansion_check(&gm, &|t| (Pt::new(0.1, 0.2) + t * d, d), 0.5).unwrap();
        assert!(fit.c3.abs() < 1e-8);
    }

    #[test]
    fn euclidean_circle_expansion() {
        let gm = GeodesicModel::euclidean();
        for r in [0.5, 1.0, 2.0] {
            let curve = move |t: f64| {
                let a = t / r;
                (Pt::new(r * a.sin(), r - r * a.cos()), Pt::new(a.cos(), a.sin()))
            };
            let fit = expansion_check(&gm, &curve, 0.02 * r).unwrap();
            assert!((fit.c3 + 1.0 / (24.0 * r * r)).abs() < 1e-6, "R = {r}: {}", fit.c3);
        }
    }

    #[test]
    fn latitude_expansion() {
        let gm = GeodesicModel::round_sphere();
        let rho: f64 = 0.6;
        let curve = move |t: f64| (Pt::new(rho, t / rho.sin()), Pt::new(0.0, 1.0 / rho.sin()));
        let fit = expansion_check(&gm, &curve, 0.05).unwrap();
        let oracle = -1.0 / (rho.tan().powi(2) * 24.0);
        // Closed-form distance along the latitude.
        for &[t, d] in &fit.ladder {
            let exact = (rho.cos().powi(2) + rho.sin().powi(2) * (t / rho.sin()).cos()).acos();
            assert!((d - exact).abs() < 1e-9);
        }
        assert!(((fit.c3 - oracle) / oracle).abs() < 0.02, "{} vs {oracle}", fit.c3);
    }
}
