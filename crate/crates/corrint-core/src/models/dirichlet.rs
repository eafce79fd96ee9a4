//! Disk with metric `g = g̃/φ`, where the supplied embedding is isometric for
//! `g̃` and `φ` equals one on the boundary circle.

use std::f64::consts::TAU;
use std::sync::Arc;

use crate::evaluation::{BaseMap, FnBaseMap};
use crate::geomcore::{pullback_fast, ChartDomain, Jac, Pt, SymMatField, Tv};

use super::{ModelError, ModelSpec, TraceFn};

type Phi = Arc<dyn Fn(&Pt) -> f64 + Send + Sync>;

/// `phi` and `u_embed` live on `domain`, whose boundary axis carries `∂Ω`.
pub fn model_dirichlet_disk(
    phi: Phi,
    u_embed: Arc<dyn BaseMap>,
    domain: ChartDomain,
    trace: Option<TraceFn>,
) -> Result<ModelSpec, ModelError> {
    let Some(b) = domain.boundary_axis else {
        return Err(ModelError::InvalidParameter("the Dirichlet model needs a boundary axis".into()));
    };
    let n = domain.dim;
    let per_axis: usize = 48;
    let mut interior_max: f64 = 0.0;
    let mut interior_at = vec![];
    for k in 0..per_axis.pow(n as u32) {
        let mut x = Pt::zeros();
        let mut idx = k;
        for a in 0..n {
            let i = idx % per_axis;
            idx /= per_axis;
            let den = if domain.periodic[a] { per_axis } else { per_axis - 1 };
            x[a] = domain.lo[a] + domain.width(a) * i as f64 / den as f64;
        }
        let v = phi(&x);
        let on_b = x[b] == domain.lo[b];
        if !(v > 0.0 && v <= 1.0) || (on_b && (v - 1.0).abs() > 1e-12) {
            return Err(ModelError::PhiRangeError { x: x.as_slice()[..n].to_vec(), value: v });
        }
        if !on_b && v > interior_max {
            interior_max = v;
            interior_at = x.as_slice()[..n].to_vec();
        }
    }
    if interior_max >= 1.0 - 1e-14 {
        return Err(ModelError::EqualityOffBoundary { x: interior_at, eigenvalue: 0.0 });
    }
    let (p1, e1) = (phi.clone(), u_embed.clone());
    let metric = SymMatField::new(n, move |x| pullback_fast(&e1.jac(x), n) / p1(x));
    let (p2, e2) = (phi, u_embed.clone());
    let defect = SymMatField::new(n, move |x| {
        let f = p2(x);
        pullback_fast(&e2.jac(x), n) * ((1.0 - f) / f)
    });
    Ok(ModelSpec { name: "dirichlet-disk".into(), domain, metric, base: u_embed, defect: Some(defect), trace })
}

/// The flat unit disk with `φ = 1 − 0.3(1 − |x|²)` on the polar band
/// `½ ≤ |x| ≤ 1`, in coordinates `(1 − |x|, θ)`.
pub fn model_dirichlet_flat() -> Result<ModelSpec, ModelError> {
    let embed = FnBaseMap::new(2, |x: &Pt| (1.0 - x[0]) * Tv::new(x[1].cos(), x[1].sin(), 0.0)).with_jac(|x: &Pt| {
        let (s, c) = x[1].sin_cos();
        let mut j = Jac::zeros();
        j.set_column(0, &Tv::new(-c, -s, 0.0));
        j.set_column(1, &((1.0 - x[0]) * Tv::new(-s, c, 0.0)));
        j
    });
    let domain = ChartDomain::new(vec![0.0, 0.0], vec![0.5, TAU], Some(0), &[1]).unwrap();
    let phi: Phi = Arc::new(|x: &Pt| 1.0 - 0.3 * (1.0 - (1.0 - x[0]).powi(2)));
    model_dirichlet_disk(phi, Arc::new(embed), domain, Some(Arc::new(|t: f64| Tv::new(t.cos(), t.sin(), 0.0))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomcore::Sym;

    #[test]
    fn flat_default_defect() {
        let m = model_dirichlet_flat().unwrap();
        for &(d, t) in &[(0.1, 0.3), (0.25, 2.0), (0.5, 5.0)] {
            let x = Pt::new(d, t);
            let rho: f64 = 1.0 - d;
            let phi = 1.0 - 0.3 * (1.0 - rho * rho);
            let g = Sym::new(1.0, 0.0, 0.0, rho * rho) / phi;
            assert!((m.defect_at(&x) - g * (1.0 - phi)).norm() < 1e-12);
        }
        let t = m.base.eval(&Pt::new(0.0, 1.3));
        assert!((t - Tv::new(1.3f64.cos(), 1.3f64.sin(), 0.0)).norm() < 1e-15);
        assert!(m.check(33).pass);
    }

    #[test]
    fn phi_checks() {
        let embed: Arc<dyn BaseMap> = model_dirichlet_flat().unwrap().base;
        let dom = ChartDomain::new(vec![0.0, 0.0], vec![0.5, TAU], Some(0), &[1]).unwrap();
        let one: Phi = Arc::new(|_| 1.0);
        assert!(matches!(
            model_dirichlet_disk(one, embed.clone(), dom.clone(), None),
            Err(ModelError::EqualityOffBoundary { .. })
        ));
        let big: Phi = Arc::new(|x| 1.0 + x[0]);
        assert!(matches!(model_dirichlet_disk(big, embed.clone(), dom.clone(), None), Err(ModelError::PhiRangeError { .. })));
        let off: Phi = Arc::new(|x| 0.9 - x[0]);
        assert!(matches!(model_dirichlet_disk(off, embed, dom, None), Err(ModelError::PhiRangeError { .. })));
    }
}
