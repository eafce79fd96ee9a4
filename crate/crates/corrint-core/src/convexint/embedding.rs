//! Pairwise injectivity check against the base map.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::sample_grid;
use crate::evaluation::{EvalError, LayeredMap};
use crate::geomcore::{ChartDomain, Pt};

/// Pass threshold on both ratio minima.
pub const EMBEDDING_THRESHOLD: f64 = 0.45;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub points: usize,
    pub mu: f64,
    /// Minimum of `|u(x)−u(y)| / |u₀(x)−u₀(y)|` over pairs with `|x−y| < μ`.
    pub near_min: f64,
    pub near_pair: Option<([f64; 2], [f64; 2])>,
    /// Same over pairs with `|x−y| ≥ μ`.
    pub far_min: f64,
    pub far_pair: Option<([f64; 2], [f64; 2])>,
    pub pass: bool,
}

fn chart_dist(d: &ChartDomain, x: &Pt, y: &Pt) -> f64 {
    let mut s = 0.0;
    for a in 0..d.dim {
        let mut t = (x[a] - y[a]).abs();
        if let Some(p) = d.period(a) {
            t = t.min(p - t);
        }
        s += t * t;
    }
    s.sqrt()
}

type Best = (f64, Option<(usize, usize)>);

fn better(a: Best, b: Best) -> Best {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Compare `m` with its base map on a tensor grid of `per_axis` points per axis.
pub fn check_embedding(m: &LayeredMap, mu: f64, per_axis: usize) -> Result<EmbeddingReport, EvalError> {
    let base = m.prefix(0);
    let pts = sample_grid(&m.domain, per_axis);
    let u: Vec<_> = pts.par_iter().map(|x| m.eval_map(x)).collect::<Result<_, _>>()?;
    let u0: Vec<_> = pts.par_iter().map(|x| base.eval_map(x)).collect::<Result<_, _>>()?;
    let (near, far) = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut near: Best = (f64::INFINITY, None);
            let mut far: Best = (f64::INFINITY, None);
            for j in i + 1..pts.len() {
                let den = (u0[i] - u0[j]).norm();
                if den == 0.0 {
                    continue;
                }
                let ratio = (u[i] - u[j]).norm() / den;
                let cand = (ratio, Some((i, j)));
                if chart_dist(&m.domain, &pts[i], &pts[j]) < mu {
                    near = better(near, cand);
                } else {
                    far = better(far, cand);
                }
            }
            (near, far)
        })
        .reduce(|| ((f64::INFINITY, None), (f64::INFINITY, None)), |a, b| (better(a.0, b.0), better(a.1, b.1)));
    let pair = |p: Option<(usize, usize)>| p.map(|(i, j)| ([pts[i][0], pts[i][1]], [pts[j][0], pts[j][1]]));
    Ok(EmbeddingReport {
        points: pts.len(),
        mu,
        near_min: near.0,
        near_pair: pair(near.1),
        far_min: far.0,
        far_pair: pair(far.1),
        pass: near.0 >= EMBEDDING_THRESHOLD && far.0 >= EMBEDDING_THRESHOLD,
    })
}
