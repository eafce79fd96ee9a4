//! Bessel functions of the first kind from their integral representation
//! `J_n(x) = (1/2π) ∫₀^{2π} cos(nt − x sin t) dt`, evaluated with the periodic
//! trapezoid rule.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Trapezoid nodes; aliasing error is below `1e-15` for `|x| ≤ 80`.
pub const QUAD_NODES: usize = 128;

struct NodeTable {
    sin_t: Vec<f64>,
    cos_t: Vec<f64>,
}

fn nodes() -> &'static NodeTable {
    static T: OnceLock<NodeTable> = OnceLock::new();
    T.get_or_init(|| {
        let n = QUAD_NODES;
        let (sin_t, cos_t) = (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                (t.sin(), t.cos())
            })
            .unzip();
        NodeTable { sin_t, cos_t }
    })
}

/// `J_order(x)` with the default node count.
///
/// Odd orders use `(1/2π)∫ sin(nt) sin(x sin t) dt` and even orders
/// `(1/2π)∫ cos(nt) cos(x sin t) dt`, with `cos(·) − 1` in place of `cos(·)`
/// for `n ≥ 2` so that small arguments keep full relative accuracy.
pub fn bessel_j(order: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let t = nodes();
    let n = QUAD_NODES;
    let mut acc = 0.0;
    for j in 0..n {
        let k = (order as usize * j) % n;
        let arg = x * t.sin_t[j];
        acc += if order % 2 == 1 {
            t.sin_t[k] * arg.sin()
        } else if order == 0 {
            arg.cos()
        } else {
            let h = (0.5 * arg).sin();
            -2.0 * t.cos_t[k] * h * h
        };
    }
    acc / n as f64
}

/// `J_order(x)` with an explicit node count (used for self-consistency checks).
pub fn bessel_j_nodes(order: u32, x: f64, nodes: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..nodes {
        let t = 2.0 * PI * j as f64 / nodes as f64;
        acc += (order as f64 * t - x * t.sin()).cos();
    }
    acc / nodes as f64
}

/// `1 − J₀(x)`, accurate in relative terms for small `x`.
pub fn one_minus_j0(x: f64) -> f64 {
    let t = nodes();
    let mut acc = 0.0;
    for j in 0..QUAD_NODES {
        let h = (0.5 * x * t.sin_t[j]).sin();
        acc += 2.0 * h * h;
    }
    acc / QUAD_NODES as f64
}

/// `J_0(x), …, J_{out.len()−1}(x)` in one pass over the nodes.
pub fn bessel_j_all(x: f64, out: &mut [f64]) {
    let t = nodes();
    let n = QUAD_NODES;
    out.iter_mut().for_each(|v| *v = 0.0);
    if x == 0.0 {
        if let Some(v) = out.first_mut() {
            *v = 1.0;
        }
        return;
    }
    for j in 0..n {
        let arg = x * t.sin_t[j];
        let s = arg.sin();
        let h = (0.5 * arg).sin();
        let cm1 = -2.0 * h * h;
        for (order, v) in out.iter_mut().enumerate() {
            let k = (order * j) % n;
            *v += if order % 2 == 1 {
                t.sin_t[k] * s
            } else if order == 0 {
                1.0 + cm1
            } else {
                t.cos_t[k] * cm1
            };
        }
    }
    out.iter_mut().for_each(|v| *v /= n as f64);
}

/// First positive zero of `J₀`, located by bisection on `[2, 3]`.
pub fn mu() -> f64 {
    static MU: OnceLock<f64> = OnceLock::new();
    *MU.get_or_init(|| {
        let (mut lo, mut hi) = (2.0_f64, 3.0_f64);
        debug_assert!(bessel_j(0, lo) > 0.0 && bessel_j(0, hi) < 0.0);
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if bessel_j(0, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}
