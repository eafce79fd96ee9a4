//! Tensor-product six-point Lagrange interpolation on uniform grids.

use rayon::prelude::*;

use crate::geomcore::{ChartDomain, Pt};

/// Uniform grid over a chart domain with `N` values per node.
#[derive(Debug, Clone)]
pub struct GridInterp<const N: usize> {
    dim: usize,
    lo: [f64; 2],
    h: [f64; 2],
    count: [usize; 2],
    periodic: [bool; 2],
    data: Vec<[f64; N]>,
}

/// Stencil width (quintic Lagrange).
const P: usize = 6;

/// Weights and derivative weights of the Lagrange basis on nodes `0..P` at `t`.
fn lagrange(t: f64) -> ([f64; P], [f64; P]) {
    let d: [f64; P] = std::array::from_fn(|m| t - m as f64);
    let mut w = [0.0; P];
    let mut dw = [0.0; P];
    for j in 0..P {
        let mut denom = 1.0;
        let mut prod = 1.0;
        let mut dprod = 0.0;
        for m in 0..P {
            if m == j {
                continue;
            }
            denom *= j as f64 - m as f64;
            dprod = dprod * d[m] + prod;
            prod *= d[m];
        }
        w[j] = prod / denom;
        dw[j] = dprod / denom;
    }
    (w, dw)
}

impl<const N: usize> GridInterp<N> {
    /// Node count per axis for a target spacing.
    pub fn node_counts(domain: &ChartDomain, spacing: [f64; 2]) -> [usize; 2] {
        let mut count = [1, 1];
        for i in 0..domain.dim {
            let w = domain.width(i);
            let cells = (w / spacing[i]).ceil().max(P as f64) as usize;
            count[i] = if domain.periodic[i] { cells } else { cells + 1 };
        }
        count
    }

    /// Sample `f` on a grid whose spacing does not exceed `spacing`.
    pub fn build(domain: &ChartDomain, spacing: [f64; 2], f: impl Fn(&Pt) -> [f64; N] + Sync) -> Self {
        let count = Self::node_counts(domain, spacing);
        let mut lo = [0.0; 2];
        let mut h = [1.0; 2];
        let mut periodic = [false; 2];
        for i in 0..domain.dim {
            lo[i] = domain.lo[i];
            periodic[i] = domain.periodic[i];
            let cells = if periodic[i] { count[i] } else { count[i] - 1 };
            h[i] = domain.width(i) / cells as f64;
        }
        let total = count[0] * count[1];
        let data = (0..total)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / count[1], k % count[1]);
                let mut x = Pt::zeros();
                x[0] = lo[0] + i as f64 * h[0];
                if domain.dim > 1 {
                    x[1] = lo[1] + j as f64 * h[1];
                }
                f(&x)
            })
            .collect();
        Self { dim: domain.dim, lo, h, count, periodic, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.h
    }

    /// Node indices and local coordinate along one axis.
    fn stencil(&self, axis: usize, x: f64) -> ([usize; P], f64) {
        let n = self.count[axis];
        let u = (x - self.lo[axis]) / self.h[axis];
        let cell = u.floor();
        if self.periodic[axis] {
            let base = cell as i64 - (P as i64 / 2 - 1);
            let idx = std::array::from_fn(|m| (base + m as i64).rem_euclid(n as i64) as usize);
            (idx, u - base as f64)
        } else {
            let base = (cell as i64 - (P as i64 / 2 - 1)).clamp(0, n as i64 - P as i64);
            let idx = std::array::from_fn(|m| base as usize + m);
            (idx, u - base as f64)
        }
    }

    /// Interpolated values and their gradient `[∂₀, ∂₁]`.
    pub fn eval_grad(&self, x: &Pt) -> ([f64; N], [[f64; N]; 2]) {
        let mut v = [0.0; N];
        let mut g = [[0.0; N]; 2];
        let (i0, t0) = self.stencil(0, x[0]);
        let (w0, dw0) = lagrange(t0);
        if self.dim == 1 {
            for a in 0..P {
                let node = &self.data[i0[a]];
                for c in 0..N {
                    v[c] += w0[a] * node[c];
                    g[0][c] += dw0[a] * node[c];
                }
            }
            for c in 0..N {
                g[0][c] /= self.h[0];
            }
            return (v, g);
        }
        let (i1, t1) = self.stencil(1, x[1]);
        let (w1, dw1) = lagrange(t1);
        for a in 0..P {
            for b in 0..P {
                let node = &self.data[i0[a] * self.count[1] + i1[b]];
                let (wv, wx, wy) = (w0[a] * w1[b], dw0[a] * w1[b], w0[a] * dw1[b]);
                for c in 0..N {
                    v[c] += wv * node[c];
                    g[0][c] += wx * node[c];
                    g[1][c] += wy * node[c];
                }
            }
        }
        for c in 0..N {
            g[0][c] /= self.h[0];
            g[1][c] /= self.h[1];
        }
        (v, g)
    }
}
