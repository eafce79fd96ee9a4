//! Geodesic distance expansions, obstruction checks and length comparison.

mod geodesic;
mod length;
mod obstruction;

use nalgebra::DMatrix;
use thiserror::Error;

pub use geodesic::{expansion_check, geodesic_distance, Christoffel, ExpansionFit, GeodesicModel, GeodesicResult};
pub use length::{length_comparison, LengthComparison};
pub use obstruction::{obstruction_verdict, DirectionMargin, ObstructionVerdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("geodesic shooting diverged (residual {residual:e} after {iterations} iterations)")]
    ShootingDiverged { residual: f64, iterations: usize },
    #[error("curve is not unit speed at t = {t} (speed {speed})")]
    NotUnitSpeed { t: f64, speed: f64 },
    #[error("evaluation failed: {0}")]
    Eval(#[from] crate::evaluation::EvalError),
}

/// `Γ^k_ij` at `x` from fourth-order differences of `metric` with step `h`;
/// entry `k` of the result holds the matrix `(i, j)`.
pub fn christoffel_fd(metric: &dyn Fn(&[f64]) -> DMatrix<f64>, x: &[f64], h: f64) -> Vec<DMatrix<f64>> {
    let n = x.len();
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|l| {
            let at = |o: f64| {
                let mut y = x.to_vec();
                y[l] += o * h;
                metric(&y)
            };
            (at(-2.0) - at(-1.0) * 8.0 + at(1.0) * 8.0 - at(2.0)) / (12.0 * h)
        })
        .collect();
    let ginv = metric(x).try_inverse().expect("metric must be invertible");
    (0..n)
        .map(|k| {
            DMatrix::from_fn(n, n, |i, j| {
                0.5 * (0..n).map(|l| ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)])).sum::<f64>()
            })
        })
        .collect()
}
