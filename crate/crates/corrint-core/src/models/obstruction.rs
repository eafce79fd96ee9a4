//! The warped metric `ĝ = dr² + Ψ(r)g_{S^{n−1}}` around the unit sphere, whose
//! second fundamental form exceeds the Euclidean one when `Ψ′(1) > 2`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::analysis::christoffel_fd;

/// `Ψ(r) = 1 + tanh(2p(r−1))/2`: `Ψ(1) = 1`, `Ψ′(1) = p`, values in `(½, 3/2)`.
pub fn psi_profile(psi1: f64) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
    Arc::new(move |r| 1.0 + 0.5 * (2.0 * psi1 * (r - 1.0)).tanh())
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionSample {
    /// Angular coordinates on `S^{n−1}`.
    pub at: Vec<f64>,
    pub h_hat: Vec<Vec<f64>>,
    pub h_round: Vec<Vec<f64>>,
    pub margin: Vec<Vec<f64>>,
    pub expected: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionReport {
    pub n: usize,
    pub psi1: f64,
    pub samples: Vec<ObstructionSample>,
    /// Largest entrywise deviation of the margin from `½(Ψ′(1)−2)g_ij`.
    pub max_error: f64,
    /// Smallest eigenvalue of the margin relative to `g`.
    pub min_margin_eig: f64,
    pub obstructed: bool,
    pub verdict: String,
}

/// Round metric of `S^{n−1}` in angles (`φ` for `n = 2`, `(θ, φ)` for `n = 3`).
fn round(n: usize, ang: &[f64]) -> DMatrix<f64> {
    match n {
        2 => DMatrix::from_element(1, 1, 1.0),
        _ => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, ang[0].sin().powi(2)])),
    }
}

fn warped(n: usize, psi: impl Fn(f64) -> f64 + 'static) -> impl Fn(&[f64]) -> DMatrix<f64> {
    move |x: &[f64]| {
        let mut m = DMatrix::zeros(n, n);
        m[(0, 0)] = 1.0;
        let s = round(n, &x[1..]);
        let p = psi(x[0]);
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                m[(i + 1, j + 1)] = p * s[(i, j)];
            }
        }
        m
    }
}

/// `h_ij = −Γ^r_ij` for the normal `−∂_r` at `r = 1`.
fn second_fundamental_form(metric: &dyn Fn(&[f64]) -> DMatrix<f64>, at: &[f64]) -> DMatrix<f64> {
    let mut x = vec![1.0];
    x.extend_from_slice(at);
    let gamma = christoffel_fd(metric, &x, 5e-4);
    let k = x.len() - 1;
    DMatrix::from_fn(k, k, |i, j| -gamma[0][(i + 1, j + 1)])
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn model_obstruction_metric(psi1: f64, n: usize) -> ObstructionReport {
    assert!(n == 2 || n == 3, "n must be 2 or 3");
    let psi = psi_profile(psi1);
    let hat = warped(n, move |r| psi(r));
    let flat = warped(n, |r: f64| r * r);
    let points: Vec<Vec<f64>> = match n {
        2 => vec![vec![0.0], vec![1.3], vec![4.0]],
        _ => vec![vec![1.1, 0.4], vec![0.6, 2.0], vec![2.2, 5.0]],
    };
    let mut report = ObstructionReport {
        n,
        psi1,
        samples: Vec::new(),
        max_error: 0.0,
        min_margin_eig: f64::INFINITY,
        obstructed: false,
        verdict: String::new(),
    };
    for at in points {
        let g = round(n, &at);
        let h_hat = second_fundamental_form(&hat, &at);
        let h_round = second_fundamental_form(&flat, &at);
        let margin = &h_hat - &h_round;
        let expected = &g * (0.5 * (psi1 - 2.0));
        report.max_error = report.max_error.max((&margin - &expected).amax());
        let l = g.clone().cholesky().unwrap().l();
        let li = l.try_inverse().unwrap();
        let rel = &li * &margin * li.transpose();
        let eig = rel.symmetric_eigen().eigenvalues.min();
        report.min_margin_eig = report.min_margin_eig.min(eig);
        report.samples.push(ObstructionSample {
            at,
            h_hat: rows(&h_hat),
            h_round: rows(&h_round),
            margin: rows(&margin),
            expected: rows(&expected),
        });
    }
    report.obstructed = report.min_margin_eig > 1e-10;
    report.verdict = if report.obstructed {
        "C1-extension obstructed".into()
    } else {
        "not obstructed by this criterion".into()
    };
    report
}
