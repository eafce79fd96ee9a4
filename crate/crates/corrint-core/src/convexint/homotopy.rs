//! The single-step homotopy `H(τ)`: the step's layer with its amplitude
//! scaled by `η̃_{1/2}(τ)`.

use crate::evaluation::{CorrugationLayer, EvalError, LayeredMap};
use crate::geomcore::{pullback_fast, sym_eigenvalues, SymMatField};

use super::cutoff::CutoffProfile;
use super::probe::ProbeSpec;

/// `η̃_{1/2}(τ)`: zero for `τ ≤ ¼`, one for `τ ≥ ½`.
pub fn homotopy_scale(tau: f64) -> f64 {
    CutoffProfile::new(0.5).eval(tau)
}

/// `H(τ, ·)` for the step that appended `layer` to `prev`.
pub fn step_homotopy(prev: &LayeredMap, layer: &CorrugationLayer, tau: f64) -> LayeredMap {
    let s = homotopy_scale(tau);
    if s == 0.0 {
        return prev.clone();
    }
    prev.with_built_layer(layer.scaled(s * layer.amp_scale))
}

/// Extreme eigenvalues of `H(τ)*g₀ − prev*g₀` and `H(τ)*g₀ − stepped*g₀`
/// over the probes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HomotopySample {
    pub tau: f64,
    pub scale: f64,
    pub min_eig_vs_prev: f64,
    pub max_eig_vs_stepped: f64,
    /// Smallest eigenvalue of `g − H(τ)*g₀`.
    pub min_defect_eig: f64,
}

pub fn homotopy_bounds(
    prev: &LayeredMap,
    layer: &CorrugationLayer,
    g: &SymMatField,
    taus: &[f64],
    probes: &ProbeSpec,
) -> Result<Vec<HomotopySample>, EvalError> {
    let n = prev.n();
    let stepped = prev.with_built_layer(layer.clone());
    let maps: Vec<LayeredMap> = taus.iter().map(|&tau| step_homotopy(prev, layer, tau)).collect();
    let init = || vec![[f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY]; taus.len()];
    let acc = probes.try_fold(
        init,
        |acc, _, x| -> Result<(), EvalError> {
            let pp = pullback_fast(&prev.eval_full(x)?.1, n);
            let ps = pullback_fast(&stepped.eval_full(x)?.1, n);
            let gx = g.eval(x);
            for (a, h) in acc.iter_mut().zip(&maps) {
                let ph = pullback_fast(&h.eval_full(x)?.1, n);
                a[0] = a[0].min(sym_eigenvalues(&(ph - pp), n)[0]);
                a[1] = a[1].max(sym_eigenvalues(&(ph - ps), n)[1]);
                a[2] = a[2].min(sym_eigenvalues(&(gx - ph), n)[0]);
            }
            Ok(())
        },
        |p, q| p.iter().zip(&q).map(|(p, q)| [p[0].min(q[0]), p[1].max(q[1]), p[2].min(q[2])]).collect(),
    )?;
    Ok(taus
        .iter()
        .zip(acc)
        .map(|(&tau, [a, b, c])| HomotopySample {
            tau,
            scale: homotopy_scale(tau),
            min_eig_vs_prev: a,
            max_eig_vs_stepped: b,
            min_defect_eig: c,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_endpoints() {
        assert_eq!(homotopy_scale(0.0), 0.0);
        assert_eq!(homotopy_scale(0.25), 0.0);
        assert_eq!(homotopy_scale(0.5), 1.0);
        assert_eq!(homotopy_scale(1.0), 1.0);
        assert!(homotopy_scale(0.375) > 0.0 && homotopy_scale(0.375) < 1.0);
    }
}
