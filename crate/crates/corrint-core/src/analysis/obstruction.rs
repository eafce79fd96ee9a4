use serde::Serialize;

use crate::models::BoundaryData;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DirectionMargin {
    pub x: f64,
    pub v: f64,
    /// `|h(v̂, v̂)|` for the `g`-unit `v̂`.
    pub h: f64,
    /// `|Ā(v̂, v̂)|`.
    pub abar: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionVerdict {
    pub directions: Vec<DirectionMargin>,
    pub obstructed: bool,
}

/// Compare `|h(v,v)|` with `|Ā(v,v)|` for tangent vectors `v ∂_x` at `x`,
/// given as `(x, v)` pairs.
pub fn obstruction_verdict(bd: &BoundaryData, directions: &[(f64, f64)]) -> ObstructionVerdict {
    let directions: Vec<_> = directions
        .iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|&(x, v)| {
            // v̂ = ±∂_x/|∂_x|_g, so both forms scale by 1/g_xx.
            let gxx = bd.g_tangent(x);
            let h = (bd.h)(x).abs() / gxx;
            let abar = (bd.abar)(x).norm() / gxx;
            DirectionMargin { x, v, h, abar, margin: h - abar }
        })
        .collect();
    let obstructed = directions.iter().any(|d| d.margin > 1e-10);
    ObstructionVerdict { directions, obstructed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::psi_normal_data;
    use std::sync::Arc;

    #[test]
    fn verdicts() {
        let dirs = [(0.0, 1.0), (1.0, -2.0), (2.5, 0.3)];
        let v = obstruction_verdict(&psi_normal_data(3.0), &dirs);
        assert!(v.obstructed);
        for d in &v.directions {
            assert!((d.margin - 0.5).abs() < 1e-12);
        }
        assert!(!obstruction_verdict(&psi_normal_data(2.0), &dirs).obstructed);
        let mut bd = psi_normal_data(2.5);
        let a = bd.abar.clone();
        bd.abar = Arc::new(move |x| 2.0 * a(x));
        assert!(!obstruction_verdict(&bd, &dirs).obstructed);
    }

    #[test]
    fn rescaling_directions_keeps_margins() {
        let bd = psi_normal_data(3.0);
        let a = obstruction_verdict(&bd, &[(0.7, 1.0)]);
        let b = obstruction_verdict(&bd, &[(0.7, -37.5)]);
        assert_eq!(a.directions[0].margin, b.directions[0].margin);
    }
}
