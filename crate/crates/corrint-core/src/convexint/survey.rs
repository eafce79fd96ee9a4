//! Sampled defect statistics over a probe grid, split by dyadic collars
//! `Ω̄_ℓ` with `ℓ = ℓ₀/2^j`.

use crate::evaluation::{EvalError, LayeredMap};
use crate::geomcore::{jac_norm, pullback_fast, sym_eigenvalues, sym_norm, SymMatField};

use super::probe::ProbeSpec;

pub const LEVELS: usize = 48;

#[derive(Debug, Clone)]
pub struct DefectSurvey {
    pub sup: f64,
    pub min_eig: f64,
    pub min_eig_at: [f64; 2],
    /// `ℓ₀`, the width of the boundary axis.
    pub ell0: Option<f64>,
    /// Defect sup over `Ω̄_ℓ` for `ℓ = ℓ₀/2^j`.
    pub collar_sup: [f64; LEVELS],
    /// Smallest defect eigenvalue outside `Ω̄_{ℓ/2}` for `ℓ = ℓ₀/2^j`.
    pub off_min: [f64; LEVELS],
    pub off_min_at: [[f64; 2]; LEVELS],
    /// `sup |u − u_p|` against the prefix, when requested.
    pub c0: f64,
    /// `sup ‖∇u − ∇u_p‖` against the prefix, when requested.
    pub c1: f64,
}

impl DefectSurvey {
    fn empty(ell0: Option<f64>) -> Self {
        Self {
            sup: 0.0,
            min_eig: f64::INFINITY,
            min_eig_at: [0.0; 2],
            ell0,
            collar_sup: [0.0; LEVELS],
            off_min: [f64::INFINITY; LEVELS],
            off_min_at: [[0.0; 2]; LEVELS],
            c0: 0.0,
            c1: 0.0,
        }
    }

    fn merge(mut self, o: Self) -> Self {
        self.sup = self.sup.max(o.sup);
        if o.min_eig < self.min_eig {
            self.min_eig = o.min_eig;
            self.min_eig_at = o.min_eig_at;
        }
        for j in 0..LEVELS {
            self.collar_sup[j] = self.collar_sup[j].max(o.collar_sup[j]);
            if o.off_min[j] < self.off_min[j] {
                self.off_min[j] = o.off_min[j];
                self.off_min_at[j] = o.off_min_at[j];
            }
        }
        self.c0 = self.c0.max(o.c0);
        self.c1 = self.c1.max(o.c1);
        self
    }

    pub fn ell(&self, j: usize) -> Option<f64> {
        self.ell0.map(|l| l / 2f64.powi(j as i32))
    }

    /// Smallest eigenvalue off `Ω̄_{ℓ/2}`, or overall when there is no boundary.
    pub fn min_eig_off(&self, level: Option<usize>) -> f64 {
        match level {
            Some(j) => self.off_min[j],
            None => self.min_eig,
        }
    }
}

/// Survey `g − ∇uᵀ∇u`; with `prefix = Some(d)` also the C⁰ and C¹ distance
/// to the map's prefix of depth `d`.
pub fn survey(
    map: &LayeredMap,
    g: &SymMatField,
    probes: &ProbeSpec,
    prefix: Option<usize>,
) -> Result<DefectSurvey, EvalError> {
    let n = map.n();
    let dom = &map.domain;
    let ell0 = dom.boundary_axis.map(|b| dom.width(b));
    probes.try_fold(
        || DefectSurvey::empty(ell0),
        |acc, _, x| {
            let (j, drift) = match prefix {
                Some(d) => {
                    let pe = map.eval_with_prefix(x, d)?;
                    (pe.j, Some(((pe.u - pe.u_prefix).norm(), jac_norm(&(pe.j - pe.j_prefix), n))))
                }
                None => (map.eval_full(x)?.1, None),
            };
            let d = g.eval(x) - pullback_fast(&j, n);
            let norm = sym_norm(&d, n);
            let lmin = sym_eigenvalues(&d, n)[0];
            if !norm.is_finite() {
                return Err(EvalError::ImmersionLost { position: x.as_slice()[..n].to_vec(), layer: map.depth() });
            }
            let at = [x[0], x[1]];
            acc.sup = acc.sup.max(norm);
            if lmin < acc.min_eig {
                acc.min_eig = lmin;
                acc.min_eig_at = at;
            }
            if let (Some(dist), Some(l0)) = (dom.dist_to_boundary(x), ell0) {
                let mut ell = l0;
                for j in 0..LEVELS {
                    if dist <= ell {
                        acc.collar_sup[j] = acc.collar_sup[j].max(norm);
                    }
                    if dist > 0.5 * ell && lmin < acc.off_min[j] {
                        acc.off_min[j] = lmin;
                        acc.off_min_at[j] = at;
                    }
                    ell *= 0.5;
                }
            }
            if let Some((c0, c1)) = drift {
                acc.c0 = acc.c0.max(c0);
                acc.c1 = acc.c1.max(c1);
            }
            Ok(())
        },
        DefectSurvey::merge,
    )
}

/// Probe grid resolving every frequency of `map`.
pub fn probes_for(map: &LayeredMap, search: &super::LambdaSearch, salt: u64) -> ProbeSpec {
    ProbeSpec::new(
        &map.domain,
        map.axis_frequencies(),
        search.samples_per_period,
        search.probe_floor,
        search.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15),
    )
}
