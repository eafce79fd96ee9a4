//! Tabulated corrugation profile for hot evaluation paths.
//!
//! By the Jacobi–Anger expansion `Γ` is a trigonometric polynomial in `t`
//! (up to a super-exponentially small tail) whose coefficients are
//! `√(1+s²) J_k(f(s))`:
//!
//! ```text
//! Γ₁(s,t) = Σ_{k≥1} A_k(s) sin(2kt),          A_k = √(1+s²) J_{2k}(f)/k
//! Γ₂(s,t) = Σ_{k≥0} B_k(s) (1 − cos((2k+1)t)), B_k = 2√(1+s²) J_{2k+1}(f)/(2k+1)
//! ```
//!
//! The coefficients and their `s`-derivatives are tabulated on a uniform
//! `s`-grid and interpolated with cubic Hermite polynomials. `∂tΓ` always uses
//! the closed form, so the circle equation holds to rounding.

use std::sync::OnceLock;

use super::bessel::{bessel_j_all, mu, QUAD_NODES};
use super::profile::{profile_f, profile_f_prime};

/// Harmonic pairs kept; `J_n(μ) < 1e-17` for `n ≥ 22`.
const K: usize = 12;
const S_MAX: f64 = 16.0;
const STEPS_PER_UNIT: usize = 512;
/// Per node: f, f′, A_k, A_k′, B_k, B_k′.
const STRIDE: usize = 2 + 4 * K;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaJet {
    pub g: [f64; 2],
    pub dt: [f64; 2],
    pub ds: [f64; 2],
}

impl GammaJet {
    pub const ZERO: GammaJet = GammaJet { g: [0.0; 2], dt: [0.0; 2], ds: [0.0; 2] };
}

/// The profile pair `(f, Γ)` with a monotone coefficient table.
#[derive(Debug)]
pub struct CorrugationProfile {
    pub f_root_bracket: [f64; 2],
    pub quad_nodes: usize,
    h: f64,
    nodes: usize,
    data: Vec<f64>,
}

fn coefficients(s: f64, out: &mut [f64]) {
    let f = profile_f(s);
    let fp = profile_f_prime(s);
    let r = (1.0 + s * s).sqrt();
    let q = s / r;
    let mut j = [0.0; 2 * K + 2];
    bessel_j_all(f, &mut j);
    out[0] = f;
    out[1] = fp;
    for k in 1..=K {
        let n = 2 * k;
        let kk = k as f64;
        out[2 + 2 * (k - 1)] = r * j[n] / kk;
        out[3 + 2 * (k - 1)] = (q * j[n] + r * 0.5 * (j[n - 1] - j[n + 1]) * fp) / kk;
    }
    for k in 0..K {
        let n = 2 * k + 1;
        let d = n as f64;
        out[2 + 2 * K + 2 * k] = 2.0 * r * j[n] / d;
        out[3 + 2 * K + 2 * k] = 2.0 * (q * j[n] + r * 0.5 * (j[n - 1] - j[n + 1]) * fp) / d;
    }
}

impl CorrugationProfile {
    pub fn global() -> &'static CorrugationProfile {
        static P: OnceLock<CorrugationProfile> = OnceLock::new();
        P.get_or_init(CorrugationProfile::build)
    }

    fn build() -> Self {
        let nodes = (S_MAX as usize) * STEPS_PER_UNIT + 1;
        let h = 1.0 / STEPS_PER_UNIT as f64;
        let mut data = vec![0.0; nodes * STRIDE];
        for i in 1..nodes {
            coefficients(i as f64 * h, &mut data[i * STRIDE..(i + 1) * STRIDE]);
        }
        // Exact values at s = 0: f = 0, f′ = √2 (from J₀(x) = 1 − x²/4 + …),
        // A = B = 0, A′ = 0, B₀′ = √2.
        data[1] = std::f64::consts::SQRT_2;
        data[3 + 2 * K] = 2.0 * 0.5 * data[1];
        Self { f_root_bracket: [0.0, mu()], quad_nodes: QUAD_NODES, h, nodes, data }
    }

    /// Interpolated `(f(s), f′(s))` for `s ≥ 0` inside the table.
    fn hermite(&self, s: f64, slot: usize) -> (f64, f64) {
        let u = s / self.h;
        let i = (u as usize).min(self.nodes - 2);
        let tau = u - i as f64;
        let p0 = self.data[i * STRIDE + slot];
        let m0 = self.data[i * STRIDE + slot + 1];
        let p1 = self.data[(i + 1) * STRIDE + slot];
        let m1 = self.data[(i + 1) * STRIDE + slot + 1];
        let t2 = tau * tau;
        let t3 = t2 * tau;
        let h = self.h;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + tau) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * h * m1;
        let d = ((6.0 * t2 - 6.0 * tau) * p0
            + (3.0 * t2 - 4.0 * tau + 1.0) * h * m0
            + (-6.0 * t2 + 6.0 * tau) * p1
            + (3.0 * t2 - 2.0 * tau) * h * m1)
            / h;
        (v, d)
    }

    /// `f(s)` from the table (direct inversion beyond it).
    pub fn f(&self, s: f64) -> f64 {
        let a = s.abs();
        let v = if a < S_MAX { self.hermite(a, 0).0 } else { profile_f(a) };
        v.copysign(s)
    }

    /// `Γ`, `∂tΓ` and `∂sΓ` at `(s, t)`.
    pub fn jet(&self, s: f64, t: f64) -> GammaJet {
        if s == 0.0 {
            // Γ(0,·) ≡ 0 and ∂tΓ(0,·) ≡ 0; ∂sΓ(0,t) = (0, √2(1 − cos t)).
            return GammaJet { g: [0.0; 2], dt: [0.0; 2], ds: [0.0, self.data[1] * (1.0 - t.cos())] };
        }
        let a = s.abs();
        let mut coef = [0.0; STRIDE];
        if a < S_MAX {
            coef[0] = self.hermite(a, 0).0;
            for c in 0..2 * K {
                let slot = 2 + 2 * c;
                let (v, d) = self.hermite(a, slot);
                coef[slot] = v;
                coef[slot + 1] = d;
            }
        } else {
            coefficients(a, &mut coef);
        }
        let f = coef[0];
        let r = (1.0 + a * a).sqrt();
        let (st, ct) = t.sin_cos();

        let (sn, cs) = (f * st).sin_cos();
        let dt = [r * cs - 1.0, r * sn];

        // Multiples sin(mt), cos(mt) for m = 1..2K by rotation.
        let mut g = [0.0; 2];
        let mut ds = [0.0; 2];
        let (mut sm, mut cm) = (st, ct);
        for m in 1..=2 * K {
            if m % 2 == 0 {
                let k = m / 2;
                let slot = 2 + 2 * (k - 1);
                g[0] += coef[slot] * sm;
                ds[0] += coef[slot + 1] * sm;
            } else {
                let k = (m - 1) / 2;
                let slot = 2 + 2 * K + 2 * k;
                let w = 1.0 - cm;
                g[1] += coef[slot] * w;
                ds[1] += coef[slot + 1] * w;
            }
            let next_s = sm * ct + cm * st;
            let next_c = cm * ct - sm * st;
            sm = next_s;
            cm = next_c;
        }
        if s < 0.0 {
            // Γ₁, ∂tΓ₁ even in s; Γ₂, ∂tΓ₂ odd; the s-derivatives swap parity.
            GammaJet { g: [g[0], -g[1]], dt: [dt[0], -dt[1]], ds: [-ds[0], ds[1]] }
        } else {
            GammaJet { g, dt, ds }
        }
    }
}
