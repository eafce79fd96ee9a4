//! The corrugation `Γ(s,t) = ∫₀ᵗ (√(1+s²)(cos(f sin u), sin(f sin u)) − (1,0)) du`
//! and its partial derivatives.

use std::f64::consts::TAU;

use super::profile::{profile_f, profile_f_prime};
use crate::quadrature::integrate;

const TOL: f64 = 1e-13;

/// `∫_a^b` of the Γ integrand with the profile value `f` and `r = √(1+s²)`.
pub fn gamma_integral(s: f64, a: f64, b: f64) -> [f64; 2] {
    let f = profile_f(s);
    let r = (1.0 + s * s).sqrt();
    integrate(
        |u| {
            let (sn, cs) = (f * u.sin()).sin_cos();
            [r * cs - 1.0, r * sn]
        },
        a,
        b,
        TOL,
    )
}

/// `Γ(s,t)` by adaptive quadrature; `t` is reduced modulo `2π` first.
pub fn gamma(s: f64, t: f64) -> [f64; 2] {
    if s == 0.0 {
        return [0.0, 0.0];
    }
    let tr = t.rem_euclid(TAU);
    gamma_integral(s, 0.0, tr)
}

/// `∂tΓ(s,t)` in closed form.
pub fn gamma_dt(s: f64, t: f64) -> [f64; 2] {
    if s == 0.0 {
        return [0.0, 0.0];
    }
    let f = profile_f(s);
    let r = (1.0 + s * s).sqrt();
    let (sn, cs) = (f * t.sin()).sin_cos();
    [r * cs - 1.0, r * sn]
}

/// `∂sΓ(s,t)` by quadrature of the `s`-differentiated integrand.
pub fn gamma_ds(s: f64, t: f64) -> [f64; 2] {
    let tr = t.rem_euclid(TAU);
    let f = profile_f(s);
    let fp = profile_f_prime(s);
    let r = (1.0 + s * s).sqrt();
    let q = s / r;
    integrate(
        |u| {
            let su = u.sin();
            let (sn, cs) = (f * su).sin_cos();
            [q * cs - r * fp * su * sn, q * sn + r * fp * su * cs]
        },
        0.0,
        tr,
        TOL,
    )
}

/// `∂s∂tΓ(s,t)` in closed form.
pub fn gamma_dsdt(s: f64, t: f64) -> [f64; 2] {
    let f = profile_f(s);
    let fp = profile_f_prime(s);
    let r = (1.0 + s * s).sqrt();
    let st = t.sin();
    let (sn, cs) = (f * st).sin_cos();
    [s / r * cs - r * fp * st * sn, s / r * sn + r * fp * st * cs]
}
