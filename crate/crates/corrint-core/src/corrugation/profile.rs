//! The profile `f(s) = sgn s · J₀⁻¹(1/√(1+s²))` and its derivative.

use std::sync::OnceLock;

use super::bessel::{bessel_j, mu, one_minus_j0};

/// `w(s) = 1/√(1+s²)`.
pub fn w(s: f64) -> f64 {
    1.0 / (1.0 + s * s).sqrt()
}

/// `1 − w(s)` without cancellation.
fn one_minus_w(s: f64) -> f64 {
    let r = (1.0 + s * s).sqrt();
    s * s / (r * (1.0 + r))
}

/// Upper bound `√(2+s²)/(1+s²)` on `|f′|`.
pub fn fprime_bound(s: f64) -> f64 {
    (2.0 + s * s).sqrt() / (1.0 + s * s)
}

/// Monotone table of `(s, f(s))` pairs used to bracket and seed Newton.
fn seed_table() -> &'static [(f64, f64)] {
    static T: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    T.get_or_init(|| {
        let m = mu();
        (0..=96)
            .map(|i| {
                let s = (i as f64 / 16.0).sinh();
                let f = if s == 0.0 { 0.0 } else { invert(one_minus_w(s), 0.0, m, 0.5 * m) };
                (s, f)
            })
            .collect()
    })
}

/// Safeguarded Newton for `1 − J₀(x) = target` on the bracket `[lo, hi] ⊂ [0, μ]`.
fn invert(target: f64, mut lo: f64, mut hi: f64, x0: f64) -> f64 {
    let mut x = x0.clamp(lo, hi);
    for _ in 0..200 {
        let phi = one_minus_j0(x) - target;
        if phi == 0.0 {
            return x;
        }
        if phi < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = bessel_j(1, x);
        let mut next = if d > 0.0 { x - phi / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs() || hi - lo <= 2.0 * f64::EPSILON * hi {
            return next;
        }
        x = next;
    }
    x
}

/// `f(s)`: the odd solution of `J₀(f(s)) = 1/√(1+s²)` with values in `(−μ, μ)`.
pub fn profile_f(s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let a = s.abs();
    let table = seed_table();
    let idx = table.partition_point(|&(si, _)| si <= a);
    let (lo, hi) = if idx == 0 {
        (0.0, table[0].1)
    } else if idx >= table.len() {
        (table[table.len() - 1].1, mu())
    } else {
        (table[idx - 1].1, table[idx].1)
    };
    let (s0, f0) = table[idx.saturating_sub(1).min(table.len() - 1)];
    // Small-s seed f ≈ √2 s is far better than the bracket midpoint.
    let seed = if a < 0.1 { std::f64::consts::SQRT_2 * a } else if s0 > 0.0 { f0 } else { 0.5 * (lo + hi) };
    let f = invert(one_minus_w(a), lo, hi, seed);
    f.copysign(s)
}

/// `f′(s) = s / (J₁(f(s)) (1+s²)^{3/2})`; at `s = 0` a fourth-order central
/// difference of `f`, clipped to the derivative bound.
pub fn profile_f_prime(s: f64) -> f64 {
    if s == 0.0 {
        let h = 1e-3;
        let d = (-profile_f(2.0 * h) + 8.0 * profile_f(h) - 8.0 * profile_f(-h) + profile_f(-2.0 * h))
            / (12.0 * h);
        return d.min(fprime_bound(0.0));
    }
    let f = profile_f(s);
    let q = 1.0 + s * s;
    s / (bessel_j(1, f) * q * q.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_oddness() {
        assert_eq!(profile_f(0.0), 0.0);
        for &s in &[1e-7, 0.3, 1.0, 4.0, 37.0] {
            assert_eq!(profile_f(s) + profile_f(-s), 0.0);
        }
    }

    #[test]
    fn f_at_one_matches_bisection_oracle() {
        let target = std::f64::consts::FRAC_1_SQRT_2;
        let (mut lo, mut hi) = (0.0, mu());
        while hi - lo > 1e-14 {
            let m = 0.5 * (lo + hi);
            if bessel_j(0, m) > target {
                lo = m;
            } else {
                hi = m;
            }
        }
        assert!((profile_f(1.0) - 0.5 * (lo + hi)).abs() < 1e-13);
    }

    #[test]
    fn defining_identity_and_range() {
        let m = mu();
        for i in 0..400 {
            let s = 10f64.powf(-6.0 + 7.7 * i as f64 / 399.0);
            let f = profile_f(s);
            assert!(f > 0.0 && f < m);
            assert!((bessel_j(0, f) * (1.0 + s * s).sqrt() - 1.0).abs() <= 1e-12, "s {s}");
        }
    }

    #[test]
    fn strictly_increasing() {
        let mut prev = 0.0;
        for i in 1..2000 {
            let f = profile_f(i as f64 * 0.01);
            assert!(f > prev);
            prev = f;
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let s = 1e-6;
        let h = 1e-4;
        let fd = (profile_f(s + h) - profile_f(s - h)) / (2.0 * h);
        assert!(((profile_f_prime(s) - fd) / fd).abs() < 1e-6);
        for &s in &[0.2, 1.0, 3.5, 12.0] {
            let h = 1e-4 * (1.0 + s);
            let fd = (-profile_f(s + 2.0 * h) + 8.0 * profile_f(s + h) - 8.0 * profile_f(s - h)
                + profile_f(s - 2.0 * h))
                / (12.0 * h);
            assert!(((profile_f_prime(s) - fd) / fd).abs() < 1e-8, "s {s}");
        }
    }

    #[test]
    fn derivative_bound_and_limit() {
        let d0 = profile_f_prime(0.0);
        assert!(d0 > 0.0 && d0 <= fprime_bound(0.0));
        assert!((d0 - std::f64::consts::SQRT_2).abs() < 1e-9);
        for i in 0..1000 {
            let s = -10.0 + 20.0 * i as f64 / 999.0;
            assert!(profile_f_prime(s) <= fprime_bound(s) + 1e-9);
        }
    }
}
