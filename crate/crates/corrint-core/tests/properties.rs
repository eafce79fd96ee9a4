//! Property tests of the core invariants.

use std::f64::consts::{SQRT_2, TAU};

use corrint_core::convexint::{homotopy_scale, CutoffProfile};
use corrint_core::corrugation::{bessel_j, gamma, gamma_dt, mu, profile_f, profile_f_prime, fprime_bound};
use corrint_core::decomposition::{decompose_fixed, reconstruct, DecomposeOptions, TermRule};
use corrint_core::geomcore::{sym_eigenvalues, Pt, Sym, SymMatField};
use corrint_core::models::sphere_band_defect;
use proptest::prelude::*;

fn dominant() -> impl Strategy<Value = Sym> {
    (-2.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64).prop_map(|(b, p, q)| Sym::new(b.abs() + p, b, b, b.abs() + q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn profile_is_odd_and_inverts_j0(s in -60.0..60.0f64) {
        let f = profile_f(s);
        prop_assert_eq!(f + profile_f(-s), 0.0);
        prop_assert!(f.abs() < mu());
        prop_assert!((bessel_j(0, f) * (1.0 + s * s).sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profile_derivative_bounded(s in -20.0..20.0f64) {
        let d = profile_f_prime(s);
        prop_assert!(d > 0.0);
        prop_assert!(d <= fprime_bound(s) + 1e-9);
    }

    #[test]
    fn corrugation_circle_equation(s in -8.0..8.0f64, t in -10.0..10.0f64) {
        let d = gamma_dt(s, t);
        prop_assert!(((d[0] + 1.0).powi(2) + d[1] * d[1] - 1.0 - s * s).abs() < 1e-10);
        prop_assert!(d[0].hypot(d[1]) <= SQRT_2 * s.abs() + 1e-9);
    }

    #[test]
    fn corrugation_periodic(s in 0.0..6.0f64, t in 0.0..TAU) {
        let (a, b) = (gamma(s, t), gamma(s, t + TAU));
        prop_assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
    }

    #[test]
    fn dominant_decomposition_is_exact(d in dominant()) {
        let field = SymMatField::new(2, move |_| d);
        let x = Pt::zeros();
        let dec = decompose_fixed(&field, &[x], DecomposeOptions::default()).unwrap();
        prop_assert!((reconstruct(&dec, &x) - d).amax() < 1e-14);
        for t in &dec.terms {
            prop_assert!(t.coeff_sq(&x) >= 0.0);
        }
    }

    #[test]
    fn term_coefficients_nonnegative(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, k in 0usize..4) {
        let r = TermRule { dim: 2, index: k, rot: Sym::identity() };
        prop_assert!(r.coeff(&Sym::new(a, b, b, c)) >= 0.0);
    }

    #[test]
    fn cutoff_monotone_in_unit_range(ell in 0.01..1.0f64, p in 0.0..2.0f64, q in 0.0..2.0f64) {
        let c = CutoffProfile::new(ell);
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        let (a, b) = (c.eval(lo * ell), c.eval(hi * ell));
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(a <= b);
        prop_assert_eq!(c.eval(0.5 * ell * p / 2.0), 0.0);
        prop_assert_eq!(c.eval(ell * (1.0 + q)), 1.0);
    }

    #[test]
    fn homotopy_scale_monotone(p in 0.0..1.0f64, q in 0.0..1.0f64) {
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        prop_assert!(homotopy_scale(lo) <= homotopy_scale(hi));
    }

    #[test]
    fn sphere_band_defect_psd(eps in 0.001..0.5f64, theta in -1.5..1.5f64) {
        let e = sym_eigenvalues(&sphere_band_defect(eps, theta), 2);
        prop_assert!(e[0] >= -1e-15);
    }
}
