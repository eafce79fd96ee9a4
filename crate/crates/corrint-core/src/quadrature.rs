//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<const N: usize>(f: &impl Fn(f64) -> [f64; N], a: f64, b: f64) -> ([f64; N], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    for d in 0..N {
        k[d] = WGK[7] * fc[d];
        g[d] = WG[3] * fc[d];
    }
    for i in 0..7 {
        let x = h * XGK[i];
        let f1 = f(c - x);
        let f2 = f(c + x);
        for d in 0..N {
            let s = f1[d] + f2[d];
            k[d] += WGK[i] * s;
            if i % 2 == 1 {
                g[d] += WG[i / 2] * s;
            }
        }
    }
    let mut err = 0.0_f64;
    for d in 0..N {
        k[d] *= h;
        g[d] *= h;
        err = err.max((k[d] - g[d]).abs());
    }
    (k, err)
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol` by recursive bisection.
pub fn integrate<const N: usize>(f: impl Fn(f64) -> [f64; N], a: f64, b: f64, tol: f64) -> [f64; N] {
    fn rec<const N: usize>(
        f: &impl Fn(f64) -> [f64; N],
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
        whole: ([f64; N], f64),
    ) -> [f64; N] {
        let (val, err) = whole;
        if err <= tol || depth >= 40 || (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            return val;
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        let l = rec(f, a, m, 0.5 * tol, depth + 1, left);
        let r = rec(f, m, b, 0.5 * tol, depth + 1, right);
        let mut out = [0.0; N];
        for d in 0..N {
            out[d] = l[d] + r[d];
        }
        out
    }
    if a == b {
        return [0.0; N];
    }
    let first = gk15(&f, a, b);
    rec(&f, a, b, tol, 0, first)
}

/// Scalar convenience wrapper.
pub fn integrate1(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    integrate(|x| [f(x)], a, b, tol)[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_trig() {
        let v = integrate1(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-14);
        assert!((v - 0.0).abs() < 1e-13);
        let v = integrate1(f64::sin, 0.0, std::f64::consts::PI, 1e-14);
        assert!((v - 2.0).abs() < 1e-14);
        let v = integrate(|x| [x.exp(), x.cos()], 0.0, 1.0, 1e-14);
        assert!((v[0] - (1f64.exp() - 1.0)).abs() < 1e-14);
        assert!((v[1] - 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn peaked_integrand_refines() {
        let v = integrate1(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10);
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((v - exact).abs() < 1e-8);
    }
}
