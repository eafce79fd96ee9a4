//! Adaptive Dormand–Prince 5(4) integration of `y' = f(t, y)` for fixed-size
//! states.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-12, h0: 1e-3, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

/// An accepted step with the coefficients of the fourth-order continuous
/// extension.
#[derive(Debug, Clone, Copy)]
pub struct OdeStep<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    cont: [[f64; N]; 3],
}

impl<const N: usize> OdeStep<N> {
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / (self.t1 - self.t0);
        let th1 = 1.0 - th;
        std::array::from_fn(|i| {
            let [c3, c4, c5] = [self.cont[0][i], self.cont[1][i], self.cont[2][i]];
            self.y0[i] + th * ((self.y1[i] - self.y0[i]) + th1 * (c3 + th * (c4 + th1 * c5)))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("integration failed at t = {t} ({reason})")]
pub struct OdeError {
    pub t: f64,
    pub reason: &'static str,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate from `t0` to `t1`, returning the accepted steps.
pub fn integrate_steps<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: OdeOptions,
) -> Result<Vec<OdeStep<N>>, OdeError> {
    let dir = (t1 - t0).signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h0.min((t1 - t0).abs()) * dir;
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, &y);
    let mut steps = Vec::new();
    for _ in 0..opts.max_steps {
        if (t1 - t) * dir <= 0.0 {
            return Ok(steps);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        for s in 1..7 {
            let mut ys = y;
            for (i, v) in ys.iter_mut().enumerate() {
                for (r, a) in A[s].iter().enumerate().take(s) {
                    *v += h * a * k[r][i];
                }
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for i in 0..N {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            y5[i] = y[i] + h * d5;
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((h * (d5 - d4)).abs() / sc);
        }
        if !err.is_finite() {
            return Err(OdeError { t, reason: "non-finite state" });
        }
        if err <= 1.0 {
            let tn = t + h;
            let mut cont = [[0.0; N]; 3];
            for i in 0..N {
                let dy = y5[i] - y[i];
                let bspl = h * k[0][i] - dy;
                cont[0][i] = bspl;
                cont[1][i] = dy - h * k[6][i] - bspl;
                cont[2][i] = h * (0..7).map(|s| D[s] * k[s][i]).sum::<f64>();
            }
            steps.push(OdeStep { t0: t, t1: tn, y0: y, y1: y5, cont });
            t = tn;
            y = y5;
            k[0] = k[6];
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * fac).clamp(-opts.h_max, opts.h_max);
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(OdeError { t, reason: "step size underflow" });
        }
    }
    Err(OdeError { t, reason: "too many steps" })
}

/// State at `t1`.
pub fn integrate<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: OdeOptions,
) -> Result<[f64; N], OdeError> {
    Ok(integrate_steps(f, t0, y0, t1, opts)?.last().map_or(y0, |s| s.y1))
}

/// Accepted steps with lookup by time, for dense evaluation.
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    steps: Vec<OdeStep<N>>,
}

impl<const N: usize> DenseSolution<N> {
    pub fn new(steps: Vec<OdeStep<N>>) -> Self {
        assert!(!steps.is_empty(), "empty solution");
        Self { steps }
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let i = self.steps.partition_point(|s| s.t1 < t).min(self.steps.len() - 1);
        self.steps[i].interpolate(t)
    }

    pub fn end(&self) -> [f64; N] {
        self.steps.last().unwrap().y1
    }
}
