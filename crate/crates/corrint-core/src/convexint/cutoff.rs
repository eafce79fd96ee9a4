//! Smooth cutoff `η̃_ℓ` vanishing within `ℓ/2` of the boundary.

/// `σ(t) = e^{−1/t}/(e^{−1/t} + e^{−1/(1−t)})` on `(0,1)`, clamped outside.
pub fn sigma(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        1.0 / (1.0 + (1.0 / t - 1.0 / (1.0 - t)).exp())
    }
}

pub fn sigma_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let s = sigma(t);
    if s == 0.0 || s == 1.0 {
        return 0.0;
    }
    s * (1.0 - s) * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffProfile {
    pub ell: f64,
}

impl CutoffProfile {
    pub fn new(ell: f64) -> Self {
        assert!(ell > 0.0, "cutoff width must be positive");
        Self { ell }
    }

    /// `η̃_ℓ(d)`: zero for `d ≤ ℓ/2`, one for `d ≥ ℓ`.
    pub fn eval(&self, d: f64) -> f64 {
        let half = 0.5 * self.ell;
        sigma((d - half) / half)
    }

    pub fn deriv(&self, d: f64) -> f64 {
        let half = 0.5 * self.ell;
        sigma_prime((d - half) / half) / half
    }
}
