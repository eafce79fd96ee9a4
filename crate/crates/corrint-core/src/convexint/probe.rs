//! Probe grids on which sup-norms are measured.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::geomcore::{ChartDomain, Pt};

/// A tensor probe grid. Periodic axes are uniform with a seeded offset;
/// other axes are closed linspaces including both faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub dim: usize,
    pub counts: [usize; 2],
    pub offsets: [f64; 2],
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub periodic: [bool; 2],
    /// Smallest samples per period over the axes carrying a frequency;
    /// `None` when no axis oscillates.
    pub samples_per_period: Option<f64>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl ProbeSpec {
    /// Grid with at least `spp` samples per period of `freqs[a]` along axis `a`
    /// and at least `floor` samples per axis.
    pub fn new(domain: &ChartDomain, freqs: [f64; 2], spp: f64, floor: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = [1, 1];
        let mut offsets = [0.0; 2];
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        let mut periodic = [false; 2];
        let mut achieved = f64::INFINITY;
        for a in 0..domain.dim {
            lo[a] = domain.lo[a];
            hi[a] = domain.hi[a];
            periodic[a] = domain.periodic[a];
            let w = domain.width(a);
            let cycles = freqs[a] * w / TAU;
            let mut c = ((spp * cycles).ceil() as usize).max(floor).max(2);
            if periodic[a] {
                // Avoid sampling every period at the same phases.
                let q = cycles.round() as u64;
                if q > 0 {
                    while gcd(c as u64, q) != 1 {
                        c += 1;
                    }
                }
                offsets[a] = rng.random_range(0.0..1.0) * w / c as f64;
            } else {
                c += 1;
            }
            counts[a] = c;
            if cycles > 0.0 {
                let per = if periodic[a] { c as f64 } else { (c - 1) as f64 } / cycles;
                achieved = achieved.min(per);
            }
        }
        Self { dim: domain.dim, counts, offsets, lo, hi, periodic, samples_per_period: achieved.is_finite().then_some(achieved) }
    }

    pub fn total(&self) -> usize {
        self.counts[0] * self.counts[1]
    }

    fn coord(&self, a: usize, i: usize) -> f64 {
        let w = self.hi[a] - self.lo[a];
        if self.periodic[a] {
            self.lo[a] + self.offsets[a] + w * i as f64 / self.counts[a] as f64
        } else if i + 1 == self.counts[a] {
            self.hi[a]
        } else {
            self.lo[a] + w * i as f64 / (self.counts[a] - 1) as f64
        }
    }

    pub fn point(&self, k: usize) -> Pt {
        let (i, j) = (k / self.counts[1], k % self.counts[1]);
        let mut x = Pt::zeros();
        x[0] = self.coord(0, i);
        if self.dim > 1 {
            x[1] = self.coord(1, j);
        }
        x
    }

    /// Parallel fold of `f` over all probes, visiting a strided subset first.
    /// `f` returns `Err` to abort; the first error by probe index wins.
    pub fn try_fold<T, E>(
        &self,
        init: impl Fn() -> T + Sync + Send,
        f: impl Fn(&mut T, usize, &Pt) -> Result<(), E> + Sync + Send,
        merge: impl Fn(T, T) -> T + Sync + Send,
    ) -> Result<T, E>
    where
        T: Send,
        E: Send,
    {
        const STRIDE: usize = 17;
        let total = self.total();
        let chunk = 4096;
        let run = |range: Vec<usize>| -> Result<T, E> {
            range
                .par_chunks(chunk)
                .map(|ks| {
                    let mut acc = init();
                    for &k in ks {
                        f(&mut acc, k, &self.point(k))?;
                    }
                    Ok(acc)
                })
                .try_reduce(&init, |a, b| Ok(merge(a, b)))
        };
        if total > 64 * STRIDE {
            let coarse: Vec<usize> = (0..total).step_by(STRIDE).collect();
            run(coarse)?;
        }
        let blocks = total.div_ceil(chunk);
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut acc = init();
                for k in b * chunk..((b + 1) * chunk).min(total) {
                    f(&mut acc, k, &self.point(k))?;
                }
                Ok(acc)
            })
            .try_reduce(&init, |a, b| Ok(merge(a, b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_rule_and_faces() {
        let d = ChartDomain::new(vec![0.0, 0.0], vec![1.0, TAU], Some(0), &[1]).unwrap();
        let p = ProbeSpec::new(&d, [10.0, 40.0], 8.0, 16, 3);
        assert!(p.samples_per_period.unwrap() >= 8.0);
        assert_eq!(p.point(0)[0], 0.0);
        assert_eq!(p.point(p.total() - 1)[0], 1.0);
        assert!(p.counts[1] >= 320);
        assert_eq!(gcd(p.counts[1] as u64, 40), 1);
    }

    #[test]
    fn fold_is_deterministic_max() {
        let d = ChartDomain::new(vec![0.0], vec![TAU], None, &[0]).unwrap();
        let p = ProbeSpec::new(&d, [1000.0, 0.0], 8.0, 16, 9);
        let m = |p: &ProbeSpec| {
            p.try_fold(|| 0.0f64, |acc, _, x| -> Result<(), ()> {
                *acc = acc.max((7.0 * x[0]).sin());
                Ok(())
            }, f64::max)
            .unwrap()
        };
        assert_eq!(m(&p), m(&p));
        assert!(m(&p) > 0.999);
    }

    #[test]
    fn fold_aborts_on_error() {
        let d = ChartDomain::new(vec![0.0], vec![1.0], None, &[]).unwrap();
        let p = ProbeSpec::new(&d, [0.0; 2], 8.0, 5000, 0);
        let r = p.try_fold(|| (), |_, k, _| if k == 4000 { Err(k) } else { Ok(()) }, |_, _| ());
        assert_eq!(r, Err(4000));
    }
}
