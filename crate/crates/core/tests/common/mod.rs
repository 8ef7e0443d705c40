#![allow(dead_code)]

use critic_divergence::{Matrix2, ProblemConstants};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Seeded uniform draws for randomized checks.
pub struct Draws(Xoshiro256PlusPlus);

impl Draws {
    pub fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + (hi - lo) * u
    }

    pub fn consts(&mut self, lambda: f64) -> ProblemConstants {
        let c1 = self.uniform(0.005, 2.0);
        let c2 = self.uniform(0.005, 2.0);
        let k = self.uniform(0.005, 2.0);
        ProblemConstants::new(c1, c2, k, 1.0, lambda).unwrap()
    }

    /// A 2×2 matrix with entries in [-2, 2] whose determinant is bounded away from 0.
    pub fn full_rank(&mut self) -> Matrix2 {
        loop {
            let m = Matrix2::new(
                self.uniform(-2.0, 2.0),
                self.uniform(-2.0, 2.0),
                self.uniform(-2.0, 2.0),
                self.uniform(-2.0, 2.0),
            );
            if m.det().abs() > 0.1 {
                return m;
            }
        }
    }
}

pub fn inverse(m: &Matrix2) -> Matrix2 {
    let d = m.det();
    Matrix2::new(m.m22 / d, -m.m12 / d, -m.m21 / d, m.m11 / d)
}

pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// |a − b| relative to max(|a|, |b|), floored at 1.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn vec_rel_err(got: [f64; 2], want: [f64; 2]) -> f64 {
    let diff = (got[0] - want[0]).hypot(got[1] - want[1]);
    diff / want[0].hypot(want[1])
}
