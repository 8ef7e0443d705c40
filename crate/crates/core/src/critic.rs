//! Four-weight quadratic critic and its derivatives.
//!
//! ```text
//! V(x, 1) = -c1·x² + w1·x + w3
//! V(x, 2) = -c2·x² + w2·x + w4
//! V(x, t) = 0            for t ∈ {0, 3}
//! ```

use log::warn;

use crate::env::ProblemConstants;
use crate::error::{Error, Result};
use crate::matrix::{Matrix2, Vector2};

/// Last time index the critic is defined on (the terminal step).
pub const TERMINAL_T: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CriticWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

impl CriticWeights {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(w1: f64, w2: f64, w3: f64, w4: f64) -> Self {
        Self { w1, w2, w3, w4 }
    }

    pub fn from_array(w: [f64; 4]) -> Self {
        Self::new(w[0], w[1], w[2], w[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w1, self.w2, self.w3, self.w4]
    }

    /// The shortened weight vector `(w1, w2)`.
    pub fn linear(&self) -> Vector2 {
        [self.w1, self.w2]
    }

    /// Linear coefficient for time `t` (w1 at t=1, w2 at t=2).
    pub fn slope(&self, t: usize) -> Option<f64> {
        match t {
            1 => Some(self.w1),
            2 => Some(self.w2),
            _ => None,
        }
    }

    pub fn add_scaled(&self, delta: &[f64; 4], scale: f64) -> Self {
        let mut w = self.to_array();
        for (wi, di) in w.iter_mut().zip(delta) {
            *wi += scale * di;
        }
        Self::from_array(w)
    }
}

fn check_t(t: usize) -> Result<()> {
    if t > TERMINAL_T {
        Err(Error::TimeIndex { t, max: TERMINAL_T })
    } else {
        Ok(())
    }
}

pub fn critic_value(x: f64, t: usize, w: &CriticWeights, consts: &ProblemConstants) -> Result<f64> {
    check_t(t)?;
    Ok(match t {
        1 => -consts.c1 * x * x + w.w1 * x + w.w3,
        2 => -consts.c2 * x * x + w.w2 * x + w.w4,
        _ => 0.0,
    })
}

/// State derivative of the critic. Independent of w3 and w4.
pub fn critic_gradient(x: f64, t: usize, w: &CriticWeights, consts: &ProblemConstants) -> Result<f64> {
    check_t(t)?;
    Ok(match t {
        1 => -2.0 * consts.c1 * x + w.w1,
        2 => -2.0 * consts.c2 * x + w.w2,
        _ => 0.0,
    })
}

/// Derivatives of the critic value and critic gradient with respect to the
/// four weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightJacobians {
    pub dv_dw: [f64; 4],
    pub dg_dw: [f64; 4],
}

pub fn critic_weight_jacobians(x: f64, t: usize) -> WeightJacobians {
    match t {
        1 => WeightJacobians {
            dv_dw: [x, 0.0, 1.0, 0.0],
            dg_dw: [1.0, 0.0, 0.0, 0.0],
        },
        2 => WeightJacobians {
            dv_dw: [0.0, x, 0.0, 1.0],
            dg_dw: [0.0, 1.0, 0.0, 0.0],
        },
        _ => WeightJacobians {
            dv_dw: [0.0; 4],
            dg_dw: [0.0; 4],
        },
    }
}

/// Weights `(w1, w2) = F·p`; w3 and w4 are carried separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reparametrization {
    pub f: Matrix2,
    pub p: Vector2,
}

impl Reparametrization {
    pub fn new(f: Matrix2, p: Vector2) -> Self {
        Self { f, p }
    }

    pub fn weights(&self, w3: f64, w4: f64) -> CriticWeights {
        let [w1, w2] = self.f.apply(self.p);
        CriticWeights::new(w1, w2, w3, w4)
    }

    /// Maps a direction in (w1, w2) space to p space via `Fᵀ`.
    pub fn pull_back(&self, dw: Vector2) -> Vector2 {
        self.f.transpose().apply(dw)
    }
}

/// `(w1, w2) = F·p` with w3 = w4 = 0. Warns when F is numerically singular.
pub fn apply_reparam(f: &Matrix2, p: Vector2) -> CriticWeights {
    if f.det().abs() < 1e-12 {
        warn!("reparametrization matrix is near-singular (det = {:e})", f.det());
    }
    Reparametrization::new(*f, p).weights(0.0, 0.0)
}
