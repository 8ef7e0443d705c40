//! Greedy, noisy-greedy and fixed-actor policies, and trajectory unrolling.
//!
//! The critic is quadratic in the next state, so `Q(x, a) = r + γ·V(f(x, a))`
//! is a concave quadratic in `a` and its maximiser has a closed form:
//!
//! ```text
//! a_t = γ·(w_{t+1} − 2·c_{t+1}·x) / (2·(k + γ·c_{t+1}))     t ∈ {0, 1}
//! ```
//!
//! which at γ = 1 is the familiar `(w − 2c·x) / (2(c + k))`.

use std::f64::consts::TAU;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::critic::{critic_value, CriticWeights};
use crate::env::{Environment, ProblemConstants, Step, ThreeStep, Trajectory};
use crate::error::{Error, Result};

/// Default golden-section bracket for the numeric greedy oracle.
pub const DEFAULT_BRACKET: (f64, f64) = (-10.0, 10.0);
/// Bracket width at which the golden-section search stops.
pub const NUMERIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    GreedyAnalytic,
    GreedyNumeric { lo: f64, hi: f64 },
    NoisyGreedy { noise_variance: f64, seed: u64 },
    FixedActor { z0: f64, z1: f64 },
}

impl PolicyKind {
    pub fn greedy_numeric() -> Self {
        let (lo, hi) = DEFAULT_BRACKET;
        Self::GreedyNumeric { lo, hi }
    }
}

/// Negative second derivative of Q in the action at step `t`, i.e. `2(k + γ·c_{t+1})`.
pub fn action_curvature(t: usize, consts: &ProblemConstants) -> Result<f64> {
    let c = consts
        .curvature(t + 1)
        .ok_or(Error::TimeIndex { t, max: 1 })?;
    let curvature = consts.k + consts.gamma * c;
    if curvature <= 0.0 {
        return Err(Error::NotConcave { t, curvature });
    }
    Ok(2.0 * curvature)
}

/// Closed-form maximiser of Q at `(x, t)`. Returns 0 at t=2 where the action has no effect.
pub fn greedy_action(x: f64, t: usize, w: &CriticWeights, consts: &ProblemConstants) -> Result<f64> {
    match t {
        0 | 1 => {
            let curv = action_curvature(t, consts)?;
            let (c, slope) = if t == 0 { (consts.c1, w.w1) } else { (consts.c2, w.w2) };
            Ok(consts.gamma * (slope - 2.0 * c * x) / curv)
        }
        2 => Ok(0.0),
        _ => Err(Error::TimeIndex { t, max: 2 }),
    }
}

/// `∂π/∂x` of the greedy policy: `−γc_{t+1} / (k + γc_{t+1})` for t ∈ {0, 1}, else 0.
pub fn greedy_action_state_derivative(t: usize, consts: &ProblemConstants) -> f64 {
    match consts.curvature(t + 1) {
        Some(c) if t < 2 => {
            let gc = consts.gamma * c;
            -gc / (consts.k + gc)
        }
        _ => 0.0,
    }
}

pub fn q_value(x: f64, t: usize, a: f64, w: &CriticWeights, consts: &ProblemConstants) -> Result<f64> {
    let env = ThreeStep::from_constants(consts);
    let r = env.reward(x, t, a)?;
    let next = env.model(x, t, a)?;
    Ok(r + consts.gamma * critic_value(next, t + 1, w, consts)?)
}

/// Golden-section search for the maximiser of a unimodal function on `[lo, hi]`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Numeric greedy action by golden-section search over `[lo, hi]`.
pub fn greedy_action_numeric(
    x: f64,
    t: usize,
    w: &CriticWeights,
    consts: &ProblemConstants,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    match t {
        0 | 1 => {
            action_curvature(t, consts)?;
            Ok(golden_section_max(
                |a| q_value(x, t, a, w, consts).unwrap_or(f64::NEG_INFINITY),
                lo,
                hi,
                NUMERIC_TOL,
            ))
        }
        2 => Ok(0.0),
        _ => Err(Error::TimeIndex { t, max: 2 }),
    }
}

/// Seeded standard-normal source: xoshiro256++ (seeded through SplitMix64)
/// feeding the Box–Muller transform. Both outputs of each transform are used.
#[derive(Debug, Clone)]
pub struct GaussianNoise {
    rng: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl GaussianNoise {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on (0, 1], 53 bits.
    fn open_unit(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.open_unit();
        let u2 = self.open_unit();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(radius * s);
        radius * c
    }
}

/// A runnable policy. Noisy policies own their generator, so one instance
/// should drive exactly one run.
#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    noise: Option<(f64, GaussianNoise)>,
}

impl Policy {
    pub fn new(kind: PolicyKind) -> Result<Self> {
        let noise = match kind {
            PolicyKind::NoisyGreedy { noise_variance, seed } => {
                if !(noise_variance.is_finite() && noise_variance >= 0.0) {
                    return Err(Error::Config(format!(
                        "noise variance must be non-negative, got {noise_variance}"
                    )));
                }
                Some((noise_variance.sqrt(), GaussianNoise::new(seed)))
            }
            PolicyKind::GreedyNumeric { lo, hi } if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) => {
                return Err(Error::Config(format!("empty search bracket [{lo}, {hi}]")));
            }
            _ => None,
        };
        Ok(Self { kind, noise })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    /// True when actions follow the exact greedy policy, so the closed-form
    /// `∂π/∂x` is valid along the trajectory.
    pub fn is_exact_greedy(&self) -> bool {
        match self.kind {
            PolicyKind::GreedyAnalytic | PolicyKind::GreedyNumeric { .. } => true,
            PolicyKind::NoisyGreedy { noise_variance, .. } => noise_variance == 0.0,
            PolicyKind::FixedActor { .. } => false,
        }
    }

    pub fn action(&mut self, x: f64, t: usize, w: &CriticWeights, consts: &ProblemConstants) -> Result<f64> {
        match self.kind {
            PolicyKind::GreedyAnalytic => greedy_action(x, t, w, consts),
            PolicyKind::GreedyNumeric { lo, hi } => greedy_action_numeric(x, t, w, consts, lo, hi),
            PolicyKind::NoisyGreedy { .. } => {
                let a = greedy_action(x, t, w, consts)?;
                match &mut self.noise {
                    Some((sd, noise)) if t < 2 && *sd > 0.0 => Ok(a + *sd * noise.standard_normal()),
                    _ => Ok(a),
                }
            }
            PolicyKind::FixedActor { z0, z1 } => match t {
                0 => Ok(z0),
                1 => Ok(z1),
                2 => Ok(0.0),
                _ => Err(Error::TimeIndex { t, max: 2 }),
            },
        }
    }

    /// Rolls out the three-step problem from `x0`.
    pub fn unroll(&mut self, x0: f64, w: &CriticWeights, consts: &ProblemConstants) -> Result<Trajectory> {
        let env = ThreeStep::from_constants(consts);
        let mut steps = Vec::with_capacity(env.horizon());
        let mut x = x0;
        for t in 0..env.horizon() {
            let a = self.action(x, t, w, consts)?;
            let r = env.reward(x, t, a)?;
            steps.push(Step { t, x, a, r });
            x = env.model(x, t, a)?;
        }
        Ok(Trajectory::new(steps, x, consts.gamma, self.is_exact_greedy()))
    }
}

/// One-shot rollout with a fresh policy instance.
pub fn unroll(x0: f64, kind: PolicyKind, w: &CriticWeights, consts: &ProblemConstants) -> Result<Trajectory> {
    Policy::new(kind)?.unroll(x0, w, consts)
}
