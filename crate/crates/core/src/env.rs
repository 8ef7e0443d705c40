//! Environment interface and the three-step benchmark problem.
//!
//! Time is carried as an explicit index next to the scalar state, so every
//! model and reward derivative is a plain `f64`.

use crate::error::{Error, Result};

/// Constants shared by the environment, the critic and the learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    /// Critic curvature at t=1.
    pub c1: f64,
    /// Critic curvature at t=2.
    pub c2: f64,
    /// Action-cost coefficient.
    pub k: f64,
    /// Discount factor.
    pub gamma: f64,
    /// Return-mixing coefficient.
    pub lambda: f64,
}

impl ProblemConstants {
    pub fn new(c1: f64, c2: f64, k: f64, gamma: f64, lambda: f64) -> Result<Self> {
        let consts = Self {
            c1,
            c2,
            k,
            gamma,
            lambda,
        };
        consts.validate()?;
        Ok(consts)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("k", self.k)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConstant(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("gamma", self.gamma), ("lambda", self.lambda)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConstant(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        Ok(())
    }

    /// Critic curvature `c_t` for t in {1,2}.
    pub fn curvature(&self, t: usize) -> Option<f64> {
        match t {
            1 => Some(self.c1),
            2 => Some(self.c2),
            _ => None,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }
}

/// Partial derivatives of the model and reward functions at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelJacobians {
    pub df_dx: f64,
    pub df_da: f64,
    pub dr_dx: f64,
    pub dr_da: f64,
}

/// A deterministic, time-indexed, scalar-state environment.
pub trait Environment {
    /// Index of the terminal time step.
    fn horizon(&self) -> usize;

    fn is_terminal(&self, t: usize) -> bool {
        t >= self.horizon()
    }

    /// Next state `f(x, t, a)`.
    fn model(&self, x: f64, t: usize, a: f64) -> Result<f64>;

    /// Immediate reward `r(x, t, a)`.
    fn reward(&self, x: f64, t: usize, a: f64) -> Result<f64>;

    fn jacobians(&self, x: f64, t: usize, a: f64) -> Result<ModelJacobians>;
}

/// The three-step benchmark: the state moves by the action at t=0 and t=1,
/// actions cost `k·a²`, and the last step pays `-x²` with no action effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeStep {
    pub k: f64,
}

impl ThreeStep {
    pub const HORIZON: usize = 3;

    pub fn new(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidConstant(format!("k must be positive, got {k}")));
        }
        Ok(Self { k })
    }

    pub fn from_constants(consts: &ProblemConstants) -> Self {
        Self { k: consts.k }
    }

    fn check_step(t: usize) -> Result<()> {
        if t < Self::HORIZON {
            Ok(())
        } else {
            Err(Error::TimeIndex {
                t,
                max: Self::HORIZON - 1,
            })
        }
    }
}

impl Environment for ThreeStep {
    fn horizon(&self) -> usize {
        Self::HORIZON
    }

    fn model(&self, x: f64, t: usize, a: f64) -> Result<f64> {
        Self::check_step(t)?;
        Ok(if t < 2 { x + a } else { x })
    }

    fn reward(&self, x: f64, t: usize, a: f64) -> Result<f64> {
        Self::check_step(t)?;
        Ok(if t < 2 { -self.k * a * a } else { -x * x })
    }

    fn jacobians(&self, x: f64, t: usize, a: f64) -> Result<ModelJacobians> {
        Self::check_step(t)?;
        Ok(if t < 2 {
            ModelJacobians {
                df_dx: 1.0,
                df_da: 1.0,
                dr_dx: 0.0,
                dr_da: -2.0 * self.k * a,
            }
        } else {
            ModelJacobians {
                df_dx: 1.0,
                df_da: 0.0,
                dr_dx: -2.0 * x,
                dr_da: 0.0,
            }
        })
    }
}

/// One non-terminal transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub t: usize,
    pub x: f64,
    pub a: f64,
    pub r: f64,
}

/// A complete rollout from t=0 to the terminal step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    /// State reached at the terminal time index.
    pub terminal_state: f64,
    pub total_reward: f64,
    /// True when every action came from the exact greedy policy, so the
    /// closed-form `∂π/∂x` applies along the whole rollout.
    pub greedy: bool,
}

impl Trajectory {
    /// Builds a trajectory, computing the discounted total reward.
    pub fn new(steps: Vec<Step>, terminal_state: f64, gamma: f64, greedy: bool) -> Self {
        let total_reward = steps
            .iter()
            .rev()
            .fold(0.0, |acc, s| s.r + gamma * acc);
        Self {
            steps,
            terminal_state,
            total_reward,
            greedy,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// State at time `t`, including the terminal state at `t == len()`.
    pub fn state(&self, t: usize) -> f64 {
        if t < self.steps.len() {
            self.steps[t].x
        } else {
            self.terminal_state
        }
    }

    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.r)
    }
}
