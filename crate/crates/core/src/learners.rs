//! Batch (forward-view) critic weight updates over one complete trajectory.
//!
//! All target sequences are computed by a backward recursion from the
//! terminal step, where every target is zero. Returned target vectors have
//! one entry per time index `0..=T`, the last being the terminal zero.

use std::fmt;
use std::str::FromStr;

use crate::critic::{critic_gradient, critic_value, critic_weight_jacobians, CriticWeights};
use crate::env::{Environment, ProblemConstants, ThreeStep, Trajectory};
use crate::error::{Error, Result};
use crate::policy::{action_curvature, greedy_action_state_derivative};

pub type WeightDelta = [f64; 4];

pub const DEFAULT_GDHP_MIX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Td,
    Sarsa,
    Vgl,
    VglOmega,
    /// TD(0).
    Hdp,
    /// VGL(0) with unit Ω.
    Dhp,
    /// `mix·DHP + (1 − mix)·HDP`.
    Gdhp { mix: f64 },
}

impl Algorithm {
    /// Whether the update needs the exact greedy `∂π/∂x` along the rollout.
    pub fn is_value_gradient(&self) -> bool {
        matches!(self, Self::Vgl | Self::VglOmega | Self::Dhp | Self::Gdhp { .. })
    }

    pub fn omega(&self) -> OmegaMode {
        match self {
            Self::VglOmega => OmegaMode::Curvature,
            _ => OmegaMode::Identity,
        }
    }

    /// Whether the update moves the constant weights w3, w4.
    pub fn moves_offsets(&self) -> bool {
        !matches!(self, Self::Vgl | Self::VglOmega | Self::Dhp)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Td => f.write_str("td"),
            Self::Sarsa => f.write_str("sarsa"),
            Self::Vgl => f.write_str("vgl"),
            Self::VglOmega => f.write_str("vglomega"),
            Self::Hdp => f.write_str("hdp"),
            Self::Dhp => f.write_str("dhp"),
            Self::Gdhp { mix } => write!(f, "gdhp:{mix}"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    /// Accepts `td`, `sarsa`, `vgl`, `vglomega`, `hdp`, `dhp`, `gdhp` or `gdhp:<mix>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let alg = match (name, arg) {
            ("td", None) => Self::Td,
            ("sarsa", None) => Self::Sarsa,
            ("vgl", None) => Self::Vgl,
            ("vglomega", None) | ("vgl-omega", None) => Self::VglOmega,
            ("hdp", None) => Self::Hdp,
            ("dhp", None) => Self::Dhp,
            ("gdhp", None) => Self::Gdhp { mix: DEFAULT_GDHP_MIX },
            ("gdhp", Some(m)) => Self::Gdhp {
                mix: m
                    .parse()
                    .map_err(|_| Error::Config(format!("bad GDHP mix `{m}`")))?,
            },
            _ => return Err(Error::Config(format!("unknown algorithm `{s}`"))),
        };
        Ok(alg)
    }
}

/// Per-step weighting in the value-gradient update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaMode {
    Identity,
    /// `Ω_t = −(∂f/∂a)ᵀ (∂²Q/∂a²)⁻¹ (∂f/∂a)` at step t−1, and 0 at t=0.
    Curvature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl LearnerConfig {
    pub fn new(algorithm: Algorithm, lambda: f64, alpha: f64, gamma: f64) -> Result<Self> {
        let cfg = Self {
            algorithm,
            lambda,
            alpha,
            gamma,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        for (name, v) in [("lambda", self.lambda), ("gamma", self.gamma)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        if let Algorithm::Gdhp { mix } = self.algorithm {
            check_mix(mix)?;
        }
        Ok(())
    }

    /// λ actually used: the ADP aliases are all single-step methods.
    pub fn effective_lambda(&self) -> f64 {
        match self.algorithm {
            Algorithm::Hdp | Algorithm::Dhp | Algorithm::Gdhp { .. } => 0.0,
            _ => self.lambda,
        }
    }
}

fn check_mix(mix: f64) -> Result<()> {
    if (0.0..=1.0).contains(&mix) {
        Ok(())
    } else {
        Err(Error::Config(format!("GDHP mix must lie in [0,1], got {mix}")))
    }
}

/// The three target sequences for one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSequence {
    pub v_targets: Vec<f64>,
    pub q_targets: Vec<f64>,
    pub g_targets: Option<Vec<f64>>,
}

impl TargetSequence {
    pub fn compute(
        traj: &Trajectory,
        w: &CriticWeights,
        consts: &ProblemConstants,
        lambda: f64,
        gamma: f64,
    ) -> Result<Self> {
        let g_targets = if traj.greedy {
            Some(value_gradient_targets(traj, w, consts, lambda, gamma)?)
        } else {
            None
        };
        Ok(Self {
            v_targets: lambda_return_targets(traj, w, consts, lambda, gamma)?,
            q_targets: q_lambda_targets(traj, w, consts, lambda, gamma)?,
            g_targets,
        })
    }
}

fn critic_values(traj: &Trajectory, w: &CriticWeights, consts: &ProblemConstants) -> Result<Vec<f64>> {
    (0..=traj.len())
        .map(|t| critic_value(traj.state(t), t, w, consts))
        .collect()
}

/// Q estimates along the trajectory: `r_t + γ·V(x_{t+1})`, with 0 at the terminal index.
fn q_values(traj: &Trajectory, w: &CriticWeights, consts: &ProblemConstants, gamma: f64) -> Result<Vec<f64>> {
    let v = critic_values(traj, w, consts)?;
    let mut q: Vec<f64> = traj.rewards().zip(&v[1..]).map(|(r, v)| r + gamma * v).collect();
    q.push(0.0);
    Ok(q)
}

/// Backward λ-mixing recursion `y_t = r_t + γ(λ·y_{t+1} + (1−λ)·b_{t+1})`, `y_T = 0`.
fn lambda_recursion(rewards: &[f64], bootstrap: &[f64], scale: &[f64], lambda: f64, gamma: f64) -> Vec<f64> {
    let n = rewards.len();
    let mut out = vec![0.0; n + 1];
    for t in (0..n).rev() {
        out[t] = rewards[t] + gamma * scale[t] * (lambda * out[t + 1] + (1.0 - lambda) * bootstrap[t + 1]);
    }
    out
}

/// λ-return targets `V′`.
pub fn lambda_return_targets(
    traj: &Trajectory,
    w: &CriticWeights,
    consts: &ProblemConstants,
    lambda: f64,
    gamma: f64,
) -> Result<Vec<f64>> {
    let v = critic_values(traj, w, consts)?;
    let r: Vec<f64> = traj.rewards().collect();
    Ok(lambda_recursion(&r, &v, &vec![1.0; r.len()], lambda, gamma))
}

/// Sarsa(λ) targets `Q′`, with Q defined through the critic and the model.
pub fn q_lambda_targets(
    traj: &Trajectory,
    w: &CriticWeights,
    consts: &ProblemConstants,
    lambda: f64,
    gamma: f64,
) -> Result<Vec<f64>> {
    let q = q_values(traj, w, consts, gamma)?;
    let r: Vec<f64> = traj.rewards().collect();
    Ok(lambda_recursion(&r, &q, &vec![1.0; r.len()], lambda, gamma))
}

/// Total derivatives `(Dr/Dx, Df/Dx)` along a greedy trajectory, where
/// `D/Dx = ∂/∂x + (∂π/∂x)·∂/∂a`.
pub fn total_derivatives(traj: &Trajectory, consts: &ProblemConstants) -> Result<Vec<(f64, f64)>> {
    if !traj.greedy {
        return Err(Error::Unsupported(
            "value-gradient targets need a trajectory generated by the exact greedy policy".into(),
        ));
    }
    let env = ThreeStep::from_constants(consts);
    traj.steps
        .iter()
        .map(|s| {
            let j = env.jacobians(s.x, s.t, s.a)?;
            let dpi_dx = greedy_action_state_derivative(s.t, consts);
            Ok((j.dr_dx + dpi_dx * j.dr_da, j.df_dx + dpi_dx * j.df_da))
        })
        .collect()
}

/// Target value gradients `G′`.
pub fn value_gradient_targets(
    traj: &Trajectory,
    w: &CriticWeights,
    consts: &ProblemConstants,
    lambda: f64,
    gamma: f64,
) -> Result<Vec<f64>> {
    let (dr_dx, df_dx): (Vec<f64>, Vec<f64>) = total_derivatives(traj, consts)?.into_iter().unzip();
    let g = critic_gradients(traj, w, consts)?;
    Ok(lambda_recursion(&dr_dx, &g, &df_dx, lambda, gamma))
}

fn critic_gradients(traj: &Trajectory, w: &CriticWeights, consts: &ProblemConstants) -> Result<Vec<f64>> {
    (0..=traj.len())
        .map(|t| critic_gradient(traj.state(t), t, w, consts))
        .collect()
}

fn sum_terms(terms: &[WeightDelta]) -> WeightDelta {
    terms.iter().fold([0.0; 4], |mut acc, d| {
        for (a, x) in acc.iter_mut().zip(d) {
            *a += x;
        }
        acc
    })
}

fn scaled(v: &[f64; 4], s: f64) -> WeightDelta {
    [v[0] * s, v[1] * s, v[2] * s, v[3] * s]
}

/// Per-step TD(λ) contributions `α·(∂V/∂w)_t·(V′_t − V_t)`, one per non-terminal step.
pub fn td_update_terms(
    traj: &Trajectory,
    w: &CriticWeights,
    consts: &ProblemConstants,
    cfg: &LearnerConfig,
) -> Result<Vec<WeightDelta>> {
    let v = critic_values(traj, w, consts)?;
    let targets = lambda_return_targets(traj, w, consts, cfg.lambda, cfg.gamma)?;
    Ok(traj
        .steps
        .iter()
        .map(|s| {
            let j = critic_weight_jacobians(s.x, s.t);
            scaled(&j.dv_dw, cfg.alpha * (targets[s.t] - v[s.t]))
        })
        .collect())
}

pub fn td_update(
    traj: &Trajectory,
    w: &CriticWeights,
    consts: &ProblemConstants,
    cfg: &LearnerConfig,
) -> Result<WeightDelta> {
    Ok(sum_terms(&td_update_terms(traj, w, consts, cfg)?))
}

/// Per-step Sarsa(λ) contributions. Q is `r + γ·V(f(x, a))`, so its weight
/// derivative at step t is `γ·(∂V/∂w)` at the next state.
pub fn sarsa_update_terms(
    traj: &Trajectory,
    w: &CriticWeights,
    consts: &ProblemConstants,
    cfg: &LearnerConfig,
) -> Result<Vec<WeightDelta>> {
    let q = q_values(traj, w, consts, cfg.gamma)?;
    let targets = q_lambda_targets(traj, w, consts, cfg.lambda, cfg.gamma)?;
    Ok(traj
        .steps
        .iter()
        .map(|s| {
            let next = s.t + 1;
            let j = critic_weight_jacobians(traj.state(next), next);
            scaled(&j.dv_dw, cfg.alpha * cfg.gamma * (targets[s.t] - q[s.t]))
        })
        .collect())
}

pub fn sarsa_update(
    traj: &Trajectory,
    w: &CriticWeights,
    consts: &ProblemConstants,
    cfg: &LearnerConfig,
) -> Result<WeightDelta> {
    Ok(sum_terms(&sarsa_update_terms(traj, w, consts, cfg)?))
}

/// Ω_t along the trajectory for the chosen mode.
pub fn omega_weights(traj: &Trajectory, consts: &ProblemConstants, mode: OmegaMode) -> Result<Vec<f64>> {
    let env = ThreeStep::from_constants(consts);
    traj.steps
        .iter()
        .map(|s| match mode {
            OmegaMode::Identity => Ok(1.0),
            OmegaMode::Curvature if s.t == 0 => Ok(0.0),
            OmegaMode::Curvature => {
                let prev = &traj.steps[s.t - 1];
                let df_da = env.jacobians(prev.x, prev.t, prev.a)?.df_da;
                // ∂²Q/∂a² = −action_curvature
                Ok(df_da * df_da / action_curvature(prev.t, consts)?)
            }
        })
        .collect()
}

/// VGL(λ): `α·Σ_t (∂G/∂w)_t·Ω_t·(G′_t − G_t)`.
pub fn vgl_update(
    traj: &Trajectory,
    w: &CriticWeights,
    consts: &ProblemConstants,
    cfg: &LearnerConfig,
    omega: OmegaMode,
) -> Result<WeightDelta> {
    let targets = value_gradient_targets(traj, w, consts, cfg.lambda, cfg.gamma)?;
    let g = critic_gradients(traj, w, consts)?;
    let omegas = omega_weights(traj, consts, omega)?;
    let terms: Vec<WeightDelta> = traj
        .steps
        .iter()
        .zip(&omegas)
        .map(|(s, om)| {
            let j = critic_weight_jacobians(s.x, s.t);
            scaled(&j.dg_dw, cfg.alpha * om * (targets[s.t] - g[s.t]))
        })
        .collect();
    Ok(sum_terms(&terms))
}

/// GDHP: `mix·VGL(0) + (1 − mix)·TD(0)`.
pub fn gdhp_update(
    traj: &Trajectory,
    w: &CriticWeights,
    consts: &ProblemConstants,
    cfg: &LearnerConfig,
    mix: f64,
) -> Result<WeightDelta> {
    check_mix(mix)?;
    let zero = LearnerConfig { lambda: 0.0, ..*cfg };
    let dhp = vgl_update(traj, w, consts, &zero, OmegaMode::Identity)?;
    let hdp = td_update(traj, w, consts, &zero)?;
    Ok(std::array::from_fn(|i| mix * dhp[i] + (1.0 - mix) * hdp[i]))
}

/// Dispatches to the update rule selected by `cfg.algorithm`.
pub fn weight_update(
    traj: &Trajectory,
    w: &CriticWeights,
    consts: &ProblemConstants,
    cfg: &LearnerConfig,
) -> Result<WeightDelta> {
    let zero = LearnerConfig { lambda: 0.0, ..*cfg };
    match cfg.algorithm {
        Algorithm::Td => td_update(traj, w, consts, cfg),
        Algorithm::Sarsa => sarsa_update(traj, w, consts, cfg),
        Algorithm::Vgl => vgl_update(traj, w, consts, cfg, OmegaMode::Identity),
        Algorithm::VglOmega => vgl_update(traj, w, consts, cfg, OmegaMode::Curvature),
        Algorithm::Hdp => td_update(traj, w, consts, &zero),
        Algorithm::Dhp => vgl_update(traj, w, consts, &zero, OmegaMode::Identity),
        Algorithm::Gdhp { mix } => gdhp_update(traj, w, consts, cfg, mix),
    }
}
