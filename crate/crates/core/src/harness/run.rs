use std::fmt;

use crate::critic::Reparametrization;
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, Preset};
use crate::learners::{weight_update, Algorithm};
use crate::matrix::{norm, Vector2};
use crate::policy::Policy;
use crate::stability::{classify, eigenvalues_2x2, max_stable_alpha, StabilityReport, Verdict};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub p1: f64,
    pub p2: f64,
    pub p_norm: f64,
}

impl TraceRow {
    pub fn new(iteration: u64, p: Vector2) -> Self {
        Self {
            iteration,
            p1: p[0],
            p2: p[1],
            p_norm: norm(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Diverged { at: u64 },
    Converged { at: u64 },
    Completed { at: u64 },
}

impl Outcome {
    pub fn iteration(&self) -> u64 {
        match *self {
            Outcome::Diverged { at } | Outcome::Converged { at } | Outcome::Completed { at } => at,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Diverged { .. } => "Diverged",
            Outcome::Converged { .. } => "Converged",
            Outcome::Completed { .. } => "Completed",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at iteration {}", self.label(), self.iteration())
    }
}

/// Recorded `(iteration, p)` samples of one run. Iteration 0 is the start.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    pub outcome: Outcome,
}

impl RunTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn max_norm(&self) -> f64 {
        self.rows.iter().map(|r| r.p_norm).fold(0.0, f64::max)
    }
}

/// Runs the learning loop: roll out from x₀ = 0, apply the learner's update
/// in p space through `Fᵀ`, move w3/w4 directly when the learner does.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunTrace> {
    config.validate()?;
    let mut policy = Policy::new(config.policy())?;
    let mut reparam = Reparametrization::new(config.f, config.p0);
    let [mut w3, mut w4] = config.w34_0;
    let moves_offsets = config.learner.algorithm.moves_offsets();

    let mut rows = vec![TraceRow::new(0, reparam.p)];
    let mut outcome = Outcome::Completed { at: config.iterations };

    for n in 1..=config.iterations {
        let w = reparam.weights(w3, w4);
        let traj = policy.unroll(0.0, &w, &config.consts)?;
        let dw = weight_update(&traj, &w, &config.consts, &config.learner)?;
        let dp = reparam.pull_back([dw[0], dw[1]]);
        reparam.p[0] += dp[0];
        reparam.p[1] += dp[1];
        if moves_offsets {
            w3 += dw[2];
            w4 += dw[3];
        }

        let row = TraceRow::new(n, reparam.p);
        if !row.p_norm.is_finite() {
            outcome = Outcome::Diverged { at: n };
            break;
        }
        if row.p_norm > config.divergence_threshold {
            rows.push(row);
            outcome = Outcome::Diverged { at: n };
            break;
        }
        if row.p_norm < config.convergence_threshold {
            rows.push(row);
            outcome = Outcome::Converged { at: n };
            break;
        }
        if n % config.record_every == 0 || n == config.iterations {
            rows.push(row);
        }
    }
    Ok(RunTrace { rows, outcome })
}

pub fn run_preset(preset: Preset) -> Result<RunTrace> {
    run_experiment(&preset.config())
}

/// Analytic prediction for a value-gradient config. GDHP is classified by
/// its linearisation at the origin, `mix·FᵀAF`; the TD(0) half contributes
/// only higher-order terms there.
pub fn report_stability(config: &ExperimentConfig) -> Result<StabilityReport> {
    let alg = config.learner.algorithm;
    if !alg.is_value_gradient() {
        return Err(Error::Unsupported(format!(
            "no analytic update matrix for {alg}; stability reports cover value-gradient learners only"
        )));
    }
    let mut report = classify(&config.consts, &config.f, alg.omega())?;
    if let Algorithm::Gdhp { mix } = alg {
        report.transformed = report.transformed.scale(mix);
        report.eigenvalues = eigenvalues_2x2(&report.transformed);
        report.verdict = Verdict::from_eigenvalues(&report.eigenvalues);
        report.max_stable_alpha = max_stable_alpha(&report.eigenvalues);
    }
    Ok(report)
}
