//! Critic-learning algorithms (TD(λ), Sarsa(λ), VGL(λ) and the HDP/DHP/GDHP
//! family) on a three-step benchmark problem, together with an analytic
//! stability analysis of the resulting weight dynamics.

pub mod critic;
pub mod env;
pub mod error;
pub mod harness;
pub mod learners;
pub mod matrix;
pub mod policy;
pub mod stability;

pub use critic::CriticWeights;
pub use env::{ProblemConstants, Trajectory};
pub use error::{Error, Result};
pub use learners::{Algorithm, LearnerConfig, OmegaMode};
pub use matrix::Matrix2;
pub use policy::PolicyKind;
