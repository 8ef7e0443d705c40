//! Analytic update matrices for the value-gradient learners on the
//! three-step problem, and stability classification of `Δp = α·M·p`.
//!
//! Along a greedy rollout from x₀ = 0 with γ = 1 the VGL(λ) update on
//! `(w1, w2)` is exactly linear: `Δw = α·A·w`, or `Δw = α·D·A·w` when the
//! Ω weighting is used. With `w = F·p` the update in p becomes
//! `Δp = α·Fᵀ·A·F·p` (resp. `α·Fᵀ·D·A·F·p`).

use std::fmt;

use num_complex::Complex64;

use crate::env::ProblemConstants;
use crate::error::{Error, Result};
use crate::learners::OmegaMode;
pub use crate::matrix::Matrix2;

/// Half-width of the band around zero in which a spectrum is reported as marginal.
pub const MARGINAL_TOL: f64 = 1e-12;

/// Jacobian of the VGL(λ) update in `(w1, w2)` (unit Ω, γ = 1).
pub fn assemble_a(consts: &ProblemConstants) -> Matrix2 {
    let ProblemConstants { c1, c2, k, lambda, .. } = *consts;
    let c1k = c1 + k;
    let c2k = c2 + k;
    Matrix2::new(
        -k * (k * lambda + c2 * c2 + k * (1.0 - lambda) * c2) / (c1k * c2k * c2k) - k / c1k,
        k * (c2 + k - lambda * (k + 1.0)) / (c2k * c2k),
        k * (c2 - 1.0) / (c2k * c1k),
        (-1.0 - k) / c2k,
    )
}

/// `Fᵀ·A·F`, or `Fᵀ·D·A·F` when `d` is given.
pub fn transform(f: &Matrix2, a: &Matrix2, d: Option<&Matrix2>) -> Matrix2 {
    let inner = match d {
        Some(d) => *d * *a,
        None => *a,
    };
    f.transpose() * inner * *f
}

/// Roots of `μ² − tr·μ + det`, larger real part first.
pub fn eigenvalues_2x2(m: &Matrix2) -> [Complex64; 2] {
    let half_tr = 0.5 * m.trace();
    // (tr/2)² − det without the cancellation of the textbook form
    let half_diff = 0.5 * (m.m11 - m.m22);
    let disc = half_diff * half_diff + m.m12 * m.m21;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let big = if half_tr >= 0.0 { half_tr + s } else { half_tr - s };
        let small = if big != 0.0 { m.det() / big } else { 0.0 };
        let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
        [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [Complex64::new(half_tr, s), Complex64::new(half_tr, -s)]
    }
}

/// Diagonal Ω matrix `D = diag(1/(2(c1+k)), 1/(2(c2+k)))`.
pub fn assemble_d(consts: &ProblemConstants) -> Matrix2 {
    Matrix2::diag(0.5 / (consts.c1 + consts.k), 0.5 / (consts.c2 + consts.k))
}

/// Factors of the λ = 1 update matrix, `A = 2·E·B·E·D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaFactors {
    pub d: Matrix2,
    pub e: Matrix2,
    pub b: Matrix2,
}

impl OmegaFactors {
    /// `2·E·B·E·D`.
    pub fn product(&self) -> Matrix2 {
        (self.e * self.b * self.e * self.d).scale(2.0)
    }
}

/// Builds D, E and B and checks that `A(λ=1) = 2·E·B·E·D` holds to 1e-12 relative.
pub fn assemble_omega_factors(consts: &ProblemConstants) -> Result<OmegaFactors> {
    let ProblemConstants { c2, k, .. } = *consts;
    let c2k = c2 + k;
    let factors = OmegaFactors {
        d: assemble_d(consts),
        e: Matrix2::diag(1.0 / c2k, 1.0),
        b: Matrix2::new(
            -k * (k + c2 * c2 + c2k * c2k),
            k * (c2 - 1.0),
            k * (c2 - 1.0),
            -1.0 - k,
        ),
    };
    let a1 = assemble_a(&consts.with_lambda(1.0));
    let err = a1.max_abs_diff(&factors.product());
    if err.is_nan() || err > 1e-12 * a1.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::IdentityCheck(format!(
            "A(λ=1) differs from 2·E·B·E·D by {err:e}"
        )));
    }
    Ok(factors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl Verdict {
    pub fn from_eigenvalues(eigs: &[Complex64; 2]) -> Self {
        let max_re = eigs[0].re.max(eigs[1].re);
        if max_re > MARGINAL_TOL {
            Self::Unstable
        } else if max_re < -MARGINAL_TOL {
            Self::Stable
        } else {
            Self::Marginal
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Stable => "Stable",
            Self::Unstable => "Unstable",
            Self::Marginal => "Marginal",
        })
    }
}

/// Largest α for which `p ← (I + α·M)·p` contracts, given a stable spectrum:
/// `min_i −2·Re μ_i / |μ_i|²`. `None` unless every real part is negative.
pub fn max_stable_alpha(eigs: &[Complex64; 2]) -> Option<f64> {
    if eigs.iter().any(|mu| mu.re >= 0.0) {
        return None;
    }
    Some(
        eigs.iter()
            .map(|mu| -2.0 * mu.re / mu.norm_sqr())
            .fold(f64::INFINITY, f64::min),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub consts: ProblemConstants,
    pub f: Matrix2,
    pub omega: OmegaMode,
    pub a: Matrix2,
    pub d: Option<Matrix2>,
    pub transformed: Matrix2,
    pub eigenvalues: [Complex64; 2],
    pub verdict: Verdict,
    pub max_stable_alpha: Option<f64>,
}

/// Assembles the update matrix for `(consts, F, Ω)` and classifies it.
pub fn classify(consts: &ProblemConstants, f: &Matrix2, omega: OmegaMode) -> Result<StabilityReport> {
    consts.validate()?;
    if consts.gamma != 1.0 {
        return Err(Error::Unsupported(format!(
            "the analytic update matrix is derived for gamma = 1, got {}",
            consts.gamma
        )));
    }
    let a = assemble_a(consts);
    let d = match omega {
        OmegaMode::Identity => None,
        OmegaMode::Curvature => Some(assemble_d(consts)),
    };
    let transformed = transform(f, &a, d.as_ref());
    let eigenvalues = eigenvalues_2x2(&transformed);
    Ok(StabilityReport {
        consts: *consts,
        f: *f,
        omega,
        a,
        d,
        transformed,
        eigenvalues,
        verdict: Verdict::from_eigenvalues(&eigenvalues),
        max_stable_alpha: max_stable_alpha(&eigenvalues),
    })
}

impl StabilityReport {
    /// Flat `key=value` lines.
    pub fn record(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        let c = &self.consts;
        for (k, v) in [("c1", c.c1), ("c2", c.c2), ("k", c.k), ("gamma", c.gamma), ("lambda", c.lambda)] {
            put(k, format!("{v:e}"));
        }
        put(
            "omega",
            match self.omega {
                OmegaMode::Identity => "identity".into(),
                OmegaMode::Curvature => "curvature".into(),
            },
        );
        for (name, m) in [("f", Some(self.f)), ("a", Some(self.a)), ("d", self.d), ("m", Some(self.transformed))] {
            if let Some(m) = m {
                for (suffix, v) in ["11", "12", "21", "22"].iter().zip(m.entries()) {
                    put(&format!("{name}{suffix}"), format!("{v:e}"));
                }
            }
        }
        for (i, mu) in self.eigenvalues.iter().enumerate() {
            put(&format!("eig{}_re", i + 1), format!("{:e}", mu.re));
            put(&format!("eig{}_im", i + 1), format!("{:e}", mu.im));
        }
        put("verdict", self.verdict.to_string());
        put(
            "max_stable_alpha",
            self.max_stable_alpha.map_or("none".into(), |a| format!("{a:e}")),
        );
        out
    }
}

impl fmt::Display for StabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.consts;
        writeln!(
            f,
            "constants: c1={} c2={} k={} gamma={} lambda={}",
            c.c1, c.c2, c.k, c.gamma, c.lambda
        )?;
        writeln!(
            f,
            "omega: {}",
            match self.omega {
                OmegaMode::Identity => "identity",
                OmegaMode::Curvature => "curvature",
            }
        )?;
        writeln!(f, "A =\n{:.6}", self.a)?;
        if let Some(d) = &self.d {
            writeln!(f, "D =\n{d:.6}")?;
        }
        writeln!(f, "F =\n{:.6}", self.f)?;
        let label = if self.d.is_some() { "FᵀDAF" } else { "FᵀAF" };
        writeln!(f, "{label} =\n{:.6}", self.transformed)?;
        for mu in &self.eigenvalues {
            if mu.im == 0.0 {
                writeln!(f, "eigenvalue: {:.6}", mu.re)?;
            } else {
                writeln!(f, "eigenvalue: {:.6} {:+.6}i", mu.re, mu.im)?;
            }
        }
        writeln!(f, "verdict: {}", self.verdict)?;
        match self.max_stable_alpha {
            Some(a) => write!(f, "max stable alpha (discrete iteration): {a:.6e}"),
            None => write!(f, "max stable alpha (discrete iteration): none"),
        }
    }
}
