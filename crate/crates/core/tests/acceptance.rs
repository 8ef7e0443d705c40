//! Acceptance gate. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line each and exits nonzero if any criterion fails.
//!
//! Built with `harness = false` so the summary lines are always visible.

mod common;

use std::time::Instant;

use common::{central_diff, inverse, rel_err, vec_rel_err, Draws};
use critic_divergence::critic::{apply_reparam, critic_gradient, critic_value, critic_weight_jacobians};
use critic_divergence::env::{Environment, ThreeStep};
use critic_divergence::harness::config::{F_LAMBDA0, F_LAMBDA1, PRESET_P0};
use critic_divergence::harness::{emit_csv, format_csv, run_experiment, Outcome, Preset};
use critic_divergence::learners::{sarsa_update, td_update_terms, total_derivatives, vgl_update};
use critic_divergence::matrix::norm;
use critic_divergence::policy::{greedy_action, greedy_action_state_derivative, q_value, unroll};
use critic_divergence::stability::{assemble_a, assemble_d, assemble_omega_factors, eigenvalues_2x2, transform};
use critic_divergence::{Algorithm, CriticWeights, LearnerConfig, Matrix2, OmegaMode, PolicyKind, ProblemConstants};

type Criterion = (&'static str, fn() -> Check);

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn consts(c1: f64, c2: f64, k: f64, lambda: f64) -> ProblemConstants {
    ProblemConstants::new(c1, c2, k, 1.0, lambda).unwrap()
}

fn a_matrix() -> Check {
    let a0 = assemble_a(&consts(0.01, 0.01, 0.01, 0.0));
    let a1 = assemble_a(&consts(0.99, 0.01, 0.01, 1.0));
    let e0 = a0.max_abs_diff(&Matrix2::new(-0.75, 0.5, -24.75, -50.5));
    let e1 = a1.max_abs_diff(&Matrix2::new(-0.2625, -24.75, -0.495, -50.5));
    Check::new(e0 <= 1e-12 && e1 <= 1e-12, format!("max abs err {e0:.1e} (λ=0), {e1:.1e} (λ=1)"))
}

fn transformed_and_eigenvalues() -> Check {
    let m0 = transform(&F_LAMBDA0, &assemble_a(&consts(0.01, 0.01, 0.01, 0.0)), None);
    let e0 = m0.max_abs_diff(&Matrix2::new(117.0, -38.25, 189.0, -27.0));
    let eig0 = eigenvalues_2x2(&m0);
    let re_ok = eig0.iter().all(|mu| (mu.re - 45.0).abs() <= 1e-9);
    let im_ok = eig0.iter().all(|mu| (mu.im.abs() - 45.22).abs() <= 0.01) && eig0[0].im * eig0[1].im < 0.0;

    let m1 = transform(&F_LAMBDA1, &assemble_a(&consts(0.99, 0.01, 0.01, 1.0)), None);
    let e1 = m1.max_abs_diff(&Matrix2::new(2.7665, 0.1295, 4.4954, 0.2222));
    let eig1 = eigenvalues_2x2(&m1);
    let real_pos = eig1.iter().all(|mu| mu.im == 0.0 && mu.re > 0.0);

    Check::new(
        e0 <= 1e-9 && re_ok && im_ok && e1 <= 5e-5 && real_pos,
        format!(
            "λ=0 entries err {e0:.1e}, eig {:.4}±{:.4}i; λ=1 entries err {e1:.1e}, eig {:.4}, {:.4}",
            eig0[0].re,
            eig0[0].im.abs(),
            eig1[0].re,
            eig1[1].re
        ),
    )
}

fn rollout_matches_matrix() -> Check {
    let mut draws = Draws::new(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let lambda = draws.uniform(0.0, 1.0);
        let c = draws.consts(lambda);
        let f = draws.full_rank();
        let w12 = [draws.uniform(-10.0, 10.0), draws.uniform(-10.0, 10.0)];
        let p = inverse(&f).apply(w12);
        let w = apply_reparam(&f, p);
        let cfg = LearnerConfig::new(Algorithm::Vgl, lambda, 1e-3, 1.0).unwrap();
        let traj = unroll(0.0, PolicyKind::GreedyAnalytic, &w, &c).unwrap();
        let dw = vgl_update(&traj, &w, &c, &cfg, OmegaMode::Identity).unwrap();
        let dp = f.transpose().apply([dw[0], dw[1]]);
        let want = transform(&f, &assemble_a(&c), None).apply(p);
        let want = [cfg.alpha * want[0], cfg.alpha * want[1]];
        worst = worst.max(vec_rel_err(dp, want));
    }
    Check::new(worst <= 1e-9, format!("1000 draws, worst relative err {worst:.1e}"))
}

fn runs_diverge() -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for preset in [Preset::Vgl0Div, Preset::Vgl1Div, Preset::VglOmega0Div] {
        let cfg = preset.config();
        let bound = 1e4 * norm(cfg.p0);
        let start = Instant::now();
        let trace = run_experiment(&cfg).unwrap();
        let ok = matches!(trace.outcome, Outcome::Diverged { at } if at <= 10_000_000) && trace.max_norm() > bound;
        pass &= ok && cfg.learner.alpha == 1e-6 && cfg.p0 == PRESET_P0;
        parts.push(format!(
            "{preset} {} ({:.1}s)",
            trace.outcome,
            start.elapsed().as_secs_f64()
        ));
    }
    Check::new(pass, parts.join("; "))
}

fn run_converges() -> Check {
    let cfg = Preset::VglOmega1Conv.config();
    let trace = run_experiment(&cfg).unwrap();
    let floor = trace.rows.iter().map(|r| r.p_norm).fold(f64::INFINITY, f64::min);
    // The first recorded block holds the transient.
    let settled: Vec<f64> = trace.rows.iter().filter(|r| r.iteration >= 1000).map(|r| r.p_norm).collect();
    let monotone = settled.windows(2).all(|w| w[1] <= w[0]);
    Check::new(
        cfg.learner.alpha == 1e-3 && floor < 1e-9 && monotone,
        format!("{}, min |p| {floor:.3e}, monotone after transient: {monotone}", trace.outcome),
    )
}

fn noisy_runs_diverge() -> Check {
    let p0 = norm(PRESET_P0);
    let mut pass = true;
    let mut parts = Vec::new();
    for preset in [Preset::Td0Div, Preset::Sarsa0Div, Preset::Td1Div, Preset::Sarsa1Div] {
        let lambda_zero = preset.config().learner.lambda == 0.0;
        for seed in 1..=3 {
            let mut cfg = preset.config();
            cfg.seed = seed;
            // Run the full length; only the upper bound may end it early.
            cfg.divergence_threshold = 0.1;
            let trace = run_experiment(&cfg).unwrap();
            let peak = trace.max_norm() / p0;
            let ok = if lambda_zero {
                peak > 10.0 && !matches!(trace.outcome, Outcome::Diverged { .. })
            } else {
                peak > 100.0
            };
            pass &= ok;
            parts.push(format!("{preset}/s{seed} peak {peak:.3}|p0|"));
        }
    }
    Check::new(pass, parts.join(", "))
}

fn sarsa_is_shifted_td() -> Check {
    let mut draws = Draws::new(7);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let lambda = draws.uniform(0.0, 1.0);
        let c = draws.consts(lambda);
        let w = CriticWeights::from_array(std::array::from_fn(|_| draws.uniform(-5.0, 5.0)));
        let kind = PolicyKind::NoisyGreedy {
            noise_variance: 0.25,
            seed: i,
        };
        let traj = unroll(0.0, kind, &w, &c).unwrap();
        let td = LearnerConfig::new(Algorithm::Td, lambda, 1.0, 1.0).unwrap();
        let sarsa = LearnerConfig::new(Algorithm::Sarsa, lambda, 1.0, 1.0).unwrap();
        let terms = td_update_terms(&traj, &w, &c, &td).unwrap();
        let got = sarsa_update(&traj, &w, &c, &sarsa).unwrap();
        let scale = terms.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        for j in 0..4 {
            let want: f64 = terms[1..].iter().map(|t| t[j]).sum();
            worst = worst.max((got[j] - want).abs() / scale);
        }
    }
    Check::new(
        worst <= 1e-13,
        format!("1000 draws, worst err {worst:.1e} relative to the largest term"),
    )
}

fn omega_factorisation() -> Check {
    let mut draws = Draws::new(11);
    let (mut identity, mut det_b, mut sym) = (0.0f64, 0.0f64, 0.0f64);
    let mut definite = true;
    for _ in 0..100 {
        let c = draws.consts(1.0);
        let factors = match assemble_omega_factors(&c) {
            Ok(f) => f,
            Err(e) => return Check::new(false, e.to_string()),
        };
        let a = assemble_a(&c);
        identity = identity.max(a.max_abs_diff(&factors.product()) / a.max_abs());
        let want = c.k * (c.k + 2.0) * (c.k + c.c2).powi(2);
        det_b = det_b.max((factors.b.det() - want).abs() / want.abs());

        let m = transform(&draws.full_rank(), &a, Some(&assemble_d(&c)));
        sym = sym.max((m.m12 - m.m21).abs() / m.max_abs());
        definite &= eigenvalues_2x2(&m).iter().all(|mu| mu.re < 0.0);
    }
    Check::new(
        identity <= 1e-12 && det_b <= 1e-12 && sym <= 1e-12 && definite,
        format!(
            "100 draws: 2EBED err {identity:.1e}, det(B) err {det_b:.1e}, asymmetry {sym:.1e}, negative definite: {definite}"
        ),
    )
}

fn gradient_oracles() -> Check {
    const H: f64 = 1e-5;
    let mut draws = Draws::new(13);
    let mut worst = [0.0f64; 6];
    let names = ["critic gradient", "weight jacobians", "model/reward jacobians", "dπ/dx", "Df/Dx, Dr/Dx", "dQ/da at greedy"];
    for _ in 0..300 {
        let lambda = draws.uniform(0.0, 1.0);
        let mut c = draws.consts(lambda);
        c.gamma = draws.uniform(0.5, 1.0);
        let env = ThreeStep::from_constants(&c);
        let w = CriticWeights::from_array(std::array::from_fn(|_| draws.uniform(-3.0, 3.0)));
        let x = draws.uniform(-3.0, 3.0);
        let a = draws.uniform(-3.0, 3.0);

        for t in 0..=3 {
            let fd = central_diff(|x| critic_value(x, t, &w, &c).unwrap(), x, H);
            worst[0] = worst[0].max(rel_err(critic_gradient(x, t, &w, &c).unwrap(), fd));

            let j = critic_weight_jacobians(x, t);
            for i in 0..4 {
                let at = |wi: f64| {
                    let mut arr = w.to_array();
                    arr[i] = wi;
                    CriticWeights::from_array(arr)
                };
                let wi = w.to_array()[i];
                let dv = central_diff(|v| critic_value(x, t, &at(v), &c).unwrap(), wi, H);
                let dg = central_diff(|v| critic_gradient(x, t, &at(v), &c).unwrap(), wi, H);
                worst[1] = worst[1].max(rel_err(j.dv_dw[i], dv)).max(rel_err(j.dg_dw[i], dg));
            }
        }

        for t in 0..3 {
            let j = env.jacobians(x, t, a).unwrap();
            let pairs = [
                (j.df_dx, central_diff(|x| env.model(x, t, a).unwrap(), x, H)),
                (j.df_da, central_diff(|a| env.model(x, t, a).unwrap(), a, H)),
                (j.dr_dx, central_diff(|x| env.reward(x, t, a).unwrap(), x, H)),
                (j.dr_da, central_diff(|a| env.reward(x, t, a).unwrap(), a, H)),
            ];
            for (got, fd) in pairs {
                worst[2] = worst[2].max(rel_err(got, fd));
            }

            let pi = |x: f64| greedy_action(x, t, &w, &c).unwrap();
            let fd = central_diff(pi, x, H);
            worst[3] = worst[3].max(rel_err(greedy_action_state_derivative(t, &c), fd));

            let fd = central_diff(|a| q_value(x, t, a, &w, &c).unwrap(), pi(x), H);
            worst[5] = worst[5].max(rel_err(0.0, fd));
        }

        let traj = unroll(x, PolicyKind::GreedyAnalytic, &w, &c).unwrap();
        for (s, (dr, df)) in traj.steps.iter().zip(total_derivatives(&traj, &c).unwrap()) {
            let t = s.t;
            let pi = |x: f64| greedy_action(x, t, &w, &c).unwrap();
            let fd_f = central_diff(|x| env.model(x, t, pi(x)).unwrap(), s.x, H);
            let fd_r = central_diff(|x| env.reward(x, t, pi(x)).unwrap(), s.x, H);
            worst[4] = worst[4].max(rel_err(df, fd_f)).max(rel_err(dr, fd_r));
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    let detail = names
        .iter()
        .zip(worst)
        .map(|(n, e)| format!("{n} {e:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    Check::new(max <= 1e-6, format!("300 draws: {detail}"))
}

fn byte_identical_reruns() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut differing = Vec::new();
    for preset in Preset::ALL {
        let first = run_experiment(&preset.config()).unwrap();
        let second = run_experiment(&preset.config()).unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        emit_csv(&first, &a).unwrap();
        emit_csv(&second, &b).unwrap();
        let same = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap()
            && format_csv(&first) == format_csv(&second);
        if !same {
            differing.push(preset.name());
        }
        pass &= same;
    }
    let detail = if pass {
        format!("all {} presets", Preset::ALL.len())
    } else {
        format!("differing: {}", differing.join(", "))
    };
    Check::new(pass, detail)
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("update matrix A", a_matrix),
        ("FᵀAF and eigenvalues", transformed_and_eigenvalues),
        ("rollout update equals α·FᵀAF·p", rollout_matches_matrix),
        ("deterministic divergence presets", runs_diverge),
        ("VGLΩ(1) convergence", run_converges),
        ("noisy TD/Sarsa divergence, seeds 1-3", noisy_runs_diverge),
        ("Sarsa equals TD without its first term", sarsa_is_shifted_td),
        ("Ω factorisation algebra", omega_factorisation),
        ("finite-difference gradient oracles", gradient_oracles),
        ("byte-identical reruns", byte_identical_reruns),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let c = check();
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} {status} {name}: {} [{:.1}s]",
            c.detail,
            start.elapsed().as_secs_f64()
        );
        if !c.pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
