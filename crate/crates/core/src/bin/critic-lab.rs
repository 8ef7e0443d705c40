use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use critic_divergence::harness::{
    emit_csv, format_csv, report_stability, run_experiment, ExperimentConfig, Expectation, Outcome, Preset,
    Settings,
};
use critic_divergence::{Error, Result};

#[derive(Parser)]
#[command(name = "critic-lab", version, about = "Critic-learning divergence experiments on the three-step problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a learning experiment and write its |p| trace as CSV.
    Run(Params),
    /// Print the analytic stability report for a value-gradient config.
    Stability {
        #[command(flatten)]
        params: Params,
        /// Print flat key=value lines instead of the text report.
        #[arg(long)]
        record: bool,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Args, Default)]
struct Params {
    /// key=value file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// td, sarsa, vgl, vglomega, hdp, dhp, gdhp or gdhp:<mix>
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    c1: Option<String>,
    #[arg(long)]
    c2: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    /// Reparametrization matrix, row-major: a,b,c,d
    #[arg(long = "F", value_name = "a,b,c,d", allow_hyphen_values = true)]
    f: Option<String>,
    #[arg(long, value_name = "p1,p2", allow_hyphen_values = true)]
    p0: Option<String>,
    #[arg(long, value_name = "w3,w4", allow_hyphen_values = true)]
    w34: Option<String>,
    #[arg(long)]
    iterations: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    noise_var: Option<String>,
    #[arg(long)]
    record_every: Option<String>,
    #[arg(long)]
    divergence_threshold: Option<String>,
    #[arg(long)]
    convergence_threshold: Option<String>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Params {
    fn settings(&self) -> Result<Settings> {
        let mut settings = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::new(),
        };
        let mut flags = Settings::new();
        let pairs = [
            ("preset", &self.preset),
            ("algorithm", &self.algorithm),
            ("lambda", &self.lambda),
            ("alpha", &self.alpha),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("k", &self.k),
            ("gamma", &self.gamma),
            ("F", &self.f),
            ("p0", &self.p0),
            ("w34", &self.w34),
            ("iterations", &self.iterations),
            ("seed", &self.seed),
            ("noise-var", &self.noise_var),
            ("record-every", &self.record_every),
            ("divergence-threshold", &self.divergence_threshold),
            ("convergence-threshold", &self.convergence_threshold),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                flags.set(key, v.clone())?;
            }
        }
        if let Some(out) = &self.out {
            flags.set("out", out.display().to_string())?;
        }
        settings.merge(&flags);
        Ok(settings)
    }
}

fn outcome_matches(expect: Expectation, outcome: &Outcome) -> bool {
    matches!(
        (expect, outcome),
        (Expectation::Diverge, Outcome::Diverged { .. }) | (Expectation::Converge, Outcome::Converged { .. })
    )
}

fn run(params: &Params) -> Result<ExitCode> {
    let settings = params.settings()?;
    let config = ExperimentConfig::from_settings(&settings)?;
    let preset = settings.get("preset").map(str::parse::<Preset>).transpose()?;
    let trace = run_experiment(&config)?;

    match settings.get("out") {
        Some(path) => emit_csv(&trace, &PathBuf::from(path))?,
        None => print!("{}", format_csv(&trace)),
    }
    let last = trace.last().map_or(f64::NAN, |r| r.p_norm);
    eprintln!("{} ({}): |p| = {last:.6e}", config.learner.algorithm, trace.outcome);

    if let Ok(report) = report_stability(&config) {
        eprintln!("predicted: {}", report.verdict);
    }
    if let Some(preset) = preset {
        if !outcome_matches(preset.expectation(), &trace.outcome) {
            eprintln!("{preset}: outcome does not match the expected {:?}", preset.expectation());
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn stability(params: &Params, record: bool) -> Result<ExitCode> {
    let config = ExperimentConfig::from_settings(&params.settings()?)?;
    let report = report_stability(&config)?;
    if record {
        print!("{}", report.record());
    } else {
        println!("{report}");
    }
    Ok(ExitCode::SUCCESS)
}

fn presets() -> ExitCode {
    for p in Preset::ALL {
        let c = p.config();
        println!(
            "{:<16} {:<10} lambda={} alpha={:e} c1={} noise-var={:e} expect={:?}",
            p.name(),
            c.learner.algorithm.to_string(),
            c.learner.lambda,
            c.learner.alpha,
            c.consts.c1,
            c.noise_variance,
            p.expectation()
        );
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(params) => run(params),
        Command::Stability { params, record } => stability(params, *record),
        Command::Presets => Ok(presets()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Io { .. } = e {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
