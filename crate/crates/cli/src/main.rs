use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use symplanar_cli::{run, BodySpec, HarnessError, RunStatus, Scenario, ScenarioConfig};

/// Numerical experiments on smooth convex bodies in R^2n.
///
/// Log level is read from SYMPLANAR_LOG (default `warn`).
#[derive(Debug, Parser)]
#[command(name = "symplanar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, overriding the config.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Body as inline JSON, overriding the config.
    #[arg(long, global = true)]
    body: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Survey closed characteristics from random starts.
    Survey,
    /// Volume, EHZ capacity and Viterbo ratio.
    Viterbo,
    /// Double polar identities and the Santalo product.
    Polar,
    /// Planar section and its maximal inscribed ellipse.
    John,
    /// Outer billiard trajectory, optionally with good points.
    Billiard,
    /// Periods along a tangent line.
    Scan,
    /// Finite-difference symplecticity of the outer billiard map.
    SympCheck,
    /// Closed-form reference values for the ball and a diagonal ellipsoid.
    #[command(name = "paper-examples")]
    ReferenceExamples,
}

impl Command {
    fn scenario(self) -> Scenario {
        match self {
            Command::Survey => Scenario::CharacteristicSurvey,
            Command::Viterbo => Scenario::ViterboReport,
            Command::Polar => Scenario::PolarCheck,
            Command::John => Scenario::JohnCheck,
            Command::Billiard => Scenario::OuterBilliard,
            Command::Scan => Scenario::PeriodScan,
            Command::SympCheck => Scenario::SymplecticityCheck,
            Command::ReferenceExamples => Scenario::ReferenceExamples,
        }
    }
}

fn load(cli: &Cli) -> Result<ScenarioConfig, HarnessError> {
    let scenario = cli.command.scenario();
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))?;
            ScenarioConfig::from_json(&text)?
        }
        None => ScenarioConfig::new(scenario),
    };
    if config.scenario != scenario {
        return Err(HarnessError::Validation(format!(
            "config is for scenario {}, not {}",
            config.scenario.name(),
            scenario.name()
        )));
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(threads) = cli.threads {
        config.threads = Some(threads);
    }
    if let Some(body) = &cli.body {
        config.body = serde_json::from_str::<BodySpec>(body)
            .map_err(|e| HarnessError::Validation(format!("--body: {e}")))?;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SYMPLANAR_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = load(&cli).and_then(|config| {
        let report = run(&config)?;
        Ok((config, report))
    });
    match result {
        Ok((config, report)) => {
            debug_assert_eq!(report.status, RunStatus::Ok);
            println!(
                "{} finished in {:.2}s; report at {}",
                report.scenario.name(),
                report.wall_clock_seconds,
                config.output_dir.join("report.json").display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("symplanar: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
