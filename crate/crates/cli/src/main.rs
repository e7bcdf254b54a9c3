use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

mod config;
mod error;
mod experiments;
mod presets;

use config::{Config, Names, Plan};
use error::CliError;
use experiments::Headline;

#[derive(Parser)]
#[command(name = "holonomy", version, about = "Simulate holonomic gates on transmon qubits")]
struct Cli {
    /// Worker threads; HOLONOMY_JOBS takes precedence.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Exit with status 4 if a headline value misses its expected value.
    #[arg(long, global = true)]
    assert: bool,
    /// Output directory, overriding `output.dir`.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML file.
    Run { config: PathBuf },
    /// Run a built-in experiment.
    Preset {
        name: String,
        /// Two-qubit input state, such as fgg or fgf.
        #[arg(long)]
        initial: Option<String>,
        /// Two-qubit Stark compensation.
        #[arg(long)]
        compensation: Option<OnOff>,
    },
    /// List the built-in experiments.
    ListPresets,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (config, default_out) = match &cli.command {
        Command::ListPresets => {
            for p in presets::PRESETS {
                println!("{:<10} {}", p.name, p.summary);
            }
            return Ok(());
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(config)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", config.display())))?;
            (config::parse(&text)?, None)
        }
        Command::Preset { name, initial, compensation } => {
            let preset = presets::find(name).ok_or_else(|| {
                let names: Vec<&str> = presets::PRESETS.iter().map(|p| p.name).collect();
                CliError::config(format!("unknown preset {name:?}; available: {}", names.join(", ")))
            })?;
            let mut cfg = config::parse(preset.text)?;
            apply_two_qubit_overrides(&mut cfg, initial.as_deref(), *compensation)?;
            (cfg, Some(format!("holonomy-out/{name}")))
        }
    };
    configure_pool(cli.jobs)?;
    let out = cli.out.as_ref().map(|p| p.display().to_string()).or(default_out);
    let plan = config.resolve(out.as_deref())?;
    let start = Instant::now();
    let headlines = run_plan(&config, &plan)?;
    let elapsed = start.elapsed().as_secs_f64();
    let values: Vec<String> = headlines.iter().map(|h| format!("{}={:.6}", h.label, h.value)).collect();
    println!("{}: {} ({elapsed:.2} s) -> {}", plan.experiment.kind().name(), values.join(" "), plan.output_dir);
    if cli.assert {
        check_assertions(&plan, &headlines)?;
    }
    Ok(())
}

/// `--initial`/`--compensation` replace the two-qubit inputs; expectations
/// for labels no longer produced are dropped.
fn apply_two_qubit_overrides(cfg: &mut Config, initial: Option<&str>, compensation: Option<OnOff>) -> Result<(), CliError> {
    if initial.is_none() && compensation.is_none() {
        return Ok(());
    }
    let Some(section) = cfg.two_qubit.as_mut().filter(|_| cfg.experiment.as_deref() == Some("two-qubit")) else {
        return Err(CliError::config("--initial and --compensation apply only to two-qubit presets"));
    };
    if let Some(i) = initial {
        section.initial = Some(Names::One(i.to_string()));
    }
    if let Some(c) = compensation {
        section.compensation = Some(vec![matches!(c, OnOff::On)]);
    }
    let labels: Vec<String> = section
        .initial
        .as_ref()
        .map_or_else(|| vec!["fgg".to_string()], Names::to_vec)
        .iter()
        .flat_map(|i| section.compensation.clone().unwrap_or(vec![true]).into_iter().map(move |c| format!("{i}/{}", if c { "on" } else { "off" })))
        .collect();
    if let Some(a) = cfg.assert.as_mut() {
        a.expected.retain(|k, _| labels.contains(k));
        if a.expected.is_empty() {
            cfg.assert = None;
        }
    }
    Ok(())
}

fn configure_pool(jobs: Option<usize>) -> Result<(), CliError> {
    let from_env = match std::env::var("HOLONOMY_JOBS") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| CliError::config(format!("HOLONOMY_JOBS must be a positive integer, got {v:?}")))?),
        Err(_) => None,
    };
    let Some(n) = from_env.or(jobs) else {
        return Ok(());
    };
    if n == 0 {
        return Err(CliError::config("the worker count must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Simulation(format!("cannot start worker pool: {e}")))
}

fn run_plan(config: &Config, plan: &Plan) -> Result<Vec<Headline>, CliError> {
    let dir = Path::new(&plan.output_dir);
    std::fs::create_dir_all(dir)?;
    let echo = toml::to_string(config).map_err(|e| CliError::Simulation(format!("cannot echo config: {e}")))?;
    std::fs::write(dir.join("config.echo"), echo)?;
    let output = experiments::run(&plan.experiment, dir)?;
    let mut report = output.report;
    report["headline"] = output.headlines.iter().map(|h| (h.label.clone(), serde_json::json!(h.value))).collect();
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Simulation(e.to_string()))?;
    std::fs::write(dir.join("report.json"), text + "\n")?;
    Ok(output.headlines)
}

fn check_assertions(plan: &Plan, headlines: &[Headline]) -> Result<(), CliError> {
    let Some(a) = &plan.assert else {
        return Err(CliError::config("--assert needs an [assert] section in the config"));
    };
    let mut misses = Vec::new();
    for (label, expected) in &a.expected {
        match headlines.iter().find(|h| &h.label == label) {
            None => misses.push(format!("{label}: no such result")),
            Some(h) if (h.value - expected).abs() > a.tolerance => {
                misses.push(format!("{label} = {:.6}, expected {expected} ± {}", h.value, a.tolerance))
            }
            Some(_) => {}
        }
    }
    if misses.is_empty() {
        Ok(())
    } else {
        Err(CliError::Assert(misses))
    }
}
