#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod report;

use config::ScenarioConfig;
use report::{timestamp, write_json, ErrorRecord, Provenance, RunReport, TOOL, VERSION};

#[derive(Parser)]
#[command(name = "lattice-heat", version, about = "Heat transport in a damped quantum harmonic chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// TOML scenario file; omitted tables and keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides LATTICE_HEAT_OUT and meta.output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Diffusion coefficients, source density and heat capacity over a temperature sweep.
    Coefficients(Common),
    /// Relax a hotspot on the chain through the moment equations.
    Relax(Common),
    /// Run a hotspot on the chain and in the continuum equation side by side.
    Compare(Common),
    /// Continuum and mode-sum conductivities over a temperature sweep.
    Conductivity(Common),
    /// Phonon frequencies and group velocities on the ring's mode grid.
    Dispersion(Common),
    /// Run every acceptance check with the natural-unit defaults.
    Verify(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Coefficients(c) => ("coefficients", c),
            Command::Relax(c) => ("relax", c),
            Command::Compare(c) => ("compare", c),
            Command::Conductivity(c) => ("conductivity", c),
            Command::Dispersion(c) => ("dispersion", c),
            Command::Verify(c) => ("verify", c),
        }
    }
}

const EXIT_CRITERIA: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 4;

fn classify(err: &anyhow::Error) -> (&'static str, u8, Vec<String>) {
    use lattice_heat::Error as E;
    if let Some(e) = err.downcast_ref::<E>() {
        return match e {
            E::InvalidParams(v) => ("config", EXIT_CONFIG, v.clone()),
            E::NegativeTemperature(_) | E::MomentumDisplacement(_) | E::Dimension { .. } | E::ZeroModeDivergence(_) => {
                ("config", EXIT_CONFIG, vec![e.to_string()])
            }
            E::Cfl { .. } | E::NotPsd { .. } | E::NotHurwitz { .. } | E::Quadrature { .. } | E::Singular(_) | E::CoarseSampling(_) => {
                ("numerical", EXIT_NUMERICAL, vec![e.to_string()])
            }
        };
    }
    if err.downcast_ref::<toml::de::Error>().is_some() {
        return ("config", EXIT_CONFIG, err.chain().map(|c| c.to_string()).collect());
    }
    ("io", EXIT_IO, err.chain().map(|c| c.to_string()).collect())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, common) = cli.command.parts();
    let started_at = timestamp();

    let fail = |err: anyhow::Error, out: Option<&PathBuf>| -> ExitCode {
        let (kind, code, details) = classify(&err);
        let record = ErrorRecord {
            tool: TOOL.into(),
            subcommand: name.into(),
            kind: kind.into(),
            message: err.to_string(),
            details,
            exit_code: code as i32,
        };
        eprintln!("{}", serde_json::to_string(&record).unwrap_or_else(|_| err.to_string()));
        if let Some(dir) = out {
            if std::fs::create_dir_all(dir).is_ok() {
                let _ = write_json(&dir.join("error.json"), &record);
            }
        }
        ExitCode::from(code)
    };

    let mut config = match &common.config {
        Some(path) => match ScenarioConfig::load(path) {
            Ok(c) => c,
            Err(e) => return fail(e, common.out.as_ref()),
        },
        None => ScenarioConfig::default(),
    };
    let out = config.resolve_output_dir(common.out.clone());
    if let Err(e) = std::fs::create_dir_all(&out) {
        return fail(anyhow::Error::new(e).context(format!("creating {}", out.display())), None);
    }
    log::info!("{name}: writing to {}", out.display());

    let result = match cli.command {
        Command::Coefficients(_) => commands::coefficients(&config, &out),
        Command::Relax(_) => commands::relax(&config, &out),
        Command::Compare(_) => commands::compare(&config, &out),
        Command::Conductivity(_) => commands::conductivity(&config, &out),
        Command::Dispersion(_) => commands::dispersion_table(&config, &out),
        Command::Verify(_) => commands::verify(&config, &out),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => return fail(e, Some(&out)),
    };
    for flag in &outcome.flags {
        log::warn!("{flag}");
    }

    let report = RunReport {
        tool: TOOL.into(),
        subcommand: name.into(),
        status: if outcome.failed_criteria { "criteria_failed" } else { "ok" }.into(),
        summary: outcome.summary,
        artifacts: outcome
            .artifacts
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
        flags: outcome.flags,
        details: outcome.details,
        provenance: Provenance {
            config,
            version: VERSION.into(),
            started_at,
            finished_at: timestamp(),
            command_line: std::env::args().collect(),
        },
    };
    let report_path = out.join(format!("{name}_report.json"));
    if let Err(e) = write_json(&report_path, &report) {
        return fail(e, None);
    }
    println!("{}", report_path.display());
    if outcome.failed_criteria {
        ExitCode::from(EXIT_CRITERIA)
    } else {
        ExitCode::SUCCESS
    }
}
