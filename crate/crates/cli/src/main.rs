//! `iasim`: seeded Monte-Carlo and closed-form experiments for interference
//! alignment under correlated channels and imperfect CSI.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use iasim_core::experiments::{self, Output, Preset, RunOptions, Table};
use iasim_core::link_level::SinrModel;
use iasim_core::Scenario;

#[derive(Parser)]
#[command(name = "iasim", version, about = "Interference-alignment SINR experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo SINR, rate and SER per stream for a config or preset.
    Simulate(RunArgs),
    /// Closed-form means, pdfs, rates, SERs and ratio surfaces.
    Analytic(RunArgs),
    /// Monte-Carlo against closed form, for a config or a figure preset.
    Compare(RunArgs),
    /// Print the available figure presets.
    ListPresets,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file in the key-value format.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Figure preset.
    #[arg(long)]
    preset: Option<Preset>,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config or preset seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config or preset trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// How imperfect CSI enters the SINR.
    #[arg(long, default_value = "instantaneous")]
    sinr_model: SinrModel,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    build_id: String,
    preset: Option<Preset>,
    scenario: Option<&'a Scenario>,
    seed: u64,
    sinr_model: &'a str,
    trials: usize,
    discard_count: usize,
    unconverged_count: usize,
    wall_time_s: f64,
    outputs: Vec<String>,
    schemas: BTreeMap<&'static str, u32>,
    summary: &'a BTreeMap<String, f64>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let (name, args) = match &cli.command {
        Command::ListPresets => {
            for p in Preset::ALL {
                println!("{:<6} trials={:<6} {}", p.name(), p.default_trials(), p.description());
            }
            return Ok(());
        }
        Command::Simulate(a) => ("simulate", a),
        Command::Analytic(a) => ("analytic", a),
        Command::Compare(a) => ("compare", a),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.threads.unwrap_or(0)).build()?;
    pool.install(|| execute(name, args))
}

fn load_scenario(args: &RunArgs) -> Result<Option<Scenario>> {
    let Some(path) = &args.config else { return Ok(None) };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut sc = Scenario::parse_config(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    if let Some(trials) = args.trials {
        sc.trials = trials;
    }
    sc.validate()?;
    Ok(Some(sc))
}

fn execute(command: &str, args: &RunArgs) -> Result<()> {
    let started = Instant::now();
    let scenario = load_scenario(args)?;
    let opts = RunOptions { trials: args.trials, seed: args.seed.unwrap_or(1), model: args.sinr_model };

    let output = match (&scenario, args.preset) {
        (Some(sc), _) => match command {
            "simulate" => experiments::simulate(sc, args.sinr_model)?,
            "analytic" => experiments::analytic_tables(sc)?,
            _ => compare_config(sc, args.sinr_model)?,
        },
        (None, Some(preset)) => {
            if command == "analytic" && preset != Preset::Fig6 {
                bail!("preset {preset} needs Monte-Carlo; use `simulate` or `compare`");
            }
            experiments::run_preset(preset, &opts)?
        }
        (None, None) => bail!("either --config or --preset is required"),
    };

    if output.trials > 0 && output.discarded as f64 / output.trials as f64 >= 1e-3 {
        eprintln!("warning: {} of {} trials discarded as degenerate", output.discarded, output.trials);
    }

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut outputs = Vec::new();
    let mut schemas = BTreeMap::new();
    for table in &output.tables {
        let file = format!("{}.csv", table.schema.name);
        write_csv(&args.out.join(&file), table)?;
        schemas.insert(table.schema.name, table.schema.version);
        outputs.push(file);
    }
    outputs.push("manifest.json".into());

    let manifest = RunManifest {
        command,
        build_id: format!("iasim {}", env!("CARGO_PKG_VERSION")),
        preset: args.preset,
        scenario: scenario.as_ref(),
        seed: scenario.as_ref().map_or(opts.seed, |s| s.seed),
        sinr_model: args.sinr_model.name(),
        trials: output.trials,
        discard_count: output.discarded,
        unconverged_count: output.unconverged,
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs,
        schemas,
        summary: &output.summary,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(args.out.join("manifest.json"), json + "\n")?;
    for (k, v) in &output.summary {
        println!("{k} = {v}");
    }
    Ok(())
}

/// Monte-Carlo and closed-form tables for one scenario, with the relative
/// sum-rate gap per SNR point in the summary.
fn compare_config(sc: &Scenario, model: SinrModel) -> Result<Output> {
    let mut out = experiments::simulate(sc, model)?;
    let analytic = experiments::analytic_tables(sc)?;
    let sums = &out.tables[1];
    for row in &sums.rows {
        let (g, emp, law) = (&row[0], &row[3], &row[4]);
        if let (experiments::Cell::Float(emp), experiments::Cell::Float(law)) = (emp, law) {
            out.summary.insert(format!("sum_rate_rel_error_{g}dB"), (emp - law) / law);
        }
    }
    out.tables.extend(analytic.tables);
    Ok(out)
}

fn write_csv(path: &Path, table: &Table) -> Result<()> {
    table.validate()?;
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(table.schema.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
