//! Command-line front end: single trials, batch sweeps and re-aggregation
//! of raw results.
//!
//! Exit codes: 0 on success, 1 on configuration errors, 2 when a sweep
//! finished with failed trials.

mod config;

use aggsim_core::engine::Trial;
use aggsim_core::harness::{self, files, PlannedTrial, SweepSpec, TrialRecord};
use aggsim_core::Error;
use clap::{Args, Parser, Subcommand};
use config::{FileConfig, Settings};
use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

#[derive(Parser)]
#[command(
    name = "aggsim",
    about = "Deterministic simulator for site-selective robot swarm aggregation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trial and write its result files.
    Run(RunArgs),
    /// Run a grid of repeated trials and write raw records, summaries and
    /// heatmap CSVs. Resumes from existing raw records.
    Sweep(SweepArgs),
    /// Recompute summaries and heatmaps from an existing raw results file.
    Stats(StatsArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (flat TOML; all keys optional).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    /// Print progress information.
    #[arg(long, short, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    swarm_size: Option<u32>,
    #[arg(long)]
    rho_informed: Option<f64>,
    #[arg(long)]
    rho_black: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    tick_dt: Option<f64>,
    /// Record the occupancy time series in the result.
    #[arg(long)]
    timeseries: bool,
    /// Write a per-robot trajectory CSV alongside the result.
    #[arg(long)]
    dump_trajectory: bool,
    /// Seconds between trajectory samples.
    #[arg(long, default_value_t = 1.0)]
    trajectory_stride: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sweep the full canonical grid (both sizes, all proportions, both
    /// variants, 20 trials per cell).
    #[arg(long)]
    full_grid: bool,
    #[arg(long, value_delimiter = ',')]
    swarm_sizes: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    rho_informed_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    rho_black_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
    /// Trials per grid cell.
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    tick_dt: Option<f64>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    /// Raw results file (.csv or .jsonl) produced by `sweep`.
    #[arg(long)]
    raw: PathBuf,
    /// Output directory; defaults to the raw file's directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Stats(args) => cmd_stats(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_settings(common: &CommonArgs, apply: impl FnOnce(&mut FileConfig)) -> Result<Settings, Error> {
    let mut file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    apply(&mut file);
    Settings::resolve(file)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Error> {
    let settings = load_settings(&args.common, |file| {
        file.seed = args.seed.or(file.seed);
        file.variant = args.variant.clone().or(file.variant.take());
        file.swarm_size = args.swarm_size.or(file.swarm_size);
        file.rho_informed = args.rho_informed.or(file.rho_informed);
        file.rho_black = args.rho_black.or(file.rho_black);
        file.duration = args.duration.or(file.duration);
        file.tick_dt = args.tick_dt.or(file.tick_dt);
        if args.timeseries {
            file.record_timeseries = Some(true);
        }
    })?;
    let config = settings.trial_config()?;
    std::fs::create_dir_all(&args.common.out)?;
    settings.echo_to(&args.common.out)?;

    let mut trial = Trial::new(&config)?;
    let mut trajectory = if args.dump_trajectory {
        if !(args.trajectory_stride.is_finite() && args.trajectory_stride > 0.0) {
            return Err(Error::Config("trajectory_stride must be positive".into()));
        }
        let mut writer = csv::Writer::from_path(args.common.out.join("trajectory.csv"))?;
        writer.write_record(["robot_id", "t", "x", "y", "state"])?;
        Some((
            writer,
            (args.trajectory_stride / config.tick_dt).round().max(1.0) as u64,
        ))
    } else {
        None
    };

    let mut tick_index = 0u64;
    while !trial.is_done() {
        if let Some((writer, stride)) = &mut trajectory {
            if tick_index.is_multiple_of(*stride) {
                dump_poses(writer, &trial)?;
            }
        }
        trial.tick();
        tick_index += 1;
        if args.common.verbose > 0 && tick_index.is_multiple_of(100_000) {
            let (black, white, _) = trial.occupancy();
            eprintln!(
                "t={:.0}s black={black} white={white}",
                tick_index as f64 * config.tick_dt
            );
        }
    }
    if let Some((writer, _)) = &mut trajectory {
        dump_poses(writer, &trial)?;
        writer.flush()?;
    }

    let result = trial.into_result();
    let mut json = serde_json::to_vec_pretty(&result)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    json.push(b'\n');
    std::fs::write(args.common.out.join("result.json"), json)?;
    println!(
        "black={} white={} elsewhere={}",
        result.robots_on_black, result.robots_on_white, result.robots_elsewhere
    );
    Ok(ExitCode::SUCCESS)
}

fn dump_poses(writer: &mut csv::Writer<File>, trial: &Trial) -> Result<(), Error> {
    let t = trial.time();
    for (id, robot) in trial.robots().iter().enumerate() {
        let state = match robot.state.macro_state() {
            aggsim_core::controller::MacroState::RandomWalk => "random_walk",
            aggsim_core::controller::MacroState::Stay => "stay",
            aggsim_core::controller::MacroState::Leave => "leave",
        };
        writer.write_record([
            id.to_string(),
            format!("{t}"),
            format!("{}", robot.pose.position.x),
            format!("{}", robot.pose.position.y),
            state.to_string(),
        ])?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, Error> {
    let settings = load_settings(&args.common, |file| {
        if args.full_grid {
            let canonical = SweepSpec::canonical_grid(0);
            file.sweep_swarm_sizes = Some(canonical.swarm_sizes);
            file.sweep_rho_informed = Some(canonical.rho_informed_values);
            file.sweep_rho_black = Some(canonical.rho_black_values);
            file.sweep_variants = Some(canonical.variants);
            file.trials_per_cell = Some(canonical.trials_per_cell);
        }
        file.sweep_swarm_sizes = args.swarm_sizes.clone().or(file.sweep_swarm_sizes.take());
        file.sweep_rho_informed = args
            .rho_informed_values
            .clone()
            .or(file.sweep_rho_informed.take());
        file.sweep_rho_black = args.rho_black_values.clone().or(file.sweep_rho_black.take());
        file.sweep_variants = args.variants.clone().or(file.sweep_variants.take());
        file.trials_per_cell = args.trials.or(file.trials_per_cell);
        file.base_seed = args.base_seed.or(file.base_seed);
        file.duration = args.duration.or(file.duration);
        file.tick_dt = args.tick_dt.or(file.tick_dt);
        file.workers = args.workers.or(file.workers);
    })?;
    let spec = settings.sweep_spec()?;
    let context = settings.sweep_context();
    let out = &args.common.out;
    std::fs::create_dir_all(out)?;
    settings.echo_to(out)?;

    if settings.workers > 0 {
        // Ignored if a global pool already exists (e.g. in tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.workers)
            .build_global();
    }

    let planned = spec.plan();
    println!(
        "sweep: sizes={:?} rho_informed={:?} rho_black={:?} variants={:?} \
         trials_per_cell={} base_seed={} -> {} cells, {} trials",
        spec.swarm_sizes,
        spec.rho_informed_values,
        spec.rho_black_values,
        spec.variants,
        spec.trials_per_cell,
        spec.base_seed,
        spec.cells().len(),
        planned.len()
    );

    // Resume: trials already present in the raw file are not re-run.
    let raw_path = out.join("raw.csv");
    let existing = if raw_path.exists() {
        files::read_records(&raw_path)?
    } else {
        Vec::new()
    };
    let done: HashMap<(u32, u64, u64, String, u32), u64> = existing
        .iter()
        .map(|r| {
            let cell = r.cell();
            let (size, rho_i, rho_b, variant) = cell.ord_tuple();
            ((size, rho_i, rho_b, variant.to_string(), r.trial_index), r.seed)
        })
        .collect();
    let mut todo = Vec::new();
    for trial in planned {
        let (size, rho_i, rho_b, variant) = trial.cell.ord_tuple();
        match done.get(&(size, rho_i, rho_b, variant.to_string(), trial.trial_index)) {
            Some(&seed) if seed == trial.seed => {}
            Some(_) => {
                return Err(Error::Config(format!(
                    "{} holds records for the same cells but different seeds; \
                     it belongs to another sweep (base_seed mismatch)",
                    raw_path.display()
                )))
            }
            None => todo.push(trial),
        }
    }
    println!(
        "{} trials already recorded, {} to run",
        existing.len(),
        todo.len()
    );

    let (records, failures) = run_with_incremental_append(&raw_path, &existing, &todo, &context,
        args.common.verbose)?;

    let mut all_records = existing;
    all_records.extend(records);
    if all_records.is_empty() {
        write_failures(out, &failures)?;
        eprintln!("no trial succeeded");
        return Ok(ExitCode::from(2));
    }
    let summary = harness::summarize(&all_records)?;
    files::write_records_csv(&raw_path, &summary.records)?;
    files::write_records_jsonl(&out.join("raw.jsonl"), &summary.records)?;
    files::write_summary_csv(&out.join("summary.csv"), &summary)?;
    let heatmap_dir = out.join("heatmaps");
    std::fs::create_dir_all(&heatmap_dir)?;
    let written = files::write_heatmap_csvs(&heatmap_dir, &summary)?;
    println!(
        "wrote {} records, {} summary cells, {} heatmaps to {}",
        summary.records.len(),
        summary.cells.len(),
        written.len(),
        out.display()
    );

    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        write_failures(out, &failures)?;
        eprintln!("{} trials failed; see failures.json", failures.len());
        Ok(ExitCode::from(2))
    }
}

/// Runs the remaining trials, appending each record to the raw CSV as it
/// finishes so an interrupted sweep can resume.
fn run_with_incremental_append(
    raw_path: &Path,
    existing: &[TrialRecord],
    todo: &[PlannedTrial],
    context: &aggsim_core::harness::SweepContext,
    verbose: u8,
) -> Result<(Vec<TrialRecord>, Vec<aggsim_core::harness::TrialFailure>), Error> {
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(raw_path)?;
    let writer = csv::WriterBuilder::new()
        .has_headers(existing.is_empty())
        .from_writer(file);
    let appender = Mutex::new(writer);
    let (records, failures) = harness::run_planned(todo, context, |record| {
        let mut writer = appender.lock().expect("raw appender poisoned");
        let _ = writer.serialize(record);
        let _ = writer.flush();
        if verbose > 0 {
            eprintln!(
                "done: n={} rho_i={} rho_sb={} {} trial {} -> {}/{}/{}",
                record.swarm_size,
                record.rho_informed,
                record.rho_black,
                record.variant,
                record.trial_index,
                record.on_black,
                record.on_white,
                record.elsewhere
            );
        }
    });
    Ok((records, failures))
}

fn write_failures(
    out: &Path,
    failures: &[aggsim_core::harness::TrialFailure],
) -> Result<(), Error> {
    if failures.is_empty() {
        return Ok(());
    }
    let mut file = File::create(out.join("failures.json"))?;
    let json = serde_json::to_vec_pretty(failures)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    file.write_all(&json)?;
    file.write_all(b"\n")?;
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<ExitCode, Error> {
    let records = files::read_records(&args.raw)?;
    let summary = harness::summarize(&records)?;
    let out = match args.out {
        Some(dir) => dir,
        None => args
            .raw
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    std::fs::create_dir_all(&out)?;
    files::write_summary_csv(&out.join("summary.csv"), &summary)?;
    let heatmap_dir = out.join("heatmaps");
    std::fs::create_dir_all(&heatmap_dir)?;
    let written = files::write_heatmap_csvs(&heatmap_dir, &summary)?;
    println!(
        "{} cells summarized from {} records; {} heatmaps written to {}",
        summary.cells.len(),
        records.len(),
        written.len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}
