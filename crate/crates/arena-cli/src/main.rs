//! Command-line harness for arena-model knockout experiments.
//!
//! Every subcommand is deterministic under `--seed` and emits plain CSV for
//! external plotting. Exit codes: 0 success, 2 usage error, 3 validation or
//! parity error, 4 I/O error.

use arena_core::approx::{build_moment_table, write_moments_csv};
use arena_core::exact::{build_lattice, write_lattice_csv};
use arena_core::grid::DensityGrid;
use arena_core::infer::{
    map_estimate, predict_frequency, predict_map, write_estimates_csv, write_predictions_csv,
    PredictionMethod, SearchBox,
};
use arena_core::sim::{tally, write_outcomes_csv, SimConfig, Simulation};
use arena_core::worldcup::{
    bundled_test, bundled_train, evaluate, evaluate_pooled, load_records, write_distances_csv,
    write_pooled_csv, write_report_csv, TournamentRecord,
};
use arena_core::{ArenaError, ArenaSpec, PlayerParams};
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "arena", version, about = "Statistics for knockout tournaments under the arena model")]
struct Cli {
    /// Directory for output files when a path flag is relative or omitted
    #[arg(long, global = true, env = "ARENA_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded arena experiment and export every outcome as CSV
    Simulate(SimulateArgs),
    /// Estimate (x, rho) for a tagged player across a strength sweep
    Sweep(SweepArgs),
    /// Compare model and frequency predictors against long oracle runs
    PredictCompare(PredictCompareArgs),
    /// Reproduce the World Cup comparison tables from bundled or custom data
    Worldcup(WorldcupArgs),
    /// Dump the normal-approximation moment table as CSV
    Moments(MomentsArgs),
    /// Dump exact no-fluctuation state densities and CDFs as CSV
    Lattice(LatticeArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Win threshold m
    #[arg(long, default_value_t = 2)]
    m: u32,
    /// Loss threshold n
    #[arg(long, default_value_t = 2)]
    n: u32,
    /// Total player count, tagged player included
    #[arg(long, default_value_t = 1024)]
    players: u64,
    /// Number of arena runs
    #[arg(long, default_value_t = 20)]
    runs: u32,
    /// Uniform fluctuation coefficient of the background players
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Strength of a tagged player (placed at the last index)
    #[arg(long)]
    tagged_x: Option<f64>,
    /// Fluctuation coefficient of the tagged player (defaults to --rho)
    #[arg(long, requires = "tagged_x")]
    tagged_rho: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (default: <out-dir>/simulate.csv)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long, default_value_t = 2)]
    n: u32,
    /// Total player count, tagged player included
    #[arg(long, default_value_t = 1024)]
    players: u64,
    /// Runs per sweep point
    #[arg(long, default_value_t = 20)]
    runs: u32,
    /// Uniform fluctuation coefficient (background and tagged)
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.0)]
    x_start: f64,
    #[arg(long, default_value_t = 2.0)]
    x_end: f64,
    #[arg(long, default_value_t = 0.01)]
    x_step: f64,
    /// Seeded replications per sweep point
    #[arg(long, default_value_t = 1)]
    reps: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictCompareArgs {
    /// Total player count, tagged player included (2-2 arena)
    #[arg(long, default_value_t = 1024)]
    players: u64,
    /// Runs behind each per-point estimate
    #[arg(long, default_value_t = 20)]
    runs: u32,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.0)]
    x_start: f64,
    #[arg(long, default_value_t = 2.0)]
    x_end: f64,
    #[arg(long, default_value_t = 0.01)]
    x_step: f64,
    /// Runs behind the long-run truth frequencies
    #[arg(long, default_value_t = 100_000)]
    oracle_runs: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WorldcupArgs {
    /// Training dataset CSV (country,year,code); bundled data when omitted
    #[arg(long)]
    train: Option<PathBuf>,
    /// Test dataset CSV (country,year,code); bundled data when omitted
    #[arg(long)]
    test: Option<PathBuf>,
    /// Pool both datasets per country and re-estimate on all results
    #[arg(long)]
    pooled: bool,
}

#[derive(Args)]
struct MomentsArgs {
    #[arg(long)]
    m: u32,
    #[arg(long)]
    n: u32,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LatticeArgs {
    #[arg(long)]
    m: u32,
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 6.0)]
    hi: f64,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &ArenaError) -> u8 {
    match err {
        ArenaError::Io(_) => 4,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<(), ArenaError> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&cli.out_dir, args),
        Command::Sweep(args) => cmd_sweep(&cli.out_dir, args),
        Command::PredictCompare(args) => cmd_predict_compare(&cli.out_dir, args),
        Command::Worldcup(args) => cmd_worldcup(&cli.out_dir, args),
        Command::Moments(args) => cmd_moments(&cli.out_dir, args),
        Command::Lattice(args) => cmd_lattice(&cli.out_dir, args),
    }
}

fn resolve(out_dir: &Path, chosen: Option<PathBuf>, default_name: &str) -> PathBuf {
    match chosen {
        Some(path) if path.is_absolute() => path,
        Some(path) => out_dir.join(path),
        None => out_dir.join(default_name),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, ArenaError> {
    Ok(BufWriter::new(File::create(path)?))
}

/// SplitMix64; derives independent per-point seeds from the master seed.
fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn tagged_config(
    spec: ArenaSpec,
    players: u64,
    runs: u32,
    rho: f64,
    tagged: PlayerParams,
    seed: u64,
) -> SimConfig {
    SimConfig { spec, population: players.saturating_sub(1), runs, background_rho: rho, tagged: Some(tagged), seed }
}

fn cmd_simulate(out_dir: &Path, args: SimulateArgs) -> Result<(), ArenaError> {
    let spec = ArenaSpec::new(args.m, args.n)?;
    let tagged = match args.tagged_x {
        Some(x) => Some(PlayerParams::new(x, args.tagged_rho.unwrap_or(args.rho))?),
        None => None,
    };
    if args.players == 0 {
        return Err(ArenaError::InvalidParam("need at least one player".into()));
    }
    let population = args.players - tagged.is_some() as u64;
    let config = SimConfig {
        spec,
        population,
        runs: args.runs,
        background_rho: args.rho,
        tagged,
        seed: args.seed,
    };
    let sim = Simulation::new(config)?;
    let outcomes = sim.outcomes();

    let path = resolve(out_dir, args.out, "simulate.csv");
    let mut out = create(&path)?;
    write_outcomes_csv(&mut out, &outcomes)?;
    out.flush()?;

    println!("wrote {} outcome rows to {}", outcomes.len(), path.display());
    println!("aggregate tallies over {} players x {} runs:", args.players, args.runs);
    for terminal in arena_core::terminal_states(spec) {
        let count = outcomes.iter().filter(|o| o.final_state == terminal).count();
        println!("  ({}, {}): {count}", terminal.wins, terminal.losses);
    }
    if let Some(player) = sim.tagged_index() {
        let counts = tally(spec, &outcomes, player)?;
        println!("tagged player (index {player}):");
        for (terminal, count) in counts.canonical() {
            println!("  ({}, {}): {count}", terminal.wins, terminal.losses);
        }
    }
    Ok(())
}

fn sweep_points(start: f64, end: f64, step: f64) -> Result<Vec<f64>, ArenaError> {
    if step.is_nan() || step <= 0.0 || end < start {
        return Err(ArenaError::InvalidParam(format!(
            "bad sweep range: start {start}, end {end}, step {step}"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + step * k as f64).collect())
}

fn cmd_sweep(out_dir: &Path, args: SweepArgs) -> Result<(), ArenaError> {
    let spec = ArenaSpec::new(args.m, args.n)?;
    let prior = DensityGrid::standard_normal();
    let bounds = SearchBox::default();
    let points = sweep_points(args.x_start, args.x_end, args.x_step)?;

    let path = resolve(out_dir, args.out, "sweep.csv");
    let mut out = create(&path)?;
    writeln!(out, "x_true,x_hat,rho_hat")?;
    for (index, &x) in points.iter().enumerate() {
        for rep in 0..args.reps {
            let seed = derive_seed(args.seed, (index as u64) << 20 | rep as u64);
            let config = tagged_config(
                spec,
                args.players,
                args.runs,
                args.rho,
                PlayerParams::new(x, args.rho)?,
                seed,
            );
            let sim = Simulation::new(config)?;
            let counts = sim.tally_of(sim.tagged_index().expect("sweep always tags a player"))?;
            let est = map_estimate(spec, &prior, &counts, &bounds)?;
            writeln!(out, "{x},{},{}", est.x_hat, est.rho_hat)?;
        }
    }
    out.flush()?;
    println!("wrote {} sweep rows to {}", points.len() * args.reps as usize, path.display());
    Ok(())
}

fn cmd_predict_compare(out_dir: &Path, args: PredictCompareArgs) -> Result<(), ArenaError> {
    let spec = ArenaSpec::new(2, 2)?;
    let prior = DensityGrid::standard_normal();
    let bounds = SearchBox::default();
    let points = sweep_points(args.x_start, args.x_end, args.x_step)?;

    let path = resolve(out_dir, args.out, "predict_compare.csv");
    let mut out = create(&path)?;
    writeln!(out, "x_true,wins,losses,model,frequency,truth")?;
    for (index, &x) in points.iter().enumerate() {
        let tagged = PlayerParams::new(x, args.rho)?;

        let config = tagged_config(
            spec,
            args.players,
            args.runs,
            args.rho,
            tagged,
            derive_seed(args.seed, index as u64),
        );
        let sim = Simulation::new(config)?;
        let counts = sim.tally_of(sim.tagged_index().expect("tagged"))?;
        let frequency = predict_frequency(&counts)?;
        let est = map_estimate(spec, &prior, &counts, &bounds)?;
        let model = predict_map(spec, &est)?;

        let oracle_config = tagged_config(
            spec,
            args.players,
            args.oracle_runs,
            args.rho,
            tagged,
            derive_seed(args.seed, (1 << 40) | index as u64),
        );
        let oracle_sim = Simulation::new(oracle_config)?;
        let oracle = predict_frequency(&oracle_sim.tally_of(oracle_sim.tagged_index().expect("tagged"))?)?;

        for (terminal, truth) in oracle.iter() {
            writeln!(
                out,
                "{x},{},{},{},{},{truth}",
                terminal.wins,
                terminal.losses,
                model.prob(terminal)?,
                frequency.prob(terminal)?,
            )?;
        }
    }
    out.flush()?;
    println!("wrote {} comparison rows to {}", points.len() * spec.num_terminals(), path.display());
    Ok(())
}

fn load_or_bundled(
    path: Option<PathBuf>,
    bundled: fn() -> Vec<TournamentRecord>,
) -> Result<Vec<TournamentRecord>, ArenaError> {
    match path {
        Some(path) => load_records(path),
        None => Ok(bundled()),
    }
}

fn cmd_worldcup(out_dir: &Path, args: WorldcupArgs) -> Result<(), ArenaError> {
    let train = load_or_bundled(args.train, bundled_train)?;
    let test = load_or_bundled(args.test, bundled_test)?;
    let bounds = SearchBox::default();

    if args.pooled {
        let entries = evaluate_pooled(&train, &test, &bounds)?;
        let pooled_path = out_dir.join("worldcup_pooled.csv");
        write_pooled_csv(&mut create(&pooled_path)?, &entries)?;
        let estimates: Vec<_> =
            entries.iter().map(|e| (e.country.clone(), e.estimate)).collect();
        let est_path = out_dir.join("worldcup_estimates.csv");
        write_estimates_csv(&mut create(&est_path)?, &estimates)?;
        let predictions: Vec<_> = entries
            .iter()
            .map(|e| (e.country.clone(), e.prediction.clone(), PredictionMethod::Map))
            .collect();
        let pred_path = out_dir.join("worldcup_predictions.csv");
        write_predictions_csv(&mut create(&pred_path)?, &predictions)?;

        let per_country = (train.len() + test.len()) / entries.len().max(1);
        println!("pooled estimates (all {per_country} results per country):");
        for entry in &entries {
            println!(
                "  {:<10} x_hat = {:>6.3}  rho_hat = {:>6.3}",
                entry.country, entry.estimate.x_hat, entry.estimate.rho_hat
            );
        }
        println!("wrote {} and {}", pooled_path.display(), est_path.display());
        return Ok(());
    }

    let report = evaluate(&train, &test, &bounds)?;
    let report_path = out_dir.join("worldcup_report.csv");
    write_report_csv(&mut create(&report_path)?, &report)?;
    let dist_path = out_dir.join("worldcup_distances.csv");
    write_distances_csv(&mut create(&dist_path)?, &report)?;
    let estimates: Vec<_> =
        report.entries.iter().map(|e| (e.country.clone(), e.estimate)).collect();
    let est_path = out_dir.join("worldcup_estimates.csv");
    write_estimates_csv(&mut create(&est_path)?, &estimates)?;
    let mut predictions = Vec::new();
    for entry in &report.entries {
        predictions.push((entry.country.clone(), entry.model_prediction.clone(), PredictionMethod::Map));
        predictions.push((entry.country.clone(), entry.train_frequencies.clone(), PredictionMethod::Frequency));
    }
    let pred_path = out_dir.join("worldcup_predictions.csv");
    write_predictions_csv(&mut create(&pred_path)?, &predictions)?;

    println!("train-data estimates and prediction distances:");
    for entry in &report.entries {
        println!(
            "  {:<10} x_hat = {:>6.3}  rho_hat = {:>6.3}  d(P1,F) = {:.3}  d(P2,F) = {:.3}",
            entry.country, entry.estimate.x_hat, entry.estimate.rho_hat, entry.d_model, entry.d_frequency
        );
    }
    println!(
        "wrote {}, {}, {}, {}",
        report_path.display(),
        dist_path.display(),
        est_path.display(),
        pred_path.display()
    );
    Ok(())
}

fn cmd_moments(out_dir: &Path, args: MomentsArgs) -> Result<(), ArenaError> {
    let spec = ArenaSpec::new(args.m, args.n)?;
    let table = build_moment_table(spec, args.rho)?;
    let path = resolve(out_dir, args.out, "moments.csv");
    let mut out = create(&path)?;
    write_moments_csv(&mut out, &table)?;
    out.flush()?;
    println!("wrote moment table for the {spec} arena (rho = {}) to {}", args.rho, path.display());
    Ok(())
}

fn cmd_lattice(out_dir: &Path, args: LatticeArgs) -> Result<(), ArenaError> {
    let spec = ArenaSpec::new(args.m, args.n)?;
    let prior = DensityGrid::from_fn(args.lo, args.hi, args.step, arena_core::normal::normal_pdf)?;
    let lattice = build_lattice(spec, &prior)?;
    let path = resolve(out_dir, args.out, "lattice.csv");
    let mut out = create(&path)?;
    write_lattice_csv(&mut out, &lattice)?;
    out.flush()?;
    println!("wrote state densities for the {spec} arena to {}", path.display());
    Ok(())
}
