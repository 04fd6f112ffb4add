//! `reachplan` — offline artifact construction, single trials, randomized
//! benchmarks, and headless property verification for the reachability-based
//! planner.
//!
//! Exit codes: 0 on success, 1 on any runtime failure or property violation
//! (including a crash outcome), 2 on usage errors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use reachplan::checks::{frs_conservatism, inversion_oracle, OracleConfig};
use reachplan::config::{load_config, Config};
use reachplan::frs::{load_frs, reach_3d, save_frs, FrsArtifact, TimedFRS};
use reachplan::planner::ErrorModel;
use reachplan::tracking_error::{compute_table, sidecar_path, TrackingErrorTable};
use reachplan::world::{
    generate_world_with, run_benchmark, run_trial, BenchSetup, Mode, Outcome, TraceSample,
    TrialSetup,
};

#[derive(Parser)]
#[command(
    name = "reachplan",
    version,
    about = "Reachability-guarded trajectory planning pipeline",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct CliArgs {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Characterize tracking error over the velocity cover and save the table.
    ComputeErrorTable(ComputeErrorTableArgs),
    /// Compute the spline family's forward reachable sets and save them.
    ComputeFrs(ComputeFrsArgs),
    /// Fly one seeded world; exits 1 if the trial ends in a crash.
    RunTrial(RunTrialArgs),
    /// Fly many seeded worlds; exits 1 if any trial ends in a crash.
    Benchmark(BenchmarkArgs),
    /// Dump a saved table's per-cell maximum error extents as CSV.
    InspectTable(InspectTableArgs),
    /// Run the conservatism and obstacle-inversion property suites on saved
    /// artifacts; exits 1 on any violation.
    Verify(VerifyArgs),
}

/// Configuration file; benchmark-vehicle defaults apply to every key it
/// omits (and entirely when the flag is absent).
#[derive(Args)]
struct ConfigOpt {
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

impl ConfigOpt {
    fn read(&self) -> Result<Config> {
        match &self.config {
            Some(p) => {
                load_config(p).with_context(|| format!("config file {}", p.display()))
            }
            None => Ok(Config::default()),
        }
    }
}

#[derive(Args)]
struct ComputeErrorTableArgs {
    #[command(flatten)]
    config: ConfigOpt,
    /// Output path for the binary table (a JSON metadata sidecar is written
    /// alongside it).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct ComputeFrsArgs {
    #[command(flatten)]
    config: ConfigOpt,
    /// Output path for the JSON reachable-set artifact.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TrialMode {
    Table,
    Constant,
}

impl From<TrialMode> for Mode {
    fn from(m: TrialMode) -> Mode {
        match m {
            TrialMode::Table => Mode::Table,
            TrialMode::Constant => Mode::Constant,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchMode {
    Table,
    Constant,
    Both,
}

impl BenchMode {
    fn modes(self) -> Vec<Mode> {
        match self {
            BenchMode::Table => vec![Mode::Table],
            BenchMode::Constant => vec![Mode::Constant],
            BenchMode::Both => vec![Mode::Table, Mode::Constant],
        }
    }
}

#[derive(Args)]
struct RunTrialArgs {
    #[command(flatten)]
    config: ConfigOpt,
    /// World seed; the world is generated from it deterministically.
    #[arg(long)]
    seed: u64,
    /// Which tracking-error source buffers the obstacles.
    #[arg(long, value_enum, default_value = "table")]
    mode: TrialMode,
    /// Reachable-set artifact from `compute-frs`.
    #[arg(long, value_name = "FILE")]
    frs: PathBuf,
    /// Error table from `compute-error-table`; required for `--mode table`
    /// and used to floor the constant buffer otherwise.
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
    /// Write the executed trajectory, the reference, and the per-step
    /// reachable-tube extents as CSV.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Use artifacts whose config hash does not match the current
    /// configuration (structural compatibility is still enforced).
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    config: ConfigOpt,
    /// Seeds to fly: `0..50`, `3..=7`, `1,4,9`, or a single seed.
    #[arg(long, default_value = "0..50")]
    seeds: String,
    #[arg(long, value_enum, default_value = "both")]
    mode: BenchMode,
    #[arg(long, value_name = "FILE")]
    frs: PathBuf,
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
    /// JSON report: `{mode, seeds, crash_rate, goal_rate, trials}` for a
    /// single mode, `{modes: [...]}` of those objects for `both`.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Worker threads for the trial loop (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct InspectTableArgs {
    #[arg(long, value_name = "FILE")]
    table: PathBuf,
    /// CSV destination; stdout when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    config: ConfigOpt,
    #[arg(long, value_name = "FILE")]
    frs: PathBuf,
    #[arg(long, value_name = "FILE")]
    table: PathBuf,
    /// Random (t, κ) samples for the conservatism suite.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Random obstacle-inversion instances per error model.
    #[arg(long, default_value_t = 50)]
    instances: u64,
    /// RNG seed for both suites; defaults to the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    force: bool,
}

fn main() -> ExitCode {
    let cli = CliArgs::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    ExitCode::from(code)
}

fn run(cli: CliArgs) -> Result<u8> {
    match cli.cmd {
        Cmd::ComputeErrorTable(a) => compute_error_table(a),
        Cmd::ComputeFrs(a) => compute_frs(a),
        Cmd::RunTrial(a) => run_trial_cmd(a),
        Cmd::Benchmark(a) => benchmark(a),
        Cmd::InspectTable(a) => inspect_table(a),
        Cmd::Verify(a) => verify(a),
    }
}

/// Provenance gate shared by every artifact consumer: the artifact must have
/// been built under the current configuration unless the user forces it.
fn check_hash(
    what: &str,
    path: &Path,
    artifact_hash: &str,
    cfg: &Config,
    force: bool,
) -> Result<()> {
    let want = cfg.hash();
    if artifact_hash == want {
        return Ok(());
    }
    if force {
        eprintln!(
            "warning: {what} {} was built under a different configuration \
             (hash {artifact_hash} vs current {want}); continuing due to --force",
            path.display()
        );
        return Ok(());
    }
    bail!(
        "{what} {} was built under a different configuration (config hash \
         {artifact_hash} vs current {want}); rebuild it or pass --force",
        path.display()
    );
}

fn load_frs_checked(path: &Path, cfg: &Config, force: bool) -> Result<TimedFRS> {
    let art = load_frs(path).with_context(|| format!("FRS artifact {}", path.display()))?;
    check_hash("FRS artifact", path, &art.config_hash, cfg, force)?;
    // Structural compatibility is non-negotiable even under --force: a set
    // computed for another plan shape certifies nothing here.
    art.frs
        .validate_against(&cfg.timing(), &cfg.bounds())
        .with_context(|| format!("FRS artifact {}", path.display()))?;
    Ok(art.frs)
}

fn load_table_checked(path: &Path, cfg: &Config, force: bool) -> Result<TrackingErrorTable> {
    let table = TrackingErrorTable::load(path)
        .with_context(|| format!("error table {}", path.display()))?;
    check_hash("error table", path, table.config_hash(), cfg, force)?;
    Ok(table)
}

fn compute_error_table(a: ComputeErrorTableArgs) -> Result<u8> {
    let cfg = a.config.read()?;
    let cover = cfg.cover();
    eprintln!(
        "characterizing {} velocity cells x {} time bins ...",
        cover.n_cells(),
        cover.n_bins()
    );
    let t0 = Instant::now();
    let table = compute_table(&cover, &cfg.table_build())?;
    table
        .save(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "wrote {} (+ sidecar {}): {} cells x {} bins, global max extent {:.4} m, {:.1} s",
        a.out.display(),
        sidecar_path(&a.out).display(),
        cover.n_cells(),
        cover.n_bins(),
        table.global_max_extent(),
        t0.elapsed().as_secs_f64()
    );
    Ok(0)
}

fn compute_frs(a: ComputeFrsArgs) -> Result<u8> {
    let cfg = a.config.read()?;
    let t0 = Instant::now();
    let frs = reach_3d(&cfg.bounds(), &cfg.timing(), cfg.frs_dt)?;
    let n_steps = frs.steps().len();
    let t_fin = frs.timing().t_fin();
    let art = FrsArtifact::new(frs, cfg.frs_dt, cfg.hash());
    save_frs(&art, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "wrote {}: {} steps over [0, {}] s, {:.2} s",
        a.out.display(),
        n_steps,
        t_fin,
        t0.elapsed().as_secs_f64()
    );
    Ok(0)
}

fn trial_setup<'a>(
    cfg: &Config,
    frs: &'a TimedFRS,
    table: Option<&'a TrackingErrorTable>,
    record_trace: bool,
) -> TrialSetup<'a> {
    let mut setup = TrialSetup::new(frs, table, cfg.planner());
    setup.goal_radius = cfg.goal_radius;
    setup.trial_timeout = cfg.trial_timeout;
    setup.constant_buffer = cfg.constant_buffer;
    setup.record_trace = record_trace;
    setup
}

fn run_trial_cmd(a: RunTrialArgs) -> Result<u8> {
    let cfg = a.config.read()?;
    let frs = load_frs_checked(&a.frs, &cfg, a.force)?;
    let table = a
        .table
        .as_deref()
        .map(|p| load_table_checked(p, &cfg, a.force))
        .transpose()?;
    let mode = Mode::from(a.mode);
    if mode == Mode::Table && table.is_none() {
        bail!("--mode table requires --table <FILE>");
    }
    let world = generate_world_with(a.seed, &cfg.world_policy());
    let setup = trial_setup(&cfg, &frs, table.as_ref(), a.trace.is_some());
    let t0 = Instant::now();
    let res = run_trial(&world, mode, &setup)?;
    if let Some(path) = &a.trace {
        write_trace(path, &res.trace).with_context(|| format!("writing {}", path.display()))?;
        println!("trace: {} ({} samples)", path.display(), res.trace.len());
    }
    println!(
        "seed {} mode {}: {} after {} iterations, {:.1} m traveled, peak speed \
         {:.2} m/s, {:.2} s simulated ({:.1} s wall)",
        a.seed,
        mode,
        res.outcome,
        res.iterations,
        res.distance_traveled,
        res.peak_speed,
        res.sim_time,
        t0.elapsed().as_secs_f64()
    );
    Ok(u8::from(res.outcome == Outcome::Crash))
}

/// One row per prediction sample: full vehicle state in the simulator's
/// export schema, then the reference position and the per-axis extents of
/// the buffered reachable tube at that instant.
fn write_trace(path: &Path, trace: &[TraceSample]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    write!(f, "t,x1,x2,x3,v1,v2,v3,w1,w2,w3")?;
    for i in 1..=3 {
        for j in 1..=3 {
            write!(f, ",r{i}{j}")?;
        }
    }
    write!(f, ",ref_x1,ref_x2,ref_x3")?;
    for i in 1..=3 {
        write!(f, ",tube_lo{i},tube_hi{i}")?;
    }
    writeln!(f)?;
    for s in trace {
        write!(f, "{}", s.t)?;
        for v in [&s.pos, &s.vel, &s.omega] {
            for i in 0..3 {
                write!(f, ",{}", v[i])?;
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                write!(f, ",{}", s.rot[(i, j)])?;
            }
        }
        for i in 0..3 {
            write!(f, ",{}", s.reference[i])?;
        }
        for i in 0..3 {
            write!(f, ",{},{}", s.tube_lo[i], s.tube_hi[i])?;
        }
        writeln!(f)?;
    }
    f.flush()?;
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> Result<u8> {
    let cfg = a.config.read()?;
    let seeds = parse_seeds(&a.seeds)?;
    let modes = a.mode.modes();
    let frs = load_frs_checked(&a.frs, &cfg, a.force)?;
    let table = a
        .table
        .as_deref()
        .map(|p| load_table_checked(p, &cfg, a.force))
        .transpose()?;
    if modes.contains(&Mode::Table) && table.is_none() {
        bail!("--mode table (or both) requires --table <FILE>");
    }
    let bench = BenchSetup {
        policy: cfg.world_policy(),
        trial: trial_setup(&cfg, &frs, table.as_ref(), false),
        threads: a.threads,
    };
    let t0 = Instant::now();
    let report = run_benchmark(&seeds, &modes, &bench)?;
    let out = File::create(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let [single] = report.modes.as_slice() {
        serde_json::to_writer_pretty(BufWriter::new(out), single)?;
    } else {
        serde_json::to_writer_pretty(BufWriter::new(out), &report)?;
    }
    let mut crashes = 0usize;
    for m in &report.modes {
        crashes += m
            .trials
            .iter()
            .filter(|t| t.outcome == Outcome::Crash)
            .count();
        println!(
            "mode {}: {} trials, goal rate {:.1}%, crash rate {:.1}%",
            m.mode,
            m.trials.len(),
            100.0 * m.goal_rate,
            100.0 * m.crash_rate
        );
    }
    println!(
        "report: {} ({} seeds, {:.1} s wall)",
        a.out.display(),
        seeds.len(),
        t0.elapsed().as_secs_f64()
    );
    if crashes > 0 {
        eprintln!("error: {crashes} trial(s) ended in a crash");
        return Ok(1);
    }
    Ok(0)
}

fn inspect_table(a: InspectTableArgs) -> Result<u8> {
    let table = TrackingErrorTable::load(&a.table)
        .with_context(|| format!("error table {}", a.table.display()))?;
    let cover = table.cover();
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("writing {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(out, "rank,v1,v2,v3,max_extent_m")?;
    for rank in 0..cover.n_cells() {
        let c = cover.cell_box(rank).center;
        writeln!(
            out,
            "{rank},{},{},{},{}",
            c[0],
            c[1],
            c[2],
            table.cell_max_extent(rank)
        )?;
    }
    out.flush()?;
    eprintln!(
        "{} cells x {} bins, slack {} m, global max extent {:.4} m, config {}",
        cover.n_cells(),
        cover.n_bins(),
        table.slack(),
        table.global_max_extent(),
        table.config_hash()
    );
    Ok(0)
}

fn verify(a: VerifyArgs) -> Result<u8> {
    let cfg = a.config.read()?;
    let frs = load_frs_checked(&a.frs, &cfg, a.force)?;
    let table = load_table_checked(&a.table, &cfg, a.force)?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let mut all_passed = true;

    let t0 = Instant::now();
    let rep = frs_conservatism(&frs, a.samples, seed)?;
    all_passed &= rep.passed();
    println!("{rep} [{:.1} s]", t0.elapsed().as_secs_f64());

    let body_half = cfg.planner().body_half;
    let oc = OracleConfig {
        instances: a.instances,
        grid_step: 0.05,
        seed: seed.wrapping_add(1),
        body_half,
    };
    let t0 = Instant::now();
    let rep = inversion_oracle(&frs, &ErrorModel::Table(&table), &oc)?;
    all_passed &= rep.passed();
    println!("[table model] {rep} [{:.1} s]", t0.elapsed().as_secs_f64());

    let buffer = cfg.constant_buffer.max(table.global_max_extent());
    let oc = OracleConfig {
        seed: seed.wrapping_add(2),
        ..oc
    };
    let t0 = Instant::now();
    let rep = inversion_oracle(&frs, &ErrorModel::Constant(buffer), &oc)?;
    all_passed &= rep.passed();
    println!(
        "[constant model, {buffer:.4} m] {rep} [{:.1} s]",
        t0.elapsed().as_secs_f64()
    );

    if all_passed {
        println!("verify: all properties held");
        Ok(0)
    } else {
        eprintln!("verify: property violations found");
        Ok(1)
    }
}

/// Seed set syntax: half-open `A..B`, inclusive `A..=B`, a comma list, or a
/// single seed.
fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let parse_one = |p: &str| -> Result<u64> {
        p.trim()
            .parse::<u64>()
            .with_context(|| format!("bad seed {p:?} in {s:?}"))
    };
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (parse_one(a)?..=parse_one(b)?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (parse_one(a)?..parse_one(b)?).collect()
    } else if s.contains(',') {
        s.split(',').map(parse_one).collect::<Result<_>>()?
    } else {
        vec![parse_one(s)?]
    };
    if seeds.is_empty() {
        bail!("empty seed set {s:?}");
    }
    Ok(seeds)
}
