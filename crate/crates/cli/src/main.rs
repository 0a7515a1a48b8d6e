//! `fuzzytopic` command-line interface.
//!
//! Exit codes: 0 success, 1 output failure, 2 input or format error,
//! 3 no clusters found, 4 invalid flags or configuration.

mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fuzzytopic::embedding::{load_embeddings, EmbeddingError, EmbeddingFormat, EmbeddingSet};
use fuzzytopic::membership::MembershipError;
use fuzzytopic::pipeline::{
    assemble_report, grid_search_mcs, run_phase1, run_phase2, run_pipeline_full, Phase2Result,
    PhaseResult, PipelineConfig, PipelineError,
};
use fuzzytopic::render::{render_run, RenderSpec};
use fuzzytopic::report::write_report;
use fuzzytopic::tsne;
use log::info;
use serde::{de::DeserializeOwned, Serialize};
use thiserror::Error;

use config::{ConfigArgs, FormatArg};

const PHASE1_STATE: &str = "phase1.json";
const PHASE2_STATE: &str = "phase2.json";

#[derive(Parser, Debug)]
#[command(name = "fuzzytopic", version, about = "Two-phase fuzzy topic modeling over document embeddings")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full pipeline: phase 1, phase 2, report, and plots.
    Run(RunArgs),
    /// Project and print the minimum-cluster-size score table.
    Gridsearch(InputArgs),
    /// Phase 1 only; writes phase1.json to the output directory.
    Phase1(RunArgs),
    /// Phase 2 from a saved phase1.json; writes phase2.json.
    Phase2(RunArgs),
    /// Report files from saved phase1.json and phase2.json.
    Report(RunArgs),
    /// SVG plots from saved phase1.json and phase2.json.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Embedding file (.jsonl, or .ftme/.bin binary).
    #[arg(long)]
    input: PathBuf,
    /// Embedding file format (default: from the extension).
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Directory holding phase1.json and phase2.json; plots go here too.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1024)]
    width: u32,
    #[arg(long, default_value_t = 768)]
    height: u32,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NoClusters(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Output(_) => 1,
            CliError::Input(_) => 2,
            CliError::NoClusters(_) => 3,
            CliError::Config(_) => 4,
        }
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::NoClusters(_) | PipelineError::EmptyRetained => CliError::NoClusters(e.to_string()),
            PipelineError::Membership(MembershipError::NoClusters) => CliError::NoClusters(e.to_string()),
            PipelineError::InvalidConfig(_) => CliError::Config(e.to_string()),
            PipelineError::Tsne(tsne::TsneError::TooFewPoints(_)) => CliError::Input(e.to_string()),
            other => CliError::Output(other.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn load(args: &InputArgs) -> Result<EmbeddingSet> {
    let format = args
        .format
        .map(EmbeddingFormat::from)
        .unwrap_or_else(|| EmbeddingFormat::from_path(&args.input));
    let set = load_embeddings(&args.input, format)?;
    info!("loaded {} documents of dimension {}", set.len(), set.dim());
    Ok(set)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string(value).map_err(|e| CliError::Output(e.to_string()))?;
    fs::write(path, text).map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))
}

fn check_state(phase1: &PhaseResult, set: &EmbeddingSet) -> Result<()> {
    if phase1.indices.len() != set.len() {
        return Err(CliError::Input(format!(
            "{PHASE1_STATE} covers {} documents but the input has {}",
            phase1.indices.len(),
            set.len()
        )));
    }
    Ok(())
}

fn plots(phase1: &PhaseResult, phase2: &[Phase2Result], spec: &RenderSpec, out_dir: &Path) -> Result<()> {
    let written = render_run(phase1, phase2, spec, out_dir).map_err(|e| CliError::Output(e.to_string()))?;
    info!("wrote {} plots", written.len());
    Ok(())
}

fn cmd_run(args: &RunArgs, cfg: &PipelineConfig) -> Result<()> {
    let set = load(&args.input)?;
    let run = run_pipeline_full(&set, cfg)?;
    create_dir(&args.out_dir)?;
    write_report(&run.report, &args.out_dir).map_err(|e| CliError::Output(e.to_string()))?;
    write_json(&run.phase1, &args.out_dir.join(PHASE1_STATE))?;
    write_json(&run.phase2, &args.out_dir.join(PHASE2_STATE))?;
    plots(&run.phase1, &run.phase2, &RenderSpec::default(), &args.out_dir)?;
    println!(
        "{} topics from {} documents written to {}",
        run.report.topics.len(),
        set.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_gridsearch(args: &InputArgs, cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let set = load(args)?;
    let projection = tsne::project(&set.to_matrix(), &cfg.tsne).map_err(PipelineError::from)?;
    let grid = grid_search_mcs(&projection.coords, &cfg.mcs_grid, cfg.min_samples);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let write = |out: &mut io::StdoutLock, line: String| {
        writeln!(out, "{line}").map_err(|e| CliError::Output(e.to_string()))
    };
    match grid {
        Ok(gs) => {
            write(&mut out, "min_cluster_size\tscore\tn_clusters".into())?;
            for row in &gs.table {
                let score = row.score.map_or_else(|| "-inf".to_owned(), |s| format!("{s:.6}"));
                write(&mut out, format!("{}\t{score}\t{}", row.min_cluster_size, row.n_clusters))?;
            }
            write(&mut out, format!("best\t{}", gs.best))?;
            Ok(())
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_phase1(args: &RunArgs, cfg: &PipelineConfig) -> Result<()> {
    let set = load(&args.input)?;
    let phase1 = run_phase1(&set, cfg)?;
    create_dir(&args.out_dir)?;
    write_json(&phase1, &args.out_dir.join(PHASE1_STATE))?;
    println!(
        "phase 1: {} clusters at min cluster size {}, {} of {} documents retained",
        phase1.n_clusters(),
        phase1.chosen_mcs,
        phase1.retained.len(),
        set.len()
    );
    Ok(())
}

fn cmd_phase2(args: &RunArgs, cfg: &PipelineConfig) -> Result<()> {
    let set = load(&args.input)?;
    let phase1: PhaseResult = read_json(&args.out_dir.join(PHASE1_STATE))?;
    check_state(&phase1, &set)?;
    let phase2 = run_phase2(&set, &phase1, cfg)?;
    write_json(&phase2, &args.out_dir.join(PHASE2_STATE))?;
    println!("phase 2: {} refinement runs", phase2.len());
    Ok(())
}

fn cmd_report(args: &RunArgs, cfg: &PipelineConfig) -> Result<()> {
    let set = load(&args.input)?;
    let phase1: PhaseResult = read_json(&args.out_dir.join(PHASE1_STATE))?;
    check_state(&phase1, &set)?;
    let phase2: Vec<Phase2Result> = read_json(&args.out_dir.join(PHASE2_STATE))?;
    let report = assemble_report(&set, &phase1, &phase2, cfg);
    write_report(&report, &args.out_dir).map_err(|e| CliError::Output(e.to_string()))?;
    println!("{} topics written to {}", report.topics.len(), args.out_dir.display());
    Ok(())
}

fn cmd_plot(args: &PlotArgs) -> Result<()> {
    let phase1: PhaseResult = read_json(&args.out_dir.join(PHASE1_STATE))?;
    let phase2: Vec<Phase2Result> = read_json(&args.out_dir.join(PHASE2_STATE))?;
    let spec = RenderSpec {
        width: args.width,
        height: args.height,
        ..RenderSpec::default()
    };
    plots(&phase1, &phase2, &spec, &args.out_dir)
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Run(a) => cmd_run(a, &a.input.config.resolve()?),
        Command::Gridsearch(a) => cmd_gridsearch(a, &a.config.resolve()?),
        Command::Phase1(a) => cmd_phase1(a, &a.input.config.resolve()?),
        Command::Phase2(a) => cmd_phase2(a, &a.input.config.resolve()?),
        Command::Report(a) => cmd_report(a, &a.input.config.resolve()?),
        Command::Plot(a) => cmd_plot(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
