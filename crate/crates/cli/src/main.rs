use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qgl_cli::config::{ExperimentConfig, GraphSource};
use qgl_cli::CliError;
use qgl_core::GraphFamily;

/// Elliptic and parabolic equations on metric graphs, with checks of the
/// estimates behind uniqueness in weighted Lebesgue classes.
#[derive(Parser)]
#[command(name = "qgl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated graph in the JSON graph format.
    GenGraph(GenGraphArgs),
    /// Solve the configured problem and write nodal values as CSV.
    Solve(RunArgs),
    /// Run the configured verification suite.
    Verify(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Path,
    Star,
    Tree,
    Ray,
}

#[derive(Args)]
struct GenGraphArgs {
    /// Graph family; omit when `--config` holds a family object.
    family: Option<Family>,
    #[arg(long)]
    edges: Option<usize>,
    #[arg(long)]
    arms: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// Radius the truncated ray must contain.
    #[arg(long)]
    radius: Option<f64>,
    /// Edge length.
    #[arg(long = "len", default_value_t = 1.0)]
    length: f64,
    /// JSON family object, e.g. {"family": "star", "arms": 3, "length": 1.0}.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON); defaults apply to omitted fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Graph file overriding the configured graph.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Mesh width overriding the config.
    #[arg(long)]
    h: Option<f64>,
    /// Exponent overriding the config.
    #[arg(long)]
    p: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn family(args: &GenGraphArgs) -> Result<GraphFamily, CliError> {
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()));
    }
    let need = |v: Option<usize>, flag: &str| {
        v.ok_or_else(|| CliError::Config(format!("--{flag} is required for this family")))
    };
    let length = args.length;
    Ok(match args.family {
        None => return Err(CliError::Config("give a family or --config".into())),
        Some(Family::Path) => GraphFamily::Path { edges: need(args.edges, "edges")?, length },
        Some(Family::Star) => GraphFamily::Star { arms: need(args.arms, "arms")?, length },
        Some(Family::Tree) => GraphFamily::BinaryTree { depth: need(args.depth, "depth")?, length },
        Some(Family::Ray) => GraphFamily::TruncatedRay {
            radius: args.radius.ok_or_else(|| CliError::Config("--radius is required for ray".into()))?,
            length,
        },
    })
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(file) = &args.graph {
        cfg.graph = GraphSource::File { file: file.clone() };
    }
    if let Some(h) = args.h {
        cfg.h = h;
    }
    if let Some(p) = args.p {
        cfg.p = p;
    }
    cfg.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(qgl_cli::default_out_dir);
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenGraph(args) => {
            let text = qgl_cli::gen_graph(&family(&args)?, args.out.as_deref())?;
            if args.out.is_none() {
                print!("{text}");
            }
            Ok(())
        }
        Command::Solve(args) => {
            let (cfg, out) = load(&args)?;
            qgl_cli::thread_pool()?.install(|| qgl_cli::solve(&cfg, &out))?;
            println!("wrote {}", out.join("solution.csv").display());
            Ok(())
        }
        Command::Verify(args) => {
            let (cfg, out) = load(&args)?;
            let result = qgl_cli::thread_pool()?.install(|| qgl_cli::verify(&cfg, &out))?;
            print!("{}", result.summary);
            match result.failed() {
                0 => Ok(()),
                failed => Err(CliError::CheckFailed { failed }),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qgl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
