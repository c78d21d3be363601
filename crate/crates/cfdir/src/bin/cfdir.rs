//! Command-line entry point for the counterfactual-direction pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cfdir::cli::{
    cmd_attribute, cmd_bench_init, cmd_discover, cmd_explain, cmd_verify, exit_code, Ctx,
    EXIT_INTERNAL, EXIT_OK,
};

#[derive(Parser)]
#[command(
    name = "cfdir",
    about = "Discovers global counterfactual directions in a generative model's latent space \
             for a black-box classifier, generates explanations, and computes attribution maps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file (defaults to <out>/config.json after bench-init)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory holding the benchmark artifacts
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// Master seed override; re-derives every stream including training
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads (default: physical cores)
    #[arg(long, value_name = "N")]
    workers: Option<usize>,

    /// Overwrite existing artifacts
    #[arg(long)]
    force: bool,

    /// Serve the generator/classifier from this child command instead of the
    /// built-in synthetic pair (program plus arguments, no shell)
    #[arg(long, value_name = "CMD")]
    remote: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample positive-class latents and freeze the benchmark directory
    BenchInit {
        #[command(flatten)]
        common: Common,
    },
    /// Train a proxy around one source latent and extract directions
    Discover {
        #[command(flatten)]
        common: Common,
        /// Index into the source latent file
        #[arg(long, value_name = "N", default_value_t = 0)]
        source_index: usize,
    },
    /// Generate counterfactual explanations for every latent and direction
    Explain {
        #[command(flatten)]
        common: Common,
        /// Direction labels (g, h_01, ...) or file paths; default: all stored
        #[arg(long, value_delimiter = ',', value_name = "LABELS")]
        directions: Option<Vec<String>>,
        /// Latent file to evaluate (default: <out>/latents.json)
        #[arg(long, value_name = "PATH")]
        latents: Option<PathBuf>,
    },
    /// Find a baseline along a direction and write attribution maps
    Attribute {
        #[command(flatten)]
        common: Common,
        /// Direction label or file path
        #[arg(long, value_name = "LABEL")]
        direction: String,
        /// Latent id from the evaluation set
        #[arg(long, value_name = "ID")]
        latent_id: String,
    },
    /// Re-check the manifest and artifact invariants of an output directory
    Verify {
        /// Output directory to verify
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

fn make_ctx(common: Common) -> Ctx {
    let workers = common.workers.unwrap_or_else(num_cpus::get_physical).max(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .ok();
    Ctx {
        out: common.out,
        config_path: common.config,
        seed: common.seed,
        force: common.force,
        remote: common.remote,
        workers,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BenchInit { common } => cmd_bench_init(&make_ctx(common)),
        Command::Discover {
            common,
            source_index,
        } => cmd_discover(&make_ctx(common), source_index),
        Command::Explain {
            common,
            directions,
            latents,
        } => {
            let ctx = make_ctx(common);
            cmd_explain(&ctx, directions.as_deref(), latents.as_deref())
        }
        Command::Attribute {
            common,
            direction,
            latent_id,
        } => cmd_attribute(&make_ctx(common), &direction, &latent_id),
        Command::Verify { out } => cmd_verify(&out),
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("cfdir: {e}");
            let code = exit_code(&e);
            ExitCode::from(code.clamp(0, EXIT_INTERNAL) as u8)
        }
    }
}
