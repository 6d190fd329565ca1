mod bench;
mod detect;
mod eval;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::Common;

#[derive(Parser)]
#[command(
    name = "pisa",
    version,
    about = "Pixelwise image saliency: detection, evaluation and timing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one grayscale saliency map per input plus a manifest.
    Detect {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(short, long)]
        out: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Score a dataset of images and ground-truth masks.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        eval: eval::EvalArgs,
    },
    /// Time both variants stage by stage.
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bench: bench::BenchArgs,
    },
    /// Print the resolved configuration in config-file form.
    Config {
        #[command(flatten)]
        common: Common,
    },
}

/// Exit status: 0 success, 1 some inputs failed, 2 bad configuration or no data.
pub enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Run(e.into())
    }
}

pub type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Detect { common, out, inputs } => detect::run(&common, &out, &inputs),
        Command::Eval { common, eval } => eval::run(&common, &eval),
        Command::Bench { common, bench } => bench::run(&common, &bench),
        Command::Config { common } => common.resolve(None).map(|cfg| {
            print!("{}", cfg.to_text());
            ExitCode::SUCCESS
        }),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
