use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hots_core::pipeline::init_threads;
use hots_core::{HotsError, Pipeline, RunConfig, Stage};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StageArg {
    Offline,
    Online,
    Reconstruct,
    Reference,
    Compare,
    All,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Self {
        match s {
            StageArg::Offline => Stage::Offline,
            StageArg::Online => Stage::Online,
            StageArg::Reconstruct => Stage::Reconstruct,
            StageArg::Reference => Stage::Reference,
            StageArg::Compare => Stage::Compare,
            StageArg::All => Stage::All,
        }
    }
}

/// Three-scale thermo-mechanical homogenization pipeline.
#[derive(Debug, Parser)]
#[command(name = "hots", version)]
struct Cli {
    /// Stage to run; `all` chains every stage.
    #[arg(value_enum)]
    stage: StageArg,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output.dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel kernels.
    #[arg(long)]
    threads: Option<usize>,
}

fn exit_code(e: &HotsError) -> u8 {
    match e.category() {
        "config" => 2,
        "missing" => 3,
        "solver" => 4,
        _ => 5,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = init_threads(cli.threads)
        .and_then(|()| RunConfig::load(&cli.config))
        .and_then(|config| Pipeline::new(config, cli.out).run(cli.stage.into()));
    match result {
        Ok(reports) => {
            for r in reports {
                println!("{}", r.summary.trim_end());
                log::info!("{} finished in {:.2} s", r.stage, r.seconds);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
