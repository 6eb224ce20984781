use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jointsmith::pipeline::{self, BackendChoice, Overrides, RunConfig};
use jointsmith::Error;

#[derive(Parser)]
#[command(name = "jointsmith", version, about = "Articulate part-segmented meshes into URDF")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    oracle: Option<BackendChoice>,
    /// Output directory; overrides run.out_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate every joint and export URDF.
    Articulate,
    /// Render the annotated prompt images only.
    Prompts {
        #[arg(long)]
        joint: Option<String>,
    },
    /// Score predictions against ground truth.
    Eval { predictions: PathBuf, ground_truth: PathBuf },
    /// Write the synthetic fixture corpus.
    Fixtures,
    /// Re-export the URDF of an earlier run.
    ExportUrdf,
    /// Refine an earlier run's geometry under randomized poses.
    Refine,
}

const CONFIG_ERROR: u8 = 2;

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    RunConfig::load(
        path,
        &Overrides {
            seed: cli.seed,
            backend: cli.oracle,
            out_dir: cli.out.clone(),
        },
    )
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::Io { .. } | Error::MeshParse { .. } | Error::LabelCountMismatch { .. } | Error::OracleAuth(_)
    )
}

fn run(cli: &Cli) -> Result<u8, Error> {
    match &cli.command {
        Command::Articulate => {
            let summary = pipeline::cmd_articulate(&load(cli)?)?;
            for j in &summary.joints {
                match &j.error {
                    Some(e) => println!("{:<24} {:<10} FAILED {e}", j.name, j.joint_type),
                    None => println!("{:<24} {:<10} {:?}", j.name, j.joint_type, j.solver),
                }
            }
            println!("wrote {}", summary.out_dir.display());
            Ok(u8::from(summary.failures() > 0))
        }
        Command::Prompts { joint } => {
            for path in pipeline::cmd_prompts(&load(cli)?, joint.as_deref())? {
                println!("{}", path.display());
            }
            Ok(0)
        }
        Command::Eval { predictions, ground_truth } => {
            let report = pipeline::cmd_eval(predictions, ground_truth, cli.out.as_deref())?;
            print!("{}", report.table());
            Ok(0)
        }
        Command::Fixtures => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("fixtures"));
            for path in pipeline::cmd_fixtures(&out, cli.seed.unwrap_or(0))? {
                println!("{}", path.display());
            }
            Ok(0)
        }
        Command::ExportUrdf => {
            let config = load(cli)?;
            let manifest = pipeline::cmd_export_urdf(&config)?;
            println!("{}", config.run.out_dir.join("urdf").join(manifest.urdf).display());
            Ok(0)
        }
        Command::Refine => {
            if let Some(objective) = pipeline::cmd_refine(&load(cli)?)? {
                println!("final objective {objective:.6}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_config_error(&e) { CONFIG_ERROR } else { 1 })
        }
    }
}
