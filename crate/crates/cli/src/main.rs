use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mpscoll_cli::{kernel_norms, reproduce, run, CliError, ExperimentConfig, Figure};

#[derive(Parser)]
#[command(name = "mpscoll", version, about = "Collision models with correlated matrix-product-state environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the `output` field; `-` writes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the data behind a figure.
    Reproduce {
        figure: Figure,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Norms of the exact and second-order memory kernels at step k.
    Kernel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long = "m-max")]
        m_max: usize,
    },
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) if p != Path::new("-") => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
            log::info!("wrote {}", p.display());
            Ok(())
        }
        _ => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out } => {
            let config = ExperimentConfig::load(&config)?;
            let table = run(&config)?;
            emit(&table.to_csv(), out.as_deref().or(config.output.as_deref()))
        }
        Command::Reproduce { figure, out } => {
            for path in reproduce(figure, &out)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Validate { config } => {
            ExperimentConfig::load(&config)?;
            println!("ok");
            Ok(())
        }
        Command::Kernel { config, k, m_max } => {
            let config = ExperimentConfig::load(&config)?;
            print!("{}", kernel_norms(&config, k, m_max)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
