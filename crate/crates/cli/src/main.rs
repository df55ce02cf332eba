use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use clusterforge::{load_catalogs, serve};
use clusterforge_core::dsl::{execute, parse_literal, Literal, RunContext};
use clusterforge_core::par::Exec;

const SCRIPT_ERROR: u8 = 1;
const USAGE_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "clusterforge", version, about = "Cluster and data-centre design automation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a design script
    Run {
        script: PathBuf,
        /// Override a setting, e.g. `--option econ.duty_cycle=0.5`
        #[arg(long = "option", value_name = "KEY=VALUE")]
        options: Vec<String>,
        /// Directory for output files
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Disable the data-parallel loops
        #[arg(long)]
        sequential: bool,
    },
    /// Serve the network and UPS designers over HTTP
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Switch and UPS catalogue databases
        #[arg(long = "catalog", required = true, num_args = 1..)]
        catalogs: Vec<PathBuf>,
    },
}

fn option_pair(raw: &str) -> Result<(String, Literal), String> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| format!("--option {raw:?}: expected KEY=VALUE"))?;
    // bare words are taken as strings so `--option performance.model=peak` works
    let value = parse_literal(value).unwrap_or_else(|_| Literal::Str(value.to_string()));
    Ok((key.trim().to_string(), value))
}

fn run(script: PathBuf, options: Vec<String>, out_dir: PathBuf, sequential: bool) -> ExitCode {
    let source = match std::fs::read_to_string(&script) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", script.display());
            return ExitCode::from(USAGE_ERROR);
        }
    };
    let mut ctx = RunContext::new(
        script.parent().map(PathBuf::from).unwrap_or_default(),
        out_dir,
    );
    if sequential {
        ctx.exec = Exec::Sequential;
    }
    for raw in &options {
        match option_pair(raw) {
            Ok(pair) => ctx.overrides.push(pair),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(USAGE_ERROR);
            }
        }
    }
    let (report, state) = execute(&source, ctx);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(text) = &report.summary_text {
        print!("{text}");
    }
    for path in &report.outputs {
        eprintln!("wrote {}", path.display());
    }
    match report.error {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("error: {}: {e}", script.display());
            // a bad --option is a usage problem, not a script problem
            if state.is_none() && matches!(e, clusterforge_core::dsl::DslError::Option { .. }) {
                ExitCode::from(USAGE_ERROR)
            } else {
                ExitCode::from(SCRIPT_ERROR)
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Cmd::Run {
            script,
            options,
            out_dir,
            sequential,
        } => run(script, options, out_dir, sequential),
        Cmd::Serve { bind, catalogs } => {
            let cat = match load_catalogs(&catalogs) {
                Ok(c) => Arc::new(c),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(USAGE_ERROR);
                }
            };
            let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
            let result = rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&bind).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                serve(listener, cat).await
            });
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {bind}: {e}");
                    ExitCode::from(SCRIPT_ERROR)
                }
            }
        }
    }
}
