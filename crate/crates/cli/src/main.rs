use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tactics_lab::{examples, thread_cap, CliError, Overrides, Scenario, THREADS_ENV};

/// Runs limit-order and market-order tactic scenarios.
#[derive(Parser)]
#[command(name = "tactics-lab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file (or a bundled example) and write its outputs.
    Run {
        /// Scenario TOML file.
        #[arg(required_unless_present = "example", conflicts_with = "example")]
        config: Option<PathBuf>,
        /// Run a bundled example by name instead of a file.
        #[arg(long)]
        example: Option<String>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the bundled example scenarios.
    ListExamples,
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::ListExamples => {
            for ex in examples::ALL {
                let s = ex.scenario()?;
                println!(
                    "{:<24} {:<11} {}",
                    ex.name,
                    s.kind.section(),
                    s.description.unwrap_or_default()
                );
            }
            Ok(())
        }
        Cmd::Run {
            config,
            example,
            seed,
            out,
        } => {
            if let Some(n) = thread_cap(std::env::var(THREADS_ENV).ok().as_deref())? {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Internal(e.to_string()))?;
            }
            let mut s: Scenario = match (config, example) {
                (Some(path), _) => tactics_lab::load(&path)?,
                (None, Some(name)) => examples::find(&name)
                    .ok_or_else(|| CliError::Config(format!("no bundled example `{name}`")))?
                    .scenario()?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            Overrides { seed, out_dir: out }.apply(&mut s);
            let r = tactics_lab::run(&s)?;
            for line in &r.digest {
                println!("{line}");
            }
            for p in [
                Some(&r.csv),
                Some(&r.dat),
                r.summary.as_ref(),
                Some(&r.manifest),
            ]
            .into_iter()
            .flatten()
            {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tactics-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
