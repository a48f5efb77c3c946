mod args;
mod error;
mod experiment;
mod output;
mod recipes;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use error::{invalid, CliError};
use experiment::{Experiment, ExperimentSpec, Output};

fn resolve(cli: &Cli) -> Result<ExperimentSpec, CliError> {
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        return output::read_config(&text);
    }
    if let Some(r) = cli.recipe {
        let spec = recipes::recipe(r, cli.quick);
        if let Some(cmd) = &cli.command {
            let wanted = cmd.name();
            if spec.experiments.iter().all(|e| e.name() != wanted) {
                return invalid(format!("recipe {r:?} does not run `{wanted}`"));
            }
        }
        return Ok(spec);
    }
    match &cli.command {
        Some(cmd) => Ok(ExperimentSpec::single(Experiment::from_command(cmd)?)),
        None => invalid("give a subcommand, --recipe or --config; see --help"),
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return invalid("thread count must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot configure {threads} threads: {e}")))?;
    }
    let spec = resolve(cli)?;
    experiment::validate(&spec)?;

    let mut rows = Vec::new();
    let mut catalog = None;
    for e in &spec.experiments {
        match experiment::run(e)? {
            Output::Rows(r) => rows.extend(r),
            Output::Catalog(c) => catalog = Some(c),
        }
    }
    let text = match &catalog {
        Some(c) => {
            eprintln!(
                "{} sets (max mu {}, max degree {}); {}",
                c.records.len(),
                c.max_mu,
                c.q,
                (1..=c.max_mu).map(|mu| format!("mu={mu}: {}", c.count_with_mu(mu))).collect::<Vec<_>>().join(", ")
            );
            let data = serde_json::to_value(c).map_err(|e| CliError::Io(format!("cannot encode catalog: {e}")))?;
            output::json(&spec, data)?
        }
        None => output::csv(&spec, &rows)?,
    };
    match &cli.out {
        Some(path) => {
            output::write_atomic(path, &text)?;
            if catalog.is_none() {
                eprintln!("wrote {} rows to {}", rows.len(), path.display());
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
