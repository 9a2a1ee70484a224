//! Experiment driver behind the `bslab` binary.

pub mod argv;
pub mod cli;
pub mod commands;
pub mod error;
pub mod output;
pub mod presets;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;

use cli::{Cli, Command};
use error::CliResult;
use output::{Artifacts, Manifest};

fn out_dir(cmd: &Command) -> Option<PathBuf> {
    match cmd {
        Command::Simulate(a) => a.out.out.clone(),
        Command::Exact(a) => a.out.out.clone(),
        Command::Mc(a) => a.out.out.clone(),
        Command::Blocks(a) => a.out.out.clone(),
        Command::Percolate(a) => a.out.out.clone(),
        Command::Formulas(a) => a.out.out.clone(),
        Command::Drift(a) => a.out.out.clone(),
        Command::Preset(a) => Some(a.out.clone().unwrap_or_else(|| PathBuf::from("out").join(a.name.as_str()))),
        Command::Q0(_) | Command::Theta(_) | Command::Chains(_) => None,
    }
}

fn dispatch(cmd: &Command, art: &mut Artifacts) -> CliResult<Option<u64>> {
    match cmd {
        Command::Simulate(a) => commands::simulate(a, art),
        Command::Exact(a) => commands::exact(a, art),
        Command::Mc(a) => commands::mc(a, art),
        Command::Blocks(a) => commands::blocks(a, art),
        Command::Percolate(a) => commands::percolate(a, art),
        Command::Formulas(a) => commands::formulas(a, art),
        Command::Q0(a) => commands::q0(a),
        Command::Theta(a) => commands::theta(a),
        Command::Drift(a) => commands::drift(a, art),
        Command::Chains(a) => commands::chains(a),
        Command::Preset(a) => {
            presets::run(a.name, a.seed.seed, a.scale, art)?;
            Ok(Some(a.seed.seed))
        }
    }
}

fn execute(cli: &Cli, argv: &[OsString]) -> CliResult<()> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build()?;
    let mut art = Artifacts::new(out_dir(&cli.command))?;
    let seed = pool.install(|| dispatch(&cli.command, &mut art))?;
    if art.enabled() {
        let outputs = art.files().to_vec();
        let manifest = Manifest {
            tool: "bslab",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: cli.command.name(),
            argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
            seed,
            threads: pool.current_num_threads(),
            started_unix_secs: started,
            wall_time_secs: clock.elapsed().as_secs_f64(),
            outputs: &outputs,
        };
        art.write_json("manifest.json", &manifest)?;
        eprintln!("wrote {} files to {}", outputs.len() + 1, art.dir().expect("enabled").display());
    }
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn main_with(args: Vec<OsString>) -> i32 {
    let argv = match argv::expand(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
