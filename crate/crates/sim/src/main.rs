use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ucn_core::generate_channels;
use ucn_sim::channel_io::write_channels;
use ucn_sim::spec::parse_methods;
use ucn_sim::{report_trends, run_experiment, trial_seed, ExperimentSpec, SimError, SimResult};

#[derive(Parser)]
#[command(name = "ucn-sim", version, about = "Precoder experiments for user-centric networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a power / cluster-size sweep and write CSV results.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated method list, e.g. `rcg,mrt,zf`.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Write per-iteration trajectory files.
        #[arg(long)]
        trajectory: bool,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Summarize a results CSV.
    Report { results: PathBuf },
    /// Dump the channel draw of one trial in the text channel format.
    Channels {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> SimResult<()> {
    match cli.command {
        Command::Run { config, seed, out, methods, trajectory, trials } => {
            let mut spec = ExperimentSpec::from_path(&config)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(o) = out {
                spec.out_dir = o;
            }
            if let Some(m) = methods {
                spec.methods = parse_methods(&m).map_err(SimError::Spec)?;
            }
            if let Some(t) = trials {
                spec.trials = t;
            }
            spec.trajectory |= trajectory;
            let output = run_experiment(&spec)?;
            let failed = output.results.iter().filter(|r| r.summary.wsr_bits.is_none()).count();
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            if failed > 0 {
                eprintln!("{failed} cell(s) produced no precoder; see the status column");
            }
            Ok(())
        }
        Command::Report { results } => {
            let file = File::open(&results).map_err(|e| SimError::Io { path: results.clone(), source: e })?;
            println!("{}", report_trends(file)?);
            Ok(())
        }
        Command::Channels { config, seed, trial, out } => {
            let mut spec = ExperimentSpec::from_path(&config)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let net = spec.network_config(spec.power_dbm[0], spec.bsc[0]);
            let channels = generate_channels(&net, trial_seed(spec.seed, trial))?;
            match out {
                Some(path) => {
                    let file = File::create(&path).map_err(|e| SimError::Io { path: path.clone(), source: e })?;
                    let mut w = BufWriter::new(file);
                    write_channels(&channels, &mut w)
                        .and_then(|_| w.flush())
                        .map_err(|e| SimError::Io { path, source: e })
                }
                None => write_channels(&channels, &mut std::io::stdout().lock())
                    .map_err(|e| SimError::Io { path: "<stdout>".into(), source: e }),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
