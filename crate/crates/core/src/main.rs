use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nbofdma::cli::{self, check, exit, report, Format, MetricRegistry};
use nbofdma::Error;

#[derive(Parser)]
#[command(name = "nbofdma", version, about = "Mobility-induced ICI and sum-rate analysis for NB-OFDMA uplinks")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured sweep and write one row per grid point.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: Format,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Evaluate every analytic quantity at a single operating point.
    Analytic {
        /// Base configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        v_max: Option<f64>,
        #[arg(long)]
        carrier_frequency_hz: Option<f64>,
        #[arg(long)]
        subcarrier_spacing_hz: Option<f64>,
        #[arg(long)]
        snr_db: Option<f64>,
    },
    /// Run the built-in oracle checks.
    Check,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match args.command {
        Command::Sweep {
            config,
            output,
            format,
            seed,
            trials,
        } => sweep(&config, output.as_deref(), format, seed, trials),
        Command::Analytic {
            config,
            v_max,
            carrier_frequency_hz,
            subcarrier_spacing_hz,
            snr_db,
        } => analytic(config.as_deref(), v_max, carrier_frequency_hz, subcarrier_spacing_hz, snr_db),
        Command::Check => run_check(),
    };
    ExitCode::from(code)
}

fn fail(err: &Error) -> u8 {
    eprintln!("error: {err}");
    match err {
        Error::Io { .. } => exit::IO,
        Error::Domain { .. } | Error::Quadrature { .. } => exit::NUMERICAL,
        _ => exit::CONFIG,
    }
}

fn read_config(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn sweep(config: &Path, output: Option<&Path>, format: Format, seed: Option<u64>, trials: Option<u64>) -> u8 {
    let registry = MetricRegistry::builtin();
    let text = match read_config(config) {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };
    let mut spec = match cli::parse_config(&text, &registry) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    if let Some(seed) = seed {
        spec.plan.seed = seed;
    }
    if let Some(trials) = trials {
        spec.plan.trials = trials;
    }
    let table = match cli::run_sweep(&spec, &registry) {
        Ok(t) => t,
        Err(e) => return fail(&e),
    };

    let written = match output {
        Some(path) => File::create(path)
            .and_then(|f| {
                let mut w = BufWriter::new(f);
                cli::emit(&table, format, &mut w)?;
                w.flush()
            })
            .map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            }),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            cli::emit(&table, format, &mut lock)
                .and_then(|_| lock.flush())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    };
    if let Err(e) = written {
        return fail(&e);
    }
    if table.has_failures() {
        for row in table.rows.iter().filter(|r| r.error.is_some()) {
            eprintln!("point {}: {}", row.axis_value, row.error.as_deref().unwrap_or(""));
        }
        return exit::NUMERICAL;
    }
    exit::SUCCESS
}

fn analytic(
    config: Option<&Path>,
    v_max: Option<f64>,
    carrier_frequency_hz: Option<f64>,
    subcarrier_spacing_hz: Option<f64>,
    snr_db: Option<f64>,
) -> u8 {
    let registry = MetricRegistry::builtin();
    let text = match config.map(read_config).transpose() {
        Ok(t) => t.unwrap_or_default(),
        Err(e) => return fail(&e),
    };
    let spec = match cli::parse_config(&text, &registry) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let mut scenario = spec.base;
    if let Some(v) = v_max {
        scenario.mobility.max_velocity_mps = v;
    }
    if let Some(fc) = carrier_frequency_hz {
        scenario.system.carrier_frequency_hz = fc;
    }
    if let Some(df) = subcarrier_spacing_hz {
        scenario.system.subcarrier_spacing_hz = df;
    }
    if let Some(snr) = snr_db {
        scenario.system = scenario.system.with_snr_db(snr);
    }
    if let Err(e) = scenario.validate() {
        return fail(&e);
    }
    match report::analytic_report(&scenario, spec.plan.target_index) {
        Ok(lines) => {
            for (name, value) in lines {
                println!("{name} = {}", cli::emit::format_number(value));
            }
            exit::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn run_check() -> u8 {
    let outcomes = check::run_checks();
    for o in &outcomes {
        println!("[{}] {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    if outcomes.iter().all(|o| o.passed) {
        exit::SUCCESS
    } else {
        exit::NUMERICAL
    }
}
