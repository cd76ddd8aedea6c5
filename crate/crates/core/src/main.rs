use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use simlearn::dataset::{Dataset, DEFAULT_MIN_COVERAGE};
use simlearn::experiments::{
    balanced_labels, run_convergence, run_proof_of_concept, MentalModelOracle, PairSource,
};
use simlearn::store::replay;
use simlearn::synth::{generate, to_files, SyntheticConfig};
use simlearn::{Session, SessionConfig};

#[derive(Parser)]
#[command(
    name = "simlearn",
    version,
    about = "Interactive similarity learning over mixed-type records"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a dataset and print its summary.
    Load {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_COVERAGE)]
        min_coverage: f64,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        records: PathBuf,
        /// Label log to replay and append to; labels stay in memory without it.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = simlearn::active::DEFAULT_K_SUGGEST)]
        k_suggest: usize,
        #[arg(long, default_value_t = simlearn::retrieval::DEFAULT_K_RETRIEVE)]
        k_retrieve: usize,
        #[arg(long, default_value_t = DEFAULT_MIN_COVERAGE)]
        min_coverage: f64,
    },
    /// Print the active label set of a log as JSON lines.
    Export {
        #[arg(long)]
        labels: PathBuf,
    },
    /// Write a seeded synthetic dataset as schema and records files.
    Generate {
        #[arg(long, default_value_t = 60)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        records: PathBuf,
    },
    /// Simulated-user experiments.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Args)]
struct DataArgs {
    /// Schema file; a seeded synthetic dataset is used when omitted.
    #[arg(long, requires = "records")]
    schema: Option<PathBuf>,
    #[arg(long, requires = "schema")]
    records: Option<PathBuf>,
    /// Seed of the synthetic dataset.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
}

impl DataArgs {
    fn dataset(&self) -> simlearn::Result<Dataset> {
        let ds = match (&self.schema, &self.records) {
            (Some(s), Some(r)) => Dataset::load_files(s, r)?,
            _ => {
                generate(&SyntheticConfig {
                    seed: self.data_seed,
                    ..Default::default()
                })?
                .dataset
            }
        };
        Ok(ds.normalize())
    }
}

#[derive(Subcommand)]
enum Experiment {
    /// Train on oracle labels and check that age and team rank first.
    Poc {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 10)]
        labels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Measure weight change per iteration over permuted label orders.
    Convergence {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 50)]
        pool_size: usize,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output prefix; writes `<out>.txt` and `<out>.csv`.
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
}

fn write(path: &Path, contents: &str) -> simlearn::Result<()> {
    std::fs::write(path, contents).map_err(|e| simlearn::Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn run(cli: Cli) -> simlearn::Result<()> {
    match cli.command {
        Command::Load {
            schema,
            records,
            min_coverage,
        } => {
            let ds = Dataset::load_files(&schema, &records)?
                .drop_sparse(min_coverage)?
                .normalize();
            print!("{}", ds.summary());
        }
        Command::Serve {
            schema,
            records,
            labels,
            port,
            host,
            k_suggest,
            k_retrieve,
            min_coverage,
        } => {
            let config = SessionConfig {
                k_suggest,
                k_retrieve,
                min_coverage,
            };
            let session = Session::open(&schema, &records, labels.as_deref(), config)?;
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| simlearn::Error::InvalidArgument(format!("bad address: {e}")))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| simlearn::Error::Io {
                path: PathBuf::new(),
                source: e,
            })?;
            rt.block_on(simlearn::service::serve(session, addr))
                .map_err(|e| simlearn::Error::Io {
                    path: PathBuf::new(),
                    source: e,
                })?;
        }
        Command::Export { labels } => {
            for l in replay(&labels)?.active {
                println!("{}", serde_json::to_string(&l).expect("labels serialize"));
            }
        }
        Command::Generate {
            instances,
            seed,
            schema,
            records,
        } => {
            let s = generate(&SyntheticConfig {
                instances,
                seed,
                ..Default::default()
            })?;
            let (schema_text, records_text) = to_files(&s.dataset)?;
            write(&schema, &schema_text)?;
            write(&records, &records_text)?;
        }
        Command::Experiment(Experiment::Poc { data, labels, seed }) => {
            let ds = data.dataset()?;
            let report = run_proof_of_concept(
                &ds,
                &MentalModelOracle::default(),
                labels,
                &PairSource::RandomBalanced { seed },
            )?;
            println!(
                "labels: {}  cold start: {}",
                report.labels.len(),
                report.cold_start
            );
            for (name, w) in &report.weight_ranking {
                println!("{name:>24}  {w:.6}");
            }
            println!("top2_matches: {}", report.top2_matches);
        }
        Command::Experiment(Experiment::Convergence {
            data,
            pool_size,
            runs,
            seed,
            out,
        }) => {
            let ds = data.dataset()?;
            let pool = balanced_labels(&ds, &MentalModelOracle::default(), pool_size, seed)?;
            let report = run_convergence(&ds, &pool, runs, seed)?;
            let table = report.to_table();
            write(&with_extension(&out, "txt"), &table)?;
            write(&with_extension(&out, "csv"), &report.to_series())?;
            print!("{table}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
