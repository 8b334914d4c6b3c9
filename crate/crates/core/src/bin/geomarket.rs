//! Command-line harness: dataset ingestion, workload generation, benchmark
//! runs and scenario replays, with CSV/JSON reports.

use clap::{Parser, Subcommand, ValueEnum};
use geomarket::bench::{
    self, emit_report, Dataset, QueryWorkload, ReportFormat, DEFAULT_QUERY_SIZES_M,
};
use geomarket::geo::{BoundingBox, DomainParams, LA_BBOX};
use geomarket::market::MarketConfig;
use geomarket::scenario::{self, Scenario};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "geomarket",
    about = "Privacy-preserving geo-marketplace prototype: encrypted spatial search benchmarks and marketplace simulation",
    version
)]
struct Cli {
    /// TOML configuration file (defaults are used when absent).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Deterministic seed for keys, sampling and randomized structures.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Output directory for reports.
    #[arg(long, global = true, default_value = "reports")]
    out_dir: PathBuf,
    /// Override the grid side length (power of two).
    #[arg(long, global = true)]
    l: Option<u32>,
    /// Override the query-size level cut.
    #[arg(long, global = true)]
    h_max: Option<u8>,
    /// Override the symmetric-index security level (128 or 256).
    #[arg(long, global = true)]
    sse_bits: Option<u32>,
    /// Override the bilinear-group size in bits.
    #[arg(long, global = true)]
    group_bits: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a default configuration file.
    InitConfig {
        /// Destination path.
        #[arg(long, default_value = "geomarket.toml")]
        path: PathBuf,
    },
    /// Load check-ins from a CSV/TSV export, filter by the configured
    /// bounding box, and write a normalized dataset.
    Ingest {
        /// Input check-in file (user,lat,lon or user,time,lat,lon,loc).
        #[arg(long)]
        input: PathBuf,
        /// Normalized dataset output (JSON).
        #[arg(long, default_value = "dataset.json")]
        output: PathBuf,
        /// Optional nested sample sizes, e.g. 10000,20000,50000.
        #[arg(long, value_delimiter = ',')]
        samples: Vec<usize>,
    },
    /// Generate a query workload anchored at dataset locations.
    Workload {
        #[arg(long)]
        dataset: PathBuf,
        /// Queries per size class.
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value = "workload.json")]
        output: PathBuf,
    },
    /// Build the symmetric encrypted index over a dataset and measure
    /// query cost under arbitrary and restricted placement.
    BenchSse {
        /// Dataset file; a synthetic one is generated when omitted.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Synthetic object count when no dataset is given.
        #[arg(long, default_value_t = 2000)]
        objects: usize,
        /// Workload file; generated on the fly when omitted.
        #[arg(long)]
        workload: Option<PathBuf>,
        /// Queries per size class for generated workloads.
        #[arg(long, default_value_t = 10)]
        queries: usize,
    },
    /// Encrypt a flat file of object locations and measure token, match
    /// and parallel-scan cost.
    BenchHve {
        #[arg(long, default_value_t = 1000)]
        objects: usize,
        /// Worker counts to scan with.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2, 4])]
        workers: Vec<usize>,
    },
    /// Measure the on-chain gas and dollar cost of the setup and purchase
    /// sequences.
    BenchCost,
    /// Replay a scenario script against a fresh marketplace world.
    Scenario {
        /// Script file (JSON). The bundled demo runs when omitted.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Write the bundled demo script to this path and exit.
        #[arg(long)]
        emit_demo: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<MarketConfig, String> {
    let mut config = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            toml::from_str(&text).map_err(|e| format!("bad config: {e}"))?
        }
        None => {
            let domain = DomainParams::new(10, 0, LA_BBOX).expect("default domain");
            MarketConfig::desk_scale(domain)
        }
    };
    // Command-line overrides win over the config file.
    if cli.l.is_some() || cli.h_max.is_some() {
        let l = cli.l.unwrap_or(config.domain.l());
        if !l.is_power_of_two() {
            return Err(format!("grid side {l} is not a power of two"));
        }
        let h_max = cli.h_max.unwrap_or(config.domain.h_max());
        config.domain = DomainParams::new(l.trailing_zeros() as u8, h_max, *config.domain.bbox())
            .map_err(|e| e.to_string())?;
    }
    if let Some(bits) = cli.sse_bits {
        config.sse_security_bits = bits;
    }
    if let Some(bits) = cli.group_bits {
        config.group_bits = bits;
    }
    Ok(config)
}

fn load_dataset(path: &Path) -> Result<Dataset, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read dataset {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("bad dataset: {e}"))
}

fn ensure_out_dir(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

fn run(cli: Cli) -> Result<(), String> {
    let config = load_config(&cli)?;
    let format: ReportFormat = cli.format.into();
    let ext = match format {
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
    };

    match cli.command {
        Command::InitConfig { path } => {
            let text = toml::to_string_pretty(&config).map_err(|e| e.to_string())?;
            std::fs::write(&path, text).map_err(|e| e.to_string())?;
            println!("wrote default configuration to {}", path.display());
        }
        Command::Ingest {
            input,
            output,
            samples,
        } => {
            let bbox: BoundingBox = *config.domain.bbox();
            let dataset = bench::load_checkins(&input, &bbox).map_err(|e| e.to_string())?;
            println!(
                "ingested {} check-ins inside the configured bounding box",
                dataset.len()
            );
            std::fs::write(&output, serde_json::to_string(&dataset).unwrap())
                .map_err(|e| e.to_string())?;
            println!("dataset written to {}", output.display());
            if !samples.is_empty() {
                for (i, sample) in bench::nested_samples(&dataset, &samples, cli.seed)
                    .iter()
                    .enumerate()
                {
                    let path = output.with_extension(format!("sample{}.json", samples[i]));
                    std::fs::write(&path, serde_json::to_string(sample).unwrap())
                        .map_err(|e| e.to_string())?;
                    println!(
                        "nested sample of {} written to {}",
                        sample.len(),
                        path.display()
                    );
                }
            }
        }
        Command::Workload {
            dataset,
            count,
            output,
        } => {
            let dataset = load_dataset(&dataset)?;
            let workload = bench::gen_workload(
                &dataset,
                &config.domain,
                &DEFAULT_QUERY_SIZES_M,
                count,
                cli.seed,
            )
            .map_err(|e| e.to_string())?;
            std::fs::write(&output, serde_json::to_string_pretty(&workload).unwrap())
                .map_err(|e| e.to_string())?;
            println!(
                "workload of {} queries written to {}",
                workload.queries.len(),
                output.display()
            );
        }
        Command::BenchSse {
            dataset,
            objects,
            workload,
            queries,
        } => {
            ensure_out_dir(&cli.out_dir)?;
            let data = match &dataset {
                Some(p) => load_dataset(p)?,
                None => bench::synthetic_dataset(objects, config.domain.bbox(), cli.seed),
            };
            let wl: QueryWorkload = match &workload {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| e.to_string())?;
                    serde_json::from_str(&text).map_err(|e| format!("bad workload: {e}"))?
                }
                None => bench::gen_workload(
                    &data,
                    &config.domain,
                    &DEFAULT_QUERY_SIZES_M,
                    queries,
                    cli.seed,
                )
                .map_err(|e| e.to_string())?,
            };
            let report = bench::run_sse_bench(
                &data,
                &config.domain,
                config.sse_security_bits,
                &wl,
                cli.seed,
            )
            .map_err(|e| e.to_string())?;
            let path = cli.out_dir.join(format!("bench-sse.{ext}"));
            emit_report(&report, format, &path).map_err(|e| e.to_string())?;
            println!(
                "index: {} objects, {} postings, {} bytes, built in {:.1} ms",
                report.objects, report.postings, report.index_bytes, report.build_ms
            );
            for row in &report.rows {
                println!(
                    "size {:?} m: arbitrary {:.1} pairs / {:.1} postings, restricted 1 pair / {:.1} postings",
                    row.size_m,
                    row.arbitrary.avg_conjunctive_pairs,
                    row.arbitrary.avg_first_keyword_postings,
                    row.restricted.avg_first_keyword_postings,
                );
            }
            println!("report written to {}", path.display());
        }
        Command::BenchHve { objects, workers } => {
            ensure_out_dir(&cli.out_dir)?;
            let report = bench::run_hve_bench(
                config.group_bits,
                &config.domain,
                objects,
                &workers,
                cli.seed,
            )
            .map_err(|e| e.to_string())?;
            let path = cli.out_dir.join(format!("bench-hve.{ext}"));
            emit_report(&report, format, &path).map_err(|e| e.to_string())?;
            println!(
                "{} objects, {} levels per bundle, {} pairings per match, token {} bytes",
                report.objects, report.bundle_levels, report.pairings_per_match, report.token_bytes
            );
            for row in &report.worker_rows {
                println!(
                    "workers {}: scan {:.1} ms, speedup {:.2}, {} matches",
                    row.workers, row.scan_ms, row.speedup, row.matches
                );
            }
            println!("report written to {}", path.display());
        }
        Command::BenchCost => {
            ensure_out_dir(&cli.out_dir)?;
            let report =
                bench::run_cost_bench(&config.gas, &config.policy).map_err(|e| e.to_string())?;
            let path = cli.out_dir.join(format!("bench-cost.{ext}"));
            emit_report(&report, format, &path).map_err(|e| e.to_string())?;
            for row in report.setup_rows.iter().chain(&report.purchase_rows) {
                println!("{:<35} {:>8} gas  ${:.4}", row.operation, row.gas, row.usd);
            }
            println!(
                "owner setup total: {} gas (${:.4}); purchase total: {} gas (${:.4})",
                report.owner_setup_gas,
                report.owner_setup_usd,
                report.purchase_gas,
                report.purchase_usd
            );
            println!("report written to {}", path.display());
        }
        Command::Scenario { script, emit_demo } => {
            if let Some(path) = emit_demo {
                let demo = scenario::demo_scenario(&config.domain);
                std::fs::write(&path, demo.to_json()).map_err(|e| e.to_string())?;
                println!("demo scenario written to {}", path.display());
                return Ok(());
            }
            let script = match &script {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| e.to_string())?;
                    Scenario::from_json(&text).map_err(|e| e.to_string())?
                }
                None => scenario::demo_scenario(&config.domain),
            };
            let (world, report) =
                scenario::run_scenario(&script, config, &cli.seed.to_be_bytes())
                    .map_err(|e| e.to_string())?;
            for step in &report.steps {
                println!("[{:>2}] {}", step.step, step.description);
            }
            println!(
                "total gas {} (${:.4}); offers completed {}, reversed {}; funds conserved: {}",
                report.total_gas,
                report.total_usd,
                report.offers_completed,
                report.offers_reversed,
                report.funds_conserved
            );
            ensure_out_dir(&cli.out_dir)?;
            let log_path = cli.out_dir.join("scenario-txlog.jsonl");
            std::fs::write(&log_path, world.ledger.export_tx_log())
                .map_err(|e| e.to_string())?;
            println!("transaction log written to {}", log_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
