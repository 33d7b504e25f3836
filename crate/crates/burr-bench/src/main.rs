use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use burr::hash::{fingerprint, master_hash};
use burr::{BuildConfig, CutStrategy, RibbonFilter, ThresholdMode};
use burr_bench::bench::{
    bench_construct, bench_filter, bench_strategies, records_to_csv, synth_keys,
    STRATEGY_CSV_HEADER,
};
use burr_bench::format;
use burr_bench::metrics::structural_bytes;

#[derive(Parser)]
#[command(name = "burr-bench", about = "Build, query, and benchmark burr retrieval filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an r-bit filter over keys and save the structure file.
    Build(BuildArgs),
    /// Query a structure file for one key.
    Query(QueryArgs),
    /// Benchmark harnesses; results are CSV with a header row.
    Bench {
        #[command(subcommand)]
        bench: BenchCommand,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Uncompressed,
    #[value(name = "2bit")]
    TwoBit,
    #[value(name = "1plus")]
    OnePlus,
}

impl From<ModeArg> for ThresholdMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Uncompressed => ThresholdMode::Uncompressed,
            ModeArg::TwoBit => ThresholdMode::TwoBit,
            ModeArg::OnePlus => ThresholdMode::OnePlusBit,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Nosearch,
    Minbump,
    Maxprev,
    Diff,
}

impl From<StrategyArg> for CutStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Nosearch => CutStrategy::NoSearch,
            StrategyArg::Minbump => CutStrategy::MinBump,
            StrategyArg::Maxprev => CutStrategy::MaxPrev,
            StrategyArg::Diff => CutStrategy::Diff,
        }
    }
}

/// Tunables shared by every command that builds structures.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// Bits per stored value / fingerprint.
    #[arg(long, default_value_t = 8)]
    r: u32,
    #[arg(long, default_value_t = 1000)]
    minbpt: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::OnePlus)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = StrategyArg::Nosearch)]
    strategy: StrategyArg,
    #[arg(long = "search-range", default_value_t = 50)]
    search_range: u32,
    /// Overload fraction (expected keys per bucket = b * (1 + overload)).
    #[arg(long, default_value_t = 0.05)]
    overload: f64,
    /// Number of bumping layers before the base layer.
    #[arg(long, default_value_t = 4)]
    layers: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ConfigArgs {
    fn to_config(&self) -> BuildConfig {
        BuildConfig {
            value_bits: self.r,
            threshold_mode: self.mode.into(),
            minbpt: self.minbpt,
            strategy: self.strategy.into(),
            search_range: self.search_range,
            overload: self.overload,
            layers: self.layers,
            seed: self.seed,
            ..BuildConfig::default()
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Build over n synthetic 8-byte keys.
    #[arg(long, conflicts_with = "keys")]
    n: Option<usize>,
    /// Build over the keys in this file, one per line.
    #[arg(long)]
    keys: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[command(flatten)]
    config: ConfigArgs,
    /// Structure file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    /// Structure file to load.
    #[arg(long = "in")]
    input: PathBuf,
    /// Key to look up (UTF-8 bytes).
    #[arg(long)]
    key: String,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Timed construction over a list of thread counts.
    Construct {
        #[arg(long)]
        n: usize,
        /// Comma-separated thread counts, e.g. 1,2,4,8.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        threads: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        repeats: u32,
        #[command(flatten)]
        config: ConfigArgs,
        /// CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean space overhead per additional thread for each cut strategy.
    Strategies {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        threads: usize,
        /// Comma-separated threshold modes to compare.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ModeArg::TwoBit, ModeArg::OnePlus])]
        modes: Vec<ModeArg>,
        #[arg(long = "num-seeds", default_value_t = 10)]
        num_seeds: u32,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Filter accuracy: false-negative count and false-positive rate.
    Filter {
        #[arg(long)]
        n: usize,
        /// Number of non-key probes for the false-positive rate.
        #[arg(long, default_value_t = 1_000_000)]
        negatives: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_output(out: Option<&PathBuf>, csv: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn read_key_file(path: &PathBuf) -> Result<Vec<Vec<u8>>> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(data
        .split(|&b| b == b'\n')
        .map(|line| line.strip_suffix(b"\r").unwrap_or(line))
        .filter(|line| !line.is_empty())
        .map(|line| line.to_vec())
        .collect())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Build(args) => {
            let config = args.config.to_config();
            let (filter, stats) = match (&args.n, &args.keys) {
                (Some(n), None) => {
                    let keys = synth_keys(*n, config.seed);
                    RibbonFilter::build_with_stats(&keys, &config, args.threads)?
                }
                (None, Some(path)) => {
                    let keys = read_key_file(path)?;
                    RibbonFilter::build_with_stats(&keys, &config, args.threads)?
                }
                _ => bail!("exactly one of --n and --keys is required"),
            };
            let structure = filter.structure();
            format::save(structure, &args.out)?;
            eprintln!(
                "built {} layers + base in {:.3}s (sort {:.3}s, insert {:.3}s, backsub {:.3}s); \
                 {} structural bytes -> {}",
                structure.layers().len(),
                stats.total_seconds,
                stats.sort_seconds,
                stats.insert_seconds,
                stats.backsub_seconds,
                structural_bytes(structure),
                args.out.display(),
            );
        }
        Command::Query(args) => {
            let structure = format::load(&args.input)?;
            let key = args.key.as_bytes();
            let value = structure.query(key);
            let h = master_hash(key, structure.config().seed);
            let matches = value == fingerprint(h, structure.config().value_bits);
            println!("value={value} contains={matches}");
        }
        Command::Bench { bench } => match bench {
            BenchCommand::Construct {
                n,
                threads,
                repeats,
                config,
                out,
            } => {
                let records = bench_construct(n, &threads, repeats, &config.to_config())?;
                write_output(out.as_ref(), &records_to_csv(&records))?;
            }
            BenchCommand::Strategies {
                n,
                threads,
                modes,
                num_seeds,
                config,
                out,
            } => {
                let modes: Vec<ThresholdMode> = modes.into_iter().map(Into::into).collect();
                let strategies = [
                    CutStrategy::NoSearch,
                    CutStrategy::MinBump,
                    CutStrategy::MaxPrev,
                    CutStrategy::Diff,
                ];
                let cfg = config.to_config();
                let summaries = bench_strategies(
                    n,
                    threads,
                    cfg.minbpt,
                    cfg.search_range,
                    &modes,
                    &strategies,
                    num_seeds,
                    &cfg,
                )?;
                let mut csv = String::from(STRATEGY_CSV_HEADER);
                csv.push('\n');
                for s in &summaries {
                    csv.push_str(&s.csv_row());
                    csv.push('\n');
                }
                write_output(out.as_ref(), &csv)?;
            }
            BenchCommand::Filter {
                n,
                negatives,
                threads,
                config,
                out,
            } => {
                let (record, false_negatives) =
                    bench_filter(n, negatives, &config.to_config(), threads)?;
                if false_negatives > 0 {
                    bail!("{false_negatives} false negatives: retrieval contract violated");
                }
                let mut csv = String::from(burr_bench::bench::BenchRecord::CSV_HEADER);
                csv.push('\n');
                csv.push_str(&record.csv_row());
                csv.push('\n');
                write_output(out.as_ref(), &csv)?;
            }
        },
    }
    std::io::stdout().flush()?;
    Ok(())
}
