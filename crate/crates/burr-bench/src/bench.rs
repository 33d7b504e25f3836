//! Benchmark harnesses: synthetic key sets, timed construction records,
//! strategy comparisons, and filter accuracy runs. Everything emits CSV
//! rows that carry their full configuration.

use std::fmt::Write as _;

use burr::hash::mix64;
use burr::{BuildConfig, BuildError, BuildStats, CutStrategy, RibbonFilter, ThresholdMode};

use crate::metrics::{overhead_per_additional_thread, structural_bytes};

/// `n` distinct 8-byte keys: 64-bit counters mixed with the run seed.
pub fn synth_keys(n: usize, seed: u64) -> Vec<[u8; 8]> {
    (0..n as u64).map(|i| mix64(seed ^ i).to_le_bytes()).collect()
}

/// Probe keys disjoint from [`synth_keys`] for the same seed: the counter
/// space starts at 2^63, and the mix is a bijection.
pub fn synth_negative_keys(n: usize, seed: u64) -> Vec<[u8; 8]> {
    (0..n as u64)
        .map(|i| mix64(seed ^ (i | 1 << 63)).to_le_bytes())
        .collect()
}

/// One benchmark measurement. `total >= sort + insert + backsub`; the
/// residual is orchestration (hashing, planning, merging).
#[derive(Clone, Debug)]
pub struct BenchRecord {
    pub n: usize,
    pub threads: usize,
    pub minbpt: u32,
    pub mode: ThresholdMode,
    pub strategy: CutStrategy,
    pub search_range: u32,
    pub seed: u64,
    pub repeat: u32,
    pub sort_seconds: f64,
    pub insert_seconds: f64,
    pub backsub_seconds: f64,
    pub total_seconds: f64,
    pub structural_bytes: u64,
    pub bumped_per_layer: Vec<usize>,
    pub fp_rate: Option<f64>,
}

impl BenchRecord {
    pub const CSV_HEADER: &'static str = "n,threads,minbpt,mode,strategy,search_range,seed,repeat,\
         sort_seconds,insert_seconds,backsub_seconds,total_seconds,structural_bytes,\
         bumped_per_layer,fp_rate";

    pub fn csv_row(&self) -> String {
        let mut bumped = String::new();
        for (i, count) in self.bumped_per_layer.iter().enumerate() {
            if i > 0 {
                bumped.push(';');
            }
            let _ = write!(bumped, "{count}");
        }
        let fp = self.fp_rate.map_or(String::new(), |r| format!("{r:.8}"));
        format!(
            "{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{},{}",
            self.n,
            self.threads,
            self.minbpt,
            self.mode,
            self.strategy,
            self.search_range,
            self.seed,
            self.repeat,
            self.sort_seconds,
            self.insert_seconds,
            self.backsub_seconds,
            self.total_seconds,
            self.structural_bytes,
            bumped,
            fp,
        )
    }

    fn from_build(config: &BuildConfig, n: usize, threads: usize, repeat: u32, stats: &BuildStats, bytes: u64) -> Self {
        BenchRecord {
            n,
            threads,
            minbpt: config.minbpt,
            mode: config.threshold_mode,
            strategy: config.strategy,
            search_range: config.search_range,
            seed: config.seed,
            repeat,
            sort_seconds: stats.sort_seconds,
            insert_seconds: stats.insert_seconds,
            backsub_seconds: stats.backsub_seconds,
            total_seconds: stats.total_seconds,
            structural_bytes: bytes,
            bumped_per_layer: stats.bumped_per_layer.clone(),
            fp_rate: None,
        }
    }
}

/// Renders records as a CSV document with a header row.
pub fn records_to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(BenchRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Builds an `r`-bit filter over `n` synthetic keys once per requested
/// thread count and repeat, timing the construction phases.
pub fn bench_construct(
    n: usize,
    threads_list: &[usize],
    repeats: u32,
    config: &BuildConfig,
) -> Result<Vec<BenchRecord>, BuildError> {
    let keys = synth_keys(n, config.seed);
    let mut records = Vec::new();
    for &threads in threads_list {
        for repeat in 0..repeats {
            let (filter, stats) = RibbonFilter::build_with_stats(&keys, config, threads)?;
            let bytes = structural_bytes(filter.structure());
            records.push(BenchRecord::from_build(config, n, threads, repeat, &stats, bytes));
        }
    }
    Ok(records)
}

/// Space overhead per additional thread for one configuration: builds
/// with `threads` and with one thread, then divides the byte difference
/// by `threads - 1`.
pub fn measure_overhead(n: usize, threads: usize, config: &BuildConfig) -> Result<f64, BuildError> {
    assert!(threads >= 2);
    let keys = synth_keys(n, config.seed);
    let multi = RibbonFilter::build(&keys, config, threads)?;
    let single = RibbonFilter::build(&keys, config, 1)?;
    Ok(overhead_per_additional_thread(
        structural_bytes(multi.structure()),
        structural_bytes(single.structure()),
        threads,
    ))
}

/// Mean per-thread overhead of one mode/strategy cell.
#[derive(Clone, Debug)]
pub struct StrategySummary {
    pub n: usize,
    pub threads: usize,
    pub minbpt: u32,
    pub search_range: u32,
    pub mode: ThresholdMode,
    pub strategy: CutStrategy,
    pub seeds: u32,
    pub mean_overhead_bytes: f64,
}

pub const STRATEGY_CSV_HEADER: &str =
    "n,threads,minbpt,search_range,mode,strategy,seeds,mean_overhead_bytes_per_additional_thread";

impl StrategySummary {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3}",
            self.n,
            self.threads,
            self.minbpt,
            self.search_range,
            self.mode,
            self.strategy,
            self.seeds,
            self.mean_overhead_bytes,
        )
    }
}

/// Runs every requested strategy and mode over a fixed seed set and
/// reports the mean overhead per additional thread. The single-thread
/// baseline is built once per (seed, mode): it has no cut points, so the
/// strategy cannot matter.
#[allow(clippy::too_many_arguments)]
pub fn bench_strategies(
    n: usize,
    threads: usize,
    minbpt: u32,
    search_range: u32,
    modes: &[ThresholdMode],
    strategies: &[CutStrategy],
    num_seeds: u32,
    base_config: &BuildConfig,
) -> Result<Vec<StrategySummary>, BuildError> {
    assert!(threads >= 2);
    let mut totals = vec![0.0f64; modes.len() * strategies.len()];
    for seed_index in 0..num_seeds {
        let seed = base_config.seed.wrapping_add(seed_index as u64);
        let keys = synth_keys(n, seed);
        for (mi, &mode) in modes.iter().enumerate() {
            let config = BuildConfig {
                threshold_mode: mode,
                minbpt,
                search_range,
                seed,
                ..base_config.clone()
            };
            let single = RibbonFilter::build(&keys, &config, 1)?;
            let single_bytes = structural_bytes(single.structure());
            drop(single);
            for (si, &strategy) in strategies.iter().enumerate() {
                let config = BuildConfig { strategy, ..config.clone() };
                let multi = RibbonFilter::build(&keys, &config, threads)?;
                totals[mi * strategies.len() + si] += overhead_per_additional_thread(
                    structural_bytes(multi.structure()),
                    single_bytes,
                    threads,
                );
            }
        }
    }
    let mut summaries = Vec::new();
    for (mi, &mode) in modes.iter().enumerate() {
        for (si, &strategy) in strategies.iter().enumerate() {
            summaries.push(StrategySummary {
                n,
                threads,
                minbpt,
                search_range,
                mode,
                strategy,
                seeds: num_seeds,
                mean_overhead_bytes: totals[mi * strategies.len() + si] / num_seeds as f64,
            });
        }
    }
    Ok(summaries)
}

/// Filter accuracy run: builds over `n` keys, probes all of them plus
/// `negatives` disjoint keys. Returns the timed record (with the
/// false-positive rate filled in) and the false-negative count, which the
/// retrieval contract requires to be zero.
pub fn bench_filter(
    n: usize,
    negatives: usize,
    config: &BuildConfig,
    threads: usize,
) -> Result<(BenchRecord, usize), BuildError> {
    let keys = synth_keys(n, config.seed);
    let (filter, stats) = RibbonFilter::build_with_stats(&keys, config, threads)?;
    let false_negatives = keys.iter().filter(|k| !filter.may_contain(&k[..])).count();
    let probes = synth_negative_keys(negatives, config.seed);
    let false_positives = probes.iter().filter(|k| filter.may_contain(&k[..])).count();
    let mut record = BenchRecord::from_build(
        config,
        n,
        threads,
        0,
        &stats,
        structural_bytes(filter.structure()),
    );
    record.fp_rate = (negatives > 0).then(|| false_positives as f64 / negatives as f64);
    Ok((record, false_negatives))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_keys_are_distinct_and_disjoint() {
        let keys = synth_keys(10_000, 42);
        let negatives = synth_negative_keys(10_000, 42);
        let mut all: Vec<[u8; 8]> = keys.iter().chain(negatives.iter()).copied().collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 20_000);
    }

    #[test]
    fn synthetic_keys_are_seed_dependent_and_deterministic() {
        assert_eq!(synth_keys(100, 7), synth_keys(100, 7));
        assert_ne!(synth_keys(100, 7), synth_keys(100, 8));
    }

    #[test]
    fn construct_records_have_sane_fields() {
        let config = BuildConfig {
            seed: 3,
            ..BuildConfig::default()
        };
        let records = bench_construct(20_000, &[1], 1, &config).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!((r.n, r.threads, r.repeat), (20_000, 1, 0));
        assert!(r.total_seconds >= r.sort_seconds + r.insert_seconds + r.backsub_seconds);
        assert_eq!(r.bumped_per_layer.len(), 4);
        assert!(r.structural_bytes > 0);
        let csv = records_to_csv(&records);
        assert!(csv.starts_with("n,threads,"));
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), 15);
    }

    #[test]
    fn filter_bench_has_no_false_negatives() {
        let config = BuildConfig {
            seed: 5,
            ..BuildConfig::default()
        };
        let (record, false_negatives) = bench_filter(30_000, 30_000, &config, 2).unwrap();
        assert_eq!(false_negatives, 0);
        let rate = record.fp_rate.unwrap();
        assert!((rate - 1.0 / 256.0).abs() < 0.004, "fp rate {rate}");
    }
}
