//! Thread-boundary planning and parallel layer construction.
//!
//! A layer is split into one partition per worker at bucket boundaries.
//! The last bucket before each cut gets a forced threshold of
//! `b - w + 1`, so no kept row's coefficient window can cross the cut
//! slot and the partitions operate on provably disjoint slot ranges. The
//! finished layer is indistinguishable from a sequentially built one, so
//! queries never learn the construction thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;

use crate::hash::{coefficient_word, layer_hash, row_address, MasterHash};
use crate::layer::{derive_layer_seed, size_layer, BuildConfig, Layer, LayerReport};
use crate::solver::{BandedSystem, BucketJournal, InsertOutcome, Row, SolutionTable, SystemView};
use crate::threshold::ThresholdStore;

/// Cut-point selection strategy. `NoSearch` cuts at evenly spaced
/// buckets; the others examine nearby buckets for a cheaper cut.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CutStrategy {
    /// Evenly spaced cuts, no search.
    NoSearch,
    /// Fewest keys starting in the `w - 1` slots ahead of the cut (the
    /// keys that must be bumped outright).
    MinBump,
    /// Most keys starting in the `w - 1` slots whose windows can still
    /// reach the bumped gap, so the vacated slots get refilled.
    MaxPrev,
    /// Smallest imbalance between the two counts.
    Diff,
}

impl fmt::Display for CutStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CutStrategy::NoSearch => "nosearch",
            CutStrategy::MinBump => "minbump",
            CutStrategy::MaxPrev => "maxprev",
            CutStrategy::Diff => "diff",
        })
    }
}

/// Per-candidate cut costs, both computable from the sorted start array
/// by binary search.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CutMetrics {
    /// Keys starting in `[c*b - w + 1, c*b - 1]`: their windows would
    /// cross the cut slot, so they are bumped no matter what.
    pub directly_bumped: usize,
    /// Keys starting in `[c*b - 2(w-1), c*b - w]`: they survive the cut
    /// and their windows reach into the vacated gap.
    pub prev_window: usize,
}

/// Workers actually used: `min(threads, max(1, floor(buckets / minbpt)))`.
/// Deep layers are small, so they naturally fall back to fewer threads.
pub fn effective_threads(num_buckets: usize, threads: usize, minbpt: u32) -> usize {
    debug_assert!(threads >= 1);
    threads.min((num_buckets / minbpt.max(1) as usize).max(1))
}

/// Forced threshold `b - w + 1` for the bucket just before each cut:
/// keys below it end strictly before the boundary slot, everything else
/// is bumped.
pub fn forced_boundary_thresholds(cuts: &[usize], w: u32, b: u32) -> BTreeMap<usize, u32> {
    debug_assert!(b >= w);
    cuts.iter()
        .map(|&c| {
            debug_assert!(c >= 1);
            (c - 1, b - w + 1)
        })
        .collect()
}

/// Cut costs for one candidate bucket over a sorted start-slot array.
pub fn cut_metrics(sorted_starts: &[u64], candidate_bucket: usize, w: u32, b: u32) -> CutMetrics {
    cut_metrics_impl(sorted_starts, candidate_bucket, w, b)
}

/// Chooses `partitions - 1` cut bucket indices. Search strategies examine
/// candidates within `search_range` buckets of each evenly spaced cut,
/// clamped so every partition keeps at least `max(1, minbpt)` buckets;
/// ties resolve toward the evenly spaced position, then the smaller
/// index.
#[allow(clippy::too_many_arguments)]
pub fn plan_cuts(
    sorted_starts: &[u64],
    num_buckets: usize,
    partitions: usize,
    strategy: CutStrategy,
    search_range: u32,
    minbpt: u32,
    w: u32,
    b: u32,
) -> Vec<usize> {
    plan_cuts_impl(
        sorted_starts,
        num_buckets,
        partitions,
        strategy,
        search_range as usize,
        minbpt as usize,
        w,
        b,
    )
}

pub(crate) trait StartCounts {
    /// Number of starts in `[lo, hi)`.
    fn count_range(&self, lo: u64, hi: u64) -> usize;
}

impl StartCounts for [u64] {
    fn count_range(&self, lo: u64, hi: u64) -> usize {
        self.partition_point(|&s| s < hi) - self.partition_point(|&s| s < lo)
    }
}

impl StartCounts for [AddressedPair] {
    fn count_range(&self, lo: u64, hi: u64) -> usize {
        self.partition_point(|p| p.start < hi) - self.partition_point(|p| p.start < lo)
    }
}

fn cut_metrics_impl<C: StartCounts + ?Sized>(
    starts: &C,
    candidate_bucket: usize,
    w: u32,
    b: u32,
) -> CutMetrics {
    let boundary = candidate_bucket as u64 * b as u64;
    let win = (w - 1) as u64;
    CutMetrics {
        directly_bumped: starts.count_range(boundary.saturating_sub(win), boundary),
        prev_window: starts.count_range(
            boundary.saturating_sub(2 * win),
            boundary.saturating_sub(win),
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn plan_cuts_impl<C: StartCounts + ?Sized>(
    starts: &C,
    num_buckets: usize,
    partitions: usize,
    strategy: CutStrategy,
    search_range: usize,
    minbpt: usize,
    w: u32,
    b: u32,
) -> Vec<usize> {
    if partitions <= 1 {
        return Vec::new();
    }
    let mb = minbpt.max(1);
    let mut cuts = Vec::with_capacity(partitions - 1);
    let mut prev = 0usize;
    for p in 1..partitions {
        // Round-half-up p * num_buckets / partitions.
        let even = (2 * p * num_buckets + partitions) / (2 * partitions);
        let lo_limit = prev + mb;
        let hi_limit = num_buckets
            .saturating_sub((partitions - p) * mb)
            .max(lo_limit);
        let chosen = if strategy == CutStrategy::NoSearch {
            even.clamp(lo_limit, hi_limit)
        } else {
            let lo = lo_limit.max(even.saturating_sub(search_range));
            let hi = hi_limit.min(even + search_range);
            if lo > hi {
                even.clamp(lo_limit, hi_limit)
            } else {
                pick_cut(starts, lo, hi, even, strategy, w, b)
            }
        };
        cuts.push(chosen);
        prev = chosen;
    }
    cuts
}

fn pick_cut<C: StartCounts + ?Sized>(
    starts: &C,
    lo: usize,
    hi: usize,
    even: usize,
    strategy: CutStrategy,
    w: u32,
    b: u32,
) -> usize {
    let mut best = lo;
    let mut best_rank = (usize::MAX, usize::MAX, usize::MAX);
    for c in lo..=hi {
        let m = cut_metrics_impl(starts, c, w, b);
        let objective = match strategy {
            CutStrategy::MinBump => m.directly_bumped,
            CutStrategy::MaxPrev => usize::MAX - m.prev_window,
            CutStrategy::Diff => m.directly_bumped.abs_diff(m.prev_window),
            CutStrategy::NoSearch => unreachable!("NoSearch never searches"),
        };
        let rank = (objective, c.abs_diff(even), c);
        if rank < best_rank {
            best_rank = rank;
            best = c;
        }
    }
    best
}

/// One addressed, sortable row: the derived field order makes the sort
/// key `(start, master hash, value)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub(crate) struct AddressedPair {
    pub start: u64,
    pub hash: u64,
    pub value: u16,
}

pub(crate) struct PhaseTimes {
    pub sort: f64,
    pub insert: f64,
    pub backsub: f64,
}

pub(crate) struct LayerCoreOutput {
    pub layer: Layer,
    pub bumped: Vec<(MasterHash, u16)>,
    pub times: PhaseTimes,
    pub report: Option<LayerReport>,
}

struct LayerCtx {
    layer_index: u32,
    layer_seed: u32,
    w: u32,
    bucket_size: u32,
}

#[derive(Default)]
struct PartitionOutcome {
    thresholds: Vec<(usize, u32)>,
    bumped: Vec<(MasterHash, u16)>,
}

struct PartitionJob<'a> {
    view: SystemView<'a>,
    rows: &'a [AddressedPair],
    buckets: Range<usize>,
}

/// Builds one layer with up to `threads` workers. The result is
/// interface-identical to a sequential build; with one effective worker
/// it is byte-identical.
pub fn construct_layer_parallel(
    pairs: &[(MasterHash, u16)],
    config: &BuildConfig,
    layer_index: u32,
    threads: usize,
) -> (Layer, Vec<(MasterHash, u16)>) {
    let (layer, bumped, _) = construct_layer_parallel_with_report(pairs, config, layer_index, threads);
    (layer, bumped)
}

/// As [`construct_layer_parallel`], also returning instrumentation.
pub fn construct_layer_parallel_with_report(
    pairs: &[(MasterHash, u16)],
    config: &BuildConfig,
    layer_index: u32,
    threads: usize,
) -> (Layer, Vec<(MasterHash, u16)>, LayerReport) {
    let pool = (threads > 1).then(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("layer thread pool")
    });
    let out = construct_layer_core(pairs, config, layer_index, threads, pool.as_ref(), None, true);
    (out.layer, out.bumped, out.report.expect("report requested"))
}

pub(crate) fn construct_layer_core(
    pairs: &[(MasterHash, u16)],
    config: &BuildConfig,
    layer_index: u32,
    threads: usize,
    pool: Option<&rayon::ThreadPool>,
    forced_override: Option<&BTreeMap<usize, u32>>,
    want_report: bool,
) -> LayerCoreOutput {
    let b = config.bucket_size as usize;
    let w = config.ribbon_width;
    let num_buckets = size_layer(pairs.len(), config);
    let slots = num_buckets * b + w as usize - 1;
    let layer_seed = derive_layer_seed(config.seed, layer_index);
    let mask = config.value_mask();

    // Sort phase: address every pair, then order by (start, hash, value).
    let sort_started = Instant::now();
    let address = |&(h, v): &(MasterHash, u16)| {
        let hi = layer_hash(h, layer_index, layer_seed);
        AddressedPair {
            start: row_address(hi, num_buckets, b).start as u64,
            hash: h.0,
            value: v & mask,
        }
    };
    let mut addressed: Vec<AddressedPair> = match pool {
        Some(pool) => pool.install(|| pairs.par_iter().map(address).collect()),
        None => pairs.iter().map(address).collect(),
    };
    match pool {
        Some(pool) => pool.install(|| addressed.par_sort_unstable()),
        None => addressed.sort_unstable(),
    }
    let sort = sort_started.elapsed().as_secs_f64();

    // Insert phase: plan cuts, then run the bucket loop per partition
    // over disjoint system ranges.
    let insert_started = Instant::now();
    let computed_forced;
    let cuts;
    let forced: &BTreeMap<usize, u32> = match forced_override {
        Some(map) => {
            cuts = Vec::new();
            map
        }
        None => {
            let partitions = effective_threads(num_buckets, threads.max(1), config.minbpt);
            cuts = plan_cuts_impl(
                addressed.as_slice(),
                num_buckets,
                partitions,
                config.strategy,
                config.search_range as usize,
                config.minbpt as usize,
                w,
                config.bucket_size,
            );
            computed_forced = forced_boundary_thresholds(&cuts, w, config.bucket_size);
            &computed_forced
        }
    };
    let cut_slots: Vec<usize> = cuts.iter().map(|&c| c * b).collect();

    let mut system = BandedSystem::new(slots, w);
    let mut store = ThresholdStore::new(config.threshold_mode, num_buckets, config.bucket_size, w);
    let ctx = LayerCtx {
        layer_index,
        layer_seed,
        w,
        bucket_size: config.bucket_size,
    };

    let mut jobs = Vec::with_capacity(cut_slots.len() + 1);
    {
        let views = system.split(&cut_slots);
        let mut rest: &[AddressedPair] = &addressed;
        let mut bucket_lo = 0usize;
        for (i, view) in views.into_iter().enumerate() {
            let (bucket_hi, split_at) = if i < cuts.len() {
                (cuts[i], rest.partition_point(|p| p.start < cut_slots[i] as u64))
            } else {
                (num_buckets, rest.len())
            };
            let (mine, tail) = rest.split_at(split_at);
            rest = tail;
            jobs.push(PartitionJob {
                view,
                rows: mine,
                buckets: bucket_lo..bucket_hi,
            });
            bucket_lo = bucket_hi;
        }
    }
    let outcomes: Vec<PartitionOutcome> = {
        let store = &store;
        match pool {
            Some(pool) if jobs.len() > 1 => pool.install(|| {
                jobs.into_par_iter()
                    .map(|job| run_partition(job, store, forced, &ctx))
                    .collect()
            }),
            _ => jobs
                .into_iter()
                .map(|job| run_partition(job, store, forced, &ctx))
                .collect(),
        }
    };
    let mut bumped = Vec::new();
    for outcome in outcomes {
        for (bucket, t) in outcome.thresholds {
            store.set(bucket, t);
        }
        bumped.extend(outcome.bumped);
    }
    let insert = insert_started.elapsed().as_secs_f64();

    let report = want_report.then(|| LayerReport {
        num_buckets,
        cuts: cuts.clone(),
        stored_rows: system.stored_rows().collect(),
        thresholds: (0..num_buckets).map(|bkt| store.lookup(bkt)).collect(),
    });

    // Back substitution per partition; ranges are independent because no
    // stored window crosses a cut slot.
    let backsub_started = Instant::now();
    let mut z = vec![0u16; slots];
    match pool {
        Some(pool) => {
            let mut segments: Vec<(usize, &mut [u16])> = Vec::with_capacity(cut_slots.len() + 1);
            let mut rest: &mut [u16] = &mut z;
            let mut base = 0usize;
            for &cut in &cut_slots {
                let (seg, tail) = rest.split_at_mut(cut - base);
                segments.push((base, seg));
                rest = tail;
                base = cut;
            }
            segments.push((base, rest));
            let system = &system;
            pool.install(|| {
                segments.into_par_iter().for_each(|(lo, seg)| {
                    system.back_substitute(lo, lo + seg.len(), seg);
                });
            });
        }
        None => system.back_substitute(0, slots, &mut z),
    }
    let backsub = backsub_started.elapsed().as_secs_f64();

    LayerCoreOutput {
        layer: Layer::from_parts(num_buckets, layer_seed, SolutionTable::from_values(z), store),
        bumped,
        times: PhaseTimes {
            sort,
            insert,
            backsub,
        },
        report,
    }
}

/// Sequential bucket loop over one partition. Buckets ascend; offsets
/// ascend within a bucket. The forced cap (quantized) bumps keys without
/// insertion; an insertion failure at offset `o` rolls the bucket back to
/// threshold `quantize(o)` and bumps the suffix.
fn run_partition(
    mut job: PartitionJob<'_>,
    store: &ThresholdStore,
    forced: &BTreeMap<usize, u32>,
    ctx: &LayerCtx,
) -> PartitionOutcome {
    let mut out = PartitionOutcome::default();
    let mut journal = BucketJournal::new();
    let b = ctx.bucket_size as u64;
    let rows = job.rows;
    let mut i = 0;
    while i < rows.len() {
        let bucket = (rows[i].start / b) as usize;
        debug_assert!(job.buckets.contains(&bucket));
        let end = i + rows[i..].partition_point(|r| r.start / b == bucket as u64);
        process_bucket(
            &mut job.view,
            &rows[i..end],
            bucket,
            store,
            forced,
            ctx,
            &mut journal,
            &mut out,
        );
        i = end;
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn process_bucket(
    view: &mut SystemView<'_>,
    rows: &[AddressedPair],
    bucket: usize,
    store: &ThresholdStore,
    forced: &BTreeMap<usize, u32>,
    ctx: &LayerCtx,
    journal: &mut BucketJournal,
    out: &mut PartitionOutcome,
) {
    journal.clear();
    let bucket_base = bucket as u64 * ctx.bucket_size as u64;
    let cap_raw = forced
        .get(&bucket)
        .copied()
        .unwrap_or(ctx.bucket_size)
        .min(ctx.bucket_size);
    let cap = store.quantize(cap_raw);
    let mut threshold = cap;
    for row in rows {
        let offset = (row.start - bucket_base) as u32;
        if offset >= cap {
            break; // this key and everything after it is bumped
        }
        let hi = layer_hash(MasterHash(row.hash), ctx.layer_index, ctx.layer_seed);
        let outcome = view.insert_row(
            Row {
                start: row.start as usize,
                coeff: coefficient_word(hi, ctx.w),
                rhs: row.value,
            },
            journal,
            offset,
        );
        if outcome == InsertOutcome::Failure {
            let t = store.quantize(offset.min(cap));
            view.uninstall_from(journal, t);
            threshold = t;
            break;
        }
    }
    if threshold < ctx.bucket_size {
        let before = out.bumped.len();
        for row in rows {
            if (row.start - bucket_base) as u32 >= threshold {
                out.bumped.push((MasterHash(row.hash), row.value));
            }
        }
        // A threshold below b only needs storing when it actually bumps
        // a key; otherwise the default "bump nothing" reads the same.
        if out.bumped.len() > before {
            out.thresholds.push((bucket, threshold));
        }
    }
}
