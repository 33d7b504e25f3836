//! Cross-module construction properties: determinism, key partitioning
//! across layers, and soundness of bucket rollbacks under bumping.

use std::collections::{BTreeMap, HashSet};

use burr::hash::{coefficient_word, layer_hash, master_hash, row_address, MasterHash};
use burr::layer::construct_layer_sequential;
use burr::parallel::construct_layer_parallel;
use burr::solver::{BandedSystem, BucketJournal, InsertOutcome, Row};
use burr::{BuildConfig, CutStrategy, RetrievalStructure, ThresholdMode};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_pairs(n: usize, seed: u64, key_seed: u64) -> Vec<(MasterHash, u16)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let h = master_hash(&(i as u64).to_le_bytes(), key_seed);
            (h, rng.gen::<u16>() & 0xff)
        })
        .collect()
}

#[test]
fn construction_is_deterministic_per_thread_count() {
    let cfg = BuildConfig {
        seed: 0xabcd,
        minbpt: 3,
        ..BuildConfig::default()
    };
    let pairs = random_pairs(40_000, 1, cfg.seed);
    for threads in [1usize, 4] {
        let a = RetrievalStructure::construct(pairs.clone(), &cfg, threads).unwrap();
        let b = RetrievalStructure::construct(pairs.clone(), &cfg, threads).unwrap();
        assert_eq!(a.layers().len(), b.layers().len());
        for (la, lb) in a.layers().iter().zip(b.layers()) {
            assert_eq!(la.table(), lb.table());
            assert_eq!(la.thresholds().codes(), lb.thresholds().codes());
            assert_eq!(
                la.thresholds().exceptions().collect::<Vec<_>>(),
                lb.thresholds().exceptions().collect::<Vec<_>>()
            );
            assert_eq!(la.layer_seed(), lb.layer_seed());
        }
        assert_eq!(a.base().table(), b.base().table());
        assert_eq!(a.base().seed(), b.base().seed());
    }
}

#[test]
fn layers_partition_the_key_set() {
    // Build layer by layer and check kept/bumped sets are an exact
    // partition of the input.
    let cfg = BuildConfig {
        seed: 0x777,
        overload: 0.3, // plenty of failure bumping
        minbpt: 2,
        ..BuildConfig::default()
    };
    let pairs = random_pairs(30_000, 2, cfg.seed);
    let all: HashSet<u64> = pairs.iter().map(|p| p.0 .0).collect();
    assert_eq!(all.len(), pairs.len(), "hash collision in test data");

    let mut seen: HashSet<u64> = HashSet::new();
    let mut remaining = pairs;
    for layer_index in 0..cfg.layers {
        let (_, bumped) = construct_layer_parallel(&remaining, &cfg, layer_index, 4);
        let bumped_set: HashSet<u64> = bumped.iter().map(|p| p.0 .0).collect();
        for p in &remaining {
            if !bumped_set.contains(&p.0 .0) {
                assert!(seen.insert(p.0 .0), "key kept twice");
            }
        }
        remaining = bumped;
    }
    for p in &remaining {
        assert!(seen.insert(p.0 .0), "base key already kept");
    }
    assert_eq!(seen, all);
}

#[test]
fn bumped_sets_match_stored_thresholds_exactly() {
    let cfg = BuildConfig {
        seed: 0x31337,
        overload: 0.2,
        threshold_mode: ThresholdMode::TwoBit,
        minbpt: 2,
        strategy: CutStrategy::MinBump,
        ..BuildConfig::default()
    };
    let pairs = random_pairs(50_000, 3, cfg.seed);
    let (layer, bumped) = construct_layer_parallel(&pairs, &cfg, 0, 4);
    let bumped_set: HashSet<u64> = bumped.iter().map(|p| p.0 .0).collect();
    let b = cfg.bucket_size as usize;
    for &(h, _) in &pairs {
        let hi = layer_hash(h, 0, layer.layer_seed());
        let addr = row_address(hi, layer.num_buckets(), b);
        let t = layer.thresholds().lookup(addr.bucket);
        assert_eq!(
            bumped_set.contains(&h.0),
            addr.offset as u32 >= t,
            "bump set disagrees with threshold at bucket {}",
            addr.bucket
        );
    }
}

#[test]
fn uninstall_keeps_prior_buckets_sound() {
    // Drive the solver directly through several buckets with random
    // rollbacks, then prove every surviving row's original equation from
    // the final solution.
    let mut rng = StdRng::seed_from_u64(9);
    for _ in 0..200 {
        let w = 8u32;
        let b = 16usize;
        let buckets = 4usize;
        let m = buckets * b + w as usize - 1;
        let mut system = BandedSystem::new(m, w);
        let mut journal = BucketJournal::new();
        let mut survivors: Vec<Row> = Vec::new();

        for bucket in 0..buckets {
            journal.clear();
            let n_rows = rng.gen_range(0..2 * b);
            let mut offsets: Vec<usize> = (0..n_rows).map(|_| rng.gen_range(0..b)).collect();
            offsets.sort_unstable();
            let mut inserted: Vec<(u32, Row)> = Vec::new();
            let mut fail_at: Option<u32> = None;
            for off in offsets {
                let row = Row {
                    start: bucket * b + off,
                    coeff: burr::hash::coefficient_word(
                        MasterHash(rng.gen()),
                        w,
                    ),
                    rhs: rng.gen::<u16>() & 0xf,
                };
                match system.insert_row(row, &mut journal, off as u32) {
                    InsertOutcome::Inserted(_) => inserted.push((off as u32, row)),
                    InsertOutcome::Redundant => {}
                    InsertOutcome::Failure => {
                        fail_at = Some(off as u32);
                        break;
                    }
                }
            }
            // Roll back a suffix: either where a failure happened or at a
            // random threshold, like a forced boundary would.
            let threshold = match fail_at {
                Some(o) => o,
                None if rng.gen_bool(0.3) => rng.gen_range(0..b as u32),
                None => b as u32,
            };
            system.uninstall_from(&mut journal, threshold);
            survivors.extend(
                inserted
                    .into_iter()
                    .filter(|&(off, _)| off < threshold)
                    .map(|(_, row)| row),
            );
        }

        let mut z = vec![0u16; m];
        system.back_substitute(0, m, &mut z);
        let table = burr::solver::SolutionTable::from_values(z);
        for row in &survivors {
            assert_eq!(
                table.query_dot(row.start, row.coeff),
                row.rhs,
                "surviving equation violated after rollbacks"
            );
        }
    }
}

#[test]
fn forced_and_failure_thresholds_compose() {
    // A forced cap of 65 in TwoBit mode quantizes to 64; a failure below
    // that must lower the stored threshold further, never raise it.
    let cfg = BuildConfig {
        seed: 0x5151,
        threshold_mode: ThresholdMode::TwoBit,
        overload: 0.6,
        ..BuildConfig::default()
    };
    let pairs = random_pairs(60_000, 4, cfg.seed);
    let mut forced = BTreeMap::new();
    let (probe_layer, _) = construct_layer_sequential(&pairs, &cfg, 0, &forced);
    for bucket in 0..probe_layer.num_buckets() {
        forced.insert(bucket, 65u32);
    }
    let (layer, bumped) = construct_layer_sequential(&pairs, &cfg, 0, &forced);
    let allowed = [0u32, 64, 112, 128];
    for bucket in 0..layer.num_buckets() {
        let t = layer.thresholds().lookup(bucket);
        assert!(allowed.contains(&t));
        assert!(t <= 64, "forced cap ignored at bucket {bucket}");
    }
    // Everything at offset >= 64 must be bumped, kept keys still correct.
    let bumped_set: HashSet<u64> = bumped.iter().map(|p| p.0 .0).collect();
    for &(h, v) in &pairs {
        let hi = layer_hash(h, 0, layer.layer_seed());
        let addr = row_address(hi, layer.num_buckets(), cfg.bucket_size as usize);
        if addr.offset >= 64 {
            assert!(bumped_set.contains(&h.0));
        } else if !bumped_set.contains(&h.0) {
            assert_eq!(
                layer.table().query_dot(addr.start, coefficient_word(hi, 64)),
                v
            );
        }
    }
}
