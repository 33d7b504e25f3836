//! Space accounting. Byte counts are pure arithmetic over the structure
//! contents, so they are machine-independent, unlike timings.

use burr::RetrievalStructure;

/// Bytes for a table of `slots` values at `r` bits per slot.
pub fn table_bytes(slots: usize, r: u32) -> u64 {
    ((slots as u64) * r as u64).div_ceil(8)
}

/// Structural payload bytes: per-layer solution tables and threshold
/// stores (packed codes plus exception entries) and the base table.
/// Fixed headers are excluded.
pub fn structural_bytes(structure: &RetrievalStructure) -> u64 {
    let r = structure.config().value_bits;
    let mut total = 0u64;
    for layer in structure.layers() {
        total += table_bytes(layer.slot_count(), r);
        total += layer.thresholds().byte_size() as u64;
    }
    total + table_bytes(structure.base().slot_count(), r)
}

/// Space overhead per *additional* thread: with `t` threads there are only
/// `t - 1` cut points, so the single-thread build is the zero point.
pub fn overhead_per_additional_thread(bytes_multi: u64, bytes_single: u64, threads: usize) -> f64 {
    assert!(threads >= 2);
    (bytes_multi as f64 - bytes_single as f64) / (threads as f64 - 1.0)
}
