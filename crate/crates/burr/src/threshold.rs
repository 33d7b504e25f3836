//! Per-bucket bump thresholds.
//!
//! A key with intra-bucket offset `o` is bumped iff `o >= t`; `t = b`
//! bumps nothing and `t = 0` bumps the whole bucket. Three encodings
//! trade space against granularity: plain 8-bit codes, 2-bit codes over
//! four predetermined values, and a 1-bit flag backed by an exception
//! table holding the exact threshold of buckets that bump.

use std::collections::BTreeMap;

/// Bytes charged per exception-table entry in space accounting: a 4-byte
/// bucket index plus the 1-byte threshold.
pub const EXCEPTION_ENTRY_BYTES: usize = 5;

/// Threshold encoding.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ThresholdMode {
    /// One 8-bit code per bucket storing the exact threshold (requires
    /// `b <= 255`).
    Uncompressed,
    /// Two bits per bucket selecting one of four predetermined values
    /// `{0, b - w, b - w/4, b}`.
    TwoBit,
    /// One bit per bucket: 0 means `t = b`, 1 means the exact threshold
    /// sits in the exception table.
    OnePlusBit,
}

impl ThresholdMode {
    pub fn code_bits(self) -> u32 {
        match self {
            ThresholdMode::Uncompressed => 8,
            ThresholdMode::TwoBit => 2,
            ThresholdMode::OnePlusBit => 1,
        }
    }
}

impl std::fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ThresholdMode::Uncompressed => "uncompressed",
            ThresholdMode::TwoBit => "2bit",
            ThresholdMode::OnePlusBit => "1plus",
        })
    }
}

/// The four allowed 2-bit threshold values for a bucket size / ribbon
/// width pair. First bumps everything, last bumps nothing; the interior
/// values are placed so the forced boundary threshold `b - w + 1`
/// quantizes to `b - w` with minimal over-bumping.
pub fn two_bit_values(bucket_size: u32, w: u32) -> [u32; 4] {
    [0, bucket_size - w, bucket_size - w / 4, bucket_size]
}

/// Per-bucket threshold storage for one layer.
#[derive(Clone, Debug)]
pub struct ThresholdStore {
    mode: ThresholdMode,
    bucket_size: u32,
    num_buckets: usize,
    values: [u32; 4],
    codes: Vec<u8>,
    exceptions: BTreeMap<u32, u8>,
}

impl ThresholdStore {
    /// Creates a store with every bucket at the default `t = b` (nothing
    /// bumped).
    pub fn new(mode: ThresholdMode, num_buckets: usize, bucket_size: u32, w: u32) -> Self {
        let values = two_bit_values(bucket_size, w);
        let codes = match mode {
            ThresholdMode::Uncompressed => {
                debug_assert!(bucket_size <= 255);
                vec![bucket_size as u8; num_buckets]
            }
            // Code 3 selects values[3] = b in every bucket.
            ThresholdMode::TwoBit => vec![0xff; num_buckets.div_ceil(4)],
            ThresholdMode::OnePlusBit => vec![0; num_buckets.div_ceil(8)],
        };
        ThresholdStore {
            mode,
            bucket_size,
            num_buckets,
            values,
            codes,
            exceptions: BTreeMap::new(),
        }
    }

    /// Rebuilds a store from its serialized parts.
    pub fn from_parts(
        mode: ThresholdMode,
        num_buckets: usize,
        bucket_size: u32,
        w: u32,
        codes: Vec<u8>,
        exceptions: BTreeMap<u32, u8>,
    ) -> Self {
        debug_assert_eq!(
            codes.len(),
            (num_buckets * mode.code_bits() as usize).div_ceil(8)
        );
        ThresholdStore {
            mode,
            bucket_size,
            num_buckets,
            values: two_bit_values(bucket_size, w),
            codes,
            exceptions,
        }
    }

    pub fn mode(&self) -> ThresholdMode {
        self.mode
    }

    pub fn num_buckets(&self) -> usize {
        self.num_buckets
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn exceptions(&self) -> impl Iterator<Item = (u32, u8)> + '_ {
        self.exceptions.iter().map(|(&b, &t)| (b, t))
    }

    pub fn exception_count(&self) -> usize {
        self.exceptions.len()
    }

    /// Largest representable threshold `<= t_required`. Never returns a
    /// value that bumps fewer keys than requested (bump-at-least).
    pub fn quantize(&self, t_required: u32) -> u32 {
        debug_assert!(t_required <= self.bucket_size);
        match self.mode {
            ThresholdMode::Uncompressed | ThresholdMode::OnePlusBit => t_required,
            ThresholdMode::TwoBit => *self
                .values
                .iter()
                .rev()
                .find(|&&v| v <= t_required)
                .expect("values start at 0"),
        }
    }

    /// Stores a (pre-quantized) threshold for a bucket. Passing a value
    /// outside the 2-bit set in `TwoBit` mode is a logic error.
    pub fn set(&mut self, bucket: usize, t: u32) {
        debug_assert!(bucket < self.num_buckets);
        debug_assert!(t <= self.bucket_size);
        match self.mode {
            ThresholdMode::Uncompressed => self.codes[bucket] = t as u8,
            ThresholdMode::TwoBit => {
                let code = self
                    .values
                    .iter()
                    .position(|&v| v == t)
                    .expect("threshold not in the 2-bit value set") as u8;
                let byte = bucket / 4;
                let shift = (bucket % 4) * 2;
                self.codes[byte] = (self.codes[byte] & !(0b11 << shift)) | (code << shift);
            }
            ThresholdMode::OnePlusBit => {
                let byte = bucket / 8;
                let bit = 1u8 << (bucket % 8);
                if t == self.bucket_size {
                    self.codes[byte] &= !bit;
                    self.exceptions.remove(&(bucket as u32));
                } else {
                    self.codes[byte] |= bit;
                    self.exceptions.insert(bucket as u32, t as u8);
                }
            }
        }
    }

    /// Stored threshold of a bucket; buckets never set read back `b`.
    #[inline]
    pub fn lookup(&self, bucket: usize) -> u32 {
        debug_assert!(bucket < self.num_buckets);
        match self.mode {
            ThresholdMode::Uncompressed => self.codes[bucket] as u32,
            ThresholdMode::TwoBit => {
                let code = (self.codes[bucket / 4] >> ((bucket % 4) * 2)) & 0b11;
                self.values[code as usize]
            }
            ThresholdMode::OnePlusBit => {
                if self.codes[bucket / 8] >> (bucket % 8) & 1 == 0 {
                    self.bucket_size
                } else {
                    self.exceptions[&(bucket as u32)] as u32
                }
            }
        }
    }

    /// Space charged to this store: the packed code array plus
    /// [`EXCEPTION_ENTRY_BYTES`] per exception entry.
    pub fn byte_size(&self) -> usize {
        self.codes.len() + self.exceptions.len() * EXCEPTION_ENTRY_BYTES
    }
}

/// Bump rule: a key with this intra-bucket offset is bumped under
/// threshold `t`.
#[inline]
pub fn is_bumped(offset: u32, t: u32) -> bool {
    offset >= t
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_bit_default_values() {
        assert_eq!(two_bit_values(128, 64), [0, 64, 112, 128]);
        assert_eq!(two_bit_values(128, 16), [0, 112, 124, 128]);
    }

    #[test]
    fn quantize_two_bit() {
        let s = ThresholdStore::new(ThresholdMode::TwoBit, 4, 128, 64);
        assert_eq!(s.quantize(128), 128);
        assert_eq!(s.quantize(100), 64);
        assert_eq!(s.quantize(0), 0);
        assert_eq!(s.quantize(65), 64);
        assert_eq!(s.quantize(112), 112);
        assert_eq!(s.quantize(63), 0);
    }

    #[test]
    fn set_and_lookup_all_modes() {
        let mut u = ThresholdStore::new(ThresholdMode::Uncompressed, 10, 128, 64);
        u.set(3, 7);
        assert_eq!(u.lookup(3), 7);
        assert_eq!(u.lookup(4), 128);

        let mut t = ThresholdStore::new(ThresholdMode::TwoBit, 10, 128, 64);
        t.set(9, 64);
        assert_eq!(t.lookup(9), 64);
        assert_eq!(t.lookup(0), 128);

        let mut o = ThresholdStore::new(ThresholdMode::OnePlusBit, 10, 128, 64);
        o.set(2, 65);
        assert_eq!(o.lookup(2), 65);
        assert_eq!(o.exception_count(), 1);
        assert_eq!(o.lookup(5), 128);
        // Setting back to b clears the exception again.
        o.set(2, 128);
        assert_eq!(o.lookup(2), 128);
        assert_eq!(o.exception_count(), 0);
    }

    #[test]
    fn is_bumped_rule() {
        assert!(is_bumped(70, 64));
        assert!(!is_bumped(70, 128));
        assert!(is_bumped(0, 0));
        assert!(!is_bumped(127, 128));
    }

    #[test]
    fn byte_sizes() {
        let t = ThresholdStore::new(ThresholdMode::TwoBit, 1000, 128, 64);
        assert_eq!(t.byte_size(), 250);

        let mut o = ThresholdStore::new(ThresholdMode::OnePlusBit, 1024, 128, 64);
        o.set(1, 65);
        o.set(2, 66);
        o.set(3, 67);
        assert_eq!(o.byte_size(), 128 + 15);

        let u = ThresholdStore::new(ThresholdMode::Uncompressed, 10, 128, 64);
        assert_eq!(u.byte_size(), 10);
    }

    proptest! {
        #[test]
        fn quantize_is_safe_monotone_idempotent(t1 in 0u32..=128, t2 in 0u32..=128) {
            let s = ThresholdStore::new(ThresholdMode::TwoBit, 4, 128, 64);
            let q1 = s.quantize(t1);
            prop_assert!(q1 <= t1);
            prop_assert_eq!(s.quantize(q1), q1);
            if t1 <= t2 {
                prop_assert!(q1 <= s.quantize(t2));
            }
            // Bump-at-least: offsets bumped by t1 are also bumped by q1.
            for off in 0..128 {
                if is_bumped(off, t1) {
                    prop_assert!(is_bumped(off, q1));
                }
            }
        }

        #[test]
        fn round_trip_random_writes(writes in proptest::collection::vec((0usize..200, 0u32..=128), 1..60)) {
            for mode in [ThresholdMode::Uncompressed, ThresholdMode::TwoBit, ThresholdMode::OnePlusBit] {
                let mut store = ThresholdStore::new(mode, 200, 128, 64);
                let mut shadow = vec![128u32; 200];
                for &(bucket, t) in &writes {
                    let q = store.quantize(t);
                    store.set(bucket, q);
                    shadow[bucket] = q;
                }
                for (bucket, &expect) in shadow.iter().enumerate() {
                    prop_assert_eq!(store.lookup(bucket), expect);
                }
            }
        }
    }
}
