//! Seeded key hashing and the per-row quantities derived from it: start
//! slot, coefficient word, and fingerprint.
//!
//! One 64-bit master hash is computed per key. Per-layer hashes,
//! coefficient words, and fingerprints are independent finalizer-style
//! remixes of it, so the four streams look uncorrelated. Start slots are
//! produced with an exact fixed-point multiply, which keeps them monotone
//! in the hash value and gives the equation system its near-diagonal
//! shape.

/// 64-bit hash of a key under a seed.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MasterHash(pub u64);

/// Slot addressing for one row: absolute start slot plus its bucket
/// decomposition (`start = bucket * bucket_size + offset`).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RowAddress {
    pub start: usize,
    pub bucket: usize,
    pub offset: usize,
}

/// Coefficient vector of one equation, confined to `w` bits. Bit `j`
/// corresponds to slot `start + j`; bit 0 is always set so every equation
/// is anchored at its start slot.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CoefficientWord(u64);

impl CoefficientWord {
    /// Raw bits; only the low `w` bits can be set.
    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    /// Builds a word from raw bits. Bit 0 must be set.
    #[inline]
    pub fn from_bits(bits: u64) -> Self {
        debug_assert!(bits & 1 == 1, "coefficient words are anchored at bit 0");
        CoefficientWord(bits)
    }

    /// Index of the highest set bit, i.e. the last slot the window touches
    /// relative to its start.
    #[inline]
    pub fn window_end(self) -> usize {
        63 - self.0.leading_zeros() as usize
    }
}

const PRIME_A: u64 = 0x9e37_79b1_85eb_ca87;
const PRIME_B: u64 = 0xc2b2_ae3d_27d4_eb4f;
const LAYER_SALT: u64 = 0x1656_67b1_9e37_79f9;
const SEED_SALT: u64 = 0x27d4_eb2f_1656_67c5;
const COEFF_SALT: u64 = 0x2545_f491_4f6c_dd1d;
const FINGERPRINT_SALT: u64 = 0x9e6c_63d0_876a_68e5;

/// Strong 64-bit finalizer (splitmix64 style): every input bit affects
/// every output bit.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a byte-string key under a 64-bit seed. Deterministic and
/// endian-stable; the empty key is valid input.
pub fn master_hash(key: &[u8], seed: u64) -> MasterHash {
    let mut acc = mix64(seed ^ SEED_SALT) ^ (key.len() as u64).wrapping_mul(PRIME_A);
    let mut chunks = key.chunks_exact(8);
    for chunk in &mut chunks {
        let word = u64::from_le_bytes(chunk.try_into().unwrap());
        acc = (acc ^ word.wrapping_mul(PRIME_B)).rotate_left(31).wrapping_mul(PRIME_A);
    }
    let tail = chunks.remainder();
    if !tail.is_empty() {
        let mut buf = [0u8; 8];
        buf[..tail.len()].copy_from_slice(tail);
        let word = u64::from_le_bytes(buf);
        acc = (acc ^ word.wrapping_mul(PRIME_B)).rotate_left(31).wrapping_mul(PRIME_A);
    }
    MasterHash(mix64(acc))
}

/// Remixes a master hash for one layer. Layers and layer seeds each shift
/// the stream, so the per-layer hashes look independent.
#[inline]
pub fn layer_hash(h: MasterHash, layer: u32, layer_seed: u32) -> MasterHash {
    let salt = (layer as u64 + 1)
        .wrapping_mul(LAYER_SALT)
        .wrapping_add((layer_seed as u64).wrapping_mul(PRIME_B));
    MasterHash(mix64(h.0 ^ salt))
}

/// Maps a hash to its start slot. `start = floor(h * S / 2^64)` with
/// `S = num_buckets * bucket_size`; exact, division-free, and monotone in
/// `h`. The caller's table must have `S + w - 1` slots so every
/// coefficient window fits.
#[inline]
pub fn row_address(h: MasterHash, num_buckets: usize, bucket_size: usize) -> RowAddress {
    debug_assert!(num_buckets >= 1 && bucket_size >= 1);
    let slot_range = (num_buckets * bucket_size) as u128;
    let start = ((h.0 as u128 * slot_range) >> 64) as usize;
    RowAddress {
        start,
        bucket: start / bucket_size,
        offset: start % bucket_size,
    }
}

/// Derives the `w`-bit coefficient word for a row. Bit 0 is forced; the
/// remaining `w - 1` bits are a remix of the hash.
#[inline]
pub fn coefficient_word(h: MasterHash, w: u32) -> CoefficientWord {
    debug_assert!(matches!(w, 16 | 32 | 64));
    let bits = mix64(h.0 ^ COEFF_SALT);
    let masked = if w == 64 { bits } else { bits & ((1u64 << w) - 1) };
    CoefficientWord(masked | 1)
}

/// Derives an `r`-bit fingerprint (1 <= r <= 16) from the master hash,
/// independent of start slots and coefficient bits.
#[inline]
pub fn fingerprint(h: MasterHash, r: u32) -> u16 {
    debug_assert!((1..=16).contains(&r));
    (mix64(h.0 ^ FINGERPRINT_SALT) & ((1u64 << r) - 1)) as u16
}
