//! Structure file format.
//!
//! Layout (all integers little-endian, fixed width, section lengths
//! explicit):
//!
//! ```text
//! "BURR" magic, u32 version
//! config: u32 r, u32 w, u32 b, f64 overload, u8 mode, [u8; 3] reserved,
//!         u32 layers, u64 seed
//! per bumping layer:
//!   u64 num_buckets, u32 layer_seed,
//!   u64 code_bytes,  packed threshold codes,
//!   u64 exceptions,  (u32 bucket, u8 threshold) each, sorted by bucket,
//!   u64 table_bytes, solution table packed r bits per slot
//! base layer:
//!   u64 slots, u32 seed, u64 table_bytes, packed solution table
//! ```
//!
//! Saving the same structure twice is byte-identical, and construction is
//! deterministic, so identical (seed, config, thread count) inputs yield
//! identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use burr::layer::{BaseLayer, Layer};
use burr::solver::SolutionTable;
use burr::threshold::ThresholdStore;
use burr::{BuildConfig, BuildError, RetrievalStructure, ThresholdMode};

pub const MAGIC: [u8; 4] = *b"BURR";
pub const VERSION: u32 = 1;

#[derive(Error, Debug)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a BURR structure file (bad magic)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    BadVersion(u32),
    #[error("truncated file while reading {0}")]
    Truncated(&'static str),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("malformed file: {0}")]
    Inconsistent(#[from] BuildError),
}

/// Packs `r`-bit values into a little-endian bit stream.
pub fn pack_values(values: &[u16], r: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity((values.len() * r as usize).div_ceil(8));
    let mut acc = 0u64;
    let mut bits = 0u32;
    for &v in values {
        acc |= (v as u64) << bits;
        bits += r;
        while bits >= 8 {
            out.push(acc as u8);
            acc >>= 8;
            bits -= 8;
        }
    }
    if bits > 0 {
        out.push(acc as u8);
    }
    out
}

/// Inverse of [`pack_values`].
pub fn unpack_values(bytes: &[u8], count: usize, r: u32) -> Vec<u16> {
    let mask = ((1u32 << r) - 1) as u64;
    let mut out = Vec::with_capacity(count);
    let mut acc = 0u64;
    let mut bits = 0u32;
    let mut iter = bytes.iter();
    for _ in 0..count {
        while bits < r {
            acc |= (*iter.next().unwrap_or(&0) as u64) << bits;
            bits += 8;
        }
        out.push((acc & mask) as u16);
        acc >>= r;
        bits -= r;
    }
    out
}

fn table_byte_len(slots: usize, r: u32) -> usize {
    (slots * r as usize).div_ceil(8)
}

fn mode_tag(mode: ThresholdMode) -> u8 {
    match mode {
        ThresholdMode::Uncompressed => 0,
        ThresholdMode::TwoBit => 1,
        ThresholdMode::OnePlusBit => 2,
    }
}

fn mode_from_tag(tag: u8) -> Result<ThresholdMode, FormatError> {
    match tag {
        0 => Ok(ThresholdMode::Uncompressed),
        1 => Ok(ThresholdMode::TwoBit),
        2 => Ok(ThresholdMode::OnePlusBit),
        other => Err(FormatError::Malformed(format!(
            "unknown threshold mode tag {other}"
        ))),
    }
}

/// Serializes a structure to its canonical byte form.
pub fn to_bytes(structure: &RetrievalStructure) -> Vec<u8> {
    let cfg = structure.config();
    let r = cfg.value_bits;
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&r.to_le_bytes());
    out.extend_from_slice(&cfg.ribbon_width.to_le_bytes());
    out.extend_from_slice(&cfg.bucket_size.to_le_bytes());
    out.extend_from_slice(&cfg.overload.to_bits().to_le_bytes());
    out.push(mode_tag(cfg.threshold_mode));
    out.extend_from_slice(&[0u8; 3]);
    out.extend_from_slice(&cfg.layers.to_le_bytes());
    out.extend_from_slice(&cfg.seed.to_le_bytes());

    for layer in structure.layers() {
        out.extend_from_slice(&(layer.num_buckets() as u64).to_le_bytes());
        out.extend_from_slice(&layer.layer_seed().to_le_bytes());
        let codes = layer.thresholds().codes();
        out.extend_from_slice(&(codes.len() as u64).to_le_bytes());
        out.extend_from_slice(codes);
        out.extend_from_slice(&(layer.thresholds().exception_count() as u64).to_le_bytes());
        for (bucket, t) in layer.thresholds().exceptions() {
            out.extend_from_slice(&bucket.to_le_bytes());
            out.push(t);
        }
        let table = pack_values(layer.table().values(), r);
        out.extend_from_slice(&(table.len() as u64).to_le_bytes());
        out.extend_from_slice(&table);
    }

    let base = structure.base();
    out.extend_from_slice(&(base.slot_count() as u64).to_le_bytes());
    out.extend_from_slice(&base.seed().to_le_bytes());
    let table = pack_values(base.table().values(), r);
    out.extend_from_slice(&(table.len() as u64).to_le_bytes());
    out.extend_from_slice(&table);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], FormatError> {
        if self.pos + n > self.buf.len() {
            return Err(FormatError::Truncated(what));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, FormatError> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn len(&mut self, what: &'static str) -> Result<usize, FormatError> {
        let v = self.u64(what)?;
        usize::try_from(v).map_err(|_| FormatError::Malformed(format!("{what} overflows: {v}")))
    }
}

/// Parses a structure from its byte form. Rejects bad magic, unknown
/// versions, truncated or oversized sections, and trailing data.
pub fn from_bytes(bytes: &[u8]) -> Result<RetrievalStructure, FormatError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(FormatError::BadVersion(version));
    }
    let value_bits = r.u32("value bits")?;
    let ribbon_width = r.u32("ribbon width")?;
    let bucket_size = r.u32("bucket size")?;
    let overload = f64::from_bits(r.u64("overload")?);
    let mode = mode_from_tag(r.u8("threshold mode")?)?;
    r.take(3, "reserved")?;
    let layers = r.u32("layer count")?;
    let seed = r.u64("seed")?;

    let config = BuildConfig {
        value_bits,
        ribbon_width,
        bucket_size,
        overload,
        threshold_mode: mode,
        layers,
        seed,
        ..BuildConfig::default()
    };
    config.validate()?;
    if layers > 64 {
        return Err(FormatError::Malformed(format!(
            "implausible layer count {layers}"
        )));
    }

    let b = bucket_size as usize;
    let w = ribbon_width as usize;
    let mut parsed_layers = Vec::with_capacity(layers as usize);
    for index in 0..layers {
        let num_buckets = r.len("bucket count")?;
        let layer_seed = r.u32("layer seed")?;

        let code_len = r.len("threshold code length")?;
        let expected_codes = (num_buckets * mode.code_bits() as usize).div_ceil(8);
        if code_len != expected_codes {
            return Err(FormatError::Malformed(format!(
                "layer {index}: {code_len} code bytes, expected {expected_codes}"
            )));
        }
        let codes = r.take(code_len, "threshold codes")?.to_vec();

        let exception_count = r.len("exception count")?;
        let mut exceptions = BTreeMap::new();
        let mut last_bucket = None;
        for _ in 0..exception_count {
            let bucket = r.u32("exception bucket")?;
            let t = r.u8("exception threshold")?;
            if last_bucket.is_some_and(|prev| bucket <= prev) {
                return Err(FormatError::Malformed(format!(
                    "layer {index}: exception list not sorted at bucket {bucket}"
                )));
            }
            if bucket as usize >= num_buckets || t as u32 >= bucket_size {
                return Err(FormatError::Malformed(format!(
                    "layer {index}: exception ({bucket}, {t}) out of range"
                )));
            }
            last_bucket = Some(bucket);
            exceptions.insert(bucket, t);
        }

        let slots = num_buckets * b + w - 1;
        let table_len = r.len("table length")?;
        if table_len != table_byte_len(slots, value_bits) {
            return Err(FormatError::Malformed(format!(
                "layer {index}: table is {table_len} bytes, geometry needs {}",
                table_byte_len(slots, value_bits)
            )));
        }
        let table = unpack_values(r.take(table_len, "solution table")?, slots, value_bits);

        parsed_layers.push(Layer::from_parts(
            num_buckets,
            layer_seed,
            SolutionTable::from_values(table),
            ThresholdStore::from_parts(mode, num_buckets, bucket_size, ribbon_width, codes, exceptions),
        ));
    }

    let base_slots = r.len("base slot count")?;
    let base_seed = r.u32("base seed")?;
    let table_len = r.len("base table length")?;
    if table_len != table_byte_len(base_slots, value_bits) {
        return Err(FormatError::Malformed(format!(
            "base layer: table is {table_len} bytes, geometry needs {}",
            table_byte_len(base_slots, value_bits)
        )));
    }
    let base_table = unpack_values(r.take(table_len, "base table")?, base_slots, value_bits);

    if r.pos != bytes.len() {
        return Err(FormatError::Malformed(format!(
            "{} trailing bytes after structure",
            bytes.len() - r.pos
        )));
    }

    let base = BaseLayer::from_parts(base_slots, base_seed, SolutionTable::from_values(base_table));
    Ok(RetrievalStructure::from_parts(config, parsed_layers, base)?)
}

pub fn save(structure: &RetrievalStructure, path: &Path) -> Result<(), FormatError> {
    Ok(fs::write(path, to_bytes(structure))?)
}

pub fn load(path: &Path) -> Result<RetrievalStructure, FormatError> {
    from_bytes(&fs::read(path)?)
}
