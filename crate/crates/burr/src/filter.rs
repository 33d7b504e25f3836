//! Approximate-membership filter on top of the retrieval structure: each
//! key stores its own `r`-bit fingerprint, so build keys always match
//! (no false negatives) and foreign keys match with probability ~2^-r.

use crate::hash::{fingerprint, master_hash};
use crate::layer::{BuildConfig, BuildError, BuildStats, RetrievalStructure};

/// Filter wrapper; `config.value_bits` is the fingerprint width.
#[derive(Clone, Debug)]
pub struct RibbonFilter {
    structure: RetrievalStructure,
}

impl RibbonFilter {
    /// Builds a filter over `keys`. Duplicates are fine: equal keys carry
    /// equal fingerprints and collapse into redundant rows.
    pub fn build<K: AsRef<[u8]>>(
        keys: &[K],
        config: &BuildConfig,
        threads: usize,
    ) -> Result<Self, BuildError> {
        Ok(Self::build_with_stats(keys, config, threads)?.0)
    }

    /// As [`build`](Self::build), also returning construction timings.
    pub fn build_with_stats<K: AsRef<[u8]>>(
        keys: &[K],
        config: &BuildConfig,
        threads: usize,
    ) -> Result<(Self, BuildStats), BuildError> {
        let r = config.value_bits;
        let pairs = keys
            .iter()
            .map(|k| {
                let h = master_hash(k.as_ref(), config.seed);
                (h, fingerprint(h, r))
            })
            .collect();
        let (structure, stats) = RetrievalStructure::construct_with_stats(pairs, config, threads)?;
        Ok((RibbonFilter { structure }, stats))
    }

    /// Membership test: never false for build keys, true for foreign keys
    /// with probability about 2^-r.
    pub fn may_contain(&self, key: &[u8]) -> bool {
        let config = self.structure.config();
        let h = master_hash(key, config.seed);
        self.structure.query_hashed(h) == fingerprint(h, config.value_bits)
    }

    pub fn structure(&self) -> &RetrievalStructure {
        &self.structure
    }

    pub fn from_structure(structure: RetrievalStructure) -> Self {
        RibbonFilter { structure }
    }

    pub fn into_structure(self) -> RetrievalStructure {
        self.structure
    }
}
