//! Incremental Gaussian elimination over the banded GF(2) equation system,
//! plus back substitution and the query-side dot product.
//!
//! Each stored slot holds at most one row: a `w`-bit coefficient word
//! anchored at the slot (bit 0 set) and an `r`-bit right-hand side.
//! Insertion only ever mutates the incoming row; stored rows are
//! immutable until a bucket-suffix uninstall removes them, which is how
//! bumping takes equations back out of the system.

use crate::hash::CoefficientWord;

/// One equation: it covers slots `start .. start + w` with the set bits of
/// `coeff` selecting which slots participate.
#[derive(Clone, Copy, Debug)]
pub struct Row {
    pub start: usize,
    pub coeff: CoefficientWord,
    pub rhs: u16,
}

/// Result of inserting one row.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum InsertOutcome {
    /// Row was stored with its pivot at the given slot.
    Inserted(usize),
    /// Row is linearly dependent on stored rows and consistent with them;
    /// nothing was stored and nothing needs to be.
    Redundant,
    /// Row is dependent but inconsistent: the system is unsolvable unless
    /// the caller bumps.
    Failure,
}

/// Insertion log for the bucket currently being processed: `(offset,
/// pivot)` per stored row, in insertion order. Offsets are non-decreasing,
/// so removing a threshold suffix removes exactly the most recent
/// insertions.
#[derive(Default, Debug)]
pub struct BucketJournal {
    entries: Vec<(u32, usize)>,
}

impl BucketJournal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn push(&mut self, offset: u32, pivot: usize) {
        debug_assert!(self.entries.last().map_or(true, |&(o, _)| o <= offset));
        self.entries.push((offset, pivot));
    }
}

/// The banded system for one layer: one optional stored row per slot.
pub struct BandedSystem {
    w: u32,
    coeff: Vec<u64>, // 0 means vacant; stored words always have bit 0 set
    rhs: Vec<u16>,
}

impl BandedSystem {
    pub fn new(slots: usize, w: u32) -> Self {
        debug_assert!(matches!(w, 16 | 32 | 64));
        BandedSystem {
            w,
            coeff: vec![0; slots],
            rhs: vec![0; slots],
        }
    }

    pub fn slot_count(&self) -> usize {
        self.coeff.len()
    }

    pub fn ribbon_width(&self) -> u32 {
        self.w
    }

    /// View covering every slot.
    pub fn view(&mut self) -> SystemView<'_> {
        SystemView {
            base: 0,
            w: self.w,
            coeff: &mut self.coeff,
            rhs: &mut self.rhs,
        }
    }

    /// Splits the storage at the given slot boundaries into disjoint
    /// views, one per partition. Boundaries must be strictly increasing
    /// and below the slot count.
    pub fn split(&mut self, boundaries: &[usize]) -> Vec<SystemView<'_>> {
        let w = self.w;
        let mut views = Vec::with_capacity(boundaries.len() + 1);
        let mut base = 0usize;
        let mut coeff = self.coeff.as_mut_slice();
        let mut rhs = self.rhs.as_mut_slice();
        for &cut in boundaries {
            debug_assert!(cut > base && cut < base + coeff.len());
            let (c_lo, c_hi) = coeff.split_at_mut(cut - base);
            let (r_lo, r_hi) = rhs.split_at_mut(cut - base);
            views.push(SystemView {
                base,
                w,
                coeff: c_lo,
                rhs: r_lo,
            });
            coeff = c_hi;
            rhs = r_hi;
            base = cut;
        }
        views.push(SystemView {
            base,
            w,
            coeff,
            rhs,
        });
        views
    }

    pub fn insert_row(
        &mut self,
        row: Row,
        journal: &mut BucketJournal,
        offset: u32,
    ) -> InsertOutcome {
        self.view().insert_row(row, journal, offset)
    }

    pub fn uninstall_from(&mut self, journal: &mut BucketJournal, threshold: u32) -> usize {
        self.view().uninstall_from(journal, threshold)
    }

    /// Back-substitutes slots `lo .. hi` into `segment` (`segment.len() ==
    /// hi - lo`). No stored row in the range may have its coefficient
    /// window reach slot `hi` or beyond; violating that is a logic error.
    pub fn back_substitute(&self, lo: usize, hi: usize, segment: &mut [u16]) {
        back_substitute_into(&self.coeff[lo..hi], &self.rhs[lo..hi], segment);
    }

    /// Stored rows as `(pivot slot, coefficient bits)`, ascending by slot.
    pub fn stored_rows(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.coeff
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(s, &c)| (s, c))
    }
}

/// Mutable window over a contiguous slot range of a [`BandedSystem`].
/// Distinct views touch disjoint ranges, so partitions can run fully in
/// parallel. Slot arguments stay global; the view translates.
pub struct SystemView<'a> {
    base: usize,
    w: u32,
    coeff: &'a mut [u64],
    rhs: &'a mut [u16],
}

impl SystemView<'_> {
    pub fn base(&self) -> usize {
        self.base
    }

    pub fn len(&self) -> usize {
        self.coeff.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeff.is_empty()
    }

    /// Inserts one row. The incoming row is reduced against stored rows
    /// along its walk; stored entries themselves are never modified. On
    /// success the journal records `(offset, pivot)`.
    pub fn insert_row(
        &mut self,
        row: Row,
        journal: &mut BucketJournal,
        offset: u32,
    ) -> InsertOutcome {
        debug_assert!(row.start >= self.base);
        debug_assert!(row.start + self.w as usize - 1 < self.base + self.coeff.len());
        let mut s = row.start - self.base;
        let mut c = row.coeff.bits();
        let mut rhs = row.rhs;
        loop {
            let stored = self.coeff[s];
            if stored == 0 {
                self.coeff[s] = c;
                self.rhs[s] = rhs;
                let pivot = self.base + s;
                journal.push(offset, pivot);
                return InsertOutcome::Inserted(pivot);
            }
            c ^= stored;
            rhs ^= self.rhs[s];
            if c == 0 {
                return if rhs == 0 {
                    InsertOutcome::Redundant
                } else {
                    InsertOutcome::Failure
                };
            }
            // Both words had bit 0 set, so the XOR cleared it and the
            // pivot strictly advances.
            let shift = c.trailing_zeros() as usize;
            c >>= shift;
            s += shift;
        }
    }

    /// Removes every journaled row with `offset >= threshold` (a suffix of
    /// the journal) and clears their slots. Returns how many were removed.
    pub fn uninstall_from(&mut self, journal: &mut BucketJournal, threshold: u32) -> usize {
        let mut removed = 0;
        while journal
            .entries
            .last()
            .map_or(false, |&(o, _)| o >= threshold)
        {
            let (_, pivot) = journal.entries.pop().unwrap();
            let s = pivot - self.base;
            self.coeff[s] = 0;
            self.rhs[s] = 0;
            removed += 1;
        }
        removed
    }

    /// Back-substitutes this view's whole range into `segment`.
    pub fn back_substitute(&self, segment: &mut [u16]) {
        back_substitute_into(self.coeff, self.rhs, segment);
    }
}

/// Right-to-left solve: vacant slots get 0, stored slots get `rhs` XOR the
/// already-solved slots their coefficient selects.
fn back_substitute_into(coeff: &[u64], rhs: &[u16], z: &mut [u16]) {
    debug_assert_eq!(coeff.len(), z.len());
    for s in (0..z.len()).rev() {
        let c = coeff[s];
        if c == 0 {
            z[s] = 0;
            continue;
        }
        let mut acc = rhs[s];
        let mut bits = c & !1;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            acc ^= z[s + j];
            bits &= bits - 1;
        }
        z[s] = acc;
    }
}

/// Solved table for one layer: one `r`-bit value per slot. Immutable after
/// construction and safe to share across query threads.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SolutionTable {
    z: Vec<u16>,
}

impl SolutionTable {
    pub fn from_values(z: Vec<u16>) -> Self {
        SolutionTable { z }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn values(&self) -> &[u16] {
        &self.z
    }

    /// XOR of `z[start + j]` over the set bits `j` of `coeff`.
    #[inline]
    pub fn query_dot(&self, start: usize, coeff: CoefficientWord) -> u16 {
        let mut acc = 0u16;
        let mut bits = coeff.bits();
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            acc ^= self.z[start + j];
            bits &= bits - 1;
        }
        acc
    }
}
