//! Boolean set algebra over an index universe of arbitrary size.
//!
//! Powerset lattices materialized as [`super::FiniteLattice`] are capped at
//! 20 universe members; reward universes grow past that as geons are
//! discovered. This carrier performs the same operations directly on index
//! sets, with observable behavior identical to the explicit powerset.

use std::collections::BTreeSet;

/// A subset of `0..universe_size`, kept sorted for deterministic iteration.
pub type IndexSet = BTreeSet<u32>;

/// Boolean algebra over the universe `0..size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SetAlgebra {
    size: u32,
}

impl SetAlgebra {
    pub fn new(size: usize) -> Self {
        SetAlgebra { size: size as u32 }
    }

    pub fn size(&self) -> usize {
        self.size as usize
    }

    pub fn bottom(&self) -> IndexSet {
        IndexSet::new()
    }

    pub fn top(&self) -> IndexSet {
        (0..self.size).collect()
    }

    pub fn join(&self, a: &IndexSet, b: &IndexSet) -> IndexSet {
        a.union(b).copied().collect()
    }

    pub fn meet(&self, a: &IndexSet, b: &IndexSet) -> IndexSet {
        a.intersection(b).copied().collect()
    }

    pub fn leq(&self, a: &IndexSet, b: &IndexSet) -> bool {
        a.is_subset(b)
    }

    pub fn complement(&self, a: &IndexSet) -> IndexSet {
        (0..self.size).filter(|i| !a.contains(i)).collect()
    }

    /// Heyting implication; in a Boolean algebra a ⇒ b = ¬a ∨ b.
    pub fn implication(&self, a: &IndexSet, b: &IndexSet) -> IndexSet {
        self.join(&self.complement(a), b)
    }

    pub fn difference(&self, a: &IndexSet, b: &IndexSet) -> IndexSet {
        a.difference(b).copied().collect()
    }
}
