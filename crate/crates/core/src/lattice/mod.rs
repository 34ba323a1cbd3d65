//! Finite bounded lattices with order queries, join/meet, distributivity
//! testing, and Brouwer (Heyting) implication / pseudo-complement.
//!
//! Two carriers are provided behind one type: an explicit table-backed
//! lattice built from a declared partial order, and a Boolean powerset
//! lattice whose elements are bitsets over a small universe. Both are
//! immutable after construction and safe to share between threads.
//!
//! For reward universes too large for an explicit powerset (the universe
//! grows as geons are discovered), [`algebra::SetAlgebra`] offers the same
//! Boolean operations on index sets without materializing elements.

pub mod algebra;
pub mod laws;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use serde::Deserialize;
use thiserror::Error;

/// Hard ceiling on powerset universes: 2^20 elements.
pub const MAX_POWERSET_UNIVERSE: usize = 20;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("order is not antisymmetric: cycle through `{0}`")]
    NotAntisymmetric(String),
    #[error("not a lattice: `{a}` and `{b}` have no unique {kind}")]
    NotALattice {
        a: String,
        b: String,
        kind: &'static str,
    },
    #[error("poset has no global bounds")]
    NoBounds,
    #[error("elements belong to different lattice instances")]
    MixedLattices,
    #[error("lattice is not distributive, implication is undefined")]
    NotBrouwer,
    #[error("no maximum among implication candidates")]
    NoMaximum,
    #[error("powerset universe exceeds {MAX_POWERSET_UNIVERSE} identifiers")]
    UniverseTooLarge,
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("duplicate element `{0}`")]
    DuplicateElement(String),
    #[error("invalid lattice description: {0}")]
    Description(String),
}

pub type Result<T> = std::result::Result<T, LatticeError>;

/// Element handle; valid only against the lattice that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Elt {
    lattice: u64,
    index: u32,
}

impl Elt {
    pub fn index(&self) -> usize {
        self.index as usize
    }
}

static NEXT_LATTICE_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_lattice_id() -> u64 {
    NEXT_LATTICE_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug)]
struct Table {
    /// Element identifiers, sorted; index into this list is the element id.
    elements: Vec<String>,
    n: usize,
    /// Row-major n*n relation: `leq[a*n+b]` iff a <= b.
    leq: Vec<bool>,
    join: Vec<u32>,
    meet: Vec<u32>,
    bottom: u32,
    top: u32,
}

#[derive(Debug)]
struct Powerset {
    /// Universe identifiers, sorted; element index is the membership bitmask.
    universe: Vec<String>,
}

#[derive(Debug)]
enum Repr {
    Table(Table),
    Powerset(Powerset),
}

/// An explicit finite bounded lattice.
#[derive(Debug)]
pub struct FiniteLattice {
    id: u64,
    repr: Repr,
    distributive: OnceLock<bool>,
}

impl FiniteLattice {
    /// Builds a lattice from declared elements and covering/order pairs
    /// `(lesser, greater)`. The reflexive-transitive closure is computed,
    /// then join/meet tables are filled by exhaustive bound scans.
    pub fn build_from_order<S: AsRef<str>>(elements: &[S], order_pairs: &[(S, S)]) -> Result<Self> {
        if elements.is_empty() {
            return Err(LatticeError::NoBounds);
        }
        let mut names: Vec<String> = elements.iter().map(|s| s.as_ref().to_string()).collect();
        names.sort();
        for w in names.windows(2) {
            if w[0] == w[1] {
                return Err(LatticeError::DuplicateElement(w[0].clone()));
            }
        }
        let idx: BTreeMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let n = names.len();
        let mut leq = vec![false; n * n];
        for i in 0..n {
            leq[i * n + i] = true;
        }
        for (a, b) in order_pairs {
            let ia = *idx
                .get(a.as_ref())
                .ok_or_else(|| LatticeError::UnknownElement(a.as_ref().to_string()))?;
            let ib = *idx
                .get(b.as_ref())
                .ok_or_else(|| LatticeError::UnknownElement(b.as_ref().to_string()))?;
            leq[ia * n + ib] = true;
        }
        // Warshall closure.
        for k in 0..n {
            for i in 0..n {
                if leq[i * n + k] {
                    for j in 0..n {
                        if leq[k * n + j] {
                            leq[i * n + j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && leq[i * n + j] && leq[j * n + i] {
                    return Err(LatticeError::NotAntisymmetric(names[i].clone()));
                }
            }
        }
        let mut join = vec![0u32; n * n];
        let mut meet = vec![0u32; n * n];
        for a in 0..n {
            for b in 0..n {
                join[a * n + b] = Self::scan_bound(&leq, n, a, b, true).ok_or_else(|| {
                    LatticeError::NotALattice {
                        a: names[a].clone(),
                        b: names[b].clone(),
                        kind: "join",
                    }
                })? as u32;
                meet[a * n + b] = Self::scan_bound(&leq, n, a, b, false).ok_or_else(|| {
                    LatticeError::NotALattice {
                        a: names[a].clone(),
                        b: names[b].clone(),
                        kind: "meet",
                    }
                })? as u32;
            }
        }
        let mut bottom = 0usize;
        let mut top = 0usize;
        for i in 1..n {
            bottom = meet[bottom * n + i] as usize;
            top = join[top * n + i] as usize;
        }
        Ok(FiniteLattice {
            id: fresh_lattice_id(),
            repr: Repr::Table(Table {
                elements: names,
                n,
                leq,
                join,
                meet,
                bottom: bottom as u32,
                top: top as u32,
            }),
            distributive: OnceLock::new(),
        })
    }

    /// Least upper bound (`upper = true`) or greatest lower bound of `a`, `b`
    /// by exhaustive scan; `None` when no unique bound exists.
    fn scan_bound(leq: &[bool], n: usize, a: usize, b: usize, upper: bool) -> Option<usize> {
        let le = |x: usize, y: usize| leq[x * n + y];
        let mut best: Option<usize> = None;
        for c in 0..n {
            let is_bound = if upper {
                le(a, c) && le(b, c)
            } else {
                le(c, a) && le(c, b)
            };
            if !is_bound {
                continue;
            }
            best = match best {
                None => Some(c),
                Some(cur) => {
                    let better = if upper { le(c, cur) } else { le(cur, c) };
                    let worse = if upper { le(cur, c) } else { le(c, cur) };
                    if better {
                        Some(c)
                    } else if worse {
                        Some(cur)
                    } else {
                        // Incomparable bounds: check a least/greatest exists at all.
                        let mut found = None;
                        for d in 0..n {
                            let d_bound = if upper {
                                le(a, d) && le(b, d)
                            } else {
                                le(d, a) && le(d, b)
                            };
                            if !d_bound {
                                continue;
                            }
                            let extreme = (0..n).all(|e| {
                                let e_bound = if upper {
                                    le(a, e) && le(b, e)
                                } else {
                                    le(e, a) && le(e, b)
                                };
                                !e_bound || if upper { le(d, e) } else { le(e, d) }
                            });
                            if extreme {
                                found = Some(d);
                                break;
                            }
                        }
                        return found;
                    }
                }
            };
        }
        best
    }

    /// Boolean lattice of all subsets of `universe`, ordered by inclusion.
    /// Elements are encoded as bitsets over the sorted universe.
    pub fn powerset<S: AsRef<str>>(universe: &[S]) -> Result<Self> {
        if universe.len() > MAX_POWERSET_UNIVERSE {
            return Err(LatticeError::UniverseTooLarge);
        }
        let mut names: Vec<String> = universe.iter().map(|s| s.as_ref().to_string()).collect();
        names.sort();
        for w in names.windows(2) {
            if w[0] == w[1] {
                return Err(LatticeError::DuplicateElement(w[0].clone()));
            }
        }
        Ok(FiniteLattice {
            id: fresh_lattice_id(),
            repr: Repr::Powerset(Powerset { universe: names }),
            distributive: OnceLock::new(),
        })
    }

    /// Chain `names[0] < names[1] < ... < names[k-1]` (given order, not sorted order).
    pub fn chain<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let pairs: Vec<(&S, &S)> = names.windows(2).map(|w| (&w[0], &w[1])).collect();
        let pairs: Vec<(String, String)> = pairs
            .iter()
            .map(|(a, b)| (a.as_ref().to_string(), b.as_ref().to_string()))
            .collect();
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        Self::build_from_order(&names, &pairs)
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Table(t) => t.n,
            Repr::Powerset(p) => 1usize << p.universe.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty element sets
    }

    fn elt(&self, index: usize) -> Elt {
        debug_assert!(index < self.len());
        Elt {
            lattice: self.id,
            index: index as u32,
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Elt> + '_ {
        (0..self.len()).map(|i| self.elt(i))
    }

    /// Looks an element up by identifier. Powerset elements are written as
    /// `{}`, `{a}`, `{a,b}` over universe identifiers.
    pub fn element(&self, name: &str) -> Result<Elt> {
        match &self.repr {
            Repr::Table(t) => t
                .elements
                .binary_search_by(|e| e.as_str().cmp(name))
                .map(|i| self.elt(i))
                .map_err(|_| LatticeError::UnknownElement(name.to_string())),
            Repr::Powerset(p) => {
                let inner = name
                    .strip_prefix('{')
                    .and_then(|s| s.strip_suffix('}'))
                    .ok_or_else(|| LatticeError::UnknownElement(name.to_string()))?;
                let mut mask = 0usize;
                for part in inner.split(',').filter(|s| !s.is_empty()) {
                    let part = part.trim();
                    let bit = p
                        .universe
                        .binary_search_by(|e| e.as_str().cmp(part))
                        .map_err(|_| LatticeError::UnknownElement(name.to_string()))?;
                    mask |= 1 << bit;
                }
                Ok(self.elt(mask))
            }
        }
    }

    /// The subset element containing exactly the named universe members.
    pub fn subset<S: AsRef<str>>(&self, members: &[S]) -> Result<Elt> {
        match &self.repr {
            Repr::Powerset(p) => {
                let mut mask = 0usize;
                for m in members {
                    let bit = p
                        .universe
                        .binary_search_by(|e| e.as_str().cmp(m.as_ref()))
                        .map_err(|_| LatticeError::UnknownElement(m.as_ref().to_string()))?;
                    mask |= 1 << bit;
                }
                Ok(self.elt(mask))
            }
            Repr::Table(_) => Err(LatticeError::Description(
                "subset() requires a powerset lattice".into(),
            )),
        }
    }

    /// Canonical printable identifier of an element.
    pub fn name(&self, e: Elt) -> Result<String> {
        self.check(e)?;
        match &self.repr {
            Repr::Table(t) => Ok(t.elements[e.index()].clone()),
            Repr::Powerset(p) => {
                let mut parts = Vec::new();
                for (bit, name) in p.universe.iter().enumerate() {
                    if e.index() & (1 << bit) != 0 {
                        parts.push(name.clone());
                    }
                }
                Ok(format!("{{{}}}", parts.join(",")))
            }
        }
    }

    pub fn bottom(&self) -> Elt {
        match &self.repr {
            Repr::Table(t) => self.elt(t.bottom as usize),
            Repr::Powerset(_) => self.elt(0),
        }
    }

    pub fn top(&self) -> Elt {
        match &self.repr {
            Repr::Table(t) => self.elt(t.top as usize),
            Repr::Powerset(p) => self.elt((1usize << p.universe.len()) - 1),
        }
    }

    /// Whether this lattice produced the element handle.
    pub fn owns(&self, e: Elt) -> bool {
        e.lattice == self.id && e.index() < self.len()
    }

    fn check(&self, e: Elt) -> Result<()> {
        if !self.owns(e) {
            return Err(LatticeError::MixedLattices);
        }
        Ok(())
    }

    fn check2(&self, a: Elt, b: Elt) -> Result<()> {
        self.check(a)?;
        self.check(b)
    }

    pub fn leq(&self, a: Elt, b: Elt) -> Result<bool> {
        self.check2(a, b)?;
        Ok(match &self.repr {
            Repr::Table(t) => t.leq[a.index() * t.n + b.index()],
            Repr::Powerset(_) => a.index() & !b.index() == 0,
        })
    }

    pub fn join(&self, a: Elt, b: Elt) -> Result<Elt> {
        self.check2(a, b)?;
        Ok(match &self.repr {
            Repr::Table(t) => self.elt(t.join[a.index() * t.n + b.index()] as usize),
            Repr::Powerset(_) => self.elt(a.index() | b.index()),
        })
    }

    pub fn meet(&self, a: Elt, b: Elt) -> Result<Elt> {
        self.check2(a, b)?;
        Ok(match &self.repr {
            Repr::Table(t) => self.elt(t.meet[a.index() * t.n + b.index()] as usize),
            Repr::Powerset(_) => self.elt(a.index() & b.index()),
        })
    }

    /// True iff x ∧ (y ∨ z) = (x ∧ y) ∨ (x ∧ z) for all triples. Powerset
    /// lattices are distributive by the bitwise identities, so the scan is
    /// only run on table-backed lattices. Finite distributive ⟺ Brouwer.
    pub fn is_distributive(&self) -> bool {
        *self.distributive.get_or_init(|| match &self.repr {
            Repr::Powerset(_) => true,
            Repr::Table(t) => {
                let n = t.n;
                for x in 0..n {
                    for y in 0..n {
                        for z in 0..n {
                            let lhs = t.meet[x * n + t.join[y * n + z] as usize];
                            let rhs = t.join
                                [(t.meet[x * n + y] as usize) * n + t.meet[x * n + z] as usize];
                            if lhs != rhs {
                                return false;
                            }
                        }
                    }
                }
                true
            }
        })
    }

    /// Brouwer implication a ⇒ b = max{c : a ∧ c ≤ b}, by exhaustive scan
    /// over the table (Boolean lattices use the complement shortcut).
    pub fn implication(&self, a: Elt, b: Elt) -> Result<Elt> {
        self.check2(a, b)?;
        if !self.is_distributive() {
            return Err(LatticeError::NotBrouwer);
        }
        match &self.repr {
            Repr::Powerset(p) => {
                let full = (1usize << p.universe.len()) - 1;
                Ok(self.elt((full & !a.index()) | b.index()))
            }
            Repr::Table(t) => {
                let n = t.n;
                // In a Heyting algebra the candidates {c : a∧c ≤ b} are closed
                // under join, so their join is the maximum.
                let mut acc = t.bottom as usize;
                for c in 0..n {
                    if t.leq[(t.meet[a.index() * n + c] as usize) * n + b.index()] {
                        acc = t.join[acc * n + c] as usize;
                    }
                }
                if !t.leq[(t.meet[a.index() * n + acc] as usize) * n + b.index()] {
                    return Err(LatticeError::NoMaximum);
                }
                Ok(self.elt(acc))
            }
        }
    }

    /// Pseudo-complement ¬a = a ⇒ 0.
    pub fn pseudo_complement(&self, a: Elt) -> Result<Elt> {
        self.implication(a, self.bottom())
    }

    /// Deterministic tie-break key: table elements by identifier, subsets by
    /// their sorted member list (lexicographic).
    pub fn canonical_key(&self, e: Elt) -> Result<String> {
        self.name(e)
    }
}

#[derive(Deserialize)]
struct LatticeFile {
    elements: Vec<String>,
    order: Vec<(String, String)>,
}

/// Parses the lattice description format:
/// `{"elements": [...], "order": [[lesser, greater], ...]}`.
pub fn from_description(json: &str) -> Result<FiniteLattice> {
    let file: LatticeFile =
        serde_json::from_str(json).map_err(|e| LatticeError::Description(e.to_string()))?;
    FiniteLattice::build_from_order(&file.elements, &file.order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_lattice_is_degenerate() {
        let l = FiniteLattice::build_from_order(&["x"], &[]).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(l.bottom(), l.top());
    }

    #[test]
    fn chain_join_is_max_meet_is_min() {
        let l = FiniteLattice::chain(&["0", "m", "1"]).unwrap();
        let zero = l.element("0").unwrap();
        let m = l.element("m").unwrap();
        let one = l.element("1").unwrap();
        assert_eq!(l.join(m, one).unwrap(), one);
        assert_eq!(l.meet(m, one).unwrap(), m);
        assert_eq!(l.join(zero, m).unwrap(), m);
        assert_eq!(l.bottom(), zero);
        assert_eq!(l.top(), one);
    }

    #[test]
    fn missing_join_is_not_a_lattice() {
        // 0 < a, 0 < b and nothing above {a, b}: a ∨ b undefined.
        let err = FiniteLattice::build_from_order(&["0", "a", "b"], &[("0", "a"), ("0", "b")])
            .unwrap_err();
        assert!(matches!(err, LatticeError::NotALattice { kind: "join", .. }));
    }

    #[test]
    fn cycle_is_rejected() {
        let err =
            FiniteLattice::build_from_order(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap_err();
        assert!(matches!(err, LatticeError::NotAntisymmetric(_)));
    }

    #[test]
    fn empty_elements_have_no_bounds() {
        let err = FiniteLattice::build_from_order::<&str>(&[], &[]).unwrap_err();
        assert!(matches!(err, LatticeError::NoBounds));
    }

    #[test]
    fn join_meet_are_idempotent() {
        let l = FiniteLattice::chain(&["0", "half", "1"]).unwrap();
        for x in l.elements().collect::<Vec<_>>() {
            assert_eq!(l.join(x, x).unwrap(), x);
            assert_eq!(l.meet(x, x).unwrap(), x);
        }
    }

    #[test]
    fn powerset_join_is_union() {
        let l = FiniteLattice::powerset(&["g1", "g2"]).unwrap();
        let a = l.subset(&["g1"]).unwrap();
        let b = l.subset(&["g2"]).unwrap();
        let ab = l.subset(&["g1", "g2"]).unwrap();
        assert_eq!(l.join(a, b).unwrap(), ab);
        assert_eq!(l.meet(a, b).unwrap(), l.bottom());
        assert!(l.is_distributive());
    }

    #[test]
    fn powerset_sizes() {
        assert_eq!(FiniteLattice::powerset::<&str>(&[]).unwrap().len(), 1);
        assert_eq!(FiniteLattice::powerset(&["g1"]).unwrap().len(), 2);
        assert_eq!(FiniteLattice::powerset(&["g1", "g2"]).unwrap().len(), 4);
        let names: Vec<String> = (0..21).map(|i| format!("u{i}")).collect();
        assert!(matches!(
            FiniteLattice::powerset(&names).unwrap_err(),
            LatticeError::UniverseTooLarge
        ));
    }

    #[test]
    fn mixed_lattices_are_rejected() {
        let l1 = FiniteLattice::chain(&["0", "1"]).unwrap();
        let l2 = FiniteLattice::chain(&["0", "1"]).unwrap();
        let a = l1.element("0").unwrap();
        let b = l2.element("1").unwrap();
        assert!(matches!(
            l1.join(a, b).unwrap_err(),
            LatticeError::MixedLattices
        ));
    }

    #[test]
    fn diamond_m3_is_not_distributive() {
        let l = FiniteLattice::build_from_order(
            &["0", "a", "b", "c", "1"],
            &[
                ("0", "a"),
                ("0", "b"),
                ("0", "c"),
                ("a", "1"),
                ("b", "1"),
                ("c", "1"),
            ],
        )
        .unwrap();
        assert!(!l.is_distributive());
        let a = l.element("a").unwrap();
        assert!(matches!(
            l.implication(a, a).unwrap_err(),
            LatticeError::NotBrouwer
        ));
    }

    #[test]
    fn chains_are_distributive() {
        let l = FiniteLattice::chain(&["0", "a", "b", "1"]).unwrap();
        assert!(l.is_distributive());
    }

    #[test]
    fn implication_trivial_cases() {
        let l = FiniteLattice::chain(&["0", "half", "1"]).unwrap();
        for a in l.elements().collect::<Vec<_>>() {
            assert_eq!(l.implication(a, a).unwrap(), l.top());
            assert_eq!(l.implication(l.bottom(), a).unwrap(), l.top());
        }
    }

    #[test]
    fn implication_on_two_atom_powerset() {
        // Brute-force oracle: max over all 4 subsets c with {g1} ∧ c ≤ ∅.
        let l = FiniteLattice::powerset(&["g1", "g2"]).unwrap();
        let a = l.subset(&["g1"]).unwrap();
        let empty = l.bottom();
        let mut expected = l.bottom();
        for c in l.elements().collect::<Vec<_>>() {
            if l.leq(l.meet(a, c).unwrap(), empty).unwrap()
                && l.leq(expected, c).unwrap()
            {
                expected = c;
            }
        }
        assert_eq!(expected, l.subset(&["g2"]).unwrap());
        assert_eq!(l.implication(a, empty).unwrap(), expected);
    }

    #[test]
    fn pseudo_complement_cases() {
        let chain = FiniteLattice::chain(&["0", "half", "1"]).unwrap();
        assert_eq!(
            chain.pseudo_complement(chain.bottom()).unwrap(),
            chain.top()
        );
        assert_eq!(
            chain.pseudo_complement(chain.top()).unwrap(),
            chain.bottom()
        );
        // Largest c with half ∧ c = 0 is 0.
        let half = chain.element("half").unwrap();
        assert_eq!(chain.pseudo_complement(half).unwrap(), chain.bottom());

        let l = FiniteLattice::powerset(&["a", "b", "c"]).unwrap();
        let s = l.subset(&["a", "c"]).unwrap();
        assert_eq!(l.pseudo_complement(s).unwrap(), l.subset(&["b"]).unwrap());
    }

    #[test]
    fn description_round_trip() {
        let json = r#"{"elements": ["0", "m", "1"], "order": [["0", "m"], ["m", "1"]]}"#;
        let l = from_description(json).unwrap();
        assert_eq!(l.len(), 3);
        assert_eq!(l.name(l.top()).unwrap(), "1");
        assert!(from_description("{\"elements\": []}").is_err());
    }

    #[test]
    fn powerset_element_naming() {
        let l = FiniteLattice::powerset(&["b", "a"]).unwrap();
        let e = l.element("{a,b}").unwrap();
        assert_eq!(e, l.top());
        assert_eq!(l.name(e).unwrap(), "{a,b}");
        assert_eq!(l.name(l.bottom()).unwrap(), "{}");
    }
}
