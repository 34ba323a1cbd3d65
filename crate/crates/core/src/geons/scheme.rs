//! Geon schemes and their canonical form.
//!
//! A scheme is a set of geon instances localized in one place together with
//! their incidence matrix; two schemes describe the same object type exactly
//! when they have the same class multiset and the same matrix up to a
//! class-preserving relabeling of instances. Canonicalization finds the
//! lexicographically least relabeling by backtracking, so matching and
//! persistence are deterministic.
//!
//! Canonical encoding grammar (stable; the store persists these strings):
//!
//! ```text
//! classes=<id>,<id>,...;inc=<i>-<j>:<Facet>+<Facet>,...
//! ```
//!
//! Class ids ascend; `inc` lists the non-empty entries of the relabeled
//! matrix sorted by (i, j), each zone set in canonical facet order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    incidence_matrix, GeonDescriptor, GeonError, GeonInstance, IncidenceMatrix, Result, ZoneSet,
};

/// Backtracking bound for canonicalization.
pub const MAX_SCHEME_GEONS: usize = 12;

/// Geons observed in one place, their contact structure, and optionally the
/// pose tag of the viewpoint the observation was made from. The viewpoint
/// never participates in matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeonScheme {
    pub members: Vec<GeonDescriptor>,
    pub incidence: IncidenceMatrix,
    pub viewpoint: Option<String>,
}

impl GeonScheme {
    /// Builds the scheme of a set of placed geons (all of one object).
    pub fn from_instances(
        instances: &[GeonInstance],
        overlap_epsilon: f64,
        viewpoint: Option<String>,
    ) -> Self {
        GeonScheme {
            members: instances.iter().map(|g| g.descriptor()).collect(),
            incidence: incidence_matrix(instances, overlap_epsilon),
            viewpoint,
        }
    }

    pub fn classes(&self) -> Vec<super::ClassId> {
        self.members.iter().map(|m| m.class).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A stable text encoding of a scheme, invariant under class-preserving
/// instance relabeling.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalScheme(String);

impl CanonicalScheme {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

/// One matrix cell under comparison: contacts sort before empty cells so
/// that denser labelings are preferred, and zone sets compare in canonical
/// facet order.
type CellRank = (u8, Vec<u8>);

fn cell_rank(zones: Option<&ZoneSet>) -> CellRank {
    match zones {
        Some(z) => (0, z.0.iter().map(|&f| f as u8).collect()),
        None => (1, Vec::new()),
    }
}

/// Instances u, v are twins when they relate identically to every other
/// instance (and to each other, symmetrically); placing either first yields
/// the same canonical form, so only one needs exploring.
fn twins(m: &IncidenceMatrix, n: usize, u: u32, v: u32) -> bool {
    if m.zones(u, v) != m.zones(v, u) {
        return false;
    }
    (0..n as u32)
        .filter(|&w| w != u && w != v)
        .all(|w| m.zones(u, w) == m.zones(v, w) && m.zones(w, u) == m.zones(w, v))
}

struct Search<'a> {
    matrix: &'a IncidenceMatrix,
    classes: &'a [super::ClassId],
    target: &'a [super::ClassId],
    n: usize,
    best: Option<(Vec<CellRank>, Vec<u32>)>,
}

impl Search<'_> {
    /// The comparison segment added by placing `v` at position k: its cells
    /// against every already-placed instance, in placement order.
    fn segment(&self, placed: &[u32], v: u32) -> Vec<CellRank> {
        let mut seg = Vec::with_capacity(placed.len() * 2);
        for &p in placed {
            seg.push(cell_rank(self.matrix.zones(p, v)));
            seg.push(cell_rank(self.matrix.zones(v, p)));
        }
        seg
    }

    fn explore(&mut self, placed: &mut Vec<u32>, flat: &mut Vec<CellRank>, used: &mut Vec<bool>) {
        let k = placed.len();
        if k == self.n {
            let candidate = (flat.clone(), placed.clone());
            if self
                .best
                .as_ref()
                .map(|(b, _)| candidate.0 < *b)
                .unwrap_or(true)
            {
                self.best = Some(candidate);
            }
            return;
        }
        let mut tried: Vec<u32> = Vec::new();
        for v in 0..self.n as u32 {
            if used[v as usize] || self.classes[v as usize] != self.target[k] {
                continue;
            }
            if tried
                .iter()
                .any(|&u| twins(self.matrix, self.n, u, v))
            {
                continue;
            }
            tried.push(v);
            let seg = self.segment(placed, v);
            if let Some((best, _)) = &self.best {
                // Lexicographic prefix pruning against the incumbent.
                let lo = flat.len();
                let hi = lo + seg.len();
                if hi <= best.len() {
                    match seg.as_slice().cmp(&best[lo..hi]) {
                        std::cmp::Ordering::Greater => continue,
                        _ => {}
                    }
                    if flat.as_slice() > &best[..lo] {
                        continue;
                    }
                }
            }
            used[v as usize] = true;
            placed.push(v);
            let before = flat.len();
            flat.extend(seg);
            self.explore(placed, flat, used);
            flat.truncate(before);
            placed.pop();
            used[v as usize] = false;
        }
    }
}

/// Relabels instance indices to the lexicographically least labeling over
/// all class-preserving permutations and renders the stable encoding.
pub fn scheme_canonical_form(s: &GeonScheme) -> Result<CanonicalScheme> {
    let n = s.members.len();
    if n > MAX_SCHEME_GEONS {
        return Err(GeonError::SchemeTooLarge);
    }
    let classes = s.classes();
    let mut target = classes.clone();
    target.sort_unstable();

    let mut search = Search {
        matrix: &s.incidence,
        classes: &classes,
        target: &target,
        n,
        best: None,
    };
    search.explore(&mut Vec::new(), &mut Vec::new(), &mut vec![false; n]);
    let perm = match search.best {
        Some((_, perm)) => perm,
        None => Vec::new(), // empty scheme
    };

    // Relabeled matrix: canonical position of original index perm[k] is k.
    let mut canon_of = vec![0u32; n];
    for (k, &orig) in perm.iter().enumerate() {
        canon_of[orig as usize] = k as u32;
    }
    let mut cells: BTreeMap<(u32, u32), String> = BTreeMap::new();
    for (&(i, j), z) in s.incidence.entries() {
        cells.insert((canon_of[i as usize], canon_of[j as usize]), z.encode());
    }
    let classes_part = target
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let inc_part = cells
        .iter()
        .map(|(&(i, j), z)| format!("{i}-{j}:{z}"))
        .collect::<Vec<_>>()
        .join(",");
    Ok(CanonicalScheme(format!(
        "classes={classes_part};inc={inc_part}"
    )))
}

/// True iff the canonical forms coincide: equal class multisets and equal
/// matrices up to class-preserving relabeling.
pub fn scheme_match(a: &GeonScheme, b: &GeonScheme) -> Result<bool> {
    Ok(scheme_canonical_form(a)? == scheme_canonical_form(b)?)
}

/// Inverse of the encoding: recovers the class list and the abstract
/// incidence structure, enough to reconstruct the whole scheme up to
/// relabeling.
pub fn parse_canonical(encoded: &str) -> Result<(Vec<super::ClassId>, IncidenceMatrix)> {
    let bad = |msg: &str| GeonError::CanonicalParse(msg.to_string());
    let rest = encoded
        .strip_prefix("classes=")
        .ok_or_else(|| bad("missing classes="))?;
    let (classes_part, inc_part) = rest
        .split_once(";inc=")
        .ok_or_else(|| bad("missing ;inc="))?;
    let classes: Vec<super::ClassId> = if classes_part.is_empty() {
        Vec::new()
    } else {
        classes_part
            .split(',')
            .map(|c| c.parse().map_err(|_| bad("bad class id")))
            .collect::<Result<_>>()?
    };
    let mut entries = BTreeMap::new();
    if !inc_part.is_empty() {
        for cell in inc_part.split(',') {
            let (pair, zones) = cell.split_once(':').ok_or_else(|| bad("bad cell"))?;
            let (i, j) = pair.split_once('-').ok_or_else(|| bad("bad pair"))?;
            let i: u32 = i.parse().map_err(|_| bad("bad index"))?;
            let j: u32 = j.parse().map_err(|_| bad("bad index"))?;
            if i as usize >= classes.len() || j as usize >= classes.len() {
                return Err(bad("index out of range"));
            }
            entries.insert((i, j), ZoneSet::decode(zones)?);
        }
    }
    Ok((
        classes.clone(),
        IncidenceMatrix::from_parts(classes.len() as u32, entries),
    ))
}

#[cfg(test)]
mod tests {
    use super::super::{default_catalog, Facet, GeonInstance};
    use super::*;

    fn geon(instance_id: u32, class: u16, position: [f64; 3], scale: [f64; 3]) -> GeonInstance {
        GeonInstance {
            instance_id,
            class,
            position,
            scale,
            noise: 0.0,
            parent_object: 7,
        }
    }

    fn tower(ids: [u32; 3]) -> GeonScheme {
        // Bottom brick (class 1), middle brick (class 1), top cylinder (class 9).
        let geons = vec![
            geon(ids[0], 1, [0.0, 0.0, 0.0], [1.0; 3]),
            geon(ids[1], 1, [0.0, 0.0, 1.0], [1.0; 3]),
            geon(ids[2], 9, [0.0, 0.0, 2.0], [1.0; 3]),
        ];
        GeonScheme::from_instances(&geons, 0.05, None)
    }

    #[test]
    fn single_geon_scheme_encoding() {
        let s = GeonScheme::from_instances(&[geon(3, 5, [0.0; 3], [1.0; 3])], 0.05, None);
        let c = scheme_canonical_form(&s).unwrap();
        assert_eq!(c.as_str(), "classes=5;inc=");
    }

    #[test]
    fn permuting_instances_preserves_canonical_form() {
        let base = tower([0, 1, 2]);
        let c0 = scheme_canonical_form(&base).unwrap();
        // All 3! orders of the same arrangement.
        let orders: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let geons = vec![
            geon(0, 1, [0.0, 0.0, 0.0], [1.0; 3]),
            geon(1, 1, [0.0, 0.0, 1.0], [1.0; 3]),
            geon(2, 9, [0.0, 0.0, 2.0], [1.0; 3]),
        ];
        for order in orders {
            let shuffled: Vec<GeonInstance> = order.iter().map(|&i| geons[i].clone()).collect();
            let s = GeonScheme::from_instances(&shuffled, 0.05, None);
            assert_eq!(scheme_canonical_form(&s).unwrap(), c0);
            assert!(scheme_match(&s, &base).unwrap());
        }
    }

    #[test]
    fn scheme_matches_itself() {
        let s = tower([4, 5, 6]);
        assert!(scheme_match(&s, &s).unwrap());
    }

    #[test]
    fn same_classes_different_zones_do_not_match() {
        // A cylinder body with a handle at the side versus the same handle
        // on top: cup versus pail.
        let cup = GeonScheme::from_instances(
            &[
                geon(0, 9, [0.0, 0.0, 0.0], [1.0; 3]),
                geon(1, 4, [1.0, 0.0, 0.0], [1.0, 0.5, 1.0]),
            ],
            0.05,
            None,
        );
        let pail = GeonScheme::from_instances(
            &[
                geon(0, 9, [0.0, 0.0, 0.0], [1.0; 3]),
                geon(1, 4, [0.0, 0.0, 1.0], [1.0, 0.5, 1.0]),
            ],
            0.05,
            None,
        );
        assert_eq!(cup.classes(), pail.classes());
        assert!(!scheme_match(&cup, &pail).unwrap());
        let c = scheme_canonical_form(&cup).unwrap();
        assert!(c.as_str().contains("Left"));
        let p = scheme_canonical_form(&pail).unwrap();
        assert!(p.as_str().contains("Bottom"));
    }

    #[test]
    fn oversized_scheme_is_rejected() {
        let geons: Vec<GeonInstance> = (0..13)
            .map(|i| geon(i, 1, [i as f64 * 10.0, 0.0, 0.0], [1.0; 3]))
            .collect();
        let s = GeonScheme::from_instances(&geons, 0.05, None);
        assert!(matches!(
            scheme_canonical_form(&s).unwrap_err(),
            GeonError::SchemeTooLarge
        ));
    }

    #[test]
    fn twelve_identical_geons_canonicalize_quickly() {
        // Twin pruning keeps the empty-matrix worst case linear.
        let geons: Vec<GeonInstance> = (0..12)
            .map(|i| geon(i, 1, [i as f64 * 10.0, 0.0, 0.0], [1.0; 3]))
            .collect();
        let s = GeonScheme::from_instances(&geons, 0.05, None);
        let c = scheme_canonical_form(&s).unwrap();
        assert!(c.as_str().starts_with("classes=1,1,1"));
    }

    #[test]
    fn canonical_round_trip_reconstructs_the_scheme() {
        let s = tower([0, 1, 2]);
        let c = scheme_canonical_form(&s).unwrap();
        let (classes, matrix) = parse_canonical(c.as_str()).unwrap();
        assert_eq!(classes, vec![1, 1, 9]);
        // Rebuild a scheme from the decoded structure; it must match.
        let members: Vec<GeonDescriptor> = classes
            .iter()
            .enumerate()
            .map(|(i, &class)| GeonDescriptor {
                object: 99,
                instance: i as u32,
                class,
            })
            .collect();
        let rebuilt = GeonScheme {
            members,
            incidence: matrix,
            viewpoint: None,
        };
        assert!(scheme_match(&rebuilt, &s).unwrap());
    }

    #[test]
    fn default_catalog_classes_are_all_encodable() {
        for c in default_catalog().classes() {
            let s = GeonScheme::from_instances(
                &[geon(0, c.id, [0.0; 3], [1.0; 3])],
                0.05,
                None,
            );
            assert_eq!(
                scheme_canonical_form(&s).unwrap().as_str(),
                format!("classes={};inc=", c.id)
            );
        }
    }

    #[test]
    fn zone_set_encoding_round_trips() {
        let mut set = std::collections::BTreeSet::new();
        set.insert(Facet::Left);
        set.insert(Facet::Top);
        let z = ZoneSet(set);
        assert_eq!(z.encode(), "Top+Left");
        assert_eq!(ZoneSet::decode("Top+Left").unwrap(), z);
        assert!(ZoneSet::decode("Sideways").is_err());
    }
}
