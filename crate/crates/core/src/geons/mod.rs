//! Geon primitives: the class catalog, placed instances, axis-aligned
//! geometry and the facet-zone incidence matrix.
//!
//! All geons are modifications of a cylinder and a brick, described by
//! per-facet attributes (linear size, deformation, curvature). Contact
//! between two geons is decided from their bounding boxes only; the zone
//! sets name the facets of each geon at the contact.

mod scheme;
mod store;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use scheme::{
    parse_canonical, scheme_canonical_form, scheme_match, CanonicalScheme, GeonScheme,
    MAX_SCHEME_GEONS,
};
pub use store::{InsertOutcome, SchemaRecord, SchemaStore, StoredScheme};

/// Geon class identifier; 1..=16 in the default catalog.
pub type ClassId = u16;

/// Biederman's bound on the primitive vocabulary.
pub const MAX_CATALOG_CLASSES: usize = 36;

#[derive(Debug, Error)]
pub enum GeonError {
    #[error("geon instance invalid: {0}")]
    InvalidInstance(String),
    #[error("unknown geon class {0}")]
    UnknownClass(ClassId),
    #[error("catalog invalid: {0}")]
    CatalogInvalid(String),
    #[error("scheme has more than {MAX_SCHEME_GEONS} geons")]
    SchemeTooLarge,
    #[error("cannot parse canonical scheme: {0}")]
    CanonicalParse(String),
    #[error("schema store I/O: {0}")]
    StoreIo(#[from] std::io::Error),
    #[error("schema store format: {0}")]
    StoreFormat(String),
}

pub type Result<T> = std::result::Result<T, GeonError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeonBase {
    Brick,
    Cylinder,
}

/// Linear parameter of a facet or of the geon axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisLine {
    Long,
    Short,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deformation {
    No,
    Bloat,
    Depressed,
}

/// Facet directions: Left/Right along −x/+x, Front/Back along −y/+y,
/// Top/Bottom along +z/−z. The declared order is the canonical order used
/// by zone sets and encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Facet {
    Top,
    Bottom,
    Front,
    Back,
    Left,
    Right,
}

pub const FACETS: [Facet; 6] = [
    Facet::Top,
    Facet::Bottom,
    Facet::Front,
    Facet::Back,
    Facet::Left,
    Facet::Right,
];

impl Facet {
    pub fn name(self) -> &'static str {
        match self {
            Facet::Top => "Top",
            Facet::Bottom => "Bottom",
            Facet::Front => "Front",
            Facet::Back => "Back",
            Facet::Left => "Left",
            Facet::Right => "Right",
        }
    }

    pub fn from_name(name: &str) -> Option<Facet> {
        FACETS.iter().copied().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetAttr {
    pub facet: Facet,
    pub line: AxisLine,
    pub deformed: Deformation,
    pub curved: bool,
}

/// A geon class: base solid plus the attribute grid coordinates, with the
/// six derived facet records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeonClass {
    pub id: ClassId,
    pub base: GeonBase,
    pub axis: AxisLine,
    pub deformed: Deformation,
    pub curved_sides: bool,
    #[serde(skip, default)]
    facets: Vec<FacetAttr>,
}

impl GeonClass {
    pub fn new(
        id: ClassId,
        base: GeonBase,
        axis: AxisLine,
        deformed: Deformation,
        curved_sides: bool,
    ) -> Self {
        let facets = FACETS
            .iter()
            .map(|&facet| {
                let side = !matches!(facet, Facet::Top | Facet::Bottom);
                FacetAttr {
                    facet,
                    line: if side { axis } else { AxisLine::Short },
                    deformed: if side { deformed } else { Deformation::No },
                    curved: side && curved_sides,
                }
            })
            .collect();
        GeonClass {
            id,
            base,
            axis,
            deformed,
            curved_sides,
            facets,
        }
    }

    /// Exactly six facet records, in canonical facet order.
    pub fn facets(&self) -> &[FacetAttr] {
        &self.facets
    }
}

/// A validated class catalog.
#[derive(Debug, Clone)]
pub struct Catalog {
    classes: Vec<GeonClass>,
    by_id: BTreeMap<ClassId, usize>,
}

impl Catalog {
    pub fn new(classes: Vec<GeonClass>) -> Result<Self> {
        if classes.is_empty() {
            return Err(GeonError::CatalogInvalid("catalog is empty".into()));
        }
        if classes.len() > MAX_CATALOG_CLASSES {
            return Err(GeonError::CatalogInvalid(format!(
                "{} classes exceed the bound of {MAX_CATALOG_CLASSES}",
                classes.len()
            )));
        }
        let mut by_id = BTreeMap::new();
        for (i, c) in classes.iter().enumerate() {
            if by_id.insert(c.id, i).is_some() {
                return Err(GeonError::CatalogInvalid(format!(
                    "duplicate class id {}",
                    c.id
                )));
            }
            if c.facets.len() != 6 {
                return Err(GeonError::CatalogInvalid(format!(
                    "class {} lacks the six facet records",
                    c.id
                )));
            }
        }
        Ok(Catalog { classes, by_id })
    }

    pub fn classes(&self) -> &[GeonClass] {
        &self.classes
    }

    pub fn class(&self, id: ClassId) -> Result<&GeonClass> {
        self.by_id
            .get(&id)
            .map(|&i| &self.classes[i])
            .ok_or(GeonError::UnknownClass(id))
    }

    pub fn contains(&self, id: ClassId) -> bool {
        self.by_id.contains_key(&id)
    }

    /// Parses a catalog override file: a JSON list of
    /// `{id, base, axis, deformed, curved_sides}` records; facet records are
    /// derived the same way as for the default catalog.
    pub fn from_json(json: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            id: ClassId,
            base: GeonBase,
            axis: AxisLine,
            deformed: Deformation,
            curved_sides: bool,
        }
        let rows: Vec<Row> = serde_json::from_str(json)
            .map_err(|e| GeonError::CatalogInvalid(e.to_string()))?;
        Catalog::new(
            rows.into_iter()
                .map(|r| GeonClass::new(r.id, r.base, r.axis, r.deformed, r.curved_sides))
                .collect(),
        )
    }
}

/// The default 16-class catalog: {brick, cylinder} x {long, short axis}
/// x {no, bloat} x {straight, curved side facets}, ids 1..=16 in that
/// nesting order (bricks first).
pub fn default_catalog() -> Catalog {
    let mut classes = Vec::with_capacity(16);
    let mut id: ClassId = 1;
    for base in [GeonBase::Brick, GeonBase::Cylinder] {
        for axis in [AxisLine::Long, AxisLine::Short] {
            for deformed in [Deformation::No, Deformation::Bloat] {
                for curved in [false, true] {
                    classes.push(GeonClass::new(id, base, axis, deformed, curved));
                    id += 1;
                }
            }
        }
    }
    Catalog::new(classes).expect("default catalog is valid")
}

/// A geon placed in a scene. Scale factors stretch the unit solid (unit
/// cube, or unit-diameter unit-height cylinder); `noise` only diversifies
/// appearance and never affects geometry here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeonInstance {
    pub instance_id: u32,
    pub class: ClassId,
    pub position: [f64; 3],
    pub scale: [f64; 3],
    pub noise: f64,
    pub parent_object: u32,
}

pub const SCALE_MIN: f64 = 0.5;
pub const SCALE_MAX: f64 = 2.0;

impl GeonInstance {
    pub fn validate(&self) -> Result<()> {
        for (axis, &s) in self.scale.iter().enumerate() {
            if !(SCALE_MIN..=SCALE_MAX).contains(&s) {
                return Err(GeonError::InvalidInstance(format!(
                    "instance {}: scale[{axis}] = {s} outside [{SCALE_MIN}, {SCALE_MAX}]",
                    self.instance_id
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(GeonError::InvalidInstance(format!(
                "instance {}: noise = {} outside [0, 1]",
                self.instance_id, self.noise
            )));
        }
        Ok(())
    }

    pub fn descriptor(&self) -> GeonDescriptor {
        GeonDescriptor {
            object: self.parent_object,
            instance: self.instance_id,
            class: self.class,
        }
    }
}

/// Identity of an observed geon instance, as stored in reward universes and
/// the schema store.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct GeonDescriptor {
    pub object: u32,
    pub instance: u32,
    pub class: ClassId,
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn center(&self) -> [f64; 3] {
        [
            (self.min[0] + self.max[0]) / 2.0,
            (self.min[1] + self.max[1]) / 2.0,
            (self.min[2] + self.max[2]) / 2.0,
        ]
    }

    pub fn half_extents(&self) -> [f64; 3] {
        [
            (self.max[0] - self.min[0]) / 2.0,
            (self.max[1] - self.min[1]) / 2.0,
            (self.max[2] - self.min[2]) / 2.0,
        ]
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: [
                self.min[0].min(other.min[0]),
                self.min[1].min(other.min[1]),
                self.min[2].min(other.min[2]),
            ],
            max: [
                self.max[0].max(other.max[0]),
                self.max[1].max(other.max[1]),
                self.max[2].max(other.max[2]),
            ],
        }
    }

    /// Largest per-axis gap; negative when the boxes overlap on every axis.
    pub fn gap(&self, other: &Aabb) -> f64 {
        (0..3)
            .map(|k| {
                (other.min[k] - self.max[k]).max(self.min[k] - other.max[k])
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Penetration depth: the smallest per-axis overlap when the boxes
    /// overlap on all three axes, zero otherwise.
    pub fn penetration(&self, other: &Aabb) -> f64 {
        let mut depth = f64::INFINITY;
        for k in 0..3 {
            let overlap = self.max[k].min(other.max[k]) - self.min[k].max(other.min[k]);
            if overlap <= 0.0 {
                return 0.0;
            }
            depth = depth.min(overlap);
        }
        depth
    }

    pub fn contains_point(&self, p: [f64; 3]) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }
}

/// Box centered at the instance position with half-extents equal to half
/// the scale on each axis. Surface noise does not affect the box.
pub fn bounding_box(g: &GeonInstance) -> Aabb {
    Aabb {
        min: [
            g.position[0] - g.scale[0] / 2.0,
            g.position[1] - g.scale[1] / 2.0,
            g.position[2] - g.scale[2] / 2.0,
        ],
        max: [
            g.position[0] + g.scale[0] / 2.0,
            g.position[1] + g.scale[1] / 2.0,
            g.position[2] + g.scale[2] / 2.0,
        ],
    }
}

/// Non-empty set of facets at which a pair of geons meets.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct ZoneSet(pub BTreeSet<Facet>);

impl ZoneSet {
    pub fn contains(&self, f: Facet) -> bool {
        self.0.contains(&f)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Top+Left` style rendering in canonical facet order.
    pub fn encode(&self) -> String {
        self.0
            .iter()
            .map(|f| f.name())
            .collect::<Vec<_>>()
            .join("+")
    }

    pub fn decode(s: &str) -> Result<ZoneSet> {
        let mut set = BTreeSet::new();
        for part in s.split('+') {
            let f = Facet::from_name(part)
                .ok_or_else(|| GeonError::CanonicalParse(format!("bad facet `{part}`")))?;
            set.insert(f);
        }
        Ok(ZoneSet(set))
    }
}

/// Pairwise contact structure of one object's geons. Entry (i, j) holds the
/// facets of geon j at the contact with geon i; the diagonal is always
/// empty, and (i, j) is present exactly when (j, i) is.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IncidenceMatrix {
    n: u32,
    entries: BTreeMap<(u32, u32), ZoneSet>,
}

impl IncidenceMatrix {
    pub fn size(&self) -> usize {
        self.n as usize
    }

    /// Facets of geon `j` at the contact of the pair (i, j); `None` when the
    /// pair is disjoint.
    pub fn zones(&self, i: u32, j: u32) -> Option<&ZoneSet> {
        self.entries.get(&(i, j))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(u32, u32), &ZoneSet)> {
        self.entries.iter()
    }

    /// Unordered intersecting pairs (i < j).
    pub fn contact_pairs(&self) -> Vec<(u32, u32)> {
        self.entries
            .keys()
            .filter(|(i, j)| i < j)
            .copied()
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n as usize;
        if n <= 1 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for (&(i, j), _) in &self.entries {
                if i as usize == v && !seen[j as usize] {
                    seen[j as usize] = true;
                    stack.push(j as usize);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub(crate) fn from_parts(n: u32, entries: BTreeMap<(u32, u32), ZoneSet>) -> Self {
        IncidenceMatrix { n, entries }
    }
}

/// Facets of `of`'s box whose plane lies nearest the contact point, with
/// ties within `eps` admitting multiple zones.
fn contact_zones(of: &Aabb, contact: [f64; 3], eps: f64) -> ZoneSet {
    let dist = |f: Facet| -> f64 {
        match f {
            Facet::Top => (contact[2] - of.max[2]).abs(),
            Facet::Bottom => (contact[2] - of.min[2]).abs(),
            Facet::Front => (contact[1] - of.min[1]).abs(),
            Facet::Back => (contact[1] - of.max[1]).abs(),
            Facet::Left => (contact[0] - of.min[0]).abs(),
            Facet::Right => (contact[0] - of.max[0]).abs(),
        }
    };
    let d_min = FACETS
        .iter()
        .map(|&f| dist(f))
        .fold(f64::INFINITY, f64::min);
    ZoneSet(
        FACETS
            .iter()
            .copied()
            .filter(|&f| dist(f) <= d_min + eps)
            .collect(),
    )
}

/// Builds the incidence matrix of a geon list (normally one object's geons,
/// indices being positions in the list). A pair is marked intersecting when
/// their boxes overlap or come within `overlap_epsilon` of touching.
pub fn incidence_matrix(geons: &[GeonInstance], overlap_epsilon: f64) -> IncidenceMatrix {
    let boxes: Vec<Aabb> = geons.iter().map(bounding_box).collect();
    let mut entries = BTreeMap::new();
    for i in 0..geons.len() {
        for j in (i + 1)..geons.len() {
            if boxes[i].gap(&boxes[j]) > overlap_epsilon {
                continue;
            }
            let contact = [
                (boxes[i].min[0].max(boxes[j].min[0]) + boxes[i].max[0].min(boxes[j].max[0])) / 2.0,
                (boxes[i].min[1].max(boxes[j].min[1]) + boxes[i].max[1].min(boxes[j].max[1])) / 2.0,
                (boxes[i].min[2].max(boxes[j].min[2]) + boxes[i].max[2].min(boxes[j].max[2])) / 2.0,
            ];
            entries.insert(
                (i as u32, j as u32),
                contact_zones(&boxes[j], contact, overlap_epsilon),
            );
            entries.insert(
                (j as u32, i as u32),
                contact_zones(&boxes[i], contact, overlap_epsilon),
            );
        }
    }
    IncidenceMatrix::from_parts(geons.len() as u32, entries)
}
