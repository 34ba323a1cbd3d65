//! Seeded procedural scenes: random object placement with potential-field
//! de-penetration, and parametric composites (tree, wall, stairs) assembled
//! from catalog geons. All generation is a pure function of (seed, params).

use std::collections::BTreeMap;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geons::{bounding_box, Aabb, GeonInstance, SCALE_MAX, SCALE_MIN};

/// Trunk geon: cylinder, long axis, undeformed, curved side facets.
pub const TRUNK_CLASS: u16 = 10;
/// Branch geon, the four-sided-pyramid stand-in: brick, long axis, bloat.
pub const BRANCH_CLASS: u16 = 3;
/// Wall and stair bricks: plain long brick.
pub const BRICK_CLASS: u16 = 1;

/// Cap on geons per composite object.
pub const MAX_OBJECT_GEONS: usize = 200;

/// Contact tolerance used when deriving incidence matrices of composites.
pub const OVERLAP_EPSILON: f64 = 0.05;

#[derive(Debug, Error)]
pub enum WorldgenError {
    #[error("placement failed: {0}")]
    PlacementFailure(String),
    #[error("composite exceeds {MAX_OBJECT_GEONS} geons ({0})")]
    TooManyGeons(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("scene parse error: {0}")]
    ParseError(String),
    #[error("scene invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, WorldgenError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    Tree,
    Wall,
    Stairs,
}

impl ObjectClass {
    pub fn name(self) -> &'static str {
        match self {
            ObjectClass::Tree => "tree",
            ObjectClass::Wall => "wall",
            ObjectClass::Stairs => "stairs",
        }
    }
}

/// Quarter-turn about the vertical axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "0")]
    Deg0,
    #[serde(rename = "90")]
    Deg90,
    #[serde(rename = "180")]
    Deg180,
    #[serde(rename = "270")]
    Deg270,
}

impl Orientation {
    fn rotate_xy(self, x: f64, y: f64) -> (f64, f64) {
        match self {
            Orientation::Deg0 => (x, y),
            Orientation::Deg90 => (-y, x),
            Orientation::Deg180 => (-x, -y),
            Orientation::Deg270 => (y, -x),
        }
    }

    fn swap_xy_scale(self) -> bool {
        matches!(self, Orientation::Deg90 | Orientation::Deg270)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub object_id: u32,
    pub class_label: ObjectClass,
    pub position: [f64; 3],
    pub orientation: Orientation,
    pub params: BTreeMap<String, f64>,
    pub salience: f64,
    pub expansion_seed: u64,
    #[serde(default)]
    pub geons: Vec<GeonInstance>,
}

impl ObjectSpec {
    /// Aggregate bounding box over the expanded geons.
    pub fn aggregate_box(&self) -> Option<Aabb> {
        let mut boxes = self.geons.iter().map(bounding_box);
        let first = boxes.next()?;
        Some(boxes.fold(first, |acc, b| acc.union(&b)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub seed: u64,
    pub bounds: Aabb,
    pub objects: Vec<ObjectSpec>,
}

impl Scene {
    pub fn geons(&self) -> impl Iterator<Item = &GeonInstance> {
        self.objects.iter().flat_map(|o| o.geons.iter())
    }

    pub fn object(&self, id: u32) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.object_id == id)
    }
}

/// Non-negative weights over the three object classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMix {
    pub tree: f64,
    pub wall: f64,
    pub stairs: f64,
}

impl Default for ClassMix {
    fn default() -> Self {
        ClassMix {
            tree: 1.0,
            wall: 1.0,
            stairs: 1.0,
        }
    }
}

impl ClassMix {
    fn total(&self) -> f64 {
        self.tree + self.wall + self.stairs
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> ObjectClass {
        let t = rng.gen::<f64>() * self.total();
        if t < self.tree {
            ObjectClass::Tree
        } else if t < self.tree + self.wall {
            ObjectClass::Wall
        } else {
            ObjectClass::Stairs
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub bounds: Aabb,
    pub eta: f64,
    pub d_max: f64,
    pub max_iters: usize,
    pub base_clearance: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            bounds: Aabb {
                min: [-20.0, -20.0, 0.0],
                max: [20.0, 20.0, 10.0],
            },
            // The repulsion gain is scene-scale: strong enough to separate
            // multi-meter footprints within the iteration budget.
            eta: 4.0,
            d_max: 1.0,
            max_iters: 100,
            base_clearance: 0.1,
        }
    }
}

fn derive_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 step over the salted seed.
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Iterated potential-field update: each point is displaced by
/// `min(d_max, Σ η/|p_j − p_i|²)` along its net repulsion direction
/// `Σ (p_i − p_j)/|p_j − p_i|³`, until no pair is closer than `clearance`.
/// Coincident pairs separate along a seeded random unit direction by
/// `d_max` each.
pub fn depenetrate(
    positions: &[[f64; 3]],
    eta: f64,
    d_max: f64,
    max_iters: usize,
    clearance: f64,
    seed: u64,
) -> Result<Vec<[f64; 3]>> {
    depenetrate_inner(
        positions,
        eta,
        d_max,
        max_iters,
        Criterion::PointClearance(clearance),
        seed,
        None,
    )
}

/// Convergence criterion for the iteration: plain point clearance for the
/// public operation, aggregate-box penetration for scene generation.
enum Criterion<'a> {
    PointClearance(f64),
    BoxPenetration {
        local_boxes: &'a [Aabb],
        max_penetration: f64,
    },
}

impl Criterion<'_> {
    fn resolved(&self, pts: &[[f64; 3]]) -> bool {
        let n = pts.len();
        for i in 0..n {
            for j in (i + 1)..n {
                match self {
                    Criterion::PointClearance(clearance) => {
                        if dist(&pts[i], &pts[j]) < *clearance {
                            return false;
                        }
                    }
                    Criterion::BoxPenetration {
                        local_boxes,
                        max_penetration,
                    } => {
                        let at = |b: &Aabb, p: &[f64; 3]| Aabb {
                            min: [b.min[0] + p[0], b.min[1] + p[1], b.min[2] + p[2]],
                            max: [b.max[0] + p[0], b.max[1] + p[1], b.max[2] + p[2]],
                        };
                        let bi = at(&local_boxes[i], &pts[i]);
                        let bj = at(&local_boxes[j], &pts[j]);
                        if bi.penetration(&bj) > *max_penetration {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

#[allow(clippy::too_many_arguments)]
fn depenetrate_inner(
    positions: &[[f64; 3]],
    eta: f64,
    d_max: f64,
    max_iters: usize,
    criterion: Criterion<'_>,
    seed: u64,
    clamp: Option<&[(f64, f64, f64, f64)]>, // per point (x_lo, x_hi, y_lo, y_hi)
) -> Result<Vec<[f64; 3]>> {
    if eta <= 0.0 || d_max <= 0.0 {
        return Err(WorldgenError::InvalidParams(
            "eta and d_max must be positive".into(),
        ));
    }
    let n = positions.len();
    let mut pts: Vec<[f64; 3]> = positions.to_vec();
    let resolved = |pts: &[[f64; 3]]| criterion.resolved(pts);
    for iter in 0..=max_iters {
        if resolved(&pts) {
            return Ok(pts);
        }
        if iter == max_iters {
            break;
        }
        let mut next = pts.clone();
        for i in 0..n {
            let mut dir = [0.0f64; 3];
            let mut mag = 0.0f64;
            let mut coincident: Option<usize> = None;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = [
                    pts[i][0] - pts[j][0],
                    pts[i][1] - pts[j][1],
                    pts[i][2] - pts[j][2],
                ];
                let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                if r < 1e-9 {
                    coincident.get_or_insert(j);
                    continue;
                }
                let r3 = r * r * r;
                dir[0] += d[0] / r3;
                dir[1] += d[1] / r3;
                dir[2] += d[2] / r3;
                mag += eta / (r * r);
            }
            let disp = if let Some(j) = coincident {
                // Undefined repulsion at zero distance: separate the pair
                // along a seeded unit direction, opposite signs per side.
                let (lo, hi) = (i.min(j) as u64, i.max(j) as u64);
                let mut dr = ChaCha8Rng::seed_from_u64(derive_seed(
                    seed,
                    ((iter as u64) << 32) | (lo << 16) | hi,
                ));
                let angle = dr.gen::<f64>() * std::f64::consts::TAU;
                let sign = if i < j { 1.0 } else { -1.0 };
                [sign * d_max * angle.cos(), sign * d_max * angle.sin(), 0.0]
            } else {
                let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
                if norm < 1e-12 || mag == 0.0 {
                    [0.0; 3]
                } else {
                    let step = mag.min(d_max);
                    [
                        step * dir[0] / norm,
                        step * dir[1] / norm,
                        step * dir[2] / norm,
                    ]
                }
            };
            next[i][0] += disp[0];
            next[i][1] += disp[1];
            next[i][2] += disp[2];
            if let Some(boxes) = clamp {
                let (xl, xh, yl, yh) = boxes[i];
                next[i][0] = next[i][0].clamp(xl, xh);
                next[i][1] = next[i][1].clamp(yl, yh);
            }
        }
        pts = next;
    }
    Err(WorldgenError::PlacementFailure(format!(
        "{max_iters} iterations did not resolve all overlaps"
    )))
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn clamp_scale(s: f64) -> f64 {
    s.clamp(SCALE_MIN, SCALE_MAX)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    Up,
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl Dir {
    fn vec(self) -> [f64; 3] {
        match self {
            Dir::Up => [0.0, 0.0, 1.0],
            Dir::PlusX => [1.0, 0.0, 0.0],
            Dir::MinusX => [-1.0, 0.0, 0.0],
            Dir::PlusY => [0.0, 1.0, 0.0],
            Dir::MinusY => [0.0, -1.0, 0.0],
        }
    }
}

fn rot_left(d: Dir) -> Dir {
    match d {
        Dir::PlusX => Dir::PlusY,
        Dir::PlusY => Dir::MinusX,
        Dir::MinusX => Dir::MinusY,
        Dir::MinusY => Dir::PlusX,
        Dir::Up => Dir::Up,
    }
}

fn rot_right(d: Dir) -> Dir {
    rot_left(rot_left(rot_left(d)))
}

#[derive(Debug, Clone)]
struct Limb {
    center: [f64; 3],
    scale: [f64; 3],
    dir: Dir,
}

impl Limb {
    fn axis_len(&self) -> f64 {
        match self.dir {
            Dir::Up => self.scale[2],
            Dir::PlusX | Dir::MinusX => self.scale[0],
            Dir::PlusY | Dir::MinusY => self.scale[1],
        }
    }

    fn base(&self) -> [f64; 3] {
        let v = self.dir.vec();
        let h = self.axis_len() / 2.0;
        [
            self.center[0] - v[0] * h,
            self.center[1] - v[1] * h,
            self.center[2] - v[2] * h,
        ]
    }

    fn tip(&self) -> [f64; 3] {
        let v = self.dir.vec();
        let h = self.axis_len() / 2.0;
        [
            self.center[0] + v[0] * h,
            self.center[1] + v[1] * h,
            self.center[2] + v[2] * h,
        ]
    }

    /// Half extent of this limb's box along a direction.
    fn half_along(&self, d: Dir) -> f64 {
        match d {
            Dir::Up => self.scale[2] / 2.0,
            Dir::PlusX | Dir::MinusX => self.scale[0] / 2.0,
            Dir::PlusY | Dir::MinusY => self.scale[1] / 2.0,
        }
    }
}

/// A recursively branched tree in the object-local frame (trunk base at the
/// origin): one cylinder trunk of height `h` and radius `k·h`, then `n_b`
/// branches per parent for `n_l` levels. Branch placement is seeded within
/// the limits allowed by the parent; branch length is proportional to the
/// distance from the attachment point to the parent tip. The geon count is
/// exactly the sum of n_b^d for d in 0..=n_l.
pub fn gen_tree(h: f64, k: f64, n_b: u32, n_l: u32, seed: u64) -> Result<Vec<GeonInstance>> {
    if h <= 0.0 || k <= 0.0 {
        return Err(WorldgenError::InvalidParams(
            "tree height and thickness must be positive".into(),
        ));
    }
    if n_b < 1 {
        return Err(WorldgenError::InvalidParams(
            "branch count must be at least 1".into(),
        ));
    }
    let total: usize = (0..=n_l).map(|d| (n_b as usize).pow(d)).sum();
    if total > MAX_OBJECT_GEONS {
        return Err(WorldgenError::TooManyGeons(total));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trunk_h = clamp_scale(h);
    let trunk_d = clamp_scale(2.0 * k * h);
    let trunk = Limb {
        center: [0.0, 0.0, trunk_h / 2.0],
        scale: [trunk_d, trunk_d, trunk_h],
        dir: Dir::Up,
    };
    let mut limbs: Vec<(Limb, u16)> = vec![(trunk.clone(), TRUNK_CLASS)];
    let mut parents = vec![trunk];
    for _level in 0..n_l {
        let mut next_parents = Vec::new();
        for parent in &parents {
            let dirs: Vec<Dir> = match parent.dir {
                Dir::Up => vec![Dir::PlusX, Dir::PlusY, Dir::MinusX, Dir::MinusY],
                d => vec![Dir::Up, rot_left(d), rot_right(d)],
            };
            let spin = rng.gen_range(0..dirs.len());
            for b in 0..n_b {
                let dir = dirs[(spin + b as usize) % dirs.len()];
                // Attachment fraction along the parent axis, spread so that
                // siblings sharing a direction never coincide.
                let f = 0.25 + 0.55 * (b as f64 + rng.gen::<f64>() * 0.5) / n_b as f64;
                let base = parent.base();
                let axis = parent.dir.vec();
                let attach = [
                    base[0] + axis[0] * f * parent.axis_len(),
                    base[1] + axis[1] * f * parent.axis_len(),
                    base[2] + axis[2] * f * parent.axis_len(),
                ];
                let to_tip = dist(&attach, &parent.tip());
                let len = clamp_scale(0.75 * to_tip);
                let thick = clamp_scale(0.4 * len);
                let scale = match dir {
                    Dir::Up => [thick, thick, len],
                    Dir::PlusX | Dir::MinusX => [len, thick, thick],
                    Dir::PlusY | Dir::MinusY => [thick, len, thick],
                };
                let v = dir.vec();
                let offset = parent.half_along(dir) + len / 2.0;
                let center = [
                    attach[0] + v[0] * offset,
                    attach[1] + v[1] * offset,
                    attach[2] + v[2] * offset,
                ];
                let limb = Limb { center, scale, dir };
                limbs.push((limb.clone(), BRANCH_CLASS));
                next_parents.push(limb);
            }
        }
        parents = next_parents;
    }
    Ok(limbs
        .into_iter()
        .enumerate()
        .map(|(i, (limb, class))| GeonInstance {
            instance_id: i as u32,
            class,
            position: limb.center,
            scale: limb.scale,
            noise: 0.0,
            parent_object: 0,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParametricKind {
    Wall,
    Stairs,
}

fn param(params: &BTreeMap<String, f64>, name: &str, lo: f64, hi: f64) -> Result<f64> {
    let v = *params
        .get(name)
        .ok_or_else(|| WorldgenError::InvalidParams(format!("missing parameter `{name}`")))?;
    if !(lo..=hi).contains(&v) {
        return Err(WorldgenError::InvalidParams(format!(
            "parameter `{name}` = {v} outside [{lo}, {hi}]"
        )));
    }
    Ok(v)
}

/// Walls and stairs in the object-local frame. A wall is a single stretched
/// brick; dimensions past the scale cap are realized by tiling bricks. A
/// staircase is `n_steps` bricks each offset by (run, rise) from the
/// previous, consecutive steps touching.
pub fn gen_parametric(
    kind: ParametricKind,
    params: &BTreeMap<String, f64>,
    _seed: u64,
) -> Result<Vec<GeonInstance>> {
    let mut out: Vec<GeonInstance> = Vec::new();
    let push = |out: &mut Vec<GeonInstance>, center: [f64; 3], scale: [f64; 3]| {
        let id = out.len() as u32;
        out.push(GeonInstance {
            instance_id: id,
            class: BRICK_CLASS,
            position: center,
            scale,
            noise: 0.0,
            parent_object: 0,
        });
    };
    match kind {
        ParametricKind::Wall => {
            let length = param(params, "length", 0.5, 10.0)?;
            let height = param(params, "height", 0.5, 6.0)?;
            let thickness = param(params, "thickness", 0.5, 2.0)?;
            let n_len = (length / SCALE_MAX).ceil().max(1.0) as usize;
            let n_h = (height / SCALE_MAX).ceil().max(1.0) as usize;
            let seg_len = length / n_len as f64;
            let seg_h = height / n_h as f64;
            for row in 0..n_h {
                for col in 0..n_len {
                    push(
                        &mut out,
                        [
                            -length / 2.0 + seg_len * (col as f64 + 0.5),
                            0.0,
                            seg_h * (row as f64 + 0.5),
                        ],
                        [seg_len, thickness, seg_h],
                    );
                }
            }
        }
        ParametricKind::Stairs => {
            let n_steps = param(params, "n_steps", 1.0, 12.0)?;
            if n_steps.fract() != 0.0 {
                return Err(WorldgenError::InvalidParams(
                    "n_steps must be an integer".into(),
                ));
            }
            let rise = param(params, "rise", 0.5, 2.0)?;
            let run = param(params, "run", 0.5, 2.0)?;
            let width = param(params, "width", 0.5, 2.0)?;
            for i in 0..n_steps as usize {
                push(
                    &mut out,
                    [run * (i as f64 + 0.5), 0.0, rise * (i as f64 + 0.5)],
                    [run, width, rise],
                );
            }
        }
    }
    if out.len() > MAX_OBJECT_GEONS {
        return Err(WorldgenError::TooManyGeons(out.len()));
    }
    Ok(out)
}

/// Declared parameter ranges per class, enforced on load as well.
fn validate_params(class: ObjectClass, params: &BTreeMap<String, f64>) -> Result<()> {
    match class {
        ObjectClass::Tree => {
            param(params, "h", 0.5, 2.0)?;
            param(params, "k", 0.15, 0.5)?;
            param(params, "n_b", 1.0, 4.0)?;
            param(params, "n_l", 0.0, 4.0)?;
        }
        ObjectClass::Wall => {
            param(params, "length", 0.5, 10.0)?;
            param(params, "height", 0.5, 6.0)?;
            param(params, "thickness", 0.5, 2.0)?;
        }
        ObjectClass::Stairs => {
            param(params, "n_steps", 1.0, 12.0)?;
            param(params, "rise", 0.5, 2.0)?;
            param(params, "run", 0.5, 2.0)?;
            param(params, "width", 0.5, 2.0)?;
        }
    }
    Ok(())
}

/// Expands an object's geons in the local frame per (class_label, params,
/// expansion_seed), then applies the quarter-turn and translates to the
/// object position. Instance ids are local (0..); the scene generator
/// reassigns scene-global ids.
pub fn expand_object(spec: &ObjectSpec) -> Result<Vec<GeonInstance>> {
    validate_params(spec.class_label, &spec.params)?;
    let local = match spec.class_label {
        ObjectClass::Tree => gen_tree(
            spec.params["h"],
            spec.params["k"],
            spec.params["n_b"] as u32,
            spec.params["n_l"] as u32,
            spec.expansion_seed,
        )?,
        ObjectClass::Wall => {
            gen_parametric(ParametricKind::Wall, &spec.params, spec.expansion_seed)?
        }
        ObjectClass::Stairs => {
            gen_parametric(ParametricKind::Stairs, &spec.params, spec.expansion_seed)?
        }
    };
    Ok(local
        .into_iter()
        .map(|mut g| {
            let (x, y) = spec.orientation.rotate_xy(g.position[0], g.position[1]);
            g.position = [
                x + spec.position[0],
                y + spec.position[1],
                g.position[2] + spec.position[2],
            ];
            if spec.orientation.swap_xy_scale() {
                g.scale = [g.scale[1], g.scale[0], g.scale[2]];
            }
            g.parent_object = spec.object_id;
            g
        })
        .collect())
}

fn draw_params(class: ObjectClass, rng: &mut ChaCha8Rng) -> BTreeMap<String, f64> {
    let mut p = BTreeMap::new();
    // Values rounded to limit float noise in scene files.
    let put = |p: &mut BTreeMap<String, f64>, k: &str, v: f64| {
        p.insert(k.to_string(), (v * 100.0).round() / 100.0);
    };
    match class {
        ObjectClass::Tree => {
            put(&mut p, "h", rng.gen_range(1.0..2.0));
            put(&mut p, "k", rng.gen_range(0.15..0.4));
            put(&mut p, "n_b", rng.gen_range(1..=3) as f64);
            put(&mut p, "n_l", rng.gen_range(0..=2) as f64);
        }
        ObjectClass::Wall => {
            put(&mut p, "length", rng.gen_range(1.0..5.0));
            put(&mut p, "height", rng.gen_range(0.5..2.5));
            put(&mut p, "thickness", rng.gen_range(0.5..1.0));
        }
        ObjectClass::Stairs => {
            put(&mut p, "n_steps", rng.gen_range(2..=5) as f64);
            put(&mut p, "rise", rng.gen_range(0.5..1.0));
            put(&mut p, "run", rng.gen_range(0.5..1.0));
            put(&mut p, "width", rng.gen_range(1.0..2.0));
        }
    }
    p
}

/// Generates a scene: classes drawn by weight, positions uniform in bounds,
/// de-penetration applied, then expansion to geons with scene-global
/// instance ids.
pub fn generate_scene(seed: u64, n_objects: usize, mix: &ClassMix) -> Result<Scene> {
    generate_scene_with(seed, n_objects, mix, &GenConfig::default())
}

pub fn generate_scene_with(
    seed: u64,
    n_objects: usize,
    mix: &ClassMix,
    config: &GenConfig,
) -> Result<Scene> {
    if n_objects < 1 {
        return Err(WorldgenError::InvalidParams(
            "a scene needs at least one object".into(),
        ));
    }
    if mix.tree < 0.0 || mix.wall < 0.0 || mix.stairs < 0.0 || mix.total() <= 0.0 {
        return Err(WorldgenError::InvalidParams(
            "class weights must be non-negative and not all zero".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs: Vec<ObjectSpec> = Vec::with_capacity(n_objects);
    for i in 0..n_objects {
        let class_label = mix.pick(&mut rng);
        let params = draw_params(class_label, &mut rng);
        let orientation = match rng.gen_range(0..4) {
            0 => Orientation::Deg0,
            1 => Orientation::Deg90,
            2 => Orientation::Deg180,
            _ => Orientation::Deg270,
        };
        let salience = (rng.gen::<f64>() * 100.0).round() / 100.0;
        let expansion_seed = rng.gen::<u64>();
        specs.push(ObjectSpec {
            object_id: i as u32,
            class_label,
            position: [0.0, 0.0, config.bounds.min[2]],
            orientation,
            params,
            salience,
            expansion_seed,
            geons: Vec::new(),
        });
    }
    // Local expansion first, to learn each object's footprint.
    let mut radii = Vec::with_capacity(n_objects);
    let mut local_boxes = Vec::with_capacity(n_objects);
    for spec in &specs {
        let origin_spec = ObjectSpec {
            position: [0.0, 0.0, 0.0],
            geons: Vec::new(),
            ..spec.clone()
        };
        let local = expand_object(&origin_spec)?;
        let agg = local
            .iter()
            .map(bounding_box)
            .reduce(|a, b| a.union(&b))
            .expect("composites have at least one geon");
        let r = agg.min[0]
            .abs()
            .max(agg.max[0].abs())
            .max(agg.min[1].abs())
            .max(agg.max[1].abs());
        radii.push(r);
        local_boxes.push(agg);
    }
    // Uniform draws inset by each object's footprint radius.
    let mut positions = Vec::with_capacity(n_objects);
    let mut clamps = Vec::with_capacity(n_objects);
    for (i, spec) in specs.iter_mut().enumerate() {
        let (xl, xh) = (
            config.bounds.min[0] + radii[i],
            config.bounds.max[0] - radii[i],
        );
        let (yl, yh) = (
            config.bounds.min[1] + radii[i],
            config.bounds.max[1] - radii[i],
        );
        if xl >= xh || yl >= yh {
            return Err(WorldgenError::PlacementFailure(format!(
                "object {i} footprint does not fit the bounds"
            )));
        }
        let pos = [
            rng.gen_range(xl..xh),
            rng.gen_range(yl..yh),
            config.bounds.min[2],
        ];
        spec.position = pos;
        positions.push(pos);
        clamps.push((xl, xh, yl, yh));
    }
    if n_objects > 1 {
        let placed = depenetrate_inner(
            &positions,
            config.eta,
            config.d_max,
            config.max_iters,
            Criterion::BoxPenetration {
                local_boxes: &local_boxes,
                max_penetration: config.base_clearance,
            },
            seed,
            Some(&clamps),
        )?;
        for (spec, pos) in specs.iter_mut().zip(&placed) {
            spec.position = *pos;
        }
    }
    // Final expansion with scene-global instance ids.
    let mut next_instance = 0u32;
    for spec in &mut specs {
        let mut geons = expand_object(spec)?;
        for g in &mut geons {
            g.instance_id = next_instance;
            next_instance += 1;
        }
        spec.geons = geons;
    }
    Ok(Scene {
        seed,
        bounds: config.bounds,
        objects: specs,
    })
}

/// Canonical one-line JSON rendering (sorted keys), stable across runs.
pub fn scene_to_string(scene: &Scene) -> Result<String> {
    let value =
        serde_json::to_value(scene).map_err(|e| WorldgenError::ParseError(e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| WorldgenError::ParseError(e.to_string()))
}

pub fn save_scene(scene: &Scene, path: &Path) -> Result<()> {
    std::fs::write(path, scene_to_string(scene)?)?;
    Ok(())
}

/// Loads and validates a scene. With `expand` set, embedded geons are
/// discarded and regenerated from (class_label, params, expansion_seed);
/// otherwise embedded geons are validated as-is (and filled in when absent).
pub fn load_scene(path: &Path, expand: bool) -> Result<Scene> {
    let text = std::fs::read_to_string(path)?;
    scene_from_str(&text, expand)
}

pub fn scene_from_str(text: &str, expand: bool) -> Result<Scene> {
    let mut scene: Scene =
        serde_json::from_str(text).map_err(|e| WorldgenError::ParseError(e.to_string()))?;
    if scene.objects.is_empty() {
        return Err(WorldgenError::InvariantViolation(
            "scene has no objects".into(),
        ));
    }
    for k in 0..3 {
        if scene.bounds.min[k] >= scene.bounds.max[k] {
            return Err(WorldgenError::InvariantViolation("empty bounds".into()));
        }
    }
    let mut seen_ids = std::collections::BTreeSet::new();
    let mut next_instance = 0u32;
    for spec in &mut scene.objects {
        if !seen_ids.insert(spec.object_id) {
            return Err(WorldgenError::InvariantViolation(format!(
                "duplicate object id {}",
                spec.object_id
            )));
        }
        if !scene.bounds.contains_point(spec.position) {
            return Err(WorldgenError::InvariantViolation(format!(
                "object {} position outside bounds",
                spec.object_id
            )));
        }
        if spec.salience < 0.0 {
            return Err(WorldgenError::InvariantViolation(format!(
                "object {} has negative salience",
                spec.object_id
            )));
        }
        validate_params(spec.class_label, &spec.params)?;
        if expand || spec.geons.is_empty() {
            let mut geons = expand_object(spec)?;
            for g in &mut geons {
                g.instance_id = next_instance;
                next_instance += 1;
            }
            spec.geons = geons;
        } else {
            for g in &spec.geons {
                g.validate()
                    .map_err(|e| WorldgenError::InvariantViolation(e.to_string()))?;
                if g.parent_object != spec.object_id {
                    return Err(WorldgenError::InvariantViolation(format!(
                        "geon {} does not belong to object {}",
                        g.instance_id, spec.object_id
                    )));
                }
                next_instance = next_instance.max(g.instance_id + 1);
            }
        }
    }
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geons::incidence_matrix;

    #[test]
    fn same_seed_scenes_are_byte_identical() {
        let a = generate_scene(42, 4, &ClassMix::default()).unwrap();
        let b = generate_scene(42, 4, &ClassMix::default()).unwrap();
        assert_eq!(scene_to_string(&a).unwrap(), scene_to_string(&b).unwrap());
        let c = generate_scene(43, 4, &ClassMix::default()).unwrap();
        assert_ne!(scene_to_string(&a).unwrap(), scene_to_string(&c).unwrap());
    }

    #[test]
    fn single_object_needs_no_depenetration() {
        let scene = generate_scene(7, 1, &ClassMix::default()).unwrap();
        assert_eq!(scene.objects.len(), 1);
        assert!(!scene.objects[0].geons.is_empty());
    }

    #[test]
    fn generated_scene_has_no_aggregate_overlaps() {
        for seed in [1u64, 2, 3] {
            let scene = generate_scene(seed, 5, &ClassMix::default()).unwrap();
            let boxes: Vec<Aabb> = scene
                .objects
                .iter()
                .map(|o| o.aggregate_box().unwrap())
                .collect();
            for i in 0..boxes.len() {
                for j in (i + 1)..boxes.len() {
                    assert!(
                        boxes[i].penetration(&boxes[j]) <= 0.1 + 1e-9,
                        "seed {seed}: objects {i} and {j} overlap"
                    );
                }
            }
        }
    }

    #[test]
    fn depenetrate_displacement_matches_update_formula() {
        // Two points 10 m apart with eta = 0.25 move apart by
        // min(d_max, 0.25/100) = 0.0025 each.
        let pts = vec![[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]];
        let one_step = depenetrate(&pts, 0.25, 1.0, 2, 10.004, 0).unwrap();
        assert!((one_step[0][0] - (-0.0025)).abs() < 1e-12);
        assert!((one_step[1][0] - 10.0025).abs() < 1e-12);
        // An unreachable clearance within the iteration budget fails loudly.
        assert!(matches!(
            depenetrate(&pts, 0.25, 1.0, 1, 11.0, 0).unwrap_err(),
            WorldgenError::PlacementFailure(_)
        ));
    }

    #[test]
    fn depenetrate_single_point_unchanged() {
        let pts = vec![[1.0, 2.0, 0.0]];
        let out = depenetrate(&pts, 0.25, 1.0, 5, 0.5, 0).unwrap();
        assert_eq!(out, pts);
    }

    #[test]
    fn coincident_pair_separates_by_d_max_each() {
        let pts = vec![[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let out = depenetrate(&pts, 0.25, 1.0, 50, 1.5, 9).unwrap();
        assert!(dist(&out[0], &out[1]) >= 1.5);
    }

    #[test]
    fn tree_geon_counts_match_formula() {
        assert_eq!(gen_tree(1.5, 0.2, 3, 0, 1).unwrap().len(), 1);
        assert_eq!(gen_tree(1.5, 0.2, 3, 1, 1).unwrap().len(), 4);
        assert_eq!(gen_tree(1.5, 0.2, 2, 2, 1).unwrap().len(), 7);
        for n_b in 1..=3u32 {
            for n_l in 0..=3u32 {
                let expect: usize = (0..=n_l).map(|d| (n_b as usize).pow(d)).sum();
                assert_eq!(gen_tree(1.5, 0.25, n_b, n_l, 5).unwrap().len(), expect);
            }
        }
        assert!(matches!(
            gen_tree(1.5, 0.2, 3, 5, 1).unwrap_err(),
            WorldgenError::TooManyGeons(_)
        ));
    }

    #[test]
    fn tree_incidence_graph_is_connected() {
        for seed in 0..5u64 {
            let geons = gen_tree(1.8, 0.25, 2, 2, seed).unwrap();
            let m = incidence_matrix(&geons, OVERLAP_EPSILON);
            assert!(m.is_connected(), "seed {seed} produced a detached branch");
            for g in &geons {
                g.validate().unwrap();
            }
        }
    }

    #[test]
    fn stairs_counts_and_contacts() {
        let mut params = BTreeMap::new();
        params.insert("n_steps".to_string(), 1.0);
        params.insert("rise".to_string(), 0.5);
        params.insert("run".to_string(), 0.6);
        params.insert("width".to_string(), 1.0);
        let one = gen_parametric(ParametricKind::Stairs, &params, 0).unwrap();
        assert_eq!(one.len(), 1);

        params.insert("n_steps".to_string(), 4.0);
        let four = gen_parametric(ParametricKind::Stairs, &params, 0).unwrap();
        assert_eq!(four.len(), 4);
        let m = incidence_matrix(&four, OVERLAP_EPSILON);
        // Exactly the three consecutive pairs touch.
        assert_eq!(m.contact_pairs(), vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn wall_tiles_when_out_of_scale_range() {
        let mut params = BTreeMap::new();
        params.insert("length".to_string(), 1.5);
        params.insert("height".to_string(), 1.0);
        params.insert("thickness".to_string(), 0.5);
        let single = gen_parametric(ParametricKind::Wall, &params, 0).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].scale, [1.5, 0.5, 1.0]);

        params.insert("length".to_string(), 5.0);
        params.insert("height".to_string(), 3.0);
        let tiled = gen_parametric(ParametricKind::Wall, &params, 0).unwrap();
        // ceil(5/2) columns times ceil(3/2) rows.
        assert_eq!(tiled.len(), 6);
        for g in &tiled {
            g.validate().unwrap();
        }
        let m = incidence_matrix(&tiled, OVERLAP_EPSILON);
        assert!(m.is_connected());
    }

    #[test]
    fn composites_always_connect() {
        for seed in 0..20u64 {
            let scene = generate_scene(seed, 3, &ClassMix::default()).unwrap();
            for o in &scene.objects {
                if o.geons.len() >= 2 {
                    let m = incidence_matrix(&o.geons, OVERLAP_EPSILON);
                    assert!(
                        m.is_connected(),
                        "seed {seed} object {} disconnected",
                        o.object_id
                    );
                }
            }
        }
    }

    #[test]
    fn scene_round_trips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.json");
        let scene = generate_scene(11, 3, &ClassMix::default()).unwrap();
        save_scene(&scene, &path).unwrap();
        let loaded = load_scene(&path, false).unwrap();
        assert_eq!(loaded, scene);
        // Regeneration from seed slices reproduces the embedded geons.
        let expanded = load_scene(&path, true).unwrap();
        assert_eq!(expanded, scene);
    }

    #[test]
    fn loader_rejects_out_of_bounds_positions() {
        let mut scene = generate_scene(11, 2, &ClassMix::default()).unwrap();
        scene.objects[0].position = [99.0, 0.0, 0.0];
        let text = scene_to_string(&scene).unwrap();
        assert!(matches!(
            scene_from_str(&text, false).unwrap_err(),
            WorldgenError::InvariantViolation(_)
        ));
    }

    #[test]
    fn minimal_hand_written_scene_loads_and_expands() {
        let text = r#"{
            "seed": 1,
            "bounds": {"min": [-10.0, -10.0, 0.0], "max": [10.0, 10.0, 10.0]},
            "objects": [{
                "object_id": 0,
                "class_label": "wall",
                "position": [0.0, 0.0, 0.0],
                "orientation": "0",
                "params": {"length": 1.0, "height": 1.0, "thickness": 0.5},
                "salience": 0.5,
                "expansion_seed": 7
            }]
        }"#;
        let scene = scene_from_str(text, true).unwrap();
        assert_eq!(scene.objects[0].geons.len(), 1);
        let again = scene_from_str(text, true).unwrap();
        assert_eq!(scene, again);
    }

    #[test]
    fn orientation_rotates_footprint() {
        let mut params = BTreeMap::new();
        params.insert("length".to_string(), 2.0);
        params.insert("height".to_string(), 1.0);
        params.insert("thickness".to_string(), 0.5);
        let spec = ObjectSpec {
            object_id: 3,
            class_label: ObjectClass::Wall,
            position: [1.0, 2.0, 0.0],
            orientation: Orientation::Deg90,
            params,
            salience: 0.0,
            expansion_seed: 0,
            geons: Vec::new(),
        };
        let geons = expand_object(&spec).unwrap();
        assert_eq!(geons[0].scale, [0.5, 2.0, 1.0]);
        assert_eq!(geons[0].parent_object, 3);
    }
}
