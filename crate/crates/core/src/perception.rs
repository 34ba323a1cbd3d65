//! The simulated sensor standing in for a trained recognizer: given the
//! agent pose it reports geon detections with distance-dependent class
//! uncertainty (as if in a fog), a sector field of view, a visibility
//! horizon, and plan-view occlusion.
//!
//! The sensor is a noiseless oracle: the candidate set always contains the
//! true class, and shrinks as the band improves from Far through Mid to
//! Near. All functions are pure in (scene, pose, fov, horizon).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geons::{bounding_box, Aabb, Catalog, ClassId, Facet, GeonInstance};
use crate::worldgen::Scene;

/// Camera height; geon tops below this are seen from above.
pub const EYE_HEIGHT: f64 = 1.6;

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("agent pose outside the scene bounds")]
    PoseOutOfBounds,
    #[error("invalid sensor parameter: {0}")]
    InvalidSensor(String),
    #[error(transparent)]
    Geon(#[from] crate::geons::GeonError),
}

pub type Result<T> = std::result::Result<T, PerceptionError>;

/// Eight compass headings, 45 degrees apart, counterclockwise from east.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Heading {
    E,
    NE,
    N,
    NW,
    W,
    SW,
    S,
    SE,
}

pub const HEADINGS: [Heading; 8] = [
    Heading::E,
    Heading::NE,
    Heading::N,
    Heading::NW,
    Heading::W,
    Heading::SW,
    Heading::S,
    Heading::SE,
];

impl Heading {
    pub fn octant(self) -> u8 {
        HEADINGS.iter().position(|&h| h == self).unwrap() as u8
    }

    pub fn from_octant(o: u8) -> Heading {
        HEADINGS[(o % 8) as usize]
    }

    pub fn azimuth_deg(self) -> f64 {
        wrap_deg(45.0 * self.octant() as f64)
    }

    pub fn unit(self) -> [f64; 2] {
        let a = (45.0 * self.octant() as f64).to_radians();
        [a.cos(), a.sin()]
    }

    pub fn turn_left(self) -> Heading {
        Heading::from_octant(self.octant() + 1)
    }

    pub fn turn_right(self) -> Heading {
        Heading::from_octant(self.octant() + 7)
    }

    /// The octant of a direction vector (nearest 45-degree sector).
    pub fn octant_of(dx: f64, dy: f64) -> u8 {
        let az = dy.atan2(dx).to_degrees();
        (((az / 45.0).round() as i32 + 8) % 8) as u8
    }
}

/// Ground-plane pose: position plus one of the eight compass headings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentPose {
    pub position: [f64; 2],
    pub heading: Heading,
}

impl AgentPose {
    /// Stable tag used to mark scheme viewpoints in stores and traces.
    pub fn tag(&self) -> String {
        format!(
            "{:.3},{:.3},{:?}",
            self.position[0], self.position[1], self.heading
        )
    }
}

/// Distance band of a detection; recognition sharpens as the band improves.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum Band {
    Near,
    Mid,
    Far,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub geon_instance_id: u32,
    pub parent_object_id: u32,
    pub candidate_classes: BTreeSet<ClassId>,
    pub distance: f64,
    pub visible_facets: BTreeSet<Facet>,
    pub band: Band,
}

fn wrap_deg(a: f64) -> f64 {
    let mut x = a % 360.0;
    if x <= -180.0 {
        x += 360.0;
    }
    if x > 180.0 {
        x -= 360.0;
    }
    x
}

fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_deg(a - b)
}

/// Azimuth interval as seen from a pose, in degrees, with `end >= start`.
/// A full circle is represented by a width of 360.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularInterval {
    pub start: f64,
    pub end: f64,
}

impl AngularInterval {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    pub fn full() -> Self {
        AngularInterval {
            start: -180.0,
            end: 180.0,
        }
    }
}

/// The azimuth interval subtended by a box's footprint corners; the full
/// circle when the pose lies inside the footprint.
fn box_interval(b: &Aabb, pose_xy: [f64; 2]) -> AngularInterval {
    let inside = pose_xy[0] >= b.min[0]
        && pose_xy[0] <= b.max[0]
        && pose_xy[1] >= b.min[1]
        && pose_xy[1] <= b.max[1];
    if inside {
        return AngularInterval::full();
    }
    let c = b.center();
    let center_az = (c[1] - pose_xy[1]).atan2(c[0] - pose_xy[0]).to_degrees();
    let corners = [
        (b.min[0], b.min[1]),
        (b.min[0], b.max[1]),
        (b.max[0], b.min[1]),
        (b.max[0], b.max[1]),
    ];
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for (x, y) in corners {
        let az = (y - pose_xy[1]).atan2(x - pose_xy[0]).to_degrees();
        let d = angle_diff(az, center_az);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    AngularInterval {
        start: center_az + lo,
        end: center_az + hi,
    }
}

/// True when the union of `covers` contains all of `target`.
fn fully_covered(target: &AngularInterval, covers: &[AngularInterval]) -> bool {
    const EPS: f64 = 1e-9;
    // Clip every cover (under the three wrap shifts) to the target, then
    // merge segments and test the union.
    let mut segments: Vec<(f64, f64)> = Vec::new();
    for c in covers {
        if c.width() >= 360.0 - EPS {
            return true;
        }
        for k in -1..=1 {
            let s = (c.start + 360.0 * k as f64).max(target.start);
            let e = (c.end + 360.0 * k as f64).min(target.end);
            if e >= s {
                segments.push((s, e));
            }
        }
    }
    segments.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut reach = target.start;
    for (s, e) in segments {
        if s > reach + EPS {
            return false;
        }
        reach = reach.max(e);
        if reach >= target.end - EPS {
            return true;
        }
    }
    reach >= target.end - EPS
}

/// Confusion set for a class at a band: Near resolves to the true class,
/// Mid confuses classes sharing base and axis line, Far confuses all
/// classes sharing the base solid.
pub fn candidate_set(
    true_class: ClassId,
    band: Band,
    catalog: &Catalog,
) -> Result<BTreeSet<ClassId>> {
    let class = catalog.class(true_class)?;
    let set = match band {
        Band::Near => [true_class].into_iter().collect(),
        Band::Mid => catalog
            .classes()
            .iter()
            .filter(|c| c.base == class.base && c.axis == class.axis)
            .map(|c| c.id)
            .collect(),
        Band::Far => catalog
            .classes()
            .iter()
            .filter(|c| c.base == class.base)
            .map(|c| c.id)
            .collect(),
    };
    Ok(set)
}

fn band_of(distance: f64, horizon: f64) -> Band {
    if distance <= horizon / 3.0 {
        Band::Near
    } else if distance <= 2.0 * horizon / 3.0 {
        Band::Mid
    } else {
        Band::Far
    }
}

/// Azimuth intervals of every object's aggregate box as seen from the pose.
pub fn occlusion_intervals(scene: &Scene, pose: &AgentPose) -> BTreeMap<u32, AngularInterval> {
    scene
        .objects
        .iter()
        .filter_map(|o| {
            o.aggregate_box()
                .map(|b| (o.object_id, box_interval(&b, pose.position)))
        })
        .collect()
}

struct ObjectView {
    object_id: u32,
    distance: f64,
    interval: AngularInterval,
}

fn facet_visibility(geon: &GeonInstance, pose_xy: [f64; 2]) -> BTreeSet<Facet> {
    let mut out = BTreeSet::new();
    let dx = geon.position[0] - pose_xy[0];
    let dy = geon.position[1] - pose_xy[1];
    if dx > 1e-12 {
        out.insert(Facet::Left);
    }
    if dx < -1e-12 {
        out.insert(Facet::Right);
    }
    if dy > 1e-12 {
        out.insert(Facet::Front);
    }
    if dy < -1e-12 {
        out.insert(Facet::Back);
    }
    let top_z = geon.position[2] + geon.scale[2] / 2.0;
    if top_z < EYE_HEIGHT {
        out.insert(Facet::Top);
    }
    out
}

/// Reports every geon that lies in the view sector within the horizon and
/// is not occluded, sorted by (distance, instance id). A geon is hidden
/// exactly when strictly nearer bodies (other objects, or nearer geons of
/// its own object) cover its whole azimuth interval.
pub fn sense(
    scene: &Scene,
    pose: &AgentPose,
    fov_degrees: f64,
    horizon_m: f64,
    catalog: &Catalog,
) -> Result<Vec<Detection>> {
    if !(0.0 < fov_degrees && fov_degrees <= 360.0) {
        return Err(PerceptionError::InvalidSensor(format!(
            "fov {fov_degrees} outside (0, 360]"
        )));
    }
    if horizon_m <= 0.0 {
        return Err(PerceptionError::InvalidSensor(format!(
            "horizon {horizon_m} must be positive"
        )));
    }
    let p = pose.position;
    if p[0] < scene.bounds.min[0]
        || p[0] > scene.bounds.max[0]
        || p[1] < scene.bounds.min[1]
        || p[1] > scene.bounds.max[1]
    {
        return Err(PerceptionError::PoseOutOfBounds);
    }

    let views: Vec<ObjectView> = scene
        .objects
        .iter()
        .filter_map(|o| {
            o.aggregate_box().map(|b| {
                let c = b.center();
                let d = ((c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2)).sqrt();
                ObjectView {
                    object_id: o.object_id,
                    distance: d,
                    interval: box_interval(&b, p),
                }
            })
        })
        .collect();

    let heading_az = pose.heading.azimuth_deg();
    let mut detections = Vec::new();
    for obj in &scene.objects {
        for geon in &obj.geons {
            let dx = geon.position[0] - p[0];
            let dy = geon.position[1] - p[1];
            let distance = (dx * dx + dy * dy).sqrt();
            if distance > horizon_m {
                continue;
            }
            if distance > 1e-12 {
                let az = dy.atan2(dx).to_degrees();
                if angle_diff(az, heading_az).abs() > fov_degrees / 2.0 + 1e-9 {
                    continue;
                }
            }
            let geon_interval = box_interval(&bounding_box(geon), p);
            let mut covers: Vec<AngularInterval> = views
                .iter()
                .filter(|v| v.object_id != obj.object_id && v.distance < distance)
                .map(|v| v.interval)
                .collect();
            for other in &obj.geons {
                if other.instance_id == geon.instance_id {
                    continue;
                }
                let odx = other.position[0] - p[0];
                let ody = other.position[1] - p[1];
                let od = (odx * odx + ody * ody).sqrt();
                if od < distance {
                    covers.push(box_interval(&bounding_box(other), p));
                }
            }
            if fully_covered(&geon_interval, &covers) {
                continue;
            }
            let band = band_of(distance, horizon_m);
            detections.push(Detection {
                geon_instance_id: geon.instance_id,
                parent_object_id: obj.object_id,
                candidate_classes: candidate_set(geon.class, band, catalog)?,
                distance,
                visible_facets: facet_visibility(geon, p),
                band,
            });
        }
    }
    detections.sort_by(|a, b| {
        a.distance
            .partial_cmp(&b.distance)
            .unwrap()
            .then(a.geon_instance_id.cmp(&b.geon_instance_id))
    });
    Ok(detections)
}
