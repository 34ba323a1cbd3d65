//! Episode execution: the sense → discover → select → plan → move loop,
//! orbit traversal around resolved objects, saturation detection and trace
//! emission.
//!
//! The planner alone cannot justify walking to the unseen side of an object
//! (unknown space contributes nothing to predicted payoffs), so once an
//! object is in the orbit phase and no play improves the payoff, an
//! external traversal method supplies the motion: visit the eight viewpoint
//! octants around the focused object. The octant cycle is one replaceable
//! choice of such a method.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geons::{Catalog, InsertOutcome, SchemaStore};
use crate::perception::{sense, AgentPose, Band, Heading};
use crate::worldgen::Scene;

use super::{
    discover, plan_step, select_goals, Action, ExplorationState, ExplorerContext,
    ExplorerError, ObjectBelief, PayoffMode, Phase, Result,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeParams {
    pub fov_degrees: f64,
    pub horizon_m: f64,
    pub capacity_k: usize,
    pub horizon_steps: usize,
    pub payoff_mode: PayoffMode,
    pub max_steps: u64,
    pub free_score: f64,
}

impl Default for EpisodeParams {
    fn default() -> Self {
        EpisodeParams {
            fov_degrees: 90.0,
            horizon_m: 12.0,
            capacity_k: 3,
            horizon_steps: 2,
            payoff_mode: PayoffMode::ParJoin,
            max_steps: 200,
            free_score: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    NoGoals,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub object: u32,
    pub instance: u32,
    pub band: Band,
    pub candidates: Vec<u16>,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub object: u32,
    pub from: Phase,
    pub to: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbEvent {
    pub key: String,
    pub outcome: InsertOutcome,
    pub canonical: String,
}

/// One per-step replay record. Serialization is canonical: sorted keys and
/// shortest round-trip float formatting, so byte comparison is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    pub x: f64,
    pub y: f64,
    pub heading: Heading,
    pub detections: Vec<DetectionRecord>,
    pub selected_goals: Vec<u32>,
    pub free_payoff: Vec<String>,
    pub goal_payoffs: Vec<(u32, Vec<String>)>,
    pub plan_payoff: Vec<String>,
    pub action: Action,
    pub transitions: Vec<TransitionRecord>,
    pub db_events: Vec<DbEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaturationCheck {
    Saturated,
    Active,
}

/// Orbit radius around an object: a comfortable sensing ring outside the
/// footprint but inside the near band.
fn orbit_radius(scene: &Scene, object: u32, horizon_m: f64) -> f64 {
    let footprint = scene
        .object(object)
        .and_then(|o| o.aggregate_box())
        .map(|b| {
            let h = b.half_extents();
            h[0].hypot(h[1])
        })
        .unwrap_or(1.0);
    (footprint + 1.2).max(1.5).min(horizon_m / 3.0)
}

fn octant_waypoint(center: [f64; 2], radius: f64, octant: u8) -> [f64; 2] {
    let a = (45.0 * octant as f64).to_radians();
    [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
}

/// Octants whose orbit waypoints lie inside the scene bounds; octants cut
/// off by the world edge are unreachable and exempt from the cycle.
pub fn reachable_octants(scene: &Scene, object: u32, horizon_m: f64) -> BTreeSet<u8> {
    let Some(obj) = scene.object(object) else {
        return BTreeSet::new();
    };
    let center = [obj.position[0], obj.position[1]];
    let r = orbit_radius(scene, object, horizon_m);
    (0..8u8)
        .filter(|&o| {
            let w = octant_waypoint(center, r, o);
            w[0] >= scene.bounds.min[0]
                && w[0] <= scene.bounds.max[0]
                && w[1] >= scene.bounds.min[1]
                && w[1] <= scene.bounds.max[1]
        })
        .collect()
}

/// Saturated exactly when every reachable viewpoint octant has been visited
/// and the cycle added no new geon descriptors and no new canonical scheme.
pub fn check_saturation(belief: &ObjectBelief, reachable: &BTreeSet<u8>) -> SaturationCheck {
    if reachable.is_subset(&belief.orbit.visited)
        && belief.cumulative_geons.len() == belief.orbit.cycle_geons
        && belief.schemes_seen.len() == belief.orbit.cycle_schemes
    {
        SaturationCheck::Saturated
    } else {
        SaturationCheck::Active
    }
}

/// One deterministic step toward a target point: turn onto the desired
/// octant (shorter side, left on ties), then walk.
fn step_toward(pose: &AgentPose, target: [f64; 2], scene: &Scene) -> Action {
    let dx = target[0] - pose.position[0];
    let dy = target[1] - pose.position[1];
    let desired = Heading::octant_of(dx, dy);
    let diff = (desired + 8 - pose.heading.octant()) % 8;
    if diff == 0 {
        if Action::Forward.apply(pose, scene).is_some() {
            Action::Forward
        } else {
            Action::TurnLeft
        }
    } else if diff <= 4 {
        Action::TurnLeft
    } else {
        Action::TurnRight
    }
}

/// The external traversal method: move along the octant ring of the focused
/// orbit-phase goal, or approach the top goal when it is still unresolved.
fn fallback_action(state: &ExplorationState, ctx: &ExplorerContext<'_>) -> Option<Action> {
    // Focus preference: the highest-priority selected orbit goal.
    let focus = state
        .selected_goals
        .iter()
        .copied()
        .find(|g| state.beliefs.get(g).map(|b| b.phase) == Some(Phase::Orbit));
    if let Some(object) = focus {
        let obj = ctx.scene.object(object)?;
        let center = [obj.position[0], obj.position[1]];
        let r = orbit_radius(ctx.scene, object, ctx.horizon_m);
        let belief = &state.beliefs[&object];
        let reachable = reachable_octants(ctx.scene, object, ctx.horizon_m);
        let agent_octant = Heading::octant_of(
            state.pose.position[0] - center[0],
            state.pose.position[1] - center[1],
        );
        // Next unvisited reachable octant, counterclockwise from here.
        let next = (0..8u8)
            .map(|d| (agent_octant + d) % 8)
            .find(|o| reachable.contains(o) && !belief.orbit.visited.contains(o))?;
        let waypoint = octant_waypoint(center, r, next);
        let dist = (waypoint[0] - state.pose.position[0])
            .hypot(waypoint[1] - state.pose.position[1]);
        if dist <= 0.75 {
            // At the waypoint: face the object so the next sense marks it.
            let desired = Heading::octant_of(
                center[0] - state.pose.position[0],
                center[1] - state.pose.position[1],
            );
            if desired == pose_octant(&state.pose) {
                return Some(Action::Stay);
            }
            return Some(step_toward(&state.pose, center, ctx.scene));
        }
        return Some(step_toward(&state.pose, waypoint, ctx.scene));
    }
    // No orbit goal: approach the top selected unresolved goal.
    let approach = state
        .selected_goals
        .iter()
        .copied()
        .find(|g| state.beliefs.get(g).map(|b| b.phase) == Some(Phase::Approach))?;
    let obj = ctx.scene.object(approach)?;
    Some(step_toward(
        &state.pose,
        [obj.position[0], obj.position[1]],
        ctx.scene,
    ))
}

fn pose_octant(pose: &AgentPose) -> u8 {
    pose.heading.octant()
}

#[derive(Debug)]
pub struct EpisodeOutcome {
    pub trace: Vec<TraceEvent>,
    /// Episode-local schema store (types minted t1, t2, ... in discovery
    /// order); merge into a persistent store for cross-run accumulation.
    pub store: SchemaStore,
    pub termination: Termination,
    pub final_state: ExplorationState,
}

/// Default start: the center of the scene bounds, facing east.
pub fn start_pose(scene: &Scene) -> AgentPose {
    AgentPose {
        position: [
            (scene.bounds.min[0] + scene.bounds.max[0]) / 2.0,
            (scene.bounds.min[1] + scene.bounds.max[1]) / 2.0,
        ],
        heading: Heading::E,
    }
}

/// Runs the cognition loop: sense → discover → select goals → plan → move,
/// storing every newly seen scheme, until all goals saturate or the step
/// budget runs out. Deterministic in (scene, catalog, params).
pub fn run_episode(
    scene: &Scene,
    catalog: &Catalog,
    params: &EpisodeParams,
) -> Result<EpisodeOutcome> {
    let ctx = ExplorerContext {
        scene,
        catalog,
        fov_degrees: params.fov_degrees,
        horizon_m: params.horizon_m,
        payoff_mode: params.payoff_mode,
    };
    let mut state = ExplorationState::new(start_pose(scene), params.free_score);
    let mut store = SchemaStore::new();
    let mut trace: Vec<TraceEvent> = Vec::new();
    let mut type_binding: std::collections::BTreeMap<u32, String> = std::collections::BTreeMap::new();
    let mut effective_k = params.capacity_k.max(1);

    for step in 0..params.max_steps {
        let detections = sense(
            scene,
            &state.pose,
            params.fov_degrees,
            params.horizon_m,
            catalog,
        )?;
        let outcome = discover(&mut state, &ctx, &detections);
        if !outcome.new_goals.is_empty() {
            // A fresh goal starts a new selection epoch at full capacity.
            effective_k = params.capacity_k.max(1);
        }
        let mut transitions = outcome.transitions.clone();

        // Persist newly seen schemes. An object binds to a store type at its
        // first stored scheme: the first existing type with a matching
        // scheme, or a freshly minted key; later schemes reuse the binding.
        let mut db_events = Vec::new();
        for (object, scheme) in &outcome.new_schemes {
            let key = match type_binding.get(object) {
                Some(k) => k.clone(),
                None => {
                    let k = store
                        .lookup(scheme)?
                        .into_iter()
                        .min()
                        .unwrap_or_else(|| format!("t{}", store.len() + 1));
                    type_binding.insert(*object, k.clone());
                    k
                }
            };
            let result = store.insert(&key, scheme)?;
            let canonical = crate::geons::scheme_canonical_form(scheme)?.into_string();
            db_events.push(DbEvent {
                key,
                outcome: result,
                canonical,
            });
        }

        // Orbit bookkeeping and saturation for objects detected this step.
        let detected: BTreeSet<u32> = detections.iter().map(|d| d.parent_object_id).collect();
        for object in detected {
            let Some(obj) = scene.object(object) else {
                continue;
            };
            let center = [obj.position[0], obj.position[1]];
            let reachable = reachable_octants(scene, object, params.horizon_m);
            let belief = state.beliefs.get_mut(&object).expect("detected => known");
            if belief.phase != Phase::Orbit {
                continue;
            }
            let octant = Heading::octant_of(
                state.pose.position[0] - center[0],
                state.pose.position[1] - center[1],
            );
            belief.orbit.visited.insert(octant);
            if reachable.is_subset(&belief.orbit.visited) {
                if check_saturation(belief, &reachable) == SaturationCheck::Saturated {
                    belief.phase = Phase::Saturated;
                    transitions.push((object, Phase::Orbit, Phase::Saturated));
                } else {
                    // The cycle added information: start the next one.
                    belief.orbit.visited.clear();
                    belief.orbit.cycle_geons = belief.cumulative_geons.len();
                    belief.orbit.cycle_schemes = belief.schemes_seen.len();
                }
            }
        }

        let selected = match select_goals(&state, effective_k) {
            Ok(s) => s,
            Err(ExplorerError::NoGoals) => {
                return Ok(EpisodeOutcome {
                    trace,
                    store,
                    termination: Termination::NoGoals,
                    final_state: state,
                });
            }
            Err(e) => return Err(e),
        };
        state.selected_goals = selected;

        // Plan; when the joint reward of the selection cannot improve,
        // narrow the selection down to one goal before falling back.
        let mut plan = plan_step(&state, &ctx, params.horizon_steps)?;
        while !plan.improves && effective_k > 1 {
            effective_k -= 1;
            state.selected_goals = select_goals(&state, effective_k)?;
            plan = plan_step(&state, &ctx, params.horizon_steps)?;
        }
        let action = if plan.improves {
            plan.action
        } else {
            fallback_action(&state, &ctx).unwrap_or(plan.action)
        };

        let free = super::free_move_payoff(&state);
        let goal_payoffs: Vec<(u32, Vec<String>)> = state
            .selected_goals
            .iter()
            .map(|&g| (g, state.universe.encode(&super::object_payoff(&state, g))))
            .collect();
        let plan_payoff = state.universe.encode(&plan.payoff);
        trace.push(TraceEvent {
            step,
            x: state.pose.position[0],
            y: state.pose.position[1],
            heading: state.pose.heading,
            detections: detections
                .iter()
                .map(|d| DetectionRecord {
                    object: d.parent_object_id,
                    instance: d.geon_instance_id,
                    band: d.band,
                    candidates: d.candidate_classes.iter().copied().collect(),
                    distance: d.distance,
                })
                .collect(),
            selected_goals: state.selected_goals.clone(),
            free_payoff: state.universe.encode(&free),
            goal_payoffs,
            plan_payoff,
            action,
            transitions: transitions
                .iter()
                .map(|&(object, from, to)| TransitionRecord { object, from, to })
                .collect(),
            db_events,
        });

        if let Some(next) = action.apply(&state.pose, scene) {
            state.pose = next;
        }
        state.step = step + 1;
    }
    Ok(EpisodeOutcome {
        trace,
        store,
        termination: Termination::MaxSteps,
        final_state: state,
    })
}
