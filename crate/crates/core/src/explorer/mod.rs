//! The cognition loop: goal discovery, the goal lattice, two-phase object
//! rewards, the play payoff, receding-horizon planning and saturation-based
//! termination.
//!
//! Rewards live in one Boolean algebra over a growing universe of atoms.
//! Two kinds of atom exist: the identity of every geon instance discovered
//! so far, and per-geon "variant tags", one per class the geon might still
//! be when first seen. Earning a tag (ruling a class out) is the phase-one
//! reward; accumulating geon identities across camera angles is the
//! phase-two reward. Both embed into the same carrier so play payoffs can
//! combine the free-move reward and all goal rewards with set operations.

mod episode;
mod plan;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geons::{Catalog, ClassId, GeonError};
use crate::lattice::algebra::{IndexSet, SetAlgebra};
use crate::lattice::{FiniteLattice, MAX_POWERSET_UNIVERSE};
use crate::perception::{AgentPose, Detection, PerceptionError};
use crate::worldgen::Scene;

pub use episode::{
    check_saturation, reachable_octants, run_episode, DbEvent, DetectionRecord, EpisodeOutcome,
    EpisodeParams, SaturationCheck, Termination, TraceEvent, TransitionRecord,
};
pub use plan::{known_scene, plan_step, play_payoff, position_payoff, Action, PlanOutcome, ACTIONS};

#[derive(Debug, Error)]
pub enum ExplorerError {
    #[error("no goals remain: all saturated or none discovered")]
    NoGoals,
    #[error("no goals selected")]
    EmptySelection,
    #[error("no legal action at the current pose")]
    NoLegalAction,
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Geon(#[from] GeonError),
    #[error(transparent)]
    Worldgen(#[from] crate::worldgen::WorldgenError),
}

pub type Result<T> = std::result::Result<T, ExplorerError>;

/// How the play payoff combines the free-move reward with goal rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffMode {
    /// Union along the play of ¬k(free) ∧ (k(goal 1) ∨ ... ∨ k(goal k)).
    ParJoin,
    /// Union along the play of k(free) ⇒ (k(goal 1) ∧ ... ∧ k(goal k)).
    ImplicationMeet,
}

/// One element of the reward universe.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Atom {
    /// Identity of a discovered geon instance.
    Geon { object: u32, instance: u32 },
    /// Per-geon recognition-variant tag: earned when `class` is ruled out.
    Variant {
        object: u32,
        instance: u32,
        class: ClassId,
    },
}

impl Atom {
    pub fn object(&self) -> u32 {
        match *self {
            Atom::Geon { object, .. } | Atom::Variant { object, .. } => object,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Atom::Geon { object, instance } => format!("g:{object}/{instance}"),
            Atom::Variant {
                object,
                instance,
                class,
            } => format!("v:{object}/{instance}/{class}"),
        }
    }
}

/// The reward universe: an append-only list of atoms. Payoff sets are index
/// sets into it, combined through [`SetAlgebra`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Universe {
    atoms: Vec<Atom>,
    index: BTreeMap<Atom, u32>,
}

impl Universe {
    pub fn new() -> Self {
        Universe::default()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn insert(&mut self, atom: Atom) -> u32 {
        if let Some(&i) = self.index.get(&atom) {
            return i;
        }
        let i = self.atoms.len() as u32;
        self.atoms.push(atom);
        self.index.insert(atom, i);
        i
    }

    pub fn get(&self, atom: &Atom) -> Option<u32> {
        self.index.get(atom).copied()
    }

    pub fn atom(&self, i: u32) -> Atom {
        self.atoms[i as usize]
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn algebra(&self) -> SetAlgebra {
        SetAlgebra::new(self.atoms.len())
    }

    /// Canonical encoding of a payoff set: sorted atom names.
    pub fn encode(&self, set: &IndexSet) -> Vec<String> {
        let mut names: Vec<String> = set.iter().map(|&i| self.atom(i).name()).collect();
        names.sort();
        names
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Approach,
    Orbit,
    Saturated,
}

/// Octant bookkeeping for the orbit of one object: octants visited since
/// the current cycle began, and the geon/scheme counts at cycle start.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OrbitLog {
    pub visited: BTreeSet<u8>,
    pub cycle_geons: usize,
    pub cycle_schemes: usize,
}

/// Everything believed about one discovered object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectBelief {
    pub object_id: u32,
    pub phase: Phase,
    /// Attention score frozen at discovery: salience plus a nearness term.
    pub attention: f64,
    /// Candidate classes of each detected geon at first sight (frozen).
    pub first_candidates: BTreeMap<u32, BTreeSet<ClassId>>,
    /// Current candidate classes; only ever shrinks, per geon.
    pub current_candidates: BTreeMap<u32, BTreeSet<ClassId>>,
    /// Instance ids of every geon of this object observed so far.
    pub cumulative_geons: BTreeSet<u32>,
    /// Canonical encodings of schemes recorded for this object.
    pub schemes_seen: BTreeSet<String>,
    pub orbit: OrbitLog,
}

impl ObjectBelief {
    /// Union of the per-geon recognition-variant sets.
    pub fn variant_set(&self) -> BTreeSet<ClassId> {
        self.current_candidates
            .values()
            .flat_map(|s| s.iter().copied())
            .collect()
    }

    /// Whether every detected geon has resolved to a single class.
    pub fn all_resolved(&self) -> bool {
        !self.current_candidates.is_empty()
            && self.current_candidates.values().all(|s| s.len() == 1)
    }

    pub fn resolved_class(&self, instance: u32) -> Option<ClassId> {
        let s = self.current_candidates.get(&instance)?;
        if s.len() == 1 {
            s.iter().next().copied()
        } else {
            None
        }
    }
}

/// The attention-ordered goal lattice: subsets of the free-move goal plus
/// all discovered goals, valued additively from attention scores (join of
/// goal subsets is set union, read as their parallel achievement).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GoalLattice {
    pub free_score: f64,
    pub object_scores: BTreeMap<u32, f64>,
}

impl GoalLattice {
    /// Additive, hence monotone, valuation of a goal subset; `with_free`
    /// includes the free-move goal.
    pub fn valuation(&self, objects: &BTreeSet<u32>, with_free: bool) -> f64 {
        let base: f64 = objects
            .iter()
            .filter_map(|o| self.object_scores.get(o))
            .sum();
        if with_free {
            base + self.free_score
        } else {
            base
        }
    }

    /// Materializes the powerset lattice over goal identifiers ("a" for the
    /// free goal, "b<id>" per object) while the goal count permits explicit
    /// construction; selection falls back to direct scoring past that.
    pub fn lattice(&self) -> Option<FiniteLattice> {
        if self.object_scores.len() + 1 > MAX_POWERSET_UNIVERSE {
            return None;
        }
        let mut names = vec!["a".to_string()];
        names.extend(self.object_scores.keys().map(|o| format!("b{o}")));
        FiniteLattice::powerset(&names).ok()
    }
}

/// Full exploration state of the agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationState {
    pub pose: AgentPose,
    pub step: u64,
    pub universe: Universe,
    pub beliefs: BTreeMap<u32, ObjectBelief>,
    /// Currently selected goals in priority order.
    pub selected_goals: Vec<u32>,
    pub goal_lattice: GoalLattice,
}

impl ExplorationState {
    pub fn new(pose: AgentPose, free_score: f64) -> Self {
        ExplorationState {
            pose,
            step: 0,
            universe: Universe::new(),
            beliefs: BTreeMap::new(),
            selected_goals: Vec::new(),
            goal_lattice: GoalLattice {
                free_score,
                object_scores: BTreeMap::new(),
            },
        }
    }

    /// All universe atoms attributed to a goal object's scheme information.
    pub fn object_atoms(&self, object: u32) -> IndexSet {
        self.universe
            .atoms()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.object() == object)
            .map(|(i, _)| i as u32)
            .collect()
    }
}

/// Static context threaded through the explorer operations.
pub struct ExplorerContext<'a> {
    pub scene: &'a Scene,
    pub catalog: &'a Catalog,
    pub fov_degrees: f64,
    pub horizon_m: f64,
    pub payoff_mode: PayoffMode,
}

/// What one discovery pass changed, for tracing and scheme storage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiscoverOutcome {
    pub new_goals: Vec<u32>,
    pub transitions: Vec<(u32, Phase, Phase)>,
    pub new_schemes: Vec<(u32, crate::geons::GeonScheme)>,
}

/// Folds a sensing result into the state: new objects become discovered
/// goals with a frozen attention score, per-geon candidate sets shrink by
/// intersection, the universe grows, phases advance, and newly resolved
/// views yield schemes for orbit-phase objects.
pub fn discover(
    state: &mut ExplorationState,
    ctx: &ExplorerContext<'_>,
    detections: &[Detection],
) -> DiscoverOutcome {
    let mut outcome = DiscoverOutcome::default();
    let mut by_object: BTreeMap<u32, Vec<&Detection>> = BTreeMap::new();
    for d in detections {
        by_object.entry(d.parent_object_id).or_default().push(d);
    }
    for (&object, group) in &by_object {
        if !state.beliefs.contains_key(&object) {
            let nearest = group
                .iter()
                .map(|d| d.distance)
                .fold(f64::INFINITY, f64::min);
            let salience = ctx
                .scene
                .object(object)
                .map(|o| o.salience)
                .unwrap_or_default();
            let attention = salience + (ctx.horizon_m - nearest).max(0.0) / ctx.horizon_m;
            state.beliefs.insert(
                object,
                ObjectBelief {
                    object_id: object,
                    phase: Phase::Approach,
                    attention,
                    first_candidates: BTreeMap::new(),
                    current_candidates: BTreeMap::new(),
                    cumulative_geons: BTreeSet::new(),
                    schemes_seen: BTreeSet::new(),
                    orbit: OrbitLog::default(),
                },
            );
            state.goal_lattice.object_scores.insert(object, attention);
            outcome.new_goals.push(object);
        }
        let belief = state.beliefs.get_mut(&object).expect("just inserted");
        for d in group {
            let instance = d.geon_instance_id;
            belief.cumulative_geons.insert(instance);
            state.universe.insert(Atom::Geon { object, instance });
            match belief.current_candidates.get_mut(&instance) {
                None => {
                    belief
                        .first_candidates
                        .insert(instance, d.candidate_classes.clone());
                    belief
                        .current_candidates
                        .insert(instance, d.candidate_classes.clone());
                    for &class in &d.candidate_classes {
                        state.universe.insert(Atom::Variant {
                            object,
                            instance,
                            class,
                        });
                    }
                }
                Some(current) => {
                    // Information never degrades: keep the intersection.
                    let shrunk: BTreeSet<ClassId> = current
                        .intersection(&d.candidate_classes)
                        .copied()
                        .collect();
                    if !shrunk.is_empty() {
                        *current = shrunk;
                    }
                }
            }
        }
        if belief.phase == Phase::Approach && belief.all_resolved() {
            belief.phase = Phase::Orbit;
            belief.orbit.cycle_geons = belief.cumulative_geons.len();
            belief.orbit.cycle_schemes = belief.schemes_seen.len();
            outcome.transitions.push((object, Phase::Approach, Phase::Orbit));
        }
        // Record the scheme of the currently visible, fully resolved view
        // for orbit-phase objects.
        if belief.phase >= Phase::Orbit {
            let visible: Vec<u32> = group
                .iter()
                .map(|d| d.geon_instance_id)
                .filter(|&i| belief.resolved_class(i).is_some())
                .collect();
            if !visible.is_empty() && visible.len() <= crate::geons::MAX_SCHEME_GEONS {
                if let Some(obj) = ctx.scene.object(object) {
                    let instances: Vec<crate::geons::GeonInstance> = obj
                        .geons
                        .iter()
                        .filter(|g| visible.contains(&g.instance_id))
                        .cloned()
                        .collect();
                    let scheme = crate::geons::GeonScheme::from_instances(
                        &instances,
                        crate::worldgen::OVERLAP_EPSILON,
                        Some(state.pose.tag()),
                    );
                    if let Ok(canonical) = crate::geons::scheme_canonical_form(&scheme) {
                        if belief.schemes_seen.insert(canonical.into_string()) {
                            outcome.new_schemes.push((object, scheme));
                        }
                    }
                }
            }
        }
    }
    outcome
}

/// Picks the subset of at most `capacity_k` non-saturated goals maximizing
/// the goal-lattice valuation, ties broken by lexicographic object id. With
/// an additive valuation this is exactly the top-k by attention score; the
/// exhaustive subset scan is kept for small goal counts as the ground-truth
/// reading and the shortcut takes over past it.
pub fn select_goals(state: &ExplorationState, capacity_k: usize) -> Result<Vec<u32>> {
    let capacity_k = capacity_k.max(1);
    let mut active: Vec<(u32, f64)> = state
        .beliefs
        .values()
        .filter(|b| b.phase != Phase::Saturated)
        .map(|b| (b.object_id, b.attention))
        .collect();
    if active.is_empty() {
        return Err(ExplorerError::NoGoals);
    }
    if active.len() <= 10 {
        let ids: Vec<u32> = active.iter().map(|(o, _)| *o).collect();
        let mut best: Option<(f64, BTreeSet<u32>)> = None;
        for mask in 0..(1usize << ids.len()) {
            if mask.count_ones() as usize > capacity_k || mask == 0 {
                continue;
            }
            let subset: BTreeSet<u32> = ids
                .iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &o)| o)
                .collect();
            let v = state.goal_lattice.valuation(&subset, false);
            let better = match &best {
                None => true,
                Some((bv, bs)) => v > bv + 1e-12 || ((v - bv).abs() <= 1e-12 && subset < *bs),
            };
            if better {
                best = Some((v, subset));
            }
        }
        let (_, subset) = best.expect("non-empty candidate set");
        let mut chosen: Vec<u32> = subset.into_iter().collect();
        chosen.sort_by(|a, b| {
            let sa = state.goal_lattice.object_scores[a];
            let sb = state.goal_lattice.object_scores[b];
            sb.partial_cmp(&sa).unwrap().then(a.cmp(b))
        });
        Ok(chosen)
    } else {
        active.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        Ok(active
            .into_iter()
            .take(capacity_k)
            .map(|(o, _)| o)
            .collect())
    }
}

/// The free-move reward: the universe minus every atom attributed to a
/// known goal's scheme information, so that its Boolean complement is
/// exactly the union of the goals' information sets (the anti-reward).
pub fn free_move_payoff(state: &ExplorationState) -> IndexSet {
    let goal_objects: BTreeSet<u32> = state.beliefs.keys().copied().collect();
    state
        .universe
        .atoms()
        .iter()
        .enumerate()
        .filter(|(_, a)| !goal_objects.contains(&a.object()))
        .map(|(i, _)| i as u32)
        .collect()
}

/// Per-object reward. Approach phase: the variant tags earned so far (the
/// first-sight candidate sets minus the current ones) — shrinking
/// uncertainty grows the reward. Orbit phase and beyond: the accumulated
/// geon identities united with the full variant tag set.
pub fn object_payoff(state: &ExplorationState, object: u32) -> IndexSet {
    let Some(belief) = state.beliefs.get(&object) else {
        return IndexSet::new();
    };
    let mut out = IndexSet::new();
    match belief.phase {
        Phase::Approach => {
            for (&instance, first) in &belief.first_candidates {
                let current = &belief.current_candidates[&instance];
                for &class in first.difference(current) {
                    if let Some(i) = state.universe.get(&Atom::Variant {
                        object,
                        instance,
                        class,
                    }) {
                        out.insert(i);
                    }
                }
            }
        }
        Phase::Orbit | Phase::Saturated => {
            for (i, a) in state.universe.atoms().iter().enumerate() {
                let keep = match a {
                    Atom::Variant { object: o, .. } => *o == object,
                    Atom::Geon {
                        object: o,
                        instance,
                    } => *o == object && belief.cumulative_geons.contains(instance),
                };
                if keep {
                    out.insert(i as u32);
                }
            }
        }
    }
    out
}
