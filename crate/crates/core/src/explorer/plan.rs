//! Receding-horizon planning: the horizon game and the play payoff.
//!
//! The horizon game alternates environment moves (sense outcomes, which are
//! deterministic, so one Opponent move per position) with system moves (one
//! of the four actions). Lookahead runs against the declared world model:
//! currently-known objects persist with their known geons, unknown space
//! contributes nothing. Since the sensor is deterministic, future reports
//! over the known world are exactly predictable, which makes every play's
//! payoff well defined.

use serde::{Deserialize, Serialize};

use crate::games::{enumerate_plays, ConwayGame, Move, Polarity};
use crate::lattice::algebra::IndexSet;
use crate::perception::{sense, AgentPose};
use crate::worldgen::{ObjectSpec, Scene};

use super::{
    discover, free_move_payoff, object_payoff, ExplorationState, ExplorerContext, ExplorerError,
    PayoffMode, Phase, Result,
};

/// Grid step length in meters.
pub const STEP_LENGTH: f64 = 1.0;

/// System moves. The declared order is the lexicographic tie-break order,
/// so an indifferent planner stays put.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Stay,
    Forward,
    TurnLeft,
    TurnRight,
}

pub const ACTIONS: [Action; 4] = [
    Action::Stay,
    Action::Forward,
    Action::TurnLeft,
    Action::TurnRight,
];

impl Action {
    /// The pose after this action; `None` when it would leave the bounds.
    pub fn apply(self, pose: &AgentPose, scene: &Scene) -> Option<AgentPose> {
        match self {
            Action::Stay => Some(*pose),
            Action::TurnLeft => Some(AgentPose {
                position: pose.position,
                heading: pose.heading.turn_left(),
            }),
            Action::TurnRight => Some(AgentPose {
                position: pose.position,
                heading: pose.heading.turn_right(),
            }),
            Action::Forward => {
                let u = pose.heading.unit();
                let next = [
                    pose.position[0] + u[0] * STEP_LENGTH,
                    pose.position[1] + u[1] * STEP_LENGTH,
                ];
                let b = &scene.bounds;
                if next[0] >= b.min[0]
                    && next[0] <= b.max[0]
                    && next[1] >= b.min[1]
                    && next[1] <= b.max[1]
                {
                    Some(AgentPose {
                        position: next,
                        heading: pose.heading,
                    })
                } else {
                    None
                }
            }
        }
    }
}

/// The declared world model: discovered objects restricted to their
/// discovered geons; everything else is absent.
pub fn known_scene(state: &ExplorationState, ctx: &ExplorerContext<'_>) -> Scene {
    let objects: Vec<ObjectSpec> = ctx
        .scene
        .objects
        .iter()
        .filter_map(|o| {
            let belief = state.beliefs.get(&o.object_id)?;
            let geons: Vec<_> = o
                .geons
                .iter()
                .filter(|g| belief.cumulative_geons.contains(&g.instance_id))
                .cloned()
                .collect();
            if geons.is_empty() {
                return None;
            }
            Some(ObjectSpec {
                geons,
                ..o.clone()
            })
        })
        .collect();
    Scene {
        seed: ctx.scene.seed,
        bounds: ctx.scene.bounds,
        objects,
    }
}

/// The payoff contribution of the current position: the mode's combination
/// of the free-move reward with the selected goals' rewards, in the Boolean
/// algebra over the current universe.
pub fn position_payoff(state: &ExplorationState, mode: PayoffMode) -> Result<IndexSet> {
    if state.selected_goals.is_empty() {
        return Err(ExplorerError::EmptySelection);
    }
    let alg = state.universe.algebra();
    let free = free_move_payoff(state);
    match mode {
        PayoffMode::ParJoin => {
            let mut joined = IndexSet::new();
            for &g in &state.selected_goals {
                joined = alg.join(&joined, &object_payoff(state, g));
            }
            Ok(alg.meet(&alg.complement(&free), &joined))
        }
        PayoffMode::ImplicationMeet => {
            let mut met: Option<IndexSet> = None;
            for &g in &state.selected_goals {
                let p = object_payoff(state, g);
                met = Some(match met {
                    None => p,
                    Some(m) => alg.meet(&m, &p),
                });
            }
            Ok(alg.implication(&free, &met.unwrap_or_default()))
        }
    }
}

/// Advances a simulated state by one sense at its current pose and returns
/// that position's payoff contribution.
fn predict_step(
    sim: &mut ExplorationState,
    ctx: &ExplorerContext<'_>,
    known: &Scene,
) -> Result<IndexSet> {
    let detections = sense(known, &sim.pose, ctx.fov_degrees, ctx.horizon_m, ctx.catalog)?;
    let _ = discover(sim, ctx, &detections);
    position_payoff(sim, ctx.payoff_mode)
}

/// Payoff of a play, given as its system-move sequence (environment moves
/// are implicit, one deterministic sense before each action): the union
/// over sensed positions of the per-position contribution. The empty play
/// pays the bottom element.
pub fn play_payoff(
    actions: &[Action],
    state: &ExplorationState,
    ctx: &ExplorerContext<'_>,
) -> Result<IndexSet> {
    if state.selected_goals.is_empty() {
        return Err(ExplorerError::EmptySelection);
    }
    let known = known_scene(state, ctx);
    let mut sim = state.clone();
    let mut total = IndexSet::new();
    for action in actions {
        let contribution = predict_step(&mut sim, ctx, &known)?;
        total = sim.universe.algebra().join(&total, &contribution);
        if let Some(next) = action.apply(&sim.pose, ctx.scene) {
            sim.pose = next;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    /// First system action of the selected play.
    pub action: Action,
    /// The whole selected action sequence.
    pub actions: Vec<Action>,
    /// Payoff of the selected play.
    pub payoff: IndexSet,
    /// Whether some play strictly beats staying put for the whole horizon.
    pub improves: bool,
}

struct HorizonGame {
    conway: ConwayGame,
    payoffs: Vec<IndexSet>,
    move_actions: Vec<Option<Action>>,
}

/// Builds the alternating horizon game: positions are prediction states;
/// each pre-sense position has the single Opponent move "sense", each
/// post-sense position one Proponent move per legal action.
fn build_horizon_game(
    state: &ExplorationState,
    ctx: &ExplorerContext<'_>,
    horizon_steps: usize,
) -> Result<HorizonGame> {
    let known = known_scene(state, ctx);
    let mut labels: Vec<String> = Vec::new();
    let mut payoffs: Vec<IndexSet> = Vec::new();
    let mut moves: Vec<Move> = Vec::new();
    let mut move_actions: Vec<Option<Action>> = Vec::new();

    labels.push("*".to_string());
    payoffs.push(IndexSet::new());

    // Depth-first expansion; move ordering is deterministic (sense first,
    // then actions in declared order), which fixes play enumeration order.
    struct Frame {
        vertex: u32,
        sim: ExplorationState,
        depth: usize,
        path: String,
    }
    let mut stack = vec![Frame {
        vertex: 0,
        sim: state.clone(),
        depth: 0,
        path: String::new(),
    }];
    while let Some(frame) = stack.pop() {
        // Opponent move: the deterministic sense outcome.
        let mut sensed = frame.sim.clone();
        let contribution = predict_step(&mut sensed, ctx, &known)?;
        let sensed_vertex = labels.len() as u32;
        labels.push(format!("{}s", frame.path));
        payoffs.push(contribution);
        moves.push(Move {
            from: frame.vertex,
            to: sensed_vertex,
            polarity: Polarity::Opponent,
        });
        move_actions.push(None);
        if frame.depth + 2 > 2 * horizon_steps {
            continue;
        }
        for action in ACTIONS {
            let Some(next_pose) = action.apply(&sensed.pose, ctx.scene) else {
                continue;
            };
            let mut next = sensed.clone();
            next.pose = next_pose;
            let next_vertex = labels.len() as u32;
            labels.push(format!("{}{:?}.", frame.path, action));
            payoffs.push(IndexSet::new());
            moves.push(Move {
                from: sensed_vertex,
                to: next_vertex,
                polarity: Polarity::Proponent,
            });
            move_actions.push(Some(action));
            if frame.depth + 2 < 2 * horizon_steps {
                stack.push(Frame {
                    vertex: next_vertex,
                    sim: next,
                    depth: frame.depth + 2,
                    path: format!("{}{:?}.", frame.path, action),
                });
            }
        }
    }
    let conway = ConwayGame::new(labels, 0, moves).expect("horizon tree is a valid game");
    Ok(HorizonGame {
        conway,
        payoffs,
        move_actions,
    })
}

/// Selects the play of the horizon game maximizing the payoff cardinality,
/// ties broken by the canonical payoff encoding, then by lexicographic
/// action sequence; returns its first system action. With no active goals
/// the planner is indifferent and stays.
pub fn plan_step(
    state: &ExplorationState,
    ctx: &ExplorerContext<'_>,
    horizon_steps: usize,
) -> Result<PlanOutcome> {
    let active: Vec<u32> = state
        .selected_goals
        .iter()
        .copied()
        .filter(|g| {
            state
                .beliefs
                .get(g)
                .map(|b| b.phase != Phase::Saturated)
                .unwrap_or(false)
        })
        .collect();
    if active.is_empty() {
        return Ok(PlanOutcome {
            action: Action::Stay,
            actions: vec![],
            payoff: IndexSet::new(),
            improves: false,
        });
    }
    let horizon_steps = horizon_steps.max(1);
    let game = build_horizon_game(state, ctx, horizon_steps)?;
    let plays = enumerate_plays(&game.conway, 2 * horizon_steps, true);

    let mut best: Option<(IndexSet, Vec<String>, Vec<Action>)> = None;
    for play in &plays {
        // Only complete environment/system rounds compete, mirroring the
        // even-play convention of strategies.
        if play.len() % 2 != 0 {
            continue;
        }
        let mut payoff = IndexSet::new();
        for pos in play.positions(&game.conway) {
            payoff.extend(game.payoffs[pos as usize].iter().copied());
        }
        let actions: Vec<Action> = play
            .moves()
            .iter()
            .filter_map(|&mi| game.move_actions[mi as usize])
            .collect();
        let encoding = state.universe.encode(&payoff);
        let better = match &best {
            None => true,
            Some((bp, benc, bact)) => {
                payoff.len() > bp.len()
                    || (payoff.len() == bp.len()
                        && (encoding < *benc || (encoding == *benc && actions < *bact)))
            }
        };
        if better {
            best = Some((payoff, encoding, actions));
        }
    }
    let (payoff, _, actions) = best.expect("at least the empty play exists");

    // The all-stay baseline: the payoff of never moving for the horizon.
    let stay_payoff = play_payoff(&vec![Action::Stay; horizon_steps], state, ctx)?;
    let improves = payoff.len() > stay_payoff.len();
    Ok(PlanOutcome {
        action: actions.first().copied().unwrap_or(Action::Stay),
        actions,
        payoff,
        improves,
    })
}
