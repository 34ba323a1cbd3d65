//! Conway games with polarity, plays, lattice-valued payoffs and the
//! dual / tensor / par / linear-implication constructions.
//!
//! A game is a finite rooted DAG of positions whose edges carry a polarity:
//! Opponent moves model the environment, Proponent moves the system. The
//! artifact only ever builds horizon-bounded games, so finiteness makes play
//! enumeration total. Payoff games attach one lattice element per position;
//! the product constructions combine component payoffs per the selected
//! combiner. Tensor and par share one graph constructor and differ only in
//! the payoff combiner.

mod strategy;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::lattice::{Elt, FiniteLattice, LatticeError};

pub use strategy::{compose, copycat, is_winning, validate_strategy, Strategy};

#[derive(Debug, Error)]
pub enum GameError {
    #[error("vertex index {0} out of range")]
    BadVertex(u32),
    #[error("duplicate move {0} -> {1}")]
    DuplicateMove(u32, u32),
    #[error("move graph has a cycle")]
    CyclicGame,
    #[error("vertex `{0}` unreachable from the root")]
    UnreachableVertex(String),
    #[error("games use different lattices")]
    LatticeMismatch,
    #[error("payoff map must cover every position ({got} of {want})")]
    PayoffIncomplete { got: usize, want: usize },
    #[error("play references moves outside the game")]
    ForeignMoves,
    #[error("invalid strategy")]
    InvalidStrategy,
    #[error("strategies do not share the middle game")]
    MiddleGameMismatch,
    #[error("synchronization exceeded {0} steps")]
    Divergence(usize),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("invalid game description: {0}")]
    Description(String),
}

pub type Result<T> = std::result::Result<T, GameError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    /// The environment (drawn as circles in diagrams); weight −1.
    Opponent,
    /// The system; weight +1.
    Proponent,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Opponent => Polarity::Proponent,
            Polarity::Proponent => Polarity::Opponent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub from: u32,
    pub to: u32,
    pub polarity: Polarity,
}

/// A rooted polarized move graph, restricted to finite DAGs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConwayGame {
    labels: Vec<String>,
    root: u32,
    moves: Vec<Move>,
    /// Outgoing move indices per vertex, ascending.
    out: Vec<Vec<u32>>,
}

impl ConwayGame {
    pub fn new(labels: Vec<String>, root: u32, moves: Vec<Move>) -> Result<Self> {
        let n = labels.len();
        if root as usize >= n {
            return Err(GameError::BadVertex(root));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut out = vec![Vec::new(); n];
        for (i, m) in moves.iter().enumerate() {
            if m.from as usize >= n {
                return Err(GameError::BadVertex(m.from));
            }
            if m.to as usize >= n {
                return Err(GameError::BadVertex(m.to));
            }
            if !seen.insert((m.from, m.to)) {
                return Err(GameError::DuplicateMove(m.from, m.to));
            }
            out[m.from as usize].push(i as u32);
        }
        let game = ConwayGame {
            labels,
            root,
            moves,
            out,
        };
        game.check_acyclic()?;
        game.check_rooted()?;
        Ok(game)
    }

    fn check_acyclic(&self) -> Result<()> {
        // Iterative DFS with colors.
        let n = self.labels.len();
        let mut color = vec![0u8; n]; // 0 white, 1 gray, 2 black
        for start in 0..n {
            if color[start] != 0 {
                continue;
            }
            let mut stack = vec![(start as u32, 0usize)];
            color[start] = 1;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < self.out[v as usize].len() {
                    let mi = self.out[v as usize][*next];
                    *next += 1;
                    let to = self.moves[mi as usize].to;
                    match color[to as usize] {
                        0 => {
                            color[to as usize] = 1;
                            stack.push((to, 0));
                        }
                        1 => return Err(GameError::CyclicGame),
                        _ => {}
                    }
                } else {
                    color[v as usize] = 2;
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    fn check_rooted(&self) -> Result<()> {
        let n = self.labels.len();
        let mut seen = vec![false; n];
        let mut stack = vec![self.root];
        seen[self.root as usize] = true;
        while let Some(v) = stack.pop() {
            for &mi in &self.out[v as usize] {
                let to = self.moves[mi as usize].to;
                if !seen[to as usize] {
                    seen[to as usize] = true;
                    stack.push(to);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(GameError::UnreachableVertex(self.labels[i].clone()));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn moves_from(&self, v: u32) -> &[u32] {
        &self.out[v as usize]
    }

    pub fn label(&self, v: u32) -> &str {
        &self.labels[v as usize]
    }

    /// Same graph with every move polarity reversed.
    pub fn dual(&self) -> ConwayGame {
        ConwayGame {
            labels: self.labels.clone(),
            root: self.root,
            moves: self
                .moves
                .iter()
                .map(|m| Move {
                    from: m.from,
                    to: m.to,
                    polarity: m.polarity.flip(),
                })
                .collect(),
            out: self.out.clone(),
        }
    }
}

/// A play: a path of move indices starting at the root.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Play {
    moves: Vec<u32>,
}

impl Play {
    pub fn new(moves: Vec<u32>) -> Self {
        Play { moves }
    }

    pub fn moves(&self) -> &[u32] {
        &self.moves
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Positions visited, root first.
    pub fn positions(&self, g: &ConwayGame) -> Vec<u32> {
        let mut out = vec![g.root()];
        for &mi in &self.moves {
            out.push(g.moves()[mi as usize].to);
        }
        out
    }

    pub fn end_position(&self, g: &ConwayGame) -> u32 {
        self.moves
            .last()
            .map(|&mi| g.moves()[mi as usize].to)
            .unwrap_or(g.root())
    }

    /// Adjacent edges of different polarities.
    pub fn is_alternating(&self, g: &ConwayGame) -> bool {
        self.moves.windows(2).all(|w| {
            g.moves()[w[0] as usize].polarity != g.moves()[w[1] as usize].polarity
        })
    }
}

/// All paths from the root up to `max_length` moves, in lexicographic order
/// by move index sequence; `alternating_only` filters per the play rule.
pub fn enumerate_plays(g: &ConwayGame, max_length: usize, alternating_only: bool) -> Vec<Play> {
    let mut out = Vec::new();
    let mut current: Vec<u32> = Vec::new();
    fn rec(
        g: &ConwayGame,
        v: u32,
        max_length: usize,
        alternating_only: bool,
        current: &mut Vec<u32>,
        out: &mut Vec<Play>,
    ) {
        out.push(Play::new(current.clone()));
        if current.len() == max_length {
            return;
        }
        let last_pol = current
            .last()
            .map(|&mi| g.moves()[mi as usize].polarity);
        for &mi in g.moves_from(v) {
            let m = &g.moves()[mi as usize];
            if alternating_only {
                if let Some(p) = last_pol {
                    if m.polarity == p {
                        continue;
                    }
                }
            }
            current.push(mi);
            rec(g, m.to, max_length, alternating_only, current, out);
            current.pop();
        }
    }
    rec(g, g.root(), max_length, alternating_only, &mut current, &mut out);
    out
}

/// A Conway game with a lattice element at every position.
#[derive(Debug, Clone)]
pub struct PayoffGame {
    conway: ConwayGame,
    payoffs: Vec<Elt>,
    lattice: Arc<FiniteLattice>,
}

impl PayoffGame {
    pub fn new(conway: ConwayGame, payoffs: Vec<Elt>, lattice: Arc<FiniteLattice>) -> Result<Self> {
        if payoffs.len() != conway.vertex_count() {
            return Err(GameError::PayoffIncomplete {
                got: payoffs.len(),
                want: conway.vertex_count(),
            });
        }
        for &p in &payoffs {
            if !lattice.owns(p) {
                return Err(GameError::LatticeMismatch);
            }
        }
        Ok(PayoffGame {
            conway,
            payoffs,
            lattice,
        })
    }

    pub fn conway(&self) -> &ConwayGame {
        &self.conway
    }

    pub fn payoff(&self, v: u32) -> Elt {
        self.payoffs[v as usize]
    }

    pub fn lattice(&self) -> &Arc<FiniteLattice> {
        &self.lattice
    }
}

/// Dual payoff game: polarities reversed, payoff map carried unchanged.
/// Negation is applied at combination time by the par/implication payoffs.
pub fn dual(g: &PayoffGame) -> PayoffGame {
    PayoffGame {
        conway: g.conway.dual(),
        payoffs: g.payoffs.clone(),
        lattice: g.lattice.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Component {
    Left,
    Right,
}

/// Deterministic product-graph layout shared by tensor, par, implication,
/// copycat and composition. Position (ix, iy) has index `ix * ny + iy`;
/// moves are enumerated position by position, left component first.
pub(crate) struct ProductLayout {
    ny: u32,
    index: HashMap<(u32, Component, u32), u32>,
}

impl ProductLayout {
    pub(crate) fn position(&self, ix: u32, iy: u32) -> u32 {
        ix * self.ny + iy
    }

    pub(crate) fn move_index(&self, pos: u32, comp: Component, component_move: u32) -> Option<u32> {
        self.index.get(&(pos, comp, component_move)).copied()
    }
}

pub(crate) fn product(x: &ConwayGame, y: &ConwayGame) -> (ConwayGame, ProductLayout) {
    let nx = x.vertex_count() as u32;
    let ny = y.vertex_count() as u32;
    let mut labels = Vec::with_capacity((nx * ny) as usize);
    for ix in 0..nx {
        for iy in 0..ny {
            labels.push(format!("({},{})", x.label(ix), y.label(iy)));
        }
    }
    let mut moves = Vec::new();
    let mut index = HashMap::new();
    for ix in 0..nx {
        for iy in 0..ny {
            let pos = ix * ny + iy;
            for &mi in x.moves_from(ix) {
                let m = &x.moves()[mi as usize];
                index.insert((pos, Component::Left, mi), moves.len() as u32);
                moves.push(Move {
                    from: pos,
                    to: m.to * ny + iy,
                    polarity: m.polarity,
                });
            }
            for &mi in y.moves_from(iy) {
                let m = &y.moves()[mi as usize];
                index.insert((pos, Component::Right, mi), moves.len() as u32);
                moves.push(Move {
                    from: pos,
                    to: ix * ny + m.to,
                    polarity: m.polarity,
                });
            }
        }
    }
    let root = x.root() * ny + y.root();
    let game = ConwayGame::new(labels, root, moves)
        .expect("product of valid DAG games is a valid DAG game");
    (game, ProductLayout { ny, index })
}

/// Payoff combiner for the tensor product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorPayoff {
    /// k(x⊗y) = k(x) ∧ k(y).
    Meet,
    /// k(x⊗y) = k(x) ∨ k(y), the inverted pairing.
    Join,
}

/// Payoff combiner for par; the graph is the same as tensor's.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParPayoff {
    /// k = ¬k(x) ∨ k(y); pairs with [`TensorPayoff::Meet`].
    ComplementJoin,
    /// k = ¬k(x) ∧ k(y); pairs with [`TensorPayoff::Join`].
    ComplementMeet,
}

/// Payoff selection for the implication game X ⊸ Z = X^⊥ ⅋ Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImplicationPayoff {
    /// k = k(x) ⇒ k(z), the residual form.
    Residual,
    /// k = ¬k(x) ∨ k(z).
    ComplementJoin,
    /// k = ¬k(x) ∧ k(z).
    ComplementMeet,
}

fn combine_product(
    x: &PayoffGame,
    y: &PayoffGame,
    combine: impl Fn(&FiniteLattice, Elt, Elt) -> Result<Elt>,
) -> Result<PayoffGame> {
    if !Arc::ptr_eq(&x.lattice, &y.lattice) {
        return Err(GameError::LatticeMismatch);
    }
    let (conway, _) = product(&x.conway, &y.conway);
    let ny = y.conway.vertex_count() as u32;
    let mut payoffs = Vec::with_capacity(conway.vertex_count());
    for ix in 0..x.conway.vertex_count() as u32 {
        for iy in 0..ny {
            payoffs.push(combine(&x.lattice, x.payoff(ix), y.payoff(iy))?);
        }
    }
    PayoffGame::new(conway, payoffs, x.lattice.clone())
}

/// Tensor product: positions V_X × V_Y, a move changes exactly one
/// coordinate, polarity inherited, payoffs combined per `mode`.
pub fn tensor(x: &PayoffGame, y: &PayoffGame, mode: TensorPayoff) -> Result<PayoffGame> {
    combine_product(x, y, |l, a, b| {
        Ok(match mode {
            TensorPayoff::Meet => l.meet(a, b)?,
            TensorPayoff::Join => l.join(a, b)?,
        })
    })
}

/// Par: identical graph to tensor; payoff uses the pseudo-complement of the
/// left component, so the lattice must be Brouwer.
pub fn par(x: &PayoffGame, y: &PayoffGame, mode: ParPayoff) -> Result<PayoffGame> {
    if !x.lattice.is_distributive() {
        return Err(GameError::Lattice(LatticeError::NotBrouwer));
    }
    combine_product(x, y, |l, a, b| {
        let na = l.pseudo_complement(a)?;
        Ok(match mode {
            ParPayoff::ComplementJoin => l.join(na, b)?,
            ParPayoff::ComplementMeet => l.meet(na, b)?,
        })
    })
}

/// X ⊸ Z: the par of `dual(x)` and `z` with the selected payoff.
pub fn implication_game(
    x: &PayoffGame,
    z: &PayoffGame,
    mode: ImplicationPayoff,
) -> Result<PayoffGame> {
    if !x.lattice.is_distributive() {
        return Err(GameError::Lattice(LatticeError::NotBrouwer));
    }
    let dx = dual(x);
    combine_product(&dx, z, |l, a, b| {
        Ok(match mode {
            ImplicationPayoff::Residual => l.implication(a, b)?,
            ImplicationPayoff::ComplementJoin => l.join(l.pseudo_complement(a)?, b)?,
            ImplicationPayoff::ComplementMeet => l.meet(l.pseudo_complement(a)?, b)?,
        })
    })
}

#[derive(Deserialize)]
struct MoveFile {
    from: String,
    to: String,
    polarity: i8,
}

#[derive(Deserialize)]
struct GameFile {
    vertices: Vec<String>,
    root: String,
    moves: Vec<MoveFile>,
    #[serde(default)]
    payoff: Option<BTreeMap<String, String>>,
}

/// Parses the game description format: vertices, root, moves with polarity
/// (−1 Opponent, +1 Proponent), optional payoff map naming lattice elements.
pub fn game_from_description(json: &str) -> Result<ConwayGame> {
    let (game, _) = parse_description(json)?;
    Ok(game)
}

/// As [`game_from_description`], resolving the payoff map against `lattice`.
/// Positions absent from the map default to the lattice bottom.
pub fn payoff_game_from_description(
    json: &str,
    lattice: &Arc<FiniteLattice>,
) -> Result<PayoffGame> {
    let (game, payoff_names) = parse_description(json)?;
    let payoff_names =
        payoff_names.ok_or_else(|| GameError::Description("missing payoff map".into()))?;
    let mut payoffs = vec![lattice.bottom(); game.vertex_count()];
    for (vertex, element) in &payoff_names {
        let v = (0..game.vertex_count() as u32)
            .find(|&v| game.label(v) == vertex)
            .ok_or_else(|| GameError::Description(format!("unknown vertex `{vertex}`")))?;
        payoffs[v as usize] = lattice.element(element)?;
    }
    PayoffGame::new(game, payoffs, lattice.clone())
}

fn parse_description(json: &str) -> Result<(ConwayGame, Option<BTreeMap<String, String>>)> {
    let file: GameFile =
        serde_json::from_str(json).map_err(|e| GameError::Description(e.to_string()))?;
    let index: BTreeMap<&str, u32> = file
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i as u32))
        .collect();
    let resolve = |name: &str| -> Result<u32> {
        index
            .get(name)
            .copied()
            .ok_or_else(|| GameError::Description(format!("unknown vertex `{name}`")))
    };
    let root = resolve(&file.root)?;
    let mut moves = Vec::with_capacity(file.moves.len());
    for m in &file.moves {
        let polarity = match m.polarity {
            -1 => Polarity::Opponent,
            1 => Polarity::Proponent,
            other => {
                return Err(GameError::Description(format!(
                    "polarity must be -1 or 1, got {other}"
                )))
            }
        };
        moves.push(Move {
            from: resolve(&m.from)?,
            to: resolve(&m.to)?,
            polarity,
        });
    }
    let game = ConwayGame::new(file.vertices, root, moves)?;
    Ok((game, file.payoff))
}

#[cfg(test)]
mod tests;
