//! Seeded generators for randomized suites: small posets and lattices,
//! finite DAG games, payoff assignments and winning strategies. Everything
//! here is a pure function of the supplied RNG, so suites that fix their
//! seeds are reproducible run to run.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::games::{
    implication_game, ConwayGame, ImplicationPayoff, Move, PayoffGame, Polarity, Strategy,
};
use crate::lattice::{Elt, FiniteLattice};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Attempts to build a lattice from a random order on `n ≤ 8` elements.
/// Most random orders are not lattices; callers rejection-sample.
pub fn random_order_lattice(rng: &mut ChaCha8Rng, max_elements: usize) -> Option<FiniteLattice> {
    let n = rng.gen_range(1..=max_elements.min(8));
    let names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let mut pairs = Vec::new();
    // Random edges respecting the index order keep the relation acyclic.
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.4) {
                pairs.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    FiniteLattice::build_from_order(&names, &pairs).ok()
}

/// The lattice of down-sets of a random poset on up to `max_points ≤ 3`
/// points. Down-set lattices are always distributive, and three points
/// produce at most eight elements.
pub fn random_downset_lattice(rng: &mut ChaCha8Rng, max_points: usize) -> FiniteLattice {
    let k = rng.gen_range(0..=max_points.min(3));
    // leq[i][j]: i <= j in the generating poset.
    let mut leq = [[false; 3]; 3];
    for (i, row) in leq.iter_mut().enumerate().take(k) {
        row[i] = true;
    }
    for i in 0..k {
        for j in (i + 1)..k {
            if rng.gen_bool(0.5) {
                leq[i][j] = true;
            }
        }
    }
    // Transitive closure.
    for m in 0..k {
        for i in 0..k {
            for j in 0..k {
                if leq[i][m] && leq[m][j] {
                    leq[i][j] = true;
                }
            }
        }
    }
    let is_downset = |mask: usize| -> bool {
        for j in 0..k {
            if mask & (1 << j) != 0 {
                for i in 0..k {
                    if leq[i][j] && mask & (1 << i) == 0 {
                        return false;
                    }
                }
            }
        }
        true
    };
    let downsets: Vec<usize> = (0..1usize << k).filter(|&m| is_downset(m)).collect();
    let names: Vec<String> = downsets.iter().map(|m| format!("d{m}")).collect();
    let mut pairs = Vec::new();
    for (i, &a) in downsets.iter().enumerate() {
        for (j, &b) in downsets.iter().enumerate() {
            if i != j && a & !b == 0 {
                pairs.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    FiniteLattice::build_from_order(&names, &pairs).expect("down-sets form a lattice")
}

/// Draws lattices from seeded random orders until `count` have been built,
/// keeping only distributive ones when `distributive_only` is set.
pub fn lattice_corpus(seed: u64, count: usize, distributive_only: bool) -> Vec<FiniteLattice> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        let l = if attempts % 2 == 0 {
            random_downset_lattice(&mut rng, 3)
        } else {
            match random_order_lattice(&mut rng, 8) {
                Some(l) => l,
                None => continue,
            }
        };
        if distributive_only && !l.is_distributive() {
            continue;
        }
        out.push(l);
    }
    out
}

/// A random rooted DAG game on `2..=max_vertices` vertices. Every vertex is
/// reachable from the root and edges only go forward in vertex order, so the
/// graph is acyclic by construction.
pub fn random_game(rng: &mut ChaCha8Rng, max_vertices: usize) -> ConwayGame {
    let n = rng.gen_range(2..=max_vertices.max(2));
    let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut moves = Vec::new();
    let mut seen: BTreeSet<(u32, u32)> = BTreeSet::new();
    // Spanning edges guarantee reachability from v0.
    for to in 1..n as u32 {
        let from = rng.gen_range(0..to);
        let polarity = if rng.gen_bool(0.5) {
            Polarity::Opponent
        } else {
            Polarity::Proponent
        };
        seen.insert((from, to));
        moves.push(Move {
            from,
            to,
            polarity,
        });
    }
    // A few extra forward edges.
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let from = rng.gen_range(0..n as u32 - 1);
        let to = rng.gen_range(from + 1..n as u32);
        if !seen.insert((from, to)) {
            continue;
        }
        let polarity = if rng.gen_bool(0.5) {
            Polarity::Opponent
        } else {
            Polarity::Proponent
        };
        moves.push(Move {
            from,
            to,
            polarity,
        });
    }
    moves.sort_by_key(|m| (m.from, m.to));
    ConwayGame::new(labels, 0, moves).expect("construction is valid by design")
}

/// Random payoffs over a game's positions. When `no_bottom` is set the
/// bottom element is never assigned.
pub fn random_payoffs(
    rng: &mut ChaCha8Rng,
    game: &ConwayGame,
    lattice: &Arc<FiniteLattice>,
    no_bottom: bool,
) -> Vec<Elt> {
    let elts: Vec<Elt> = lattice
        .elements()
        .filter(|&e| !no_bottom || e != lattice.bottom())
        .collect();
    (0..game.vertex_count())
        .map(|_| *elts.choose(rng).expect("lattice has elements"))
        .collect()
}

/// Builds a random strategy on the implication game `x ⊸ z` such that every
/// play in the strategy (not only the maximal ones) ends at a position whose
/// payoff is non-bottom. Such strategies are winning, and they stay winning
/// under composition because every quiescent end of the interaction is the
/// end of some member play.
///
/// Returns `None` when even the empty strategy fails, i.e. the root payoff
/// is bottom.
pub fn random_strong_winning_strategy(
    rng: &mut ChaCha8Rng,
    x: &PayoffGame,
    z: &PayoffGame,
    mode: ImplicationPayoff,
) -> Option<Strategy> {
    let game = implication_game(x, z, mode).ok()?;
    let lattice = game.lattice();
    let bottom = lattice.bottom();
    if game.payoff(game.conway().root()) == bottom {
        return None;
    }
    let mut plays: BTreeSet<Vec<u32>> = BTreeSet::new();
    plays.insert(Vec::new());
    let mut frontier = vec![(game.conway().root(), Vec::new())];
    while let Some((pos, prefix)) = frontier.pop() {
        for &om in game.conway().moves_from(pos) {
            if game.conway().moves()[om as usize].polarity != Polarity::Opponent {
                continue;
            }
            // Answer this Opponent move with some Proponent reply landing on
            // a non-bottom payoff, if any; skip the O-move otherwise.
            if !rng.gen_bool(0.8) {
                continue;
            }
            let mid = game.conway().moves()[om as usize].to;
            let mut replies: Vec<u32> = game
                .conway()
                .moves_from(mid)
                .iter()
                .copied()
                .filter(|&pm| {
                    let mv = &game.conway().moves()[pm as usize];
                    mv.polarity == Polarity::Proponent && game.payoff(mv.to) != bottom
                })
                .collect();
            if replies.is_empty() {
                continue;
            }
            replies.sort();
            let pm = *replies.choose(rng).expect("non-empty");
            let mut play = prefix.clone();
            play.push(om);
            play.push(pm);
            let end = game.conway().moves()[pm as usize].to;
            plays.insert(play.clone());
            frontier.push((end, play));
        }
    }
    Some(Strategy::new(plays))
}
