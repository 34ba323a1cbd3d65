//! Strategies: deterministic, even-prefix-closed sets of alternating plays,
//! plus the winning test, the copycat strategy and interaction-and-hiding
//! composition.

use std::collections::{BTreeSet, HashSet};

use super::{product, Component, ConwayGame, GameError, PayoffGame, Polarity, Result};

/// A set of alternating plays of even length, each beginning with an
/// Opponent move. Plays are stored as move-index sequences of the game the
/// strategy belongs to; equality of strategies is equality of play sets
/// under the game's canonical move ordering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    plays: BTreeSet<Vec<u32>>,
}

impl Strategy {
    pub fn new(plays: BTreeSet<Vec<u32>>) -> Self {
        Strategy { plays }
    }

    /// The minimal strategy: just the empty play.
    pub fn minimal() -> Self {
        let mut plays = BTreeSet::new();
        plays.insert(Vec::new());
        Strategy { plays }
    }

    pub fn plays(&self) -> &BTreeSet<Vec<u32>> {
        &self.plays
    }

    pub fn contains(&self, play: &[u32]) -> bool {
        self.plays.contains(play)
    }

    /// Plays with no extension within the strategy.
    pub fn maximal_plays(&self) -> Vec<&Vec<u32>> {
        self.plays
            .iter()
            .filter(|p| {
                !self
                    .plays
                    .iter()
                    .any(|q| q.len() > p.len() && q.starts_with(p))
            })
            .collect()
    }
}

/// Checks a play is a root path of `g`; foreign move sequences are an error
/// rather than a `false`.
fn check_path(g: &ConwayGame, play: &[u32]) -> Result<()> {
    let mut at = g.root();
    for &mi in play {
        let m = g
            .moves()
            .get(mi as usize)
            .ok_or(GameError::ForeignMoves)?;
        if m.from != at {
            return Err(GameError::ForeignMoves);
        }
        at = m.to;
    }
    Ok(())
}

/// True iff `s` is a strategy of `g`: non-empty, all plays alternating,
/// even, starting with an Opponent move, closed under even prefixes, and
/// deterministic (s·m·n ∈ σ and s·m·n′ ∈ σ implies n = n′).
pub fn validate_strategy(g: &ConwayGame, s: &Strategy) -> Result<bool> {
    if s.plays.is_empty() {
        return Ok(false);
    }
    for play in &s.plays {
        check_path(g, play)?;
        if play.len() % 2 != 0 {
            return Ok(false);
        }
        if let Some(&first) = play.first() {
            if g.moves()[first as usize].polarity != Polarity::Opponent {
                return Ok(false);
            }
        }
        let alternating = play
            .windows(2)
            .all(|w| g.moves()[w[0] as usize].polarity != g.moves()[w[1] as usize].polarity);
        if !alternating {
            return Ok(false);
        }
        if play.len() >= 2 && !s.plays.contains(&play[..play.len() - 2]) {
            return Ok(false);
        }
    }
    // Determinism: a common odd prefix forces the same response.
    let mut responses: std::collections::HashMap<&[u32], u32> = std::collections::HashMap::new();
    for play in &s.plays {
        if play.is_empty() {
            continue;
        }
        let (prefix, last) = (&play[..play.len() - 1], play[play.len() - 1]);
        if let Some(&prev) = responses.get(prefix) {
            if prev != last {
                return Ok(false);
            }
        } else {
            responses.insert(prefix, last);
        }
    }
    Ok(true)
}

/// True iff every play of `s` that is maximal in `s` ends in a position of
/// payoff different from the lattice bottom.
pub fn is_winning(g: &PayoffGame, s: &Strategy) -> Result<bool> {
    if !validate_strategy(g.conway(), s)? {
        return Err(GameError::InvalidStrategy);
    }
    let bottom = g.lattice().bottom();
    for play in s.maximal_plays() {
        let end = super::Play::new(play.clone()).end_position(g.conway());
        if g.payoff(end) == bottom {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The copycat strategy on X ⊸ X: every Opponent move in one component is
/// answered by the mirrored move in the other, so both components sit at the
/// same position after each even point.
pub fn copycat(x: &PayoffGame) -> Strategy {
    let cx = x.conway();
    let (_, layout) = product(&cx.dual(), cx);
    let mut plays: BTreeSet<Vec<u32>> = BTreeSet::new();
    plays.insert(Vec::new());
    let mut frontier: Vec<(u32, Vec<u32>)> = vec![(cx.root(), Vec::new())];
    while let Some((v, prefix)) = frontier.pop() {
        for comp in [Component::Left, Component::Right] {
            for &mi in cx.moves_from(v) {
                let m = &cx.moves()[mi as usize];
                // The left component is the dual; its polarities are flipped.
                let pol = match comp {
                    Component::Left => m.polarity.flip(),
                    Component::Right => m.polarity,
                };
                if pol != Polarity::Opponent {
                    continue;
                }
                let diag = layout.position(v, v);
                let o_move = layout
                    .move_index(diag, comp, mi)
                    .expect("diagonal move exists in product");
                let (after, mirror_comp) = match comp {
                    Component::Left => (layout.position(m.to, v), Component::Right),
                    Component::Right => (layout.position(v, m.to), Component::Left),
                };
                let p_move = layout
                    .move_index(after, mirror_comp, mi)
                    .expect("mirror move exists in product");
                let mut play = prefix.clone();
                play.push(o_move);
                play.push(p_move);
                plays.insert(play.clone());
                frontier.push((m.to, play));
            }
        }
    }
    Strategy::new(plays)
}

fn all_prefixes(s: &Strategy) -> HashSet<Vec<u32>> {
    let mut out = HashSet::new();
    for play in s.plays() {
        for len in 0..=play.len() {
            out.insert(play[..len].to_vec());
        }
    }
    out
}

/// Interaction-and-hiding composition of `sigma : X ⊸ Y` and `rho : Y ⊸ Z`
/// into a strategy on X ⊸ Z.
///
/// A play u over X,Z belongs to the result iff some synchronization sequence
/// over X,Y,Z projects into `sigma` on the X,Y components, into `rho` on the
/// Y,Z components, and onto u on X,Z. The move indexing of the three
/// implication games is reconstructed here with the same deterministic
/// product layout used by the game constructors.
pub fn compose(
    x: &PayoffGame,
    y: &PayoffGame,
    z: &PayoffGame,
    sigma: &Strategy,
    rho: &Strategy,
) -> Result<Strategy> {
    let (xy_game, lay_xy) = product(&x.conway().dual(), y.conway());
    let (yz_game, lay_yz) = product(&y.conway().dual(), z.conway());
    let (_, lay_xz) = product(&x.conway().dual(), z.conway());

    for play in sigma.plays() {
        if check_path(&xy_game, play).is_err() {
            return Err(GameError::MiddleGameMismatch);
        }
    }
    for play in rho.plays() {
        if check_path(&yz_game, play).is_err() {
            return Err(GameError::MiddleGameMismatch);
        }
    }
    if !validate_strategy(&xy_game, sigma)? || !validate_strategy(&yz_game, rho)? {
        return Err(GameError::InvalidStrategy);
    }

    let sigma_prefixes = all_prefixes(sigma);
    let rho_prefixes = all_prefixes(rho);
    let bound = x.conway().vertex_count() * y.conway().vertex_count() * z.conway().vertex_count();

    struct State {
        xpos: u32,
        ypos: u32,
        zpos: u32,
        xy: Vec<u32>,
        yz: Vec<u32>,
        xz: Vec<u32>,
    }

    let mut result: BTreeSet<Vec<u32>> = BTreeSet::new();
    let mut stack = vec![State {
        xpos: x.conway().root(),
        ypos: y.conway().root(),
        zpos: z.conway().root(),
        xy: Vec::new(),
        yz: Vec::new(),
        xz: Vec::new(),
    }];
    while let Some(st) = stack.pop() {
        if st.xy.len() + st.yz.len() + st.xz.len() > 2 * bound {
            return Err(GameError::Divergence(bound));
        }
        if sigma.contains(&st.xy) && rho.contains(&st.yz) {
            result.insert(st.xz.clone());
        }
        // The visible X,Z projection must stay a legal alternating play:
        // the environment moves at even depth, the composite at odd depth.
        // Without this discipline the environment could move twice in a row
        // around a hidden Y-dialogue and spoil determinism of the result.
        let visible_ok = |pol: Polarity, xz_len: usize| {
            if xz_len % 2 == 0 {
                pol == Polarity::Opponent
            } else {
                pol == Polarity::Proponent
            }
        };
        // X-moves advance the X,Y and X,Z projections. In both implication
        // games the X component is dualized, so its polarity is flipped.
        for &mi in x.conway().moves_from(st.xpos) {
            let m = &x.conway().moves()[mi as usize];
            if !visible_ok(m.polarity.flip(), st.xz.len()) {
                continue;
            }
            let to = m.to;
            let xy_mi = lay_xy
                .move_index(lay_xy.position(st.xpos, st.ypos), Component::Left, mi)
                .expect("product move");
            let mut xy = st.xy.clone();
            xy.push(xy_mi);
            if !sigma_prefixes.contains(&xy) {
                continue;
            }
            let xz_mi = lay_xz
                .move_index(lay_xz.position(st.xpos, st.zpos), Component::Left, mi)
                .expect("product move");
            let mut xz = st.xz.clone();
            xz.push(xz_mi);
            stack.push(State {
                xpos: to,
                ypos: st.ypos,
                zpos: st.zpos,
                xy,
                yz: st.yz.clone(),
                xz,
            });
        }
        // Y-moves are hidden: they advance both the X,Y and Y,Z projections.
        for &mi in y.conway().moves_from(st.ypos) {
            let to = y.conway().moves()[mi as usize].to;
            let xy_mi = lay_xy
                .move_index(lay_xy.position(st.xpos, st.ypos), Component::Right, mi)
                .expect("product move");
            let mut xy = st.xy.clone();
            xy.push(xy_mi);
            if !sigma_prefixes.contains(&xy) {
                continue;
            }
            let yz_mi = lay_yz
                .move_index(lay_yz.position(st.ypos, st.zpos), Component::Left, mi)
                .expect("product move");
            let mut yz = st.yz.clone();
            yz.push(yz_mi);
            if !rho_prefixes.contains(&yz) {
                continue;
            }
            stack.push(State {
                xpos: st.xpos,
                ypos: to,
                zpos: st.zpos,
                xy,
                yz,
                xz: st.xz.clone(),
            });
        }
        // Z-moves advance the Y,Z and X,Z projections.
        for &mi in z.conway().moves_from(st.zpos) {
            let m = &z.conway().moves()[mi as usize];
            if !visible_ok(m.polarity, st.xz.len()) {
                continue;
            }
            let to = m.to;
            let yz_mi = lay_yz
                .move_index(lay_yz.position(st.ypos, st.zpos), Component::Right, mi)
                .expect("product move");
            let mut yz = st.yz.clone();
            yz.push(yz_mi);
            if !rho_prefixes.contains(&yz) {
                continue;
            }
            let xz_mi = lay_xz
                .move_index(lay_xz.position(st.xpos, st.zpos), Component::Right, mi)
                .expect("product move");
            let mut xz = st.xz.clone();
            xz.push(xz_mi);
            stack.push(State {
                xpos: st.xpos,
                ypos: st.ypos,
                zpos: to,
                xy: st.xy.clone(),
                yz,
                xz,
            });
        }
    }
    Ok(Strategy::new(result))
}
