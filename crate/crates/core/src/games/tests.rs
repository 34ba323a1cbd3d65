use std::collections::BTreeSet;
use std::sync::Arc;

use super::*;
use crate::lattice::FiniteLattice;
use crate::testkit;

fn scale_lattice() -> Arc<FiniteLattice> {
    Arc::new(FiniteLattice::chain(&["0", "half", "1"]).unwrap())
}

fn single_move_game(polarity: Polarity, lattice: &Arc<FiniteLattice>, payoffs: [&str; 2]) -> PayoffGame {
    let conway = ConwayGame::new(
        vec!["s".into(), "t".into()],
        0,
        vec![Move {
            from: 0,
            to: 1,
            polarity,
        }],
    )
    .unwrap();
    let payoffs = payoffs
        .iter()
        .map(|n| lattice.element(n).unwrap())
        .collect();
    PayoffGame::new(conway, payoffs, lattice.clone()).unwrap()
}

#[test]
fn dual_is_an_involution() {
    let l = scale_lattice();
    let g = single_move_game(Polarity::Proponent, &l, ["half", "1"]);
    let dd = dual(&dual(&g));
    assert_eq!(dd.conway(), g.conway());
    assert_eq!(dd.payoff(0), g.payoff(0));
    assert_eq!(dd.payoff(1), g.payoff(1));
}

#[test]
fn dual_flips_single_move() {
    let l = scale_lattice();
    let g = single_move_game(Polarity::Proponent, &l, ["half", "1"]);
    let d = dual(&g);
    assert_eq!(d.conway().moves()[0].polarity, Polarity::Opponent);
}

#[test]
fn dual_preserves_alternating_plays_with_flipped_polarities() {
    let mut rng = testkit::rng(11);
    for _ in 0..20 {
        let g = testkit::random_game(&mut rng, 5);
        let d = g.dual();
        let plays = enumerate_plays(&g, 4, true);
        let dual_plays = enumerate_plays(&d, 4, true);
        assert_eq!(plays, dual_plays);
        for p in &plays {
            for &mi in p.moves() {
                assert_eq!(
                    g.moves()[mi as usize].polarity,
                    d.moves()[mi as usize].polarity.flip()
                );
            }
        }
    }
}

#[test]
fn tensor_with_unit_game_relabels_original() {
    let l = scale_lattice();
    let unit = PayoffGame::new(
        ConwayGame::new(vec!["u".into()], 0, vec![]).unwrap(),
        vec![l.top()],
        l.clone(),
    )
    .unwrap();
    let g = single_move_game(Polarity::Opponent, &l, ["half", "1"]);
    let t = tensor(&g, &unit, TensorPayoff::Meet).unwrap();
    assert_eq!(t.conway().vertex_count(), g.conway().vertex_count());
    assert_eq!(t.conway().moves().len(), 1);
    assert_eq!(t.conway().moves()[0].polarity, Polarity::Opponent);
    assert_eq!(t.payoff(0), g.payoff(0));
    assert_eq!(t.payoff(1), g.payoff(1));
}

#[test]
fn tensor_of_two_single_move_games_has_four_positions_and_moves() {
    let l = scale_lattice();
    let x = single_move_game(Polarity::Opponent, &l, ["half", "1"]);
    let y = single_move_game(Polarity::Proponent, &l, ["1", "half"]);
    let t = tensor(&x, &y, TensorPayoff::Meet).unwrap();
    assert_eq!(t.conway().vertex_count(), 4);
    assert_eq!(t.conway().moves().len(), 4);
}

#[test]
fn tensor_meet_payoff_on_truth_scale() {
    // k_X = half and k_Y = 1 combine to half under conjunction.
    let l = scale_lattice();
    let x = single_move_game(Polarity::Opponent, &l, ["half", "half"]);
    let y = single_move_game(Polarity::Proponent, &l, ["1", "1"]);
    let t = tensor(&x, &y, TensorPayoff::Meet).unwrap();
    for v in 0..4 {
        assert_eq!(t.payoff(v), l.element("half").unwrap());
    }
    let j = tensor(&x, &y, TensorPayoff::Join).unwrap();
    for v in 0..4 {
        assert_eq!(j.payoff(v), l.element("1").unwrap());
    }
}

#[test]
fn tensor_rejects_mixed_lattices() {
    let l1 = scale_lattice();
    let l2 = scale_lattice();
    let x = single_move_game(Polarity::Opponent, &l1, ["half", "1"]);
    let y = single_move_game(Polarity::Proponent, &l2, ["half", "1"]);
    assert!(matches!(
        tensor(&x, &y, TensorPayoff::Meet).unwrap_err(),
        GameError::LatticeMismatch
    ));
}

#[test]
fn par_payoffs_on_boolean_lattice() {
    let l = Arc::new(FiniteLattice::powerset(&["g"]).unwrap());
    // k_X = {g}, k_Y = {}: complement-join gives {}.
    let x = single_move_game(Polarity::Opponent, &l, ["{g}", "{g}"]);
    let y = single_move_game(Polarity::Proponent, &l, ["{}", "{}"]);
    let p = par(&x, &y, ParPayoff::ComplementJoin).unwrap();
    for v in 0..4 {
        assert_eq!(p.payoff(v), l.bottom());
    }
}

#[test]
fn par_complement_join_with_bottom_left_is_top() {
    let l = scale_lattice();
    let x = single_move_game(Polarity::Opponent, &l, ["0", "0"]);
    let y = single_move_game(Polarity::Proponent, &l, ["half", "half"]);
    let p = par(&x, &y, ParPayoff::ComplementJoin).unwrap();
    for v in 0..4 {
        assert_eq!(p.payoff(v), l.top());
    }
    // Complement-meet instead keeps the right payoff: ¬0 ∧ half = half.
    let m = par(&x, &y, ParPayoff::ComplementMeet).unwrap();
    for v in 0..4 {
        assert_eq!(m.payoff(v), l.element("half").unwrap());
    }
}

#[test]
fn par_requires_brouwer_lattice() {
    let m3 = Arc::new(
        FiniteLattice::build_from_order(
            &["0", "a", "b", "c", "1"],
            &[
                ("0", "a"),
                ("0", "b"),
                ("0", "c"),
                ("a", "1"),
                ("b", "1"),
                ("c", "1"),
            ],
        )
        .unwrap(),
    );
    let x = single_move_game(Polarity::Opponent, &m3, ["a", "b"]);
    let y = single_move_game(Polarity::Proponent, &m3, ["c", "1"]);
    assert!(par(&x, &y, ParPayoff::ComplementJoin).is_err());
}

#[test]
fn implication_residual_payoffs() {
    let l = scale_lattice();
    // Equal payoffs at a pair give top: a ⇒ a = 1.
    let x = single_move_game(Polarity::Opponent, &l, ["half", "half"]);
    let z = single_move_game(Polarity::Proponent, &l, ["half", "half"]);
    let g = implication_game(&x, &z, ImplicationPayoff::Residual).unwrap();
    for v in 0..4 {
        assert_eq!(g.payoff(v), l.top());
    }
    // k_X = 1, k_Z = half: max{c : 1 ∧ c ≤ half} = half.
    let x1 = single_move_game(Polarity::Opponent, &l, ["1", "1"]);
    let zh = single_move_game(Polarity::Proponent, &l, ["half", "half"]);
    let gh = implication_game(&x1, &zh, ImplicationPayoff::Residual).unwrap();
    for v in 0..4 {
        assert_eq!(gh.payoff(v), l.element("half").unwrap());
    }
}

#[test]
fn implication_graph_swaps_to_dual() {
    // The graph of X ⊸ Z equals the graph of Z ⊸ X under the coordinate
    // swap with all polarities reversed.
    let l = scale_lattice();
    let mut rng = testkit::rng(23);
    for _ in 0..10 {
        let cx = testkit::random_game(&mut rng, 4);
        let cz = testkit::random_game(&mut rng, 4);
        let x = PayoffGame::new(cx.clone(), vec![l.top(); cx.vertex_count()], l.clone()).unwrap();
        let z = PayoffGame::new(cz.clone(), vec![l.top(); cz.vertex_count()], l.clone()).unwrap();
        let xz = implication_game(&x, &z, ImplicationPayoff::Residual).unwrap();
        let zx = implication_game(&z, &x, ImplicationPayoff::Residual).unwrap();
        let nz = cz.vertex_count() as u32;
        let nx = cx.vertex_count() as u32;
        let swap = |pos: u32| -> u32 {
            let (iz, ix) = (pos / nx, pos % nx);
            ix * nz + iz
        };
        let mut swapped: Vec<(u32, u32, Polarity)> = zx
            .conway()
            .moves()
            .iter()
            .map(|m| (swap(m.from), swap(m.to), m.polarity.flip()))
            .collect();
        swapped.sort();
        let mut original: Vec<(u32, u32, Polarity)> = xz
            .conway()
            .moves()
            .iter()
            .map(|m| (m.from, m.to, m.polarity))
            .collect();
        original.sort();
        assert_eq!(original, swapped);
    }
}

#[test]
fn enumerate_plays_trivial_cases() {
    let l = scale_lattice();
    let g = single_move_game(Polarity::Opponent, &l, ["half", "1"]);
    let plays = enumerate_plays(g.conway(), 0, false);
    assert_eq!(plays, vec![Play::new(vec![])]);
    let plays = enumerate_plays(g.conway(), 5, false);
    assert_eq!(plays.len(), 2);
}

#[test]
fn enumerate_plays_on_product_of_single_moves() {
    // Alternating plays of length <= 2: empty, 2 single moves, and the two
    // O-then-P / P-then-O interleavings.
    let l = scale_lattice();
    let x = single_move_game(Polarity::Opponent, &l, ["half", "1"]);
    let y = single_move_game(Polarity::Proponent, &l, ["half", "1"]);
    let t = tensor(&x, &y, TensorPayoff::Meet).unwrap();
    let plays = enumerate_plays(t.conway(), 2, true);
    assert_eq!(plays.len(), 5);
    assert_eq!(plays.iter().filter(|p| p.len() == 2).count(), 2);
    // Same-polarity components admit no alternating interleaving.
    let y2 = single_move_game(Polarity::Opponent, &l, ["half", "1"]);
    let t2 = tensor(&x, &y2, TensorPayoff::Meet).unwrap();
    let plays2 = enumerate_plays(t2.conway(), 2, true);
    assert_eq!(plays2.iter().filter(|p| p.len() == 2).count(), 0);
}

fn two_round_game(l: &Arc<FiniteLattice>, end_payoff: &str) -> PayoffGame {
    // root -O-> a -P-> b with configurable end payoff.
    let conway = ConwayGame::new(
        vec!["r".into(), "a".into(), "b".into()],
        0,
        vec![
            Move {
                from: 0,
                to: 1,
                polarity: Polarity::Opponent,
            },
            Move {
                from: 1,
                to: 2,
                polarity: Polarity::Proponent,
            },
        ],
    )
    .unwrap();
    let payoffs = vec![
        l.element("half").unwrap(),
        l.element("half").unwrap(),
        l.element(end_payoff).unwrap(),
    ];
    PayoffGame::new(conway, payoffs, l.clone()).unwrap()
}

#[test]
fn validate_strategy_examples() {
    let l = scale_lattice();
    let g = two_round_game(&l, "1");
    assert!(validate_strategy(g.conway(), &Strategy::minimal()).unwrap());

    let mut plays = BTreeSet::new();
    plays.insert(vec![]);
    plays.insert(vec![0, 1]);
    assert!(validate_strategy(g.conway(), &Strategy::new(plays)).unwrap());

    // Missing even prefix.
    let mut no_prefix = BTreeSet::new();
    no_prefix.insert(vec![0, 1]);
    assert!(!validate_strategy(g.conway(), &Strategy::new(no_prefix)).unwrap());

    // Foreign move indices are an error, not a `false`.
    let mut foreign = BTreeSet::new();
    foreign.insert(vec![7]);
    assert!(matches!(
        validate_strategy(g.conway(), &Strategy::new(foreign)).unwrap_err(),
        GameError::ForeignMoves
    ));
}

#[test]
fn nondeterministic_strategy_is_invalid() {
    // Two P-responses to one O-move: n != n'.
    let l = scale_lattice();
    let conway = ConwayGame::new(
        vec!["r".into(), "a".into(), "b".into(), "c".into()],
        0,
        vec![
            Move {
                from: 0,
                to: 1,
                polarity: Polarity::Opponent,
            },
            Move {
                from: 1,
                to: 2,
                polarity: Polarity::Proponent,
            },
            Move {
                from: 1,
                to: 3,
                polarity: Polarity::Proponent,
            },
        ],
    )
    .unwrap();
    let g = PayoffGame::new(conway, vec![l.top(); 4], l.clone()).unwrap();
    let mut plays = BTreeSet::new();
    plays.insert(vec![]);
    plays.insert(vec![0, 1]);
    plays.insert(vec![0, 2]);
    assert!(!validate_strategy(g.conway(), &Strategy::new(plays)).unwrap());
}

#[test]
fn winning_depends_on_maximal_end_payoffs() {
    let l = scale_lattice();
    let mut plays = BTreeSet::new();
    plays.insert(vec![]);
    plays.insert(vec![0, 1]);
    let s = Strategy::new(plays);

    let top_end = two_round_game(&l, "1");
    assert!(is_winning(&top_end, &s).unwrap());

    let bottom_end = two_round_game(&l, "0");
    assert!(!is_winning(&bottom_end, &s).unwrap());

    // A position of payoff half still wins on the truth scale.
    let half_end = two_round_game(&l, "half");
    assert!(is_winning(&half_end, &s).unwrap());
}

#[test]
fn is_winning_rejects_invalid_strategies() {
    let l = scale_lattice();
    let g = two_round_game(&l, "1");
    let mut plays = BTreeSet::new();
    plays.insert(vec![0, 1]); // no empty prefix
    assert!(matches!(
        is_winning(&g, &Strategy::new(plays)).unwrap_err(),
        GameError::InvalidStrategy
    ));
}

#[test]
fn copycat_on_one_move_game() {
    let l = scale_lattice();
    let g = single_move_game(Polarity::Opponent, &l, ["half", "1"]);
    let cc = copycat(&g);
    assert_eq!(cc.plays().len(), 2);
    let (xx, _) = product(&g.conway().dual(), g.conway());
    assert!(validate_strategy(&xx, &cc).unwrap());
}

#[test]
fn copycat_validates_on_random_games() {
    let mut rng = testkit::rng(5);
    let l = scale_lattice();
    for _ in 0..25 {
        let c = testkit::random_game(&mut rng, 5);
        let g = PayoffGame::new(c.clone(), vec![l.top(); c.vertex_count()], l.clone()).unwrap();
        let cc = copycat(&g);
        let (xx, _) = product(&c.dual(), &c);
        assert!(validate_strategy(&xx, &cc).unwrap());
    }
}

#[test]
fn copycat_winning_iff_mirrored_ends_non_bottom() {
    // Payoffs are equal at mirrored pairs, so under the residual payoff the
    // diagonal carries top and copycat wins.
    let mut rng = testkit::rng(6);
    let l = scale_lattice();
    for _ in 0..10 {
        let c = testkit::random_game(&mut rng, 4);
        let payoffs = testkit::random_payoffs(&mut rng, &c, &l, false);
        let g = PayoffGame::new(c, payoffs, l.clone()).unwrap();
        let xx = implication_game(&g, &g, ImplicationPayoff::Residual).unwrap();
        let cc = copycat(&g);
        assert!(is_winning(&xx, &cc).unwrap());
    }
}

#[test]
fn compose_with_copycat_is_identity() {
    let mut rng = testkit::rng(7);
    let l = scale_lattice();
    let mut checked = 0;
    while checked < 15 {
        let cx = testkit::random_game(&mut rng, 4);
        let cy = testkit::random_game(&mut rng, 4);
        let x = PayoffGame::new(
            cx.clone(),
            testkit::random_payoffs(&mut rng, &cx, &l, false),
            l.clone(),
        )
        .unwrap();
        let y = PayoffGame::new(
            cy.clone(),
            testkit::random_payoffs(&mut rng, &cy, &l, true),
            l.clone(),
        )
        .unwrap();
        let Some(sigma) =
            testkit::random_strong_winning_strategy(&mut rng, &x, &y, ImplicationPayoff::Residual)
        else {
            continue;
        };
        let left = compose(&x, &x, &y, &copycat(&x), &sigma).unwrap();
        assert_eq!(&left, &sigma, "copycat;sigma != sigma");
        let right = compose(&x, &y, &y, &sigma, &copycat(&y)).unwrap();
        assert_eq!(&right, &sigma, "sigma;copycat != sigma");
        checked += 1;
    }
}

#[test]
fn compose_of_copycats_is_copycat() {
    let mut rng = testkit::rng(8);
    let l = scale_lattice();
    for _ in 0..10 {
        let c = testkit::random_game(&mut rng, 4);
        let g = PayoffGame::new(c.clone(), vec![l.top(); c.vertex_count()], l.clone()).unwrap();
        let cc = copycat(&g);
        let composed = compose(&g, &g, &g, &cc, &cc).unwrap();
        assert_eq!(composed, cc);
    }
}

#[test]
fn composition_of_winning_strategies_is_winning() {
    // Smoke-sized version of the full suite in the acceptance tests.
    let mut rng = testkit::rng(9);
    let l = scale_lattice();
    let mut checked = 0;
    while checked < 25 {
        let cx = testkit::random_game(&mut rng, 4);
        let cy = testkit::random_game(&mut rng, 4);
        let cz = testkit::random_game(&mut rng, 4);
        let x = PayoffGame::new(
            cx.clone(),
            testkit::random_payoffs(&mut rng, &cx, &l, false),
            l.clone(),
        )
        .unwrap();
        let y = PayoffGame::new(
            cy.clone(),
            testkit::random_payoffs(&mut rng, &cy, &l, true),
            l.clone(),
        )
        .unwrap();
        let z = PayoffGame::new(
            cz.clone(),
            testkit::random_payoffs(&mut rng, &cz, &l, true),
            l.clone(),
        )
        .unwrap();
        let (Some(sigma), Some(rho)) = (
            testkit::random_strong_winning_strategy(&mut rng, &x, &y, ImplicationPayoff::Residual),
            testkit::random_strong_winning_strategy(&mut rng, &y, &z, ImplicationPayoff::Residual),
        ) else {
            continue;
        };
        let xy = implication_game(&x, &y, ImplicationPayoff::Residual).unwrap();
        let yz = implication_game(&y, &z, ImplicationPayoff::Residual).unwrap();
        assert!(is_winning(&xy, &sigma).unwrap());
        assert!(is_winning(&yz, &rho).unwrap());

        let composed = compose(&x, &y, &z, &sigma, &rho).unwrap();
        let xz = implication_game(&x, &z, ImplicationPayoff::Residual).unwrap();
        assert!(validate_strategy(xz.conway(), &composed).unwrap());
        assert!(is_winning(&xz, &composed).unwrap());
        checked += 1;
    }
}

#[test]
fn tensor_counts_on_random_games() {
    // |V| multiplies and each position's out-degree is the sum of the
    // component out-degrees.
    let mut rng = testkit::rng(10);
    let l = scale_lattice();
    for _ in 0..10 {
        let cx = testkit::random_game(&mut rng, 5);
        let cy = testkit::random_game(&mut rng, 5);
        let x = PayoffGame::new(cx.clone(), vec![l.top(); cx.vertex_count()], l.clone()).unwrap();
        let y = PayoffGame::new(cy.clone(), vec![l.top(); cy.vertex_count()], l.clone()).unwrap();
        let t = tensor(&x, &y, TensorPayoff::Meet).unwrap();
        assert_eq!(
            t.conway().vertex_count(),
            cx.vertex_count() * cy.vertex_count()
        );
        for ix in 0..cx.vertex_count() as u32 {
            for iy in 0..cy.vertex_count() as u32 {
                let pos = ix * cy.vertex_count() as u32 + iy;
                assert_eq!(
                    t.conway().moves_from(pos).len(),
                    cx.moves_from(ix).len() + cy.moves_from(iy).len()
                );
            }
        }
    }
}

#[test]
fn game_description_parsing() {
    let json = r#"{
        "vertices": ["r", "a", "b"],
        "root": "r",
        "moves": [
            {"from": "r", "to": "a", "polarity": -1},
            {"from": "a", "to": "b", "polarity": 1}
        ],
        "payoff": {"r": "half", "a": "half", "b": "1"}
    }"#;
    let g = game_from_description(json).unwrap();
    assert_eq!(g.vertex_count(), 3);
    assert_eq!(g.moves()[0].polarity, Polarity::Opponent);

    let l = scale_lattice();
    let pg = payoff_game_from_description(json, &l).unwrap();
    assert_eq!(pg.payoff(2), l.element("1").unwrap());

    assert!(game_from_description("{}").is_err());
    let cyclic = r#"{
        "vertices": ["r"],
        "root": "r",
        "moves": [{"from": "r", "to": "r", "polarity": -1}]
    }"#;
    assert!(matches!(
        game_from_description(cyclic).unwrap_err(),
        GameError::CyclicGame
    ));
}
