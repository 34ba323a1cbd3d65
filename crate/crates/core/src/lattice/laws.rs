//! Exhaustive law checkers for finite lattices. Each checker scans all
//! element pairs or triples and reports the first violation, so the suites
//! can run against randomly generated lattices as well as fixtures.

use super::{Elt, FiniteLattice, Result};

fn pairs(l: &FiniteLattice) -> Vec<(Elt, Elt)> {
    let elts: Vec<Elt> = l.elements().collect();
    let mut out = Vec::with_capacity(elts.len() * elts.len());
    for &a in &elts {
        for &b in &elts {
            out.push((a, b));
        }
    }
    out
}

fn triples(l: &FiniteLattice) -> Vec<(Elt, Elt, Elt)> {
    let elts: Vec<Elt> = l.elements().collect();
    let mut out = Vec::new();
    for &a in &elts {
        for &b in &elts {
            for &c in &elts {
                out.push((a, b, c));
            }
        }
    }
    out
}

/// Commutativity, associativity, idempotence and absorption of join/meet,
/// plus bounds: 0 ≤ x ≤ 1 for all x.
pub fn check_lattice_laws(l: &FiniteLattice) -> Result<()> {
    for (a, b) in pairs(l) {
        assert_eq!(l.join(a, b)?, l.join(b, a)?, "join not commutative");
        assert_eq!(l.meet(a, b)?, l.meet(b, a)?, "meet not commutative");
        // Absorption: x ∨ (x ∧ y) = x and x ∧ (x ∨ y) = x.
        assert_eq!(l.join(a, l.meet(a, b)?)?, a, "absorption (∨ over ∧)");
        assert_eq!(l.meet(a, l.join(a, b)?)?, a, "absorption (∧ over ∨)");
    }
    for (a, b, c) in triples(l) {
        assert_eq!(
            l.join(l.join(a, b)?, c)?,
            l.join(a, l.join(b, c)?)?,
            "join not associative"
        );
        assert_eq!(
            l.meet(l.meet(a, b)?, c)?,
            l.meet(a, l.meet(b, c)?)?,
            "meet not associative"
        );
    }
    for a in l.elements() {
        assert_eq!(l.join(a, a)?, a, "join not idempotent");
        assert_eq!(l.meet(a, a)?, a, "meet not idempotent");
        assert!(l.leq(l.bottom(), a)?, "bottom not below all");
        assert!(l.leq(a, l.top())?, "top not above all");
    }
    Ok(())
}

/// Residuation: (a ∧ c) ≤ b ⟺ c ≤ (a ⇒ b), all triples. Requires a
/// distributive lattice.
pub fn check_residuation(l: &FiniteLattice) -> Result<()> {
    for (a, b, c) in triples(l) {
        let lhs = l.leq(l.meet(a, c)?, b)?;
        let rhs = l.leq(c, l.implication(a, b)?)?;
        assert_eq!(lhs, rhs, "residuation fails");
    }
    Ok(())
}

/// a ∧ (a ⇒ b) = a ∧ b, all pairs: the equality form of the implication
/// definition coincides with the residuation form.
pub fn check_implication_definition(l: &FiniteLattice) -> Result<()> {
    for (a, b) in pairs(l) {
        assert_eq!(
            l.meet(a, l.implication(a, b)?)?,
            l.meet(a, b)?,
            "implication definition mismatch"
        );
    }
    Ok(())
}

/// ¬(a ∨ b) = ¬a ∧ ¬b. Holds in every Heyting lattice.
pub fn check_de_morgan_join(l: &FiniteLattice) -> Result<()> {
    for (a, b) in pairs(l) {
        assert_eq!(
            l.pseudo_complement(l.join(a, b)?)?,
            l.meet(l.pseudo_complement(a)?, l.pseudo_complement(b)?)?,
            "¬(a∨b) = ¬a∧¬b fails"
        );
    }
    Ok(())
}

/// ¬(a ∧ b) = ¬a ∨ ¬b. Holds on Boolean lattices; fails in general Heyting
/// lattices. Returns `Ok(false)` with the verdict instead of panicking.
pub fn holds_de_morgan_meet(l: &FiniteLattice) -> Result<bool> {
    for (a, b) in pairs(l) {
        if l.pseudo_complement(l.meet(a, b)?)?
            != l.join(l.pseudo_complement(a)?, l.pseudo_complement(b)?)?
        {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Currying of the residual payoff pairing: (a ∧ b) ⇒ c = a ⇒ (b ⇒ c),
/// all triples. Valid in every Heyting algebra.
pub fn check_currying(l: &FiniteLattice) -> Result<()> {
    for (a, b, c) in triples(l) {
        assert_eq!(
            l.implication(l.meet(a, b)?, c)?,
            l.implication(a, l.implication(b, c)?)?,
            "currying fails"
        );
    }
    Ok(())
}

/// Join/meet payoff pairing: ¬(a ∨ b) ∧ c = ¬a ∧ ¬b ∧ c, all triples.
/// A valid De Morgan half-law in every Heyting lattice.
pub fn check_pairing_join_meet(l: &FiniteLattice) -> Result<()> {
    for (a, b, c) in triples(l) {
        let lhs = l.meet(l.pseudo_complement(l.join(a, b)?)?, c)?;
        let rhs = l.meet(l.meet(l.pseudo_complement(a)?, l.pseudo_complement(b)?)?, c)?;
        assert_eq!(lhs, rhs, "¬(a∨b)∧c pairing fails");
    }
    Ok(())
}

/// Meet/join payoff pairing: ¬(a ∧ b) ∨ c = ¬a ∨ ¬b ∨ c. Holds on Boolean
/// lattices only; returns the verdict.
pub fn holds_pairing_meet_join(l: &FiniteLattice) -> Result<bool> {
    for (a, b, c) in triples(l) {
        let lhs = l.join(l.pseudo_complement(l.meet(a, b)?)?, c)?;
        let rhs = l.join(l.join(l.pseudo_complement(a)?, l.pseudo_complement(b)?)?, c)?;
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The down-set lattice of the three-element poset u < t > v (two minimal
/// elements, one top). The standard witness that ¬(a∧b)∨c = ¬a∨¬b∨c is not
/// a Heyting-lattice law: ¬({u}∧{v}) = ¬∅ = 1 while ¬{u}∨¬{v} = {v}∨{u} ≠ 1.
pub fn vee_downset_lattice() -> FiniteLattice {
    FiniteLattice::build_from_order(
        &["0", "u", "v", "uv", "1"],
        &[("0", "u"), ("0", "v"), ("u", "uv"), ("v", "uv"), ("uv", "1")],
    )
    .expect("fixed description is a lattice")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FiniteLattice;

    #[test]
    fn laws_hold_on_fixtures() {
        for l in [
            FiniteLattice::chain(&["0", "half", "1"]).unwrap(),
            FiniteLattice::powerset(&["a", "b", "c"]).unwrap(),
            vee_downset_lattice(),
        ] {
            check_lattice_laws(&l).unwrap();
            check_residuation(&l).unwrap();
            check_implication_definition(&l).unwrap();
            check_de_morgan_join(&l).unwrap();
            check_currying(&l).unwrap();
            check_pairing_join_meet(&l).unwrap();
        }
    }

    #[test]
    fn meet_join_pairing_is_boolean_only() {
        let boolean = FiniteLattice::powerset(&["a", "b"]).unwrap();
        assert!(holds_pairing_meet_join(&boolean).unwrap());
        assert!(holds_de_morgan_meet(&boolean).unwrap());

        let vee = vee_downset_lattice();
        assert!(vee.is_distributive());
        assert!(!holds_pairing_meet_join(&vee).unwrap());
        assert!(!holds_de_morgan_meet(&vee).unwrap());
    }

    #[test]
    fn vee_counterexample_detail() {
        // ¬(u ∧ v) ∨ 0 = 1 but (¬u ∨ ¬v) ∨ 0 = uv.
        let l = vee_downset_lattice();
        let u = l.element("u").unwrap();
        let v = l.element("v").unwrap();
        let lhs = l
            .join(
                l.pseudo_complement(l.meet(u, v).unwrap()).unwrap(),
                l.bottom(),
            )
            .unwrap();
        let rhs = l
            .join(
                l.join(
                    l.pseudo_complement(u).unwrap(),
                    l.pseudo_complement(v).unwrap(),
                )
                .unwrap(),
                l.bottom(),
            )
            .unwrap();
        assert_eq!(lhs, l.top());
        assert_eq!(rhs, l.element("uv").unwrap());
        assert_ne!(lhs, rhs);
    }
}
