//! Deterministic exploration simulator for scenes of geon-composed objects.
//!
//! An agent walks an unknown scene, senses geometric primitives ("geons")
//! through a fog-like distance-banded sensor, and plans its moves by
//! maximizing lattice-valued payoffs of an alternating two-player game in
//! which the environment delivers information and the system spends moves.
//! Object schemes (geon sets plus their incidence matrix) accumulate in a
//! persistent schema database until a full orbit of an object adds nothing
//! new, at which point that object's cognition game is over.
//!
//! The crate is organized as a library; see `examples/` for one runnable
//! program per capability and the `geoncog` binary for the batch CLI
//! (`generate`, `run`, `replay`, `inspect`).
//!
//! Module map:
//!
//! - [`lattice`] — finite bounded lattices, distributivity, Brouwer
//!   implication and pseudo-complement, plus a bitset Boolean algebra for
//!   large reward universes.
//! - [`games`] — rooted polarized move graphs, plays, strategies,
//!   dual/tensor/par/implication constructions, winning tests and
//!   strategy composition.
//! - [`geons`] — primitive catalog, placed-geon geometry, incidence
//!   matrices, scheme canonicalization and the schema store.
//! - [`worldgen`] — seeded procedural scenes: placement, potential-field
//!   de-penetration, parametric composites (tree, wall, stairs).
//! - [`perception`] — the simulated sensor: sector field of view,
//!   visibility horizon, distance-banded class uncertainty, occlusion.
//! - [`explorer`] — the cognition loop: goal discovery, goal lattice,
//!   two-phase rewards, play payoffs, receding-horizon planning,
//!   saturation and episode execution.
//! - [`cli`] — scenario configs, trace records and the four batch
//!   commands that own all file formats.

pub mod cli;
pub mod explorer;
pub mod games;
pub mod geons;
pub mod lattice;
pub mod perception;
pub mod testkit;
pub mod worldgen;
