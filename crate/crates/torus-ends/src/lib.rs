//! Computations with SL(2,C) characters of the one-holed torus.
//!
//! The crate evaluates the Fricke trace map of a character (x, y, z) along
//! the Farey tessellation, decides or bounds the extended BQ-conditions with
//! verifiable certificates, builds sound nested arc covers of the set of end
//! invariants on the boundary circle, classifies the shape of that set, and
//! runs the τ-reduction walk for imaginary characters.
//!
//! Modules follow the natural layering:
//!
//! * [`farey`] — exact combinatorics: slopes, unimodular pairs/triples, the
//!   dual-tree descent, tri-coloring, arcs on the circle.
//! * [`character`] — characters as complex triples, κ, the mapping-class
//!   action, sign changes, class predicates, and a matrix-trace oracle.
//! * [`trace_tree`] — the trace map along the tree, neighbor sequences and
//!   their closed forms, the edge flow and flow descent.
//! * [`bq`] — the extended BQ-condition search with pruning and fan-closure
//!   certificates.
//! * [`tau`] — the τ-reduction walk for imaginary characters.
//! * [`ends`] — rational end tests, arc covers, hull status, reducible
//!   classification and the full classification decision tree.

pub mod bq;
pub mod character;
pub mod ends;
pub mod farey;
pub mod numeric;
pub mod tau;
pub mod trace_tree;

pub use character::Character;
pub use farey::Slope;
pub use numeric::Params;
