//! Governing-equation discovery that hard-embeds Lie point symmetry.
//!
//! The pipeline prolongs the infinitesimal generators of a symmetry group,
//! verifies a complete set of differential invariants, and regresses the
//! evolution invariant sparsely against the others.

pub mod expr;
pub mod system;
pub mod liealg;
pub mod invariants;
pub mod dynamics;
pub mod jetgrid;
pub mod regress;
pub mod seed;
pub mod harness;
