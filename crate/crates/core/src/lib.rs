//! Optimal unambiguous discrimination of two-qubit product ensembles, with
//! and without post-measurement information, and detection of
//! nonlocality without entanglement (NLWE) in both settings.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod ensemble;
pub mod io;
pub mod linalg;
pub mod locc;
pub mod nlwe;
pub mod oud;
pub mod pi;
pub mod sampling;

pub use ensemble::{
    make_lock_example, make_unlock_example, Ensemble, ExampleKind, ExampleParams, Label,
};
pub use linalg::{CMat, CVec, HermitianOp};
