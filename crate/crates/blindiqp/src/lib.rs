//! Blind delegation of IQP (instantaneous quantum polynomial-time)
//! computations.
//!
//! The crate is layered: [`gf2lin`] supplies binary linear algebra,
//! [`xprog`] describes X-programs and their exact output distributions,
//! [`qsim`] is a labelled state-vector simulator, [`graphs`] builds the
//! extended graphs the server entangles, [`protocol`] runs the delegation
//! protocols (sampled or exhaustively enumerated), [`security`] compares
//! server views, and [`hypothesis`] runs the hidden-codeword test.

pub mod error;
pub mod gf2lin;
pub mod graphs;
pub mod hypothesis;
pub mod par;
pub mod protocol;
pub mod qsim;
pub mod rng;
pub mod security;
pub mod xprog;

pub use error::{Error, Result};
