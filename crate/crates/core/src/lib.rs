//! Measurements on quantum channels: process POVMs, their ancilla
//! representations, normal forms, and convexity certificates.
//!
//! A process POVM is a finite collection of positive operators `F_i` on
//! `K (x) H` summing to `I_K (x) sigma` for a state `sigma` on `H`. It is the
//! natural measurement on channels `B(H) -> B(K)`: outcome probabilities are
//! `Tr F_i C(Phi)` with `C` the Choi matrix. Every such measurement arises
//! from an ordinary POVM on `K (x) H0` applied to the output of the channel
//! acting on one half of an input state on `H (x) H0`; this crate moves
//! between the two pictures, computes the minimal ancilla normal form, and
//! decides extremality-type questions about the convex set of testers.

pub mod error;
pub mod extremality;
pub mod io;
pub mod linalg;
pub mod naimark;
pub mod process;
pub mod quantum;
pub mod random;
pub mod selftest;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, Tolerance};
