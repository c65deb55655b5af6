//! Synchronization of random circular automata.
//!
//! A circular automaton `A_n(b)` has states `Z_n`, a cyclic shift letter
//! `a: i -> i + 1 mod n`, and an arbitrary second letter `b`. This crate
//! provides
//!
//! * [`automaton`]: DFAs, word actions, the pair-automaton synchronization
//!   test and exact/greedy reset words;
//! * [`matrix`]: the distance matrix `T_b(i, j) = |b_j - b_{j+i}|_n`, its row
//!   and zero statistics, and the two-level synchronization certificate;
//! * [`independence`]: associated multigraphs of entry index sets and the
//!   acyclicity criterion for independence of matrix entries;
//! * [`chromatic`]: chromatic polynomials of circulant graphs and exact
//!   moments of the zero-row count `D`;
//! * [`experiments`]: seeded Monte Carlo and exhaustive enumeration drivers.

pub mod automaton;
pub mod chromatic;
pub mod error;
pub mod experiments;
pub mod independence;
pub mod matrix;
pub mod polynomial;
pub mod ratio;

pub use automaton::{CircularMapping, Dfa, StateSet, Word};
pub use chromatic::SimpleGraph;
pub use error::{Error, Result};
pub use matrix::{DistanceMatrix, MatrixStats, SyncCertificate};
pub use num_bigint::BigInt;
pub use num_rational::BigRational;
pub use polynomial::IntPolynomial;
