//! Entrywise maps that preserve positive semidefiniteness on matrices whose
//! zero pattern follows a graph.
//!
//! The crate is organised bottom-up: [`graph`] and [`matrix`] provide the
//! objects, [`star`] and [`tree`] the structured PSD tests, [`function`] and
//! [`classes`] the candidate maps and their grid checks, [`constructors`] the
//! explicit functions and counterexamples, [`witness`] the Schur-power
//! quadratic-form witnesses, and [`suites`] the randomized drivers behind the
//! command-line tool.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classes;
pub mod constructors;
pub mod error;
pub mod exec;
pub mod function;
pub mod graph;
pub mod matrix;
pub mod star;
pub mod suites;
pub mod tree;
pub mod witness;

pub use error::{Error, Result};
pub use exec::Execution;
pub use function::{EntrywiseFunction, Term};
pub use graph::{build_graph, Graph, GraphKind};
pub use matrix::{apply_entrywise, random_psd_with_pattern, PsdVerdict, SymMatrix, DEFAULT_PSD_TOL};
