//! Streaming sketch-and-solve linear system solvers.
//!
//! The crate builds iterative solvers for `A x = b` around a stream of sketch
//! vectors `w_k`: each iteration projects the iterate using the sketched
//! equation `(wᵀA) x = wᵀb`, with an optional orthogonalization memory that
//! interpolates between memoryless row/column-action methods and a full
//! projector that solves the implicitly sketched system exactly.
//!
//! Modules:
//! - [`system`]: dense systems, synthetic generators, Matrix Market io, dense
//!   oracle solves.
//! - [`sketch`]: sketch-vector strategies behind one trait, selected by token.
//! - [`solver`]: iterate-update rules and solve drivers.
//! - [`diagnostics`]: subspace trackers, stopping times, and contraction-rate
//!   bounds used to verify solver behavior.
//! - [`distributed`]: a deterministic single-process simulation of the
//!   limited-communication variant with exact message accounting.
//! - [`bench`]: the benchmark grid and its CSV emitter.
//! - [`cli`]: the `sketchsolve` command-line interface.

pub mod bench;
pub mod cli;
pub mod diagnostics;
pub mod distributed;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod sketch;
pub mod solver;
pub mod system;

pub use error::{Error, Result};
pub use system::LinearSystem;
