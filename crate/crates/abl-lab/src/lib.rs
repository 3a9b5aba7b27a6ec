//! Exact and Monte Carlo workbench for sequential projective measurements
//! with pre- and post-selection.
//!
//! The crate is organized in layers:
//!
//! * [`linalg`]: dense complex matrices/vectors, Kronecker products, partial
//!   traces, and a Jacobi eigensolver.
//! * [`quantum`]: states, projective observables, Born probabilities,
//!   collapse, and sampling.
//! * [`protocol`]: a pre-selection / intermediate measurements /
//!   post-selection experiment description with validation.
//! * [`abl`]: closed-form conditional probabilities for intermediate
//!   outcomes given both boundary conditions, plus the ordinary forward
//!   Born-chain probabilities.
//! * [`chain`]: an independent oracle that models the measurement devices
//!   and an observer as explicit quantum systems and extracts the same
//!   conditional probabilities from the entangled end state.
//! * [`ensemble`]: stochastic trial-by-trial simulation with post-selection
//!   culling and exact-vs-sampled comparison.
//! * [`fallacies`]: classical post-selection scenarios (registry of named
//!   scenarios) that reproduce the same selection effects without quantum
//!   mechanics.
//! * [`verify`]: randomized invariant checks (registry of named checks)
//!   with replayable failure reports.
//! * [`io`]: the line-oriented protocol file format.
//! * [`report`]: shared JSON report conventions.

pub mod abl;
pub mod chain;
pub mod ensemble;
pub mod fallacies;
pub mod io;
pub mod linalg;
pub mod protocol;
pub mod quantum;
pub mod report;
pub mod rng;
pub mod verify;

pub use linalg::{ComplexMatrix, ComplexVector, LinalgError};
pub use protocol::{OutcomeSequence, Protocol};
pub use quantum::{Observable, Outcome, QuantumState};
