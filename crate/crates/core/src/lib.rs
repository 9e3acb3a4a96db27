//! K_{r,s} graph bootstrap percolation.
//!
//! A graph percolates under the K_{r,s}-bootstrap process when its missing
//! edges can be added one by one, each addition completing a new copy of the
//! complete bipartite graph K_{r,s}, until the complete graph is reached.
//! This crate provides:
//!
//! - a bitset-backed closure engine ([`closure`]) that drives the process to
//!   its fixed point on arbitrary graphs,
//! - witness-set and red-edge tracking ([`witness`]) with runtime checks of
//!   the structural inequalities the process obeys,
//! - exact-rational oracles ([`oracles`]) that exhaustively verify the
//!   extremal inequalities behind the threshold bounds,
//! - threshold formulas and balancedness classification ([`pattern`]),
//! - seeded Monte Carlo estimation of the percolation threshold ([`mc`]).

pub mod closure;
pub mod error;
pub mod graph;
pub mod mc;
pub mod oracles;
pub mod pattern;
pub mod witness;

pub use closure::{closure, percolates, ClosureResult, CopyChoice, CopyWitness, InfectionStep};
pub use error::Error;
pub use graph::{Edge, EdgeSet, GnpSpec, Graph};
pub use pattern::{Pattern, Rational};

pub type Result<T> = std::result::Result<T, Error>;
