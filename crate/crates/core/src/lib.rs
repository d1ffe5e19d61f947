//! Tensor-network simulation of East, West and East–West heterojunction
//! quantum chains: exact diagonalization for small systems, matrix product
//! states with DMRG ground states and TEBD real-time evolution, and drivers for
//! the standard experiments.

pub mod dmrg;
pub mod ed;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod linalg;
pub mod mps;
pub mod series;
pub mod state;
pub mod tebd;

pub use error::{Error, Result};
pub use lattice::{BondKind, BondTerm, ChainKind, ModelSpec, Pin, PotentialProfile};
pub use mps::{Mps, Truncation, TruncationReport};
pub use series::{Observables, RunMetadata, TimeSeries};
pub use state::ProductStateSpec;
pub use tebd::{TrotterOrder, TrotterSchedule};

pub use num_complex::Complex64 as C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
