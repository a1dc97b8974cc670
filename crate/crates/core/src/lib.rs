//! Exact Fock-space simulation of heralded photonic entangled-state generation.

pub mod detect;
pub mod discover;
pub mod enhance;
pub mod error;
pub mod exact;
pub mod fock;
pub mod interferometer;
pub mod propagate;
pub mod schemes;
pub mod sources;

pub use error::{Error, Result};
pub use fock::{ModeOccupation, PureState, Register, StateEnsemble};
pub use interferometer::{compile, Circuit, Element, UnitaryMatrix};
pub use propagate::{evolve, evolve_labeled, permanent};
