//! Brute-force ground truth for the verifier.

pub mod phasepoly;
pub mod sim;
pub mod statevec;

pub use phasepoly::PhasePolyOperator;
pub use statevec::StateVector;
