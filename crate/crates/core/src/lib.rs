//! Qubit channels in the Pauli basis: linear, non-CP and nonlinear-in-normalization
//! (NINO) master equations, with tools for Bloch vector amplification.

pub mod analysis;
pub mod catalogue;
pub mod channel;
pub mod dynamics;
pub mod error;
pub mod pauli;
pub mod verify;

pub use catalogue::{Preset, PresetKind};
pub use channel::{ChannelSpec, ChoiSign, JumpTerm};
pub use error::{Error, Result};
pub use pauli::{HermitianPauliVector, PauliVectorC, PsdState};
