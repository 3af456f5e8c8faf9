//! Quantum-jump simulation of few-photon interference between
//! frequency-mismatched sources.
//!
//! The crate covers a remote entangling protocol that heralds on one photon
//! per round and the Hong-Ou-Mandel experiment, each with ideal detectors,
//! detectors without timing information, and detectors with a finite response
//! rate. Closed forms are paired with ODE solutions and with a Monte Carlo
//! trajectory sampler that serves as an independent check.

pub mod bkprotocol;
pub mod detector;
pub mod dynamics;
pub mod hom;
pub mod ode;
pub mod qcore;
pub mod quad;
pub mod stats;

pub use qcore::{
    apply, norm_squared, tensor_product, trace, DensityMatrix, HilbertSpace, Operator, QError, Space,
    StateVector, TensorProduct, C64, DEFAULT_TOLERANCE,
};
pub use dynamics::{Click, ConditionalSystem, DynamicsError, TrajectoryRecord};
pub use detector::{ClickRecord, DetectorBankState, Port};
pub use bkprotocol::{BKParams, ClickOutcome, ModelError};
pub use hom::{CoincidenceTable, HOMParams};
