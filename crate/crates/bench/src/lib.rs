//! Benchmarks live in `benches/`; this crate only re-exports the model types
//! they use.

pub use photonbeat::{BKParams, HOMParams};
