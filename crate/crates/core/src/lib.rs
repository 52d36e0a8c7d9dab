//! Single-excitation dynamics of a periodic ring of two-level systems
//! coupled by XX exchange.
//!
//! The excitation starts on site 0 with every other site in its ground
//! state. Everything observable follows from the coherence function
//! `Φₙ(τ) = (1/N) Σₖ exp[−iτ cos(2πk/N) + i 2πkn/N]`, evaluated here by a
//! literal spectral sum, a batched inverse FFT, and a wrapped Bessel series.
//! Two brute-force oracles in [`oracle`] check those routes independently.
//!
//! Time is the dimensionless `τ = 2gt` throughout.

pub mod bessel;
pub mod error;
pub mod grid;
pub mod io;
pub mod observables;
pub mod oracle;
pub mod recurrence;
pub mod scaling;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{ChainSpec, CoherenceVector};
