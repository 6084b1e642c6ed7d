//! Sparse autoencoder dictionary learning over streamed activation shards.
//!
//! Activations are stored as `ACTS` shards ([`store`]), a sparse autoencoder
//! decomposes each activation vector as `x ≈ b + Σ fᵢ(x)·dᵢ` ([`sae`]), and the
//! learned features are inspected with interval-binned dataset examples,
//! neuron alignment, branch scores and L1 sweeps ([`analysis`]) as well as
//! synthetic curve stimuli and tuning curves ([`stimuli`]). The [`toy`] module
//! builds superposition datasets with known ground truth so the whole pipeline
//! can be checked at desk scale.

pub mod analysis;
pub mod error;
pub mod numerics;
pub mod sae;
pub mod stimuli;
pub mod store;
pub mod toy;

pub use error::{Error, FormatError, Result};
