//! Dense matrices, seeded random streams, Adam, and finite-difference checks.

mod adam;
mod gradcheck;
mod matrix;
mod rng;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{finite_diff_check, finite_diff_check_sampled, finite_diff_check_with, relative_error, Stencil};
pub use matrix::{dot, matmul, norm, Matrix};
pub use rng::{rng_for, Stream};
