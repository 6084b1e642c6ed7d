//! Synthetic superposition data with known ground-truth features.

mod double;
mod generate;
mod recovery;

pub use double::{double_feature_experiment, double_feature_with_directions, MIN_PAIR_Q, pair_features, DoubleFeatureReport, DoubleFeatureRow, PairFeatures};
pub use generate::{generate_toy, generate_with_directions, random_directions, CorrelatedPair, Magnitude, ToyDataset, ToySpec};
pub use recovery::{abs_cosine, recovery, RecoveryReport};
