//! Post-training feature analysis.

mod align;
mod branch;
mod matching;
mod output;
mod profile;
mod sweep;

pub use align::{align_neurons, top_neuron};
pub use branch::{branch_score, branch_scores, Branch, BranchMap, BranchNorm};
pub use matching::{cosine, match_features, FeatureMatch};
pub use output::{write_profile_csv, write_profile_jsonl, write_profile_summary_csv, write_sweep_csv, write_sweep_jsonl};
pub use profile::{interval_edges, interval_index, profile_features, Example, FeatureProfile, Interval, N_INTERVALS};
pub use sweep::{l1_sweep, scaled_max_activations, sweep_result, train_sweep, SweepEntry, SweepResult, SweepRow};
