//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p saescope --test acceptance`; extra arguments that
//! do not start with `-` select criteria by substring.

mod analysis;
mod cli;
mod data;
mod training;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

/// `Ok(detail)` on success, `Err(detail)` on failure.
pub type Check = fn() -> Result<String, String>;

/// Fails a check when its wall time exceeds `limit`.
pub fn within(limit: Duration, started: Instant, detail: String) -> Result<String, String> {
    let t = started.elapsed();
    if t > limit {
        Err(format!("{detail}; took {t:.1?}, limit {limit:?}"))
    } else {
        Ok(detail)
    }
}

const CRITERIA: &[(&str, Check)] = &[
    ("gradient_correctness", training::gradient_correctness),
    ("reconstruction_capacity", training::reconstruction_capacity),
    ("toy_superposition_recovery", training::toy_recovery),
    ("l1_sweep_split_direction", training::split_direction),
    ("oversampler_statistics", data::oversampler_statistics),
    ("interval_binning", data::interval_binning),
    ("branch_score", analysis::branch_scores_sum),
    ("stimulus_equivariance", analysis::stimulus_equivariance),
    ("tuning_curve_oracle", analysis::tuning_curve_oracle),
    ("formats_and_layer_defaults", data::formats),
    ("cli_determinism", cli::determinism),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for &(name, check) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
