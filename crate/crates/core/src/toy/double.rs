use serde::Serialize;

use super::{abs_cosine, generate_toy, generate_with_directions, CorrelatedPair, ToyDataset, ToySpec};
use crate::analysis::{sweep_result, train_sweep, SweepResult};
use crate::numerics::Matrix;
use crate::sae::{SaeModel, TrainConfig};
use crate::{Error, Result};

/// Minimum co-firing probability of the correlated pair.
pub const MIN_PAIR_Q: f64 = 0.3;

/// Anchor-model features standing for the correlated pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairFeatures {
    /// Highest `min(|cos(., g_i)|, |cos(., g_j)|)`.
    pub merged: usize,
    /// Best `|cos(., g_i)|` among the remaining features.
    pub left: usize,
    /// Best `|cos(., g_j)|` among the remaining features other than `left`.
    pub right: usize,
    /// The merged feature's min-pair similarity.
    pub merged_similarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubleFeatureRow {
    pub lambda: f32,
    pub merged_max: f64,
    pub left_max: f64,
    pub right_max: f64,
    /// `|cos|` of the tracked singletons to their true directions.
    pub left_similarity: f64,
    pub right_similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoubleFeatureReport {
    pub anchors: PairFeatures,
    pub rows: Vec<DoubleFeatureRow>,
    pub sweep: SweepResult,
}

impl DoubleFeatureReport {
    pub fn merged_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].merged_max < w[0].merged_max)
    }

    pub fn singletons_non_decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].left_max >= w[0].left_max && w[1].right_max >= w[0].right_max)
    }

    /// Mean singleton similarity at the last λ.
    pub fn final_singleton_similarity(&self) -> f64 {
        self.rows
            .last()
            .map(|r| 0.5 * (r.left_similarity + r.right_similarity))
            .unwrap_or(0.0)
    }
}

/// Locate the merged and singleton features of a correlated pair `(i, j)` in
/// `model` by ground truth `g`.
pub fn pair_features(model: &SaeModel, g: &Matrix, i: usize, j: usize) -> Result<PairFeatures> {
    if model.n_features() < 3 {
        return Err(Error::Parameter("need at least 3 learned features".into()));
    }
    if g.rows() != model.d_model() || i >= g.cols() || j >= g.cols() {
        return Err(Error::Dimension("ground truth does not fit the model".into()));
    }
    let (gi, gj) = (g.column(i), g.column(j));
    let sims: Vec<(f64, f64)> = (0..model.n_features())
        .map(|k| {
            let dir = model.direction(k);
            (abs_cosine(&dir, &gi), abs_cosine(&dir, &gj))
        })
        .collect();
    let best = |score: &dyn Fn(usize) -> f64, skip: &[usize]| -> usize {
        let mut arg = None::<(usize, f64)>;
        for k in 0..sims.len() {
            if skip.contains(&k) {
                continue;
            }
            let s = score(k);
            if arg.map_or(true, |(_, b)| s > b) {
                arg = Some((k, s));
            }
        }
        arg.map(|(k, _)| k).unwrap_or(0)
    };
    let merged = best(&|k| sims[k].0.min(sims[k].1), &[]);
    let left = best(&|k| sims[k].0, &[merged]);
    let right = best(&|k| sims[k].1, &[merged, left]);
    Ok(PairFeatures {
        merged,
        left,
        right,
        merged_similarity: sims[merged].0.min(sims[merged].1),
    })
}

/// Train one SAE per λ on a toy dataset with exactly one correlated pair and
/// follow the merged and singleton features from the first model.
///
/// `n_train` records are generated from `spec`; a further `n_eval` records
/// from the same directions (independent sample stream) fix the evaluation
/// set for max activations.
pub fn double_feature_experiment(
    spec: &ToySpec,
    base: &TrainConfig,
    lambdas: &[f32],
    n_train: usize,
    n_eval: usize,
) -> Result<DoubleFeatureReport> {
    let pair = single_pair(spec, n_eval)?;
    run(generate_toy(spec, n_train + n_eval)?, pair, base, lambdas, n_train)
}

/// As [`double_feature_experiment`] with caller-supplied unit directions.
pub fn double_feature_with_directions(
    spec: &ToySpec,
    directions: Matrix,
    base: &TrainConfig,
    lambdas: &[f32],
    n_train: usize,
    n_eval: usize,
) -> Result<DoubleFeatureReport> {
    let pair = single_pair(spec, n_eval)?;
    run(generate_with_directions(spec, directions, n_train + n_eval)?, pair, base, lambdas, n_train)
}

fn single_pair(spec: &ToySpec, n_eval: usize) -> Result<CorrelatedPair> {
    let [pair] = spec.pairs.as_slice() else {
        return Err(Error::Parameter(format!(
            "expected exactly one correlated pair, got {}",
            spec.pairs.len()
        )));
    };
    if pair.q < MIN_PAIR_Q {
        return Err(Error::Parameter(format!("pair co-firing probability {} below {MIN_PAIR_Q}", pair.q)));
    }
    if n_eval == 0 {
        return Err(Error::Parameter("evaluation set is empty".into()));
    }
    Ok(*pair)
}

fn run(data: ToyDataset, pair: CorrelatedPair, base: &TrainConfig, lambdas: &[f32], n_train: usize) -> Result<DoubleFeatureReport> {
    let g = data.directions.clone();
    let (train_part, eval_part) = data.records.split_at(n_train);
    let eval = Matrix::from_rows(&eval_part.iter().map(|r| r.values.clone()).collect::<Vec<_>>())?;
    let mut source = crate::store::InMemorySource::new(train_part.to_vec());

    let models: Vec<SaeModel> = train_sweep(&mut source, base, lambdas)?
        .into_iter()
        .map(|(m, _)| m)
        .collect();
    let anchors = pair_features(&models[0], &g, pair.i, pair.j)?;
    let sweep = sweep_result(&models, lambdas, &[anchors.merged, anchors.left, anchors.right], &eval)?;
    let (gi, gj) = (g.column(pair.i), g.column(pair.j));
    let rows = sweep
        .rows
        .iter()
        .zip(&models)
        .map(|(row, model)| {
            let e = &row.entries;
            DoubleFeatureRow {
                lambda: row.lambda,
                merged_max: e[0].max_activation,
                left_max: e[1].max_activation,
                right_max: e[2].max_activation,
                left_similarity: abs_cosine(&model.direction(e[1].feature), &gi),
                right_similarity: abs_cosine(&model.direction(e[2].feature), &gj),
            }
        })
        .collect();
    Ok(DoubleFeatureReport { anchors, rows, sweep })
}
