use serde::Serialize;

use super::match_features;
use crate::numerics::Matrix;
use crate::sae::{reconstruction_mse, train, SaeModel, TrainConfig, TrainReport};
use crate::store::RecordSource;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepEntry {
    /// Feature index in the anchor (first-λ) model.
    pub anchor_feature: usize,
    /// Matched feature in this λ's model.
    pub feature: usize,
    pub cosine: f64,
    pub max_activation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f32,
    /// Reconstruction MSE on the evaluation set.
    pub recon_mse: f64,
    pub entries: Vec<SweepEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Max activations of the feature matched to `anchor_feature`, one per λ.
    pub fn trajectory(&self, anchor_feature: usize) -> Option<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                r.entries
                    .iter()
                    .find(|e| e.anchor_feature == anchor_feature)
                    .map(|e| e.max_activation)
            })
            .collect()
    }
}

/// Per-feature maximum of `f_i * ||d_i||` over the rows of `eval`.
pub fn scaled_max_activations(model: &SaeModel, eval: &Matrix) -> Result<Vec<f64>> {
    let norms = model.decoder_norms();
    let mut max = vec![0.0f64; model.n_features()];
    for r in 0..eval.rows() {
        let f = model.encode(eval.row(r))?;
        for ((m, &v), &nrm) in max.iter_mut().zip(&f).zip(&norms) {
            *m = m.max(v as f64 * nrm);
        }
    }
    Ok(max)
}

pub(crate) fn check_lambdas(lambdas: &[f32]) -> Result<()> {
    if lambdas.len() < 2 {
        return Err(Error::Parameter("need ≥2 lambdas".into()));
    }
    if lambdas.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Parameter("lambdas must be non-decreasing".into()));
    }
    Ok(())
}

/// One model per λ, all sharing `base.seed` and every other setting.
pub fn train_sweep<S: RecordSource + ?Sized>(
    source: &mut S,
    base: &TrainConfig,
    lambdas: &[f32],
) -> Result<Vec<(SaeModel, TrainReport)>> {
    check_lambdas(lambdas)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let cfg = TrainConfig {
                lambda,
                ..base.clone()
            };
            train(source, &cfg)
        })
        .collect()
}

/// Track `anchor_features` of `models[0]` through the other models by
/// decoder cosine and record their scaled max activations on `eval`.
pub fn sweep_result(models: &[SaeModel], lambdas: &[f32], anchor_features: &[usize], eval: &Matrix) -> Result<SweepResult> {
    check_lambdas(lambdas)?;
    if models.len() != lambdas.len() {
        return Err(Error::Parameter(format!("{} models for {} lambdas", models.len(), lambdas.len())));
    }
    if eval.rows() == 0 {
        return Err(Error::Parameter("evaluation set is empty".into()));
    }
    let anchor = &models[0];
    for &a in anchor_features {
        if a >= anchor.n_features() {
            return Err(Error::Parameter(format!(
                "anchor feature {a} out of range for {} features",
                anchor.n_features()
            )));
        }
    }
    let mut rows = Vec::with_capacity(models.len());
    for (model, &lambda) in models.iter().zip(lambdas) {
        let matches = match_features(anchor, model)?;
        let max = scaled_max_activations(model, eval)?;
        let mut entries = Vec::with_capacity(anchor_features.len());
        for &a in anchor_features {
            let m = matches[a];
            if let Some(j) = m.other {
                entries.push(SweepEntry {
                    anchor_feature: a,
                    feature: j,
                    cosine: m.cosine,
                    max_activation: max[j],
                });
            }
        }
        rows.push(SweepRow {
            lambda,
            recon_mse: reconstruction_mse(model, eval)?,
            entries,
        });
    }
    Ok(SweepResult { rows })
}

/// Train one model per λ and follow the anchor model's features through the
/// sweep.
pub fn l1_sweep<S: RecordSource + ?Sized>(
    source: &mut S,
    base: &TrainConfig,
    lambdas: &[f32],
    anchor_features: &[usize],
    eval: &Matrix,
) -> Result<(SweepResult, Vec<SaeModel>)> {
    let models: Vec<SaeModel> = train_sweep(source, base, lambdas)?.into_iter().map(|(m, _)| m).collect();
    let result = sweep_result(&models, lambdas, anchor_features, eval)?;
    Ok((result, models))
}
