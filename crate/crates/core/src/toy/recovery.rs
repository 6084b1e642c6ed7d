use crate::numerics::{dot, norm, Matrix};
use crate::sae::SaeModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RecoveryReport {
    /// Mean over true features of the best |cosine| to any learned direction.
    pub mmcs: f64,
    /// `(true feature, best learned feature)` for every true feature.
    pub matched: Vec<(usize, usize)>,
    pub per_feature: Vec<f64>,
}

/// `|cos(a, b)|`; zero when either vector is zero.
pub fn abs_cosine(a: &[f32], b: &[f32]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).abs().min(1.0)
}

/// Best sign-insensitive cosine match of every ground-truth column of `g`
/// (`d_model × n_true`) among the model's decoder directions.
pub fn recovery(model: &SaeModel, g: &Matrix) -> Result<RecoveryReport> {
    if g.rows() != model.d_model() {
        return Err(Error::Dimension(format!(
            "ground truth has {} rows, model d_model is {}",
            g.rows(),
            model.d_model()
        )));
    }
    let learned: Vec<Vec<f32>> = (0..model.n_features()).map(|i| model.direction(i)).collect();
    let mut matched = Vec::with_capacity(g.cols());
    let mut per_feature = Vec::with_capacity(g.cols());
    for j in 0..g.cols() {
        let truth = g.column(j);
        let mut best = (0usize, -1.0f64);
        for (i, dir) in learned.iter().enumerate() {
            let c = abs_cosine(&truth, dir);
            if c > best.1 {
                best = (i, c);
            }
        }
        matched.push((j, best.0));
        per_feature.push(best.1.max(0.0));
    }
    let mmcs = if per_feature.is_empty() {
        0.0
    } else {
        per_feature.iter().sum::<f64>() / per_feature.len() as f64
    };
    Ok(RecoveryReport {
        mmcs,
        matched,
        per_feature,
    })
}
