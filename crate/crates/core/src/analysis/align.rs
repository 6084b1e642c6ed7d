use crate::sae::SaeModel;
use crate::{Error, Result};

/// Neurons (channels) ranked by `|dᵢ[c]|`, largest first, ties to the lower
/// index. Weights are reported signed.
pub fn align_neurons(model: &SaeModel, feature: usize) -> Result<Vec<(usize, f32)>> {
    if feature >= model.n_features() {
        return Err(Error::Parameter(format!(
            "feature {feature} out of range for {} features",
            model.n_features()
        )));
    }
    let mut ranked: Vec<(usize, f32)> = model.direction(feature).into_iter().enumerate().collect();
    ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// The neuron most similar to `feature`.
pub fn top_neuron(model: &SaeModel, feature: usize) -> Result<(usize, f32)> {
    Ok(align_neurons(model, feature)?[0])
}
