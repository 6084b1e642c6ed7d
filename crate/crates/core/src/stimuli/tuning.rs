use serde::Serialize;

use super::{ActivationSource, StimulusGrid};
use crate::analysis::FeatureProfile;
use crate::sae::SaeModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineSource {
    /// Statistics of the feature over the activation dataset.
    Dataset,
    /// Statistics over the stimulus set itself.
    Stimuli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Baseline {
    pub mean: f64,
    pub std: f64,
    pub source: BaselineSource,
}

impl Baseline {
    pub fn dataset(mean: f64, std: f64) -> Self {
        Self {
            mean,
            std,
            source: BaselineSource::Dataset,
        }
    }

    pub fn from_profile(profile: &FeatureProfile) -> Self {
        Self::dataset(profile.mean, profile.std)
    }

    /// Population mean and standard deviation of `values`.
    pub fn from_stimuli(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            source: BaselineSource::Stimuli,
        }
    }
}

/// Feature response over an orientation × radius grid in units of the
/// baseline standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningCurve {
    pub feature_id: usize,
    pub orientations: Vec<f64>,
    pub radii: Vec<f64>,
    /// `response[radius_index][orientation_index]`.
    pub response: Vec<Vec<f64>>,
    pub baseline: Baseline,
}

impl TuningCurve {
    /// Radius index holding the largest response (lowest index on ties).
    pub fn peak_radius(&self) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (r, row) in self.response.iter().enumerate() {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if m > best.1 {
                best = (r, m);
            }
        }
        best.0
    }
}

/// Raw activations of `feature` for every stimulus of `grid`, in grid order.
pub fn raw_responses<A: ActivationSource + ?Sized>(
    model: &SaeModel,
    feature: usize,
    grid: &StimulusGrid,
    source: &A,
) -> Result<Vec<f64>> {
    if feature >= model.n_features() {
        return Err(Error::Parameter(format!("feature {feature} out of range")));
    }
    if source.d_model() != model.d_model() {
        return Err(Error::Dimension(format!(
            "activation source width {} vs model d_model {}",
            source.d_model(),
            model.d_model()
        )));
    }
    grid.stimuli
        .iter()
        .map(|s| Ok(model.encode_feature(&source.activations(s)?, feature)? as f64))
        .collect()
}

/// `(f(x(θ, r)) - mean) / std` over the grid.
pub fn tuning_curve<A: ActivationSource + ?Sized>(
    model: &SaeModel,
    feature: usize,
    grid: &StimulusGrid,
    source: &A,
    baseline: Baseline,
) -> Result<TuningCurve> {
    if !(baseline.std > 0.0) || !baseline.std.is_finite() || !baseline.mean.is_finite() {
        return Err(Error::DegenerateBaseline {
            feature,
            std: baseline.std,
        });
    }
    let raw = raw_responses(model, feature, grid, source)?;
    Ok(standardise(feature, grid, &raw, baseline))
}

/// As [`tuning_curve`] with the baseline computed from the stimulus set.
pub fn tuning_curve_self_baseline<A: ActivationSource + ?Sized>(
    model: &SaeModel,
    feature: usize,
    grid: &StimulusGrid,
    source: &A,
) -> Result<TuningCurve> {
    let raw = raw_responses(model, feature, grid, source)?;
    let baseline = Baseline::from_stimuli(&raw);
    if !(baseline.std > 0.0) {
        return Err(Error::DegenerateBaseline {
            feature,
            std: baseline.std,
        });
    }
    Ok(standardise(feature, grid, &raw, baseline))
}

fn standardise(feature: usize, grid: &StimulusGrid, raw: &[f64], baseline: Baseline) -> TuningCurve {
    let n_o = grid.orientations.len();
    let response = raw
        .chunks(n_o)
        .map(|row| row.iter().map(|v| (v - baseline.mean) / baseline.std).collect())
        .collect();
    TuningCurve {
        feature_id: feature,
        orientations: grid.orientations.clone(),
        radii: grid.radii.clone(),
        response,
        baseline,
    }
}

/// Orientation coverage at each curve's peak radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub threshold_sigma: f64,
    pub orientations: Vec<f64>,
    /// Feature ids responding above threshold, per orientation.
    pub covering: Vec<Vec<usize>>,
    /// Orientation indices with no covering feature.
    pub gaps: Vec<usize>,
}

pub fn gap_report(orientations: &[f64], curves: &[TuningCurve], threshold_sigma: f64) -> Result<GapReport> {
    let mut covering = vec![Vec::new(); orientations.len()];
    for curve in curves {
        if curve.orientations.len() != orientations.len() {
            return Err(Error::Dimension(format!(
                "curve for feature {} has {} orientations, expected {}",
                curve.feature_id,
                curve.orientations.len(),
                orientations.len()
            )));
        }
        let Some(row) = curve.response.get(curve.peak_radius()) else {
            continue;
        };
        for (o, &v) in row.iter().enumerate() {
            if v > threshold_sigma {
                covering[o].push(curve.feature_id);
            }
        }
    }
    let gaps = covering
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_empty())
        .map(|(o, _)| o)
        .collect();
    Ok(GapReport {
        threshold_sigma,
        orientations: orientations.to_vec(),
        covering,
        gaps,
    })
}
