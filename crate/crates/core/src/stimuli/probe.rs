use std::path::Path;

use super::{CurveStimulus, StimulusGrid};
use crate::store::ShardReader;
use crate::{Error, FormatError, Result};

/// Linear filters over `size × size` images, each with unit Frobenius norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeBank {
    size: usize,
    filters: Vec<Vec<f32>>,
}

fn centred(pixels: &[f32]) -> Vec<f64> {
    let mean = pixels.iter().map(|&v| v as f64).sum::<f64>() / pixels.len() as f64;
    pixels.iter().map(|&v| v as f64 - mean).collect()
}

impl ProbeBank {
    /// Normalises every filter to unit Frobenius norm.
    pub fn new(size: usize, filters: Vec<Vec<f32>>) -> Result<Self> {
        let mut out = Vec::with_capacity(filters.len());
        for (k, f) in filters.into_iter().enumerate() {
            if f.len() != size * size {
                return Err(Error::Dimension(format!("filter {k} has {} weights, need {}", f.len(), size * size)));
            }
            let n = f.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::Parameter(format!("filter {k} has norm {n}")));
            }
            out.push(f.iter().map(|&v| (v as f64 / n) as f32).collect());
        }
        Ok(Self { size, filters: out })
    }

    /// One filter per stimulus: its mean-centred pixels, normalised.
    pub fn from_stimuli(stimuli: &[CurveStimulus]) -> Result<Self> {
        let size = stimuli
            .first()
            .map(|s| s.size)
            .ok_or_else(|| Error::Parameter("no stimuli for probe bank".into()))?;
        let filters = stimuli
            .iter()
            .map(|s| {
                if s.size != size {
                    return Err(Error::Dimension(format!("stimulus size {} vs {size}", s.size)));
                }
                Ok(centred(&s.pixels).into_iter().map(|v| v as f32).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(size, filters)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn filter(&self, k: usize) -> &[f32] {
        &self.filters[k]
    }
}

/// `ReLU(<filter, pixels - mean(pixels)>)` for every filter.
pub fn probe_response(bank: &ProbeBank, stimulus: &CurveStimulus) -> Result<Vec<f32>> {
    if stimulus.size != bank.size {
        return Err(Error::Dimension(format!(
            "stimulus size {} vs bank size {}",
            stimulus.size, bank.size
        )));
    }
    let x = centred(&stimulus.pixels);
    Ok(bank
        .filters
        .iter()
        .map(|f| {
            let dot: f64 = f.iter().zip(&x).map(|(&w, &v)| w as f64 * v).sum();
            dot.max(0.0) as f32
        })
        .collect())
}

/// Activation vector of a layer at the image centre for one stimulus.
pub trait ActivationSource {
    fn d_model(&self) -> usize;
    fn activations(&self, stimulus: &CurveStimulus) -> Result<Vec<f32>>;
}

impl ActivationSource for ProbeBank {
    fn d_model(&self) -> usize {
        self.len()
    }

    fn activations(&self, stimulus: &CurveStimulus) -> Result<Vec<f32>> {
        probe_response(self, stimulus)
    }
}

/// Precomputed activations for the stimuli of a grid, keyed by position in
/// the grid: record `k` belongs to `grid.stimuli[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedActivations {
    keys: Vec<(u64, u64)>,
    vectors: Vec<Vec<f32>>,
    d_model: usize,
}

fn key(s: &CurveStimulus) -> (u64, u64) {
    (s.orientation.to_bits(), s.radius.to_bits())
}

impl RecordedActivations {
    pub fn new(grid: &StimulusGrid, vectors: Vec<Vec<f32>>) -> Result<Self> {
        if vectors.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} activation vectors for {} stimuli",
                vectors.len(),
                grid.len()
            )));
        }
        let d_model = vectors.first().map_or(0, Vec::len);
        if let Some(v) = vectors.iter().find(|v| v.len() != d_model) {
            return Err(FormatError::MixedWidth {
                expected: d_model,
                found: v.len(),
            }
            .into());
        }
        Ok(Self {
            keys: grid.stimuli.iter().map(key).collect(),
            vectors,
            d_model,
        })
    }

    /// Reads an ACTS shard whose `image_id` is the stimulus index in `grid`.
    pub fn from_shard(grid: &StimulusGrid, path: impl AsRef<Path>) -> Result<Self> {
        let mut vectors: Vec<Option<Vec<f32>>> = vec![None; grid.len()];
        for record in ShardReader::open(path)? {
            let record = record?;
            let slot = vectors.get_mut(record.image_id as usize).ok_or_else(|| {
                Error::Parameter(format!("image_id {} outside a grid of {}", record.image_id, grid.len()))
            })?;
            *slot = Some(record.values);
        }
        let vectors = vectors
            .into_iter()
            .enumerate()
            .map(|(k, v)| v.ok_or_else(|| Error::Parameter(format!("no activation for stimulus {k}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, vectors)
    }
}

impl ActivationSource for RecordedActivations {
    fn d_model(&self) -> usize {
        self.d_model
    }

    fn activations(&self, stimulus: &CurveStimulus) -> Result<Vec<f32>> {
        let k = key(stimulus);
        self.keys
            .iter()
            .position(|&x| x == k)
            .map(|i| self.vectors[i].clone())
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "no recorded activation for orientation {} radius {}",
                    stimulus.orientation, stimulus.radius
                ))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{rng_for, Stream};
    use crate::stimuli::{render_curve, stimulus_grid};
    use rand::Rng;

    #[test]
    fn matched_filter_gives_centred_norm() {
        let s = render_curve(1.0, 8.0, 32, 2.0).unwrap();
        let bank = ProbeBank::from_stimuli(std::slice::from_ref(&s)).unwrap();
        let r = probe_response(&bank, &s).unwrap()[0] as f64;
        let expect = centred(&s.pixels).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((r - expect).abs() < 1e-4 * expect);
    }

    #[test]
    fn constant_filter_is_orthogonal_to_centred_input() {
        let s = render_curve(1.0, 8.0, 16, 2.0).unwrap();
        let bank = ProbeBank::new(16, vec![vec![1.0; 256]]).unwrap();
        assert!(probe_response(&bank, &s).unwrap()[0].abs() < 1e-6);
    }

    #[test]
    fn random_filters_match_naive_inner_product() {
        let mut rng = rng_for(0, Stream::Custom(40));
        let s = render_curve(2.0, 10.0, 16, 3.0).unwrap();
        let raw: Vec<Vec<f32>> = (0..5).map(|_| (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let bank = ProbeBank::new(16, raw.clone()).unwrap();
        let got = probe_response(&bank, &s).unwrap();
        let mean = s.pixels.iter().map(|&v| v as f64).sum::<f64>() / 256.0;
        for (f, g) in raw.iter().zip(got) {
            let n = f.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
            let mut dot = 0.0;
            for (w, p) in f.iter().zip(&s.pixels) {
                dot += *w as f64 / n * (*p as f64 - mean);
            }
            assert!((g as f64 - dot.max(0.0)).abs() < 1e-5);
        }
        for k in 0..bank.len() {
            let n: f64 = bank.filter(k).iter().map(|&v| (v as f64).powi(2)).sum();
            assert!((n - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn size_mismatch() {
        let bank = ProbeBank::new(16, vec![vec![1.0; 256]]).unwrap();
        let s = render_curve(0.0, 8.0, 32, 2.0).unwrap();
        assert!(matches!(probe_response(&bank, &s), Err(Error::Dimension(_))));
    }

    #[test]
    fn recorded_lookup_follows_grid_order() {
        let grid = stimulus_grid(4, &[8.0], 16, 2.0).unwrap();
        let vectors: Vec<Vec<f32>> = (0..4).map(|k| vec![k as f32, 0.0]).collect();
        let rec = RecordedActivations::new(&grid, vectors).unwrap();
        assert_eq!(rec.activations(grid.get(0, 3)).unwrap(), vec![3.0, 0.0]);
        let other = render_curve(0.1, 8.0, 16, 2.0).unwrap();
        assert!(rec.activations(&other).is_err());
    }
}
