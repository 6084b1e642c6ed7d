use rand::Rng as _;
use serde::Serialize;

use super::top_neuron;
use crate::numerics::{rng_for, Stream};
use crate::sae::SaeModel;
use crate::store::RecordSource;
use crate::{Error, Result};

pub const N_INTERVALS: usize = 10;

/// `N_INTERVALS + 1` evenly spaced edges on `[0, max]`.
pub fn interval_edges(max: f32) -> [f64; N_INTERVALS + 1] {
    let mut e = [0.0; N_INTERVALS + 1];
    for (k, slot) in e.iter_mut().enumerate() {
        *slot = max as f64 * k as f64 / N_INTERVALS as f64;
    }
    e
}

/// Interval holding `a`: `edges[k] <= a < edges[k+1]`, with the top interval
/// closed at `max`. `None` for `a` outside `[0, max]` or `max <= 0`.
pub fn interval_index(a: f32, edges: &[f64; N_INTERVALS + 1]) -> Option<usize> {
    let a = a as f64;
    let max = edges[N_INTERVALS];
    if !(max > 0.0) || !(0.0..=max).contains(&a) {
        return None;
    }
    let mut k = ((a / max) * N_INTERVALS as f64).floor() as usize;
    k = k.min(N_INTERVALS - 1);
    // correct for rounding in the division
    while k > 0 && a < edges[k] {
        k -= 1;
    }
    while k + 1 < N_INTERVALS && a >= edges[k + 1] {
        k += 1;
    }
    Some(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Example {
    pub image_id: u32,
    pub pos_y: u16,
    pub pos_x: u16,
    pub activation: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// Number of records whose activation fell here.
    pub population: u64,
    pub examples: Vec<Example>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureProfile {
    pub feature_id: usize,
    pub max_activation: f32,
    pub mean: f64,
    pub std: f64,
    /// Fraction of records with a positive activation.
    pub density: f64,
    pub dead: bool,
    pub top_neuron: (usize, f32),
    pub bins: Vec<Interval>,
}

/// Two passes over `source`: activation statistics per feature, then up to
/// `examples_per_bin` uniformly sampled examples from each of the ten even
/// intervals of `[0, max]`. Only positive activations are binned.
pub fn profile_features<S: RecordSource + ?Sized>(
    model: &SaeModel,
    source: &mut S,
    examples_per_bin: usize,
    seed: u64,
) -> Result<Vec<FeatureProfile>> {
    let n = model.n_features();
    let mut max = vec![0.0f32; n];
    let mut sum = vec![0.0f64; n];
    let mut sum_sq = vec![0.0f64; n];
    let mut active = vec![0u64; n];
    let mut count = 0u64;

    for record in source.pass()? {
        let f = model.encode(&record?.values)?;
        count += 1;
        for (i, &v) in f.iter().enumerate() {
            if v > 0.0 {
                active[i] += 1;
                max[i] = max[i].max(v);
                sum[i] += v as f64;
                sum_sq[i] += v as f64 * v as f64;
            }
        }
    }
    if count == 0 {
        return Err(Error::Parameter("cannot profile an empty source".into()));
    }

    let edges: Vec<[f64; N_INTERVALS + 1]> = max.iter().map(|&m| interval_edges(m)).collect();
    let mut bins: Vec<Vec<Interval>> = edges
        .iter()
        .map(|e| {
            (0..N_INTERVALS)
                .map(|k| Interval {
                    lo: e[k],
                    hi: e[k + 1],
                    population: 0,
                    examples: Vec::new(),
                })
                .collect()
        })
        .collect();

    let mut rng = rng_for(seed, Stream::Reservoir);
    for record in source.pass()? {
        let record = record?;
        let f = model.encode(&record.values)?;
        for (i, &v) in f.iter().enumerate() {
            if v <= 0.0 {
                continue;
            }
            let Some(k) = interval_index(v, &edges[i]) else {
                continue;
            };
            let bin = &mut bins[i][k];
            bin.population += 1;
            let ex = Example {
                image_id: record.image_id,
                pos_y: record.pos_y,
                pos_x: record.pos_x,
                activation: v,
            };
            if bin.examples.len() < examples_per_bin {
                bin.examples.push(ex);
            } else if examples_per_bin > 0 {
                let j = rng.gen_range(0..bin.population);
                if (j as usize) < examples_per_bin {
                    bin.examples[j as usize] = ex;
                }
            }
        }
    }

    let c = count as f64;
    (0..n)
        .zip(bins)
        .map(|(i, bins)| {
            let mean = sum[i] / c;
            let var = (sum_sq[i] / c - mean * mean).max(0.0);
            Ok(FeatureProfile {
                feature_id: i,
                max_activation: max[i],
                mean,
                std: var.sqrt(),
                density: active[i] as f64 / c,
                dead: active[i] == 0,
                top_neuron: top_neuron(model, i)?,
                bins,
            })
        })
        .collect()
}
