use super::objective::{accumulate, check_decoder, Accum, Prepared};
use super::{Param, SaeModel, TrainConfig};
use crate::numerics::{rng_for, AdamState, Matrix, Stream};
use crate::store::{shuffled_pass, RecordSource};
use crate::{Error, Result};

/// Mean losses over one logging interval.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IntervalLoss {
    /// Step index of the last step in the interval (1-based).
    pub step: u64,
    pub samples: u64,
    pub recon: f64,
    pub sparsity: f64,
}

impl IntervalLoss {
    pub fn total(&self) -> f64 {
        self.recon + self.sparsity
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TrainReport {
    pub intervals: Vec<IntervalLoss>,
    pub dead_features: usize,
    /// `true` for features with no activation in the trailing dead window.
    pub dead: Vec<bool>,
    /// Largest activation per feature over the last logging interval.
    pub feature_max: Vec<f32>,
    pub steps: u64,
    pub samples: u64,
    pub epochs: u64,
}

struct Optimizer {
    states: Vec<AdamState>,
}

impl Optimizer {
    fn new(model: &SaeModel, config: &TrainConfig) -> Self {
        let states = Param::ALL
            .iter()
            .map(|&p| AdamState::for_params(model.param(p), config.adam()))
            .collect();
        Self { states }
    }

    fn step(&mut self, model: &mut SaeModel, grads: &super::Gradients) -> Result<()> {
        for (state, &p) in self.states.iter_mut().zip(Param::ALL.iter()) {
            state.update(model.param_mut(p), grads.get(p))?;
        }
        Ok(())
    }
}

/// Train a fresh model on `source` with Adam until `config.total_samples`
/// samples have been consumed.
///
/// Each epoch is one pass over the source through a shuffle buffer seeded by
/// `(seed, epoch)`. With `threads == 1` the result is a pure function of the
/// source contents and the config.
pub fn train<S: RecordSource + ?Sized>(source: &mut S, config: &TrainConfig) -> Result<(SaeModel, TrainReport)> {
    config.validate()?;
    let d = source
        .d_model()
        .ok_or_else(|| Error::Parameter("training source holds no records".into()))?;
    let mut model = SaeModel::init(d, config, &mut rng_for(config.seed, Stream::Init))?;
    let n = model.n_features();
    let lambda = config.lambda as f64;
    let mut opt = Optimizer::new(&model, config);

    let mut batch: Vec<f32> = Vec::with_capacity(config.batch_size * d);
    let mut acc = Accum::new(d, n, true);
    let mut interval = (0u64, 0.0f64, 0.0f64);
    let mut intervals = Vec::new();
    let mut last_fired: Vec<Option<u64>> = vec![None; n];
    let mut cur_max = vec![0.0f64; n];
    let mut prev_max = vec![0.0f64; n];

    let mut samples = 0u64;
    let mut steps = 0u64;
    let mut epochs = 0u64;

    'training: while samples < config.total_samples {
        let rng = rng_for(config.seed, Stream::Shuffle(epochs));
        epochs += 1;
        let mut seen_this_epoch = 0u64;
        let pass = shuffled_pass(source, config.shuffle_buffer, rng)?;
        for record in pass {
            let record = record?;
            if record.values.len() != d {
                return Err(crate::FormatError::MixedWidth {
                    expected: d,
                    found: record.values.len(),
                }
                .into());
            }
            seen_this_epoch += 1;
            batch.extend_from_slice(&record.values);
            let remaining = config.total_samples - samples;
            let want = (config.batch_size as u64).min(remaining) as usize;
            if batch.len() / d < want {
                continue;
            }

            // one optimizer step
            let prep = Prepared::new(&model);
            check_decoder(&prep)?;
            acc.reset();
            accumulate(&prep, lambda, &batch, true, config.threads, &mut acc);
            let loss = acc.breakdown(lambda);
            if !loss.total.is_finite() {
                return Err(Error::Divergence {
                    step: steps,
                    reason: "non-finite loss".into(),
                });
            }
            let grads = acc.gradients(d, n).map_err(|e| with_step(e, steps))?;
            drop(prep);
            opt.step(&mut model, &grads).map_err(|e| with_step(e, steps))?;

            let b = (batch.len() / d) as u64;
            samples += b;
            steps += 1;
            batch.clear();
            for i in 0..n {
                if acc.max_f[i] > 0.0 {
                    last_fired[i] = Some(samples);
                    cur_max[i] = cur_max[i].max(acc.max_f[i]);
                }
            }
            interval.0 += 1;
            interval.1 += loss.recon;
            interval.2 += loss.sparsity;
            if interval.0 == config.log_every {
                intervals.push(IntervalLoss {
                    step: steps,
                    samples,
                    recon: interval.1 / interval.0 as f64,
                    sparsity: interval.2 / interval.0 as f64,
                });
                interval = (0, 0.0, 0.0);
                prev_max = std::mem::replace(&mut cur_max, vec![0.0; n]);
            }
            if samples >= config.total_samples {
                break 'training;
            }
        }
        if seen_this_epoch == 0 {
            return Err(Error::Parameter("training source produced no records".into()));
        }
    }
    if interval.0 > 0 {
        intervals.push(IntervalLoss {
            step: steps,
            samples,
            recon: interval.1 / interval.0 as f64,
            sparsity: interval.2 / interval.0 as f64,
        });
    }
    let feature_max: Vec<f32> = if cur_max.iter().any(|&v| v > 0.0) || prev_max.iter().all(|&v| v == 0.0) {
        cur_max.iter().zip(&prev_max).map(|(a, b)| a.max(*b) as f32).collect()
    } else {
        prev_max.iter().map(|&v| v as f32).collect()
    };
    let window_start = samples.saturating_sub(config.dead_window);
    let dead: Vec<bool> = last_fired
        .iter()
        .map(|f| match f {
            None => true,
            Some(at) => *at <= window_start && window_start > 0,
        })
        .collect();
    let report = TrainReport {
        intervals,
        dead_features: dead.iter().filter(|&&x| x).count(),
        dead,
        feature_max,
        steps,
        samples,
        epochs,
    };
    Ok((model, report))
}

fn with_step(e: Error, step: u64) -> Error {
    match e {
        Error::Divergence { reason, .. } => Error::Divergence { step, reason },
        other => other,
    }
}

/// Mean reconstruction error of `model` over `rows` (one sample per row).
pub fn reconstruction_mse(model: &SaeModel, rows: &Matrix) -> Result<f64> {
    Ok(model.loss(rows, 0.0)?.recon)
}
