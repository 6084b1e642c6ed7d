use std::time::{Duration, Instant};

use rand::Rng;
use saescope_core::numerics::{finite_diff_check_with, rng_for, Matrix, Stencil, Stream};
use saescope_core::sae::{reconstruction_mse, train, Param, SaeModel, TrainConfig};
use saescope_core::store::InMemorySource;
use saescope_core::toy::{double_feature_experiment, generate_toy, recovery, CorrelatedPair, ToySpec};

use crate::within;

const GRAD_TOL: f64 = 1e-4;
const KINK_MARGIN: f64 = 0.05;

/// `W_enc x + b_enc` in f64.
fn pre_activations(m: &SaeModel, x: &[f32]) -> Vec<f64> {
    (0..m.n_features())
        .map(|i| {
            m.w_enc().row(i).iter().zip(x).map(|(&w, &v)| w as f64 * v as f64).sum::<f64>() + m.b_enc()[i] as f64
        })
        .collect()
}

/// A perturbed initialisation and a batch whose rows keep every
/// pre-activation at least `KINK_MARGIN` from the ReLU kink.
fn instance(k: u64) -> (SaeModel, Matrix, f32) {
    let mut rng = rng_for(k, Stream::Custom(100));
    let d = rng.gen_range(2..=16);
    let e = rng.gen_range(1..=4);
    let lambda = [0.0, 1e-3, 1.0][k as usize % 3];
    let cfg = TrainConfig {
        expansion_factor: e,
        ..TrainConfig::default()
    };
    let mut m = SaeModel::init(d, &cfg, &mut rng).unwrap();
    for p in Param::ALL {
        for v in m.param_mut(p).as_mut_slice() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    let mut rows = Vec::new();
    while rows.len() < 4 {
        let x: Vec<f32> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if pre_activations(&m, &x).iter().all(|p| p.abs() > KINK_MARGIN) {
            rows.push(x);
        }
    }
    (m, Matrix::from_rows(&rows).unwrap(), lambda)
}

pub fn gradient_correctness() -> Result<String, String> {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for k in 0..50 {
        let (m, batch, lambda) = instance(k);
        let g = m.grad(&batch, lambda).map_err(|e| e.to_string())?;
        for p in Param::ALL {
            let mut probe = m.clone();
            let mut values = probe.param(p).as_slice().to_vec();
            let err = finite_diff_check_with(
                |v: &[f32]| {
                    probe.param_mut(p).as_mut_slice().copy_from_slice(v);
                    probe.loss(&batch, lambda).unwrap().total
                },
                &mut values,
                g.get(p).as_slice(),
                1e-3,
                Stencil::Richardson,
            )
            .map_err(|e| e.to_string())?;
            if err >= GRAD_TOL {
                return Err(format!("instance {k} λ={lambda} {p:?}: relative error {err:.2e}"));
            }
            worst = worst.max(err);
        }
    }
    within(
        Duration::from_secs(30),
        t,
        format!("50 instances, worst relative error {worst:.2e} < {GRAD_TOL:.0e}"),
    )
}

pub fn reconstruction_capacity() -> Result<String, String> {
    let t = Instant::now();
    let points: Vec<Vec<f32>> = (0..4)
        .map(|k| (0..4).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
        .collect();
    let eval = Matrix::from_rows(&points).unwrap();
    let cfg = TrainConfig {
        lambda: 0.0,
        expansion_factor: 2,
        total_samples: 50_000,
        batch_size: 16,
        shuffle_buffer: 4,
        log_every: 100,
        seed: 0,
        ..TrainConfig::default()
    };
    let (model, report) = train(&mut InMemorySource::from_vectors(points), &cfg).map_err(|e| e.to_string())?;
    let mse = reconstruction_mse(&model, &eval).map_err(|e| e.to_string())?;
    if mse >= 1e-3 {
        return Err(format!("MSE {mse:.2e} after {} samples", report.samples));
    }
    let rises: Vec<(u64, f64, f64)> = report
        .intervals
        .windows(2)
        .filter(|w| w[1].total() > w[0].total())
        .map(|w| (w[1].step, w[0].total(), w[1].total()))
        .collect();
    if let Some(&(step, a, b)) = rises.first() {
        return Err(format!(
            "MSE {mse:.2e}, but the 100-step mean loss rose at step {step}: {a:.3e} -> {b:.3e}"
        ));
    }
    within(
        Duration::from_secs(60),
        t,
        format!(
            "MSE {mse:.2e} < 1e-3 after {} samples; 100-step mean loss non-increasing over {} intervals",
            report.samples,
            report.intervals.len()
        ),
    )
}

pub const TOY_LAMBDA: f32 = 1.0;

pub fn toy_recovery() -> Result<String, String> {
    let t = Instant::now();
    let mut scores = Vec::new();
    for seed in 0..3 {
        let spec = ToySpec {
            seed,
            ..ToySpec::default()
        };
        let data = generate_toy(&spec, 1_000_000).map_err(|e| e.to_string())?;
        let g = data.directions.clone();
        let cfg = TrainConfig {
            lambda: TOY_LAMBDA,
            expansion_factor: 4,
            total_samples: 20_000_000,
            seed,
            log_every: 1000,
            ..TrainConfig::default()
        };
        let (model, _) = train(&mut data.into_source(), &cfg).map_err(|e| e.to_string())?;
        scores.push(recovery(&model, &g).map_err(|e| e.to_string())?.mmcs);
    }
    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[1];
    let detail = format!("mmcs per seed {scores:.4?}, median {median:.4}");
    if median < 0.9 {
        return Err(format!("{detail} < 0.9"));
    }
    within(Duration::from_secs(600), t, format!("{detail} >= 0.9"))
}

/// Sparsity coefficients of the correlated-pair sweep, bracketing the toy default.
const SPLIT_LAMBDAS: [f32; 3] = [0.3, 1.0, 1.5];

pub fn split_direction() -> Result<String, String> {
    let spec = ToySpec {
        pairs: vec![CorrelatedPair { i: 0, j: 1, q: 0.5 }],
        ..ToySpec::default()
    };
    let cfg = TrainConfig {
        expansion_factor: 4,
        total_samples: 4_000_000,
        log_every: 1000,
        ..TrainConfig::default()
    };
    let report = double_feature_experiment(&spec, &cfg, &SPLIT_LAMBDAS, 1_000_000, 100_000).map_err(|e| e.to_string())?;
    let fmt = |f: fn(&saescope_core::toy::DoubleFeatureRow) -> f64| {
        report.rows.iter().map(|r| format!("{:.3}", f(r))).collect::<Vec<_>>().join(" > ")
    };
    let detail = format!(
        "λ {SPLIT_LAMBDAS:?}: merged max {}; left {}; right {}",
        fmt(|r| r.merged_max),
        fmt(|r| r.left_max),
        fmt(|r| r.right_max)
    )
    .replace(" > ", " → ");
    match (report.merged_strictly_decreasing(), report.singletons_non_decreasing()) {
        (true, true) => Ok(format!("{detail}; merged strictly decreasing, singletons non-decreasing")),
        (dec, nondec) => Err(format!(
            "{detail}; merged strictly decreasing: {dec}, singletons non-decreasing: {nondec}"
        )),
    }
}
