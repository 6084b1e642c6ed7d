use proptest::collection::vec;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::Rng;
use saescope_core::analysis::{profile_features, N_INTERVALS};
use saescope_core::numerics::{rng_for, Matrix, Stream};
use saescope_core::sae::{layer_defaults, load_model, model_file_len, save_model, SaeModel, TrainConfig};
use saescope_core::store::{proportional_sample, write_shard, ActivationRecord, InMemorySource, PositionGrid, ShardReader};

const DRAWS: usize = 1_000_000;
/// 0.99 quantile of the chi-square distribution with 3 degrees of freedom.
const CHI2_3DF_P01: f64 = 11.345;

fn draw_frequencies(norms: &[f32], seed: u64) -> Result<Vec<f64>, String> {
    let grid = PositionGrid::new(0, 2, 2, 1, norms.to_vec()).map_err(|e| e.to_string())?;
    let mut rng = rng_for(seed, Stream::Positions);
    let mut counts = [0u64; 4];
    for _ in 0..DRAWS {
        let r = proportional_sample(&grid, 1, &mut rng).map_err(|e| e.to_string())?;
        counts[r[0].pos_y as usize * 2 + r[0].pos_x as usize] += 1;
    }
    Ok(counts.iter().map(|&c| c as f64 / DRAWS as f64).collect())
}

pub fn oversampler_statistics() -> Result<String, String> {
    let freq = draw_frequencies(&[1.0, 2.0, 3.0, 4.0], 1)?;
    let expect = [0.1, 0.2, 0.3, 0.4];
    let dev = freq.iter().zip(&expect).map(|(f, e)| (f - e).abs()).fold(0.0, f64::max);
    if dev > 0.01 {
        return Err(format!("frequencies {freq:.4?}, max deviation {dev:.4} > 0.01"));
    }
    let uniform = draw_frequencies(&[1.0; 4], 2)?;
    let e = DRAWS as f64 / 4.0;
    let chi2: f64 = uniform.iter().map(|f| (f * DRAWS as f64 - e).powi(2) / e).sum();
    if chi2 >= CHI2_3DF_P01 {
        return Err(format!("uniform-norm chi-square {chi2:.3} >= {CHI2_3DF_P01} (p <= 0.01)"));
    }
    Ok(format!(
        "norms [1,2,3,4] -> {freq:.4?} (max deviation {dev:.4} <= 0.01); uniform chi-square {chi2:.3} < {CHI2_3DF_P01} (p > 0.01)"
    ))
}

fn passthrough() -> SaeModel {
    SaeModel::from_parts(Matrix::identity(1), vec![0.0], Matrix::identity(1), vec![0.0]).unwrap()
}

pub fn interval_binning() -> Result<String, String> {
    let mut runner = TestRunner::new(Config {
        cases: 200,
        ..Config::default()
    });
    let strategy = (vec(0.0f32..1.0, 1..400), 0.01f32..100.0, 1usize..8, 0u64..1000);
    let mut examples = 0usize;
    runner
        .run(&strategy, |(values, scale, per_bin, seed)| {
            let stream: Vec<Vec<f32>> = values.iter().map(|v| vec![v * scale]).collect();
            let profile = profile_features(&passthrough(), &mut InMemorySource::from_vectors(stream), per_bin, seed)
                .map_err(|e| TestCaseError::fail(e.to_string()))?
                .remove(0);
            if profile.bins.len() != N_INTERVALS || N_INTERVALS != 10 {
                return Err(TestCaseError::fail(format!("{} intervals", profile.bins.len())));
            }
            let max = profile.max_activation as f64;
            for (k, bin) in profile.bins.iter().enumerate() {
                let (lo, hi) = (max * k as f64 / 10.0, max * (k + 1) as f64 / 10.0);
                if (bin.lo - lo).abs() > 1e-12 * max || (bin.hi - hi).abs() > 1e-12 * max {
                    return Err(TestCaseError::fail(format!("interval {k} = [{}, {}) for max {max}", bin.lo, bin.hi)));
                }
                for ex in &bin.examples {
                    let a = ex.activation as f64;
                    let inside = a >= bin.lo && (a < bin.hi || (k == N_INTERVALS - 1 && a <= bin.hi));
                    if !inside {
                        return Err(TestCaseError::fail(format!("{a} outside interval {k} [{}, {})", bin.lo, bin.hi)));
                    }
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    examples += 200;
    Ok(format!(
        "{examples} random streams: 10 evenly spaced intervals on [0, max], every example inside its interval"
    ))
}

pub fn formats() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = rng_for(3, Stream::Custom(200));
    let (d, n) = (7usize, 21usize);

    let records: Vec<ActivationRecord> = (0..50)
        .map(|i| ActivationRecord::new(i, rng.gen(), rng.gen(), (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect()))
        .collect();
    let (a, b) = (dir.path().join("a.acts"), dir.path().join("b.acts"));
    write_shard(&a, d, &records).map_err(|e| e.to_string())?;
    let back: Vec<ActivationRecord> = ShardReader::open(&a)
        .map_err(|e| e.to_string())?
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    write_shard(&b, d, &back).map_err(|e| e.to_string())?;
    let bytes = std::fs::read(&a).map_err(|e| e.to_string())?;
    if back != records || bytes != std::fs::read(&b).map_err(|e| e.to_string())? {
        return Err("ACTS round trip differs".into());
    }
    if &bytes[..4] != b"ACTS" || bytes.len() != 32 + 50 * (8 + 4 * d) {
        return Err(format!("ACTS layout: {} bytes", bytes.len()));
    }
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    if count != 50 {
        return Err(format!("ACTS header record count {count}"));
    }

    let cfg = TrainConfig {
        expansion_factor: 3,
        ..TrainConfig::default()
    };
    let model = SaeModel::init(d, &cfg, &mut rng).map_err(|e| e.to_string())?;
    let (ma, mb) = (dir.path().join("a.sae1"), dir.path().join("b.sae1"));
    save_model(&model, &ma).map_err(|e| e.to_string())?;
    save_model(&load_model(&ma).map_err(|e| e.to_string())?, &mb).map_err(|e| e.to_string())?;
    let mbytes = std::fs::read(&ma).map_err(|e| e.to_string())?;
    if mbytes != std::fs::read(&mb).map_err(|e| e.to_string())? {
        return Err("SAE1 round trip differs".into());
    }
    let expect_len = 16 + 4 * (2 * d * n + n + d);
    if &mbytes[..4] != b"SAE1" || mbytes.len() != expect_len || model_file_len(d, n) != expect_len as u64 {
        return Err(format!("SAE1 layout: {} bytes, expected {expect_len}", mbytes.len()));
    }

    let table: [(&str, f32, usize); 5] = [
        ("conv2d0", 1e-7, 2),
        ("conv2d1", 5e-6, 4),
        ("conv2d2", 5e-6, 4),
        ("mixed3a", 3.5e-6, 8),
        ("mixed3b", 3.5e-6, 8),
    ];
    for (layer, lambda, e) in table {
        let t = TrainConfig::for_layer(layer).ok_or_else(|| format!("no defaults for {layer}"))?;
        let row = layer_defaults(layer).unwrap();
        if t.lambda != lambda || t.expansion_factor != e || row.lambda != lambda || row.expansion_factor != e {
            return Err(format!("{layer}: λ={} expansion {}", t.lambda, t.expansion_factor));
        }
    }
    if TrainConfig::for_layer("mixed4a").is_some() {
        return Err("untabulated layer resolved to defaults".into());
    }
    Ok(format!(
        "ACTS ({} bytes) and SAE1 ({} bytes) round trips byte-identical; layer defaults resolve for 5 layers (mixed3b λ=3.5e-6, 8x)",
        bytes.len(),
        mbytes.len()
    ))
}
