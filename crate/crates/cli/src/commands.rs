use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use saescope_core::analysis::{
    branch_scores, l1_sweep, profile_features, write_profile_csv, write_profile_jsonl, write_profile_summary_csv,
    write_sweep_csv, write_sweep_jsonl, BranchMap, BranchNorm,
};
use saescope_core::numerics::Matrix;
use saescope_core::sae::{load_model, save_model, train, TrainConfig};
use saescope_core::stimuli::{
    gap_report, radial_plot, stimulus_grid, tuning_curve, tuning_curve_self_baseline, ActivationSource, Baseline,
    ProbeBank, RecordedActivations, TuningCurve, DEFAULT_ORIENTATIONS, DEFAULT_RADII, DEFAULT_SIZE, DEFAULT_THICKNESS,
};
use saescope_core::store::{InMemorySource, RecordSource, ShardSet};
use saescope_core::toy::{double_feature_experiment, generate_toy, recovery, CorrelatedPair, ToySpec};
use saescope_core::Error;

use crate::config::{ConfigError, RunConfig};

/// Toy-scale sparsity coefficient; the tabulated layer values are tied to
/// real activation magnitudes.
pub const TOY_LAMBDA: f32 = 1.0;
pub const TOY_SAMPLES: usize = 1_000_000;
pub const TOY_TOTAL_SAMPLES: u64 = 20_000_000;
pub const TOY_DOUBLE_LAMBDAS: [f32; 3] = [0.3, 1.0, 1.5];
pub const DEFAULT_EVAL_RECORDS: usize = 100_000;
pub const DEFAULT_EXAMPLES_PER_BIN: usize = 10;
pub const DEFAULT_THRESHOLD_SIGMA: f64 = 3.0;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn open_shards(cfg: &RunConfig, key: &str) -> Result<ShardSet> {
    let dir = cfg.dir(key)?;
    let layer: Option<String> = cfg.get("layer")?;
    let set = ShardSet::from_dir(&dir, layer.as_deref())?;
    if set.paths().is_empty() {
        return Err(ConfigError(format!("no .acts shards in {}", dir.display())).into());
    }
    Ok(set)
}

/// Training settings: tabulated layer defaults (or `fallback`), then
/// explicit keys. Without either, `expansion_factor` and, if `needs_lambda`,
/// `lambda` must be given.
fn train_config(cfg: &RunConfig, fallback: Option<TrainConfig>, needs_lambda: bool) -> Result<TrainConfig> {
    let layer: Option<String> = cfg.get("layer")?;
    let tabulated = layer.as_deref().and_then(TrainConfig::for_layer);
    let mut t = match tabulated.or(fallback) {
        Some(t) => t,
        None => {
            if (needs_lambda && cfg.raw("lambda").is_none()) || cfg.raw("expansion_factor").is_none() {
                let name = layer.unwrap_or_else(|| "<none>".into());
                return Err(ConfigError(format!(
                    "layer `{name}` has no tabulated defaults; set `lambda` and `expansion_factor`"
                ))
                .into());
            }
            TrainConfig::default()
        }
    };
    if needs_lambda {
        t.lambda = cfg.get_or("lambda", t.lambda)?;
    }
    t.expansion_factor = cfg.get_or("expansion_factor", t.expansion_factor)?;
    t.batch_size = cfg.get_or("batch_size", t.batch_size)?;
    t.total_samples = cfg.get_or("total_samples", t.total_samples)?;
    t.lr = cfg.get_or("lr", t.lr)?;
    t.dead_window = cfg.get_or("dead_window", t.dead_window)?;
    t.shuffle_buffer = cfg.get_or("shuffle_buffer", t.shuffle_buffer)?;
    t.log_every = cfg.get_or("log_every", t.log_every)?;
    t.threads = cfg.get_or("threads", t.threads)?;
    t.seed = cfg.seed()?;
    t.validate()?;
    Ok(t)
}

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let mut shards = open_shards(cfg, "shards")?;
    let tc = train_config(cfg, None, true)?;
    let out = cfg.out_dir()?;
    let (model, report) = train(&mut shards, &tc)?;
    save_model(&model, out.join("model.sae1"))?;
    write_json(&out.join("train_report.json"), &report)?;
    let last = report.intervals.last();
    println!(
        "trained {} features on {} samples ({} steps); final recon {:.6} sparsity {:.6}; {} dead",
        model.n_features(),
        report.samples,
        report.steps,
        last.map_or(f64::NAN, |i| i.recon),
        last.map_or(f64::NAN, |i| i.sparsity),
        report.dead_features
    );
    Ok(())
}

pub fn cmd_profile(cfg: &RunConfig) -> Result<()> {
    let mut shards = open_shards(cfg, "shards")?;
    let model = load_model(cfg.file("model")?)?;
    let per_bin = cfg.get_or("examples_per_bin", DEFAULT_EXAMPLES_PER_BIN)?;
    let out = cfg.out_dir()?;
    let profiles = profile_features(&model, &mut shards, per_bin, cfg.seed()?)?;
    let finish = |path: PathBuf, f: &dyn Fn(&mut BufWriter<File>) -> saescope_core::Result<()>| -> Result<()> {
        let mut w = create(&path)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    };
    finish(out.join("profile_examples.csv"), &|w| write_profile_csv(w, &profiles))?;
    finish(out.join("profile_summary.csv"), &|w| write_profile_summary_csv(w, &profiles))?;
    finish(out.join("profile.jsonl"), &|w| write_profile_jsonl(w, &profiles))?;
    let dead = profiles.iter().filter(|p| p.dead).count();
    println!("profiled {} features ({dead} dead)", profiles.len());
    Ok(())
}

/// `(mean, std)` per feature from a profile summary CSV.
fn read_baselines(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| ConfigError(format!("{}: no `{name}` column", path.display())))
    };
    let (fi, mi, si) = (col("feature_id")?, col("mean")?, col("std")?);
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<f64> {
            cells
                .get(i)
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| ConfigError(format!("{} line {}: bad row", path.display(), n + 2)).into())
        };
        let id = parse(fi)? as usize;
        if id != out.len() {
            bail!(ConfigError(format!("{}: feature ids out of order at {id}", path.display())));
        }
        out.push((parse(mi)?, parse(si)?));
    }
    Ok(out)
}

pub fn cmd_tune(cfg: &RunConfig) -> Result<()> {
    let model = load_model(cfg.file("model")?)?;
    let n_o = cfg.get_or("orientations", DEFAULT_ORIENTATIONS)?;
    let radii = cfg.list("radii")?.unwrap_or_else(|| DEFAULT_RADII.to_vec());
    let size = cfg.get_or("size", DEFAULT_SIZE)?;
    let thickness = cfg.get_or("thickness", DEFAULT_THICKNESS)?;
    let threshold = cfg.get_or("threshold_sigma", DEFAULT_THRESHOLD_SIGMA)?;
    let grid = stimulus_grid(n_o, &radii, size, thickness)?;

    let source: Box<dyn ActivationSource> = if cfg.raw("activations").is_some() {
        Box::new(RecordedActivations::from_shard(&grid, cfg.file("activations")?)?)
    } else {
        let thetas: Vec<f64> = cfg.list("probe_orientations")?.ok_or_else(|| {
            ConfigError("`tune` needs `activations` or `probe_orientations`".into())
        })?;
        let r = cfg.get_or("probe_radius", radii[0])?;
        let filters = thetas
            .iter()
            .map(|&t| saescope_core::stimuli::render_curve(t, r, size, thickness))
            .collect::<saescope_core::Result<Vec<_>>>()?;
        Box::new(ProbeBank::from_stimuli(&filters)?)
    };

    // without an explicit list, features with a degenerate baseline are skipped
    let listed: Option<Vec<usize>> = cfg.list("features")?;
    let explicit = listed.is_some();
    let features = listed.unwrap_or_else(|| (0..model.n_features()).collect());
    let baseline_key = cfg.raw("baseline").map(str::to_string);
    let dataset = match baseline_key.as_deref() {
        None => return Err(ConfigError("`tune` needs `baseline` (profile summary CSV or 'stimuli')".into()).into()),
        Some("stimuli") => None,
        Some(_) => Some(read_baselines(&cfg.file("baseline")?)?),
    };

    let out = cfg.out_dir()?;
    let mut curves: Vec<TuningCurve> = Vec::with_capacity(features.len());
    let mut skipped = 0;
    for &f in &features {
        let curve = match &dataset {
            None => tuning_curve_self_baseline(&model, f, &grid, source.as_ref()),
            Some(stats) => {
                let &(mean, std) = stats
                    .get(f)
                    .ok_or_else(|| ConfigError(format!("baseline has no row for feature {f}")))?;
                tuning_curve(&model, f, &grid, source.as_ref(), Baseline::dataset(mean, std))
            }
        };
        let curve = match curve {
            Err(Error::DegenerateBaseline { .. }) if !explicit => {
                skipped += 1;
                continue;
            }
            other => other?,
        };
        for (ri, r) in grid.radii.iter().enumerate() {
            let plot = radial_plot(&curve, ri)?;
            let stem = format!("tune_f{f}_r{r}");
            fs::write(out.join(format!("{stem}.svg")), plot.svg)?;
            fs::write(out.join(format!("{stem}.csv")), plot.csv)?;
        }
        curves.push(curve);
    }
    let gaps = gap_report(&grid.orientations, &curves, threshold)?;
    write_json(&out.join("gaps.json"), &gaps)?;
    let mut w = create(&out.join("tuning.jsonl"))?;
    for c in &curves {
        serde_json::to_writer(&mut w, c)?;
        writeln!(w)?;
    }
    w.flush()?;
    if skipped > 0 {
        eprintln!("skipped {skipped} features with zero baseline spread");
    }
    println!(
        "tuned {} features over {} stimuli; {} of {} orientations uncovered at {threshold} sigma",
        curves.len(),
        grid.len(),
        gaps.gaps.len(),
        n_o
    );
    Ok(())
}

fn take_matrix(source: &mut dyn RecordSource, n: usize) -> Result<Matrix> {
    let mut rows = Vec::with_capacity(n.min(1 << 20));
    for r in source.pass()?.take(n) {
        rows.push(r?.values);
    }
    if rows.is_empty() {
        bail!(ConfigError("evaluation set is empty".into()));
    }
    Ok(Matrix::from_rows(&rows)?)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let lambdas: Vec<f32> = cfg.list("lambdas")?.ok_or_else(|| ConfigError("`sweep` needs `lambdas`".into()))?;
    if lambdas.len() < 2 {
        return Err(ConfigError("need ≥2 lambdas".into()).into());
    }
    let mut shards = open_shards(cfg, "shards")?;
    let tc = train_config(cfg, None, false)?;
    let n_eval = cfg.get_or("eval_records", DEFAULT_EVAL_RECORDS)?;
    let eval = if cfg.raw("eval_shards").is_some() {
        take_matrix(&mut open_shards(cfg, "eval_shards")?, n_eval)?
    } else {
        take_matrix(&mut shards, n_eval)?
    };
    let anchors: Vec<usize> = cfg.list("anchors")?.unwrap_or_else(|| (0..tc.expansion_factor * eval.cols()).collect());
    let out = cfg.out_dir()?;
    let (result, models) = l1_sweep(&mut shards, &tc, &lambdas, &anchors, &eval)?;
    for (k, m) in models.iter().enumerate() {
        save_model(m, out.join(format!("sweep_{k}.sae1")))?;
    }
    let mut w = create(&out.join("sweep.csv"))?;
    write_sweep_csv(&mut w, &result)?;
    w.flush()?;
    let mut w = create(&out.join("sweep.jsonl"))?;
    write_sweep_jsonl(&mut w, &result)?;
    w.flush()?;
    for row in &result.rows {
        println!("lambda {}: eval recon {:.6}", row.lambda, row.recon_mse);
    }
    Ok(())
}

pub fn cmd_toy(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.seed()?;
    let mut spec = ToySpec {
        seed,
        ..ToySpec::default()
    };
    spec.n_true = cfg.get_or("n_true", spec.n_true)?;
    spec.d_model = cfg.get_or("d_model", spec.d_model)?;
    spec.p = cfg.get_or("p", spec.p)?;
    let pair: Option<Vec<f64>> = cfg.list("pair")?;
    if let Some(p) = &pair {
        let [i, j, q] = p[..] else {
            bail!(ConfigError("`pair` is i,j,q".into()));
        };
        spec.pairs.push(CorrelatedPair {
            i: i as usize,
            j: j as usize,
            q,
        });
    }
    spec.validate()?;
    let n_samples = cfg.get_or("samples", TOY_SAMPLES)?;
    let defaults = TrainConfig {
        lambda: TOY_LAMBDA,
        expansion_factor: 4,
        total_samples: TOY_TOTAL_SAMPLES,
        ..TrainConfig::default()
    };
    let tc = train_config(cfg, Some(defaults), true)?;
    let out = cfg.out_dir()?;

    if pair.is_some() {
        let lambdas = cfg.list("lambdas")?.unwrap_or_else(|| TOY_DOUBLE_LAMBDAS.to_vec());
        let n_eval = cfg.get_or("eval_records", DEFAULT_EVAL_RECORDS)?;
        let report = double_feature_experiment(&spec, &tc, &lambdas, n_samples, n_eval)?;
        write_json(&out.join("double_feature.json"), &report)?;
        let mut w = create(&out.join("sweep.csv"))?;
        write_sweep_csv(&mut w, &report.sweep)?;
        w.flush()?;
        for r in &report.rows {
            println!(
                "lambda {}: merged {:.4} singletons {:.4} {:.4}",
                r.lambda, r.merged_max, r.left_max, r.right_max
            );
        }
        return Ok(());
    }

    let data = generate_toy(&spec, n_samples)?;
    data.save_directions(out.join("directions.sae1"))?;
    if cfg.get_or("write_shards", false)? {
        let dir = out.join("shards");
        fs::create_dir_all(&dir)?;
        data.write_shards(&dir, "toy", 100_000)?;
    }
    let g = data.directions.clone();
    let mut source: InMemorySource = data.into_source();
    let (model, report) = train(&mut source, &tc)?;
    save_model(&model, out.join("model.sae1"))?;
    write_json(&out.join("train_report.json"), &report)?;
    let rec = recovery(&model, &g)?;
    write_json(&out.join("recovery.json"), &rec)?;
    println!("mmcs {:.4} ({} dead features)", rec.mmcs, report.dead_features);
    Ok(())
}

pub fn cmd_branch(cfg: &RunConfig) -> Result<()> {
    let model = load_model(cfg.file("model")?)?;
    let spec: String = cfg.require("branches")?;
    let map = BranchMap::parse(model.d_model(), &spec)?;
    let norm = match cfg.raw("norm").unwrap_or("l2") {
        "l2" => BranchNorm::L2,
        "l1" => BranchNorm::L1,
        other => bail!(ConfigError(format!("unknown norm `{other}` (l2 or l1)"))),
    };
    let scores = branch_scores(&model, &map, norm)?;
    let out = cfg.out_dir()?;
    let mut w = create(&out.join("branch_scores.csv"))?;
    let names: Vec<&str> = map.branches().iter().map(|b| b.name.as_str()).collect();
    writeln!(w, "feature_id,{}", names.join(","))?;
    for (i, row) in scores.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{i},{}", cells.join(","))?;
    }
    w.flush()?;
    println!("scored {} features over {} branches", scores.len(), names.len());
    Ok(())
}
