use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use crate::within;

const BIN: &str = env!("CARGO_BIN_EXE_saescope");

/// `(command, out subdirectory, config)`; `{root}` expands to the run directory.
const PIPELINE: &[(&str, &str, &str)] = &[
    (
        "toy",
        "toy",
        "n_true = 8\nd_model = 4\nsamples = 4000\ntotal_samples = 20000\nbatch_size = 64\nwrite_shards = true\nlog_every = 50",
    ),
    (
        "train",
        "train",
        "shards = {root}/toy/shards\nlayer = toy\nlambda = 0.1\nexpansion_factor = 2\ntotal_samples = 20000\nbatch_size = 64\nshuffle_buffer = 512\nlog_every = 50",
    ),
    (
        "profile",
        "profile",
        "shards = {root}/toy/shards\nlayer = toy\nmodel = {root}/train/model.sae1\nexamples_per_bin = 3",
    ),
    (
        "tune",
        "tune",
        "model = {root}/train/model.sae1\norientations = 8\nradii = 8,12\nsize = 32\nthickness = 2\nprobe_orientations = 0,1.5,3,4.5\nprobe_radius = 8\nbaseline = {root}/profile/profile_summary.csv",
    ),
    (
        "sweep",
        "sweep",
        "shards = {root}/toy/shards\nlayer = toy\nlambdas = 0.01,0.1\nexpansion_factor = 2\ntotal_samples = 8000\nbatch_size = 64\nshuffle_buffer = 512\neval_records = 500\nanchors = 0,1,2",
    ),
    ("branch", "branch", "model = {root}/train/model.sae1\nbranches = a:0-2,b:2-4"),
    (
        "toy",
        "pair",
        "n_true = 8\nd_model = 4\npair = 0,1,0.5\nsamples = 3000\neval_records = 500\nlambdas = 0.01,0.1,0.3\ntotal_samples = 6000\nbatch_size = 64\nlog_every = 50",
    ),
];

fn run_pipeline(root: &Path) -> Result<(), String> {
    for (cmd, sub, body) in PIPELINE {
        let cfg_path = root.join(format!("{sub}.cfg"));
        let body = body.replace("{root}", &root.display().to_string());
        fs::write(&cfg_path, format!("{body}\nseed = 7\nout = {}/{sub}\n", root.display())).map_err(|e| e.to_string())?;
        let out = Command::new(BIN)
            .args([cmd, "--config"])
            .arg(&cfg_path)
            .args(["--threads", "1"])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("`{cmd}` ({sub}) failed: {}", String::from_utf8_lossy(&out.stderr).trim()));
        }
        fs::write(root.join(format!("{sub}.stdout")), &out.stdout).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn collect(dir: &Path, base: &Path, files: &mut BTreeMap<PathBuf, Vec<u8>>) -> Result<(), String> {
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path.is_dir() {
            collect(&path, base, files)?;
        } else {
            let bytes = fs::read(&path).map_err(|e| e.to_string())?;
            files.insert(path.strip_prefix(base).unwrap().to_path_buf(), bytes);
        }
    }
    Ok(())
}

/// Run outputs with the run directory's own path masked out.
fn outputs(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    collect(root, root, &mut files)?;
    let needle = root.display().to_string();
    for bytes in files.values_mut() {
        if let Ok(text) = std::str::from_utf8(bytes) {
            *bytes = text.replace(&needle, "{root}").into_bytes();
        }
    }
    Ok(files)
}

pub fn determinism() -> Result<String, String> {
    let started = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for root in [&a, &b] {
        fs::create_dir_all(root).map_err(|e| e.to_string())?;
        run_pipeline(root)?;
    }
    let (fa, fb) = (outputs(&a)?, outputs(&b)?);
    if fa.keys().ne(fb.keys()) {
        return Err(format!("file sets differ: {:?} vs {:?}", fa.keys(), fb.keys()));
    }
    let outputs_only = fa.keys().filter(|p| !p.extension().is_some_and(|e| e == "cfg" || e == "stdout"));
    let mut n = 0;
    for path in outputs_only {
        if fa[path] != fb[path] {
            return Err(format!("{} differs between runs", path.display()));
        }
        n += 1;
    }
    for (path, bytes) in &fa {
        if path.extension().is_some_and(|e| e == "stdout") && bytes != &fb[path] {
            return Err(format!("stdout of {} differs", path.display()));
        }
    }
    let commands: Vec<&str> = PIPELINE.iter().map(|p| p.0).collect();
    within(
        Duration::from_secs(300),
        started,
        format!("{} runs ({}) twice with --threads 1: {n} output files byte-identical", PIPELINE.len(), commands.join(", ")),
    )
}
