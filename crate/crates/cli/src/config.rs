//! Line-oriented `key = value` run configuration.
//!
//! Every key is also a `--key` flag on the subcommands that accept it; flags
//! override file values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Train,
    Profile,
    Tune,
    Sweep,
    Toy,
    Branch,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Train,
        Command::Profile,
        Command::Tune,
        Command::Sweep,
        Command::Toy,
        Command::Branch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Profile => "profile",
            Command::Tune => "tune",
            Command::Sweep => "sweep",
            Command::Toy => "toy",
            Command::Branch => "branch",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Command::Train => "Train a sparse autoencoder on activation shards",
            Command::Profile => "Interval-binned dataset examples and feature statistics",
            Command::Tune => "Orientation x radius tuning curves on synthetic curve stimuli",
            Command::Sweep => "Train across sparsity coefficients and track anchor features",
            Command::Toy => "Train on synthetic superposition data and score recovery",
            Command::Branch => "Branch-specialization scores of every feature",
        }
    }
}

pub struct Key {
    pub name: &'static str,
    pub help: &'static str,
    pub commands: &'static [Command],
}

use Command::*;

const TRAINING: &[Command] = &[Train, Sweep, Toy];

pub const KEYS: &[Key] = &[
    Key { name: "seed", help: "RNG seed (falls back to SAESCOPE_SEED, then 0)", commands: &Command::ALL },
    Key { name: "threads", help: "worker threads for training (1 is the deterministic reference mode); analysis always runs on one", commands: &Command::ALL },
    Key { name: "out", help: "output directory", commands: &Command::ALL },
    Key { name: "shards", help: "directory of .acts shards", commands: &[Train, Profile, Sweep] },
    Key { name: "layer", help: "layer name; selects shards <layer>_<i>.acts and tabulated defaults", commands: &[Train, Profile, Sweep] },
    Key { name: "model", help: "SAE1 model file", commands: &[Profile, Tune, Branch] },
    Key { name: "lambda", help: "sparsity coefficient", commands: &[Train, Toy] },
    Key { name: "expansion_factor", help: "features per input dimension", commands: TRAINING },
    Key { name: "batch_size", help: "samples per optimizer step", commands: TRAINING },
    Key { name: "total_samples", help: "training samples to consume", commands: TRAINING },
    Key { name: "lr", help: "Adam learning rate", commands: TRAINING },
    Key { name: "dead_window", help: "trailing samples without firing that mark a feature dead", commands: TRAINING },
    Key { name: "shuffle_buffer", help: "shuffle buffer capacity in records", commands: TRAINING },
    Key { name: "log_every", help: "optimizer steps per reported loss interval", commands: TRAINING },
    Key { name: "examples_per_bin", help: "sampled examples per activation interval", commands: &[Profile] },
    Key { name: "features", help: "comma-separated feature ids (default: all)", commands: &[Tune] },
    Key { name: "orientations", help: "number of stimulus orientations on [0, 2pi)", commands: &[Tune] },
    Key { name: "radii", help: "comma-separated stimulus radii in pixels", commands: &[Tune] },
    Key { name: "size", help: "stimulus side length in pixels", commands: &[Tune] },
    Key { name: "thickness", help: "stimulus line thickness in pixels", commands: &[Tune] },
    Key { name: "activations", help: "ACTS shard of per-stimulus activations (image_id = grid index)", commands: &[Tune] },
    Key { name: "probe_orientations", help: "probe-bank filter orientations in radians, comma-separated", commands: &[Tune] },
    Key { name: "probe_radius", help: "probe-bank filter radius in pixels", commands: &[Tune] },
    Key { name: "baseline", help: "profile summary CSV with dataset mean/std, or 'stimuli'", commands: &[Tune] },
    Key { name: "threshold_sigma", help: "gap-report coverage threshold in standard deviations", commands: &[Tune] },
    Key { name: "lambdas", help: "comma-separated non-decreasing sparsity coefficients", commands: &[Sweep, Toy] },
    Key { name: "anchors", help: "comma-separated anchor-model feature ids to track", commands: &[Sweep] },
    Key { name: "eval_shards", help: "directory of held-out evaluation shards", commands: &[Sweep] },
    Key { name: "eval_records", help: "evaluation records for sweep max activations", commands: &[Sweep, Toy] },
    Key { name: "n_true", help: "ground-truth features", commands: &[Toy] },
    Key { name: "d_model", help: "toy activation width", commands: &[Toy] },
    Key { name: "p", help: "per-feature firing probability", commands: &[Toy] },
    Key { name: "pair", help: "correlated pair i,j,q; runs the double-feature experiment", commands: &[Toy] },
    Key { name: "samples", help: "toy dataset size in records", commands: &[Toy] },
    Key { name: "write_shards", help: "also write the toy dataset as ACTS shards (true/false)", commands: &[Toy] },
    Key { name: "branches", help: "branch map name:start-end,...", commands: &[Branch] },
    Key { name: "norm", help: "branch norm: l2 or l1", commands: &[Branch] },
];

pub fn keys_for(cmd: Command) -> impl Iterator<Item = &'static Key> {
    KEYS.iter().filter(move |k| k.commands.contains(&cmd))
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Parse `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str, cmd: Command) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return err(format!("line {}: expected `key = value`", n + 1));
        };
        let (k, v) = (k.trim(), v.trim());
        if !keys_for(cmd).any(|key| key.name == k) {
            return err(format!("line {}: unknown key `{k}` for `{}`", n + 1, cmd.name()));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return err(format!("line {}: duplicate key `{k}`", n + 1));
        }
    }
    Ok(out)
}

/// Resolved settings for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(command: Command, values: BTreeMap<String, String>) -> Self {
        Self { command, values }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        debug_assert!(KEYS.iter().any(|k| k.name == key), "undeclared key {key}");
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| ConfigError(format!("bad value for `{key}`: {v:?} ({e})"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| ConfigError(format!("`{}` needs `{key}`", self.command.name())))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| ConfigError(format!("bad entry {s:?} in `{key}` ({e})")))
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    /// An existing directory.
    pub fn dir(&self, key: &str) -> Result<PathBuf, ConfigError> {
        let p: PathBuf = self.require(key)?;
        if !p.is_dir() {
            return err(format!("`{key}`: {} is not a directory", p.display()));
        }
        Ok(p)
    }

    /// An existing file.
    pub fn file(&self, key: &str) -> Result<PathBuf, ConfigError> {
        let p: PathBuf = self.require(key)?;
        if !p.is_file() {
            return err(format!("`{key}`: {} does not exist", p.display()));
        }
        Ok(p)
    }

    pub fn out_dir(&self) -> Result<PathBuf, ConfigError> {
        let p: PathBuf = self.require("out")?;
        std::fs::create_dir_all(&p).map_err(|e| ConfigError(format!("cannot create {}: {e}", p.display())))?;
        Ok(p)
    }

    pub fn seed(&self) -> Result<u64, ConfigError> {
        if let Some(s) = self.get("seed")? {
            return Ok(s);
        }
        match std::env::var("SAESCOPE_SEED") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|e| ConfigError(format!("bad SAESCOPE_SEED {v:?} ({e})"))),
            Err(_) => Ok(0),
        }
    }
}

pub fn read_config_file(path: &Path, cmd: Command) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text, cmd)
}
