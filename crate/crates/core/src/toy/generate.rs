use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::numerics::{norm, rng_for, Matrix, Stream};
use crate::sae::{save_model, SaeModel};
use crate::store::{shard_file_name, ActivationRecord, InMemorySource, ShardWriter};
use crate::{Error, Result};

/// Features `i` and `j` additionally fire together with probability `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedPair {
    pub i: usize,
    pub j: usize,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Magnitude {
    /// Uniform on (0, 1].
    Uniform,
    Fixed(f32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySpec {
    pub n_true: usize,
    pub d_model: usize,
    /// Independent firing probability of each feature.
    pub p: f64,
    pub pairs: Vec<CorrelatedPair>,
    pub magnitude: Magnitude,
    pub seed: u64,
}

impl Default for ToySpec {
    fn default() -> Self {
        Self {
            n_true: 64,
            d_model: 16,
            p: 0.05,
            pairs: Vec::new(),
            magnitude: Magnitude::Uniform,
            seed: 0,
        }
    }
}

impl ToySpec {
    /// `allow_wide` admits `d_model >= n_true`, used for hand-built checks.
    fn check(&self, allow_wide: bool) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if self.n_true == 0 || self.d_model == 0 {
            return bad("n_true and d_model must be positive".into());
        }
        if !allow_wide && self.d_model >= self.n_true {
            return bad(format!("d_model {} must be below n_true {}", self.d_model, self.n_true));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p = {} outside [0, 1]", self.p));
        }
        for pair in &self.pairs {
            if pair.i >= self.n_true || pair.j >= self.n_true || pair.i == pair.j {
                return bad(format!("bad pair ({}, {})", pair.i, pair.j));
            }
            if !(0.0..=1.0).contains(&pair.q) {
                return bad(format!("q = {} outside [0, 1]", pair.q));
            }
        }
        if let Magnitude::Fixed(m) = self.magnitude {
            if !(m > 0.0 && m <= 1.0) {
                return bad(format!("fixed magnitude {m} outside (0, 1]"));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check(false)
    }
}

#[derive(Debug, Clone)]
pub struct ToyDataset {
    /// `d_model × n_true`, unit columns.
    pub directions: Matrix,
    pub records: Vec<ActivationRecord>,
    /// Per-sample count of samples each true feature was active in.
    pub active_counts: Vec<u64>,
}

impl ToyDataset {
    pub fn source(&self) -> InMemorySource {
        InMemorySource::new(self.records.clone())
    }

    pub fn into_source(self) -> InMemorySource {
        InMemorySource::new(self.records)
    }

    /// Write `<layer>_<k>.acts` shards of at most `per_shard` records.
    pub fn write_shards(&self, dir: impl AsRef<Path>, layer: &str, per_shard: usize) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let d = self.directions.rows();
        let mut paths = Vec::new();
        let per = per_shard.max(1);
        let chunks: Vec<&[ActivationRecord]> = if self.records.is_empty() {
            vec![&[]]
        } else {
            self.records.chunks(per).collect()
        };
        for (k, chunk) in chunks.into_iter().enumerate() {
            let path = dir.join(shard_file_name(layer, k));
            let mut w = ShardWriter::create(&path, d)?;
            for r in chunk {
                w.push(r)?;
            }
            w.finish()?;
            paths.push(path);
        }
        Ok(paths)
    }

    /// Ground truth as an `SAE1` file: decoder = directions, encoder unused (zero).
    pub fn save_directions(&self, path: impl AsRef<Path>) -> Result<()> {
        save_model(&directions_model(&self.directions)?, path)
    }
}

pub(crate) fn directions_model(g: &Matrix) -> Result<SaeModel> {
    let (d, n) = g.shape();
    SaeModel::from_parts(Matrix::zeros(n, d), vec![0.0; n], g.clone(), vec![0.0; d])
}

/// `n` random unit vectors in `d` dimensions as columns.
pub fn random_directions<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Matrix {
    let mut g = Matrix::zeros(d, n);
    let mut col = vec![0.0f32; d];
    for j in 0..n {
        loop {
            col.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            let len = norm(&col);
            if len > 1e-6 {
                col.iter_mut().for_each(|v| *v = (*v as f64 / len) as f32);
                break;
            }
        }
        g.set_column(j, &col);
    }
    g
}

/// Random unit directions plus `n_samples` samples `x = G·a`.
pub fn generate_toy(spec: &ToySpec, n_samples: usize) -> Result<ToyDataset> {
    spec.validate()?;
    let g = random_directions(spec.d_model, spec.n_true, &mut rng_for(spec.seed, Stream::ToyDirections));
    sample(spec, g, n_samples)
}

/// As [`generate_toy`] with caller-supplied unit directions (`d_model × n_true`).
pub fn generate_with_directions(spec: &ToySpec, directions: Matrix, n_samples: usize) -> Result<ToyDataset> {
    spec.check(true)?;
    if directions.shape() != (spec.d_model, spec.n_true) {
        return Err(Error::Dimension(format!(
            "directions {:?} for d_model {} and n_true {}",
            directions.shape(),
            spec.d_model,
            spec.n_true
        )));
    }
    sample(spec, directions, n_samples)
}

fn sample(spec: &ToySpec, g: Matrix, n_samples: usize) -> Result<ToyDataset> {
    let mut rng = rng_for(spec.seed, Stream::ToySamples);
    let (d, n) = (spec.d_model, spec.n_true);
    let g_t = g.transpose();
    let mut counts = vec![0u64; n];
    let mut a = vec![0.0f32; n];
    let mut records = Vec::with_capacity(n_samples);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| match spec.magnitude {
        Magnitude::Uniform => 1.0 - rng.gen::<f32>(),
        Magnitude::Fixed(m) => m,
    };
    for s in 0..n_samples {
        for slot in a.iter_mut() {
            *slot = if rng.gen_bool(spec.p) { draw(&mut rng) } else { 0.0 };
        }
        for pair in &spec.pairs {
            if rng.gen_bool(pair.q) {
                for k in [pair.i, pair.j] {
                    if a[k] == 0.0 {
                        a[k] = draw(&mut rng);
                    }
                }
            }
        }
        let mut x = vec![0.0f64; d];
        for (k, &ak) in a.iter().enumerate() {
            if ak != 0.0 {
                counts[k] += 1;
                for (xi, &gv) in x.iter_mut().zip(g_t.row(k)) {
                    *xi += ak as f64 * gv as f64;
                }
            }
        }
        records.push(ActivationRecord::new(
            s as u32,
            0,
            0,
            x.into_iter().map(|v| v as f32).collect(),
        ));
    }
    Ok(ToyDataset {
        directions: g,
        records,
        active_counts: counts,
    })
}
