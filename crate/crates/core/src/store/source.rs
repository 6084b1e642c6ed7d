use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use super::{read_shard, ActivationRecord, ShardReader};
use crate::{Error, Result};

/// Anything that can replay a fixed set of activation records, in a fixed
/// storage order, as many times as needed.
pub trait RecordSource {
    /// Width of every record, or `None` when the source holds no records.
    fn d_model(&self) -> Option<usize>;

    fn pass(&mut self) -> Result<Box<dyn Iterator<Item = Result<ActivationRecord>> + '_>>;
}

/// A list of shards read back to back.
#[derive(Debug, Clone)]
pub struct ShardSet {
    paths: Vec<PathBuf>,
    d_model: Option<usize>,
    records: u64,
}

impl ShardSet {
    /// Validate every header and check that widths agree.
    pub fn open(paths: Vec<PathBuf>) -> Result<Self> {
        let mut d_model = None;
        let mut records = 0;
        for p in &paths {
            let r = read_shard(p)?;
            match d_model {
                None => d_model = Some(r.d_model()),
                Some(d) if d != r.d_model() => {
                    return Err(crate::FormatError::MixedWidth {
                        expected: d,
                        found: r.d_model(),
                    }
                    .into())
                }
                _ => {}
            }
            records += r.header().record_count;
        }
        Ok(Self { paths, d_model, records })
    }

    pub fn from_dir(dir: impl AsRef<Path>, layer: Option<&str>) -> Result<Self> {
        Self::open(list_shards(dir, layer)?)
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.paths
    }

    pub fn record_count(&self) -> u64 {
        self.records
    }

    pub fn into_records(self) -> impl Iterator<Item = Result<ActivationRecord>> {
        chain(self.paths)
    }
}

fn chain(paths: Vec<PathBuf>) -> impl Iterator<Item = Result<ActivationRecord>> {
    paths.into_iter().flat_map(|p| -> Box<dyn Iterator<Item = Result<ActivationRecord>>> {
        match ShardReader::open(&p) {
            Ok(r) => Box::new(r),
            Err(e) => Box::new(std::iter::once(Err(e))),
        }
    })
}

impl RecordSource for ShardSet {
    fn d_model(&self) -> Option<usize> {
        self.d_model
    }

    fn pass(&mut self) -> Result<Box<dyn Iterator<Item = Result<ActivationRecord>> + '_>> {
        Ok(Box::new(chain(self.paths.clone())))
    }
}

/// Records held in memory.
#[derive(Debug, Clone, Default)]
pub struct InMemorySource {
    pub records: Vec<ActivationRecord>,
}

impl InMemorySource {
    pub fn new(records: Vec<ActivationRecord>) -> Self {
        Self { records }
    }

    pub fn from_vectors(vectors: Vec<Vec<f32>>) -> Self {
        let records = vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| ActivationRecord::new(i as u32, 0, 0, v))
            .collect();
        Self { records }
    }
}

impl RecordSource for InMemorySource {
    fn d_model(&self) -> Option<usize> {
        self.records.first().map(ActivationRecord::d_model)
    }

    fn pass(&mut self) -> Result<Box<dyn Iterator<Item = Result<ActivationRecord>> + '_>> {
        Ok(Box::new(self.records.iter().cloned().map(Ok)))
    }
}

/// `*.acts` files in `dir` (optionally only `<layer>_<n>.acts`), ordered by
/// layer name then numeric index.
pub fn list_shards(dir: impl AsRef<Path>, layer: Option<&str>) -> Result<Vec<PathBuf>> {
    let mut found: Vec<(String, u64, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("acts") {
            continue;
        }
        let stem = match path.file_stem().and_then(|s| s.to_str()) {
            Some(s) => s.to_string(),
            None => continue,
        };
        let (name, index) = match stem.rsplit_once('_') {
            Some((n, i)) => match i.parse::<u64>() {
                Ok(i) => (n.to_string(), i),
                Err(_) => (stem.clone(), 0),
            },
            None => (stem.clone(), 0),
        };
        if layer.is_some_and(|l| l != name) {
            continue;
        }
        found.push((name, index, path));
    }
    found.sort();
    Ok(found.into_iter().map(|(_, _, p)| p).collect())
}

/// Slice a record to the channels in `range`. Metadata is preserved.
pub fn restrict_channels(record: &ActivationRecord, range: Range<usize>) -> Result<ActivationRecord> {
    let width = record.values.len();
    if range.start >= range.end || range.end > width {
        return Err(Error::Range {
            start: range.start,
            end: range.end,
            width,
        });
    }
    Ok(ActivationRecord::new(
        record.image_id,
        record.pos_y,
        record.pos_x,
        record.values[range].to_vec(),
    ))
}
