use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ActivationRecord, RecordSource, ShardSet};
use crate::numerics::{rng_for, Stream};
use crate::{Error, Result};

pub const DEFAULT_SHUFFLE_BUFFER: usize = 1_000_000;

/// Streaming shuffle: keep `capacity` items buffered, emit a uniformly chosen
/// one and refill its slot from the input. Once the input runs dry the
/// buffer drains in uniformly random order, so every input item is emitted
/// exactly once.
pub struct ShuffleBuffer<I, T, R> {
    input: I,
    buf: Vec<T>,
    capacity: usize,
    rng: R,
    filled: bool,
    exhausted: bool,
}

impl<I, T, R> ShuffleBuffer<I, T, R>
where
    I: Iterator<Item = Result<T>>,
    R: Rng,
{
    pub fn new(input: I, capacity: usize, rng: R) -> Result<Self> {
        if capacity < 2 {
            return Err(Error::Parameter(format!("shuffle buffer must hold at least 2 items, got {capacity}")));
        }
        Ok(Self {
            input,
            buf: Vec::new(),
            capacity,
            rng,
            filled: false,
            exhausted: false,
        })
    }

    fn fill(&mut self) -> Result<()> {
        while self.buf.len() < self.capacity {
            match self.input.next() {
                Some(item) => self.buf.push(item?),
                None => {
                    self.exhausted = true;
                    break;
                }
            }
        }
        self.filled = true;
        Ok(())
    }
}

impl<I, T, R> Iterator for ShuffleBuffer<I, T, R>
where
    I: Iterator<Item = Result<T>>,
    R: Rng,
{
    type Item = Result<T>;

    fn next(&mut self) -> Option<Result<T>> {
        if !self.filled {
            if let Err(e) = self.fill() {
                self.exhausted = true;
                self.buf.clear();
                return Some(Err(e));
            }
        }
        if self.buf.is_empty() {
            return None;
        }
        let j = self.rng.gen_range(0..self.buf.len());
        if !self.exhausted {
            match self.input.next() {
                Some(Ok(item)) => return Some(Ok(std::mem::replace(&mut self.buf[j], item))),
                Some(Err(e)) => {
                    self.exhausted = true;
                    self.buf.clear();
                    return Some(Err(e));
                }
                None => self.exhausted = true,
            }
        }
        Some(Ok(self.buf.swap_remove(j)))
    }
}

/// Records from `shard_paths`, in order, through a shuffle buffer seeded
/// from `seed`.
pub fn shuffled_stream(
    shard_paths: &[PathBuf],
    buffer_size: usize,
    seed: u64,
) -> Result<impl Iterator<Item = Result<ActivationRecord>>> {
    let set = ShardSet::open(shard_paths.to_vec())?;
    ShuffleBuffer::new(set.into_records(), buffer_size, rng_for(seed, Stream::Shuffle(0)))
}

pub(crate) fn shuffled_pass<'a, S: RecordSource + ?Sized>(
    source: &'a mut S,
    buffer_size: usize,
    rng: ChaCha8Rng,
) -> Result<ShuffleBuffer<Box<dyn Iterator<Item = Result<ActivationRecord>> + 'a>, ActivationRecord, ChaCha8Rng>> {
    ShuffleBuffer::new(source.pass()?, buffer_size, rng)
}
