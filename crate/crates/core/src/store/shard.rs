//! Bit-exact `ACTS` shard layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//!      0     4  magic "ACTS"
//!      4     4  version (u32 = 1)
//!      8     4  d_model (u32 >= 1)
//!     12     8  record_count (u64)
//!     20     4  flags (u32, bit0 = records carry position metadata)
//!     24     8  reserved, zero
//!     32     -  records
//! ```
//!
//! Each record is `image_id: u32, pos_y: u16, pos_x: u16` (only when bit0 is
//! set) followed by `d_model` `f32` values. No padding anywhere.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::{FormatError, Result};

pub const MAGIC: [u8; 4] = *b"ACTS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 32;
pub const FLAG_POSITIONS: u32 = 1;

const META_LEN: u64 = 8;

/// `<layer>_<index>.acts`
pub fn shard_file_name(layer: &str, index: usize) -> String {
    format!("{layer}_{index}.acts")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationRecord {
    pub image_id: u32,
    pub pos_y: u16,
    pub pos_x: u16,
    pub values: Vec<f32>,
}

impl ActivationRecord {
    pub fn new(image_id: u32, pos_y: u16, pos_x: u16, values: Vec<f32>) -> Self {
        Self {
            image_id,
            pos_y,
            pos_x,
            values,
        }
    }

    pub fn d_model(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardHeader {
    pub d_model: u32,
    pub record_count: u64,
    pub flags: u32,
}

impl ShardHeader {
    pub fn has_positions(&self) -> bool {
        self.flags & FLAG_POSITIONS != 0
    }

    pub fn record_len(&self) -> u64 {
        let meta = if self.has_positions() { META_LEN } else { 0 };
        meta + 4 * self.d_model as u64
    }

    pub fn file_len(&self) -> u64 {
        HEADER_LEN + self.record_count * self.record_len()
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN as usize] {
        let mut out = [0u8; HEADER_LEN as usize];
        out[0..4].copy_from_slice(&MAGIC);
        out[4..8].copy_from_slice(&VERSION.to_le_bytes());
        out[8..12].copy_from_slice(&self.d_model.to_le_bytes());
        out[12..20].copy_from_slice(&self.record_count.to_le_bytes());
        out[20..24].copy_from_slice(&self.flags.to_le_bytes());
        out
    }

    pub fn parse(bytes: &[u8; HEADER_LEN as usize]) -> std::result::Result<Self, FormatError> {
        let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(FormatError::BadMagic {
                expected: MAGIC,
                found: magic,
            });
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(FormatError::BadVersion(version));
        }
        let d_model = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if d_model == 0 {
            return Err(FormatError::Header("d_model must be at least 1".into()));
        }
        let record_count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let flags = u32::from_le_bytes(bytes[20..24].try_into().unwrap());
        if flags & !FLAG_POSITIONS != 0 {
            return Err(FormatError::Header(format!("unknown flag bits {flags:#x}")));
        }
        if bytes[24..32].iter().any(|&b| b != 0) {
            return Err(FormatError::Header("reserved bytes are not zero".into()));
        }
        Ok(Self {
            d_model,
            record_count,
            flags,
        })
    }
}

/// Streaming shard writer. The record count is patched into the header on
/// [`ShardWriter::finish`].
pub struct ShardWriter {
    out: BufWriter<File>,
    header: ShardHeader,
}

impl ShardWriter {
    pub fn create(path: impl AsRef<Path>, d_model: usize) -> Result<Self> {
        Self::create_with_flags(path, d_model, FLAG_POSITIONS)
    }

    /// Writer for records without position metadata.
    pub fn create_values_only(path: impl AsRef<Path>, d_model: usize) -> Result<Self> {
        Self::create_with_flags(path, d_model, 0)
    }

    fn create_with_flags(path: impl AsRef<Path>, d_model: usize, flags: u32) -> Result<Self> {
        if d_model == 0 || d_model > u32::MAX as usize {
            return Err(FormatError::Header(format!("d_model {d_model} out of range")).into());
        }
        let header = ShardHeader {
            d_model: d_model as u32,
            record_count: 0,
            flags,
        };
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&header.to_bytes())?;
        Ok(Self { out, header })
    }

    pub fn push(&mut self, record: &ActivationRecord) -> Result<()> {
        let d = self.header.d_model as usize;
        if record.values.len() != d {
            return Err(FormatError::MixedWidth {
                expected: d,
                found: record.values.len(),
            }
            .into());
        }
        if record.values.iter().any(|v| !v.is_finite()) {
            return Err(FormatError::NonFinite {
                record: self.header.record_count,
            }
            .into());
        }
        if self.header.has_positions() {
            self.out.write_all(&record.image_id.to_le_bytes())?;
            self.out.write_all(&record.pos_y.to_le_bytes())?;
            self.out.write_all(&record.pos_x.to_le_bytes())?;
        }
        for v in &record.values {
            self.out.write_all(&v.to_le_bytes())?;
        }
        self.header.record_count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.flush()?;
        let mut file = self.out.into_inner().map_err(|e| e.into_error())?;
        file.seek(SeekFrom::Start(0))?;
        file.write_all(&self.header.to_bytes())?;
        file.sync_all()?;
        Ok(self.header.record_count)
    }
}

/// Write `records` as one shard and return the record count.
pub fn write_shard<'a, I>(path: impl AsRef<Path>, d_model: usize, records: I) -> Result<u64>
where
    I: IntoIterator<Item = &'a ActivationRecord>,
{
    let mut w = ShardWriter::create(path, d_model)?;
    for r in records {
        w.push(r)?;
    }
    w.finish()
}

/// Iterator over the records of one shard, in file order.
pub struct ShardReader {
    input: BufReader<File>,
    header: ShardHeader,
    next: u64,
    buf: Vec<u8>,
}

impl ShardReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path)?;
        let found = file.metadata()?.len();
        let mut input = BufReader::with_capacity(1 << 16, file);
        if found < HEADER_LEN {
            return Err(FormatError::Truncated {
                expected: HEADER_LEN,
                found,
            }
            .into());
        }
        let mut raw = [0u8; HEADER_LEN as usize];
        input.read_exact(&mut raw)?;
        let header = ShardHeader::parse(&raw)?;
        let expected = header.file_len();
        if found < expected {
            return Err(FormatError::Truncated { expected, found }.into());
        }
        if found > expected {
            return Err(FormatError::TrailingBytes { expected, found }.into());
        }
        Ok(Self {
            input,
            buf: vec![0u8; header.record_len() as usize],
            header,
            next: 0,
        })
    }

    pub fn header(&self) -> ShardHeader {
        self.header
    }

    pub fn d_model(&self) -> usize {
        self.header.d_model as usize
    }

    fn read_record(&mut self) -> Result<ActivationRecord> {
        self.input.read_exact(&mut self.buf)?;
        let (image_id, pos_y, pos_x, body) = if self.header.has_positions() {
            (
                u32::from_le_bytes(self.buf[0..4].try_into().unwrap()),
                u16::from_le_bytes(self.buf[4..6].try_into().unwrap()),
                u16::from_le_bytes(self.buf[6..8].try_into().unwrap()),
                &self.buf[META_LEN as usize..],
            )
        } else {
            (0, 0, 0, &self.buf[..])
        };
        let values: Vec<f32> = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FormatError::NonFinite { record: self.next }.into());
        }
        Ok(ActivationRecord {
            image_id,
            pos_y,
            pos_x,
            values,
        })
    }
}

impl Iterator for ShardReader {
    type Item = Result<ActivationRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.header.record_count {
            return None;
        }
        let r = self.read_record();
        self.next += 1;
        if r.is_err() {
            // stop after the first failure
            self.next = self.header.record_count;
        }
        Some(r)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.header.record_count - self.next) as usize;
        (left, Some(left))
    }
}

pub fn read_shard(path: impl AsRef<Path>) -> Result<ShardReader> {
    ShardReader::open(path)
}
