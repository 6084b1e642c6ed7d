//! `ACTS` activation shards, shuffled streaming, and position sampling.

mod sampler;
mod shard;
mod shuffle;
mod source;

pub use sampler::{position_norms, proportional_sample, PositionGrid, DEFAULT_POSITIONS_PER_IMAGE};
pub use shard::{
    read_shard, shard_file_name, write_shard, ActivationRecord, ShardHeader, ShardReader, ShardWriter,
    FLAG_POSITIONS, HEADER_LEN, MAGIC, VERSION,
};
pub use shuffle::{shuffled_stream, ShuffleBuffer, DEFAULT_SHUFFLE_BUFFER};
pub(crate) use shuffle::shuffled_pass;
pub use source::{list_shards, restrict_channels, InMemorySource, RecordSource, ShardSet};
