use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one root seed.
///
/// Every consumer of randomness draws from its own ChaCha stream, so adding
/// draws in one place never perturbs another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init,
    /// Shuffle order for the given epoch.
    Shuffle(u64),
    Positions,
    ToyDirections,
    ToySamples,
    Reservoir,
    Batches,
    Custom(u64),
}

impl Stream {
    fn id(self) -> u64 {
        const TAG: u64 = 1 << 56;
        match self {
            Stream::Init => TAG,
            Stream::Shuffle(epoch) => 2 * TAG + (epoch & (TAG - 1)),
            Stream::Positions => 3 * TAG,
            Stream::ToyDirections => 4 * TAG,
            Stream::ToySamples => 5 * TAG,
            Stream::Reservoir => 6 * TAG,
            Stream::Batches => 7 * TAG,
            Stream::Custom(id) => 8 * TAG + (id & (TAG - 1)),
        }
    }
}

pub fn rng_for(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
