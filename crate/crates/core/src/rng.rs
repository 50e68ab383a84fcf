//! Seeded random streams.
//!
//! Every Monte Carlo sample `i` of a run with master seed `s` draws from
//! ChaCha8 seeded with `s` on stream `2i` (attachment choices) and `2i + 1`
//! (holding-time clock). Results are therefore independent of how samples
//! are distributed across workers, and switching the clock on or off never
//! changes the attachment sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The pair of streams owned by one sample.
pub struct SampleStreams {
    pub attach: SimRng,
    pub clock: SimRng,
}

impl SampleStreams {
    pub fn new(seed: u64, sample: u64) -> Self {
        Self {
            attach: stream(seed, 2 * sample),
            clock: stream(seed, 2 * sample + 1),
        }
    }
}

/// Uniform on `(0, 1]`.
pub fn open_closed_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
