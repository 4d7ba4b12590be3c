//! Deterministic random streams.
//!
//! A stream is identified by `(seed, stream_id)`. The generator is ChaCha8 keyed by
//! the seed with the stream id selecting one of its 2^64 independent streams, so
//! identical ids reproduce identical sequences regardless of which thread draws them.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream-id domains keep sub-streams for different purposes disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    BinClutter = 1,
    Secondary = 2,
    TargetPhase = 3,
    Agent = 4,
    Calibration = 5,
    Episode = 6,
    Test = 7,
}

#[derive(Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl std::fmt::Debug for RngStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RngStream")
            .field("seed", &self.seed)
            .field("stream_id", &self.stream_id)
            .finish()
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a path of indices into a 64-bit stream id.
pub fn stream_id(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |h, &p| splitmix64(h ^ splitmix64(p)))
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    /// Stream addressed by a domain and an index path, e.g. `(run, pulse, bin)`.
    pub fn derive(seed: u64, domain: Domain, path: &[u64]) -> Self {
        let mut parts = Vec::with_capacity(path.len() + 1);
        parts.push(domain as u64);
        parts.extend_from_slice(path);
        Self::new(seed, stream_id(&parts))
    }

    /// Child stream under this one; independent of the parent and its siblings.
    pub fn substream(&self, path: &[u64]) -> Self {
        let mut parts = Vec::with_capacity(path.len() + 1);
        parts.push(self.stream_id);
        parts.extend_from_slice(path);
        Self::new(self.seed, stream_id(&parts))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
