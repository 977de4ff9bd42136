//! Counter-based splittable random streams.
//!
//! Every random decision in the engine flows through [`RngStream`]: a pure
//! function of `(key, counter)` built on the SplitMix64 finalizer. Streams are
//! cheap to split — each decoding path owns the substream derived from
//! `(seed, path_id)` — and the variate counter is observable, which is what
//! lets tests assert that sampling consumes exactly one draw per token.
//!
//! All state is integer; the only floating-point step is the fixed
//! bits-to-unit-interval conversion, so a given `(seed, stream, counter)`
//! yields the same variate on every platform.

/// Weyl increment used by SplitMix64 (2^64 / phi, forced odd).
pub(crate) const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a bijective 64-bit mix.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fold a byte string into a 64-bit value (FNV-1a). Used to derive seeds
/// from stable textual labels, e.g. sweep cell names.
pub fn fold_bytes(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A counter-based random stream.
///
/// Variate `n` of the stream is `mix64(key + (n + 1) * GAMMA)`, so the stream
/// supports O(1) skipping and never carries hidden state beyond the counter.
#[derive(Debug, Clone)]
pub struct RngStream {
    key: u64,
    counter: u64,
}

impl RngStream {
    /// Derive the substream identified by `stream` from `seed`.
    ///
    /// Key derivation: `mix64(seed ^ GAMMA * (stream + 1))`. GAMMA is odd, so
    /// distinct stream ids map to distinct keys for a fixed seed.
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix64(seed ^ GAMMA.wrapping_mul(stream.wrapping_add(1)));
        RngStream { key, counter: 0 }
    }

    /// Next raw 64-bit variate.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        mix64(self.key.wrapping_add(GAMMA.wrapping_mul(self.counter)))
    }

    /// Next uniform variate in `[0, 1)`, from the top 53 bits.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Number of variates consumed so far.
    pub fn draws(&self) -> u64 {
        self.counter
    }
}
