//! Deterministic counter-based sampling.
//!
//! Every random quantity in this crate is a pure function of
//! (seed, stream, counter), so results never depend on evaluation order,
//! thread count, or how many draws someone else consumed. Streams partition
//! uses (net samples, probe pairs, Monte-Carlo shards, ...); counters index
//! draws within a stream. The mixer is the splitmix64 finalizer, applied to
//! a combined key — bijective, well distributed, and more than enough for
//! the Monte-Carlo estimates done here.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One named stream of a seeded generator.
#[derive(Debug, Clone, Copy)]
pub struct SampleStream {
    key: u64,
}

impl SampleStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        // pre-mix seed and stream so (seed, stream) pairs never collide by
        // simple arithmetic coincidence
        let key = splitmix64(splitmix64(seed) ^ stream.wrapping_mul(GOLDEN));
        SampleStream { key }
    }

    #[inline]
    pub fn bits_at(&self, counter: u64) -> u64 {
        splitmix64(self.key ^ counter.wrapping_mul(GOLDEN))
    }

    /// Uniform in [0, 1): 53 mantissa bits.
    #[inline]
    pub fn f64_at(&self, counter: u64) -> f64 {
        (self.bits_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn range_at(&self, counter: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.f64_at(counter)
    }

    /// Fills `out` with one uniform point of the box [-r, r]^dim, using
    /// counters `index*dim .. index*dim+dim`. Sample `index` is identical no
    /// matter how many other samples are drawn (prefix property for nets).
    #[inline]
    pub fn box_point_at(&self, index: u64, r: f64, out: &mut [f64]) {
        let dim = out.len() as u64;
        for (d, slot) in out.iter_mut().enumerate() {
            *slot = self.range_at(index * dim + d as u64, -r, r);
        }
    }
}
