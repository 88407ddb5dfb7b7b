//! Deterministic randomness for initial data and search multi-starts.
//!
//! Every random quantity in the crate flows from a single `u64` seed through
//! named streams: `stream(seed, label)` mixes an FNV-1a hash of the label into
//! the seed, so adding a new consumer never shifts the draws of an existing
//! one. The generator is SplitMix64 — tiny, full-period, and bit-stable
//! forever, which keeps golden values frozen in tests valid across toolchains.

/// SplitMix64 stream. Not cryptographic; statistical quality is ample for
/// initial-data jitter and coordinate-search multi-starts.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Stream derived from `seed` and a stable label, e.g. ("initial", 2).
    pub fn stream(seed: u64, label: &str, index: u64) -> Self {
        let mut h: u64 = 0xcbf29ce484222325; // FNV-1a offset basis
        for b in label.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= index.wrapping_mul(0x9E3779B97F4A7C15);
        h = h.wrapping_mul(0x100000001b3);
        SplitMix64 {
            state: seed ^ h,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn next_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut r = SplitMix64::stream(42, "initial", 0);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = SplitMix64::stream(42, "initial", 0);
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        let mut other = SplitMix64::stream(42, "initial", 1);
        assert_ne!(a[0], other.next_u64());
        let mut label = SplitMix64::stream(42, "multistart", 0);
        assert_ne!(a[0], label.next_u64());
    }

    #[test]
    fn reference_sequence_is_frozen() {
        // SplitMix64 with seed 0 must produce the published reference values;
        // if this ever changes, every golden in the crate is suspect.
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220A8397B1DCDAF);
        assert_eq!(r.next_u64(), 0x6E789E6AA1B965F4);
        assert_eq!(r.next_u64(), 0x06C45D188009454F);
    }

    #[test]
    fn uniform_draws_live_in_range() {
        let mut r = SplitMix64::new(7);
        for _ in 0..1000 {
            let x = r.next_in(0.2, 0.9);
            assert!((0.2..0.9).contains(&x));
        }
    }
}
