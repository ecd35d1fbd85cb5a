//! Deterministic splittable PRNG shared by corpus generation and training.
//!
//! SplitMix64 (Steele, Lea & Flood, OOPSLA 2014): a 64-bit Weyl sequence
//! finished with an avalanching mixer. The whole generator is a dozen lines,
//! so ports in other languages can reproduce every stream bit for bit, which
//! is what keeps synthetic corpora and trained models byte-identical across
//! runs and machines.

/// Splittable 64-bit PRNG with a fixed, documented algorithm.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). Uses the widening-multiply reduction, so
    /// there is no modulo bias worth speaking of for any practical n.
    pub fn next_below(&mut self, n: usize) -> usize {
        assert!(n > 0, "next_below(0)");
        (((self.next_u64() as u128) * (n as u128)) >> 64) as usize
    }

    /// Derive an independent child stream. The child is seeded from this
    /// stream's next output, so split order matters and is part of the
    /// documented behavior.
    pub fn split(&mut self) -> SplitMix64 {
        SplitMix64::new(self.next_u64())
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i + 1);
            xs.swap(i, j);
        }
    }

    /// Sample an index from cumulative weights (last entry = total mass).
    pub fn next_weighted(&mut self, cumulative: &[f64]) -> usize {
        let total = *cumulative.last().expect("empty cumulative table");
        let x = self.next_f64() * total;
        // First index whose cumulative mass exceeds x; skips zero-mass cells.
        cumulative
            .partition_point(|&c| c <= x)
            .min(cumulative.len() - 1)
    }
}
