//! Seeded random streams.
//!
//! Every stochastic routine takes a `&mut SeedStream` explicitly. The
//! generator is ChaCha20 (`rand_chacha`), whose output is specified bit for
//! bit and identical on every platform. Parallel tasks never share a stream:
//! task `i` of a job with master seed `s` owns `SeedStream::derive(s, i)`,
//! i.e. a fresh ChaCha20 stream seeded with `s + i` (wrapping).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct SeedStream {
    inner: ChaCha20Rng,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Stream owned by task `index` of a job seeded with `master`.
    pub fn derive(master: u64, index: u64) -> Self {
        Self::new(master.wrapping_add(index))
    }

    /// Splits off an independent child stream, advancing `self`.
    pub fn split(&mut self) -> Self {
        Self::new(self.inner.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.inner
    }
}
