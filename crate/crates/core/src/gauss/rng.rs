//! Counter-addressable random streams.
//!
//! A [`RandomStream`] is a ChaCha12 keystream keyed by `seed` (expanded with
//! `SeedableRng::seed_from_u64`) on ChaCha stream `stream_id`. The stream is
//! read as consecutive little-endian 64-bit words; word `i` lives at 32-bit
//! word position `2i`. Every consumer documents how many words one draw
//! reads, so draw `k` is a pure function of `(seed, stream_id, k)` and can be
//! generated from any block without touching the draws before it. That is
//! what makes parallel Monte Carlo independent of the thread count.
//!
//! * uniform draw `k`: word `k`, mapped to `((w >> 12) + 0.5) · 2⁻⁵² ∈ (0, 1)`;
//! * normal draw `k`: words `2k, 2k + 1`, Box–Muller cosine branch
//!   `√(-2 ln u₁) cos(2π u₂)`.

use std::f64::consts::PI;

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Draws per parallel work unit. Block boundaries never change results, only
/// how work is scheduled.
pub const BLOCK_SIZE: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A statistically independent stream derived from this one.
    pub fn substream(&self, tag: u64) -> Self {
        Self { seed: self.seed, stream_id: splitmix64(self.stream_id ^ splitmix64(tag.wrapping_add(0x5bd1_e995))) }
    }

    /// Positions a word reader at 64-bit word `start`.
    pub fn reader(&self, start: u64) -> WordReader {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos(2 * start as u128);
        WordReader { rng }
    }

    /// Uniform draws `start .. start + out.len()`.
    pub fn uniforms(&self, start: u64, out: &mut [f64]) {
        let mut r = self.reader(start);
        for v in out.iter_mut() {
            *v = r.next_unit();
        }
    }

    /// Standard normal draws `start .. start + out.len()`.
    pub fn normals(&self, start: u64, out: &mut [f64]) {
        let mut r = self.reader(2 * start);
        for v in out.iter_mut() {
            *v = r.next_normal();
        }
    }
}

/// Sequential reader over a stream's 64-bit words.
pub struct WordReader {
    rng: ChaCha12Rng,
}

impl WordReader {
    pub fn next_word(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1); consumes one word.
    pub fn next_unit(&mut self) -> f64 {
        unit_from_word(self.next_word())
    }

    /// Standard normal; consumes two words.
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_unit();
        let u2 = self.next_unit();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

pub(crate) fn unit_from_word(w: u64) -> f64 {
    ((w >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Splits `0..total` into fixed blocks of [`BLOCK_SIZE`], maps each block in
/// parallel and returns the results in block order.
pub fn map_blocks<T, F>(total: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let blocks = total.div_ceil(BLOCK_SIZE);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK_SIZE;
            f(start..(start + BLOCK_SIZE).min(total))
        })
        .collect()
}

/// Fills a vector of length `total` in parallel; `fill(start, chunk)` must
/// write draws `start .. start + chunk.len()`.
pub fn fill_blocks<F>(total: usize, fill: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let mut out = vec![0.0; total];
    out.par_chunks_mut(BLOCK_SIZE).enumerate().for_each(|(b, chunk)| fill(b * BLOCK_SIZE, chunk));
    out
}

/// `count` i.i.d. standard normal draws `0 .. count` of `stream`.
pub fn sample_std_normal(stream: RandomStream, count: usize) -> Vec<f64> {
    fill_blocks(count, |start, chunk| stream.normals(start as u64, chunk))
}

/// Running mean and variance accumulator with an order-fixed merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAcc {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAcc {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &MeanAcc) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let mean = self.mean();
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_addressable() {
        let s = RandomStream::new(42, 3);
        let a = sample_std_normal(s, 1000);
        let b = sample_std_normal(s, 1000);
        assert_eq!(a, b);
        let mut tail = vec![0.0; 10];
        s.normals(500, &mut tail);
        assert_eq!(&a[500..510], &tail[..]);
    }

    #[test]
    fn uniforms_open_interval() {
        let s = RandomStream::new(1, 0);
        let mut u = vec![0.0; 10_000];
        s.uniforms(0, &mut u);
        assert!(u.iter().all(|&x| x > 0.0 && x < 1.0));
        assert_eq!(unit_from_word(0), 0.5 / (1u64 << 52) as f64);
        assert!(unit_from_word(u64::MAX) < 1.0);
    }

    #[test]
    fn independent_of_thread_count() {
        let s = RandomStream::new(9, 1);
        let n = 3 * BLOCK_SIZE + 17;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| sample_std_normal(s, n));
        let b = four.install(|| sample_std_normal(s, n));
        assert_eq!(a, b);
    }

    #[test]
    fn substreams_differ() {
        let s = RandomStream::new(5, 0);
        assert_ne!(s.substream(1), s.substream(2));
        assert_ne!(s.substream(1).stream_id, s.stream_id);
    }
}
