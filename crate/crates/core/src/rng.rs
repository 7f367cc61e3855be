//! Deterministic, splittable random streams.
//!
//! A stream is a ChaCha8 keystream addressed by `(seed, stream id)`. Child
//! streams are derived by hashing the parent id with a child index, so a
//! chain, an outer step or a single RGO call can each own an independent
//! substream without any shared state. Uniforms take the top 53 bits of one
//! 64-bit word; normals come from Box–Muller on two uniforms (one pair of
//! normals per pair of uniforms). Transcendentals go through `libm` so the
//! sequence does not depend on the platform math library.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const TWO_POW_NEG_53: f64 = 1.0 / 9_007_199_254_740_992.0;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            seed,
            stream,
            rng,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Independent child stream. Depends only on `(seed, stream id, index)`,
    /// never on how many numbers the parent has produced.
    pub fn substream(&self, index: u64) -> Self {
        let id = splitmix64(self.stream ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)));
        Self::with_stream(self.seed, id)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * TWO_POW_NEG_53
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.normal();
        }
    }

    pub fn normal_vec(&mut self, d: usize) -> Vec<f64> {
        let mut z = vec![0.0; d];
        self.fill_normal(&mut z);
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        for _ in 0..100 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
    }

    #[test]
    fn substreams_are_independent_of_parent_position() {
        let parent = RngStream::new(7);
        let mut advanced = parent.clone();
        for _ in 0..17 {
            advanced.uniform();
        }
        let mut a = parent.substream(3);
        let mut b = advanced.substream(3);
        assert_eq!(a.next_u64(), b.next_u64());
        let mut c = parent.substream(4);
        let mut a = parent.substream(3);
        assert_ne!(a.next_u64(), c.next_u64());
    }

    #[test]
    fn uniform_open_interval_and_moments() {
        let mut r = RngStream::new(1);
        let n = 200_000;
        let mut s = 0.0;
        for _ in 0..n {
            let u = r.uniform();
            assert!(u > 0.0 && u < 1.0);
            s += u;
        }
        assert!((s / n as f64 - 0.5).abs() < 4.0 * (1.0 / 12.0f64).sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn box_muller_consumes_two_uniforms_per_pair() {
        let mut a = RngStream::new(9);
        let mut b = RngStream::new(9);
        a.normal();
        a.normal();
        b.uniform();
        b.uniform();
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn normal_moments() {
        let mut r = RngStream::new(2024);
        let n = 200_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let z = r.normal();
            s1 += z;
            s2 += z * z;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 4.0 * 2f64.sqrt() / (n as f64).sqrt());
    }
}
