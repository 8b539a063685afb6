//! Counter-addressed standard normals.
//!
//! Draw j of stream s under seed k is a pure function of (k, s, j): ChaCha8 is
//! keyed by the seed, the stream selects the ChaCha stream id, and every pair
//! of normals consumes exactly two 64-bit words (Box–Muller), so the word
//! position of any draw is known in advance.

use std::f64::consts::TAU;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const WORDS_PER_PAIR: u128 = 4;

pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    /// Positions the stream so the next draw has index `index`.
    pub fn at(seed: u64, stream: u64, index: u64) -> Self {
        let mut s = Self::new(seed, stream);
        s.rng.set_word_pos((index / 2) as u128 * WORDS_PER_PAIR);
        if index % 2 == 1 {
            s.next_normal();
        }
        s
    }

    #[inline]
    fn pair(&mut self) -> (f64, f64) {
        // u1 in (0, 1], u2 in [0, 1)
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        (r * c, r * s)
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (z0, z1) = self.pair();
        self.spare = Some(z1);
        z0
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        let mut i = 0;
        if let Some(z) = self.spare.take() {
            if let Some(slot) = out.first_mut() {
                *slot = z;
                i = 1;
            } else {
                self.spare = Some(z);
                return;
            }
        }
        while i + 1 < out.len() {
            let (a, b) = self.pair();
            out[i] = a;
            out[i + 1] = b;
            i += 2;
        }
        if i < out.len() {
            out[i] = self.next_normal();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_access_matches_sequential() {
        let mut seq = NormalStream::new(7, 3);
        let draws: Vec<f64> = (0..11).map(|_| seq.next_normal()).collect();
        for (j, z) in draws.iter().enumerate() {
            assert_eq!(NormalStream::at(7, 3, j as u64).next_normal(), *z);
        }
        let mut filled = vec![0.0; 11];
        NormalStream::new(7, 3).fill(&mut filled);
        assert_eq!(filled, draws);
    }

    #[test]
    fn streams_differ() {
        let a = NormalStream::new(1, 0).next_normal();
        let b = NormalStream::new(1, 1).next_normal();
        let c = NormalStream::new(2, 0).next_normal();
        assert!(a != b && a != c);
    }

    #[test]
    fn moments_look_standard() {
        let mut s = NormalStream::new(42, 0);
        let n = 200_000;
        let mut z = vec![0.0; n];
        s.fill(&mut z);
        let mean = z.iter().sum::<f64>() / n as f64;
        let var = z.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt());
    }
}
