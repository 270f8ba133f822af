//! Counter-based random streams.
//!
//! Every random quantity is addressed by a key path such as
//! `(seed, realization, molecule, step)`, so results do not depend on how
//! work is split across threads, and two runs that share a key path share
//! their random numbers.

use rand::RngCore;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Node in a tree of independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        Self(mix64(seed ^ 0x6a09_e667_f3bc_c909))
    }

    #[inline]
    pub fn child(self, index: u64) -> Self {
        Self(mix64(self.0 ^ mix64(index.wrapping_add(GOLDEN))))
    }

    #[inline]
    pub fn rng(self) -> CounterRng {
        CounterRng { key: self.0, counter: 0 }
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

/// SplitMix64 generator started at a hashed key. Cheap to create, so one
/// can be made for every (molecule, step) pair.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let v = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
}

/// Uniform in `[0, 1)` with 53 random bits.
#[inline]
pub fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_path_same_numbers() {
        let a = StreamKey::new(7).child(3).child(11).rng().next_u64();
        let b = StreamKey::new(7).child(3).child(11).rng().next_u64();
        assert_eq!(a, b);
        let c = StreamKey::new(7).child(11).child(3).rng().next_u64();
        assert_ne!(a, c);
    }

    #[test]
    fn uniforms_have_the_right_mean() {
        let mut rng = StreamKey::new(1).rng();
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| uniform(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 4.0 * (1.0 / 12.0 / n as f64).sqrt());
    }

    #[test]
    fn sibling_streams_are_uncorrelated() {
        let key = StreamKey::new(99);
        let n = 100_000;
        let (mut sxy, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let x = uniform(&mut key.child(i).rng()) - 0.5;
            let y = uniform(&mut key.child(i + 1).rng()) - 0.5;
            sxy += x * y;
            sx += x * x;
            sy += y * y;
        }
        let corr = sxy / (sx * sy).sqrt();
        assert!(corr.abs() < 4.0 / (n as f64).sqrt());
    }
}
