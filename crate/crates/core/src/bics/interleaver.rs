//! Seeded pseudo-random bit interleaver.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Interleaver {
    seed: u64,
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl Interleaver {
    /// Uniform random permutation of `len` positions drawn from `seed`.
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut inverse = vec![0; len];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        Self { seed, perm, inverse }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `out[i] = input[perm[i]]`.
    pub fn interleave<T: Copy>(&self, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.len(), "interleaver length");
        self.perm.iter().map(|&p| input[p]).collect()
    }

    pub fn deinterleave<T: Copy>(&self, input: &[T]) -> Vec<T> {
        assert_eq!(input.len(), self.len(), "interleaver length");
        self.inverse.iter().map(|&i| input[i]).collect()
    }
}
