use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Seeded generator used by every solver. ChaCha output is specified
/// independently of the platform, so traces are reproducible bit for bit.
pub type SolverRng = ChaCha8Rng;

pub fn solver_rng(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normal_vec(rng: &mut SolverRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Draws subsets of `0..n` of a fixed size, uniformly and without replacement,
/// with a partial Fisher-Yates shuffle. The returned indices are sorted.
#[derive(Debug, Clone)]
pub struct SubsetSampler {
    perm: Vec<usize>,
    chosen: Vec<usize>,
}

impl SubsetSampler {
    pub fn new(n: usize) -> Self {
        SubsetSampler { perm: (0..n).collect(), chosen: Vec::with_capacity(n) }
    }

    /// A subset of size `min(k, n)`. Asking for the whole set draws nothing
    /// from `rng`.
    pub fn sample(&mut self, rng: &mut SolverRng, k: usize) -> &[usize] {
        let n = self.perm.len();
        self.chosen.clear();
        if k >= n {
            self.chosen.extend(0..n);
            return &self.chosen;
        }
        for i in 0..k {
            let j = rng.random_range(i..n);
            self.perm.swap(i, j);
        }
        self.chosen.extend_from_slice(&self.perm[..k]);
        self.chosen.sort_unstable();
        &self.chosen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_sorted_and_distinct() {
        let mut rng = solver_rng(7);
        let mut s = SubsetSampler::new(20);
        for _ in 0..100 {
            let b = s.sample(&mut rng, 5).to_vec();
            assert_eq!(b.len(), 5);
            assert!(b.windows(2).all(|w| w[0] < w[1]));
            assert!(b.iter().all(|&i| i < 20));
        }
        assert_eq!(s.sample(&mut rng, 50), (0..20).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn every_index_is_drawn() {
        let mut rng = solver_rng(1);
        let mut s = SubsetSampler::new(10);
        let mut hits = [0usize; 10];
        for _ in 0..2000 {
            for &i in s.sample(&mut rng, 3) {
                hits[i] += 1;
            }
        }
        // Expected 600 each.
        assert!(hits.iter().all(|&h| (450..750).contains(&h)), "{hits:?}");
    }

    #[test]
    fn seeded_streams_repeat() {
        let a = standard_normal_vec(&mut solver_rng(3), 8);
        let b = standard_normal_vec(&mut solver_rng(3), 8);
        assert_eq!(a, b);
    }
}
