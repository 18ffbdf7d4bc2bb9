//! Seeded synthetic classification data.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::model::TrainingSet;
use crate::sampling::solver_rng;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_features: usize,
    /// Probability that an entry of `X` is nonzero.
    pub density: f64,
    /// Nonzero entries of the planted weight vector.
    pub support: usize,
    /// Probability of flipping each label.
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec { n_samples: 100, n_features: 20, density: 1.0, support: 5, label_noise: 0.1, seed: 0 }
    }
}

/// Gaussian features, labels `sign(x^T w*)` with a sparse planted `w*`,
/// then flipped with probability `label_noise`. Returns the data and `w*`.
pub fn generate(spec: &SyntheticSpec) -> Result<(TrainingSet, Vec<f64>)> {
    let mut rng = solver_rng(spec.seed);
    let n = spec.n_features;
    let mut w_star = vec![0.0; n];
    for w in w_star.iter_mut().take(spec.support.min(n)) {
        *w = StandardNormal.sample(&mut rng);
    }
    let mut rows = Vec::with_capacity(spec.n_samples);
    let mut y = Vec::with_capacity(spec.n_samples);
    for _ in 0..spec.n_samples {
        let mut row = Vec::new();
        for j in 0..n {
            if spec.density >= 1.0 || rng.random::<f64>() < spec.density {
                row.push((j, StandardNormal.sample(&mut rng)));
            }
        }
        let score: f64 = row.iter().map(|&(j, x)| x * w_star[j]).sum();
        let mut label = if score >= 0.0 { 1.0 } else { -1.0 };
        if rng.random::<f64>() < spec.label_noise {
            label = -label;
        }
        rows.push(row);
        y.push(label);
    }
    let x = SparseMatrix::from_rows(n, rows)?;
    Ok((TrainingSet::new(x, y)?, w_star))
}
