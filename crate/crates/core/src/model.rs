//! Problem container for regularized linear classification.
//!
//! The learning problem is
//! `minimize_w  sum_b lambda ||w_b||_{kappa_b} + sum_l h(y_l x_l^T w)`
//! with the weights split into contiguous feature blocks `w_b`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::prox::{self, ScalarLoss};
use crate::sparse::SparseMatrix;

/// Feature matrix with `{-1, +1}` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    x: SparseMatrix,
    y: Vec<f64>,
}

impl TrainingSet {
    pub fn new(x: SparseMatrix, y: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if x.n_rows() != y.len() {
            return Err(Error::DimensionMismatch(format!("{} rows but {} labels", x.n_rows(), y.len())));
        }
        if let Some(bad) = y.iter().find(|&&l| l != 1.0 && l != -1.0) {
            return Err(Error::Domain(format!("label {bad} is not -1 or +1")));
        }
        Ok(TrainingSet { x, y })
    }

    pub fn x(&self) -> &SparseMatrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }

    /// Margin `y_l x_l^T w`.
    #[inline]
    pub fn margin(&self, l: usize, w: &[f64]) -> f64 {
        self.y[l] * self.x.row_dot(l, w)
    }

    pub fn subset(&self, rows: &[usize]) -> TrainingSet {
        TrainingSet { x: self.x.select_rows(rows), y: rows.iter().map(|&i| self.y[i]).collect() }
    }

    pub fn with_n_features(self, n: usize) -> Result<TrainingSet> {
        Ok(TrainingSet { x: self.x.with_n_cols(n)?, y: self.y })
    }
}

/// Contiguous split of `0..N` into `B` nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    offsets: Vec<usize>,
}

impl BlockPartition {
    pub fn from_offsets(offsets: Vec<usize>) -> Result<Self> {
        if offsets.len() < 2 || offsets[0] != 0 {
            return Err(Error::InvalidConfig("block offsets must start at 0 and name at least one block".into()));
        }
        if offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("block offsets must be strictly increasing".into()));
        }
        Ok(BlockPartition { offsets })
    }

    /// Blocks of `ceil(N / B)` features, the last one possibly smaller.
    pub fn contiguous(n_features: usize, n_blocks: usize) -> Result<Self> {
        if n_blocks == 0 || n_features == 0 {
            return Err(Error::InvalidConfig("need at least one feature and one block".into()));
        }
        let size = n_features.div_ceil(n_blocks);
        let offsets: Vec<usize> =
            (0..n_blocks).map(|b| (b * size).min(n_features)).chain(std::iter::once(n_features)).collect();
        BlockPartition::from_offsets(offsets).map_err(|_| {
            Error::InvalidConfig(format!(
                "{n_features} features cannot be split into {n_blocks} nonempty blocks of size {size}"
            ))
        })
    }

    pub fn single(n_features: usize) -> Result<Self> {
        BlockPartition::contiguous(n_features, 1)
    }

    pub fn n_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_features(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    #[inline]
    pub fn range(&self, b: usize) -> std::ops::Range<usize> {
        self.offsets[b]..self.offsets[b + 1]
    }

    pub fn block_size(&self, b: usize) -> usize {
        self.offsets[b + 1] - self.offsets[b]
    }

    /// Block containing feature `j`.
    pub fn block_of(&self, j: usize) -> usize {
        self.offsets.partition_point(|&o| o <= j) - 1
    }
}

/// Norm applied to one block of weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockNorm {
    L1,
    L2,
}

impl FromStr for BlockNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" | "1" => Ok(BlockNorm::L1),
            "l2" | "2" | "group" | "group-l2" => Ok(BlockNorm::L2),
            other => Err(Error::InvalidConfig(format!("unknown regularizer '{other}'"))),
        }
    }
}

impl fmt::Display for BlockNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockNorm::L1 => "l1",
            BlockNorm::L2 => "l2",
        })
    }
}

/// `f_b = lambda ||.||_{kappa_b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerSpec {
    pub lambda: f64,
    /// One entry per block, or a single entry shared by all blocks.
    pub kappa: Vec<BlockNorm>,
}

impl RegularizerSpec {
    pub fn l1(lambda: f64) -> Self {
        RegularizerSpec { lambda, kappa: vec![BlockNorm::L1] }
    }

    pub fn group_l2(lambda: f64) -> Self {
        RegularizerSpec { lambda, kappa: vec![BlockNorm::L2] }
    }

    #[inline]
    pub fn norm(&self, b: usize) -> BlockNorm {
        if self.kappa.len() == 1 {
            self.kappa[0]
        } else {
            self.kappa[b]
        }
    }

    /// `lambda ||w_b||_{kappa_b}`.
    pub fn block_value(&self, b: usize, w_b: &[f64]) -> f64 {
        let norm = match self.norm(b) {
            BlockNorm::L1 => w_b.iter().map(|x| x.abs()).sum::<f64>(),
            BlockNorm::L2 => w_b.iter().map(|x| x * x).sum::<f64>().sqrt(),
        };
        self.lambda * norm
    }

    /// In place `prox_{step f_b}`.
    pub fn prox_block(&self, b: usize, w_b: &mut [f64], step: f64) {
        let theta = step * self.lambda;
        match self.norm(b) {
            BlockNorm::L1 => prox::prox_l1_in_place(w_b, theta),
            BlockNorm::L2 => prox::prox_group_l2_in_place(w_b, theta),
        }
    }
}

/// Dataset, partition, regularizer and loss. Immutable once built.
#[derive(Debug, Clone)]
pub struct Problem {
    data: TrainingSet,
    partition: BlockPartition,
    reg: RegularizerSpec,
    loss: ScalarLoss,
}

impl Problem {
    pub fn new(data: TrainingSet, partition: BlockPartition, reg: RegularizerSpec, loss: ScalarLoss) -> Result<Self> {
        if partition.n_features() != data.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "partition covers {} features, data has {}",
                partition.n_features(),
                data.n_features()
            )));
        }
        if !(reg.lambda.is_finite() && reg.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {}", reg.lambda)));
        }
        if reg.kappa.len() != 1 && reg.kappa.len() != partition.n_blocks() {
            return Err(Error::InvalidConfig(format!(
                "{} block norms given for {} blocks",
                reg.kappa.len(),
                partition.n_blocks()
            )));
        }
        Ok(Problem { data, partition, reg, loss })
    }

    pub fn data(&self) -> &TrainingSet {
        &self.data
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn reg(&self) -> &RegularizerSpec {
        &self.reg
    }

    pub fn loss(&self) -> ScalarLoss {
        self.loss
    }

    pub fn n_features(&self) -> usize {
        self.data.n_features()
    }

    pub fn n_samples(&self) -> usize {
        self.data.n_samples()
    }

    pub fn n_blocks(&self) -> usize {
        self.partition.n_blocks()
    }

    /// Same data and loss, another regularizer.
    pub fn with_reg(&self, reg: RegularizerSpec) -> Result<Problem> {
        Problem::new(self.data.clone(), self.partition.clone(), reg, self.loss)
    }

    fn check_len(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "weight vector has {} entries, problem has {} features",
                w.len(),
                self.n_features()
            )));
        }
        Ok(())
    }

    /// Per-block penalty values.
    pub fn regularizer_terms(&self, w: &[f64]) -> Vec<f64> {
        (0..self.n_blocks()).map(|b| self.reg.block_value(b, &w[self.partition.range(b)])).collect()
    }

    pub fn data_term(&self, w: &[f64]) -> f64 {
        (0..self.n_samples()).map(|l| self.loss.value(self.data.margin(l, w))).sum()
    }

    /// Full objective: penalty plus summed loss.
    pub fn objective(&self, w: &[f64]) -> Result<f64> {
        self.check_len(w)?;
        Ok(self.regularizer_terms(w).iter().sum::<f64>() + self.data_term(w))
    }

    /// `sum_l y_l x_l h'(y_l x_l^T w)`, the gradient of the data term.
    pub fn smooth_gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_len(w)?;
        let mut g = vec![0.0; self.n_features()];
        for l in 0..self.n_samples() {
            let d = self.loss.grad(self.data.margin(l, w));
            if d != 0.0 {
                self.data.x().row_axpy(l, self.data.y()[l] * d, &mut g);
            }
        }
        Ok(g)
    }

    /// Largest violation of `0 in df(w) + grad(data term)(w)`, blockwise.
    ///
    /// For `l1` blocks this is, per coordinate, `max(|g_j| - lambda, 0)` at
    /// zeros and `|g_j + lambda sign(w_j)|` elsewhere; group blocks use the
    /// Euclidean analogue.
    pub fn kkt_residual(&self, w: &[f64]) -> Result<f64> {
        let g = self.smooth_gradient(w)?;
        let lambda = self.reg.lambda;
        let mut worst = 0.0_f64;
        for b in 0..self.n_blocks() {
            let r = self.partition.range(b);
            let (wb, gb) = (&w[r.clone()], &g[r]);
            match self.reg.norm(b) {
                BlockNorm::L1 => {
                    for (&wj, &gj) in wb.iter().zip(gb) {
                        let v =
                            if wj == 0.0 { (gj.abs() - lambda).max(0.0) } else { (gj + lambda * wj.signum()).abs() };
                        worst = worst.max(v);
                    }
                }
                BlockNorm::L2 => {
                    let norm = wb.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let v = if norm == 0.0 {
                        (gb.iter().map(|x| x * x).sum::<f64>().sqrt() - lambda).max(0.0)
                    } else {
                        gb.iter().zip(wb).map(|(g, w)| (g + lambda * w / norm).powi(2)).sum::<f64>().sqrt()
                    };
                    worst = worst.max(v);
                }
            }
        }
        Ok(worst)
    }

    /// Smallest `lambda` for which `w = 0` is optimal, `||grad(data term)(0)||`
    /// in the dual norm of the penalty.
    pub fn lambda_max(&self) -> f64 {
        let g = self.smooth_gradient(&vec![0.0; self.n_features()]).expect("length matches");
        (0..self.n_blocks())
            .map(|b| {
                let gb = &g[self.partition.range(b)];
                match self.reg.norm(b) {
                    BlockNorm::L1 => gb.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
                    BlockNorm::L2 => gb.iter().map(|x| x * x).sum::<f64>().sqrt(),
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `sign(x^T w)`, with ties resolved to `+1`.
pub fn predict(w: &[f64], x: &[f64]) -> f64 {
    let s: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
    if s < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn predict_row(w: &[f64], x: &SparseMatrix, l: usize) -> f64 {
    if x.row_dot(l, w) < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Fraction of components with `|w_j| <= tol`.
pub fn sparsity_degree(w: &[f64], tol: f64) -> f64 {
    if w.is_empty() {
        return 1.0;
    }
    w.iter().filter(|x| x.abs() <= tol).count() as f64 / w.len() as f64
}

/// Misclassification rate of `sign(x^T w)` on `test`.
pub fn test_error(w: &[f64], test: &TrainingSet) -> Result<f64> {
    if test.n_samples() == 0 {
        return Err(Error::EmptyDataset);
    }
    if w.len() != test.n_features() {
        return Err(Error::DimensionMismatch(format!("{} weights for {} test features", w.len(), test.n_features())));
    }
    let wrong = (0..test.n_samples()).filter(|&l| predict_row(w, test.x(), l) != test.y()[l]).count();
    Ok(wrong as f64 / test.n_samples() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_sample(x: f64, y: f64, lambda: f64) -> Problem {
        let data = TrainingSet::new(SparseMatrix::from_dense(&[vec![x]]).unwrap(), vec![y]).unwrap();
        Problem::new(data, BlockPartition::single(1).unwrap(), RegularizerSpec::l1(lambda), ScalarLoss::Logistic)
            .unwrap()
    }

    #[test]
    fn objective_examples() {
        let p = one_sample(1.0, 1.0, 0.0);
        assert!((p.objective(&[0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        let p = one_sample(2.0, -1.0, 1.0);
        let expected = 1.0 + (1.0 + 2f64.exp()).ln();
        assert!((p.objective(&[1.0]).unwrap() - expected).abs() < 1e-14);
        assert!(p.objective(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn objective_at_zero_is_l_log2() {
        let rows = vec![vec![1.0, 2.0], vec![0.0, -1.0], vec![3.0, 0.5]];
        let data = TrainingSet::new(SparseMatrix::from_dense(&rows).unwrap(), vec![1.0, -1.0, 1.0]).unwrap();
        let p = Problem::new(data, BlockPartition::single(2).unwrap(), RegularizerSpec::l1(7.0), ScalarLoss::Logistic)
            .unwrap();
        assert!((p.objective(&[0.0, 0.0]).unwrap() - 3.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn prediction_and_ties() {
        assert_eq!(predict(&[1.0, 0.0], &[2.0, 5.0]), 1.0);
        assert_eq!(predict(&[-1.0], &[3.0]), -1.0);
        assert_eq!(predict(&[0.0, 0.0], &[3.0, -4.0]), 1.0);
    }

    #[test]
    fn sparsity_examples() {
        assert_eq!(sparsity_degree(&[0.0, 0.0, 1.0, 2.0], 0.0), 0.5);
        assert_eq!(sparsity_degree(&[1e-12, 1.0], 1e-8), 0.5);
        assert_eq!(sparsity_degree(&[0.0; 4], 0.0), 1.0);
    }

    #[test]
    fn test_error_examples() {
        let rows = vec![vec![1.0], vec![-2.0], vec![3.0], vec![-0.5]];
        let set = TrainingSet::new(SparseMatrix::from_dense(&rows).unwrap(), vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(test_error(&[1.0], &set).unwrap(), 0.0);
        assert_eq!(test_error(&[0.0], &set).unwrap(), 0.5);
        assert_eq!(test_error(&[-1.0], &set).unwrap(), 1.0);
    }

    #[test]
    fn partition_shapes() {
        let p = BlockPartition::contiguous(10, 4).unwrap();
        assert_eq!(p.offsets(), &[0, 3, 6, 9, 10]);
        assert_eq!(p.block_of(0), 0);
        assert_eq!(p.block_of(9), 3);
        assert_eq!(p.block_of(6), 2);
        assert!(BlockPartition::contiguous(9, 6).is_err());
        assert!(BlockPartition::from_offsets(vec![0, 2, 2, 4]).is_err());
        let rcv1 = BlockPartition::contiguous(12560, 9).unwrap();
        assert_eq!(rcv1.n_blocks(), 9);
        assert_eq!(rcv1.block_size(8), 12560 - 8 * 1396);
    }

    #[test]
    fn labels_are_validated() {
        let x = SparseMatrix::from_dense(&[vec![1.0]]).unwrap();
        assert!(TrainingSet::new(x.clone(), vec![0.0]).is_err());
        assert!(TrainingSet::new(x, vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn lambda_max_makes_zero_optimal() {
        let rows = vec![vec![1.0, 2.0], vec![0.0, -1.0], vec![3.0, 0.5]];
        let data = TrainingSet::new(SparseMatrix::from_dense(&rows).unwrap(), vec![1.0, -1.0, 1.0]).unwrap();
        let p = Problem::new(data, BlockPartition::single(2).unwrap(), RegularizerSpec::l1(0.0), ScalarLoss::Logistic)
            .unwrap();
        // 0.5 * ||sum y x||_inf = 0.5 * max(|1 + 3|, |2 + 1 + 0.5|)
        assert!((p.lambda_max() - 2.0).abs() < 1e-15);
        let p = p.with_reg(RegularizerSpec::l1(2.0)).unwrap();
        assert!(p.kkt_residual(&[0.0, 0.0]).unwrap() < 1e-15);
    }
}
