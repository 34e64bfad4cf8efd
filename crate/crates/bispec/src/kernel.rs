//! Gram matrices, kernel regularized least squares and cross-validation.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Rbf => "rbf",
        }
    }
}

/// Symmetric `n × n` kernel matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub n: usize,
    pub k: Vec<f64>,
    pub kind: KernelKind,
    pub sigma: Option<f64>,
}

impl GramMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Principal submatrix on `idx`.
    pub fn select(&self, idx: &[usize]) -> GramMatrix {
        let k = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| self.get(i, j)).collect();
        GramMatrix {
            n: idx.len(),
            k,
            kind: self.kind,
            sigma: self.sigma,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = DMatrix::from_row_slice(self.n, self.n, &self.k);
        m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kernel_value(kind: KernelKind, sigma: f64, a: &[f64], b: &[f64]) -> f64 {
    match kind {
        KernelKind::Linear => dot(a, b),
        KernelKind::Rbf => (-squared_distance(a, b) / (2.0 * sigma * sigma)).exp(),
    }
}

fn check_sigma(kind: KernelKind, sigma: Option<f64>) -> Result<f64> {
    match (kind, sigma) {
        (KernelKind::Linear, _) => Ok(0.0),
        (KernelKind::Rbf, Some(s)) if s > 0.0 && s.is_finite() => Ok(s),
        (KernelKind::Rbf, s) => Err(Error::BadSigma(s.unwrap_or(0.0))),
    }
}

pub fn gram(features: &[Vec<f64>], kind: KernelKind, sigma: Option<f64>) -> Result<GramMatrix> {
    let s = check_sigma(kind, sigma)?;
    let n = features.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = if i == j && kind == KernelKind::Rbf {
                1.0
            } else {
                kernel_value(kind, s, &features[i], &features[j])
            };
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    Ok(GramMatrix {
        n,
        k,
        kind,
        sigma: (kind == KernelKind::Rbf).then_some(s),
    })
}

/// `K(x_i, y_j)` as a row-major `|xs| × |ys|` matrix.
pub fn cross_gram(xs: &[Vec<f64>], ys: &[Vec<f64>], kind: KernelKind, sigma: Option<f64>) -> Result<Vec<f64>> {
    let s = check_sigma(kind, sigma)?;
    Ok(xs.iter().flat_map(|x| ys.iter().map(move |y| kernel_value(kind, s, x, y))).collect())
}

/// Median of the pairwise Euclidean distances.
pub fn median_distance(features: &[Vec<f64>]) -> f64 {
    let mut d: Vec<f64> = (0..features.len())
        .flat_map(|i| (i + 1..features.len()).map(move |j| (i, j)))
        .map(|(i, j)| squared_distance(&features[i], &features[j]).sqrt())
        .collect();
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    if d.len() % 2 == 1 {
        d[mid]
    } else {
        0.5 * (d[mid - 1] + d[mid])
    }
}

/// Dual coefficients of kernel regularized least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel {
    pub alpha: Vec<f64>,
}

impl BinaryModel {
    /// Decision values for test rows of a cross-kernel `K(test, train)`.
    pub fn decision(&self, cross: &[f64]) -> Vec<f64> {
        cross.chunks_exact(self.alpha.len().max(1)).map(|row| dot(row, &self.alpha)).collect()
    }

    /// `±1`, with ties going to `+1`.
    pub fn predict(&self, cross: &[f64]) -> Vec<f64> {
        self.decision(cross).into_iter().map(|v| if v >= 0.0 { 1.0 } else { -1.0 }).collect()
    }
}

/// Solves `(K + λI) α = y` by Cholesky factorisation.
pub fn train_binary(k: &GramMatrix, labels: &[f64], lambda: f64) -> Result<BinaryModel> {
    if labels.len() != k.n {
        return Err(Error::InsufficientData(format!("{} labels for a {}x{} Gram matrix", labels.len(), k.n, k.n)));
    }
    if !(lambda > 0.0) {
        return Err(Error::SingularSystem { lambda });
    }
    let mut m = DMatrix::from_row_slice(k.n, k.n, &k.k);
    for i in 0..k.n {
        m[(i, i)] += lambda;
    }
    let chol = m.cholesky().ok_or(Error::SingularSystem { lambda })?;
    let alpha = chol.solve(&DVector::from_column_slice(labels));
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { lambda });
    }
    Ok(BinaryModel {
        alpha: alpha.iter().cloned().collect(),
    })
}

/// Regularisation relative to the kernel scale: `λ · mean(diag K)`.
pub fn scaled_lambda(k: &GramMatrix, lambda: f64) -> f64 {
    let scale = k.trace() / k.n.max(1) as f64;
    lambda * if scale > 0.0 { scale } else { 1.0 }
}

pub fn error_rate(predicted: &[f64], truth: &[f64]) -> f64 {
    let wrong = predicted.iter().zip(truth).filter(|(p, t)| p != t).count();
    wrong as f64 / truth.len().max(1) as f64
}

/// Stratified fold index per sample: each class is shuffled separately
/// and dealt round-robin.
pub fn stratified_folds(labels: &[f64], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 folds, got {folds}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; labels.len()];
    for class in [1.0, -1.0] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < folds {
            return Err(Error::InsufficientData(format!(
                "class {class:+} has {} samples for {folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            out[i] = k % folds;
        }
    }
    Ok(out)
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..points).map(|k| 10f64.powf(a + (b - a) * k as f64 / (points - 1) as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    pub kind: KernelKind,
    pub lambdas: Vec<f64>,
    /// RBF widths as multiples of the median pairwise distance.
    pub sigma_multipliers: Vec<f64>,
    pub folds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvChoice {
    pub lambda: f64,
    /// Absolute RBF width; `None` for the linear kernel.
    pub sigma: Option<f64>,
    pub cv_error: f64,
}

/// Picks `(λ, σ)` minimising the mean fold error. Ties go to the larger
/// `λ`, then the larger `σ`.
pub fn cross_validate(features: &[Vec<f64>], labels: &[f64], grid: &CvGrid, seed: u64) -> Result<CvChoice> {
    if grid.lambdas.is_empty() {
        return Err(Error::InsufficientData("empty lambda grid".into()));
    }
    let fold_of = stratified_folds(labels, grid.folds, seed)?;
    let sigmas: Vec<Option<f64>> = match grid.kind {
        KernelKind::Linear => vec![None],
        KernelKind::Rbf => {
            if grid.sigma_multipliers.is_empty() {
                return Err(Error::InsufficientData("empty sigma grid".into()));
            }
            let med = median_distance(features);
            let med = if med > 0.0 { med } else { 1.0 };
            grid.sigma_multipliers.iter().map(|m| Some(m * med)).collect()
        }
    };
    let mut best: Option<CvChoice> = None;
    for &sigma in &sigmas {
        let full = gram(features, grid.kind, sigma)?;
        for &lambda in &grid.lambdas {
            let mut total = 0.0;
            for f in 0..grid.folds {
                let train: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != f).collect();
                let test: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == f).collect();
                let k = full.select(&train);
                let y: Vec<f64> = train.iter().map(|&i| labels[i]).collect();
                let model = train_binary(&k, &y, scaled_lambda(&k, lambda))?;
                let cross: Vec<f64> = test.iter().flat_map(|&i| train.iter().map(move |&j| (i, j))).map(|(i, j)| full.get(i, j)).collect();
                let truth: Vec<f64> = test.iter().map(|&i| labels[i]).collect();
                total += error_rate(&model.predict(&cross), &truth);
            }
            let candidate = CvChoice {
                lambda,
                sigma,
                cv_error: total / grid.folds as f64,
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    candidate.cv_error < b.cv_error
                        || (candidate.cv_error == b.cv_error
                            && (candidate.lambda > b.lambda
                                || (candidate.lambda == b.lambda && candidate.sigma.unwrap_or(0.0) > b.sigma.unwrap_or(0.0))))
                }
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    Ok(best.expect("non-empty grid"))
}
