//! Feature extraction and the pairwise digit classification experiment.

use std::fmt::Write as _;
use std::time::Instant;

use bispec_core::invariants::{bispectrum_with, feature_vector, TripleSet};
use bispec_core::sht::{build_projection_plan, project_image, ImagePatch, ProjectionPlan};
use bispec_core::so3::CGTable;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::idx::DigitDataset;
use crate::kernel::{cross_gram, cross_validate, error_rate, gram, scaled_lambda, train_binary, CvGrid, KernelKind};
use crate::transform::{derive_seed, transform_digit, TransformedSample, PATCH_SIDE};

/// Projection plan and CG table for one band-limit.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub plan: ProjectionPlan,
    pub cg: CGTable,
    pub set: TripleSet,
}

impl FeatureExtractor {
    pub fn new(side: usize, band_limit: usize, magnification: f64, sigma: f64, set: TripleSet) -> Result<Self> {
        Ok(FeatureExtractor {
            plan: build_projection_plan(side, band_limit, magnification, sigma)?,
            cg: CGTable::build(band_limit),
            set,
        })
    }

    pub fn with_table(plan: ProjectionPlan, cg: CGTable, set: TripleSet) -> Self {
        FeatureExtractor { plan, cg, set }
    }

    pub fn features(&self, patch: &ImagePatch) -> Result<Vec<f64>> {
        let coeffs = project_image(patch, &self.plan)?;
        Ok(feature_vector(&bispectrum_with(&coeffs, &self.cg, self.set)?))
    }
}

/// One real feature row per patch, in input order.
pub fn extract_features(patches: &[ImagePatch], extractor: &FeatureExtractor) -> Result<Vec<Vec<f64>>> {
    patches.par_iter().map(|p| extractor.features(p)).collect()
}

/// Runs `f` on a pool with `jobs` threads (0 lets rayon choose).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Per-column z-scores fitted on `train`; constant columns are left
/// centred but unscaled.
pub fn standardize(train: &mut [Vec<f64>], test: &mut [Vec<f64>]) {
    let Some(dim) = train.first().map(Vec::len) else {
        return;
    };
    let n = train.len() as f64;
    for c in 0..dim {
        let mean = train.iter().map(|r| r[c]).sum::<f64>() / n;
        let var = train.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        for r in train.iter_mut().chain(test.iter_mut()) {
            r[c] = (r[c] - mean) / sd;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Bispectrum,
    RawPixels,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Bispectrum => "bispectrum",
            FeatureKind::RawPixels => "raw_pixels",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    #[serde(rename = "L")]
    pub band_limit: usize,
    pub magnification: f64,
    pub smoothing: f64,
    pub seed: u64,
    pub pairs: Vec<(u8, u8)>,
    pub kernels: Vec<KernelKind>,
    pub splits: usize,
    /// Images taken per digit; half train, half test.
    pub per_class: usize,
    pub lambdas: Vec<f64>,
    pub sigma_multipliers: Vec<f64>,
    pub folds_linear: usize,
    pub folds_rbf: usize,
    pub standardize: bool,
    pub full_grid: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            band_limit: 15,
            magnification: 2.0,
            smoothing: 0.0,
            seed: 0,
            pairs: vec![(0, 1)],
            kernels: vec![KernelKind::Linear, KernelKind::Rbf],
            splits: 10,
            per_class: 100,
            lambdas: crate::kernel::log_grid(1e-4, 1.0, 7),
            sigma_multipliers: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            folds_linear: 10,
            folds_rbf: 3,
            standardize: false,
            full_grid: false,
        }
    }
}

impl EvalConfig {
    fn grid(&self, kind: KernelKind) -> CvGrid {
        CvGrid {
            kind,
            lambdas: self.lambdas.clone(),
            sigma_multipliers: self.sigma_multipliers.clone(),
            folds: match kind {
                KernelKind::Linear => self.folds_linear,
                KernelKind::Rbf => self.folds_rbf,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub digit_a: u8,
    pub digit_b: u8,
    pub feature_kind: FeatureKind,
    pub kernel: KernelKind,
    /// Percent.
    pub mean_error: f64,
    /// Sample standard deviation over splits, percent.
    pub std_error: f64,
    pub splits: usize,
    pub split_errors: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub transform_ms: f64,
    pub features_ms: f64,
    pub classify_ms: f64,
}

/// Transformed samples and both feature sets for the selected images.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub dataset_index: Vec<usize>,
    pub samples: Vec<TransformedSample>,
    pub bispectrum: Vec<Vec<f64>>,
    pub pixels: Vec<Vec<f64>>,
}

/// Distinct digits of `pairs`, ascending.
fn digits_of(pairs: &[(u8, u8)]) -> Vec<u8> {
    let mut d: Vec<u8> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    d.sort_unstable();
    d.dedup();
    d
}

/// Sample seed for dataset image `index` under `master`.
pub fn sample_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, 0, index as u64)
}

pub fn transform_selection(dataset: &DigitDataset, indices: &[usize], master: u64) -> Vec<TransformedSample> {
    indices
        .par_iter()
        .map(|&i| transform_digit(&dataset.images[i], dataset.labels[i], sample_seed(master, i)))
        .collect()
}

pub fn prepare(dataset: &DigitDataset, config: &EvalConfig, timings: &mut Timings) -> Result<PreparedData> {
    let mut dataset_index = Vec::new();
    for d in digits_of(&config.pairs) {
        let idx = dataset.indices_of(d, config.per_class);
        if idx.len() < 2 {
            return Err(Error::InsufficientData(format!("digit {d} has {} images", idx.len())));
        }
        dataset_index.extend(idx);
    }
    let t = Instant::now();
    let samples = transform_selection(dataset, &dataset_index, config.seed);
    timings.transform_ms = t.elapsed().as_secs_f64() * 1e3;
    prepare_from_samples(dataset_index, samples, config, timings)
}

pub fn prepare_from_samples(
    dataset_index: Vec<usize>,
    samples: Vec<TransformedSample>,
    config: &EvalConfig,
    timings: &mut Timings,
) -> Result<PreparedData> {
    let t = Instant::now();
    let set = if config.full_grid { TripleSet::Full } else { TripleSet::Symmetric };
    let extractor = FeatureExtractor::new(PATCH_SIDE, config.band_limit, config.magnification, config.smoothing, set)?;
    let patches: Vec<ImagePatch> = samples.iter().map(|s| s.patch.clone()).collect();
    let bispectrum = extract_features(&patches, &extractor)?;
    let pixels = patches.iter().map(|p| p.pixels().to_vec()).collect();
    timings.features_ms = t.elapsed().as_secs_f64() * 1e3;
    Ok(PreparedData {
        dataset_index,
        samples,
        bispectrum,
        pixels,
    })
}

/// Test error in percent for one split, feature kind and kernel.
fn split_error(
    features: &[Vec<f64>],
    labels: &[f64],
    train: &[usize],
    test: &[usize],
    config: &EvalConfig,
    kind: KernelKind,
    cv_seed: u64,
) -> Result<f64> {
    let mut xtr: Vec<Vec<f64>> = train.iter().map(|&i| features[i].clone()).collect();
    let mut xte: Vec<Vec<f64>> = test.iter().map(|&i| features[i].clone()).collect();
    if config.standardize {
        standardize(&mut xtr, &mut xte);
    }
    let ytr: Vec<f64> = train.iter().map(|&i| labels[i]).collect();
    let yte: Vec<f64> = test.iter().map(|&i| labels[i]).collect();
    let choice = cross_validate(&xtr, &ytr, &config.grid(kind), cv_seed)?;
    let k = gram(&xtr, kind, choice.sigma)?;
    let model = train_binary(&k, &ytr, scaled_lambda(&k, choice.lambda))?;
    let cross = cross_gram(&xte, &xtr, kind, choice.sigma)?;
    Ok(100.0 * error_rate(&model.predict(&cross), &yte))
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every configured pair on prepared data. Both feature kinds see
/// the same transformed samples and the same splits.
pub fn evaluate_prepared(data: &PreparedData, config: &EvalConfig) -> Result<Vec<PairResult>> {
    if config.splits == 0 {
        return Err(Error::InsufficientData("at least one split is required".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..config.pairs.len()).flat_map(|p| (0..config.splits).map(move |s| (p, s))).collect();
    // (pair, split) → errors per (feature kind, kernel).
    let per_job: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(p, s)| {
            let (a, b) = config.pairs[p];
            if a == b {
                return Err(Error::InsufficientData(format!("pair {a}-{b} needs two distinct digits")));
            }
            let pair_code = 1 + 16 * a as u64 + b as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, pair_code, s as u64));
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for digit in [a, b] {
                let mut idx: Vec<usize> = (0..data.samples.len()).filter(|&i| data.samples[i].label == digit).collect();
                if idx.len() < 2 {
                    return Err(Error::InsufficientData(format!("digit {digit} has {} samples", idx.len())));
                }
                idx.shuffle(&mut rng);
                let half = idx.len() / 2;
                train.extend_from_slice(&idx[..half]);
                test.extend_from_slice(&idx[half..2 * half]);
            }
            let labels: Vec<f64> = (0..data.samples.len())
                .map(|i| if data.samples[i].label == a { 1.0 } else { -1.0 })
                .collect();
            let cv_seed = derive_seed(config.seed, pair_code + 1024, s as u64);
            let mut out = Vec::new();
            for features in [&data.bispectrum, &data.pixels] {
                for &kind in &config.kernels {
                    out.push(split_error(features, &labels, &train, &test, config, kind, cv_seed)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut results = Vec::new();
    for (p, &(a, b)) in config.pairs.iter().enumerate() {
        let rows = &per_job[p * config.splits..(p + 1) * config.splits];
        for (fi, fk) in [FeatureKind::Bispectrum, FeatureKind::RawPixels].into_iter().enumerate() {
            for (ki, &kernel) in config.kernels.iter().enumerate() {
                let errs: Vec<f64> = rows.iter().map(|r| r[fi * config.kernels.len() + ki]).collect();
                let (mean_error, std_error) = mean_std(&errs);
                results.push(PairResult {
                    digit_a: a,
                    digit_b: b,
                    feature_kind: fk,
                    kernel,
                    mean_error,
                    std_error,
                    splits: config.splits,
                    split_errors: errs,
                });
            }
        }
    }
    Ok(results)
}

pub fn pairwise_eval(dataset: &DigitDataset, config: &EvalConfig) -> Result<(Vec<PairResult>, Timings)> {
    let mut timings = Timings::default();
    let data = prepare(dataset, config, &mut timings)?;
    let t = Instant::now();
    let results = evaluate_prepared(&data, config)?;
    timings.classify_ms = t.elapsed().as_secs_f64() * 1e3;
    Ok((results, timings))
}

pub fn results_to_csv(results: &[PairResult]) -> String {
    let mut out = String::from("pair,feature_kind,kernel,mean_error,std_error,splits\n");
    for r in results {
        writeln!(
            out,
            "{}-{},{},{},{:.4},{:.4},{}",
            r.digit_a,
            r.digit_b,
            r.feature_kind.name(),
            r.kernel.name(),
            r.mean_error,
            r.std_error,
            r.splits
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::idx::load_idx;
    use std::path::Path;

    fn digits() -> DigitDataset {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
        load_idx(&dir.join("digits-images.idx3-ubyte"), &dir.join("digits-labels.idx1-ubyte")).unwrap()
    }

    fn relative(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        diff / a.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn zero_patch_gives_zero_features() {
        let fx = FeatureExtractor::new(30, 6, 2.0, 0.0, TripleSet::Symmetric).unwrap();
        assert!(fx.features(&ImagePatch::zeros(30)).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rows_follow_sample_order() {
        let d = digits();
        let fx = FeatureExtractor::new(30, 6, 2.0, 0.0, TripleSet::Symmetric).unwrap();
        let samples: Vec<ImagePatch> = (0..4).map(|k| transform_digit(&d.images[k], 0, k as u64).patch).collect();
        let rows = extract_features(&samples, &fx).unwrap();
        let reversed: Vec<ImagePatch> = samples.iter().rev().cloned().collect();
        let rrows = extract_features(&reversed, &fx).unwrap();
        for k in 0..4 {
            assert_eq!(rows[k], rrows[3 - k]);
        }
    }

    #[test]
    fn quarter_turn_copies_share_features() {
        let d = digits();
        let fx = FeatureExtractor::new(30, 15, 2.0, 0.0, TripleSet::Symmetric).unwrap();
        for k in 0..3 {
            let patch = transform_digit(&d.images[k], 0, k as u64).patch;
            let a = fx.features(&patch).unwrap();
            let b = fx.features(&patch.rotate_quarter()).unwrap();
            assert!(relative(&a, &b) <= 1e-6);
        }
    }

    #[test]
    fn standardize_uses_training_statistics() {
        let mut train = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let mut test = vec![vec![2.0, 6.0]];
        standardize(&mut train, &mut test);
        assert_eq!(train, vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(test, vec![vec![0.0, 1.0]]);
    }

    #[test]
    fn memorisation_on_two_samples() {
        let features = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let labels = vec![1.0, -1.0];
        let k = gram(&features, KernelKind::Linear, None).unwrap();
        let m = train_binary(&k, &labels, 1e-3).unwrap();
        assert_eq!(error_rate(&m.predict(&k.k), &labels), 0.0);
    }

    #[test]
    fn small_eval_is_deterministic() {
        let d = digits();
        let config = EvalConfig {
            band_limit: 6,
            pairs: vec![(0, 1)],
            splits: 2,
            per_class: 24,
            folds_linear: 3,
            seed: 7,
            ..EvalConfig::default()
        };
        let (a, _) = pairwise_eval(&d, &config).unwrap();
        let (b, _) = with_jobs(1, || pairwise_eval(&d, &config)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|r| (0.0..=100.0).contains(&r.mean_error) && r.splits == 2));
        assert_eq!(results_to_csv(&a).lines().count(), 5);
    }

    #[test]
    fn insufficient_data_is_reported() {
        let d = digits();
        let config = EvalConfig {
            per_class: 1,
            ..EvalConfig::default()
        };
        assert!(matches!(pairwise_eval(&d, &config), Err(Error::InsufficientData(_))));
    }
}
