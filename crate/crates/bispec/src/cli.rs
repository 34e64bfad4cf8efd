//! The `bispec` command line tool.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bispec_core::cyclic::{cyclic_bispectrum, dft, power_spectrum as cyclic_power, shift, CyclicSignal};
use bispec_core::finitegroup::{
    group_bispectrum, group_fourier, group_power_spectrum, left_translate, symmetric_group_3, GroupCGTable,
};
use bispec_core::invariants::TripleSet;
use bispec_core::sht::{build_projection_plan, project_image, SphereCoeffs};
use bispec_core::so3::CGTable;
use bispec_core::C64;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{self, FeatureTable};
use crate::idx::load_idx;
use crate::kernel::{gram, KernelKind};
use crate::pipeline::{self, EvalConfig, Timings};

#[derive(Debug, Parser)]
#[command(name = "bispec", version, about = "Rotation and translation invariant image features")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Project an image patch onto the sphere and write its coefficients.
    Project(ProjectArgs),
    /// Bispectrum features of images or coefficient files, one row each.
    Features(FeaturesArgs),
    /// Gram matrix of a feature file.
    Gram(GramArgs),
    /// Transform digits from IDX files into a sample cache.
    Prep(PrepArgs),
    /// Pairwise digit classification, bispectrum against raw pixels.
    Eval(EvalArgs),
    /// Shift invariance of the cyclic power spectrum and bispectrum.
    DemoCyclic(DemoCyclicArgs),
    /// Translation invariance of the S3 power spectrum and bispectrum.
    DemoGroup(DemoGroupArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
pub struct SphereArgs {
    /// Band-limit.
    #[arg(long = "L", default_value_t = 15)]
    #[serde(rename = "L")]
    pub band_limit: usize,
    /// Magnification in radians per unit of plane distance.
    #[arg(long = "a", default_value_t = 2.0)]
    #[serde(rename = "a")]
    pub magnification: f64,
    /// Heat-kernel smoothing width; 0 disables smoothing.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
pub struct ProjectArgs {
    /// PGM (P2/P5) or CSV grid.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub sphere: SphereArgs,
    /// `.bin` writes SPHCOEF1, anything else JSON.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
pub struct FeaturesArgs {
    /// Images (PGM/CSV) or coefficient files (`.json`, `.bin`).
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub sphere: SphereArgs,
    /// Emit every (l1, l2) pair instead of l1 ≤ l2.
    #[arg(long)]
    pub full_grid: bool,
    /// CGTABLE1 file, read if present and written otherwise.
    #[arg(long)]
    pub cg_cache: Option<PathBuf>,
    /// `.bin` writes BISPFT01, anything else CSV; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum KernelArg {
    Linear,
    Rbf,
    Both,
}

impl KernelArg {
    fn kinds(self) -> Vec<KernelKind> {
        match self {
            KernelArg::Linear => vec![KernelKind::Linear],
            KernelArg::Rbf => vec![KernelKind::Rbf],
            KernelArg::Both => vec![KernelKind::Linear, KernelKind::Rbf],
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
pub struct GramArgs {
    /// Features CSV or BISPFT01 file.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, value_enum, default_value_t = KernelArg::Linear)]
    pub kernel: KernelArg,
    /// RBF width.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
pub struct DataArgs {
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
pub struct PrepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Images kept per digit.
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Sample cache written by `prep`, used instead of IDX files.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Digit pairs such as `0,1`; repeat the flag or pass `all`.
    #[arg(long, default_value = "0,1")]
    pub pairs: Vec<String>,
    #[arg(long, value_enum, default_value_t = KernelArg::Both)]
    pub kernel: KernelArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub sphere: SphereArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub splits: usize,
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    #[arg(long, default_value_t = 10)]
    pub folds_linear: usize,
    #[arg(long, default_value_t = 3)]
    pub folds_rbf: usize,
    /// Per-feature z-scores fitted on each training split.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    pub full_grid: bool,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Results CSV; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
pub struct DemoCyclicArgs {
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
pub struct DemoGroupArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Resolved configuration of a run.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub version: String,
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eval: Option<EvalConfig>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings: Option<Timings>,
    pub elapsed_ms: f64,
}

fn write_manifest(path: Option<&Path>, command: &Command, eval: Option<EvalConfig>, timings: Option<Timings>, start: Instant) -> Result<()> {
    let Some(path) = path else {
        return Ok(());
    };
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        command: command.clone_for_manifest(),
        eval,
        timings,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    formats::write_file(path, serde_json::to_string_pretty(&manifest)?.as_bytes())
}

impl Command {
    fn clone_for_manifest(&self) -> Command {
        match self {
            Command::Project(a) => Command::Project(a.clone()),
            Command::Features(a) => Command::Features(a.clone()),
            Command::Gram(a) => Command::Gram(a.clone()),
            Command::Prep(a) => Command::Prep(a.clone()),
            Command::Eval(a) => Command::Eval(a.clone()),
            Command::DemoCyclic(a) => Command::DemoCyclic(a.clone()),
            Command::DemoGroup(a) => Command::DemoGroup(a.clone()),
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => formats::write_file(p, bytes),
        None => std::io::stdout().write_all(bytes).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn is_bin(p: &Path) -> bool {
    p.extension().and_then(|e| e.to_str()) == Some("bin")
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InsufficientData(msg.into())
}

fn run_project(a: &ProjectArgs) -> Result<()> {
    let patch = formats::read_patch(&a.input)?;
    let plan = build_projection_plan(patch.side(), a.sphere.band_limit, a.sphere.magnification, a.sphere.sigma)?;
    let coeffs = project_image(&patch, &plan)?;
    if is_bin(&a.out) {
        formats::write_file(&a.out, &formats::encode_coeffs(&coeffs))
    } else {
        formats::write_file(&a.out, formats::coeffs_to_json(&coeffs).as_bytes())
    }
}

fn load_cg(band_limit: usize, cache: Option<&Path>) -> Result<CGTable> {
    match cache {
        Some(p) if p.exists() => {
            let t = formats::decode_cg_table(&formats::read_file(p)?)?;
            if t.band_limit() < band_limit {
                return Err(Error::Core(bispec_core::Error::BandLimitMismatch {
                    coeffs: band_limit,
                    table: t.band_limit(),
                }));
            }
            if t.band_limit() == band_limit {
                return Ok(t);
            }
            Ok(CGTable::build(band_limit))
        }
        Some(p) => {
            let t = CGTable::build(band_limit);
            formats::write_file(p, &formats::encode_cg_table(&t))?;
            Ok(t)
        }
        None => Ok(CGTable::build(band_limit)),
    }
}

enum Input {
    Patch(bispec_core::sht::ImagePatch),
    Coeffs(SphereCoeffs),
}

fn read_input(p: &Path) -> Result<Input> {
    match p.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let text = String::from_utf8_lossy(&formats::read_file(p)?).into_owned();
            Ok(Input::Coeffs(formats::coeffs_from_json(&text)?))
        }
        Some("bin") => Ok(Input::Coeffs(formats::decode_coeffs(&formats::read_file(p)?)?)),
        _ => Ok(Input::Patch(formats::read_patch(p)?)),
    }
}

fn run_features(a: &FeaturesArgs) -> Result<()> {
    let set = if a.full_grid { TripleSet::Full } else { TripleSet::Symmetric };
    let inputs = a.input.iter().map(|p| read_input(p)).collect::<Result<Vec<_>>>()?;
    let band = inputs
        .iter()
        .find_map(|i| match i {
            Input::Coeffs(c) => Some(c.band_limit()),
            Input::Patch(_) => None,
        })
        .unwrap_or(a.sphere.band_limit);
    let cg = load_cg(band, a.cg_cache.as_deref())?;
    let mut plans = std::collections::BTreeMap::new();
    let rows = pipeline::with_jobs(a.jobs, || -> Result<Vec<Vec<f64>>> {
        use rayon::prelude::*;
        for i in &inputs {
            if let Input::Patch(p) = i {
                if let std::collections::btree_map::Entry::Vacant(e) = plans.entry(p.side()) {
                    e.insert(build_projection_plan(p.side(), band, a.sphere.magnification, a.sphere.sigma)?);
                }
            }
        }
        inputs
            .par_iter()
            .map(|i| {
                let coeffs = match i {
                    Input::Patch(p) => project_image(p, &plans[&p.side()])?,
                    Input::Coeffs(c) => c.clone(),
                };
                let b = bispec_core::invariants::bispectrum_with(&coeffs, &cg, set)?;
                Ok(bispec_core::invariants::feature_vector(&b))
            })
            .collect()
    })?;
    let bytes = match a.out.as_deref() {
        Some(p) if is_bin(p) => formats::encode_bispectrum_features(band, set, &rows),
        _ => {
            let table = FeatureTable {
                columns: formats::bispectrum_columns(band, set),
                ids: a.input.iter().map(|p| p.display().to_string()).collect(),
                rows,
            };
            formats::features_to_csv(&table).into_bytes()
        }
    };
    emit(a.out.as_deref(), &bytes)
}

fn read_features(p: &Path) -> Result<FeatureTable> {
    let bytes = formats::read_file(p)?;
    if bytes.starts_with(formats::BISPFT_MAGIC) {
        let (band, set, rows) = formats::decode_bispectrum_features(&bytes)?;
        return Ok(FeatureTable {
            columns: formats::bispectrum_columns(band, set),
            ids: (0..rows.len()).map(|k| k.to_string()).collect(),
            rows,
        });
    }
    let text = String::from_utf8(bytes).map_err(|e| Error::format("features CSV", e.utf8_error().valid_up_to(), "invalid UTF-8"))?;
    formats::features_from_csv(&text)
}

fn run_gram(a: &GramArgs) -> Result<()> {
    let t = read_features(&a.features)?;
    let kind = match a.kernel {
        KernelArg::Linear => KernelKind::Linear,
        KernelArg::Rbf => KernelKind::Rbf,
        KernelArg::Both => return Err(usage("gram takes a single kernel")),
    };
    let g = gram(&t.rows, kind, a.sigma)?;
    emit(a.out.as_deref(), formats::gram_to_csv(&t.ids, &g.k).as_bytes())
}

fn dataset_paths(d: &DataArgs) -> Result<(PathBuf, PathBuf)> {
    match (&d.images, &d.labels) {
        (Some(i), Some(l)) => Ok((i.clone(), l.clone())),
        _ => Err(usage("--images and --labels are required")),
    }
}

fn run_prep(a: &PrepArgs) -> Result<()> {
    let (ip, lp) = dataset_paths(&a.data)?;
    let d = load_idx(&ip, &lp)?;
    let indices: Vec<usize> = (0..10).flat_map(|digit| d.indices_of(digit, a.per_class)).collect();
    let samples = pipeline::with_jobs(a.jobs, || pipeline::transform_selection(&d, &indices, a.seed));
    formats::write_file(&a.out, &formats::encode_samples(&indices, &samples))
}

fn parse_pairs(specs: &[String]) -> Result<Vec<(u8, u8)>> {
    let mut out = Vec::new();
    for s in specs {
        if s == "all" {
            out.extend((0..10u8).flat_map(|a| (a + 1..10).map(move |b| (a, b))));
            continue;
        }
        for part in s.split(';').filter(|p| !p.is_empty()) {
            let digits: Vec<&str> = part.split([',', '-']).collect();
            let parsed: Option<Vec<u8>> = digits.iter().map(|d| d.trim().parse().ok().filter(|v| *v < 10)).collect();
            match parsed.as_deref() {
                Some(&[a, b]) if a != b => out.push((a, b)),
                _ => return Err(usage(format!("bad digit pair {part:?}"))),
            }
        }
    }
    Ok(out)
}

pub fn eval_config(a: &EvalArgs) -> Result<EvalConfig> {
    Ok(EvalConfig {
        band_limit: a.sphere.band_limit,
        magnification: a.sphere.magnification,
        smoothing: a.sphere.sigma,
        seed: a.seed,
        pairs: parse_pairs(&a.pairs)?,
        kernels: a.kernel.kinds(),
        splits: a.splits,
        per_class: a.per_class,
        folds_linear: a.folds_linear,
        folds_rbf: a.folds_rbf,
        standardize: a.standardize,
        full_grid: a.full_grid,
        ..EvalConfig::default()
    })
}

fn run_eval(a: &EvalArgs) -> Result<(EvalConfig, Timings)> {
    let config = eval_config(a)?;
    let (results, timings) = pipeline::with_jobs(a.jobs, || -> Result<_> {
        let mut timings = Timings::default();
        let data = match &a.cache {
            Some(cache) => {
                let (indices, samples) = formats::decode_samples(&formats::read_file(cache)?)?;
                let mut keep = Vec::new();
                let mut counts = [0usize; 256];
                for (k, s) in samples.iter().enumerate() {
                    let wanted = config.pairs.iter().any(|&(x, y)| s.label == x || s.label == y);
                    if wanted && counts[s.label as usize] < config.per_class {
                        counts[s.label as usize] += 1;
                        keep.push(k);
                    }
                }
                let idx = keep.iter().map(|&k| indices[k]).collect();
                let samples = keep.iter().map(|&k| samples[k].clone()).collect();
                pipeline::prepare_from_samples(idx, samples, &config, &mut timings)?
            }
            None => {
                let (ip, lp) = dataset_paths(&a.data)?;
                let d = load_idx(&ip, &lp)?;
                pipeline::prepare(&d, &config, &mut timings)?
            }
        };
        let t = Instant::now();
        let results = pipeline::evaluate_prepared(&data, &config)?;
        timings.classify_ms = t.elapsed().as_secs_f64() * 1e3;
        Ok((results, timings))
    })?;
    emit(a.out.as_deref(), pipeline::results_to_csv(&results).as_bytes())?;
    Ok((config, timings))
}

fn max_relative(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs() / scale))
}

fn run_demo_cyclic(a: &DemoCyclicArgs) -> Result<()> {
    if a.n == 0 {
        return Err(usage("--n must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let values: Vec<C64> = (0..a.n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let f = CyclicSignal::new(values)?;
    let spectrum = dft(&f);
    let q = cyclic_power(&spectrum);
    let b = cyclic_bispectrum(&spectrum);
    let flat = |m: &bispec_core::cmat::CMatrix| m.as_slice().iter().flat_map(|z| [z.re, z.im]).collect::<Vec<_>>();
    let (mut dq, mut db) = (0.0f64, 0.0f64);
    for z in 0..a.n as i64 {
        let s = dft(&shift(&f, z));
        dq = dq.max(max_relative(&q, &cyclic_power(&s)));
        db = db.max(max_relative(&flat(b.matrix()), &flat(cyclic_bispectrum(&s).matrix())));
    }
    println!("n = {}, seed = {}", a.n, a.seed);
    println!("power spectrum: {q:.6?}");
    println!("max relative change over all shifts: power spectrum {dq:.3e}, bispectrum {db:.3e}");
    Ok(())
}

fn run_demo_group(a: &DemoGroupArgs) -> Result<()> {
    let (group, irreps) = symmetric_group_3();
    let table = GroupCGTable::build(&irreps, &group)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let f: Vec<C64> = (0..6).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let fh = group_fourier(&f, &irreps)?;
    let flat = |ms: &[bispec_core::cmat::CMatrix]| ms.iter().flat_map(|m| m.as_slice().iter().flat_map(|z| [z.re, z.im])).collect::<Vec<_>>();
    let q = flat(&group_power_spectrum(&fh));
    let b = flat(&group_bispectrum(&fh, &table)?);
    let (mut dq, mut db) = (0.0f64, 0.0f64);
    for z in 0..6 {
        let g = group_fourier(&left_translate(&f, z, &group), &irreps)?;
        dq = dq.max(max_relative(&q, &flat(&group_power_spectrum(&g))));
        db = db.max(max_relative(&b, &flat(&group_bispectrum(&g, &table)?)));
    }
    println!("S3 irreducible representations of dimensions {:?}", irreps.dims());
    for r1 in 0..irreps.len() {
        for r2 in 0..irreps.len() {
            let cg = table.get(r1, r2);
            println!("rho{r1} x rho{r2} = {:?}, residual {:.3e}", cg.blocks(), cg.residual(r1, r2, &irreps, &group));
        }
    }
    println!("max relative change over all translations: power spectrum {dq:.3e}, bispectrum {db:.3e}");
    Ok(())
}

fn dispatch(command: &Command) -> Result<()> {
    let start = Instant::now();
    match command {
        Command::Project(a) => {
            run_project(a)?;
            write_manifest(a.manifest.as_deref(), command, None, None, start)
        }
        Command::Features(a) => {
            run_features(a)?;
            write_manifest(a.manifest.as_deref(), command, None, None, start)
        }
        Command::Gram(a) => {
            run_gram(a)?;
            write_manifest(a.manifest.as_deref(), command, None, None, start)
        }
        Command::Prep(a) => {
            run_prep(a)?;
            write_manifest(a.manifest.as_deref(), command, None, None, start)
        }
        Command::Eval(a) => {
            let (config, timings) = run_eval(a)?;
            write_manifest(a.manifest.as_deref(), command, Some(config), Some(timings), start)
        }
        Command::DemoCyclic(a) => {
            run_demo_cyclic(a)?;
            write_manifest(a.manifest.as_deref(), command, None, None, start)
        }
        Command::DemoGroup(a) => {
            run_demo_group(a)?;
            write_manifest(a.manifest.as_deref(), command, None, None, start)
        }
    }
}

/// Parses `argv` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(Error::InsufficientData(msg)) if msg.starts_with("--") || msg.starts_with("bad digit") => {
            eprintln!("usage error: {msg}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
