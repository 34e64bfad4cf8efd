//! Rotation-invariant polynomials of spherical coefficients.
//!
//! The quadratic invariants are the band energies `p_l = ‖f̂_l‖²`. The
//! cubic invariants couple two bands through Clebsch–Gordan coefficients
//! and contract the result with a third:
//!
//! ```text
//! p_{l1,l2,l} = Σ_m f̂_{lm} Σ_{m1} C^{l1,l2,l}_{m1,m−m1,m} f̂*_{l1,m1} f̂*_{l2,m−m1}
//! ```
//!
//! with `m1` restricted to `[max(−l1, m−l2), min(l1, m+l2)]`. Only
//! `l ≤ L` can be evaluated, so triples are capped at `min(l1 + l2, L)`.

use alloc::vec::Vec;

use crate::sht::SphereCoeffs;
use crate::so3::{m1_range, CGTable};
use crate::special::parity_sign;
use crate::{Error, Result, C64};

/// `p_l` for `0 ≤ l ≤ L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    values: Vec<f64>,
}

impl PowerSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn power_spectrum(coeffs: &SphereCoeffs) -> PowerSpectrum {
    let values = (0..=coeffs.band_limit())
        .map(|l| coeffs.band(l).iter().map(|c| c.norm_sqr()).sum())
        .collect();
    PowerSpectrum { values }
}

/// Which `(l1, l2)` pairs to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TripleSet {
    /// `l1 ≤ l2`; the swapped triples only differ by a sign.
    #[default]
    Symmetric,
    /// Every `l1, l2 ≤ L`.
    Full,
}

/// Canonical order: `l1` outer, `l2` middle, `l` inner and ascending.
pub fn enumerate_triples(band_limit: usize, set: TripleSet) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for l1 in 0..=band_limit {
        let start = match set {
            TripleSet::Symmetric => l1,
            TripleSet::Full => 0,
        };
        for l2 in start..=band_limit {
            for l in l1.abs_diff(l2)..=(l1 + l2).min(band_limit) {
                out.push((l1, l2, l));
            }
        }
    }
    out
}

/// True for triples whose invariant is zero for every input: with
/// `l1 = l2` and `l` odd the CG coupling is antisymmetric in `(m1, m2)`
/// while the product `f̂_{l1,m1} f̂_{l1,m2}` is symmetric.
pub fn vanishes_identically(l1: usize, l2: usize, l: usize) -> bool {
    l1 == l2 && l % 2 == 1
}

/// True for triples whose invariant is zero for every real-valued function.
/// Real input ties `f̂_{l,−m}` to `conj(f̂_{l,m})`, so any two equal degrees
/// make the coupling antisymmetric when `l1 + l2 + l` is odd.
pub fn vanishes_for_real_input(l1: usize, l2: usize, l: usize) -> bool {
    (l1 + l2 + l) % 2 == 1 && (l1 == l2 || l1 == l || l2 == l)
}

/// `ĝ_{l1,l2,l}`, the band-`l` part of `C^{l1,l2}(f̂_{l1} ⊗ f̂_{l2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledVector {
    pub l1: usize,
    pub l2: usize,
    pub l: usize,
    /// Indexed by `m + l`.
    pub g: Vec<C64>,
}

pub fn coupled_vector(coeffs: &SphereCoeffs, cg: &CGTable, l1: usize, l2: usize, l: usize) -> Result<CoupledVector> {
    check_band(coeffs, cg)?;
    if cg.block(l1.min(l2), l1.max(l2), l).is_none() {
        return Err(Error::Domain("triple not stored in the Clebsch-Gordan table"));
    }
    let li = l as i64;
    let (f1, f2) = (coeffs.band(l1), coeffs.band(l2));
    let g = (-li..=li)
        .map(|m| {
            let (lo, hi) = m1_range(l1, l2, m);
            (lo..=hi)
                .map(|m1| {
                    let c = cg.get(l1, l2, l, m1, m);
                    f1[(m1 + l1 as i64) as usize] * f2[(m - m1 + l2 as i64) as usize] * c
                })
                .sum()
        })
        .collect();
    Ok(CoupledVector { l1, l2, l, g })
}

/// Cubic invariants in canonical triple order.
#[derive(Debug, Clone, PartialEq)]
pub struct BispectrumFeatures {
    band_limit: usize,
    set: TripleSet,
    triples: Vec<(usize, usize, usize)>,
    values: Vec<C64>,
}

impl BispectrumFeatures {
    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn triple_set(&self) -> TripleSet {
        self.set
    }

    pub fn triples(&self) -> &[(usize, usize, usize)] {
        &self.triples
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, l1: usize, l2: usize, l: usize) -> Option<C64> {
        self.triples
            .iter()
            .position(|&t| t == (l1, l2, l))
            .map(|k| self.values[k])
    }

    /// Inverse of [`feature_vector`].
    pub fn from_real_view(band_limit: usize, set: TripleSet, real: &[f64]) -> Result<Self> {
        let triples = enumerate_triples(band_limit, set);
        if real.len() != 2 * triples.len() {
            return Err(Error::DimensionMismatch {
                expected: 2 * triples.len(),
                actual: real.len(),
            });
        }
        let values = real.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
        Ok(BispectrumFeatures {
            band_limit,
            set,
            triples,
            values,
        })
    }
}

/// `[Re p_0, Im p_0, Re p_1, Im p_1, …]`.
pub fn feature_vector(b: &BispectrumFeatures) -> Vec<f64> {
    b.values.iter().flat_map(|v| [v.re, v.im]).collect()
}

fn check_band(coeffs: &SphereCoeffs, cg: &CGTable) -> Result<()> {
    if coeffs.band_limit() != cg.band_limit() {
        return Err(Error::BandLimitMismatch {
            coeffs: coeffs.band_limit(),
            table: cg.band_limit(),
        });
    }
    Ok(())
}

/// One cubic invariant with `l1 ≤ l2`; adds the number of multiply-adds
/// performed to `ops`.
fn triple_invariant(coeffs: &SphereCoeffs, cg: &CGTable, l1: usize, l2: usize, l: usize, ops: &mut u64) -> C64 {
    let block = cg.block(l1, l2, l).expect("triple enumerated within the table");
    let (f1, f2, f) = (coeffs.band(l1), coeffs.band(l2), coeffs.band(l));
    let (l1i, l2i, li) = (l1 as i64, l2 as i64, l as i64);
    let mut acc = C64::new(0.0, 0.0);
    for m in -li..=li {
        let (lo, hi) = m1_range(l1, l2, m);
        let row = block.row(m);
        let a = &f1[(lo + l1i) as usize..=(hi + l1i) as usize];
        let b = &f2[(m - hi + l2i) as usize..=(m - lo + l2i) as usize];
        let (mut re, mut im) = (0.0, 0.0);
        for ((&c, x), y) in row.iter().zip(a).zip(b.iter().rev()) {
            re += c * (x.re * y.re - x.im * y.im);
            im += c * (x.re * y.im + x.im * y.re);
        }
        *ops += row.len() as u64 + 1;
        acc += f[(m + li) as usize] * C64::new(re, -im);
    }
    acc
}

pub fn bispectrum(coeffs: &SphereCoeffs, cg: &CGTable) -> Result<BispectrumFeatures> {
    bispectrum_with(coeffs, cg, TripleSet::Symmetric)
}

pub fn bispectrum_with(coeffs: &SphereCoeffs, cg: &CGTable, set: TripleSet) -> Result<BispectrumFeatures> {
    bispectrum_counted(coeffs, cg, set).map(|(b, _)| b)
}

/// Like [`bispectrum_with`], also returning the multiply-add count of the
/// inner loops.
pub fn bispectrum_counted(coeffs: &SphereCoeffs, cg: &CGTable, set: TripleSet) -> Result<(BispectrumFeatures, u64)> {
    check_band(coeffs, cg)?;
    let band_limit = coeffs.band_limit();
    let triples = enumerate_triples(band_limit, set);
    let mut ops = 0u64;
    let values = triples
        .iter()
        .map(|&(l1, l2, l)| {
            if l1 <= l2 {
                triple_invariant(coeffs, cg, l1, l2, l, &mut ops)
            } else {
                // p_{l1,l2,l} = (−1)^{l1+l2−l} p_{l2,l1,l} by CG exchange symmetry.
                triple_invariant(coeffs, cg, l2, l1, l, &mut ops) * parity_sign((l1 + l2 - l) as i64)
            }
        })
        .collect();
    Ok((
        BispectrumFeatures {
            band_limit,
            set,
            triples,
            values,
        },
        ops,
    ))
}
