//! Rotations of the sphere: Wigner matrices and Clebsch–Gordan tables.
//!
//! Rotations use the z-y-z Euler convention `R = R_z(α) R_y(β) R_z(γ)`
//! acting actively on functions, `(Rf)(ω) = f(R⁻¹ω)`. Band-`l` coefficient
//! vectors transform as `f̂_l ↦ D^l(R) f̂_l` with
//! `D^l_{m'm} = e^{−im'α} d^l_{m'm}(β) e^{−imγ}`.
//!
//! Clebsch–Gordan coefficients are real with the Condon–Shortley phase. The
//! matrix `C^{l1,l2}`, rows `(l, m)` and columns `(m1, m2)`, satisfies
//! `C (D^{l1} ⊗ D^{l2}) C† = ⊕_l D^l`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::cmat::CMatrix;
use crate::sht::SphereCoeffs;
use crate::special::{ln_factorial, parity_sign};
use crate::{Error, Result, C64};

/// 3×3 rotation matrix, row-major.
pub type Matrix3 = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerRotation {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

fn wrap_angle(x: f64) -> f64 {
    let t = 2.0 * PI;
    let r = x.rem_euclid(t);
    if r >= t {
        0.0
    } else {
        r
    }
}

fn rot_z(a: f64) -> Matrix3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn rot_y(b: f64) -> Matrix3 {
    let (s, c) = b.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub fn mat3_mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat3_transpose(a: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn mat3_apply(a: &Matrix3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
}

/// Unit vector of the sphere point `(θ, φ)`.
pub fn sphere_to_cartesian(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// `(θ, φ)` of a non-zero vector, `φ ∈ [0, 2π)`.
pub fn cartesian_to_sphere(v: [f64; 3]) -> (f64, f64) {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
    (theta, wrap_angle(v[1].atan2(v[0])))
}

impl EulerRotation {
    /// Any angles are accepted; the stored triple is canonical with
    /// `β ∈ [0, π]` and `α, γ ∈ [0, 2π)`.
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        let b = wrap_angle(beta);
        if b <= PI {
            EulerRotation {
                alpha: wrap_angle(alpha),
                beta: b,
                gamma: wrap_angle(gamma),
            }
        } else {
            // R_y(2π − b) = R_z(π) R_y(b') R_z(π) with b' = 2π − b ∈ (0, π).
            EulerRotation {
                alpha: wrap_angle(alpha + PI),
                beta: 2.0 * PI - b,
                gamma: wrap_angle(gamma + PI),
            }
        }
    }

    pub fn identity() -> Self {
        EulerRotation {
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
        }
    }

    /// Haar-uniform rotation from three uniform samples in `[0, 1)`.
    pub fn from_uniform(u: [f64; 3]) -> Self {
        Self::new(2.0 * PI * u[0], (1.0 - 2.0 * u[1]).clamp(-1.0, 1.0).acos(), 2.0 * PI * u[2])
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn to_matrix(&self) -> Matrix3 {
        mat3_mul(&mat3_mul(&rot_z(self.alpha), &rot_y(self.beta)), &rot_z(self.gamma))
    }

    pub fn from_matrix(m: &Matrix3) -> Self {
        let beta = m[2][2].clamp(-1.0, 1.0).acos();
        let sb = beta.sin();
        if sb > 1e-10 {
            Self::new(m[1][2].atan2(m[0][2]), beta, m[2][1].atan2(-m[2][0]))
        } else if m[2][2] > 0.0 {
            Self::new(m[1][0].atan2(m[0][0]), 0.0, 0.0)
        } else {
            Self::new((-m[1][0]).atan2(m[1][1]), PI, 0.0)
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &EulerRotation) -> Self {
        Self::from_matrix(&mat3_mul(&self.to_matrix(), &other.to_matrix()))
    }

    pub fn inverse(&self) -> Self {
        Self::new(-self.gamma, self.beta, -self.alpha)
    }
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Jacobi polynomial `P_n^{(a,b)}(x)` by the three-term recurrence in `n`.
fn jacobi(n: usize, a: f64, b: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut p0 = 1.0;
    let mut p1 = 0.5 * (a - b + (a + b + 2.0) * x);
    for k in 2..=n {
        let k = k as f64;
        let s = 2.0 * k + a + b;
        let c1 = 2.0 * k * (k + a + b) * (s - 2.0);
        let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s;
        let p2 = (c2 * p1 - c3 * p0) / c1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Single entry `d^l_{m'm}(β)` from its Jacobi-polynomial form.
pub fn wigner_d_entry(l: usize, mp: i64, m: i64, beta: f64) -> f64 {
    let j = l as i64;
    if mp.abs() > j || m.abs() > j {
        return 0.0;
    }
    let options = [(j + m, 0), (j - m, 1), (j + mp, 2), (j - mp, 3)];
    let (k, case) = options.iter().copied().min_by_key(|o| o.0).unwrap();
    let (a, lambda) = match case {
        0 => (mp - m, mp - m),
        1 => (m - mp, 0),
        2 => (m - mp, 0),
        _ => (mp - m, mp - m),
    };
    let b = 2 * j - 2 * k - a;
    let (k, a, b) = (k as usize, a as usize, b as usize);
    let norm = (0.5 * (ln_binomial(2 * l - k, k + a) - ln_binomial(k + b, b))).exp();
    let (s, c) = (beta / 2.0).sin_cos();
    parity_sign(lambda) * norm * s.powi(a as i32) * c.powi(b as i32) * jacobi(k, a as f64, b as f64, beta.cos())
}

/// Real orthogonal `d^l(β)`, row-major with rows `m'` and columns `m`
/// running from `−l` to `l`.
pub fn wigner_d_small(l: usize, beta: f64) -> Vec<f64> {
    let n = 2 * l + 1;
    let j = l as i64;
    let mut out = vec![0.0; n * n];
    for (r, mp) in (-j..=j).enumerate() {
        for (c, m) in (-j..=j).enumerate() {
            out[r * n + c] = wigner_d_entry(l, mp, m, beta);
        }
    }
    out
}

/// `D^l(R)` with rows `m'` and columns `m` from `−l` to `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerBlock {
    l: usize,
    matrix: CMatrix,
}

impl WignerBlock {
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn get(&self, mp: i64, m: i64) -> C64 {
        let l = self.l as i64;
        self.matrix[((mp + l) as usize, (m + l) as usize)]
    }
}

pub fn wigner_big_d(l: usize, rot: &EulerRotation) -> WignerBlock {
    let n = 2 * l + 1;
    let j = l as i64;
    let small = wigner_d_small(l, rot.beta);
    let matrix = CMatrix::from_fn(n, n, |r, c| {
        let (mp, m) = (r as i64 - j, c as i64 - j);
        let phase = -(mp as f64) * rot.alpha - (m as f64) * rot.gamma;
        C64::from_polar(small[r * n + c], phase)
    });
    WignerBlock { l, matrix }
}

/// `f̂'_l = D^l(R) f̂_l` for every band.
pub fn rotate_coeffs(coeffs: &SphereCoeffs, rot: &EulerRotation) -> SphereCoeffs {
    let mut out = coeffs.clone();
    for l in 0..=coeffs.band_limit() {
        let d = wigner_big_d(l, rot);
        let rotated = d.matrix().apply(coeffs.band(l));
        out.band_mut(l).copy_from_slice(&rotated);
    }
    out
}

/// All `C^{l1,l2,l}_{m1,m−m1,m}` for one triple, stored band-wise: for each
/// `m` only `m1 ∈ [max(−l1, m−l2), min(l1, m+l2)]` is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct CGBlock {
    l1: usize,
    l2: usize,
    l: usize,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

#[inline]
pub fn m1_range(l1: usize, l2: usize, m: i64) -> (i64, i64) {
    let (l1, l2) = (l1 as i64, l2 as i64);
    ((-l1).max(m - l2), l1.min(m + l2))
}

fn raise(j: usize, m: i64) -> f64 {
    let (j, m) = (j as f64, m as f64);
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

fn lower(j: usize, m: i64) -> f64 {
    let (j, m) = (j as f64, m as f64);
    (j * (j + 1.0) - m * (m - 1.0)).max(0.0).sqrt()
}

/// Unit null vector of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off`, assumed singular with a simple zero
/// eigenvalue; the last component is made positive.
fn null_vector(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let scale = diag.iter().chain(off).fold(1.0f64, |a, v| a.max(v.abs()));
    let guard = |d: f64| if d.abs() < f64::EPSILON * scale { f64::EPSILON * scale } else { d };
    let mut fwd = vec![0.0; n];
    let mut bwd = vec![0.0; n];
    fwd[0] = guard(diag[0]);
    for i in 1..n {
        fwd[i] = guard(diag[i] - off[i - 1] * off[i - 1] / fwd[i - 1]);
    }
    bwd[n - 1] = guard(diag[n - 1]);
    for i in (0..n - 1).rev() {
        bwd[i] = guard(diag[i] - off[i] * off[i] / bwd[i + 1]);
    }
    let twist = (0..n)
        .min_by(|&a, &b| {
            let ga = (fwd[a] + bwd[a] - diag[a]).abs();
            let gb = (fwd[b] + bwd[b] - diag[b]).abs();
            ga.total_cmp(&gb)
        })
        .unwrap_or(0);
    let mut z = vec![0.0; n];
    z[twist] = 1.0;
    for i in (0..twist).rev() {
        z[i] = -off[i] * z[i + 1] / fwd[i];
    }
    for i in twist + 1..n {
        z[i] = -off[i - 1] * z[i - 1] / bwd[i];
    }
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let sign = if z[n - 1] < 0.0 { -1.0 } else { 1.0 };
    z.iter_mut().for_each(|v| *v *= sign / norm);
    z
}

pub fn triangle(l1: usize, l2: usize, l: usize) -> bool {
    l1.abs_diff(l2) <= l && l <= l1 + l2
}

impl CGBlock {
    /// Builds each row `m` as the `l(l+1)` eigenvector of `J²` restricted
    /// to the `M = m` subspace. `J²` is tridiagonal in `m1`, so the row
    /// obeys a three-term recurrence, solved from both ends through a
    /// twisted factorization. The sign is fixed by
    /// `C(m1 = min(l1, m + l2)) > 0`.
    pub fn new(l1: usize, l2: usize, l: usize) -> Result<Self> {
        if !triangle(l1, l2, l) {
            return Err(Error::Domain("Clebsch-Gordan triple violates the triangle rule"));
        }
        let li = l as i64;
        let mut offsets = Vec::with_capacity(2 * l + 2);
        let mut total = 0;
        for m in -li..=li {
            offsets.push(total);
            let (lo, hi) = m1_range(l1, l2, m);
            total += (hi - lo + 1).max(0) as usize;
        }
        offsets.push(total);
        let mut block = CGBlock {
            l1,
            l2,
            l,
            offsets,
            values: vec![0.0; total],
        };
        let casimir = |j: usize| (j * (j + 1)) as f64;
        let lambda = casimir(l);
        for m in -li..=li {
            let (lo, hi) = m1_range(l1, l2, m);
            let diag: Vec<f64> = (lo..=hi)
                .map(|m1| casimir(l1) + casimir(l2) + 2.0 * (m1 * (m - m1)) as f64 - lambda)
                .collect();
            let off: Vec<f64> = (lo..hi).map(|m1| raise(l1, m1) * lower(l2, m - m1)).collect();
            let row = null_vector(&diag, &off);
            block.row_mut(m).copy_from_slice(&row);
        }
        Ok(block)
    }

    pub fn l1(&self) -> usize {
        self.l1
    }

    pub fn l2(&self) -> usize {
        self.l2
    }

    pub fn l(&self) -> usize {
        self.l
    }

    fn row_mut(&mut self, m: i64) -> &mut [f64] {
        let k = (m + self.l as i64) as usize;
        let (a, b) = (self.offsets[k], self.offsets[k + 1]);
        &mut self.values[a..b]
    }

    /// Coefficients for fixed `m`, one per `m1` in [`m1_range`].
    #[inline]
    pub fn row(&self, m: i64) -> &[f64] {
        let k = (m + self.l as i64) as usize;
        &self.values[self.offsets[k]..self.offsets[k + 1]]
    }

    /// `C^{l1,l2,l}_{m1, m−m1, m}`; zero outside the stored band.
    pub fn get(&self, m1: i64, m: i64) -> f64 {
        if m.abs() > self.l as i64 {
            return 0.0;
        }
        let (lo, hi) = m1_range(self.l1, self.l2, m);
        if m1 < lo || m1 > hi {
            return 0.0;
        }
        self.row(m)[(m1 - lo) as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `C^{l1,l2,l}_{m1,m2,m}`; exactly zero whenever a selection rule fails.
pub fn cg_coefficient(l1: usize, l2: usize, l: usize, m1: i64, m2: i64, m: i64) -> f64 {
    if m1 + m2 != m || !triangle(l1, l2, l) || m1.abs() > l1 as i64 || m2.abs() > l2 as i64 || m.abs() > l as i64 {
        return 0.0;
    }
    CGBlock::new(l1, l2, l).map(|b| b.get(m1, m)).unwrap_or(0.0)
}

/// Rows `(l, m)` for `l = |l1−l2|..=l1+l2`, columns `(m1, m2)` with index
/// `(m1 + l1)(2 l2 + 1) + (m2 + l2)`.
pub fn cg_matrix(l1: usize, l2: usize) -> CMatrix {
    let n = (2 * l1 + 1) * (2 * l2 + 1);
    let mut out = CMatrix::zeros(n, n);
    let mut row = 0;
    for l in l1.abs_diff(l2)..=(l1 + l2) {
        let block = CGBlock::new(l1, l2, l).expect("triangle holds");
        let li = l as i64;
        for m in -li..=li {
            let (lo, hi) = m1_range(l1, l2, m);
            for m1 in lo..=hi {
                let m2 = m - m1;
                let col = (m1 + l1 as i64) as usize * (2 * l2 + 1) + (m2 + l2 as i64) as usize;
                out[(row, col)] = C64::new(block.get(m1, m), 0.0);
            }
            row += 1;
        }
    }
    out
}

/// Clebsch–Gordan coefficients for all `l1 ≤ l2 ≤ L`,
/// `l2 − l1 ≤ l ≤ min(l1 + l2, L)`. Triples with `l1 > l2` are served via
/// `C^{l2,l1,l}_{m2,m1,m} = (−1)^{l1+l2−l} C^{l1,l2,l}_{m1,m2,m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CGTable {
    band_limit: usize,
    /// Start of the `(l1, l2)` run in `blocks`, indexed `l1 * (L+1) + l2`.
    starts: Vec<usize>,
    blocks: Vec<CGBlock>,
}

impl CGTable {
    pub fn build(band_limit: usize) -> Self {
        let n = band_limit + 1;
        let mut starts = vec![usize::MAX; n * n];
        let mut blocks = Vec::new();
        for l1 in 0..=band_limit {
            for l2 in l1..=band_limit {
                starts[l1 * n + l2] = blocks.len();
                for l in (l2 - l1)..=(l1 + l2).min(band_limit) {
                    blocks.push(CGBlock::new(l1, l2, l).expect("triangle holds"));
                }
            }
        }
        CGTable {
            band_limit,
            starts,
            blocks,
        }
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    /// Block for `l1 ≤ l2` and a stored `l`.
    pub fn block(&self, l1: usize, l2: usize, l: usize) -> Option<&CGBlock> {
        let n = self.band_limit + 1;
        if l1 > l2 || l2 > self.band_limit || l > self.band_limit || !triangle(l1, l2, l) {
            return None;
        }
        let start = self.starts[l1 * n + l2];
        self.blocks.get(start + (l - (l2 - l1)))
    }

    pub fn blocks(&self) -> &[CGBlock] {
        &self.blocks
    }

    /// `C^{l1,l2,l}_{m1, m−m1, m}` for any stored triple, either order.
    pub fn get(&self, l1: usize, l2: usize, l: usize, m1: i64, m: i64) -> f64 {
        if l1 <= l2 {
            self.block(l1, l2, l).map_or(0.0, |b| b.get(m1, m))
        } else {
            let sign = parity_sign((l1 + l2 - l) as i64);
            self.block(l2, l1, l).map_or(0.0, |b| sign * b.get(m - m1, m))
        }
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.values.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every stored coefficient as `(l1, l2, l, m1, m, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, i64, i64, f64)> + '_ {
        self.blocks.iter().flat_map(|b| {
            let li = b.l as i64;
            (-li..=li).flat_map(move |m| {
                let (lo, _) = m1_range(b.l1, b.l2, m);
                b.row(m)
                    .iter()
                    .enumerate()
                    .map(move |(k, &v)| (b.l1, b.l2, b.l, lo + k as i64, m, v))
            })
        })
    }

    /// Rebuilds a table from stored entries, e.g. after a reload. The layout
    /// must match [`CGTable::build`] for the same band-limit.
    pub fn from_entries<I>(band_limit: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, usize, i64, i64, f64)>,
    {
        let mut table = CGTable::build_layout(band_limit);
        let mut filled = 0usize;
        for (l1, l2, l, m1, m, v) in entries {
            let n = band_limit + 1;
            if l1 > l2 || l2 > band_limit || l > band_limit || !triangle(l1, l2, l) || m.abs() > l as i64 {
                return Err(Error::Domain("table entry outside the stored range"));
            }
            let (lo, hi) = m1_range(l1, l2, m);
            if m1 < lo || m1 > hi {
                return Err(Error::Domain("table entry violates the selection rules"));
            }
            let block = &mut table.blocks[table.starts[l1 * n + l2] + (l - (l2 - l1))];
            let k = (m + l as i64) as usize;
            block.values[block.offsets[k] + (m1 - lo) as usize] = v;
            filled += 1;
        }
        if filled != table.len() {
            return Err(Error::DimensionMismatch {
                expected: table.len(),
                actual: filled,
            });
        }
        Ok(table)
    }

    fn build_layout(band_limit: usize) -> Self {
        let n = band_limit + 1;
        let mut starts = vec![usize::MAX; n * n];
        let mut blocks = Vec::new();
        for l1 in 0..=band_limit {
            for l2 in l1..=band_limit {
                starts[l1 * n + l2] = blocks.len();
                for l in (l2 - l1)..=(l1 + l2).min(band_limit) {
                    let li = l as i64;
                    let mut offsets = Vec::with_capacity(2 * l + 2);
                    let mut total = 0;
                    for m in -li..=li {
                        offsets.push(total);
                        let (lo, hi) = m1_range(l1, l2, m);
                        total += (hi - lo + 1).max(0) as usize;
                    }
                    offsets.push(total);
                    blocks.push(CGBlock {
                        l1,
                        l2,
                        l,
                        offsets,
                        values: vec![0.0; total],
                    });
                }
            }
        }
        CGTable {
            band_limit,
            starts,
            blocks,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sht::synthesize;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Signed, ToPrimitive, Zero};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(rng: &mut ChaCha8Rng) -> EulerRotation {
        EulerRotation::from_uniform([rng.gen(), rng.gen(), rng.gen()])
    }

    fn fact(n: i64) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Plain-factorial Wigner sum, valid for small l.
    fn d_factorial_sum(j: i64, mp: i64, m: i64, beta: f64) -> f64 {
        let (s, c) = (beta / 2.0).sin_cos();
        let pre = (fact(j + mp) * fact(j - mp) * fact(j + m) * fact(j - m)).sqrt();
        let mut acc = 0.0;
        for k in 0..=(2 * j) {
            let (a, b, cc, d) = (j + m - k, k, mp - m + k, j - mp - k);
            if a < 0 || cc < 0 || d < 0 {
                continue;
            }
            let sign = if (mp - m + k).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            acc += sign * c.powi((2 * j + m - mp - 2 * k) as i32) * s.powi((mp - m + 2 * k) as i32)
                / (fact(a) * fact(b) * fact(cc) * fact(d));
        }
        pre * acc
    }

    fn fact_big(n: i64) -> BigInt {
        (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
    }

    /// Racah's closed formula in exact rationals: returns (C², sign).
    fn racah(l1: i64, l2: i64, l: i64, m1: i64, m2: i64) -> (BigRational, i32) {
        let m = m1 + m2;
        let pre = BigRational::new(
            BigInt::from(2 * l + 1) * fact_big(l + l1 - l2) * fact_big(l - l1 + l2) * fact_big(l1 + l2 - l),
            fact_big(l1 + l2 + l + 1),
        ) * BigRational::from_integer(
            fact_big(l + m) * fact_big(l - m) * fact_big(l1 - m1) * fact_big(l1 + m1) * fact_big(l2 - m2) * fact_big(l2 + m2),
        );
        let mut sum = BigRational::zero();
        for k in 0..=(l1 + l2 + l) {
            let terms = [k, l1 + l2 - l - k, l1 - m1 - k, l2 + m2 - k, l - l2 + m1 + k, l - l1 - m2 + k];
            if terms.iter().any(|&t| t < 0) {
                continue;
            }
            let den = terms.iter().fold(BigInt::one(), |acc, &t| acc * fact_big(t));
            let term = BigRational::new(BigInt::one(), den);
            if k % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        let sign = if sum.is_zero() { 0 } else if sum.is_positive() { 1 } else { -1 };
        (pre * &sum * &sum, sign)
    }

    fn racah_f64(l1: i64, l2: i64, l: i64, m1: i64, m2: i64) -> f64 {
        let (sq, sign) = racah(l1, l2, l, m1, m2);
        sign as f64 * sq.to_f64().unwrap().sqrt()
    }

    #[test]
    fn small_d_closed_forms() {
        for &b in &[0.0, 0.4, 2.0, PI] {
            assert_eq!(wigner_d_small(0, b), vec![1.0]);
        }
        let d1 = wigner_d_small(1, PI / 2.0);
        assert!(d1[4].abs() < 1e-16);
        let d1 = wigner_d_small(1, 0.7);
        assert!((d1[4] - f64::cos(0.7)).abs() < 1e-15);
        // d^1_{1,0} = −sin β / √2
        assert!((d1[2 * 3 + 1] + f64::sin(0.7) / 2f64.sqrt()).abs() < 1e-15);
        for l in 0..6 {
            let id = wigner_d_small(l, 0.0);
            let n = 2 * l + 1;
            for r in 0..n {
                for c in 0..n {
                    assert!((id[r * n + c] - if r == c { 1.0 } else { 0.0 }).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn small_d_matches_factorial_sum() {
        for l in 0..=8i64 {
            for k in 0..=12 {
                let beta = PI * k as f64 / 12.0;
                for mp in -l..=l {
                    for m in -l..=l {
                        let got = wigner_d_entry(l as usize, mp, m, beta);
                        let want = d_factorial_sum(l, mp, m, beta);
                        assert!((got - want).abs() < 1e-12, "l={l} m'={mp} m={m} b={beta}: {got} vs {want}");
                    }
                }
            }
        }
    }

    #[test]
    fn euler_round_trip_through_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let r = random_rotation(&mut rng);
            let back = EulerRotation::from_matrix(&r.to_matrix());
            let (a, b) = (r.to_matrix(), back.to_matrix());
            for i in 0..3 {
                for j in 0..3 {
                    assert!((a[i][j] - b[i][j]).abs() < 1e-12);
                }
            }
        }
        for r in [EulerRotation::new(0.3, 0.0, 0.4), EulerRotation::new(0.3, PI, 1.0)] {
            let back = EulerRotation::from_matrix(&r.to_matrix());
            let (a, b) = (r.to_matrix(), back.to_matrix());
            for i in 0..3 {
                for j in 0..3 {
                    assert!((a[i][j] - b[i][j]).abs() < 1e-12);
                }
            }
        }
        let r = EulerRotation::new(0.2, 4.0, -0.3);
        assert!(r.beta() <= PI && r.alpha() >= 0.0 && r.gamma() < 2.0 * PI);
    }

    #[test]
    fn wigner_identity_unitarity_and_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for l in 0..=6 {
            let id = wigner_big_d(l, &EulerRotation::identity());
            assert!(id.matrix().distance(&CMatrix::identity(2 * l + 1)) < 1e-14);
        }
        for _ in 0..20 {
            let (r1, r2) = (random_rotation(&mut rng), random_rotation(&mut rng));
            let r12 = r1.compose(&r2);
            for l in 0..=6 {
                let (d1, d2) = (wigner_big_d(l, &r1), wigner_big_d(l, &r2));
                let u = d1.matrix() * &d1.matrix().adjoint();
                assert!(u.distance(&CMatrix::identity(2 * l + 1)) < 1e-12);
                let prod = d1.matrix() * d2.matrix();
                assert!(prod.distance(wigner_big_d(l, &r12).matrix()) < 1e-10);
            }
        }
    }

    #[test]
    fn wigner_l1_is_the_cartesian_rotation() {
        // Spherical basis vectors e_{-1}, e_0, e_{+1} as columns.
        let s = 1.0 / 2f64.sqrt();
        let u = CMatrix::from_row_major(
            3,
            3,
            vec![
                C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(-s, 0.0),
                C64::new(0.0, -s), C64::new(0.0, 0.0), C64::new(0.0, -s),
                C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0),
            ],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..20 {
            let r = random_rotation(&mut rng);
            let d = wigner_big_d(1, &r);
            let back = &(&u * d.matrix()) * &u.adjoint();
            let m = r.to_matrix();
            let cart = CMatrix::from_fn(3, 3, |i, j| C64::new(m[i][j], 0.0));
            assert!(back.distance(&cart) < 1e-12);
        }
    }

    fn random_coeffs(band: usize, rng: &mut ChaCha8Rng) -> SphereCoeffs {
        let v = (0..(band + 1) * (band + 1))
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SphereCoeffs::from_vec(band, v).unwrap()
    }

    #[test]
    fn rotate_coeffs_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let c = random_coeffs(6, &mut rng);
        let same = rotate_coeffs(&c, &EulerRotation::identity());
        for (a, b) in c.as_slice().iter().zip(same.as_slice()) {
            assert!((a - b).norm() < 1e-14);
        }
        let gamma = 0.9;
        let z = rotate_coeffs(&c, &EulerRotation::new(0.0, 0.0, gamma));
        for l in 0..=6usize {
            for m in -(l as i64)..=(l as i64) {
                let want = c.get(l, m) * C64::from_polar(1.0, -(m as f64) * gamma);
                assert!((z.get(l, m) - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn rotate_coeffs_matches_pointwise_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let c = random_coeffs(7, &mut rng);
        for _ in 0..10 {
            let r = random_rotation(&mut rng);
            let rotated = rotate_coeffs(&c, &r);
            let rt = mat3_transpose(&r.to_matrix());
            for _ in 0..5 {
                let theta = f64::acos(rng.gen_range(-1.0..1.0));
                let phi = rng.gen_range(0.0..2.0 * PI);
                let (t2, p2) = cartesian_to_sphere(mat3_apply(&rt, sphere_to_cartesian(theta, phi)));
                let lhs = synthesize(&rotated, theta, phi).unwrap();
                let rhs = synthesize(&c, t2, p2).unwrap();
                assert!((lhs - rhs).norm() < 1e-9);
            }
            for l in 0..=7 {
                let n0: f64 = c.band(l).iter().map(|v| v.norm_sqr()).sum();
                let n1: f64 = rotated.band(l).iter().map(|v| v.norm_sqr()).sum();
                assert!((n0 - n1).abs() <= 1e-12 * n0);
            }
        }
    }

    #[test]
    fn cg_examples() {
        assert_eq!(cg_coefficient(0, 0, 0, 0, 0, 0), 1.0);
        assert_eq!(cg_coefficient(2, 1, 2, 1, 1, 1), 0.0);
        assert_eq!(cg_coefficient(1, 1, 3, 0, 0, 0), 0.0);
        assert!((cg_coefficient(1, 1, 2, 1, 1, 2) - 1.0).abs() < 1e-15);
        assert!((cg_coefficient(1, 1, 0, 1, -1, 0) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        // Racah oracle for the same two values.
        assert!((racah_f64(1, 1, 2, 1, 1) - 1.0).abs() < 1e-15);
        assert!((racah_f64(1, 1, 0, 1, -1) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(CGBlock::new(1, 1, 3).is_err());
    }

    #[test]
    fn cg_recursion_matches_racah() {
        for l1 in 0..=6i64 {
            for l2 in 0..=6i64 {
                for l in (l1 - l2).abs()..=(l1 + l2) {
                    let block = CGBlock::new(l1 as usize, l2 as usize, l as usize).unwrap();
                    for m in -l..=l {
                        for m1 in -l1..=l1 {
                            let m2 = m - m1;
                            if m2.abs() > l2 {
                                assert_eq!(block.get(m1, m), 0.0);
                                continue;
                            }
                            let want = racah_f64(l1, l2, l, m1, m2);
                            let got = block.get(m1, m);
                            assert!((got - want).abs() < 1e-12, "({l1} {l2} {l}; {m1} {m2} {m}): {got} vs {want}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cg_table_small_cases() {
        let t0 = CGTable::build(0);
        assert_eq!(t0.len(), 1);
        assert_eq!(t0.get(0, 0, 0, 0, 0), 1.0);

        let c = cg_matrix(1, 1);
        assert_eq!(c.rows(), 9);
        assert!((&c * &c.adjoint()).distance(&CMatrix::identity(9)) < 1e-12);
        let t2 = CGTable::build(2);
        for l in 0..=2 {
            for m in -(l as i64)..=(l as i64) {
                for m1 in -1..=1 {
                    assert_eq!(t2.get(1, 1, l, m1, m), cg_coefficient(1, 1, l, m1, m - m1, m));
                }
            }
        }
        // Swapped order via the exchange symmetry.
        let t = CGTable::build(4);
        for (l1, l2, l) in [(3usize, 1usize, 3usize), (4, 2, 3), (2, 0, 2)] {
            for m in -(l as i64)..=(l as i64) {
                for m1 in -(l1 as i64)..=(l1 as i64) {
                    let direct = CGBlock::new(l1, l2, l).unwrap().get(m1, m);
                    assert!((t.get(l1, l2, l, m1, m) - direct).abs() < 1e-14);
                }
            }
        }
        assert_eq!(t.block(1, 3, 5), None);
    }

    #[test]
    fn cg_matrices_are_unitary() {
        for l1 in 0..=6 {
            for l2 in 0..=6 {
                let c = cg_matrix(l1, l2);
                let n = c.rows();
                let e = &(&c * &c.adjoint()) - &CMatrix::identity(n);
                let worst = e.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(worst < 1e-12, "({l1}, {l2}): {worst}");
            }
        }
    }

    #[test]
    fn tensor_product_decomposition_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for _ in 0..20 {
            let r = random_rotation(&mut rng);
            for l1 in 0..=4 {
                for l2 in 0..=4 {
                    let c = cg_matrix(l1, l2);
                    let t = wigner_big_d(l1, &r).matrix().kron(wigner_big_d(l2, &r).matrix());
                    let lhs = &(&c * &t) * &c.adjoint();
                    let ds: Vec<WignerBlock> = (l1.abs_diff(l2)..=l1 + l2).map(|l| wigner_big_d(l, &r)).collect();
                    let rhs = CMatrix::direct_sum(ds.iter().map(WignerBlock::matrix));
                    assert!(lhs.distance(&rhs) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn table_reload_is_bit_exact() {
        let t = CGTable::build(5);
        let back = CGTable::from_entries(5, t.entries()).unwrap();
        assert_eq!(t, back);
        let mut short: Vec<_> = t.entries().collect();
        short.pop();
        assert!(CGTable::from_entries(5, short).is_err());
    }
}
