//! Spherical harmonics and the projection of a planar patch onto the sphere.
//!
//! A pixel `(i, j)` of an `N × N` patch sits at
//! `(x, y) = ((i + ½)/N − ½, (j + ½)/N − ½)` (0-based indices). It is sent to
//! colatitude `θ = a·√(x² + y²)` and azimuth `φ = atan2(y, x)` in `[0, 2π)`,
//! where `a` is the magnification. Each pixel acts as a point mass, so the
//! coefficients are `f̂_{lm} = c(l) Σ_ij M_ij Y_l^m(θ_ij, φ_ij)*` with the
//! optional heat-kernel factor `c(l) = exp(−l²σ²/2)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};


use crate::special::{ln_factorial, parity_sign};
use crate::{Error, Result, C64};

/// Square intensity grid with values in `[0, 1]`, stored row-major by `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePatch {
    n: usize,
    pixels: Vec<f64>,
}

impl ImagePatch {
    /// Values are clamped into `[0, 1]`; NaN becomes 0.
    pub fn new(n: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: pixels.len(),
            });
        }
        let pixels = pixels
            .into_iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
            .collect();
        Ok(ImagePatch { n, pixels })
    }

    pub fn zeros(n: usize) -> Self {
        ImagePatch {
            n,
            pixels: vec![0.0; n * n],
        }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.pixels[i * self.n + j] = v.clamp(0.0, 1.0);
    }

    pub fn total_intensity(&self) -> f64 {
        self.pixels.iter().sum()
    }

    /// Exact quarter turn of the pixel grid: pixel `(i, j)` moves to
    /// `(j, N − 1 − i)`. In plane coordinates this is `(x, y) ↦ (y, −x)`.
    pub fn rotate_quarter(&self) -> Self {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + (n - 1 - i)] = self.pixels[i * n + j];
            }
        }
        ImagePatch { n, pixels: out }
    }
}

/// Coefficients `f̂_{lm}` for `0 ≤ l ≤ L`, `−l ≤ m ≤ l`, stored band by band
/// with `m` ascending; `(L+1)²` entries in total.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereCoeffs {
    band_limit: usize,
    coeffs: Vec<C64>,
}

impl SphereCoeffs {
    pub fn zeros(band_limit: usize) -> Self {
        SphereCoeffs {
            band_limit,
            coeffs: vec![C64::new(0.0, 0.0); (band_limit + 1) * (band_limit + 1)],
        }
    }

    pub fn from_vec(band_limit: usize, coeffs: Vec<C64>) -> Result<Self> {
        let expected = (band_limit + 1) * (band_limit + 1);
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: coeffs.len(),
            });
        }
        Ok(SphereCoeffs { band_limit, coeffs })
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.coeffs
    }

    #[inline]
    pub fn index(l: usize, m: i64) -> usize {
        l * l + (m + l as i64) as usize
    }

    #[inline]
    pub fn get(&self, l: usize, m: i64) -> C64 {
        self.coeffs[Self::index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: C64) {
        self.coeffs[Self::index(l, m)] = v;
    }

    /// The vector `f̂_l = (f̂_{l,−l}, …, f̂_{l,l})`.
    pub fn band(&self, l: usize) -> &[C64] {
        &self.coeffs[l * l..(l + 1) * (l + 1)]
    }

    pub fn band_mut(&mut self, l: usize) -> &mut [C64] {
        &mut self.coeffs[l * l..(l + 1) * (l + 1)]
    }

    pub fn scale(&self, s: f64) -> Self {
        SphereCoeffs {
            band_limit: self.band_limit,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }
}

/// Associated Legendre function `P_l^m(x)` including the Condon–Shortley
/// phase, via the upward recurrence in `l` seeded by `P_m^m`.
pub fn assoc_legendre(l: usize, m: usize, x: f64) -> Result<f64> {
    if m > l {
        return Err(Error::Domain("associated Legendre requires m <= l"));
    }
    if !(x.abs() <= 1.0) {
        return Err(Error::Domain("associated Legendre requires |x| <= 1"));
    }
    let s = (1.0 - x * x).sqrt();
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= -((2 * k - 1) as f64) * s;
    }
    if l == m {
        return Ok(pmm);
    }
    let mut prev = pmm;
    let mut cur = x * (2 * m + 1) as f64 * pmm;
    for ll in (m + 2)..=l {
        let next = ((2 * ll - 1) as f64 * x * cur - (ll + m - 1) as f64 * prev) / (ll - m) as f64;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Orthonormalised `√((2l+1)/4π · (l−m)!/(l+m)!) P_l^m(x)` for all
/// `0 ≤ m ≤ l ≤ band`, indexed by [`legendre_index`]. Uses the normalised
/// recurrences so nothing overflows at large `l`.
pub fn normalized_legendre_table(band: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; (band + 1) * (band + 2) / 2];
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=band {
        if m > 0 {
            pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        out[legendre_index(m, m)] = pmm;
        if m == band {
            break;
        }
        let mut prev = pmm;
        let mut cur = x * ((2 * m + 3) as f64).sqrt() * pmm;
        out[legendre_index(m + 1, m)] = cur;
        for l in (m + 2)..=band {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let next = a * (x * cur - b * prev);
            prev = cur;
            cur = next;
            out[legendre_index(l, m)] = cur;
        }
    }
    out
}

#[inline]
pub fn legendre_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

fn check_theta(theta: f64) -> Result<()> {
    if !(-1e-12..=PI + 1e-12).contains(&theta) {
        return Err(Error::Domain("colatitude must lie in [0, pi]"));
    }
    Ok(())
}

/// `Y_l^m(θ, φ)`; negative orders via `Y_l^{−m} = (−1)^m (Y_l^m)*`.
pub fn spherical_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> Result<C64> {
    if m.unsigned_abs() as usize > l {
        return Err(Error::Domain("spherical harmonic requires |m| <= l"));
    }
    check_theta(theta)?;
    let am = m.unsigned_abs() as usize;
    let p = assoc_legendre(l, am, theta.cos().clamp(-1.0, 1.0))?;
    let log_ratio = 0.5 * (ln_factorial(l - am) - ln_factorial(l + am));
    let norm = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * log_ratio.exp();
    let y = C64::from_polar(norm * p, am as f64 * phi);
    Ok(if m < 0 { y.conj() * parity_sign(am as i64) } else { y })
}

/// Evaluates every `Y_l^m(θ, φ)` with `l ≤ band`, in [`SphereCoeffs`] order.
pub fn harmonics_at(band: usize, theta: f64, phi: f64) -> Vec<C64> {
    let table = normalized_legendre_table(band, theta.cos());
    let mut out = vec![C64::new(0.0, 0.0); (band + 1) * (band + 1)];
    let phases: Vec<C64> = (0..=band).map(|m| C64::from_polar(1.0, m as f64 * phi)).collect();
    for l in 0..=band {
        for m in 0..=l {
            let y = phases[m] * table[legendre_index(l, m)];
            out[SphereCoeffs::index(l, m as i64)] = y;
            if m > 0 {
                out[SphereCoeffs::index(l, -(m as i64))] = y.conj() * parity_sign(m as i64);
            }
        }
    }
    out
}

/// `f(θ, φ) = Σ_{l ≤ L} Σ_m f̂_{lm} Y_l^m(θ, φ)`.
pub fn synthesize(coeffs: &SphereCoeffs, theta: f64, phi: f64) -> Result<C64> {
    check_theta(theta)?;
    let ys = harmonics_at(coeffs.band_limit(), theta.clamp(0.0, PI), phi);
    Ok(coeffs.as_slice().iter().zip(&ys).map(|(c, y)| c * y).sum())
}

/// Whether the forward projection multiplies pixels by `Y*` (the inner
/// product convention, default) or by `Y` as literally written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HarmonicConvention {
    #[default]
    Conjugated,
    Literal,
}

/// Precomputed linear map from the `N²` pixels of a patch to the `(L+1)²`
/// coefficients on the sphere.
#[derive(Debug, Clone)]
pub struct ProjectionPlan {
    side: usize,
    band_limit: usize,
    magnification: f64,
    sigma: f64,
    convention: HarmonicConvention,
    angles: Vec<(f64, f64)>,
    /// Row-major `(L+1)² × N²`.
    weights: Vec<C64>,
}

impl ProjectionPlan {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }

    pub fn magnification(&self) -> f64 {
        self.magnification
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn convention(&self) -> HarmonicConvention {
        self.convention
    }

    /// `(θ, φ)` of each pixel in patch storage order.
    pub fn angles(&self) -> &[(f64, f64)] {
        &self.angles
    }

    pub fn weight(&self, l: usize, m: i64, i: usize, j: usize) -> C64 {
        let npix = self.side * self.side;
        self.weights[SphereCoeffs::index(l, m) * npix + i * self.side + j]
    }

    /// Heat-kernel factor `c(l)`; identically 1 when `σ = 0`.
    pub fn smoothing(&self, l: usize) -> f64 {
        smoothing_factor(l, self.sigma)
    }
}

pub fn smoothing_factor(l: usize, sigma: f64) -> f64 {
    if sigma > 0.0 {
        let lf = l as f64;
        (-lf * lf * sigma * sigma / 2.0).exp()
    } else {
        1.0
    }
}

/// Plane coordinate of pixel index `i` (0-based) on an `n`-pixel axis.
pub fn pixel_coordinate(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64 - 0.5
}

/// Sphere angles of the plane point `(x, y)` under magnification `a`.
pub fn plane_to_sphere(x: f64, y: f64, a: f64) -> (f64, f64) {
    let theta = a * (x * x + y * y).sqrt();
    let mut phi = y.atan2(x);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    if phi >= 2.0 * PI {
        phi -= 2.0 * PI;
    }
    (theta, phi)
}

pub fn build_projection_plan(side: usize, band_limit: usize, magnification: f64, sigma: f64) -> Result<ProjectionPlan> {
    build_projection_plan_with(side, band_limit, magnification, sigma, HarmonicConvention::default())
}

pub fn build_projection_plan_with(
    side: usize,
    band_limit: usize,
    magnification: f64,
    sigma: f64,
    convention: HarmonicConvention,
) -> Result<ProjectionPlan> {
    if side == 0 {
        return Err(Error::Domain("patch side must be positive"));
    }
    if !(magnification > 0.0) || !magnification.is_finite() {
        return Err(Error::Domain("magnification must be positive"));
    }
    if !(sigma >= 0.0) {
        return Err(Error::Domain("smoothing width must be non-negative"));
    }
    // The corner of the unit square sits at radius √2/2.
    if magnification * FRAC_1_SQRT_2 >= PI {
        return Err(Error::MagnificationTooLarge { a: magnification });
    }
    let npix = side * side;
    let ncoef = (band_limit + 1) * (band_limit + 1);
    let mut angles = Vec::with_capacity(npix);
    let mut weights = vec![C64::new(0.0, 0.0); ncoef * npix];
    let smoothing: Vec<f64> = (0..=band_limit).map(|l| smoothing_factor(l, sigma)).collect();
    for i in 0..side {
        for j in 0..side {
            let (theta, phi) = plane_to_sphere(pixel_coordinate(i, side), pixel_coordinate(j, side), magnification);
            angles.push((theta, phi));
            let ys = harmonics_at(band_limit, theta, phi);
            let p = i * side + j;
            for l in 0..=band_limit {
                for idx in l * l..(l + 1) * (l + 1) {
                    let y = match convention {
                        HarmonicConvention::Conjugated => ys[idx].conj(),
                        HarmonicConvention::Literal => ys[idx],
                    };
                    weights[idx * npix + p] = y * smoothing[l];
                }
            }
        }
    }
    Ok(ProjectionPlan {
        side,
        band_limit,
        magnification,
        sigma,
        convention,
        angles,
        weights,
    })
}

pub fn project_image(patch: &ImagePatch, plan: &ProjectionPlan) -> Result<SphereCoeffs> {
    if patch.side() != plan.side {
        return Err(Error::DimensionMismatch {
            expected: plan.side,
            actual: patch.side(),
        });
    }
    let npix = plan.side * plan.side;
    let px = patch.pixels();
    let coeffs = plan
        .weights
        .chunks_exact(npix)
        .map(|row| {
            let (mut re, mut im) = (0.0, 0.0);
            for (w, &v) in row.iter().zip(px) {
                re += w.re * v;
                im += w.im * v;
            }
            C64::new(re, im)
        })
        .collect();
    Ok(SphereCoeffs {
        band_limit: plan.band_limit,
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::SphereQuadrature;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Integer-coefficient polynomial, lowest degree first.
    fn rodrigues(l: usize, m: usize, x: f64) -> f64 {
        // (x² − 1)^l expanded by the binomial theorem.
        let mut poly = vec![0.0f64; 2 * l + 1];
        let mut binom = 1.0;
        for k in 0..=l {
            // coefficient of x^{2k} is C(l,k) (−1)^{l−k}
            poly[2 * k] = binom * if (l - k) % 2 == 0 { 1.0 } else { -1.0 };
            binom = binom * (l - k) as f64 / (k + 1) as f64;
        }
        for _ in 0..(l + m) {
            poly = (1..poly.len()).map(|d| poly[d] * d as f64).collect();
            if poly.is_empty() {
                poly.push(0.0);
            }
        }
        let value: f64 = poly.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let fact_l: f64 = (1..=l).map(|k| k as f64).product();
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        sign * (1.0 - x * x).powf(m as f64 / 2.0) * value / (2f64.powi(l as i32) * fact_l)
    }

    #[test]
    fn legendre_closed_forms() {
        for &x in &[-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert_eq!(assoc_legendre(0, 0, x).unwrap(), 1.0);
        }
        assert!((assoc_legendre(1, 0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((assoc_legendre(1, 1, 0.0).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn legendre_domain_errors() {
        assert!(assoc_legendre(2, 3, 0.1).is_err());
        assert!(assoc_legendre(2, 1, 1.5).is_err());
        assert!(assoc_legendre(2, 1, f64::NAN).is_err());
        assert!(spherical_harmonic(2, 3, 0.1, 0.0).is_err());
        assert!(spherical_harmonic(2, 1, 4.0, 0.0).is_err());
    }

    #[test]
    fn legendre_recurrence_matches_rodrigues() {
        for l in 0..=5 {
            for m in 0..=l {
                for k in 0..=20 {
                    let x = -1.0 + 0.1 * k as f64;
                    let got = assoc_legendre(l, m, x).unwrap();
                    let want = rodrigues(l, m, x);
                    assert!((got - want).abs() < 1e-12, "l={l} m={m} x={x}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn normalized_table_matches_log_space_route() {
        for &x in &[-0.95, -0.2, 0.0, 0.4, 0.99] {
            let table = normalized_legendre_table(24, x);
            let theta = f64::acos(x);
            for l in 0..=24 {
                for m in 0..=l {
                    let y = spherical_harmonic(l, m as i64, theta, 0.0).unwrap().re;
                    let t = table[legendre_index(l, m)];
                    assert!((y - t).abs() <= 1e-11 * (1.0 + y.abs()), "l={l} m={m}");
                }
            }
        }
    }

    #[test]
    fn harmonic_closed_forms() {
        let y00 = 0.282_094_791_8;
        for &(t, p) in &[(0.0, 0.0), (1.0, 2.0), (PI, 5.0)] {
            let y = spherical_harmonic(0, 0, t, p).unwrap();
            assert!((y.re - y00).abs() < 1e-10 && y.im == 0.0);
            let y10 = spherical_harmonic(1, 0, t, p).unwrap();
            assert!((y10.re - (3.0 / (4.0 * PI)).sqrt() * f64::cos(t)).abs() < 1e-14);
        }
        // The two evaluation routes agree on negative orders as well.
        let all = harmonics_at(4, 0.8, 1.3);
        for l in 0..=4usize {
            for m in -(l as i64)..=(l as i64) {
                let y = spherical_harmonic(l, m, 0.8, 1.3).unwrap();
                assert!((all[SphereCoeffs::index(l, m)] - y).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn harmonics_are_orthonormal_under_quadrature() {
        let band = 8;
        let quad = SphereQuadrature::for_band(band);
        let samples: Vec<(Vec<C64>, f64)> = quad
            .points()
            .iter()
            .map(|&(t, p, w)| (harmonics_at(band, t, p), w))
            .collect();
        let n = (band + 1) * (band + 1);
        for a in 0..n {
            for b in 0..n {
                let s: C64 = samples.iter().map(|(ys, w)| ys[a] * ys[b].conj() * *w).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((s - C64::new(expect, 0.0)).norm() < 1e-10, "{a} {b}: {s}");
            }
        }
    }

    #[test]
    fn synthesize_examples() {
        let mut c = SphereCoeffs::zeros(2);
        c.set(0, 0, C64::new(1.0, 0.0));
        let v = synthesize(&c, 1.1, 0.3).unwrap();
        assert!((v.re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-14);
        let mut c = SphereCoeffs::zeros(2);
        c.set(1, 0, C64::new(1.0, 0.0));
        let v = synthesize(&c, 0.0, 2.0).unwrap();
        assert!((v.re - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-14);
        assert!(synthesize(&c, -0.5, 0.0).is_err());
    }

    #[test]
    fn synthesis_analysis_round_trip() {
        let band = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let v = (0..(band + 1) * (band + 1))
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let coeffs = SphereCoeffs::from_vec(band, v).unwrap();
        let quad = SphereQuadrature::for_band(band);
        let mut back = vec![C64::new(0.0, 0.0); coeffs.as_slice().len()];
        for &(t, p, w) in quad.points() {
            let f = synthesize(&coeffs, t, p).unwrap();
            for (b, y) in back.iter_mut().zip(harmonics_at(band, t, p)) {
                *b += f * y.conj() * w;
            }
        }
        for (a, b) in coeffs.as_slice().iter().zip(&back) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn coeffs_shape() {
        assert_eq!(SphereCoeffs::zeros(15).as_slice().len(), 256);
        assert!(SphereCoeffs::from_vec(2, vec![C64::new(0.0, 0.0); 8]).is_err());
        assert!(ImagePatch::new(3, vec![0.0; 8]).is_err());
        let p = ImagePatch::new(1, vec![3.0]).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
    }

    #[test]
    fn plan_single_pixel_sits_on_pole() {
        let plan = build_projection_plan(1, 6, 1.7, 0.0).unwrap();
        assert_eq!(plan.angles()[0].0, 0.0);
        for l in 0..=6usize {
            for m in -(l as i64)..=(l as i64) {
                let w = plan.weight(l, m, 0, 0);
                if m == 0 {
                    assert!((w.re - ((2 * l + 1) as f64 / (4.0 * PI)).sqrt()).abs() < 1e-12);
                } else {
                    assert!(w.norm() < 1e-15, "l={l} m={m}");
                }
            }
        }
    }

    #[test]
    fn plan_without_smoothing_holds_conjugated_harmonics() {
        let plan = build_projection_plan(5, 4, 1.2, 0.0).unwrap();
        assert!((0..=4).all(|l| plan.smoothing(l) == 1.0));
        let (t, p) = plan.angles()[7];
        let w = plan.weight(3, -2, 1, 2);
        let y = spherical_harmonic(3, -2, t, p).unwrap().conj();
        assert!((w - y).norm() < 1e-13);

        let lit = build_projection_plan_with(5, 4, 1.2, 0.0, HarmonicConvention::Literal).unwrap();
        assert!((lit.weight(3, -2, 1, 2) - y.conj()).norm() < 1e-13);

        let smooth = build_projection_plan(5, 4, 1.2, 0.3).unwrap();
        let c3 = (-9.0 * 0.09 / 2.0f64).exp();
        assert!((smooth.weight(3, -2, 1, 2) - y * c3).norm() < 1e-13);
    }

    #[test]
    fn plan_at_default_settings() {
        let plan = build_projection_plan(30, 15, 2.0, 0.0).unwrap();
        let max_theta = plan.angles().iter().map(|a| a.0).fold(0.0, f64::max);
        // Pixel centres stop half a pixel short of the corner, whose image is a·√2/2.
        assert!(max_theta < 2.0 * FRAC_1_SQRT_2);
        assert!((max_theta - 2.0 * 2f64.sqrt() * (0.5 - 1.0 / 60.0)).abs() < 1e-12);
        assert!(matches!(
            build_projection_plan(30, 15, 4.5, 0.0),
            Err(Error::MagnificationTooLarge { .. })
        ));
        assert!(build_projection_plan(30, 15, 0.0, 0.0).is_err());
    }

    fn random_patch(n: usize, rng: &mut ChaCha8Rng) -> ImagePatch {
        ImagePatch::new(n, (0..n * n).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn projection_is_linear() {
        let plan = build_projection_plan(8, 6, 2.0, 0.0).unwrap();
        let zero = project_image(&ImagePatch::zeros(8), &plan).unwrap();
        assert!(zero.as_slice().iter().all(|c| c.norm() == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let (m1, m2) = (random_patch(8, &mut rng), random_patch(8, &mut rng));
        let (alpha, beta) = (0.3, 0.6);
        let mix = ImagePatch::new(
            8,
            m1.pixels().iter().zip(m2.pixels()).map(|(a, b)| alpha * a + beta * b).collect(),
        )
        .unwrap();
        let (c1, c2, cm) = (
            project_image(&m1, &plan).unwrap(),
            project_image(&m2, &plan).unwrap(),
            project_image(&mix, &plan).unwrap(),
        );
        for k in 0..cm.as_slice().len() {
            let lin = c1.as_slice()[k] * alpha + c2.as_slice()[k] * beta;
            assert!((cm.as_slice()[k] - lin).norm() < 1e-12);
        }
        assert!(matches!(
            project_image(&ImagePatch::zeros(7), &plan),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn real_patch_satisfies_reality_constraint() {
        let plan = build_projection_plan(10, 9, 2.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let c = project_image(&random_patch(10, &mut rng), &plan).unwrap();
        let scale = c.as_slice().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for l in 0..=9usize {
            for m in 1..=(l as i64) {
                let lhs = c.get(l, -m);
                let rhs = c.get(l, m).conj() * parity_sign(m);
                assert!((lhs - rhs).norm() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn quarter_turns_preserve_moduli_with_order_phase() {
        let n = 12;
        let plan = build_projection_plan(n, 10, 2.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let patch = random_patch(n, &mut rng);
        let base = project_image(&patch, &plan).unwrap();
        let mut turned = patch.clone();
        for k in 1..=3i64 {
            turned = turned.rotate_quarter();
            let c = project_image(&turned, &plan).unwrap();
            for l in 0..=10usize {
                for m in -(l as i64)..=(l as i64) {
                    let (a, b) = (base.get(l, m), c.get(l, m));
                    assert!((a.norm() - b.norm()).abs() <= 1e-10 * (1.0 + a.norm()));
                    // (x, y) ↦ (y, −x) is φ ↦ φ − π/2, so f̂_{lm} picks up e^{imkπ/2}.
                    let phase = C64::from_polar(1.0, m as f64 * k as f64 * PI / 2.0);
                    assert!((b - a * phase).norm() <= 1e-10 * (1.0 + a.norm()));
                }
            }
        }
    }
}
