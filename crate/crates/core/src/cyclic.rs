//! Fourier analysis on the cyclic group `Z_n`.
//!
//! The DFT uses the `exp(-2πi·xk/n)` kernel and is computed by direct
//! summation; signals here are short (n ≤ 256).

use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::cmat::CMatrix;
use crate::{Error, Result, C64};

/// A complex signal on `Z_n`. Positions are always taken modulo `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicSignal {
    values: Vec<C64>,
}

impl CyclicSignal {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("cyclic signal must have n >= 1"));
        }
        Ok(CyclicSignal { values })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Value at position `x mod n`.
    pub fn at(&self, x: i64) -> C64 {
        self.values[x.rem_euclid(self.n() as i64) as usize]
    }
}

/// DFT coefficients `f̂(k)`, `k = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicSpectrum {
    coeffs: Vec<C64>,
}

impl CyclicSpectrum {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain("cyclic spectrum must have n >= 1"));
        }
        Ok(CyclicSpectrum { coeffs })
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn at(&self, k: usize) -> C64 {
        self.coeffs[k % self.n()]
    }
}

/// `b(k1, k2) = f̂*(k1) f̂*(k2) f̂(k1 + k2)`, stored as an `n × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicBispectrum {
    b: CMatrix,
}

impl CyclicBispectrum {
    pub fn n(&self) -> usize {
        self.b.rows()
    }

    pub fn get(&self, k1: usize, k2: usize) -> C64 {
        self.b[(k1, k2)]
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.b
    }
}

fn twiddle(n: usize, xk: usize) -> C64 {
    let angle = -2.0 * PI * ((xk % n) as f64) / n as f64;
    C64::new(angle.cos(), angle.sin())
}

pub fn dft(signal: &CyclicSignal) -> CyclicSpectrum {
    let n = signal.n();
    let coeffs = (0..n)
        .map(|k| {
            signal
                .values
                .iter()
                .enumerate()
                .map(|(x, &f)| f * twiddle(n, x * k))
                .sum()
        })
        .collect();
    CyclicSpectrum { coeffs }
}

/// Two-dimensional DFT with the same sign convention on both axes.
pub fn dft2(a: &CMatrix) -> CMatrix {
    assert!(a.is_square(), "dft2 expects a square matrix");
    let n = a.rows();
    CMatrix::from_fn(n, n, |k1, k2| {
        let mut acc = C64::new(0.0, 0.0);
        for x1 in 0..n {
            for x2 in 0..n {
                acc += a[(x1, x2)] * twiddle(n, x1 * k1 + x2 * k2);
            }
        }
        acc
    })
}

/// `f^z(x) = f(x - z)`.
pub fn shift(signal: &CyclicSignal, z: i64) -> CyclicSignal {
    let n = signal.n() as i64;
    let values = (0..n).map(|x| signal.at(x - z)).collect();
    CyclicSignal { values }
}

/// `q(k) = |f̂(k)|²`.
pub fn power_spectrum(spectrum: &CyclicSpectrum) -> Vec<f64> {
    spectrum.coeffs.iter().map(|c| c.norm_sqr()).collect()
}

/// `corr(x) = Σ_y f(y + x) f*(y)`.
pub fn autocorrelation(signal: &CyclicSignal) -> Vec<C64> {
    let n = signal.n() as i64;
    (0..n)
        .map(|x| (0..n).map(|y| signal.at(y + x) * signal.at(y).conj()).sum())
        .collect()
}

/// `a(x1, x2) = Σ_y f*(y - x1) f*(y - x2) f(y)`.
///
/// With this sign convention the 2-D DFT of `a` is exactly the bispectrum.
pub fn triple_correlation(signal: &CyclicSignal) -> CMatrix {
    let n = signal.n();
    let ni = n as i64;
    CMatrix::from_fn(n, n, |x1, x2| {
        (0..ni)
            .map(|y| {
                signal.at(y - x1 as i64).conj() * signal.at(y - x2 as i64).conj() * signal.at(y)
            })
            .sum()
    })
}

pub fn cyclic_bispectrum(spectrum: &CyclicSpectrum) -> CyclicBispectrum {
    let n = spectrum.n();
    let b = CMatrix::from_fn(n, n, |k1, k2| {
        spectrum.at(k1).conj() * spectrum.at(k2).conj() * spectrum.at(k1 + k2)
    });
    CyclicBispectrum { b }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(n: usize, rng: &mut ChaCha8Rng) -> CyclicSignal {
        let v = (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        CyclicSignal::new(v).unwrap()
    }

    fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn empty_signal_rejected() {
        assert!(CyclicSignal::new(vec![]).is_err());
    }

    #[test]
    fn dft_of_delta_and_constant() {
        let delta = CyclicSignal::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        for c in dft(&delta).coeffs() {
            assert!((c - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let ones = CyclicSignal::from_real(&[1.0; 4]).unwrap();
        let s = dft(&ones);
        assert!((s.at(0) - C64::new(4.0, 0.0)).norm() < 1e-14);
        for k in 1..4 {
            assert!(s.at(k).norm() < 1e-14);
        }
    }

    #[test]
    fn dft_matches_brute_force_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_signal(8, &mut rng);
        let got = dft(&f);
        // Independent evaluation with the angle computed from the full product.
        let mut expect = vec![C64::new(0.0, 0.0); 8];
        for (k, e) in expect.iter_mut().enumerate() {
            for x in 0..8 {
                let ang = -2.0 * PI * (x as f64) * (k as f64) / 8.0;
                *e += f.values()[x] * C64::from_polar(1.0, ang);
            }
        }
        assert!(max_abs_diff(got.coeffs(), &expect) < 1e-12);
    }

    #[test]
    fn parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_signal(13, &mut rng);
        let lhs: f64 = dft(&f).coeffs().iter().map(|c| c.norm_sqr()).sum();
        let rhs: f64 = 13.0 * f.values().iter().map(|c| c.norm_sqr()).sum::<f64>();
        assert!((lhs - rhs).abs() <= 1e-10 * rhs);
    }

    #[test]
    fn shift_examples() {
        let delta = CyclicSignal::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(shift(&delta, 0), delta);
        let moved = shift(&delta, 1);
        assert_eq!(moved, CyclicSignal::from_real(&[0.0, 1.0, 0.0, 0.0]).unwrap());
        assert_eq!(shift(&delta, -3), moved);
    }

    #[test]
    fn shift_phase_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_signal(8, &mut rng);
        let base = dft(&f);
        for z in 0..8i64 {
            let shifted = dft(&shift(&f, z));
            for k in 0..8 {
                let phase = C64::from_polar(1.0, -2.0 * PI * (z as f64) * (k as f64) / 8.0);
                assert!((shifted.at(k) - phase * base.at(k)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn power_spectrum_examples() {
        let s = CyclicSpectrum::new(vec![C64::new(4.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        assert_eq!(power_spectrum(&s), vec![16.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn autocorrelation_examples() {
        let delta = CyclicSignal::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let c = autocorrelation(&delta);
        assert_eq!(c[0], C64::new(1.0, 0.0));
        assert!(c[1..].iter().all(|v| v.norm() == 0.0));
        let ones = CyclicSignal::from_real(&[1.0; 4]).unwrap();
        assert!(autocorrelation(&ones).iter().all(|v| *v == C64::new(4.0, 0.0)));
    }

    #[test]
    fn wiener_khinchin() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_signal(11, &mut rng);
        let corr = CyclicSignal::new(autocorrelation(&f)).unwrap();
        let lhs = dft(&corr);
        let q = power_spectrum(&dft(&f));
        let scale = q.iter().cloned().fold(0.0, f64::max);
        for k in 0..11 {
            assert!((lhs.at(k) - C64::new(q[k], 0.0)).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn triple_correlation_examples() {
        let delta = CyclicSignal::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let a = triple_correlation(&delta);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == 0 && j == 0 { 1.0 } else { 0.0 };
                assert_eq!(a[(i, j)], C64::new(expect, 0.0));
            }
        }
        let ones = CyclicSignal::from_real(&[1.0; 4]).unwrap();
        let a = triple_correlation(&ones);
        assert!(a.as_slice().iter().all(|v| *v == C64::new(4.0, 0.0)));
    }

    #[test]
    fn triple_correlation_transforms_to_bispectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_signal(9, &mut rng);
        let lhs = dft2(&triple_correlation(&f));
        let b = cyclic_bispectrum(&dft(&f));
        let scale = b.matrix().as_slice().iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(lhs.distance(b.matrix()) <= 1e-10 * scale * 9.0);
        assert!(max_abs_diff(lhs.as_slice(), b.matrix().as_slice()) <= 1e-10 * scale);
    }

    #[test]
    fn bispectrum_of_delta_is_all_ones() {
        let delta = CyclicSignal::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = cyclic_bispectrum(&dft(&delta));
        assert!(b.matrix().as_slice().iter().all(|v| (v - C64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn invariants_under_all_shifts() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = random_signal(16, &mut rng);
        let s = dft(&f);
        let q = power_spectrum(&s);
        let b = cyclic_bispectrum(&s);
        let bmax = b.matrix().as_slice().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let qmax = q.iter().cloned().fold(0.0, f64::max);
        for z in 0..16 {
            let sz = dft(&shift(&f, z));
            let qz = power_spectrum(&sz);
            let bz = cyclic_bispectrum(&sz);
            let dq = q.iter().zip(&qz).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(dq <= 1e-12 * qmax);
            assert!(max_abs_diff(bz.matrix().as_slice(), b.matrix().as_slice()) <= 1e-12 * bmax);
        }
    }

    #[test]
    fn phase_scrambling_fools_power_spectrum_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_signal(12, &mut rng);
        let s = dft(&f);
        let scrambled: Vec<C64> = s
            .coeffs()
            .iter()
            .map(|c| C64::from_polar(c.norm(), rng.gen_range(0.0..2.0 * PI)))
            .collect();
        let s2 = CyclicSpectrum::new(scrambled).unwrap();
        let (q1, q2) = (power_spectrum(&s), power_spectrum(&s2));
        for (a, b) in q1.iter().zip(&q2) {
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
        let d = cyclic_bispectrum(&s).matrix().distance(cyclic_bispectrum(&s2).matrix());
        assert!(d > 1e-6);
    }
}
