//! Gauss–Legendre rules and a product quadrature on the sphere.

use alloc::vec::Vec;
use core::f64::consts::PI;


/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in increasing order. Exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-like initial guess, descending; refined by Newton.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Product rule on the sphere: Gauss–Legendre in `cos θ` times a uniform
/// grid in `φ`. Points are `(θ, φ, weight)` with weights summing to `4π`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    points: Vec<(f64, f64, f64)>,
}

impl SphereQuadrature {
    /// Integrates `Y_l^m Y_{l'}^{m'}*` exactly for `l + l' < 2 n_theta` and
    /// `|m - m'| < n_phi`.
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut points = Vec::with_capacity(n_theta * n_phi);
        for (x, w) in nodes.iter().zip(&weights) {
            let theta = x.clamp(-1.0, 1.0).acos();
            for k in 0..n_phi {
                points.push((theta, k as f64 * dphi, w * dphi));
            }
        }
        SphereQuadrature { points }
    }

    /// Rule exact for band-limited products up to band `band`.
    pub fn for_band(band: usize) -> Self {
        Self::new(band + 1, 2 * band + 2)
    }

    pub fn points(&self) -> &[(f64, f64, f64)] {
        &self.points
    }
}
