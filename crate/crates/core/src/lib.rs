//! Bispectral invariants over the cyclic group, finite groups and SO(3).
//!
//! The crate is `no_std` and only needs `alloc`. It covers the numerical
//! core: discrete Fourier analysis on `Z_n`, Fourier analysis on finite
//! groups given their irreducible representations, the projection of a
//! planar image onto the sphere, Wigner rotation matrices, Clebsch–Gordan
//! tables, and the SO(3) power spectrum and bispectrum built from them.
//!
//! IO, file formats and the experiment harness live in the `bispec` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cmat;
pub mod cyclic;
pub mod error;
pub mod finitegroup;
pub mod invariants;
pub mod quadrature;
pub mod sht;
pub mod so3;
mod special;

pub use error::{Error, Result};

/// Double-precision complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
