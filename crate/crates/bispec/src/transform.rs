//! Random rigid motions of digit images into fixed-size patches.

use std::f64::consts::TAU;

use bispec_core::sht::ImagePatch;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PATCH_SIDE: usize = 30;
const CANVAS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct TransformedSample {
    pub patch: ImagePatch,
    pub label: u8,
    pub angle: f64,
    /// Column and row of the content's top-left corner in the patch.
    pub offset: (usize, usize),
    pub seed: u64,
    /// The rotated content exceeded the patch and was centre-cropped.
    pub cropped: bool,
}

/// Per-sample seeds derived from a master seed with SplitMix64 mixing.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    for _ in 0..2 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

fn bilinear(img: &ImagePatch, si: f64, sj: f64) -> f64 {
    let n = img.side() as i64;
    let (i0, j0) = (si.floor(), sj.floor());
    let (fi, fj) = (si - i0, sj - j0);
    let (i0, j0) = (i0 as i64, j0 as i64);
    let at = |i: i64, j: i64| {
        if i < 0 || j < 0 || i >= n || j >= n {
            0.0
        } else {
            img.get(i as usize, j as usize)
        }
    };
    (1.0 - fi) * ((1.0 - fj) * at(i0, j0) + fj * at(i0, j0 + 1)) + fi * ((1.0 - fj) * at(i0 + 1, j0) + fj * at(i0 + 1, j0 + 1))
}

/// Rotates `img` by `angle` about its centre onto a square canvas of side
/// `canvas` using bilinear resampling.
pub fn rotate_bilinear(img: &ImagePatch, angle: f64, canvas: usize) -> ImagePatch {
    let cs = (img.side() as f64 - 1.0) / 2.0;
    let cc = (canvas as f64 - 1.0) / 2.0;
    let (s, c) = angle.sin_cos();
    let mut out = ImagePatch::zeros(canvas);
    for i in 0..canvas {
        for j in 0..canvas {
            let (di, dj) = (i as f64 - cc, j as f64 - cc);
            // Inverse map: rotate the target offset back by −angle.
            let si = c * di - s * dj + cs;
            let sj = s * di + c * dj + cs;
            out.set(i, j, bilinear(img, si, sj));
        }
    }
    out
}

/// Half-open `[lo, hi)` row and column ranges of the non-zero pixels.
fn bounding_box(img: &ImagePatch) -> Option<((usize, usize), (usize, usize))> {
    let n = img.side();
    let (mut r0, mut r1, mut c0, mut c1) = (n, 0, n, 0);
    for i in 0..n {
        for j in 0..n {
            if img.get(i, j) > 0.0 {
                r0 = r0.min(i);
                r1 = r1.max(i + 1);
                c0 = c0.min(j);
                c1 = c1.max(j + 1);
            }
        }
    }
    (r0 < r1).then_some(((r0, r1), (c0, c1)))
}

fn clip(lo: usize, hi: usize) -> (usize, usize, bool) {
    if hi - lo <= PATCH_SIDE {
        (lo, hi, false)
    } else {
        let start = lo + (hi - lo - PATCH_SIDE) / 2;
        (start, start + PATCH_SIDE, true)
    }
}

/// Draws an angle in `[0, 2π)`, rotates, crops to the content's bounding
/// box and places it at a uniformly random offset in a 30×30 patch.
pub fn transform_digit(img: &ImagePatch, label: u8, seed: u64) -> TransformedSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle = rng.gen_range(0.0..TAU);
    let rotated = rotate_bilinear(img, angle, CANVAS.max(img.side() * 3 / 2));
    let mut patch = ImagePatch::zeros(PATCH_SIDE);
    let Some(((r0, r1), (c0, c1))) = bounding_box(&rotated) else {
        return TransformedSample {
            patch,
            label,
            angle,
            offset: (0, 0),
            seed,
            cropped: false,
        };
    };
    let (r0, r1, crop_r) = clip(r0, r1);
    let (c0, c1, crop_c) = clip(c0, c1);
    let (h, w) = (r1 - r0, c1 - c0);
    let dx = rng.gen_range(0..=PATCH_SIDE - w);
    let dy = rng.gen_range(0..=PATCH_SIDE - h);
    for i in 0..h {
        for j in 0..w {
            patch.set(dy + i, dx + j, rotated.get(r0 + i, c0 + j));
        }
    }
    TransformedSample {
        patch,
        label,
        angle,
        offset: (dx, dy),
        seed,
        cropped: crop_r || crop_c,
    }
}
