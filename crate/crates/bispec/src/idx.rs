//! Big-endian IDX containers for digit images and labels.

use std::path::Path;

use bispec_core::sht::ImagePatch;

use crate::error::{Error, Result};
use crate::formats::read_file;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub struct DigitDataset {
    pub images: Vec<ImagePatch>,
    pub labels: Vec<u8>,
}

impl DigitDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Indices of the first `limit` images with the given label.
    pub fn indices_of(&self, digit: u8, limit: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == digit)
            .map(|(k, _)| k)
            .take(limit)
            .collect()
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::TruncatedFile {
            needed: at + 4,
            available: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = be_u32(bytes, 0)?;
    if found != expected {
        return Err(Error::BadMagic { expected, found });
    }
    Ok(())
}

/// Square images, intensities rescaled from `0..=255` to `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<ImagePatch>> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    if rows != cols {
        return Err(Error::format("IDX images", 8, format!("images must be square, got {rows}x{cols}")));
    }
    let size = rows * cols;
    let needed = 16 + count * size;
    if bytes.len() < needed {
        return Err(Error::TruncatedFile {
            needed,
            available: bytes.len(),
        });
    }
    bytes[16..needed]
        .chunks_exact(size.max(1))
        .take(count)
        .map(|px| Ok(ImagePatch::new(rows, px.iter().map(|&v| v as f64 / 255.0).collect())?))
        .collect()
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let needed = 8 + count;
    if bytes.len() < needed {
        return Err(Error::TruncatedFile {
            needed,
            available: bytes.len(),
        });
    }
    Ok(bytes[8..needed].to_vec())
}

pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<DigitDataset> {
    let images = parse_idx_images(&read_file(images_path)?)?;
    let labels = parse_idx_labels(&read_file(labels_path)?)?;
    if images.len() != labels.len() {
        return Err(Error::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    Ok(DigitDataset { images, labels })
}

pub fn encode_idx_images(images: &[ImagePatch]) -> Vec<u8> {
    let n = images.first().map_or(0, ImagePatch::side) as u32;
    let mut out = Vec::new();
    for v in [IMAGES_MAGIC, images.len() as u32, n, n] {
        out.extend(v.to_be_bytes());
    }
    for img in images {
        out.extend(img.pixels().iter().map(|v| (v * 255.0).round() as u8));
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend(LABELS_MAGIC.to_be_bytes());
    out.extend((labels.len() as u32).to_be_bytes());
    out.extend(labels);
    out
}
