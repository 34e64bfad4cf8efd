//! File formats: PGM and CSV patches, coefficient JSON, and the packed
//! little-endian binaries `SPHCOEF1`, `CGTABLE1` and `BISPFT01`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use bispec_core::invariants::{enumerate_triples, TripleSet};
use bispec_core::sht::{ImagePatch, SphereCoeffs};
use bispec_core::so3::CGTable;
use bispec_core::C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::TransformedSample;

pub const SPHCOEF_MAGIC: &[u8; 8] = b"SPHCOEF1";
pub const CGTABLE_MAGIC: &[u8; 8] = b"CGTABLE1";
pub const BISPFT_MAGIC: &[u8; 8] = b"BISPFT01";
pub const SAMPLES_MAGIC: &[u8; 8] = b"BISPSMP1";

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    /// Next unsigned decimal token and its starting offset.
    fn number(&mut self, what: &'static str) -> Result<(u32, usize)> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            let msg = match self.bytes.get(start) {
                Some(c) => format!("expected {what}, found byte {c:#04x}"),
                None => format!("expected {what}, found end of file"),
            };
            return Err(Error::format("PGM", start, msg));
        }
        if self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.bytes[self.pos] != b'#' {
            return Err(Error::format("PGM", self.pos, format!("unexpected byte {:#04x} in {what}", self.bytes[self.pos])));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .map(|v| (v, start))
            .ok_or_else(|| Error::format("PGM", start, format!("{what} out of range")))
    }
}

/// Parses a square PGM (`P2` or `P5`) into a patch scaled by `maxval`.
pub fn parse_pgm(bytes: &[u8]) -> Result<ImagePatch> {
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'2' || bytes[1] == b'5') {
        return Err(Error::format("PGM", 0, "expected magic P2 or P5"));
    }
    let binary = bytes[1] == b'5';
    let mut t = Tokens { bytes, pos: 2 };
    let (width, woff) = t.number("width")?;
    let (height, _) = t.number("height")?;
    let (maxval, moff) = t.number("maxval")?;
    if width == 0 || width != height {
        return Err(Error::format("PGM", woff, format!("patch must be square and non-empty, got {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format("PGM", moff, format!("maxval {maxval} outside 1..=65535")));
    }
    let n = width as usize;
    let scale = maxval as f64;
    let mut pixels = Vec::with_capacity(n * n);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let start = t.pos + 1;
        let width_bytes = if maxval < 256 { 1 } else { 2 };
        let needed = start + n * n * width_bytes;
        if bytes.len() < needed {
            return Err(Error::format(
                "PGM",
                bytes.len(),
                format!("raster truncated: expected {} bytes of pixel data", n * n * width_bytes),
            ));
        }
        for k in 0..n * n {
            let off = start + k * width_bytes;
            let v = if width_bytes == 1 {
                bytes[off] as u32
            } else {
                u16::from_be_bytes([bytes[off], bytes[off + 1]]) as u32
            };
            if v > maxval {
                return Err(Error::format("PGM", off, format!("sample {v} exceeds maxval {maxval}")));
            }
            pixels.push(v as f64 / scale);
        }
    } else {
        for _ in 0..n * n {
            let (v, off) = t.number("sample")?;
            if v > maxval {
                return Err(Error::format("PGM", off, format!("sample {v} exceeds maxval {maxval}")));
            }
            pixels.push(v as f64 / scale);
        }
    }
    Ok(ImagePatch::new(n, pixels)?)
}

/// `P5` with maxval 255.
pub fn encode_pgm(patch: &ImagePatch) -> Vec<u8> {
    let n = patch.side();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.extend(patch.pixels().iter().map(|v| (v * 255.0).round() as u8));
    out
}

/// Square grid of numbers separated by commas or whitespace, one row per
/// line. Grids with a maximum above 1 are divided by that maximum; values
/// are then clamped into `[0, 1]`.
pub fn parse_csv_grid(text: &str) -> Result<ImagePatch> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let content = line.trim();
        if !content.is_empty() && !content.starts_with('#') {
            let mut row = Vec::new();
            let mut col = 0;
            for field in line.split(|c: char| c == ',' || c.is_whitespace()) {
                if !field.is_empty() {
                    let v: f64 = field.parse().map_err(|_| {
                        Error::format("CSV grid", offset + col, format!("not a number: {field:?}"))
                    })?;
                    row.push(v);
                }
                col += field.len() + 1;
            }
            rows.push(row);
        }
        offset += line.len();
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::format("CSV grid", 0, format!("expected a square grid, got {n} rows")));
    }
    let mut pixels: Vec<f64> = rows.into_iter().flatten().collect();
    let max = pixels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max > 1.0 {
        pixels.iter_mut().for_each(|v| *v /= max);
    }
    Ok(ImagePatch::new(n, pixels)?)
}

/// Reads a patch, picking the parser from the extension (`.csv`/`.txt`
/// grids, anything else PGM).
pub fn read_patch(path: &Path) -> Result<ImagePatch> {
    let bytes = read_file(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("txt") => {
            let text = String::from_utf8(bytes).map_err(|e| Error::format("CSV grid", e.utf8_error().valid_up_to(), "invalid UTF-8"))?;
            parse_csv_grid(&text)
        }
        _ => parse_pgm(&bytes),
    }
}

#[derive(Serialize, Deserialize)]
struct CoeffsJson {
    #[serde(rename = "L")]
    band_limit: usize,
    coeffs: Vec<[f64; 2]>,
}

pub fn coeffs_to_json(c: &SphereCoeffs) -> String {
    let doc = CoeffsJson {
        band_limit: c.band_limit(),
        coeffs: c.as_slice().iter().map(|z| [z.re, z.im]).collect(),
    };
    serde_json::to_string(&doc).expect("coefficients serialise")
}

pub fn coeffs_from_json(text: &str) -> Result<SphereCoeffs> {
    let doc: CoeffsJson = serde_json::from_str(text)?;
    let v = doc.coeffs.into_iter().map(|[re, im]| C64::new(re, im)).collect();
    Ok(SphereCoeffs::from_vec(doc.band_limit, v)?)
}

struct Reader<'a> {
    what: &'static str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(what: &'static str, bytes: &'a [u8], magic: &[u8; 8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..8] != magic {
            return Err(Error::format(what, 0, format!("expected magic {:?}", String::from_utf8_lossy(magic))));
        }
        Ok(Reader { what, bytes, pos: 8 })
    }

    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let end = self.pos + K;
        if end > self.bytes.len() {
            return Err(Error::format(self.what, self.bytes.len(), format!("truncated, needed {K} more bytes")));
        }
        let mut out = [0u8; K];
        out.copy_from_slice(&self.bytes[self.pos..end]);
        self.pos = end;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn i32(&mut self) -> Result<i32> {
        self.take::<4>().map(i32::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }

    fn size(&mut self, limit: u64) -> Result<usize> {
        let at = self.pos;
        let v = self.u64()?;
        if v > limit {
            return Err(Error::format(self.what, at, format!("size field {v} is implausible")));
        }
        Ok(v as usize)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::format(self.what, self.pos, "trailing bytes"));
        }
        Ok(())
    }
}

pub fn encode_coeffs(c: &SphereCoeffs) -> Vec<u8> {
    let mut out = SPHCOEF_MAGIC.to_vec();
    out.extend((c.band_limit() as u64).to_le_bytes());
    for z in c.as_slice() {
        out.extend(z.re.to_le_bytes());
        out.extend(z.im.to_le_bytes());
    }
    out
}

pub fn decode_coeffs(bytes: &[u8]) -> Result<SphereCoeffs> {
    let mut r = Reader::new("SPHCOEF1", bytes, SPHCOEF_MAGIC)?;
    let band = r.size(1 << 12)?;
    let mut v = Vec::with_capacity((band + 1) * (band + 1));
    for _ in 0..(band + 1) * (band + 1) {
        let re = r.f64()?;
        v.push(C64::new(re, r.f64()?));
    }
    r.finish()?;
    Ok(SphereCoeffs::from_vec(band, v)?)
}

/// Entries as `(l1, l2, l, m1, m)` in `i32` followed by the `f64` value.
pub fn encode_cg_table(t: &CGTable) -> Vec<u8> {
    let mut out = CGTABLE_MAGIC.to_vec();
    out.extend((t.band_limit() as u64).to_le_bytes());
    let entries: Vec<_> = t.entries().collect();
    out.extend((entries.len() as u64).to_le_bytes());
    for (l1, l2, l, m1, m, v) in entries {
        for k in [l1 as i32, l2 as i32, l as i32, m1 as i32, m as i32] {
            out.extend(k.to_le_bytes());
        }
        out.extend(v.to_le_bytes());
    }
    out
}

pub fn decode_cg_table(bytes: &[u8]) -> Result<CGTable> {
    let mut r = Reader::new("CGTABLE1", bytes, CGTABLE_MAGIC)?;
    let band = r.size(1 << 10)?;
    let count = r.size((bytes.len() / 28) as u64)?;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let at = r.pos;
        let ints = [r.i32()?, r.i32()?, r.i32()?, r.i32()?, r.i32()?];
        if ints[..3].iter().any(|&k| k < 0) {
            return Err(Error::format("CGTABLE1", at, "negative degree"));
        }
        entries.push((ints[0] as usize, ints[1] as usize, ints[2] as usize, ints[3] as i64, ints[4] as i64, r.f64()?));
    }
    r.finish()?;
    Ok(CGTable::from_entries(band, entries)?)
}

/// A feature matrix with one row per sample, as written to CSV or
/// `BISPFT01`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Column names `re_l1_l2_l`, `im_l1_l2_l` in canonical triple order.
pub fn bispectrum_columns(band_limit: usize, set: TripleSet) -> Vec<String> {
    enumerate_triples(band_limit, set)
        .into_iter()
        .flat_map(|(a, b, c)| [format!("re_{a}_{b}_{c}"), format!("im_{a}_{b}_{c}")])
        .collect()
}

pub fn pixel_columns(count: usize) -> Vec<String> {
    (0..count).map(|k| format!("px_{k}")).collect()
}

/// Values use the shortest representation that reads back bit-exactly.
pub fn features_to_csv(t: &FeatureTable) -> String {
    let mut out = String::from("id");
    for c in &t.columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (id, row) in t.ids.iter().zip(&t.rows) {
        out.push_str(id);
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn features_from_csv(text: &str) -> Result<FeatureTable> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::format("features CSV", 0, "empty file"))?;
    let mut cols = header.split(',');
    if cols.next() != Some("id") {
        return Err(Error::format("features CSV", 0, "header must start with id"));
    }
    let columns: Vec<String> = cols.map(str::to_owned).collect();
    let mut offset = header.len() + 1;
    let (mut ids, mut rows) = (Vec::new(), Vec::new());
    for line in lines {
        if !line.is_empty() {
            let mut fields = line.split(',');
            ids.push(fields.next().unwrap_or_default().to_owned());
            let mut col = ids.last().map_or(0, String::len) + 1;
            let mut row = Vec::with_capacity(columns.len());
            for f in fields {
                row.push(f.parse().map_err(|_| Error::format("features CSV", offset + col, format!("not a number: {f:?}")))?);
                col += f.len() + 1;
            }
            if row.len() != columns.len() {
                return Err(Error::format(
                    "features CSV",
                    offset,
                    format!("expected {} values, found {}", columns.len(), row.len()),
                ));
            }
            rows.push(row);
        }
        offset += line.len() + 1;
    }
    Ok(FeatureTable { columns, ids, rows })
}

/// Header: band-limit, triple set (0 symmetric, 1 full), row count and
/// column count as `u64`; then the rows as `f64`. Ids are not stored.
pub fn encode_bispectrum_features(band_limit: usize, set: TripleSet, rows: &[Vec<f64>]) -> Vec<u8> {
    let cols = 2 * enumerate_triples(band_limit, set).len();
    let mut out = BISPFT_MAGIC.to_vec();
    for v in [band_limit as u64, (set == TripleSet::Full) as u64, rows.len() as u64, cols as u64] {
        out.extend(v.to_le_bytes());
    }
    for row in rows {
        assert_eq!(row.len(), cols, "feature row length");
        for v in row {
            out.extend(v.to_le_bytes());
        }
    }
    out
}

pub fn decode_bispectrum_features(bytes: &[u8]) -> Result<(usize, TripleSet, Vec<Vec<f64>>)> {
    let mut r = Reader::new("BISPFT01", bytes, BISPFT_MAGIC)?;
    let band = r.size(1 << 10)?;
    let at = r.pos;
    let set = match r.u64()? {
        0 => TripleSet::Symmetric,
        1 => TripleSet::Full,
        v => return Err(Error::format("BISPFT01", at, format!("unknown triple set {v}"))),
    };
    let nrows = r.size((bytes.len() / 8) as u64)?;
    let at = r.pos;
    let cols = r.size((bytes.len() / 8) as u64)?;
    if cols != 2 * enumerate_triples(band, set).len() {
        return Err(Error::format("BISPFT01", at, format!("column count {cols} does not match L = {band}")));
    }
    let mut rows = Vec::with_capacity(nrows);
    for _ in 0..nrows {
        rows.push((0..cols).map(|_| r.f64()).collect::<Result<Vec<_>>>()?);
    }
    r.finish()?;
    Ok((band, set, rows))
}

/// Transformed-sample cache: count, then per sample the dataset index,
/// label, seed, angle, offset, cropped flag, side and pixels.
pub fn encode_samples(indices: &[usize], samples: &[TransformedSample]) -> Vec<u8> {
    let mut out = SAMPLES_MAGIC.to_vec();
    out.extend((samples.len() as u64).to_le_bytes());
    for (&index, s) in indices.iter().zip(samples) {
        out.extend((index as u64).to_le_bytes());
        out.push(s.label);
        out.extend(s.seed.to_le_bytes());
        out.extend(s.angle.to_le_bytes());
        out.extend((s.offset.0 as u64).to_le_bytes());
        out.extend((s.offset.1 as u64).to_le_bytes());
        out.push(s.cropped as u8);
        out.extend((s.patch.side() as u64).to_le_bytes());
        for v in s.patch.pixels() {
            out.extend(v.to_le_bytes());
        }
    }
    out
}

pub fn decode_samples(bytes: &[u8]) -> Result<(Vec<usize>, Vec<TransformedSample>)> {
    let mut r = Reader::new("sample cache", bytes, SAMPLES_MAGIC)?;
    let count = r.size((bytes.len() / 50) as u64)?;
    let (mut indices, mut samples) = (Vec::with_capacity(count), Vec::with_capacity(count));
    for _ in 0..count {
        indices.push(r.size(u32::MAX as u64)?);
        let [label] = r.take::<1>()?;
        let seed = r.u64()?;
        let angle = r.f64()?;
        let offset = (r.size(1 << 16)?, r.size(1 << 16)?);
        let [cropped] = r.take::<1>()?;
        let side = r.size(1 << 12)?;
        let pixels = (0..side * side).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        samples.push(TransformedSample {
            patch: ImagePatch::new(side, pixels)?,
            label,
            angle,
            offset,
            seed,
            cropped: cropped != 0,
        });
    }
    r.finish()?;
    Ok((indices, samples))
}

pub fn gram_to_csv(ids: &[String], k: &[f64]) -> String {
    let n = ids.len();
    let mut out = String::from("id");
    for id in ids {
        write!(out, ",{id}").unwrap();
    }
    out.push('\n');
    for (i, id) in ids.iter().enumerate() {
        out.push_str(id);
        for v in &k[i * n..(i + 1) * n] {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}
