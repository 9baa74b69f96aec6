//! Digit corpus ingestion: IDX containers, USPS text records,
//! binarization and seeded subsampling.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::Bit;
use crate::error::{Error, Result};

/// Gray-level labeled digit image, row-major bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    pub label: u8,
}

/// Binarized digit image as a flat bit sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<Bit>,
    pub label: u8,
}

/// Binarization threshold used throughout unless overridden.
pub const DEFAULT_THRESHOLD: u8 = 80;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32_be(buf: &[u8], offset: usize, format: &'static str) -> Result<u32> {
    let end = offset + 4;
    if buf.len() < end {
        return Err(Error::parse(
            format,
            format!("byte {offset}"),
            format!("truncated: need {end} bytes, have {}", buf.len()),
        ));
    }
    Ok(u32::from_be_bytes([buf[offset], buf[offset + 1], buf[offset + 2], buf[offset + 3]]))
}

/// Parses the IDX image/label container pair into labeled gray images.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<Vec<GrayImage>> {
    let magic = read_u32_be(images, 0, "idx-images")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::parse(
            "idx-images",
            "byte 0",
            format!("bad magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}"),
        ));
    }
    let count = read_u32_be(images, 4, "idx-images")? as usize;
    let rows = read_u32_be(images, 8, "idx-images")? as usize;
    let cols = read_u32_be(images, 12, "idx-images")? as usize;
    let expected = 16 + count * rows * cols;
    if images.len() != expected {
        return Err(Error::parse(
            "idx-images",
            format!("byte {}", images.len().min(expected)),
            format!("payload size {} != header-implied {expected}", images.len()),
        ));
    }

    let lmagic = read_u32_be(labels, 0, "idx-labels")?;
    if lmagic != IDX_LABELS_MAGIC {
        return Err(Error::parse(
            "idx-labels",
            "byte 0",
            format!("bad magic 0x{lmagic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}"),
        ));
    }
    let lcount = read_u32_be(labels, 4, "idx-labels")? as usize;
    if lcount != count {
        return Err(Error::parse(
            "idx-labels",
            "byte 4",
            format!("label count {lcount} != image count {count}"),
        ));
    }
    let lexpected = 8 + count;
    if labels.len() != lexpected {
        return Err(Error::parse(
            "idx-labels",
            format!("byte {}", labels.len().min(lexpected)),
            format!("payload size {} != header-implied {lexpected}", labels.len()),
        ));
    }

    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let label = labels[8 + i];
        if label > 9 {
            return Err(Error::parse(
                "idx-labels",
                format!("byte {}", 8 + i),
                format!("label {label} out of range 0..=9"),
            ));
        }
        let start = 16 + i * rows * cols;
        out.push(GrayImage {
            width: cols,
            height: rows,
            pixels: images[start..start + rows * cols].to_vec(),
            label,
        });
    }
    Ok(out)
}

/// Reads and parses an IDX pair from disk.
pub fn parse_idx_files(images_path: &Path, labels_path: &Path) -> Result<Vec<GrayImage>> {
    let images = read_dataset_file(images_path)?;
    let labels = read_dataset_file(labels_path)?;
    parse_idx(&images, &labels)
}

fn read_dataset_file(path: &Path) -> Result<Vec<u8>> {
    match fs::read(path) {
        Ok(bytes) => Ok(bytes),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(Error::DatasetNotFound(path.to_path_buf()))
        }
        Err(e) => Err(e.into()),
    }
}

/// Encodes gray images back into an IDX pair (images bytes, labels
/// bytes). All images must share one geometry.
pub fn encode_idx(images: &[GrayImage]) -> Result<(Vec<u8>, Vec<u8>)> {
    if images.is_empty() {
        return Err(Error::InvalidInput("no images to encode".into()));
    }
    let (w, h) = (images[0].width, images[0].height);
    if images.iter().any(|img| img.width != w || img.height != h) {
        return Err(Error::InvalidInput("mixed image geometries".into()));
    }
    let mut img_bytes = Vec::with_capacity(16 + images.len() * w * h);
    img_bytes.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    img_bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    img_bytes.extend_from_slice(&(h as u32).to_be_bytes());
    img_bytes.extend_from_slice(&(w as u32).to_be_bytes());
    let mut label_bytes = Vec::with_capacity(8 + images.len());
    label_bytes.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    label_bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    for img in images {
        img_bytes.extend_from_slice(&img.pixels);
        label_bytes.push(img.label);
    }
    Ok((img_bytes, label_bytes))
}

/// Parses USPS text records: one record per line, a label followed by
/// 256 pixel values. Pixel scale is auto-detected per file: values
/// within [-1, 1] map linearly onto 0..=255 (rounding half up), anything
/// else is taken as byte scale already.
pub fn parse_usps(text: &str) -> Result<Vec<GrayImage>> {
    let mut records: Vec<(usize, u8, Vec<f64>)> = Vec::new();
    let mut min_v = f64::INFINITY;
    let mut max_v = f64::NEG_INFINITY;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 257 {
            return Err(Error::parse(
                "usps",
                format!("line {}", lineno + 1),
                format!("expected 257 fields (label + 256 pixels), got {}", fields.len()),
            ));
        }
        let mut values = Vec::with_capacity(257);
        for (fi, field) in fields.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(
                    "usps",
                    format!("line {} field {}", lineno + 1, fi + 1),
                    format!("non-numeric value {field:?}"),
                )
            })?;
            values.push(v);
        }
        let label_f = values[0];
        let label = label_f.round();
        if (label_f - label).abs() > 1e-9 || !(0.0..=9.0).contains(&label) {
            return Err(Error::parse(
                "usps",
                format!("line {}", lineno + 1),
                format!("label {label_f} not an integer in 0..=9"),
            ));
        }
        let pixels = values.split_off(1);
        for &v in &pixels {
            min_v = min_v.min(v);
            max_v = max_v.max(v);
        }
        records.push((lineno + 1, label as u8, pixels));
    }
    if records.is_empty() {
        return Err(Error::parse("usps", "line 1", "no records".to_string()));
    }

    let scaled = min_v < 0.0 || max_v <= 1.0;
    let mut out = Vec::with_capacity(records.len());
    for (lineno, label, pixels) in records {
        let mut bytes = Vec::with_capacity(256);
        for v in pixels {
            let byte = if scaled {
                if !(-1.0 - 1e-9..=1.0 + 1e-9).contains(&v) {
                    return Err(Error::parse(
                        "usps",
                        format!("line {lineno}"),
                        format!("pixel {v} outside [-1, 1] in scaled file"),
                    ));
                }
                // round half up
                (255.0 * (v + 1.0) / 2.0 + 0.5).floor().clamp(0.0, 255.0) as u8
            } else {
                if !(0.0..=255.0 + 1e-9).contains(&v) {
                    return Err(Error::parse(
                        "usps",
                        format!("line {lineno}"),
                        format!("pixel {v} outside 0..=255"),
                    ));
                }
                (v + 0.5).floor().clamp(0.0, 255.0) as u8
            };
            bytes.push(byte);
        }
        out.push(GrayImage {
            width: 16,
            height: 16,
            pixels: bytes,
            label,
        });
    }
    Ok(out)
}

/// Reads and parses a USPS text file from disk.
pub fn parse_usps_file(path: &Path) -> Result<Vec<GrayImage>> {
    let bytes = read_dataset_file(path)?;
    let text = String::from_utf8(bytes).map_err(|e| {
        Error::parse("usps", format!("byte {}", e.utf8_error().valid_up_to()), "not valid utf-8")
    })?;
    parse_usps(&text)
}

/// Thresholds a gray image into bits: 1 where the pixel value is
/// strictly greater than `threshold`.
pub fn binarize(img: &GrayImage, threshold: u8) -> BinaryImage {
    BinaryImage {
        width: img.width,
        height: img.height,
        bits: img.pixels.iter().map(|&p| (p > threshold) as Bit).collect(),
        label: img.label,
    }
}

pub fn binarize_all(images: &[GrayImage], threshold: u8) -> Vec<BinaryImage> {
    images.iter().map(|img| binarize(img, threshold)).collect()
}

/// Uniform sample of `size` images without replacement, deterministic
/// under `seed`. With `size == images.len()` the result is a permutation.
pub fn subsample(images: &[GrayImage], size: usize, seed: u64) -> Result<Vec<GrayImage>> {
    if size < 1 || size > images.len() {
        return Err(Error::InvalidParameter(format!(
            "subsample size {size} out of range 1..={}",
            images.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..images.len()).collect();
    indices.shuffle(&mut rng);
    Ok(indices[..size].iter().map(|&i| images[i].clone()).collect())
}
