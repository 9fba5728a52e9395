use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::radiance::SourceImage;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
pub const CLASSES: usize = 10;

/// Grayscale images with class labels. Pixels are stored as raw bytes and
/// normalized to `[0, 1]` on access.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("dataset images must be non-empty".into()));
        }
        if pixels.len() != labels.len() * width * height {
            return Err(Error::ShapeMismatch {
                expected: labels.len() * width * height,
                actual: pixels.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| usize::from(l) >= CLASSES) {
            return Err(Error::format("IDX", format!("label {l} outside [0, {CLASSES})")));
        }
        Ok(Dataset {
            width,
            height,
            pixels,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        usize::from(self.labels[i])
    }

    pub fn raw_image(&self, i: usize) -> &[u8] {
        let n = self.width * self.height;
        &self.pixels[i * n..(i + 1) * n]
    }

    /// Image `i` as a radiance source (grayscale, replicated to RGB on sampling).
    pub fn image(&self, i: usize) -> SourceImage {
        SourceImage::from_gray_u8(self.width, self.height, self.raw_image(i))
            .expect("dataset dimensions are validated on construction")
    }

    /// The first `n` samples (all of them if `n` exceeds the length).
    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            width: self.width,
            height: self.height,
            pixels: self.pixels[..n * self.width * self.height].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }

    /// Samples `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        let end = end.min(self.len());
        let start = start.min(end);
        let px = self.width * self.height;
        Dataset {
            width: self.width,
            height: self.height,
            pixels: self.pixels[start * px..end * px].to_vec(),
            labels: self.labels[start..end].to_vec(),
        }
    }

    pub fn class_counts(&self) -> [usize; CLASSES] {
        let mut counts = [0; CLASSES];
        for &l in &self.labels {
            counts[usize::from(l)] += 1;
        }
        counts
    }
}

fn be_u32(bytes: &[u8], at: usize, what: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::format("IDX", format!("truncated header ({what})")))
}

/// Parses an IDX image file, returning `(count, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8], limit: Option<usize>) -> Result<(usize, usize, usize, Vec<u8>)> {
    let magic = be_u32(bytes, 0, "magic")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::format("IDX", format!("bad image magic {magic:#010x}")));
    }
    let n = be_u32(bytes, 4, "count")? as usize;
    let rows = be_u32(bytes, 8, "rows")? as usize;
    let cols = be_u32(bytes, 12, "cols")? as usize;
    let need = n * rows * cols;
    let body = &bytes[16..];
    if body.len() < need {
        return Err(Error::format(
            "IDX",
            format!("truncated image data: need {need} bytes, found {}", body.len()),
        ));
    }
    let keep = limit.map_or(n, |l| l.min(n));
    Ok((keep, rows, cols, body[..keep * rows * cols].to_vec()))
}

/// Parses an IDX label file.
pub fn parse_idx_labels(bytes: &[u8], limit: Option<usize>) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, "magic")?;
    if magic != LABELS_MAGIC {
        return Err(Error::format("IDX", format!("bad label magic {magic:#010x}")));
    }
    let n = be_u32(bytes, 4, "count")? as usize;
    let body = &bytes[8..];
    if body.len() < n {
        return Err(Error::format(
            "IDX",
            format!("truncated label data: need {n} bytes, found {}", body.len()),
        ));
    }
    let labels = body[..limit.map_or(n, |l| l.min(n))].to_vec();
    if let Some(&l) = labels.iter().find(|&&l| usize::from(l) >= CLASSES) {
        return Err(Error::format("IDX", format!("label {l} outside [0, {CLASSES})")));
    }
    Ok(labels)
}

pub fn load_mnist(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Dataset> {
    load_mnist_limit(images, labels, None)
}

/// Loads at most `limit` samples. Image and label counts must agree in the
/// files themselves, even when truncating.
pub fn load_mnist_limit(
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
    limit: Option<usize>,
) -> Result<Dataset> {
    let (ip, lp) = (images.as_ref(), labels.as_ref());
    let ib = fs::read(ip).map_err(|e| Error::io(ip, e))?;
    let lb = fs::read(lp).map_err(|e| Error::io(lp, e))?;
    let (n_img, n_lab) = (be_u32(&ib, 4, "count")?, be_u32(&lb, 4, "count")?);
    if n_img != n_lab {
        return Err(Error::format(
            "IDX",
            format!("{n_img} images but {n_lab} labels"),
        ));
    }
    let (_, rows, cols, pixels) = parse_idx_images(&ib, limit)?;
    let labels = parse_idx_labels(&lb, limit)?;
    Dataset::new(cols, rows, pixels, labels)
}

pub fn encode_idx_images(count: usize, rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, count as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Writes a dataset as an IDX image/label file pair.
pub fn write_idx(data: &Dataset, images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<()> {
    let (ip, lp) = (images.as_ref(), labels.as_ref());
    let ib = encode_idx_images(data.len(), data.height, data.width, &data.pixels);
    fs::write(ip, ib).map_err(|e| Error::io(ip, e))?;
    fs::write(lp, encode_idx_labels(&data.labels)).map_err(|e| Error::io(lp, e))
}
