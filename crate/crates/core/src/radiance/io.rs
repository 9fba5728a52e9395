use std::fs;
use std::path::Path;

use super::SourceImage;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Ppm,
    Pgm,
}

impl ImageFormat {
    /// Guesses the format from the file extension, then from magic bytes.
    pub fn detect(path: &Path, bytes: &[u8]) -> Option<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        match ext.as_deref() {
            Some("png") => return Some(ImageFormat::Png),
            Some("ppm") => return Some(ImageFormat::Ppm),
            Some("pgm") => return Some(ImageFormat::Pgm),
            _ => {}
        }
        match bytes {
            [0x89, b'P', b'N', b'G', ..] => Some(ImageFormat::Png),
            [b'P', b'6', ..] => Some(ImageFormat::Ppm),
            [b'P', b'5', ..] => Some(ImageFormat::Pgm),
            _ => None,
        }
    }
}

/// Raw binary PNM contents: `P6` (3 channels) or `P5` (1 channel).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pnm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub maxval: u32,
    pub samples: Vec<u16>,
}

impl Pnm {
    pub fn to_source_image(&self) -> Result<SourceImage> {
        let scale = f64::from(self.maxval);
        let data = self.samples.iter().map(|&s| f64::from(s) / scale).collect();
        SourceImage::new(self.width, self.height, self.channels, data)
    }
}

/// Loads an image and normalizes it to `[0, 1]`: 8-bit samples are divided
/// by 255, 16-bit samples by 65535.
pub fn load_image(path: impl AsRef<Path>, format: Option<ImageFormat>) -> Result<SourceImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = match format.or_else(|| ImageFormat::detect(path, &bytes)) {
        Some(f) => f,
        None => return Err(Error::format("image", "unrecognized image format")),
    };
    match format {
        ImageFormat::Png => decode_png(&bytes),
        ImageFormat::Ppm | ImageFormat::Pgm => {
            let pnm = read_pnm(&bytes)?;
            let expected = if format == ImageFormat::Ppm { 3 } else { 1 };
            if pnm.channels != expected {
                return Err(Error::format(
                    "PNM",
                    format!("expected {expected} channel(s), found {}", pnm.channels),
                ));
            }
            pnm.to_source_image()
        }
    }
}

fn decode_png(bytes: &[u8]) -> Result<SourceImage> {
    use image::DynamicImage;

    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format("PNG", e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (channels, data): (usize, Vec<f64>) = match img {
        DynamicImage::ImageLuma8(b) => (1, b.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect()),
        DynamicImage::ImageLuma16(b) => (1, b.into_raw().into_iter().map(|v| f64::from(v) / 65535.0).collect()),
        DynamicImage::ImageRgb8(b) => (3, b.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect()),
        DynamicImage::ImageRgb16(b) => (3, b.into_raw().into_iter().map(|v| f64::from(v) / 65535.0).collect()),
        // Alpha is dropped.
        DynamicImage::ImageLumaA8(_) => {
            let b = img.to_luma8();
            (1, b.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect())
        }
        DynamicImage::ImageRgba8(_) => {
            let b = img.to_rgb8();
            (3, b.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect())
        }
        other => {
            return Err(Error::format(
                "PNG",
                format!("unsupported color type {:?}", other.color()),
            ))
        }
    };
    SourceImage::new(w, h, channels, data)
}

/// Parses a binary `P5`/`P6` file. Only maxval 255 (8-bit) and 65535
/// (16-bit, big-endian) are accepted.
pub fn read_pnm(bytes: &[u8]) -> Result<Pnm> {
    let channels = match bytes.get(..2) {
        Some(b"P6") => 3,
        Some(b"P5") => 1,
        _ => return Err(Error::format("PNM", "missing P5/P6 magic")),
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        *field = header_number(bytes, &mut pos)?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::format("PNM", "header not terminated by whitespace")),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::format("PNM", "zero image dimension"));
    }
    let bytes_per_sample = match maxval {
        255 => 1,
        65535 => 2,
        other => return Err(Error::UnsupportedBitDepth(other)),
    };
    let count = width as usize * height as usize * channels;
    let raster = &bytes[pos..];
    if raster.len() < count * bytes_per_sample {
        return Err(Error::format(
            "PNM",
            format!(
                "truncated raster: need {} bytes, found {}",
                count * bytes_per_sample,
                raster.len()
            ),
        ));
    }
    let samples = if bytes_per_sample == 1 {
        raster[..count].iter().map(|&b| u16::from(b)).collect()
    } else {
        raster[..2 * count]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Ok(Pnm {
        width: width as usize,
        height: height as usize,
        channels,
        maxval,
        samples,
    })
}

fn header_number(bytes: &[u8], pos: &mut usize) -> Result<u32> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b) if b.is_ascii_digit() => break,
            _ => return Err(Error::format("PNM", "malformed header")),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format("PNM", "header value out of range"))
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Encodes interleaved RGB values in `[0, 1]` as an 8-bit binary PPM.
pub fn encode_ppm(width: usize, height: usize, rgb: &[f64]) -> Result<Vec<u8>> {
    if rgb.len() != width * height * 3 {
        return Err(Error::ShapeMismatch {
            expected: width * height * 3,
            actual: rgb.len(),
        });
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend(rgb.iter().map(|&v| quantize(v)));
    Ok(out)
}

/// Encodes raw 8-bit samples as a binary PGM.
pub fn encode_pgm(width: usize, height: usize, gray: &[u8]) -> Result<Vec<u8>> {
    if gray.len() != width * height {
        return Err(Error::ShapeMismatch {
            expected: width * height,
            actual: gray.len(),
        });
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(gray);
    Ok(out)
}

pub fn write_ppm(path: impl AsRef<Path>, width: usize, height: usize, rgb: &[f64]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ppm(width, height, rgb)?).map_err(|e| Error::io(path, e))
}

pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, gray: &[u8]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(width, height, gray)?).map_err(|e| Error::io(path, e))
}
