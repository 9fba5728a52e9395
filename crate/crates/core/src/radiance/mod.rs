//! Point-sampleable radiance on the sensor plane.
//!
//! Fields are black boxes: the simulator only ever asks for values at
//! points, never for spatial derivatives.

mod io;

pub use io::{encode_pgm, encode_ppm, load_image, read_pnm, write_pgm, write_ppm, ImageFormat, Pnm};

use std::f64::consts::PI;

use nalgebra::{Matrix3x2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Point, DOMAIN_EPS};

pub type Rgb = Vector3<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldDescriptor {
    ImageBacked,
    Constant,
    LinearRamp,
    GaussianBlob,
    Checkerboard,
}

/// A continuous RGB radiance function on `S = [-1, 1]^2`.
///
/// `sample` is called with points inside `S` and must be pure; values lie in
/// `[0, 1]` per channel.
pub trait RadianceField: Send + Sync {
    fn sample(&self, p: Point) -> Rgb;

    fn descriptor(&self) -> FieldDescriptor;

    /// Spatial derivative `d L / d p` (RGB x 2), when the field has one.
    fn spatial_gradient(&self, _p: Point) -> Result<Matrix3x2<f64>> {
        Err(Error::GradientUnavailable)
    }
}

/// Samples `field` at `p`, clamping points that are within `DOMAIN_EPS` of
/// the sensor and rejecting anything farther out.
pub fn sample(field: &dyn RadianceField, p: Point) -> Result<Rgb> {
    let lim = 1.0 + DOMAIN_EPS;
    if !(p.x.abs() <= lim && p.y.abs() <= lim) {
        return Err(Error::OutsideDomain(p.x, p.y));
    }
    Ok(field.sample(Point::new(p.x.clamp(-1.0, 1.0), p.y.clamp(-1.0, 1.0))))
}

/// Closed-form fields used for testing and gradient checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AnalyticField {
    Constant {
        color: [f64; 3],
    },
    /// `L(p) = (p_1 + 1) / 2` on every channel.
    LinearRamp,
    /// `base + amplitude * exp(-|p - center|^2 / (2 sigma^2))`, per channel.
    GaussianBlob {
        center: [f64; 2],
        sigma: f64,
        base: [f64; 3],
        amplitude: [f64; 3],
    },
    /// Smooth checker pattern `tint (0.5 + 0.5 contrast sin(pi f (p_1 + 1) / 2) sin(pi f (p_2 + 1) / 2))`
    /// with `f` cells per axis.
    Checkerboard {
        cells: f64,
        contrast: f64,
        tint: [f64; 3],
    },
}

impl AnalyticField {
    pub fn constant(r: f64, g: f64, b: f64) -> Self {
        AnalyticField::Constant { color: [r, g, b] }
    }

    pub fn blob(center: [f64; 2], sigma: f64) -> Self {
        AnalyticField::GaussianBlob {
            center,
            sigma,
            base: [0.05, 0.1, 0.0],
            amplitude: [0.9, 0.7, 0.95],
        }
    }

    pub fn checkerboard(cells: f64) -> Self {
        AnalyticField::Checkerboard {
            cells,
            contrast: 0.9,
            tint: [1.0, 0.8, 0.6],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |c: &[f64; 3]| c.iter().all(|v| (0.0..=1.0).contains(v));
        let ok = match self {
            AnalyticField::Constant { color } => in_unit(color),
            AnalyticField::LinearRamp => true,
            AnalyticField::GaussianBlob {
                sigma,
                base,
                amplitude,
                ..
            } => {
                *sigma > 0.0
                    && in_unit(base)
                    && (0..3).all(|c| amplitude[c] >= 0.0 && base[c] + amplitude[c] <= 1.0)
            }
            AnalyticField::Checkerboard {
                cells,
                contrast,
                tint,
            } => *cells > 0.0 && (0.0..=1.0).contains(contrast) && in_unit(tint),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "analytic field values leave [0, 1]: {self:?}"
            )))
        }
    }
}

impl RadianceField for AnalyticField {
    fn sample(&self, p: Point) -> Rgb {
        match self {
            AnalyticField::Constant { color } => Rgb::from(*color),
            AnalyticField::LinearRamp => Rgb::repeat((p.x + 1.0) * 0.5),
            AnalyticField::GaussianBlob {
                center,
                sigma,
                base,
                amplitude,
            } => {
                let d2 = (p.x - center[0]).powi(2) + (p.y - center[1]).powi(2);
                let w = (-d2 / (2.0 * sigma * sigma)).exp();
                Rgb::from(*base) + Rgb::from(*amplitude) * w
            }
            AnalyticField::Checkerboard {
                cells,
                contrast,
                tint,
            } => {
                let s = checker_profile(*cells, p);
                Rgb::from(*tint) * (0.5 + 0.5 * contrast * s)
            }
        }
    }

    fn descriptor(&self) -> FieldDescriptor {
        match self {
            AnalyticField::Constant { .. } => FieldDescriptor::Constant,
            AnalyticField::LinearRamp => FieldDescriptor::LinearRamp,
            AnalyticField::GaussianBlob { .. } => FieldDescriptor::GaussianBlob,
            AnalyticField::Checkerboard { .. } => FieldDescriptor::Checkerboard,
        }
    }

    fn spatial_gradient(&self, p: Point) -> Result<Matrix3x2<f64>> {
        let g = match self {
            AnalyticField::Constant { .. } => Matrix3x2::zeros(),
            AnalyticField::LinearRamp => {
                Matrix3x2::from_columns(&[Rgb::repeat(0.5), Rgb::zeros()])
            }
            AnalyticField::GaussianBlob {
                center,
                sigma,
                amplitude,
                ..
            } => {
                let (dx, dy) = (p.x - center[0], p.y - center[1]);
                let s2 = sigma * sigma;
                let w = (-(dx * dx + dy * dy) / (2.0 * s2)).exp();
                let a = Rgb::from(*amplitude) * w;
                Matrix3x2::from_columns(&[a * (-dx / s2), a * (-dy / s2)])
            }
            AnalyticField::Checkerboard {
                cells,
                contrast,
                tint,
            } => {
                let k = PI * cells * 0.5;
                let (u, v) = (k * (p.x + 1.0), k * (p.y + 1.0));
                let t = Rgb::from(*tint) * (0.5 * contrast * k);
                Matrix3x2::from_columns(&[t * (u.cos() * v.sin()), t * (u.sin() * v.cos())])
            }
        };
        Ok(g)
    }
}

fn checker_profile(cells: f64, p: Point) -> f64 {
    let k = PI * cells * 0.5;
    (k * (p.x + 1.0)).sin() * (k * (p.y + 1.0)).sin()
}

/// A raster image stretched over the whole sensor, sampled bilinearly.
///
/// Texel `(i, j)` covers `[i, i + 1] x [j, j + 1]` in image coordinates and
/// its center is `(i + 0.5, j + 0.5)`. `S` maps onto `[0, width] x [0, height]`
/// with `p = (-1, -1)` at the top-left corner. Lookups outside the texel
/// centers clamp to the border texels.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl SourceImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("image dimensions must be positive".into()));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter(format!(
                "images must have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch {
                expected: width * height * channels,
                actual: data.len(),
            });
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("image value {v} outside [0, 1]")));
        }
        Ok(SourceImage {
            width,
            height,
            channels,
            data,
        })
    }

    /// Grayscale image from 8-bit samples.
    pub fn from_gray_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        let data = bytes.iter().map(|&b| f64::from(b) / 255.0).collect();
        SourceImage::new(width, height, 1, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Texel value, grayscale replicated to RGB.
    pub fn texel(&self, i: usize, j: usize) -> Rgb {
        let base = (j * self.width + i) * self.channels;
        if self.channels == 1 {
            Rgb::repeat(self.data[base])
        } else {
            Rgb::new(self.data[base], self.data[base + 1], self.data[base + 2])
        }
    }

    /// Continuous image coordinates of sensor point `p`.
    pub fn to_image_coords(&self, p: Point) -> (f64, f64) {
        (
            (p.x + 1.0) * 0.5 * self.width as f64,
            (p.y + 1.0) * 0.5 * self.height as f64,
        )
    }

    fn bilinear(&self, x: f64, y: f64) -> Rgb {
        let (fx, i0, i1) = axis_weights(x - 0.5, self.width);
        let (fy, j0, j1) = axis_weights(y - 0.5, self.height);
        if self.channels == 1 {
            let at = |i: usize, j: usize| self.data[j * self.width + i];
            let top = at(i0, j0) + fx * (at(i1, j0) - at(i0, j0));
            let bottom = at(i0, j1) + fx * (at(i1, j1) - at(i0, j1));
            return Rgb::repeat(top + fy * (bottom - top));
        }
        let top = self.texel(i0, j0).lerp(&self.texel(i1, j0), fx);
        let bottom = self.texel(i0, j1).lerp(&self.texel(i1, j1), fx);
        top.lerp(&bottom, fy)
    }
}

/// Fractional offset and the two clamped texel indices around `x`
/// (measured in texel-center units).
#[inline]
fn axis_weights(x: f64, n: usize) -> (f64, usize, usize) {
    let last = (n - 1) as f64;
    let x = x.clamp(0.0, last);
    let i0 = x.floor();
    let f = x - i0;
    let i0 = i0 as usize;
    (f, i0, (i0 + 1).min(n - 1))
}

impl RadianceField for SourceImage {
    fn sample(&self, p: Point) -> Rgb {
        let (x, y) = self.to_image_coords(p);
        self.bilinear(x, y)
    }

    fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor::ImageBacked
    }
}
