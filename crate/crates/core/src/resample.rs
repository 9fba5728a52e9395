//! Nearest-neighbor back-warping of deformed-domain outputs onto a uniform
//! grid, for image-to-image losses against uniform ground truth.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::layout::{LayoutParams, Point, SensorGrid};

/// Row-major image of arbitrary per-pixel values (RGB triples, class labels, ...).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelImage<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
}

impl<T> LabelImage<T> {
    pub fn new(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("label image dimensions must be positive".into()));
        }
        if values.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: width * height,
                actual: values.len(),
            });
        }
        Ok(LabelImage {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.values[y * self.width + x]
    }
}

impl LabelImage<u8> {
    /// Validates class labels against a declared class count.
    pub fn check_classes(&self, classes: usize) -> Result<()> {
        match self.values.iter().find(|&&v| usize::from(v) >= classes) {
            Some(v) => Err(Error::InvalidParameter(format!(
                "label {v} outside the declared {classes} classes"
            ))),
            None => Ok(()),
        }
    }
}

/// Resamples a deformed sensor output onto a uniform `target_w x target_h`
/// grid: every target cell center `q` takes the value of the uniform pixel
/// containing `phi^{-1}(q, theta)`.
pub fn backwarp<T: Copy + Send + Sync>(
    deformed: &LabelImage<T>,
    params: &LayoutParams,
    target_w: usize,
    target_h: usize,
) -> Result<LabelImage<T>> {
    if target_w < deformed.width || target_h < deformed.height {
        return Err(Error::InvalidParameter(format!(
            "target {target_w}x{target_h} is smaller than the sensor {}x{}",
            deformed.width, deformed.height
        )));
    }
    let grid = SensorGrid::new(deformed.width, deformed.height)?;
    let values = (0..target_w * target_h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % target_w, i / target_w);
            let q = Point::new(
                -1.0 + (2 * x + 1) as f64 / target_w as f64,
                -1.0 + (2 * y + 1) as f64 / target_h as f64,
            );
            let u = params.apply_inverse(q)?;
            let k = grid.locate(u);
            Ok(*deformed.get(k.k1, k.k2))
        })
        .collect::<Result<Vec<T>>>()?;
    LabelImage::new(target_w, target_h, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{LayoutKind, PixelIndex};
    use crate::sensor::{pixel_volume, SamplingConfig};
    use std::collections::HashSet;

    #[test]
    fn identity_is_block_replication() {
        let src = LabelImage::new(2, 2, vec![1u8, 2, 3, 4]).unwrap();
        let out = backwarp(&src, &LayoutParams::identity(), 4, 4).unwrap();
        #[rustfmt::skip]
        let expected = vec![
            1, 1, 2, 2,
            1, 1, 2, 2,
            3, 3, 4, 4,
            3, 3, 4, 4,
        ];
        assert_eq!(out.values(), expected.as_slice());
    }

    #[test]
    fn single_pixel_sensor_fills_target() {
        let src = LabelImage::new(1, 1, vec![[9u8, 8, 7]]).unwrap();
        let params = LayoutParams::from_theta(LayoutKind::Curvilinear, [0.7, -0.4]).unwrap();
        let out = backwarp(&src, &params, 5, 3).unwrap();
        assert!(out.values().iter().all(|v| *v == [9, 8, 7]));
    }

    #[test]
    fn region_areas_track_pixel_volumes() {
        let grid = SensorGrid::new(4, 4).unwrap();
        let labels: Vec<u16> = (0..16).collect();
        let src = LabelImage::new(4, 4, labels).unwrap();
        let params = LayoutParams::from_theta(LayoutKind::Rectangular, [0.5, 0.5]).unwrap();
        let (tw, th) = (64, 64);
        let out = backwarp(&src, &params, tw, th).unwrap();
        let mut counts = [0usize; 16];
        for &v in out.values() {
            counts[v as usize] += 1;
        }
        let center = counts[grid.linear_index(PixelIndex::new(1, 1))];
        let corner = counts[grid.linear_index(PixelIndex::new(0, 0))];
        assert!(center < corner, "center {center} corner {corner}");
        let cell = 4.0 / (tw * th) as f64;
        for k in grid.pixels() {
            let area = counts[grid.linear_index(k)] as f64 * cell;
            let vol = pixel_volume(&grid, k, &params, &SamplingConfig::default()).unwrap();
            assert!((area - vol).abs() / vol < 0.05, "{k:?}: {area} vs {vol}");
        }
    }

    #[test]
    fn output_values_come_from_input() {
        let src = LabelImage::new(3, 2, vec![10u8, 20, 30, 40, 50, 60]).unwrap();
        let params = LayoutParams::from_theta(LayoutKind::Curvilinear, [0.6, 0.3]).unwrap();
        let out = backwarp(&src, &params, 17, 11).unwrap();
        let allowed: HashSet<u8> = src.values().iter().copied().collect();
        assert!(out.values().iter().all(|v| allowed.contains(v)));
        assert_eq!(out.values().len(), 17 * 11);
    }

    #[test]
    fn identity_round_trip_through_box_downsampling() {
        let vals: Vec<u32> = (0..12).map(|i| i * 7 + 1).collect();
        let src = LabelImage::new(4, 3, vals.clone()).unwrap();
        let out = backwarp(&src, &LayoutParams::identity(), 12, 9).unwrap();
        for ky in 0..3 {
            for kx in 0..4 {
                let mut sum = 0u32;
                for y in 0..3 {
                    for x in 0..3 {
                        sum += out.get(3 * kx + x, 3 * ky + y);
                    }
                }
                assert_eq!(sum / 9, vals[ky * 4 + kx]);
            }
        }
    }

    #[test]
    fn rejects_small_targets_and_bad_labels() {
        let src = LabelImage::new(4, 4, vec![0u8; 16]).unwrap();
        assert!(backwarp(&src, &LayoutParams::identity(), 2, 8).is_err());
        assert!(LabelImage::new(2, 2, vec![0u8; 3]).is_err());
        let labels = LabelImage::new(2, 1, vec![3u8, 10]).unwrap();
        assert!(labels.check_classes(10).is_err());
        assert!(labels.check_classes(11).is_ok());
    }
}
