//! Shared fixtures for the benchmarks.

use pixlayout::{synthetic_dataset, AnalyticField, Rgb, SourceImage};

/// A 28x28 grayscale digit-like image.
pub fn digit_image() -> SourceImage {
    synthetic_dataset(1, 3).image(0)
}

pub fn blob() -> AnalyticField {
    AnalyticField::blob([0.2, -0.1], 0.35)
}

/// Deterministic upstream cotangents in `[-1, 1]`.
pub fn upstream(pixels: usize) -> Vec<Rgb> {
    (0..pixels)
        .map(|i| {
            let t = i as f64 * 0.618_033_988_75;
            Rgb::new((t.fract() * 2.0) - 1.0, ((t * 3.0).fract() * 2.0) - 1.0, ((t * 7.0).fract() * 2.0) - 1.0)
        })
        .collect()
}
