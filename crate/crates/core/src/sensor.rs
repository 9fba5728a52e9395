//! Forward pass: each pixel value is the `|det J_phi|`-weighted mean of the
//! radiance over its uniform pixel, estimated on an `n x n` stratified
//! sample set.
//!
//! Numerator and denominator share one sample set per pixel, so a constant
//! field reproduces itself exactly. Pixel volumes come from the deformed
//! pixel boundary (Green's theorem) rather than the interior samples, whose
//! `|det J|` varies too strongly for 64 samples to resolve; shared sides
//! cancel, so the volumes always sum to the sensor area. Sample positions depend only on the seed,
//! the pixel index and the config, never on thread scheduling.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Edge, EdgeId, LayoutParams, PixelIndex, PixelRegion, Point, SensorGrid};
use crate::radiance::{RadianceField, Rgb};

const STREAM_PIXEL: u64 = 0x5049_5845_4c00_0001;
const STREAM_EDGE: u64 = 0x4544_4745_0000_0002;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// `n`, giving an `n x n` stratified grid per pixel.
    pub interior_strata: usize,
    /// Samples along each pixel edge for the boundary flux.
    pub boundary_samples: usize,
    pub rng_seed: u64,
    /// Jittered strata when true, stratum midpoints otherwise.
    pub jitter: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            interior_strata: 8,
            boundary_samples: 32,
            rng_seed: 0,
            jitter: true,
        }
    }
}

impl SamplingConfig {
    pub fn quadrature() -> Self {
        SamplingConfig {
            jitter: false,
            ..Default::default()
        }
    }

    pub fn with_seed(self, rng_seed: u64) -> Self {
        SamplingConfig { rng_seed, ..self }
    }

    /// Multiplies both sample counts by `factor`.
    pub fn scaled(self, factor: usize) -> Self {
        SamplingConfig {
            interior_strata: self.interior_strata * factor,
            boundary_samples: self.boundary_samples * factor,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.interior_strata < 1 {
            return Err(Error::InvalidParameter("interior_strata must be >= 1".into()));
        }
        if self.boundary_samples < 2 {
            return Err(Error::InvalidParameter("boundary_samples must be >= 2".into()));
        }
        Ok(())
    }
}

/// Constant pixel response `W`. It cancels in the pixel quotient and has no
/// theta dependence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorResponse {
    weight: f64,
}

impl Default for SensorResponse {
    fn default() -> Self {
        SensorResponse { weight: 1.0 }
    }
}

impl SensorResponse {
    pub fn constant(weight: f64) -> Result<Self> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sensor response must be positive, got {weight}"
            )));
        }
        Ok(SensorResponse { weight })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn is_constant(&self) -> bool {
        true
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a tuple of stream coordinates.
pub(crate) fn stream_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |h, &v| splitmix64(h ^ splitmix64(v)))
}

pub(crate) fn pixel_rng(seed: u64, k: PixelIndex) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, &[STREAM_PIXEL, k.k1 as u64, k.k2 as u64]))
}

pub(crate) fn edge_rng(seed: u64, key: (u64, u64, u64)) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, &[STREAM_EDGE, key.0, key.1, key.2]))
}

/// `count` stratified positions in `[0, 1)`: one per stratum, jittered or at
/// the stratum midpoint.
pub(crate) fn strata_1d(count: usize, rng: Option<&mut ChaCha8Rng>) -> Vec<f64> {
    let n = count as f64;
    match rng {
        Some(rng) => (0..count).map(|i| (i as f64 + rng.gen::<f64>()) / n).collect(),
        None => (0..count).map(|i| (i as f64 + 0.5) / n).collect(),
    }
}

/// Interior samples of one pixel: deformed positions `phi(u_i)` and weights
/// `|det J_phi(u_i)|`.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelSamples {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// `vol(U_k)`.
    pub uniform_area: f64,
}

impl PixelSamples {
    fn build(grid: &SensorGrid, k: PixelIndex, params: &LayoutParams, cfg: &SamplingConfig) -> Result<Self> {
        let bounds = grid.uniform_pixel_bounds(k)?;
        let n = cfg.interior_strata;
        let mut rng = cfg.jitter.then(|| pixel_rng(cfg.rng_seed, k));
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for b in 0..n {
            for a in 0..n {
                let (ja, jb) = match rng.as_mut() {
                    Some(r) => (r.gen::<f64>(), r.gen::<f64>()),
                    None => (0.5, 0.5),
                };
                let u = bounds.lerp((a as f64 + ja) / n as f64, (b as f64 + jb) / n as f64);
                points.push(params.apply(u));
                weights.push(params.jacobian_det(u));
            }
        }
        Ok(PixelSamples {
            points,
            weights,
            uniform_area: 4.0 / grid.pixel_count() as f64,
        })
    }

    /// Monte-Carlo estimate `vol(U_k) mean |det J|` of `vol(A_k)`.
    pub fn mc_volume(&self) -> f64 {
        self.uniform_area * self.weights.iter().sum::<f64>() / self.weights.len() as f64
    }

    /// Pixel value `f / g`, the `W |det J|`-weighted radiance mean.
    ///
    /// The mean is accumulated relative to the first sample, so a constant
    /// field yields that constant exactly.
    fn integrate(&self, field: &dyn RadianceField, response: &SensorResponse) -> Rgb {
        let w = response.weight();
        let reference = field.sample(self.points[0]);
        let mut centered = Rgb::zeros();
        let mut total = w * self.weights[0];
        for (p, &det) in self.points.iter().zip(&self.weights).skip(1) {
            centered += (field.sample(*p) - reference) * (w * det);
            total += w * det;
        }
        let mean = reference + centered / total;
        mean.map(|v| v.clamp(0.0, 1.0))
    }
}

/// `vol(A_k)` for every pixel, from the area moments of the deformed sides.
fn boundary_volumes(grid: &SensorGrid, params: &LayoutParams) -> Vec<f64> {
    if params.is_identity_map() {
        return vec![4.0 / grid.pixel_count() as f64; grid.pixel_count()];
    }
    let moments: Vec<f64> = EdgeId::all(grid)
        .into_par_iter()
        .map(|id| id.boundary(grid, *params).area_moment())
        .collect();
    grid.pixels()
        .map(|k| {
            0.5 * Edge::ALL
                .iter()
                .map(|&e| {
                    let (id, sign) = EdgeId::of_pixel_edge(k, e);
                    sign * moments[id.position(grid)]
                })
                .sum::<f64>()
        })
        .collect()
}

/// Interior sample geometry for every pixel of a grid under one layout.
///
/// Geometry does not depend on the radiance, so a plan can be reused across
/// many images that share the same parameters and seed.
#[derive(Clone, Debug)]
pub struct SamplePlan {
    grid: SensorGrid,
    params: LayoutParams,
    cfg: SamplingConfig,
    response: SensorResponse,
    pixels: Vec<PixelSamples>,
    volumes: Vec<f64>,
}

impl SamplePlan {
    pub fn new(grid: SensorGrid, params: LayoutParams, cfg: SamplingConfig) -> Result<Self> {
        SamplePlan::with_response(grid, params, cfg, SensorResponse::default())
    }

    pub fn with_response(
        grid: SensorGrid,
        params: LayoutParams,
        cfg: SamplingConfig,
        response: SensorResponse,
    ) -> Result<Self> {
        cfg.validate()?;
        let pixels = (0..grid.pixel_count())
            .into_par_iter()
            .map(|i| PixelSamples::build(&grid, grid.pixel_at(i), &params, &cfg))
            .collect::<Result<Vec<_>>>()?;
        let volumes = boundary_volumes(&grid, &params);
        if let Some(&v) = volumes.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::CollapsedPixel(v));
        }
        Ok(SamplePlan {
            grid,
            params,
            cfg,
            response,
            pixels,
            volumes,
        })
    }

    pub fn grid(&self) -> &SensorGrid {
        &self.grid
    }

    pub fn params(&self) -> &LayoutParams {
        &self.params
    }

    pub fn config(&self) -> &SamplingConfig {
        &self.cfg
    }

    pub fn response(&self) -> &SensorResponse {
        &self.response
    }

    pub fn pixel(&self, k: PixelIndex) -> &PixelSamples {
        &self.pixels[self.grid.linear_index(k)]
    }

    pub fn pixels(&self) -> &[PixelSamples] {
        &self.pixels
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn volume(&self, k: PixelIndex) -> f64 {
        self.volumes[self.grid.linear_index(k)]
    }

    /// Runs the forward pass for `field`, returning the image and the
    /// quantities the backward pass reuses.
    pub fn render(self: &Arc<Self>, field: &dyn RadianceField) -> (SensorImage, ForwardCache) {
        let values = self
            .pixels
            .par_iter()
            .map(|px| px.integrate(field, &self.response))
            .collect();
        self.finish(values)
    }

    /// Forward pass on the calling thread only.
    pub fn render_serial(self: &Arc<Self>, field: &dyn RadianceField) -> (SensorImage, ForwardCache) {
        let values = self.pixels.iter().map(|px| px.integrate(field, &self.response)).collect();
        self.finish(values)
    }

    fn finish(self: &Arc<Self>, values: Vec<Rgb>) -> (SensorImage, ForwardCache) {
        let w = self.response.weight();
        let energies = values.iter().zip(&self.volumes).map(|(v, &g)| v * (w * g)).collect();
        let cache = ForwardCache {
            plan: Arc::clone(self),
            values: values.clone(),
            energies,
        };
        let image = SensorImage {
            grid: self.grid,
            pixels: values,
            volumes: self.volumes.clone(),
        };
        (image, cache)
    }
}

/// Retained forward-pass state: the sample plan, pixel values and energies
/// `f = integral of W L |det J|` over `U_k`.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub plan: Arc<SamplePlan>,
    /// Pixel values `I_k = f / g`.
    pub values: Vec<Rgb>,
    pub energies: Vec<Rgb>,
}

impl ForwardCache {
    pub fn volume(&self, k: PixelIndex) -> f64 {
        self.plan.volume(k)
    }
}

/// Simulated sensor output, indexed row-major by `(k1, k2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorImage {
    pub grid: SensorGrid,
    pub pixels: Vec<Rgb>,
    /// Estimated `vol(A_k(theta))` per pixel.
    pub volumes: Vec<f64>,
}

impl SensorImage {
    pub fn pixel(&self, k: PixelIndex) -> Rgb {
        self.pixels[self.grid.linear_index(k)]
    }

    pub fn volumes_sum(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Interleaved RGB values, row-major.
    pub fn to_interleaved(&self) -> Vec<f64> {
        self.pixels.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
    }
}

pub fn simulate(
    field: &dyn RadianceField,
    grid: SensorGrid,
    params: LayoutParams,
    cfg: SamplingConfig,
) -> Result<SensorImage> {
    Ok(simulate_cached(field, grid, params, cfg)?.0)
}

pub fn simulate_cached(
    field: &dyn RadianceField,
    grid: SensorGrid,
    params: LayoutParams,
    cfg: SamplingConfig,
) -> Result<(SensorImage, ForwardCache)> {
    let plan = Arc::new(SamplePlan::new(grid, params, cfg)?);
    Ok(plan.render(field))
}

/// `vol(A_k(theta))` from the area moments of the pixel's four deformed sides.
pub fn pixel_volume(
    grid: &SensorGrid,
    k: PixelIndex,
    params: &LayoutParams,
    cfg: &SamplingConfig,
) -> Result<f64> {
    cfg.validate()?;
    let region = PixelRegion::new(grid, k, *params)?;
    if params.is_identity_map() {
        return Ok(region.uniform_bounds.area());
    }
    Ok(0.5 * Edge::ALL.iter().map(|&e| region.boundary(e).area_moment()).sum::<f64>())
}
