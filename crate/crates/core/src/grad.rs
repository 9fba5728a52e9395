//! Backward pass: `d I_k / d theta` from the moving-domain derivative of the
//! pixel integrals.
//!
//! With `I_k = f / g`, `f = integral over A_k of W L` and `g = integral over A_k of W`,
//! the transport theorem gives `f' = Q_int + Q_bound` where `Q_int` vanishes
//! for a theta-independent response and
//!
//! ```text
//! Q_bound = integral over dA_k of W L <dr/dtheta, n> ds
//!         = integral_0^1 W L(r(t)) <dr/dtheta, (r'_2, -r'_1)> dt
//! ```
//!
//! `g'` is the same integral with `L = 1`. The radiance is only ever sampled,
//! never differentiated.
//!
//! Neighboring pixels traverse a shared edge in opposite directions, so each
//! edge is integrated once and applied with opposite signs.

use std::sync::Arc;

use nalgebra::{Matrix3x2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{
    BoundaryParam, Edge, EdgeId, LayoutKind, LayoutParams, PixelIndex, PixelRegion, Point,
    SensorGrid, MIN_TANGENT_NORM,
};
use crate::radiance::{RadianceField, Rgb};
use crate::sensor::{edge_rng, strata_1d, ForwardCache, SamplePlan, SamplingConfig, SensorImage, SensorResponse};

/// Volume estimates below this are treated as collapsed pixels.
pub const MIN_PIXEL_VOLUME: f64 = 1e-12;

/// Per-pixel Jacobians and the contracted loss gradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientRecord {
    /// `d I_k / d theta` (RGB x theta component), row-major over pixels.
    pub dpixel_dtheta: Vec<Matrix3x2<f64>>,
    pub dloss_dtheta: [f64; 2],
    pub dloss_dtheta_raw: [f64; 2],
}

impl GradientRecord {
    fn zeros(n: usize) -> Self {
        GradientRecord {
            dpixel_dtheta: vec![Matrix3x2::zeros(); n],
            dloss_dtheta: [0.0; 2],
            dloss_dtheta_raw: [0.0; 2],
        }
    }
}

/// Boundary integrals over one pixel edge.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFlux {
    pub pixel: PixelIndex,
    pub edge: Edge,
    /// `integral of W L <dr/dtheta_j, n> ds` per theta component (columns).
    pub flux_f: Matrix3x2<f64>,
    /// `integral of W <dr/dtheta_j, n> ds`.
    pub flux_g: Vector2<f64>,
}

/// Boundary sample geometry of one edge: points `r(t_m)` and the unnormalized
/// normal velocities `<dr/dtheta_j, (r'_2, -r'_1)>`.
#[derive(Clone, Debug)]
struct EdgeSamples {
    points: Vec<Point>,
    normal_velocity: Vec<[f64; 2]>,
    /// All normal velocities are exactly zero (outer sensor edges).
    stationary: bool,
}

impl EdgeSamples {
    fn build(boundary: &BoundaryParam, ts: &[f64]) -> Result<Self> {
        let mut points = Vec::with_capacity(ts.len());
        let mut normal_velocity = Vec::with_capacity(ts.len());
        for &t in ts {
            let len = boundary.line_element(t);
            if !(len >= MIN_TANGENT_NORM) {
                return Err(Error::DegenerateTangent(len));
            }
            points.push(boundary.point(t));
            normal_velocity.push(boundary.normal_velocity(t));
        }
        let stationary = normal_velocity.iter().all(|v| v[0] == 0.0 && v[1] == 0.0);
        Ok(EdgeSamples {
            points,
            normal_velocity,
            stationary,
        })
    }

    /// Quadrature of the flux integrand, with the radiance taken relative to
    /// the first boundary sample.
    fn integrate(&self, field: &dyn RadianceField, w: f64) -> CenteredFlux {
        if self.stationary {
            return CenteredFlux::default();
        }
        let m = self.points.len() as f64;
        let reference = field.sample(self.points[0]);
        let mut centered = Matrix3x2::zeros();
        let mut flux_g = Vector2::zeros();
        for (i, (p, nv)) in self.points.iter().zip(&self.normal_velocity).enumerate() {
            let nv = Vector2::new(nv[0], nv[1]);
            flux_g += nv;
            if i > 0 {
                centered += (field.sample(*p) - reference) * nv.transpose();
            }
        }
        CenteredFlux {
            reference,
            centered: centered * (w / m),
            flux_g: flux_g * (w / m),
        }
    }
}

/// `flux_f = centered + reference * flux_g^T`.
#[derive(Clone, Copy, Debug, Default)]
struct CenteredFlux {
    reference: Rgb,
    centered: Matrix3x2<f64>,
    flux_g: Vector2<f64>,
}

impl CenteredFlux {
    fn flux_f(&self) -> Matrix3x2<f64> {
        self.centered + self.reference * self.flux_g.transpose()
    }

    /// This edge's share of `f' - I g'` for a pixel with value `value`.
    fn numerator(&self, value: &Rgb) -> Matrix3x2<f64> {
        self.centered + (self.reference - value) * self.flux_g.transpose()
    }
}

/// Canonical-direction sample parameters of an edge.
fn edge_ts(cfg: &SamplingConfig, id: EdgeId) -> Vec<f64> {
    let mut rng = cfg.jitter.then(|| edge_rng(cfg.rng_seed, id.stream_key()));
    strata_1d(cfg.boundary_samples, rng.as_mut())
}

/// `Q_int` under a constant response: identically zero.
fn interior_term(response: &SensorResponse) -> Matrix3x2<f64> {
    assert!(
        response.is_constant(),
        "a theta-dependent pixel response needs a nonzero interior term"
    );
    Matrix3x2::zeros()
}

fn quotient(numerator: Matrix3x2<f64>, g: f64) -> Result<Matrix3x2<f64>> {
    if !(g >= MIN_PIXEL_VOLUME) {
        return Err(Error::CollapsedPixel(g));
    }
    Ok(numerator / g)
}

/// Boundary sample geometry for every edge of a grid under one layout.
#[derive(Clone, Debug)]
pub struct BoundaryPlan {
    plan: Arc<SamplePlan>,
    edges: Vec<EdgeSamples>,
}

impl BoundaryPlan {
    pub fn new(plan: Arc<SamplePlan>) -> Result<Self> {
        let grid = *plan.grid();
        let params = *plan.params();
        let cfg = *plan.config();
        let edges = EdgeId::all(&grid)
            .into_par_iter()
            .map(|id| EdgeSamples::build(&id.boundary(&grid, params), &edge_ts(&cfg, id)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundaryPlan { plan, edges })
    }

    pub fn sample_plan(&self) -> &Arc<SamplePlan> {
        &self.plan
    }

    /// Canonical fluxes of all edges for `field`, in `EdgeId::all` order.
    fn fluxes(&self, field: &dyn RadianceField, parallel: bool) -> Vec<CenteredFlux> {
        let w = self.plan.response().weight();
        if parallel {
            self.edges.par_iter().map(|e| e.integrate(field, w)).collect()
        } else {
            self.edges.iter().map(|e| e.integrate(field, w)).collect()
        }
    }

    /// `d I_k / d theta` for every pixel using the shared-edge scheme.
    pub fn pixel_jacobians(
        &self,
        field: &dyn RadianceField,
        image: &SensorImage,
        parallel: bool,
    ) -> Result<Vec<Matrix3x2<f64>>> {
        let plan = &self.plan;
        let grid = plan.grid();
        if image.pixels.len() != grid.pixel_count() {
            return Err(Error::ShapeMismatch {
                expected: grid.pixel_count(),
                actual: image.pixels.len(),
            });
        }
        if plan.params().kind() == LayoutKind::Identity {
            return Ok(vec![Matrix3x2::zeros(); grid.pixel_count()]);
        }
        let fluxes = self.fluxes(field, parallel);
        let w = plan.response().weight();
        let q_int = interior_term(plan.response());
        grid.pixels()
            .map(|k| {
                let value = image.pixel(k);
                let mut numerator = q_int;
                for edge in Edge::ALL {
                    let (id, sign) = EdgeId::of_pixel_edge(k, edge);
                    numerator += fluxes[id.position(grid)].numerator(&value) * sign;
                }
                quotient(numerator, w * plan.volume(k))
            })
            .collect()
    }

    /// Full backward pass: contracts `d I_k / d theta` with the upstream
    /// cotangents `d Loss / d I_k`.
    pub fn backward(
        &self,
        field: &dyn RadianceField,
        image: &SensorImage,
        upstream: &[Rgb],
        parallel: bool,
    ) -> Result<GradientRecord> {
        let grid = self.plan.grid();
        if upstream.len() != grid.pixel_count() {
            return Err(Error::ShapeMismatch {
                expected: grid.pixel_count(),
                actual: upstream.len(),
            });
        }
        let jacobians = self.pixel_jacobians(field, image, parallel)?;
        Ok(contract(jacobians, upstream, self.plan.params()))
    }
}

fn contract(jacobians: Vec<Matrix3x2<f64>>, upstream: &[Rgb], params: &LayoutParams) -> GradientRecord {
    if params.kind() == LayoutKind::Identity {
        return GradientRecord::zeros(jacobians.len());
    }
    let mut dloss = [0.0; 2];
    for (jac, up) in jacobians.iter().zip(upstream) {
        for (j, d) in dloss.iter_mut().enumerate() {
            *d += jac.column(j).dot(up);
        }
    }
    let scale = params.dtheta_draw();
    GradientRecord {
        dpixel_dtheta: jacobians,
        dloss_dtheta: dloss,
        dloss_dtheta_raw: [dloss[0] * scale[0], dloss[1] * scale[1]],
    }
}

/// Flux through one side of a pixel, integrated along the pixel's own
/// counter-clockwise parameterization.
pub fn edge_flux(
    region: &PixelRegion,
    edge: Edge,
    field: &dyn RadianceField,
    cfg: &SamplingConfig,
) -> Result<EdgeFlux> {
    edge_flux_with_response(region, edge, field, cfg, &SensorResponse::default())
}

fn local_edge_flux(
    region: &PixelRegion,
    edge: Edge,
    field: &dyn RadianceField,
    cfg: &SamplingConfig,
    response: &SensorResponse,
) -> Result<CenteredFlux> {
    cfg.validate()?;
    let (id, sign) = EdgeId::of_pixel_edge(region.index, edge);
    // Same physical sample points as the shared scheme, traversed in the
    // pixel's own direction.
    let ts: Vec<f64> = edge_ts(cfg, id)
        .into_iter()
        .map(|t| if sign > 0.0 { t } else { 1.0 - t })
        .collect();
    Ok(EdgeSamples::build(&region.boundary(edge), &ts)?.integrate(field, response.weight()))
}

fn edge_flux_with_response(
    region: &PixelRegion,
    edge: Edge,
    field: &dyn RadianceField,
    cfg: &SamplingConfig,
    response: &SensorResponse,
) -> Result<EdgeFlux> {
    let flux = local_edge_flux(region, edge, field, cfg, response)?;
    Ok(EdgeFlux {
        pixel: region.index,
        edge,
        flux_f: flux.flux_f(),
        flux_g: flux.flux_g,
    })
}

/// `d I_k / d theta` for one pixel, integrating its four edges independently.
pub fn dpixel_dtheta(
    region: &PixelRegion,
    field: &dyn RadianceField,
    cache: &ForwardCache,
) -> Result<Matrix3x2<f64>> {
    let plan = &cache.plan;
    if region.layout.kind() == LayoutKind::Identity {
        return Ok(Matrix3x2::zeros());
    }
    let value = cache.values[plan.grid().linear_index(region.index)];
    let mut numerator = interior_term(plan.response());
    for edge in Edge::ALL {
        numerator += local_edge_flux(region, edge, field, plan.config(), plan.response())?.numerator(&value);
    }
    quotient(numerator, plan.response().weight() * cache.volume(region.index))
}

/// Backward pass reusing each shared edge for both adjacent pixels.
pub fn backward(
    image: &SensorImage,
    upstream: &[Rgb],
    field: &dyn RadianceField,
    cache: &ForwardCache,
) -> Result<GradientRecord> {
    BoundaryPlan::new(Arc::clone(&cache.plan))?.backward(field, image, upstream, true)
}

/// Backward pass integrating all four edges of every pixel separately.
pub fn backward_per_pixel(
    image: &SensorImage,
    upstream: &[Rgb],
    field: &dyn RadianceField,
    cache: &ForwardCache,
) -> Result<GradientRecord> {
    let plan = &cache.plan;
    let grid: SensorGrid = *plan.grid();
    if upstream.len() != grid.pixel_count() || image.pixels.len() != grid.pixel_count() {
        return Err(Error::ShapeMismatch {
            expected: grid.pixel_count(),
            actual: upstream.len().min(image.pixels.len()),
        });
    }
    let jacobians = (0..grid.pixel_count())
        .into_par_iter()
        .map(|i| {
            let region = PixelRegion::new(&grid, grid.pixel_at(i), *plan.params())?;
            dpixel_dtheta(&region, field, cache)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(contract(jacobians, upstream, plan.params()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::LayoutKind;
    use crate::radiance::{AnalyticField, FieldDescriptor, SourceImage};
    use crate::sensor::{simulate, simulate_cached};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(r: usize) -> SensorGrid {
        SensorGrid::new(r, r).unwrap()
    }

    fn params(kind: LayoutKind, t: [f64; 2]) -> LayoutParams {
        LayoutParams::from_theta(kind, t).unwrap()
    }

    fn random_upstream(n: usize, seed: u64) -> Vec<Rgb> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Rgb::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    /// Central differences of `<upstream, I(theta)>` with fixed sample positions.
    fn fd_scalar(
        field: &dyn RadianceField,
        g: SensorGrid,
        kind: LayoutKind,
        theta: [f64; 2],
        cfg: SamplingConfig,
        upstream: &[Rgb],
        h: f64,
    ) -> [f64; 2] {
        let objective = |t: [f64; 2]| {
            let img = simulate(field, g, params(kind, t), cfg).unwrap();
            img.pixels.iter().zip(upstream).map(|(p, u)| p.dot(u)).sum::<f64>()
        };
        let mut out = [0.0; 2];
        for j in 0..2 {
            let (mut tp, mut tm) = (theta, theta);
            tp[j] += h;
            tm[j] -= h;
            out[j] = (objective(tp) - objective(tm)) / (2.0 * h);
        }
        out
    }

    fn rel_err(a: [f64; 2], b: [f64; 2]) -> f64 {
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let n = (a[0].powi(2) + a[1].powi(2)).sqrt().max((b[0].powi(2) + b[1].powi(2)).sqrt());
        d / n
    }

    /// Panics if anything asks it for a spatial derivative.
    struct NoGradient(AnalyticField);

    impl RadianceField for NoGradient {
        fn sample(&self, p: Point) -> Rgb {
            self.0.sample(p)
        }
        fn descriptor(&self) -> FieldDescriptor {
            self.0.descriptor()
        }
        fn spatial_gradient(&self, _p: Point) -> Result<Matrix3x2<f64>> {
            panic!("spatial gradient requested");
        }
    }

    #[test]
    fn constant_field_has_exactly_zero_gradient() {
        let field = AnalyticField::constant(0.2, 0.9, 0.5);
        for kind in [LayoutKind::Curvilinear, LayoutKind::Rectangular] {
            for (seed, theta) in [(0, [0.3, -0.2]), (5, [0.9, 0.9]), (7, [-0.6, 0.1])] {
                let cfg = SamplingConfig::default().with_seed(seed);
                let (img, cache) =
                    simulate_cached(&field, grid(4), params(kind, theta), cfg).unwrap();
                let up = random_upstream(16, seed);
                let rec = backward(&img, &up, &field, &cache).unwrap();
                assert!(rec.dpixel_dtheta.iter().all(|m| *m == Matrix3x2::zeros()));
                assert_eq!(rec.dloss_dtheta, [0.0, 0.0]);
            }
        }
    }

    #[test]
    fn identity_kind_has_zero_gradient() {
        let field = AnalyticField::blob([0.0, 0.0], 0.3);
        let (img, cache) = simulate_cached(
            &field,
            grid(4),
            LayoutParams::from_raw(LayoutKind::Identity, [0.5, 0.5]).unwrap(),
            SamplingConfig::default(),
        )
        .unwrap();
        let rec = backward(&img, &random_upstream(16, 1), &field, &cache).unwrap();
        assert_eq!(rec.dloss_dtheta, [0.0, 0.0]);
        assert_eq!(rec.dloss_dtheta_raw, [0.0, 0.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_loss_gradient() {
        let field = AnalyticField::blob([0.1, 0.0], 0.3);
        let (img, cache) = simulate_cached(
            &field,
            grid(4),
            params(LayoutKind::Curvilinear, [0.3, 0.3]),
            SamplingConfig::default(),
        )
        .unwrap();
        let rec = backward(&img, &vec![Rgb::zeros(); 16], &field, &cache).unwrap();
        assert_eq!(rec.dloss_dtheta, [0.0, 0.0]);
        assert!(backward(&img, &vec![Rgb::zeros(); 15], &field, &cache).is_err());
    }

    #[test]
    fn constant_field_edge_flux_factors() {
        let field = AnalyticField::constant(0.25, 0.5, 1.0);
        let g = grid(3);
        let p = params(LayoutKind::Curvilinear, [0.4, 0.7]);
        let cfg = SamplingConfig::default();
        for k in g.pixels() {
            let region = PixelRegion::new(&g, k, p).unwrap();
            for edge in Edge::ALL {
                let flux = edge_flux(&region, edge, &field, &cfg).unwrap();
                let expected = Rgb::new(0.25, 0.5, 1.0) * flux.flux_g.transpose();
                assert_eq!(flux.flux_f, expected);
            }
        }
    }

    #[test]
    fn outer_edges_carry_no_flux() {
        let field = AnalyticField::blob([0.0, 0.0], 0.5);
        let g = grid(3);
        for kind in [LayoutKind::Curvilinear, LayoutKind::Rectangular] {
            let region = PixelRegion::new(&g, PixelIndex::new(0, 0), params(kind, [0.0, 0.0])).unwrap();
            for edge in [Edge::Bottom, Edge::Left] {
                let flux = edge_flux(&region, edge, &field, &SamplingConfig::default()).unwrap();
                assert_eq!(flux.flux_g, Vector2::zeros());
                assert_eq!(flux.flux_f, Matrix3x2::zeros());
            }
            // Interior edges move even at theta = 0.
            let flux = edge_flux(&region, Edge::Right, &field, &SamplingConfig::default()).unwrap();
            assert!(flux.flux_g[0].abs() > 0.0);
        }
    }

    #[test]
    fn shared_edges_cancel_in_total_volume_derivative() {
        let field = AnalyticField::checkerboard(2.0);
        let g = grid(5);
        let p = params(LayoutKind::Curvilinear, [0.45, -0.3]);
        let cfg = SamplingConfig::default().with_seed(3);
        let mut total = Vector2::zeros();
        for k in g.pixels() {
            let region = PixelRegion::new(&g, k, p).unwrap();
            for edge in Edge::ALL {
                total += edge_flux(&region, edge, &field, &cfg).unwrap().flux_g;
            }
        }
        assert!(total.norm() < 1e-12, "{total:?}");
    }

    #[test]
    fn central_edge_flux_matches_area_derivative() {
        // Rectangular theta_1 moves only vertical lines; on a 2x2 grid the
        // central vertical line x = 0 is fixed for theta_1 (phi(0) = 0), so
        // use a 3x2 grid whose interior vertical lines do move.
        let field = AnalyticField::blob([0.15, -0.1], 0.4);
        let g = SensorGrid::new(3, 2).unwrap();
        let theta = [0.2, 0.0];
        let k = PixelIndex::new(0, 0);
        let region = PixelRegion::new(&g, k, params(LayoutKind::Rectangular, theta)).unwrap();
        let cfg = SamplingConfig {
            boundary_samples: 256,
            jitter: false,
            ..Default::default()
        };
        let flux = edge_flux(&region, Edge::Right, &field, &cfg).unwrap();

        // Oracle: d/dtheta_1 of the integral of L over A_k(theta), which for
        // this pixel is [-1, phi_1(x1)] x [-1, 0]; only the right side moves.
        let bounds = g.uniform_pixel_bounds(k).unwrap();
        let phi1 = |t: f64| {
            let x = bounds.x1;
            x * (t - 1.0) / (2.0 * t * x.abs() - t - 1.0)
        };
        let area_integral = |right: f64| {
            let n = 2000;
            let (x0, y0, y1) = (-1.0, -1.0, 0.0);
            let (hx, hy) = ((right - x0) / n as f64, (y1 - y0) / n as f64);
            let mut acc = Rgb::zeros();
            for j in 0..n {
                for i in 0..n {
                    let p = Point::new(x0 + (i as f64 + 0.5) * hx, y0 + (j as f64 + 0.5) * hy);
                    acc += field.sample(p);
                }
            }
            acc * (hx * hy)
        };
        let h = 1e-4;
        let fd = (area_integral(phi1(theta[0] + h)) - area_integral(phi1(theta[0] - h))) / (2.0 * h);
        let analytic = flux.flux_f.column(0).into_owned();
        let err = (analytic - fd).norm() / fd.norm();
        assert!(err < 1e-2, "analytic {analytic:?} fd {fd:?} err {err}");
    }

    #[test]
    fn pixel_jacobians_match_finite_differences() {
        let field = AnalyticField::blob([0.0, 0.0], 0.35);
        let g = grid(4);
        let theta = [0.3, -0.2];
        let kind = LayoutKind::Curvilinear;
        let cfg = SamplingConfig {
            interior_strata: 64,
            boundary_samples: 256,
            jitter: false,
            ..Default::default()
        };
        let (img, cache) = simulate_cached(&field, g, params(kind, theta), cfg).unwrap();
        let analytic = BoundaryPlan::new(Arc::clone(&cache.plan))
            .unwrap()
            .pixel_jacobians(&field, &img, true)
            .unwrap();
        let h = 1e-4;
        let (mut tp, mut tm) = (theta, theta);
        let mut worst: f64 = 0.0;
        for j in 0..2 {
            tp[j] += h;
            tm[j] -= h;
            let ip = simulate(&field, g, params(kind, tp), cfg).unwrap();
            let im = simulate(&field, g, params(kind, tm), cfg).unwrap();
            tp = theta;
            tm = theta;
            for i in 0..g.pixel_count() {
                let fd = (ip.pixels[i] - im.pixels[i]) / (2.0 * h);
                let a = analytic[i].column(j);
                for c in 0..3 {
                    if fd[c].abs() > 1e-3 {
                        worst = worst.max((a[c] - fd[c]).abs() / fd[c].abs());
                    } else {
                        assert!((a[c] - fd[c]).abs() < 1e-5);
                    }
                }
            }
        }
        assert!(worst < 1e-2, "worst relative error {worst}");
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let field = AnalyticField::blob([-0.2, 0.25], 0.4);
        let g = grid(8);
        let theta = [0.1, 0.4];
        let kind = LayoutKind::Rectangular;
        let cfg = SamplingConfig::quadrature();
        let up = random_upstream(64, 99);
        let (img, cache) = simulate_cached(&field, g, params(kind, theta), cfg).unwrap();
        let rec = backward(&img, &up, &field, &cache).unwrap();
        let fd = fd_scalar(&field, g, kind, theta, cfg, &up, 1e-4);
        assert!(rel_err(rec.dloss_dtheta, fd) < 1e-2, "{:?} vs {fd:?}", rec.dloss_dtheta);

        let t = params(kind, theta).theta();
        for j in 0..2 {
            let expected = rec.dloss_dtheta[j] * (1.0 - t[j] * t[j]);
            assert_eq!(rec.dloss_dtheta_raw[j], expected);
        }
    }

    #[test]
    fn shared_and_per_pixel_schemes_agree() {
        let field = AnalyticField::checkerboard(3.0);
        for kind in [LayoutKind::Curvilinear, LayoutKind::Rectangular] {
            for seed in [0, 1] {
                let cfg = SamplingConfig::default().with_seed(seed);
                let (img, cache) =
                    simulate_cached(&field, grid(6), params(kind, [0.35, -0.55]), cfg).unwrap();
                let up = random_upstream(36, seed + 10);
                let shared = backward(&img, &up, &field, &cache).unwrap();
                let separate = backward_per_pixel(&img, &up, &field, &cache).unwrap();
                for j in 0..2 {
                    assert!((shared.dloss_dtheta[j] - separate.dloss_dtheta[j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn radiance_is_never_differentiated() {
        let field = NoGradient(AnalyticField::blob([0.1, 0.1], 0.3));
        let (img, cache) = simulate_cached(
            &field,
            grid(4),
            params(LayoutKind::Curvilinear, [0.2, 0.5]),
            SamplingConfig::default(),
        )
        .unwrap();
        let rec = backward(&img, &random_upstream(16, 2), &field, &cache).unwrap();
        assert!(rec.dloss_dtheta.iter().all(|v| v.is_finite()));
        backward_per_pixel(&img, &random_upstream(16, 2), &field, &cache).unwrap();
    }

    #[test]
    fn image_backed_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // Smooth-ish image: a blurred random texture.
        let (w, h) = (32, 32);
        let coarse: Vec<f64> = (0..16).map(|_| rng.gen::<f64>()).collect();
        let coarse = SourceImage::new(4, 4, 1, coarse).unwrap();
        let data: Vec<f64> = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                let p = Point::new(-1.0 + (2 * x + 1) as f64 / w as f64, -1.0 + (2 * y + 1) as f64 / h as f64);
                coarse.sample(p).x
            })
            .collect();
        let img_field = SourceImage::new(w, h, 1, data).unwrap();
        let g = grid(4);
        let theta = [0.25, 0.15];
        let kind = LayoutKind::Curvilinear;
        let cfg = SamplingConfig {
            interior_strata: 32,
            boundary_samples: 128,
            jitter: false,
            ..Default::default()
        };
        let up = random_upstream(16, 8);
        let (img, cache) = simulate_cached(&img_field, g, params(kind, theta), cfg).unwrap();
        let rec = backward(&img, &up, &img_field, &cache).unwrap();
        let fd = fd_scalar(&img_field, g, kind, theta, cfg, &up, 1e-4);
        assert!(rel_err(rec.dloss_dtheta, fd) < 2e-2, "{:?} vs {fd:?}", rec.dloss_dtheta);
    }
}
