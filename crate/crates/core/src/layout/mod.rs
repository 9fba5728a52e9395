//! Sensor domain, uniform pixel grid and the two parameterized deformation
//! families (curvilinear and rectangular).
//!
//! The sensor occupies `S = [-1, 1]^2`. A layout is the image of the uniform
//! pixel grid under a deformation `phi(., theta)` which maps `S` bijectively
//! onto itself. Both families are controlled by `theta in (-1, 1)^2`;
//! positive components shrink pixels near the center, negative components
//! push resolution outward.

mod boundary;
mod export;

pub use boundary::{BoundaryParam, Edge, EdgeId, MIN_TANGENT_NORM};
pub use export::{layout_json, layout_svg, LayoutRecord};

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Points this far outside `S` are clamped back instead of rejected.
pub const DOMAIN_EPS: f64 = 1e-9;

/// Bisection steps used to invert the curvilinear radial profile.
const INVERSE_BISECTION_STEPS: usize = 80;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelIndex {
    pub k1: usize,
    pub k2: usize,
}

impl PixelIndex {
    pub const fn new(k1: usize, k2: usize) -> Self {
        PixelIndex { k1, k2 }
    }
}

/// Resolution of the sensor: `r1` pixels horizontally, `r2` vertically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct SensorGrid {
    r1: usize,
    r2: usize,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    r1: usize,
    r2: usize,
}

impl TryFrom<GridRepr> for SensorGrid {
    type Error = Error;
    fn try_from(g: GridRepr) -> Result<Self> {
        SensorGrid::new(g.r1, g.r2)
    }
}

impl From<SensorGrid> for GridRepr {
    fn from(g: SensorGrid) -> Self {
        GridRepr { r1: g.r1, r2: g.r2 }
    }
}

impl SensorGrid {
    pub fn new(r1: usize, r2: usize) -> Result<Self> {
        if r1 == 0 || r2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid resolution must be positive, got {r1}x{r2}"
            )));
        }
        Ok(SensorGrid { r1, r2 })
    }

    pub fn r1(&self) -> usize {
        self.r1
    }

    pub fn r2(&self) -> usize {
        self.r2
    }

    pub fn pixel_count(&self) -> usize {
        self.r1 * self.r2
    }

    /// Row-major position of pixel `k` (rows run along `k2`).
    pub fn linear_index(&self, k: PixelIndex) -> usize {
        k.k2 * self.r1 + k.k1
    }

    pub fn pixel_at(&self, linear: usize) -> PixelIndex {
        PixelIndex::new(linear % self.r1, linear / self.r1)
    }

    /// All pixel indices in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = PixelIndex> + '_ {
        (0..self.pixel_count()).map(move |i| self.pixel_at(i))
    }

    /// Horizontal coordinate of the `i`-th vertical grid line, `0 <= i <= r1`.
    pub fn line_x(&self, i: usize) -> f64 {
        grid_line(i, self.r1)
    }

    /// Vertical coordinate of the `j`-th horizontal grid line, `0 <= j <= r2`.
    pub fn line_y(&self, j: usize) -> f64 {
        grid_line(j, self.r2)
    }

    pub fn check_index(&self, k: PixelIndex) -> Result<()> {
        if k.k1 >= self.r1 || k.k2 >= self.r2 {
            return Err(Error::IndexOutOfRange {
                k1: k.k1,
                k2: k.k2,
                r1: self.r1,
                r2: self.r2,
            });
        }
        Ok(())
    }

    /// The uniform pixel `U_k`.
    pub fn uniform_pixel_bounds(&self, k: PixelIndex) -> Result<Rect> {
        self.check_index(k)?;
        Ok(Rect {
            x0: self.line_x(k.k1),
            x1: self.line_x(k.k1 + 1),
            y0: self.line_y(k.k2),
            y1: self.line_y(k.k2 + 1),
        })
    }

    /// Uniform pixel containing `u`. Intervals are half-open `[lo, hi)`
    /// except for the last pixel along each axis, which is closed.
    pub fn locate(&self, u: Point) -> PixelIndex {
        PixelIndex::new(locate_axis(u.x, self.r1), locate_axis(u.y, self.r2))
    }
}

fn grid_line(i: usize, r: usize) -> f64 {
    (2.0 * i as f64 - r as f64) / r as f64
}

fn locate_axis(x: f64, r: usize) -> usize {
    let guess = (((x + 1.0) * 0.5) * r as f64).floor();
    let mut k = guess.clamp(0.0, (r - 1) as f64) as usize;
    // The guess can be off by one near grid lines; settle against the exact
    // line coordinates so the half-open convention holds bit-for-bit.
    while k > 0 && x < grid_line(k, r) {
        k -= 1;
    }
    while k + 1 < r && x >= grid_line(k + 1, r) {
        k += 1;
    }
    k
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    /// Maps unit-square coordinates `(s, t)` into the rectangle.
    pub fn lerp(&self, s: f64, t: f64) -> Point {
        Point::new(
            self.x0 + s * (self.x1 - self.x0),
            self.y0 + t * (self.y1 - self.y0),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutKind {
    /// Uniform layout, independent of theta.
    Identity,
    Curvilinear,
    Rectangular,
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayoutKind::Identity => "identity",
            LayoutKind::Curvilinear => "curvilinear",
            LayoutKind::Rectangular => "rectangular",
        })
    }
}

impl FromStr for LayoutKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "uniform" | "id" => Ok(LayoutKind::Identity),
            "curvilinear" | "curv" => Ok(LayoutKind::Curvilinear),
            "rectangular" | "rect" => Ok(LayoutKind::Rectangular),
            other => Err(Error::InvalidParameter(format!(
                "unknown layout kind '{other}' (expected identity, curv or rect)"
            ))),
        }
    }
}

/// Deformation family plus its parameters.
///
/// Optimization runs on the unconstrained `theta_raw`; the geometry consumes
/// `theta = tanh(theta_raw)`, which is cached and refreshed on every update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct LayoutParams {
    kind: LayoutKind,
    theta_raw: [f64; 2],
    theta: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    kind: LayoutKind,
    theta_raw: [f64; 2],
}

impl TryFrom<ParamsRepr> for LayoutParams {
    type Error = Error;
    fn try_from(r: ParamsRepr) -> Result<Self> {
        LayoutParams::from_raw(r.kind, r.theta_raw)
    }
}

impl From<LayoutParams> for ParamsRepr {
    fn from(p: LayoutParams) -> Self {
        ParamsRepr {
            kind: p.kind,
            theta_raw: p.theta_raw,
        }
    }
}

impl LayoutParams {
    pub fn identity() -> Self {
        LayoutParams {
            kind: LayoutKind::Identity,
            theta_raw: [0.0; 2],
            theta: [0.0; 2],
        }
    }

    pub fn from_raw(kind: LayoutKind, theta_raw: [f64; 2]) -> Result<Self> {
        if theta_raw.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "theta_raw must be finite, got {theta_raw:?}"
            )));
        }
        let mut p = LayoutParams {
            kind,
            theta_raw: [0.0; 2],
            theta: [0.0; 2],
        };
        p.set_theta_raw(theta_raw);
        Ok(p)
    }

    /// Builds parameters from the constrained value; each component must lie
    /// strictly inside `(-1, 1)`.
    pub fn from_theta(kind: LayoutKind, theta: [f64; 2]) -> Result<Self> {
        for &t in &theta {
            if !(t.abs() < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "theta components must lie in the open interval (-1, 1), got {theta:?}; \
                     use theta_raw for unconstrained values"
                )));
            }
        }
        LayoutParams::from_raw(kind, [theta[0].atanh(), theta[1].atanh()])
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    pub fn theta_raw(&self) -> [f64; 2] {
        self.theta_raw
    }

    /// Stored theta (ignores `kind`).
    pub fn theta(&self) -> [f64; 2] {
        self.theta
    }

    /// Theta as seen by the geometry: zero for the identity kind.
    pub fn effective_theta(&self) -> [f64; 2] {
        match self.kind {
            LayoutKind::Identity => [0.0; 2],
            _ => self.theta,
        }
    }

    pub fn set_theta_raw(&mut self, raw: [f64; 2]) {
        self.theta_raw = raw;
        self.theta = [raw[0].tanh(), raw[1].tanh()];
    }

    /// `d theta / d theta_raw`, elementwise.
    pub fn dtheta_draw(&self) -> [f64; 2] {
        [1.0 - self.theta[0].powi(2), 1.0 - self.theta[1].powi(2)]
    }

    /// True when the deformation is exactly the identity map.
    pub fn is_identity_map(&self) -> bool {
        self.kind == LayoutKind::Identity || self.theta == [0.0, 0.0]
    }

    /// `phi(p, theta)` for `p` already inside `S`.
    pub fn apply(&self, p: Point) -> Point {
        if self.is_identity_map() {
            return p;
        }
        let [t1, t2] = self.theta;
        match self.kind {
            LayoutKind::Identity => p,
            LayoutKind::Curvilinear => {
                let r = p.norm();
                if r < 1.0 {
                    Point::new(p.x * radial_scale(t1, r), p.y * radial_scale(t2, r))
                } else {
                    p
                }
            }
            LayoutKind::Rectangular => Point::new(rect_component(p.x, t1), rect_component(p.y, t2)),
        }
    }

    /// Spatial Jacobian `J_phi(p, theta)`.
    ///
    /// On the kink sets the interior formula is used strictly inside the
    /// deformation region and the identity elsewhere.
    pub fn jacobian(&self, p: Point) -> Matrix2<f64> {
        if self.kind == LayoutKind::Identity {
            return Matrix2::identity();
        }
        let [t1, t2] = self.theta;
        match self.kind {
            LayoutKind::Identity => Matrix2::identity(),
            LayoutKind::Curvilinear => {
                let r = p.norm();
                if r >= 1.0 {
                    return Matrix2::identity();
                }
                let s = [radial_scale(t1, r), radial_scale(t2, r)];
                let mut j = Matrix2::from_diagonal(&Vector2::new(s[0], s[1]));
                if r > 0.0 {
                    let ds = [radial_scale_dr(t1, r), radial_scale_dr(t2, r)];
                    for row in 0..2 {
                        for col in 0..2 {
                            j[(row, col)] += p[row] * ds[row] * p[col] / r;
                        }
                    }
                }
                j
            }
            LayoutKind::Rectangular => Matrix2::new(
                rect_component_dp(p.x, t1),
                0.0,
                0.0,
                rect_component_dp(p.y, t2),
            ),
        }
    }

    /// `|det J_phi(p, theta)|`.
    pub fn jacobian_det(&self, p: Point) -> f64 {
        self.jacobian(p).determinant().abs()
    }

    /// Partial derivatives of `phi(p, theta)` with respect to theta; column
    /// `j` holds `d phi / d theta_j`.
    pub fn dtheta(&self, p: Point) -> Matrix2<f64> {
        let [t1, t2] = self.theta;
        match self.kind {
            LayoutKind::Identity => Matrix2::zeros(),
            LayoutKind::Curvilinear => {
                let r = p.norm();
                if r >= 1.0 {
                    return Matrix2::zeros();
                }
                Matrix2::new(
                    p.x * radial_scale_dtheta(t1, r),
                    0.0,
                    0.0,
                    p.y * radial_scale_dtheta(t2, r),
                )
            }
            LayoutKind::Rectangular => {
                let d = |x: f64, t: f64| {
                    if x.abs() < 1.0 {
                        x * radial_scale_dtheta(t, x.abs())
                    } else {
                        0.0
                    }
                };
                Matrix2::new(d(p.x, t1), 0.0, 0.0, d(p.y, t2))
            }
        }
    }

    /// `phi^{-1}(q, theta)` for `q` inside `S`.
    pub fn apply_inverse(&self, q: Point) -> Result<Point> {
        if self.is_identity_map() {
            return Ok(q);
        }
        let [t1, t2] = self.theta;
        match self.kind {
            LayoutKind::Identity => Ok(q),
            LayoutKind::Rectangular => Ok(Point::new(
                rect_component_inverse(q.x, t1),
                rect_component_inverse(q.y, t2),
            )),
            LayoutKind::Curvilinear => curvilinear_inverse(q, self.theta),
        }
    }
}

/// `s(r) = (theta - 1) / (2 theta r - theta - 1)`; the denominator is
/// negative for every `r in [0, 1]` and `theta in (-1, 1)`.
#[inline]
fn radial_scale(theta: f64, r: f64) -> f64 {
    (theta - 1.0) / (2.0 * theta * r - theta - 1.0)
}

#[inline]
fn radial_scale_dr(theta: f64, r: f64) -> f64 {
    let d = 2.0 * theta * r - theta - 1.0;
    2.0 * theta * (1.0 - theta) / (d * d)
}

#[inline]
fn radial_scale_dtheta(theta: f64, r: f64) -> f64 {
    let d = 2.0 * theta * r - theta - 1.0;
    2.0 * (r - 1.0) / (d * d)
}

#[inline]
fn rect_component(x: f64, theta: f64) -> f64 {
    if x.abs() < 1.0 {
        x * radial_scale(theta, x.abs())
    } else {
        x
    }
}

#[inline]
fn rect_component_dp(x: f64, theta: f64) -> f64 {
    if x.abs() < 1.0 {
        let d = 2.0 * theta * x.abs() - theta - 1.0;
        (1.0 - theta * theta) / (d * d)
    } else {
        1.0
    }
}

/// Closed-form inverse of the per-axis map: `x = y (1 + theta) / (1 - theta + 2 theta |y|)`.
#[inline]
fn rect_component_inverse(y: f64, theta: f64) -> f64 {
    if y.abs() < 1.0 {
        y * (1.0 + theta) / (1.0 - theta + 2.0 * theta * y.abs())
    } else {
        y
    }
}

/// Given the radius `r = |p|`, the preimage is linear in `r`:
/// `p_j = q_j (1 + theta_j - 2 theta_j r) / (1 - theta_j)`. The radius is
/// the root of `|p(r)| - r` on `[0, 1]`, found by bisection.
fn curvilinear_inverse(q: Point, theta: [f64; 2]) -> Result<Point> {
    if q.norm() >= 1.0 {
        return Ok(q);
    }
    let preimage = |r: f64| {
        Point::new(
            q.x * (1.0 + theta[0] - 2.0 * theta[0] * r) / (1.0 - theta[0]),
            q.y * (1.0 + theta[1] - 2.0 * theta[1] * r) / (1.0 - theta[1]),
        )
    };
    let residual = |r: f64| preimage(r).norm() - r;

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    // residual(0) >= 0 and residual(1) = |q| - 1 < 0.
    for _ in 0..INVERSE_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if residual(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let res = residual(r);
    if !(res.abs() <= 1e-9) {
        return Err(Error::Convergence { residual: res });
    }
    Ok(preimage(r))
}

fn checked_point(p: Point) -> Result<Point> {
    let lim = 1.0 + DOMAIN_EPS;
    if !(p.x.abs() <= lim && p.y.abs() <= lim) {
        return Err(Error::OutsideDomain(p.x, p.y));
    }
    Ok(Point::new(p.x.clamp(-1.0, 1.0), p.y.clamp(-1.0, 1.0)))
}

/// `phi(p, theta)`; errors if `p` lies outside `S` by more than [`DOMAIN_EPS`].
pub fn deform(p: Point, params: &LayoutParams) -> Result<Point> {
    Ok(params.apply(checked_point(p)?))
}

pub fn deform_inverse(q: Point, params: &LayoutParams) -> Result<Point> {
    params.apply_inverse(checked_point(q)?)
}

pub fn jacobian(p: Point, params: &LayoutParams) -> Result<Matrix2<f64>> {
    Ok(params.jacobian(checked_point(p)?))
}

pub fn deform_dtheta(p: Point, params: &LayoutParams) -> Result<Matrix2<f64>> {
    Ok(params.dtheta(checked_point(p)?))
}

pub fn uniform_pixel_bounds(grid: &SensorGrid, k: PixelIndex) -> Result<Rect> {
    grid.uniform_pixel_bounds(k)
}

/// A uniform pixel `U_k` together with the layout under which its deformed
/// image `A_k = phi(U_k, theta)` is interpreted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelRegion {
    pub index: PixelIndex,
    pub uniform_bounds: Rect,
    pub layout: LayoutParams,
}

impl PixelRegion {
    pub fn new(grid: &SensorGrid, index: PixelIndex, layout: LayoutParams) -> Result<Self> {
        Ok(PixelRegion {
            index,
            uniform_bounds: grid.uniform_pixel_bounds(index)?,
            layout,
        })
    }

    pub fn boundary(&self, edge: Edge) -> BoundaryParam {
        BoundaryParam::for_pixel_edge(&self.uniform_bounds, edge, self.layout)
    }
}

pub fn boundary_param(region: &PixelRegion, edge: Edge) -> BoundaryParam {
    region.boundary(edge)
}
