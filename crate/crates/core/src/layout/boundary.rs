use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::{LayoutKind, LayoutParams, PixelIndex, Point, Rect, SensorGrid};
use crate::error::{Error, Result};

/// Tangents shorter than this mean the layout has collapsed an edge.
pub const MIN_TANGENT_NORM: f64 = 1e-12;

const AREA_PANELS: usize = 4;

/// 8-point Gauss-Legendre rule on `[0, 1]` as (node, weight) pairs.
const GAUSS_LEGENDRE: [(f64, f64); 8] = [
    (0.019855071751231912, 0.050614268145188344),
    (0.10166676129318664, 0.11119051722668717),
    (0.2372337950418355, 0.15685332293894352),
    (0.4082826787521751, 0.18134189168918088),
    (0.5917173212478248, 0.18134189168918088),
    (0.7627662049581645, 0.15685332293894352),
    (0.8983332387068134, 0.11119051722668717),
    (0.9801449282487681, 0.050614268145188344),
];

/// Side of a uniform pixel. Listed in counter-clockwise traversal order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Bottom, Edge::Right, Edge::Top, Edge::Left];

    /// Start and end corner of this side of `r` for counter-clockwise traversal.
    fn endpoints(self, r: &Rect) -> (Point, Point) {
        let (bl, br) = (Point::new(r.x0, r.y0), Point::new(r.x1, r.y0));
        let (tr, tl) = (Point::new(r.x1, r.y1), Point::new(r.x0, r.y1));
        match self {
            Edge::Bottom => (bl, br),
            Edge::Right => (br, tr),
            Edge::Top => (tr, tl),
            Edge::Left => (tl, bl),
        }
    }
}

/// Grid-wide identifier of a pixel edge segment, shared by both adjacent
/// pixels.
///
/// `Vertical { line, seg }` lies on vertical grid line `line` (0..=r1)
/// between horizontal lines `seg` and `seg + 1`; its canonical direction is
/// upward, which is the counter-clockwise direction for the pixel on its
/// left. `Horizontal { line, seg }` lies on horizontal grid line `line`
/// (0..=r2) between vertical lines `seg` and `seg + 1`; its canonical
/// direction is leftward, counter-clockwise for the pixel below.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeId {
    Vertical { line: usize, seg: usize },
    Horizontal { line: usize, seg: usize },
}

impl EdgeId {
    /// Canonical id of `edge` of pixel `k`, and `+1.0` if the pixel traverses
    /// it in the canonical direction (`-1.0` otherwise).
    pub fn of_pixel_edge(k: PixelIndex, edge: Edge) -> (EdgeId, f64) {
        match edge {
            Edge::Right => (EdgeId::Vertical { line: k.k1 + 1, seg: k.k2 }, 1.0),
            Edge::Left => (EdgeId::Vertical { line: k.k1, seg: k.k2 }, -1.0),
            Edge::Top => (EdgeId::Horizontal { line: k.k2 + 1, seg: k.k1 }, 1.0),
            Edge::Bottom => (EdgeId::Horizontal { line: k.k2, seg: k.k1 }, -1.0),
        }
    }

    /// Every edge segment of the grid, vertical ones first.
    pub fn all(grid: &SensorGrid) -> Vec<EdgeId> {
        let (r1, r2) = (grid.r1(), grid.r2());
        let mut out = Vec::with_capacity((r1 + 1) * r2 + (r2 + 1) * r1);
        for line in 0..=r1 {
            for seg in 0..r2 {
                out.push(EdgeId::Vertical { line, seg });
            }
        }
        for line in 0..=r2 {
            for seg in 0..r1 {
                out.push(EdgeId::Horizontal { line, seg });
            }
        }
        out
    }

    /// Position of this edge in [`EdgeId::all`].
    pub fn position(&self, grid: &SensorGrid) -> usize {
        match *self {
            EdgeId::Vertical { line, seg } => line * grid.r2() + seg,
            EdgeId::Horizontal { line, seg } => (grid.r1() + 1) * grid.r2() + line * grid.r1() + seg,
        }
    }

    /// Pixel traversing this edge canonically (`+`) and the one traversing
    /// it in reverse (`-`); `None` on the outer sensor boundary.
    pub fn adjacent(&self, grid: &SensorGrid) -> (Option<PixelIndex>, Option<PixelIndex>) {
        match *self {
            EdgeId::Vertical { line, seg } => (
                (line > 0).then(|| PixelIndex::new(line - 1, seg)),
                (line < grid.r1()).then(|| PixelIndex::new(line, seg)),
            ),
            EdgeId::Horizontal { line, seg } => (
                (line > 0).then(|| PixelIndex::new(seg, line - 1)),
                (line < grid.r2()).then(|| PixelIndex::new(seg, line)),
            ),
        }
    }

    pub fn is_outer(&self, grid: &SensorGrid) -> bool {
        match *self {
            EdgeId::Vertical { line, .. } => line == 0 || line == grid.r1(),
            EdgeId::Horizontal { line, .. } => line == 0 || line == grid.r2(),
        }
    }

    /// Small integer tag used to derive per-edge random streams.
    pub fn stream_key(&self) -> (u64, u64, u64) {
        match *self {
            EdgeId::Vertical { line, seg } => (1, line as u64, seg as u64),
            EdgeId::Horizontal { line, seg } => (2, line as u64, seg as u64),
        }
    }

    /// Parameterization of the edge in its canonical direction.
    pub fn boundary(&self, grid: &SensorGrid, params: LayoutParams) -> BoundaryParam {
        let (start, end) = match *self {
            EdgeId::Vertical { line, seg } => {
                let x = grid.line_x(line);
                (Point::new(x, grid.line_y(seg)), Point::new(x, grid.line_y(seg + 1)))
            }
            EdgeId::Horizontal { line, seg } => {
                let y = grid.line_y(line);
                (Point::new(grid.line_x(seg + 1), y), Point::new(grid.line_x(seg), y))
            }
        };
        BoundaryParam {
            start,
            end,
            params,
        }
    }
}

/// Affine parameterization `gamma(t) = start + t (end - start)`, `t in [0, 1]`,
/// of one side of a uniform pixel, pushed forward through the layout:
/// `r(t, theta) = phi(gamma(t), theta)`.
///
/// Sides built from a pixel are oriented counter-clockwise, so the right-hand
/// normal `(r'_2, -r'_1)` points out of the pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryParam {
    start: Point,
    end: Point,
    params: LayoutParams,
}

impl BoundaryParam {
    pub fn for_pixel_edge(bounds: &Rect, edge: Edge, params: LayoutParams) -> Self {
        let (start, end) = edge.endpoints(bounds);
        BoundaryParam { start, end, params }
    }

    pub fn start(&self) -> Point {
        self.start
    }

    pub fn end(&self) -> Point {
        self.end
    }

    /// Point on the uniform edge, `gamma(t)`.
    pub fn gamma(&self, t: f64) -> Point {
        self.start + (self.end - self.start) * t
    }

    pub fn gamma_dot(&self) -> Vector2<f64> {
        self.end - self.start
    }

    /// `r(t, theta)`.
    pub fn point(&self, t: f64) -> Point {
        self.params.apply(self.gamma(t))
    }

    /// `r'(t, theta) = J_phi gamma'`.
    pub fn tangent(&self, t: f64) -> Vector2<f64> {
        self.params.jacobian(self.gamma(t)) * self.gamma_dot()
    }

    /// Line element `|r'(t, theta)|`.
    pub fn line_element(&self, t: f64) -> f64 {
        self.tangent(t).norm()
    }

    /// Outward unit normal.
    pub fn normal(&self, t: f64) -> Result<Vector2<f64>> {
        let tan = self.tangent(t);
        let len = tan.norm();
        if !(len >= MIN_TANGENT_NORM) {
            return Err(Error::DegenerateTangent(len));
        }
        Ok(Vector2::new(tan.y, -tan.x) / len)
    }

    /// `d r / d theta`, one column per theta component.
    pub fn velocity(&self, t: f64) -> Matrix2<f64> {
        self.params.dtheta(self.gamma(t))
    }

    /// `integral_0^1 (r_1 r'_2 - r_2 r'_1) dt`, twice the signed area swept
    /// relative to the origin. Summed over the sides of a pixel it gives
    /// `2 vol(A_k)` (Green's theorem).
    ///
    /// The layouts are only piecewise smooth along a side (kinks where it
    /// crosses the unit circle or an axis), so the side is split there and
    /// each piece is integrated with composite Gauss-Legendre quadrature.
    pub fn area_moment(&self) -> f64 {
        if self.params.kind() != LayoutKind::Curvilinear {
            // Axis-aligned sides stay straight under the rectangular map.
            let (a, b) = (self.point(0.0), self.point(1.0));
            return a.x * b.y - a.y * b.x;
        }
        let mut breaks = vec![0.0, 1.0];
        breaks.extend(self.kinks());
        breaks.sort_by(f64::total_cmp);
        breaks
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let h = (w[1] - w[0]) / AREA_PANELS as f64;
                (0..AREA_PANELS)
                    .map(|i| {
                        let a = w[0] + h * i as f64;
                        GAUSS_LEGENDRE
                            .iter()
                            .map(|&(x, wt)| {
                                let t = a + h * x;
                                let r = self.point(t);
                                let d = self.tangent(t);
                                wt * (r.x * d.y - r.y * d.x)
                            })
                            .sum::<f64>()
                            * h
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Parameters in `(0, 1)` where the side crosses `||p|| = 1` or an axis.
    fn kinks(&self) -> Vec<f64> {
        let (s, d) = (self.start, self.gamma_dot());
        let mut out = Vec::new();
        for j in 0..2 {
            if d[j] != 0.0 {
                out.push(-s[j] / d[j]);
            }
        }
        let (a, b, c) = (d.norm_squared(), 2.0 * s.dot(&d), s.norm_squared() - 1.0);
        let disc = b * b - 4.0 * a * c;
        if a > 0.0 && disc > 0.0 {
            let sq = disc.sqrt();
            out.push((-b - sq) / (2.0 * a));
            out.push((-b + sq) / (2.0 * a));
        }
        out.retain(|t| *t > 0.0 && *t < 1.0);
        out
    }

    /// `<d r / d theta_j, n> |r'|` for both components, computed without
    /// normalizing: `<d r / d theta_j, (r'_2, -r'_1)>`.
    pub fn normal_velocity(&self, t: f64) -> [f64; 2] {
        let g = self.gamma(t);
        let v = self.params.dtheta(g);
        let tan = self.params.jacobian(g) * self.gamma_dot();
        let n = Vector2::new(tan.y, -tan.x);
        [v.column(0).dot(&n), v.column(1).dot(&n)]
    }
}
