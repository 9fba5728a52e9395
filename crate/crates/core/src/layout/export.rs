use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{LayoutKind, LayoutParams, Point, SensorGrid};
use crate::error::Result;

/// Points sampled along each pixel edge when drawing a layout.
pub const SVG_POINTS_PER_EDGE: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutRecord {
    pub kind: LayoutKind,
    pub theta: [f64; 2],
    pub theta_raw: [f64; 2],
    pub r1: usize,
    pub r2: usize,
}

impl LayoutRecord {
    pub fn new(grid: &SensorGrid, params: &LayoutParams) -> Self {
        LayoutRecord {
            kind: params.kind(),
            theta: params.theta(),
            theta_raw: params.theta_raw(),
            r1: grid.r1(),
            r2: grid.r2(),
        }
    }

    pub fn params(&self) -> Result<(SensorGrid, LayoutParams)> {
        Ok((
            SensorGrid::new(self.r1, self.r2)?,
            LayoutParams::from_raw(self.kind, self.theta_raw)?,
        ))
    }
}

pub fn layout_json(grid: &SensorGrid, params: &LayoutParams) -> Result<String> {
    Ok(serde_json::to_string_pretty(&LayoutRecord::new(grid, params))?)
}

/// Renders the deformed grid lines `phi(grid lines of U, theta)` as SVG.
/// Sensor coordinate `(-1, -1)` maps to the top-left corner, matching the
/// row order of simulated images.
pub fn layout_svg(grid: &SensorGrid, params: &LayoutParams, size_px: u32) -> String {
    let size = size_px as f64;
    let to_px = |p: Point| ((p.x + 1.0) * 0.5 * size, (p.y + 1.0) * 0.5 * size);

    let mut polylines = Vec::with_capacity(grid.r1() + grid.r2() + 2);
    for i in 0..=grid.r1() {
        let x = grid.line_x(i);
        let ys: Vec<f64> = (0..=grid.r2()).map(|j| grid.line_y(j)).collect();
        polylines.push(sample_line(&ys, |y| Point::new(x, y), params));
    }
    for j in 0..=grid.r2() {
        let y = grid.line_y(j);
        let xs: Vec<f64> = (0..=grid.r1()).map(|i| grid.line_x(i)).collect();
        polylines.push(sample_line(&xs, |x| Point::new(x, y), params));
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size_px}" height="{size_px}" viewBox="0 0 {size_px} {size_px}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{size_px}" height="{size_px}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<g fill="none" stroke="black" stroke-width="{:.3}">"#,
        (size / 400.0).max(0.5)
    );
    for line in polylines {
        let pts: Vec<String> = line
            .into_iter()
            .map(|p| {
                let (x, y) = to_px(p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}"/>"#, pts.join(" "));
    }
    svg.push_str("</g>\n</svg>\n");
    svg
}

/// Samples one full grid line, `SVG_POINTS_PER_EDGE` points on every edge
/// segment between consecutive crossings.
fn sample_line(
    knots: &[f64],
    at: impl Fn(f64) -> Point,
    params: &LayoutParams,
) -> Vec<Point> {
    let mut pts = Vec::with_capacity((knots.len() - 1) * (SVG_POINTS_PER_EDGE - 1) + 1);
    for (w, seg) in knots.windows(2).enumerate() {
        let skip_first = usize::from(w > 0);
        for m in skip_first..SVG_POINTS_PER_EDGE {
            let s = m as f64 / (SVG_POINTS_PER_EDGE - 1) as f64;
            pts.push(params.apply(at(seg[0] + s * (seg[1] - seg[0]))));
        }
    }
    pts
}
