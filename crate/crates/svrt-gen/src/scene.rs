//! Scene assembly and deterministic rasterization.
//!
//! A scene lists contours with their placement (position, scale, rotation,
//! reflection) on a nominal square canvas. Geometry predicates run on the
//! placed vertex lists; rendering strokes the same vertices with Bresenham
//! lines, so the pixels are a pure function of the scene.

use serde::{Deserialize, Serialize};

use crate::geometry::Pt;
use crate::shape::ShapeContour;
use crate::SvrtError;

/// Side of the nominal canvas every position/scale in a scene refers to.
/// Rendering at another size rescales uniformly.
pub const NOMINAL_CANVAS: f64 = 128.0;

/// Margin (in nominal px) every placed vertex must keep from the border.
pub const BORDER_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneItem {
    pub contour: ShapeContour,
    /// Placement of the contour's centroid, nominal px.
    pub position: Pt,
    /// Full extent of the shape's longest axis, nominal px.
    pub scale: f64,
    /// Radians, counter-clockwise.
    pub rotation: f64,
    pub reflect: bool,
}

impl SceneItem {
    /// Vertices in nominal canvas coordinates.
    pub fn placed(&self) -> Vec<Pt> {
        let c = self.contour.centroid();
        let (sin, cos) = self.rotation.sin_cos();
        let mut pts: Vec<Pt> = self
            .contour
            .points()
            .iter()
            .map(|p| {
                let mut x = p[0] - c[0];
                let y = p[1] - c[1];
                if self.reflect {
                    x = -x;
                }
                [
                    self.position[0] + self.scale * (cos * x - sin * y),
                    self.position[1] + self.scale * (sin * x + cos * y),
                ]
            })
            .collect();
        if self.reflect {
            // Restore counter-clockwise orientation for the oracles.
            pts.reverse();
        }
        pts
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSpec {
    pub items: Vec<SceneItem>,
}

impl SceneSpec {
    pub fn new(items: Vec<SceneItem>) -> Self {
        SceneSpec { items }
    }

    pub fn placed(&self) -> Vec<Vec<Pt>> {
        self.items.iter().map(SceneItem::placed).collect()
    }

    /// True when every vertex keeps the border margin on the nominal canvas.
    pub fn in_bounds(&self) -> bool {
        self.placed().iter().flatten().all(|p| {
            p[0] >= BORDER_MARGIN
                && p[0] <= NOMINAL_CANVAS - BORDER_MARGIN
                && p[1] >= BORDER_MARGIN
                && p[1] <= NOMINAL_CANVAS - BORDER_MARGIN
        })
    }
}

/// Strokes the scene onto a white `size`×`size` canvas (dark strokes, 0 on
/// 255). Stroke width is 1px at 128×128 and scales proportionally.
pub fn render_scene(scene: &SceneSpec, size: usize) -> Result<Vec<u8>, SvrtError> {
    assert!(size >= 8, "render_scene: size {size} too small");
    if !scene.in_bounds() {
        return Err(SvrtError::OutOfBounds);
    }
    let mut pixels = vec![255u8; size * size];
    let ratio = size as f64 / NOMINAL_CANVAS;
    let width = ((size as f64 / 128.0).round() as usize).max(1);
    for poly in scene.placed() {
        let n = poly.len();
        for i in 0..n {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            stroke_line(
                &mut pixels,
                size,
                [a[0] * ratio, a[1] * ratio],
                [b[0] * ratio, b[1] * ratio],
                width,
            );
        }
    }
    Ok(pixels)
}

/// Bresenham on rounded endpoints; each visited pixel is stamped with a
/// `width`×`width` square anchored at its top-left half.
fn stroke_line(pixels: &mut [u8], size: usize, a: Pt, b: Pt, width: usize) {
    let (mut x0, mut y0) = (a[0].round() as i64, a[1].round() as i64);
    let (x1, y1) = (b[0].round() as i64, b[1].round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        stamp(pixels, size, x0, y0, width);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

fn stamp(pixels: &mut [u8], size: usize, x: i64, y: i64, width: usize) {
    let half = (width as i64 - 1) / 2;
    for oy in -half..(width as i64 - half) {
        for ox in -half..(width as i64 - half) {
            let (px, py) = (x + ox, y + oy);
            if px >= 0 && py >= 0 && (px as usize) < size && (py as usize) < size {
                pixels[py as usize * size + px as usize] = 0;
            }
        }
    }
}

/// Plain binary PGM, for eyeballing generated samples.
pub fn write_pgm(path: &std::path::Path, pixels: &[u8], size: usize) -> Result<(), SvrtError> {
    assert_eq!(pixels.len(), size * size);
    let mut bytes = format!("P5\n{size} {size}\n255\n").into_bytes();
    bytes.extend_from_slice(pixels);
    std::fs::write(path, bytes)?;
    Ok(())
}
