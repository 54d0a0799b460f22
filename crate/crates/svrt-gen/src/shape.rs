//! Closed-contour shape sampling: radial polygons smoothed by corner cutting.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{centroid, dist, polyline_is_simple, shoelace_area, Pt};
use crate::SvrtError;

/// How many resample attempts a constraint gets before generation fails.
pub const REJECTION_BUDGET: usize = 1000;

const MIN_AREA: f64 = 0.15;
const SMOOTHING_ROUNDS: usize = 2;

/// A simple closed polyline normalized to the unit box (longest extent 1).
/// The closing edge from the last vertex to the first is implied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeContour {
    points: Vec<Pt>,
    complexity: f64,
}

impl ShapeContour {
    pub fn points(&self) -> &[Pt] {
        &self.points
    }

    pub fn complexity(&self) -> f64 {
        self.complexity
    }

    pub fn area(&self) -> f64 {
        shoelace_area(&self.points)
    }

    pub fn centroid(&self) -> Pt {
        centroid(&self.points)
    }

    /// Variance of vertex distance to the centroid, normalized by the mean
    /// distance; 0 for a perfect circle.
    pub fn radial_variance(&self) -> f64 {
        let c = self.centroid();
        let radii: Vec<f64> = self.points.iter().map(|&p| dist(p, c)).collect();
        let mean = radii.iter().sum::<f64>() / radii.len() as f64;
        radii.iter().map(|r| (r / mean - 1.0).powi(2)).sum::<f64>() / radii.len() as f64
    }
}

/// Samples a random simple closed contour. `complexity` in [0, 1] controls the
/// radial jitter of the underlying 8–24-gon; the polygon is smoothed by two
/// rounds of 1/4–3/4 corner cutting, rejection-resampled until it is simple
/// and covers at least 15% of its bounding box.
pub fn gen_shape(rng: &mut ChaCha12Rng, complexity: f64) -> Result<ShapeContour, SvrtError> {
    assert!(
        (0.0..=1.0).contains(&complexity),
        "gen_shape: complexity must be in [0,1], got {complexity}"
    );
    for _ in 0..REJECTION_BUDGET {
        let n = rng.random_range(8..=24);
        let mut pts = Vec::with_capacity(n);
        for k in 0..n {
            // Angular jitter stays below half the spacing so vertices keep
            // their circular order and the pre-smoothing polygon is star-shaped.
            let jitter: f64 = rng.random_range(-0.4..0.4);
            let theta = (k as f64 + jitter) / n as f64 * std::f64::consts::TAU;
            let radius = (1.0 + complexity * rng.random_range(-0.55..0.55)).max(0.25);
            pts.push([radius * theta.cos(), radius * theta.sin()]);
        }
        for _ in 0..SMOOTHING_ROUNDS {
            pts = chaikin(&pts);
        }
        normalize_to_unit_box(&mut pts);
        let candidate = ShapeContour { points: pts, complexity };
        if polyline_is_simple(&candidate.points) && candidate.area() >= MIN_AREA {
            return Ok(candidate);
        }
    }
    Err(SvrtError::RejectionBudget { what: "simple closed contour".into() })
}

/// One round of closed-curve corner cutting: each edge contributes its 1/4 and
/// 3/4 points.
fn chaikin(pts: &[Pt]) -> Vec<Pt> {
    let n = pts.len();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        out.push([0.75 * p[0] + 0.25 * q[0], 0.75 * p[1] + 0.25 * q[1]]);
        out.push([0.25 * p[0] + 0.75 * q[0], 0.25 * p[1] + 0.75 * q[1]]);
    }
    out
}

fn normalize_to_unit_box(pts: &mut [Pt]) {
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts.iter() {
        min_x = min_x.min(p[0]);
        min_y = min_y.min(p[1]);
        max_x = max_x.max(p[0]);
        max_y = max_y.max(p[1]);
    }
    let extent = (max_x - min_x).max(max_y - min_y);
    assert!(extent > 1e-9, "normalize: degenerate contour");
    for p in pts.iter_mut() {
        p[0] = (p[0] - min_x) / extent;
        p[1] = (p[1] - min_y) / extent;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn zero_complexity_is_near_circular() {
        for seed in 0..20 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let shape = gen_shape(&mut rng, 0.0).unwrap();
            assert!(
                shape.radial_variance() < 0.05,
                "seed {seed}: radial variance {}",
                shape.radial_variance()
            );
        }
    }

    #[test]
    fn accepted_contours_are_simple_and_sized() {
        for seed in 0..50 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let shape = gen_shape(&mut rng, 0.9).unwrap();
            assert!(polyline_is_simple(shape.points()), "seed {seed}");
            assert!(shape.area() >= MIN_AREA, "seed {seed}: area {}", shape.area());
        }
    }

    #[test]
    fn same_seed_same_vertices() {
        let a = gen_shape(&mut ChaCha12Rng::seed_from_u64(7), 0.6).unwrap();
        let b = gen_shape(&mut ChaCha12Rng::seed_from_u64(7), 0.6).unwrap();
        assert_eq!(a.points(), b.points());
    }

    #[test]
    fn contours_fit_the_unit_box() {
        let shape = gen_shape(&mut ChaCha12Rng::seed_from_u64(3), 0.8).unwrap();
        for p in shape.points() {
            assert!((-1e-9..=1.0 + 1e-9).contains(&p[0]));
            assert!((-1e-9..=1.0 + 1e-9).contains(&p[1]));
        }
        let touches_one = shape
            .points()
            .iter()
            .any(|p| (p[0] - 1.0).abs() < 1e-9 || (p[1] - 1.0).abs() < 1e-9);
        assert!(touches_one, "longest extent should be exactly 1");
    }
}
