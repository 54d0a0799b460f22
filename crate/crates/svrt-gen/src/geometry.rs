//! Pure-geometry predicates over closed polylines.
//!
//! Everything in this module works on vertex lists in scene coordinates and
//! never looks at pixels. Generated samples are labelled by these predicates
//! *before* rasterization, so rendering bugs cannot silently flip a label.
//!
//! Polygons are stored as open vertex lists; the closing edge from the last
//! vertex back to the first is implied.

pub type Pt = [f64; 2];

pub fn sub(a: Pt, b: Pt) -> Pt {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn dist(a: Pt, b: Pt) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Cross product of (a−o) and (b−o): positive when o→a→b turns left.
pub fn cross(o: Pt, a: Pt, b: Pt) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: Pt, a: Pt, b: Pt) -> bool {
    cross(a, b, p).abs() < 1e-12
        && p[0] >= a[0].min(b[0]) - 1e-12
        && p[0] <= a[0].max(b[0]) + 1e-12
        && p[1] >= a[1].min(b[1]) - 1e-12
        && p[1] <= a[1].max(b[1]) + 1e-12
}

/// True when segments ab and cd share any point (crossing, touching, or
/// collinear overlap).
pub fn segments_intersect(a: Pt, b: Pt, c: Pt, d: Pt) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1.abs() < 1e-12 && on_segment(a, c, d))
        || (d2.abs() < 1e-12 && on_segment(b, c, d))
        || (d3.abs() < 1e-12 && on_segment(c, a, b))
        || (d4.abs() < 1e-12 && on_segment(d, a, b))
}

/// Closing edge included; edges sharing a vertex are exempt.
pub fn polyline_is_simple(poly: &[Pt]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let edge = |i: usize| (poly[i], poly[(i + 1) % n]);
    for i in 0..n {
        for j in (i + 1)..n {
            // Adjacent edges (including the last/first wrap pair) share an
            // endpoint by construction.
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (a, b) = edge(i);
            let (c, d) = edge(j);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Even-odd ray casting; points on the boundary count as inside.
pub fn point_in_polygon(p: Pt, poly: &[Pt]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if on_segment(p, a, b) {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn point_segment_dist(p: Pt, a: Pt, b: Pt) -> f64 {
    let ab = sub(b, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

pub fn segment_segment_dist(a: Pt, b: Pt, c: Pt, d: Pt) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_dist(a, c, d)
        .min(point_segment_dist(b, c, d))
        .min(point_segment_dist(c, a, b))
        .min(point_segment_dist(d, a, b))
}

/// Minimum distance between the boundaries of two polygons (0 when they touch
/// or cross; does not see containment).
pub fn poly_min_dist(pa: &[Pt], pb: &[Pt]) -> f64 {
    let na = pa.len();
    let nb = pb.len();
    let mut best = f64::INFINITY;
    for i in 0..na {
        for j in 0..nb {
            let d = segment_segment_dist(
                pa[i],
                pa[(i + 1) % na],
                pb[j],
                pb[(j + 1) % nb],
            );
            if d < best {
                best = d;
            }
        }
    }
    best
}

pub fn polys_edges_intersect(pa: &[Pt], pb: &[Pt]) -> bool {
    let na = pa.len();
    let nb = pb.len();
    for i in 0..na {
        for j in 0..nb {
            if segments_intersect(pa[i], pa[(i + 1) % na], pb[j], pb[(j + 1) % nb]) {
                return true;
            }
        }
    }
    false
}

/// Strict containment: every vertex of `inner` plus its centroid lies inside
/// `outer`, and no edges cross.
pub fn poly_contains_poly(outer: &[Pt], inner: &[Pt]) -> bool {
    if polys_edges_intersect(outer, inner) {
        return false;
    }
    inner.iter().all(|&p| point_in_polygon(p, outer)) && point_in_polygon(centroid(inner), outer)
}

pub fn shoelace_area(poly: &[Pt]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    (s / 2.0).abs()
}

/// Area centroid (independent of vertex spacing, unlike a vertex average).
pub fn centroid(poly: &[Pt]) -> Pt {
    let n = poly.len();
    let mut a2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let w = p[0] * q[1] - q[0] * p[1];
        a2 += w;
        cx += (p[0] + q[0]) * w;
        cy += (p[1] + q[1]) * w;
    }
    assert!(a2.abs() > 1e-12, "centroid of a degenerate polygon");
    [cx / (3.0 * a2), cy / (3.0 * a2)]
}

/// Best similarity transform (rotation + uniform scale, no reflection) mapping
/// `a` onto `b` under some cyclic vertex correspondence.
#[derive(Debug, Clone, Copy)]
pub struct Similarity {
    pub scale: f64,
    /// Radians in (−π, π].
    pub rotation: f64,
    /// RMS mismatch of the transformed vertices, relative to `b`'s RMS radius.
    pub residual: f64,
}

/// Returns `None` when the vertex counts differ (no correspondence exists for
/// contours produced by the same smoothing pipeline).
pub fn similarity_match(a: &[Pt], b: &[Pt]) -> Option<Similarity> {
    let n = a.len();
    if n != b.len() || n == 0 {
        return None;
    }
    let ca = centroid(a);
    let cb = centroid(b);
    let za: Vec<(f64, f64)> = a.iter().map(|p| (p[0] - ca[0], p[1] - ca[1])).collect();
    let zb: Vec<(f64, f64)> = b.iter().map(|p| (p[0] - cb[0], p[1] - cb[1])).collect();
    let norm_a: f64 = za.iter().map(|(x, y)| x * x + y * y).sum();
    let norm_b: f64 = zb.iter().map(|(x, y)| x * x + y * y).sum();
    if norm_a < 1e-24 || norm_b < 1e-24 {
        return None;
    }

    let mut best: Option<Similarity> = None;
    for shift in 0..n {
        // Least-squares w = s·e^{iθ} for w·a_i ≈ b_{i+shift}: w = Σāb / Σ|a|².
        let mut wr = 0.0;
        let mut wi = 0.0;
        for i in 0..n {
            let (ax, ay) = za[i];
            let (bx, by) = zb[(i + shift) % n];
            wr += ax * bx + ay * by;
            wi += ax * by - ay * bx;
        }
        wr /= norm_a;
        wi /= norm_a;
        let mut sse = 0.0;
        for i in 0..n {
            let (ax, ay) = za[i];
            let (bx, by) = zb[(i + shift) % n];
            let rx = wr * ax - wi * ay - bx;
            let ry = wi * ax + wr * ay - by;
            sse += rx * rx + ry * ry;
        }
        let residual = (sse / norm_b).sqrt();
        if best.is_none() || residual < best.unwrap().residual {
            best = Some(Similarity {
                scale: wr.hypot(wi),
                rotation: wi.atan2(wr),
                residual,
            });
        }
    }
    best
}

/// True when `b` is a pure translation of `a` (tolerance in scene units,
/// relative to shape size via the similarity residual).
pub fn translated_match(a: &[Pt], b: &[Pt], tol: f64) -> bool {
    match similarity_match(a, b) {
        Some(s) => s.residual < tol && (s.scale - 1.0).abs() < tol && s.rotation.abs() < tol,
        None => false,
    }
}

/// Residual of the best similarity match, or +∞ when shapes cannot correspond.
/// "Different shape" claims are asserted as `congruence_residual > margin`.
pub fn congruence_residual(a: &[Pt], b: &[Pt]) -> f64 {
    similarity_match(a, b).map_or(f64::INFINITY, |s| s.residual)
}

/// Reflects about the vertical line x = `axis_x` and restores the original
/// vertex orientation so the result can be matched against unreflected shapes.
pub fn mirror_about_vertical(poly: &[Pt], axis_x: f64) -> Vec<Pt> {
    let mut out: Vec<Pt> = poly.iter().map(|p| [2.0 * axis_x - p[0], p[1]]).collect();
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(cx: f64, cy: f64, half: f64) -> Vec<Pt> {
        vec![
            [cx - half, cy - half],
            [cx + half, cy - half],
            [cx + half, cy + half],
            [cx - half, cy + half],
        ]
    }

    #[test]
    fn crossing_segments_detected() {
        assert!(segments_intersect([0.0, 0.0], [2.0, 2.0], [0.0, 2.0], [2.0, 0.0]));
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]));
        // Shared endpoint counts as touching.
        assert!(segments_intersect([0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [2.0, 1.0]));
        // Collinear overlap.
        assert!(segments_intersect([0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [3.0, 0.0]));
        // Collinear but disjoint.
        assert!(!segments_intersect([0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]));
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bowtie = vec![[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0]];
        assert!(!polyline_is_simple(&bowtie));
        assert!(polyline_is_simple(&square(0.0, 0.0, 1.0)));
    }

    #[test]
    fn point_in_polygon_center_and_outside() {
        let sq = square(0.0, 0.0, 1.0);
        assert!(point_in_polygon([0.0, 0.0], &sq));
        assert!(point_in_polygon([0.999, 0.999], &sq));
        assert!(!point_in_polygon([1.5, 0.0], &sq));
        // Boundary point counts as inside.
        assert!(point_in_polygon([1.0, 0.0], &sq));
    }

    #[test]
    fn polygon_distance_between_separated_squares() {
        let a = square(0.0, 0.0, 1.0);
        let b = square(5.0, 0.0, 1.0);
        assert!((poly_min_dist(&a, &b) - 3.0).abs() < 1e-12);
        assert_eq!(poly_min_dist(&a, &square(1.5, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn containment_requires_all_vertices_inside() {
        let outer = square(0.0, 0.0, 2.0);
        assert!(poly_contains_poly(&outer, &square(0.0, 0.0, 1.0)));
        assert!(!poly_contains_poly(&outer, &square(1.8, 0.0, 1.0)));
        assert!(!poly_contains_poly(&square(0.0, 0.0, 1.0), &outer));
    }

    #[test]
    fn shoelace_and_centroid_of_known_shapes() {
        let sq = square(3.0, -2.0, 1.5);
        assert!((shoelace_area(&sq) - 9.0).abs() < 1e-12);
        let c = centroid(&sq);
        assert!((c[0] - 3.0).abs() < 1e-12 && (c[1] + 2.0).abs() < 1e-12);
        let tri = vec![[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]];
        assert!((shoelace_area(&tri) - 4.5).abs() < 1e-12);
        let c = centroid(&tri);
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn similarity_recovers_a_planted_transform() {
        let base: Vec<Pt> = (0..12)
            .map(|k| {
                let t = k as f64 / 12.0 * std::f64::consts::TAU;
                let r = 1.0 + 0.3 * (3.0 * t).sin();
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        let (s, th) = (1.7_f64, 0.9_f64);
        let moved: Vec<Pt> = base
            .iter()
            .map(|p| {
                [
                    s * (th.cos() * p[0] - th.sin() * p[1]) + 4.0,
                    s * (th.sin() * p[0] + th.cos() * p[1]) - 2.0,
                ]
            })
            .collect();
        // Rotate the starting index too: correspondence is unknown to the oracle.
        let shifted: Vec<Pt> = (0..12).map(|i| moved[(i + 5) % 12]).collect();
        let m = similarity_match(&base, &shifted).unwrap();
        assert!(m.residual < 1e-12, "residual {}", m.residual);
        assert!((m.scale - s).abs() < 1e-9);
        assert!((m.rotation - th).abs() < 1e-9);
    }

    #[test]
    fn translation_match_rejects_rotation_and_scale() {
        let tri = vec![[0.0, 0.0], [2.0, 0.0], [1.0, 1.7]];
        let shifted: Vec<Pt> = tri.iter().map(|p| [p[0] + 3.0, p[1] - 1.0]).collect();
        assert!(translated_match(&tri, &shifted, 1e-9));
        let scaled: Vec<Pt> = tri.iter().map(|p| [p[0] * 1.2, p[1] * 1.2]).collect();
        assert!(!translated_match(&tri, &scaled, 1e-9));
    }

    #[test]
    fn different_shapes_have_large_residual() {
        let tri = vec![[0.0, 0.0], [2.0, 0.0], [1.0, 1.7]];
        let skinny = vec![[0.0, 0.0], [2.0, 0.0], [1.9, 0.4]];
        assert!(congruence_residual(&tri, &skinny) > 0.05);
        // Different vertex counts → no correspondence at all.
        assert_eq!(congruence_residual(&tri, &square(0.0, 0.0, 1.0)), f64::INFINITY);
    }

    #[test]
    fn mirrored_polygon_matches_through_the_mirror_oracle() {
        let blob = vec![[0.0, 0.0], [2.0, 0.3], [2.4, 1.8], [0.7, 2.2], [-0.3, 1.0]];
        let mirrored = mirror_about_vertical(&blob, 5.0);
        assert!(translated_match(&mirror_about_vertical(&mirrored, 5.0), &blob, 1e-9));
        // The mirror image itself is *not* translation-congruent to the original
        // (asymmetric shape).
        assert!(congruence_residual(&blob, &mirrored) > 0.05);
    }
}
