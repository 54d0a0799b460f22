//! The 13-task catalog: scene samplers and the label oracle.
//!
//! Each task pairs a *sampler* (draws a scene satisfying one category) with a
//! declarative *predicate* evaluated by [`verify_category`] on placed vertex
//! lists. A sample is only emitted when the oracle validates the intended
//! category and rejects the opposite one, so labels can never drift from the
//! geometry even if a sampler is wrong.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    centroid, congruence_residual, mirror_about_vertical, poly_contains_poly, poly_min_dist,
    polys_edges_intersect, similarity_match, translated_match, Pt,
};
use crate::scene::{render_scene, SceneItem, SceneSpec, BORDER_MARGIN, NOMINAL_CANVAS};
use crate::shape::{gen_shape, ShapeContour, REJECTION_BUDGET};
use crate::SvrtError;

/// Task ids implemented by this generator.
pub const SUPPORTED_TASKS: [u32; 13] = [1, 2, 4, 5, 10, 11, 15, 16, 19, 21, 22, 23, 25];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    SameDifferent,
    SpatialRelation,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::SameDifferent => write!(f, "SD"),
            Family::SpatialRelation => write!(f, "SR"),
        }
    }
}

/// Quantified thresholds behind the informal task wordings. Recorded in every
/// dataset manifest so downstream claims can cite the exact predicate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskParams {
    /// "Near the boundary": centroid within this fraction of the side.
    pub near_frac: f64,
    /// Opposite category must be beyond this fraction (dead zone between).
    pub far_frac: f64,
    /// Minimum big/small scale contrast wherever a size difference is a cue.
    pub size_ratio: f64,
    /// Scale factor range for scaled-copy tasks.
    pub scale_range: [f64; 2],
    /// Rotation range (degrees) for rotated-copy tasks; excludes identity.
    pub rotation_range_deg: [f64; 2],
    /// "Touching": boundary distance at most this many nominal px.
    pub contact_tol: f64,
    /// "Apart": at least this many nominal px.
    pub apart_min: f64,
    /// Congruence residual below which shapes count as identical.
    pub congruence_tol: f64,
    /// Residual above which shapes count as different.
    pub distinct_margin: f64,
}

impl Default for TaskParams {
    fn default() -> Self {
        TaskParams {
            near_frac: 0.15,
            far_frac: 0.30,
            size_ratio: 1.8,
            scale_range: [1.3, 2.0],
            rotation_range_deg: [30.0, 330.0],
            contact_tol: 1.0,
            apart_min: 6.0,
            congruence_tol: 1e-9,
            distinct_margin: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: u32,
    pub family: Family,
    /// Informal statement of the label-1 category.
    pub rule: &'static str,
    pub params: TaskParams,
}

impl TaskSpec {
    pub fn new(id: u32) -> Result<Self, SvrtError> {
        let (family, rule) = match id {
            1 => (Family::SameDifferent, "the two shapes are identical up to translation"),
            2 => (Family::SpatialRelation, "the smaller shape sits near the image boundary"),
            4 => (Family::SpatialRelation, "the small shape lies inside the large one"),
            5 => (Family::SameDifferent, "the four shapes form two identical pairs"),
            10 => (Family::SpatialRelation, "the arrangement is mirror-symmetric about the vertical midline"),
            11 => (Family::SpatialRelation, "the two shapes are in contact"),
            15 => (Family::SameDifferent, "four identical shapes arranged in a square"),
            16 => (Family::SameDifferent, "all six shapes are identical"),
            19 => (Family::SameDifferent, "one shape is a scaled copy of the other"),
            21 => (Family::SameDifferent, "one shape is a scaled and rotated copy of the other"),
            22 => (Family::SameDifferent, "all three shapes are identical"),
            23 => (Family::SpatialRelation, "the two small shapes are on the same side of the large one"),
            25 => (Family::SameDifferent, "one shape is a rotated (never scaled) copy of the other"),
            _ => return Err(SvrtError::UnsupportedTask(id)),
        };
        Ok(TaskSpec { id, family, rule, params: TaskParams::default() })
    }
}

/// One generated, oracle-checked sample.
#[derive(Debug, Clone)]
pub struct Sample {
    pub label: u8,
    /// Row-major `size`×`size`, 255 background.
    pub image: Vec<u8>,
    pub size: usize,
    pub scene: SceneSpec,
    pub seed: u64,
}

/// Draws one sample of the requested category and double-checks the label
/// against [`verify_category`] before rendering.
pub fn gen_task_sample(
    task: &TaskSpec,
    category: u8,
    seed: u64,
    size: usize,
) -> Result<Sample, SvrtError> {
    assert!(category <= 1, "category must be 0 or 1");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..REJECTION_BUDGET {
        let Some(scene) = sample_scene(task, category, &mut rng)? else {
            continue;
        };
        if verify_category(task, &scene, category)
            && !verify_category(task, &scene, 1 - category)
            && scene.in_bounds()
        {
            let image = render_scene(&scene, size)?;
            return Ok(Sample { label: category, image, size, scene, seed });
        }
    }
    Err(SvrtError::SampleBudget { task: task.id, category, seed })
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

fn sample_scene(
    task: &TaskSpec,
    category: u8,
    rng: &mut ChaCha12Rng,
) -> Result<Option<SceneSpec>, SvrtError> {
    let p = &task.params;
    let same = category == 1;
    let scene = match task.id {
        1 => {
            let s = rng.random_range(22.0..30.0);
            let shapes = if same {
                let c = shape(rng)?;
                vec![c.clone(), c]
            } else {
                distinct_shapes(rng, 2, p.distinct_margin)?
            };
            let specs: Vec<Placement> =
                shapes.into_iter().map(|c| Placement::plain(c, s)).collect();
            place_all(rng, &specs, 4.0)
        }
        2 => sample_near_boundary(rng, p, category),
        4 => sample_containment(rng, category),
        5 => {
            let shapes = if same {
                let pair = distinct_shapes(rng, 2, p.distinct_margin)?;
                vec![pair[0].clone(), pair[0].clone(), pair[1].clone(), pair[1].clone()]
            } else {
                distinct_shapes(rng, 4, p.distinct_margin)?
            };
            let s0 = rng.random_range(16.0..22.0);
            let s1 = rng.random_range(16.0..22.0);
            let scales = if same {
                [s0, s0, s1, s1]
            } else {
                [s0, s1, rng.random_range(16.0..22.0), rng.random_range(16.0..22.0)]
            };
            let specs: Vec<Placement> = shapes
                .into_iter()
                .zip(scales)
                .map(|(c, s)| Placement::plain(c, s))
                .collect();
            place_all(rng, &specs, 3.0)
        }
        10 => sample_mirror(rng, p, category)?,
        11 => sample_contact(rng, p, category)?,
        15 => sample_square(rng, p, category)?,
        16 => sample_all_same(rng, p, category, 6, 15.0..19.0)?,
        19 => sample_transformed_copy(rng, p, category, TransformKind::Scale),
        21 => sample_transformed_copy(rng, p, category, TransformKind::ScaleAndRotate),
        22 => sample_all_same(rng, p, category, 3, 20.0..26.0)?,
        23 => sample_side_split(rng, category)?,
        25 => sample_transformed_copy(rng, p, category, TransformKind::RotateOnly),
        other => return Err(SvrtError::UnsupportedTask(other)),
    };
    Ok(scene)
}

struct Placement {
    contour: ShapeContour,
    scale: f64,
    rotation: f64,
    reflect: bool,
}

impl Placement {
    fn plain(contour: ShapeContour, scale: f64) -> Self {
        Placement { contour, scale, rotation: 0.0, reflect: false }
    }
}

fn shape(rng: &mut ChaCha12Rng) -> Result<ShapeContour, SvrtError> {
    let complexity = rng.random_range(0.35..0.85);
    gen_shape(rng, complexity)
}

fn distinct_shapes(
    rng: &mut ChaCha12Rng,
    k: usize,
    margin: f64,
) -> Result<Vec<ShapeContour>, SvrtError> {
    let mut out: Vec<ShapeContour> = Vec::with_capacity(k);
    'outer: for _ in 0..REJECTION_BUDGET {
        let candidate = shape(rng)?;
        for prev in &out {
            if congruence_residual(prev.points(), candidate.points()) <= margin {
                continue 'outer;
            }
        }
        out.push(candidate);
        if out.len() == k {
            return Ok(out);
        }
    }
    Err(SvrtError::RejectionBudget { what: format!("{k} pairwise distinct contours") })
}

fn aabb(poly: &[Pt]) -> [Pt; 2] {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in poly {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    [lo, hi]
}

fn boxes_apart(a: &[Pt; 2], b: &[Pt; 2], gap: f64) -> bool {
    a[1][0] + gap < b[0][0]
        || b[1][0] + gap < a[0][0]
        || a[1][1] + gap < b[0][1]
        || b[1][1] + gap < a[0][1]
}

fn in_bounds(poly: &[Pt]) -> bool {
    poly.iter().all(|p| {
        p[0] >= BORDER_MARGIN
            && p[0] <= NOMINAL_CANVAS - BORDER_MARGIN
            && p[1] >= BORDER_MARGIN
            && p[1] <= NOMINAL_CANVAS - BORDER_MARGIN
    })
}

/// Clearance between two placed polygons, AABB-accelerated.
fn clearance(a: &[Pt], b: &[Pt], gap: f64) -> bool {
    if boxes_apart(&aabb(a), &aabb(b), gap) {
        return true;
    }
    !polys_edges_intersect(a, b) && poly_min_dist(a, b) >= gap
}

/// Places every spec at a uniform random in-bounds position with pairwise
/// clearance `gap`; `None` when the layout doesn't fit within the try budget.
fn place_all(rng: &mut ChaCha12Rng, specs: &[Placement], gap: f64) -> Option<SceneSpec> {
    let mut items: Vec<SceneItem> = Vec::with_capacity(specs.len());
    let mut placed: Vec<Vec<Pt>> = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut ok = false;
        for _ in 0..REJECTION_BUDGET {
            let item = SceneItem {
                contour: spec.contour.clone(),
                position: random_position(rng, spec.scale),
                scale: spec.scale,
                rotation: spec.rotation,
                reflect: spec.reflect,
            };
            let poly = item.placed();
            if in_bounds(&poly) && placed.iter().all(|q| clearance(&poly, q, gap)) {
                items.push(item);
                placed.push(poly);
                ok = true;
                break;
            }
        }
        if !ok {
            return None;
        }
    }
    Some(SceneSpec::new(items))
}

fn random_position(rng: &mut ChaCha12Rng, scale: f64) -> Pt {
    // A unit contour never extends more than its full extent from the
    // centroid; the exact check happens on placed vertices.
    let lo = BORDER_MARGIN + scale * 0.8;
    let hi = NOMINAL_CANVAS - BORDER_MARGIN - scale * 0.8;
    [rng.random_range(lo..hi), rng.random_range(lo..hi)]
}

fn sample_near_boundary(rng: &mut ChaCha12Rng, p: &TaskParams, category: u8) -> Option<SceneSpec> {
    let s = NOMINAL_CANVAS;
    let ratio = rng.random_range(p.size_ratio..p.size_ratio + 0.4);
    let big_scale = rng.random_range(30.0..36.0);
    let small_scale = big_scale / ratio;
    let big = shape(rng).ok()?;
    let small = shape(rng).ok()?;

    for _ in 0..REJECTION_BUDGET {
        // Pick the small shape's centroid by its distance to the nearest edge.
        let d = if category == 1 {
            rng.random_range(BORDER_MARGIN + small_scale * 0.8..p.near_frac * s)
        } else {
            rng.random_range(p.far_frac * s..0.5 * s)
        };
        let along = rng.random_range(d..s - d);
        let small_pos = match rng.random_range(0..4) {
            0 => [along, d],
            1 => [along, s - d],
            2 => [d, along],
            _ => [s - d, along],
        };
        let small_item = SceneItem {
            contour: small.clone(),
            position: small_pos,
            scale: small_scale,
            rotation: 0.0,
            reflect: false,
        };
        let small_poly = small_item.placed();
        if !in_bounds(&small_poly) {
            continue;
        }
        let big_item = SceneItem {
            contour: big.clone(),
            position: random_position(rng, big_scale),
            scale: big_scale,
            rotation: 0.0,
            reflect: false,
        };
        let big_poly = big_item.placed();
        if in_bounds(&big_poly) && clearance(&small_poly, &big_poly, 3.0) {
            return Some(SceneSpec::new(vec![big_item, small_item]));
        }
    }
    None
}

/// Position draw for a shape that must land inside `big_poly`: uniform over
/// the big shape's bounding box, shrunk by the small shape's reach.
fn interior_position(rng: &mut ChaCha12Rng, big_poly: &[Pt], small_scale: f64) -> Option<Pt> {
    let [lo, hi] = aabb(big_poly);
    let pad = small_scale * 0.8;
    if hi[0] - lo[0] <= 2.0 * pad || hi[1] - lo[1] <= 2.0 * pad {
        return None;
    }
    Some([
        rng.random_range(lo[0] + pad..hi[0] - pad),
        rng.random_range(lo[1] + pad..hi[1] - pad),
    ])
}

fn sample_containment(rng: &mut ChaCha12Rng, category: u8) -> Option<SceneSpec> {
    let big_complexity = rng.random_range(0.2..0.5);
    let big_contour = gen_shape(rng, big_complexity).ok()?;
    let small_contour = shape(rng).ok()?;
    let big_scale = rng.random_range(46.0..56.0);
    let small_scale = rng.random_range(12.0..16.0);

    for _ in 0..REJECTION_BUDGET {
        let big = SceneItem {
            contour: big_contour.clone(),
            position: random_position(rng, big_scale),
            scale: big_scale,
            rotation: 0.0,
            reflect: false,
        };
        let big_poly = big.placed();
        if !in_bounds(&big_poly) {
            continue;
        }
        let small_pos = if category == 1 {
            match interior_position(rng, &big_poly, small_scale) {
                Some(pos) => pos,
                None => continue,
            }
        } else {
            random_position(rng, small_scale)
        };
        let small = SceneItem {
            contour: small_contour.clone(),
            position: small_pos,
            scale: small_scale,
            rotation: 0.0,
            reflect: false,
        };
        let small_poly = small.placed();
        if !in_bounds(&small_poly) {
            continue;
        }
        let ok = if category == 1 {
            poly_contains_poly(&big_poly, &small_poly)
                && poly_min_dist(&big_poly, &small_poly) >= 2.0
        } else {
            clearance(&big_poly, &small_poly, 2.0)
                && !small_poly.iter().any(|&q| crate::geometry::point_in_polygon(q, &big_poly))
        };
        if ok {
            return Some(SceneSpec::new(vec![big, small]));
        }
    }
    None
}

fn sample_mirror(
    rng: &mut ChaCha12Rng,
    p: &TaskParams,
    category: u8,
) -> Result<Option<SceneSpec>, SvrtError> {
    let mid = NOMINAL_CANVAS / 2.0;
    if category == 1 {
        'outer: for _ in 0..REJECTION_BUDGET {
            let mut items: Vec<SceneItem> = Vec::new();
            let mut placed: Vec<Vec<Pt>> = Vec::new();
            for _ in 0..2 {
                let contour = shape(rng)?;
                let scale = rng.random_range(16.0..22.0);
                let mut ok = false;
                for _ in 0..REJECTION_BUDGET {
                    let x = rng.random_range(BORDER_MARGIN + scale * 0.8..mid - scale * 0.9);
                    let y = rng.random_range(
                        BORDER_MARGIN + scale * 0.8..NOMINAL_CANVAS - BORDER_MARGIN - scale * 0.8,
                    );
                    let left = SceneItem {
                        contour: contour.clone(),
                        position: [x, y],
                        scale,
                        rotation: 0.0,
                        reflect: false,
                    };
                    let right = SceneItem {
                        contour: contour.clone(),
                        position: [NOMINAL_CANVAS - x, y],
                        scale,
                        rotation: 0.0,
                        reflect: true,
                    };
                    let lp = left.placed();
                    let rp = right.placed();
                    let clear = in_bounds(&lp)
                        && in_bounds(&rp)
                        && clearance(&lp, &rp, 3.0)
                        && placed.iter().all(|q| clearance(&lp, q, 3.0) && clearance(&rp, q, 3.0));
                    if clear {
                        items.push(left);
                        items.push(right);
                        placed.push(lp);
                        placed.push(rp);
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    continue 'outer;
                }
            }
            return Ok(Some(SceneSpec::new(items)));
        }
        Ok(None)
    } else {
        let shapes = distinct_shapes(rng, 4, p.distinct_margin)?;
        let specs: Vec<Placement> = shapes
            .into_iter()
            .map(|c| Placement::plain(c, rng.random_range(16.0..22.0)))
            .collect();
        Ok(place_all(rng, &specs, 3.0))
    }
}

fn sample_contact(
    rng: &mut ChaCha12Rng,
    p: &TaskParams,
    category: u8,
) -> Result<Option<SceneSpec>, SvrtError> {
    let shapes = distinct_shapes(rng, 2, p.distinct_margin)?;
    let (sa, sb) = (rng.random_range(20.0..28.0), rng.random_range(20.0..28.0));
    if category == 0 {
        let specs =
            vec![Placement::plain(shapes[0].clone(), sa), Placement::plain(shapes[1].clone(), sb)];
        return Ok(place_all(rng, &specs, p.apart_min));
    }
    for _ in 0..REJECTION_BUDGET {
        let a = SceneItem {
            contour: shapes[0].clone(),
            position: random_position(rng, sa + sb),
            scale: sa,
            rotation: 0.0,
            reflect: false,
        };
        let a_poly = a.placed();
        if !in_bounds(&a_poly) {
            continue;
        }
        // Approach along a random direction in small steps until the
        // boundaries come within the contact tolerance.
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let dir = [theta.cos(), theta.sin()];
        let start = sa + sb;
        let step = 0.25;
        let mut t = 0.0;
        let mut prev: Option<(SceneItem, f64)> = None;
        while t < start {
            let pos = [a.position[0] + dir[0] * (start - t), a.position[1] + dir[1] * (start - t)];
            let b = SceneItem {
                contour: shapes[1].clone(),
                position: pos,
                scale: sb,
                rotation: 0.0,
                reflect: false,
            };
            let b_poly = b.placed();
            if !in_bounds(&b_poly) {
                break;
            }
            if polys_edges_intersect(&a_poly, &b_poly) {
                // Crossed over: the previous step (if any) is the closest
                // non-overlapping placement.
                break;
            }
            let d = poly_min_dist(&a_poly, &b_poly);
            if d <= p.contact_tol {
                if d > 0.0 {
                    return Ok(Some(SceneSpec::new(vec![a, b])));
                }
                break;
            }
            prev = Some((b, d));
            t += step;
        }
        if let Some((b, d)) = prev {
            if d <= p.contact_tol && d > 0.0 {
                return Ok(Some(SceneSpec::new(vec![a, b])));
            }
        }
    }
    Ok(None)
}

fn sample_square(
    rng: &mut ChaCha12Rng,
    p: &TaskParams,
    category: u8,
) -> Result<Option<SceneSpec>, SvrtError> {
    for _ in 0..REJECTION_BUDGET {
        let scale = rng.random_range(14.0..19.0);
        let center = [rng.random_range(52.0..76.0), rng.random_range(52.0..76.0)];
        let half_diag = rng.random_range(24.0..30.0);
        let phi = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let corners: Vec<Pt> = (0..4)
            .map(|k| {
                let a = phi + k as f64 * std::f64::consts::FRAC_PI_2;
                [center[0] + half_diag * a.cos(), center[1] + half_diag * a.sin()]
            })
            .collect();
        let positions: Vec<Pt> = if category == 1 {
            corners
        } else {
            let jolted: Vec<Pt> = corners
                .iter()
                .map(|c| {
                    let dx = rng.random_range(6.0..12.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    let dy = rng.random_range(6.0..12.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    [c[0] + dx, c[1] + dy]
                })
                .collect();
            if is_square(&jolted, 3.0) {
                continue;
            }
            jolted
        };
        let shapes = if category == 1 {
            vec![shape(rng)?; 4]
        } else {
            distinct_shapes(rng, 4, p.distinct_margin)?
        };
        let items: Vec<SceneItem> = shapes
            .into_iter()
            .zip(&positions)
            .map(|(contour, &position)| SceneItem {
                contour,
                position,
                scale,
                rotation: 0.0,
                reflect: false,
            })
            .collect();
        let placed: Vec<Vec<Pt>> = items.iter().map(SceneItem::placed).collect();
        let clear = placed.iter().all(|q| in_bounds(q))
            && (0..4).all(|i| (i + 1..4).all(|j| clearance(&placed[i], &placed[j], 2.0)));
        if clear {
            return Ok(Some(SceneSpec::new(items)));
        }
    }
    Ok(None)
}

/// Side/diagonal regularity test on four centroids, tolerance in nominal px.
pub fn is_square(pts: &[Pt], tol: f64) -> bool {
    if pts.len() != 4 {
        return false;
    }
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / 4.0;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / 4.0;
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| {
        let ai = (pts[i][1] - cy).atan2(pts[i][0] - cx);
        let aj = (pts[j][1] - cy).atan2(pts[j][0] - cx);
        ai.partial_cmp(&aj).unwrap()
    });
    let at = |k: usize| pts[order[k % 4]];
    let sides: Vec<f64> = (0..4).map(|k| crate::geometry::dist(at(k), at(k + 1))).collect();
    let diags = [crate::geometry::dist(at(0), at(2)), crate::geometry::dist(at(1), at(3))];
    let side_mean = sides.iter().sum::<f64>() / 4.0;
    sides.iter().all(|s| (s - side_mean).abs() <= tol)
        && (diags[0] - diags[1]).abs() <= tol
        && (diags[0] - side_mean * std::f64::consts::SQRT_2).abs() <= 2.0 * tol
}

fn sample_all_same(
    rng: &mut ChaCha12Rng,
    p: &TaskParams,
    category: u8,
    count: usize,
    scale_range: std::ops::Range<f64>,
) -> Result<Option<SceneSpec>, SvrtError> {
    let specs: Vec<Placement> = if category == 1 {
        let contour = shape(rng)?;
        let scale = rng.random_range(scale_range);
        (0..count).map(|_| Placement::plain(contour.clone(), scale)).collect()
    } else {
        distinct_shapes(rng, count, p.distinct_margin)?
            .into_iter()
            .map(|c| Placement::plain(c, rng.random_range(scale_range.clone())))
            .collect()
    };
    Ok(place_all(rng, &specs, 2.0))
}

enum TransformKind {
    Scale,
    ScaleAndRotate,
    RotateOnly,
}

fn sample_transformed_copy(
    rng: &mut ChaCha12Rng,
    p: &TaskParams,
    category: u8,
    kind: TransformKind,
) -> Option<SceneSpec> {
    let base_scale = rng.random_range(16.0..20.0);
    let factor = rng.random_range(p.scale_range[0]..p.scale_range[1]);
    let deg = rng.random_range(p.rotation_range_deg[0]..p.rotation_range_deg[1]);
    let (scale2, rot2) = match kind {
        TransformKind::Scale => (base_scale * factor, 0.0),
        TransformKind::ScaleAndRotate => (base_scale * factor, deg.to_radians()),
        TransformKind::RotateOnly => (base_scale, deg.to_radians()),
    };
    let shapes = if category == 1 {
        let c = shape(rng).ok()?;
        vec![c.clone(), c]
    } else {
        distinct_shapes(rng, 2, p.distinct_margin).ok()?
    };
    let specs = vec![
        Placement::plain(shapes[0].clone(), base_scale),
        Placement { contour: shapes[1].clone(), scale: scale2, rotation: rot2, reflect: false },
    ];
    place_all(rng, &specs, 3.0)
}

fn sample_side_split(
    rng: &mut ChaCha12Rng,
    category: u8,
) -> Result<Option<SceneSpec>, SvrtError> {
    let big_complexity = rng.random_range(0.2..0.5);
    let big_contour = gen_shape(rng, big_complexity)?;
    let small_contours = [shape(rng)?, shape(rng)?];
    let big_scale = rng.random_range(50.0..58.0);
    let small_scale = rng.random_range(10.0..13.0);
    // label 1: both small shapes share a side (both inside or both outside);
    // label 0: exactly one inside.
    let insides: [bool; 2] = if category == 1 {
        let both_in = rng.random_bool(0.5);
        [both_in, both_in]
    } else if rng.random_bool(0.5) {
        [true, false]
    } else {
        [false, true]
    };

    'outer: for _ in 0..REJECTION_BUDGET {
        let big = SceneItem {
            contour: big_contour.clone(),
            position: random_position(rng, big_scale),
            scale: big_scale,
            rotation: 0.0,
            reflect: false,
        };
        let big_poly = big.placed();
        if !in_bounds(&big_poly) {
            continue;
        }
        let mut items = vec![big.clone()];
        let mut placed = vec![big_poly.clone()];
        for (contour, &inside) in small_contours.iter().zip(&insides) {
            let mut ok = false;
            for _ in 0..REJECTION_BUDGET {
                let pos = if inside {
                    match interior_position(rng, &big_poly, small_scale) {
                        Some(pos) => pos,
                        None => break,
                    }
                } else {
                    random_position(rng, small_scale)
                };
                let item = SceneItem {
                    contour: contour.clone(),
                    position: pos,
                    scale: small_scale,
                    rotation: 0.0,
                    reflect: false,
                };
                let poly = item.placed();
                if !in_bounds(&poly) {
                    continue;
                }
                let relation_ok = if inside {
                    poly_contains_poly(&big_poly, &poly) && poly_min_dist(&big_poly, &poly) >= 2.0
                } else {
                    clearance(&big_poly, &poly, 2.0)
                        && !poly.iter().any(|&q| crate::geometry::point_in_polygon(q, &big_poly))
                };
                let others_ok = placed[1..].iter().all(|q| clearance(&poly, q, 2.0));
                if relation_ok && others_ok {
                    items.push(item);
                    placed.push(poly);
                    ok = true;
                    break;
                }
            }
            if !ok {
                continue 'outer;
            }
        }
        return Ok(Some(SceneSpec::new(items)));
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

/// Pure-geometry predicate: does `scene` satisfy `category` of `task`?
/// Never inspects pixels; works on placed vertex lists and scene scales.
pub fn verify_category(task: &TaskSpec, scene: &SceneSpec, category: u8) -> bool {
    let p = &task.params;
    let polys = scene.placed();
    let same = category == 1;
    match task.id {
        1 => {
            polys.len() == 2
                && if same {
                    translated_match(&polys[0], &polys[1], p.congruence_tol)
                } else {
                    congruence_residual(&polys[0], &polys[1]) > p.distinct_margin
                }
        }
        2 => {
            if polys.len() != 2 {
                return false;
            }
            let (a, b) = (&scene.items[0], &scene.items[1]);
            let (big, small, small_poly) =
                if a.scale >= b.scale { (a, b, &polys[1]) } else { (b, a, &polys[0]) };
            if big.scale / small.scale < p.size_ratio - 1e-9 {
                return false;
            }
            let c = centroid(small_poly);
            let edge_dist = c[0]
                .min(c[1])
                .min(NOMINAL_CANVAS - c[0])
                .min(NOMINAL_CANVAS - c[1]);
            if same {
                edge_dist <= p.near_frac * NOMINAL_CANVAS
            } else {
                edge_dist >= p.far_frac * NOMINAL_CANVAS
            }
        }
        4 => {
            if polys.len() != 2 {
                return false;
            }
            let (outer, inner) =
                if scene.items[0].scale >= scene.items[1].scale { (0, 1) } else { (1, 0) };
            if same {
                poly_contains_poly(&polys[outer], &polys[inner])
            } else {
                poly_min_dist(&polys[outer], &polys[inner]) > 0.0
                    && !polys[inner]
                        .iter()
                        .any(|&q| crate::geometry::point_in_polygon(q, &polys[outer]))
            }
        }
        5 => {
            if polys.len() != 4 {
                return false;
            }
            let classes = congruence_classes(&polys, p.congruence_tol);
            if same {
                let mut sizes = [0usize; 4];
                for &c in &classes {
                    sizes[c] += 1;
                }
                let n_classes = classes.iter().max().unwrap() + 1;
                n_classes == 2
                    && sizes[..2].iter().all(|&s| s == 2)
                    && cross_class_distinct(&polys, &classes, p.distinct_margin)
            } else {
                all_pairwise_distinct(&polys, p.distinct_margin)
            }
        }
        10 => {
            let mid = NOMINAL_CANVAS / 2.0;
            let mirrored: Vec<Vec<Pt>> =
                polys.iter().map(|q| mirror_about_vertical(q, mid)).collect();
            if same {
                // Perfect matching: every polygon's mirror image appears
                // exactly once in the scene.
                let n = polys.len();
                let mut used = vec![false; n];
                for m in &mirrored {
                    let mut found = false;
                    for (j, q) in polys.iter().enumerate() {
                        if !used[j] && translated_match(m, q, p.congruence_tol) {
                            used[j] = true;
                            found = true;
                            break;
                        }
                    }
                    if !found {
                        return false;
                    }
                }
                true
            } else {
                mirrored.iter().all(|m| {
                    polys.iter().all(|q| congruence_residual(m, q) > p.distinct_margin)
                })
            }
        }
        11 => {
            if polys.len() != 2 {
                return false;
            }
            let d = poly_min_dist(&polys[0], &polys[1]);
            if same {
                d > 0.0 && d <= p.contact_tol && !polys_edges_intersect(&polys[0], &polys[1])
            } else {
                d >= p.apart_min
            }
        }
        15 => {
            if polys.len() != 4 {
                return false;
            }
            let centers: Vec<Pt> = polys.iter().map(|q| centroid(q)).collect();
            if same {
                all_pairwise_congruent(&polys, p.congruence_tol) && is_square(&centers, 1.0)
            } else {
                all_pairwise_distinct(&polys, p.distinct_margin) && !is_square(&centers, 3.0)
            }
        }
        16 | 22 => {
            let want = if task.id == 16 { 6 } else { 3 };
            polys.len() == want
                && if same {
                    all_pairwise_congruent(&polys, p.congruence_tol)
                } else {
                    all_pairwise_distinct(&polys, p.distinct_margin)
                }
        }
        19 | 21 | 25 => {
            if polys.len() != 2 {
                return false;
            }
            if !same {
                return congruence_residual(&polys[0], &polys[1]) > p.distinct_margin;
            }
            let Some(m) = similarity_match(&polys[0], &polys[1]) else {
                return false;
            };
            if m.residual >= p.congruence_tol {
                return false;
            }
            // The pair is unordered: accept the transform in either direction.
            let scale = if m.scale >= 1.0 { m.scale } else { 1.0 / m.scale };
            let deg = m.rotation.to_degrees().rem_euclid(360.0);
            let scale_in_range =
                scale >= p.scale_range[0] - 1e-6 && scale <= p.scale_range[1] + 1e-6;
            let rot_in_range = deg >= p.rotation_range_deg[0] - 1e-6
                && deg <= p.rotation_range_deg[1] + 1e-6;
            let rot_identity = deg < 1e-6 || deg > 360.0 - 1e-6;
            match task.id {
                19 => scale_in_range && rot_identity,
                21 => scale_in_range && rot_in_range,
                _ => (scale - 1.0).abs() < 1e-9 && rot_in_range,
            }
        }
        23 => {
            if polys.len() != 3 {
                return false;
            }
            let big = scene
                .items
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.scale.partial_cmp(&b.1.scale).unwrap())
                .unwrap()
                .0;
            let big_poly = &polys[big];
            let mut status = Vec::new();
            for (i, poly) in polys.iter().enumerate() {
                if i == big {
                    continue;
                }
                if poly_contains_poly(big_poly, poly) {
                    status.push(true);
                } else if poly_min_dist(big_poly, poly) > 0.0
                    && !poly.iter().any(|&q| crate::geometry::point_in_polygon(q, big_poly))
                {
                    status.push(false);
                } else {
                    return false;
                }
            }
            if same {
                status[0] == status[1]
            } else {
                status[0] != status[1]
            }
        }
        _ => false,
    }
}

fn congruence_classes(polys: &[Vec<Pt>], tol: f64) -> Vec<usize> {
    let mut reps: Vec<usize> = Vec::new();
    let mut classes = Vec::with_capacity(polys.len());
    for (i, poly) in polys.iter().enumerate() {
        let found = reps
            .iter()
            .position(|&r| translated_match(&polys[r], poly, tol));
        match found {
            Some(c) => classes.push(c),
            None => {
                reps.push(i);
                classes.push(reps.len() - 1);
            }
        }
    }
    classes
}

fn cross_class_distinct(polys: &[Vec<Pt>], classes: &[usize], margin: f64) -> bool {
    for i in 0..polys.len() {
        for j in (i + 1)..polys.len() {
            if classes[i] != classes[j] && congruence_residual(&polys[i], &polys[j]) <= margin {
                return false;
            }
        }
    }
    true
}

fn all_pairwise_congruent(polys: &[Vec<Pt>], tol: f64) -> bool {
    (0..polys.len())
        .all(|i| (i + 1..polys.len()).all(|j| translated_match(&polys[i], &polys[j], tol)))
}

fn all_pairwise_distinct(polys: &[Vec<Pt>], margin: f64) -> bool {
    (0..polys.len())
        .all(|i| (i + 1..polys.len()).all(|j| congruence_residual(&polys[i], &polys[j]) > margin))
}
