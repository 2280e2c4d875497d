// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Seeded generation of primitive compositions: circles, ellipses,
//! triangles, rectangles, polygons, curves, and lines arranged by one of
//! four spatial relations, with ground-truth per-stroke regions and
//! enumerable drawing-order permutations.
//!
//! Relation predicates are evaluated on half-width-expanded bounding boxes
//! (regions), which keeps them cheap and independently checkable. The
//! generators additionally keep stroke outlines from touching each other so
//! that every rendered frame adds one connected piece of ink — compositions
//! stay cleanly separable for downstream order-extraction metrics.

use crate::geom::{derive_seed, dist_point_segment, Point, Rect, Rgb8};
use crate::svgpath::{PathCommand, SketchDocument, Stroke, DEFAULT_STROKE_WIDTH, DEFAULT_TOLERANCE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("size range must satisfy 0 < lo <= hi <= 1, got [{0}, {1}]")]
    InvalidSizeRange(f64, f64),
    #[error("{relation:?} needs between {min} and 8 shapes, got {n}")]
    InvalidShapeCount { relation: Relation, n: usize, min: usize },
    #[error("no valid {relation:?} placement found in {attempts} attempts")]
    PlacementFailure { relation: Relation, attempts: usize },
    #[error("requested {requested} orders but only {available} exist")]
    TooManyOrders { requested: usize, available: u64 },
    #[error("order count must be at least 1")]
    InvalidOrderCount,
    #[error("sequence is not a permutation of 0..{n}")]
    NotAPermutation { n: usize },
    #[error(transparent)]
    Geometry(#[from] crate::svgpath::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Circle,
    Ellipse,
    Triangle,
    Rectangle,
    Polygon,
    Curve,
    Line,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 7] = [
        PrimitiveKind::Circle,
        PrimitiveKind::Ellipse,
        PrimitiveKind::Triangle,
        PrimitiveKind::Rectangle,
        PrimitiveKind::Polygon,
        PrimitiveKind::Curve,
        PrimitiveKind::Line,
    ];

    fn base_name(self) -> &'static str {
        match self {
            PrimitiveKind::Circle => "circle",
            PrimitiveKind::Ellipse => "oval",
            PrimitiveKind::Triangle => "triangle",
            PrimitiveKind::Rectangle => "rectangle",
            PrimitiveKind::Polygon => "polygon",
            PrimitiveKind::Curve => "curve",
            PrimitiveKind::Line => "line",
        }
    }
}

/// Spatial relation a composition is built around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Containment,
    Adjacency,
    Overlap,
    Grouping,
}

impl Relation {
    pub const ALL: [Relation; 4] = [Relation::Containment, Relation::Adjacency, Relation::Overlap, Relation::Grouping];

    pub fn word(self) -> &'static str {
        match self {
            Relation::Containment => "containment",
            Relation::Adjacency => "adjacency",
            Relation::Overlap => "overlap",
            Relation::Grouping => "grouping",
        }
    }
}

impl std::str::FromStr for Relation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "containment" => Ok(Relation::Containment),
            "adjacency" => Ok(Relation::Adjacency),
            "overlap" => Ok(Relation::Overlap),
            "grouping" => Ok(Relation::Grouping),
            other => Err(format!("unknown relation {other:?}")),
        }
    }
}

/// One generated primitive: geometry parameters plus a display name.
///
/// `params` is kind-specific: circle `[radius]`, ellipse `[rx, ry]`,
/// triangle `[circumradius]`, rectangle `[w, h]`, polygon
/// `[circumradius, vertex_count]`, curve `[half_extent]`, line `[length]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    pub params: Vec<f64>,
    pub center: Point,
    pub rotation_deg: f64,
    pub semantic_name: String,
}

/// A generated multi-stroke sketch with relation ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    pub document: SketchDocument,
    pub relation: Relation,
    /// `regions[i]` is the bounding box of stroke i's flattened points
    /// expanded by half the stroke width.
    pub regions: Vec<Rect>,
    /// Per-stroke `(semantic_name, description)`; names are unique.
    pub steps: Vec<(String, String)>,
    pub seed: u64,
}

/// A drawing order: a bijection on stroke ids `0..n-1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderPermutation(Vec<usize>);

impl OrderPermutation {
    pub fn new(order: Vec<usize>) -> Result<Self, Error> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || seen[i] {
                return Err(Error::NotAPermutation { n });
            }
            seen[i] = true;
        }
        Ok(OrderPermutation(order))
    }

    pub fn identity(n: usize) -> Self {
        OrderPermutation((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &v)| i == v)
    }
}

// ---------------------------------------------------------------------------
// Primitive builders (geometry centered at the origin)

const KAPPA: f64 = 0.552_284_749_830_793_4; // cubic approximation of a quarter arc

fn circle_commands(r: f64) -> Vec<PathCommand> {
    let k = KAPPA * r;
    vec![
        PathCommand::MoveTo(Point::new(r, 0.0)),
        PathCommand::CubicTo { c1: Point::new(r, k), c2: Point::new(k, r), to: Point::new(0.0, r) },
        PathCommand::CubicTo { c1: Point::new(-k, r), c2: Point::new(-r, k), to: Point::new(-r, 0.0) },
        PathCommand::CubicTo { c1: Point::new(-r, -k), c2: Point::new(-k, -r), to: Point::new(0.0, -r) },
        PathCommand::CubicTo { c1: Point::new(k, -r), c2: Point::new(r, -k), to: Point::new(r, 0.0) },
        PathCommand::ClosePath,
    ]
}

fn ellipse_commands(rx: f64, ry: f64) -> Vec<PathCommand> {
    let (kx, ky) = (KAPPA * rx, KAPPA * ry);
    vec![
        PathCommand::MoveTo(Point::new(rx, 0.0)),
        PathCommand::CubicTo { c1: Point::new(rx, ky), c2: Point::new(kx, ry), to: Point::new(0.0, ry) },
        PathCommand::CubicTo { c1: Point::new(-kx, ry), c2: Point::new(-rx, ky), to: Point::new(-rx, 0.0) },
        PathCommand::CubicTo { c1: Point::new(-rx, -ky), c2: Point::new(-kx, -ry), to: Point::new(0.0, -ry) },
        PathCommand::CubicTo { c1: Point::new(kx, -ry), c2: Point::new(rx, -ky), to: Point::new(rx, 0.0) },
        PathCommand::ClosePath,
    ]
}

fn loop_commands(vertices: &[Point]) -> Vec<PathCommand> {
    let mut cmds = Vec::with_capacity(vertices.len() + 1);
    cmds.push(PathCommand::MoveTo(vertices[0]));
    for &v in &vertices[1..] {
        cmds.push(PathCommand::LineTo(v));
    }
    cmds.push(PathCommand::ClosePath);
    cmds
}

/// Builds one primitive centered at the origin; the caller translates it
/// into place. Returns the primitive description and its command list.
fn build_primitive(kind: PrimitiveKind, size: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64, Vec<PathCommand>) {
    match kind {
        PrimitiveKind::Circle => {
            let r = size / 2.0;
            (vec![r], 0.0, circle_commands(r))
        }
        PrimitiveKind::Ellipse => {
            let rx = size / 2.0;
            let ry = rx * rng.gen_range(0.55..0.85);
            (vec![rx, ry], 0.0, ellipse_commands(rx, ry))
        }
        PrimitiveKind::Triangle => {
            let rot: f64 = rng.gen_range(0.0..2.0 * PI);
            let big_r = size / 2.0;
            let verts: Vec<Point> = [-PI / 2.0, PI / 6.0, 5.0 * PI / 6.0]
                .iter()
                .map(|&a| {
                    let r = big_r * rng.gen_range(0.85..1.0);
                    Point::new(r * (a + rot).cos(), r * (a + rot).sin())
                })
                .collect();
            (vec![big_r], rot.to_degrees(), loop_commands(&verts))
        }
        PrimitiveKind::Rectangle => {
            let w = size;
            let h = size * rng.gen_range(0.6..0.9);
            let (hw, hh) = (w / 2.0, h / 2.0);
            let verts = [
                Point::new(-hw, -hh),
                Point::new(hw, -hh),
                Point::new(hw, hh),
                Point::new(-hw, hh),
            ];
            (vec![w, h], 0.0, loop_commands(&verts))
        }
        PrimitiveKind::Polygon => {
            let k = rng.gen_range(5..=8usize);
            let rot: f64 = rng.gen_range(0.0..2.0 * PI);
            let big_r = size / 2.0;
            let spacing = 2.0 * PI / k as f64;
            let verts: Vec<Point> = (0..k)
                .map(|i| {
                    let a = rot + i as f64 * spacing + rng.gen_range(-0.12..0.12) * spacing;
                    let r = big_r * rng.gen_range(0.8..1.0);
                    Point::new(r * a.cos(), r * a.sin())
                })
                .collect();
            (vec![big_r, k as f64], rot.to_degrees(), loop_commands(&verts))
        }
        PrimitiveKind::Curve => {
            // X-monotone in local coordinates, so the curve never crosses
            // itself; rotation preserves that.
            let rot: f64 = rng.gen_range(0.0..2.0 * PI);
            let e = size / 2.0;
            let jitter = |rng: &mut ChaCha8Rng| rng.gen_range(-0.8..0.8) * e * 0.6;
            let pts = [
                Point::new(-e, jitter(rng)),
                Point::new(-e / 3.0, jitter(rng)),
                Point::new(e / 3.0, jitter(rng)),
                Point::new(e, jitter(rng)),
            ];
            let rp: Vec<Point> = pts.iter().map(|p| p.rotate(rot)).collect();
            (
                vec![e],
                rot.to_degrees(),
                vec![PathCommand::MoveTo(rp[0]), PathCommand::CubicTo { c1: rp[1], c2: rp[2], to: rp[3] }],
            )
        }
        PrimitiveKind::Line => {
            let rot: f64 = rng.gen_range(0.0..2.0 * PI);
            let half = Point::new(rot.cos(), rot.sin()) * (size / 2.0);
            (
                vec![size],
                rot.to_degrees(),
                vec![PathCommand::MoveTo(Point::new(-half.x, -half.y)), PathCommand::LineTo(half)],
            )
        }
    }
}

fn size_class(size: f64, min_dim: f64) -> &'static str {
    let frac = size / min_dim;
    if frac <= 0.14 {
        "small"
    } else if frac <= 0.28 {
        "medium"
    } else {
        "large"
    }
}

fn make_stroke(commands: Vec<PathCommand>) -> Stroke {
    Stroke { id: 0, commands, width: DEFAULT_STROKE_WIDTH, color: Rgb8::BLACK }
}

/// Generates one primitive placed fully inside the canvas.
///
/// Deterministic for `(kind, seed)`: the same call always yields the same
/// stroke. `size_range` is a fraction pair of the smaller canvas dimension.
pub fn gen_primitive(
    kind: PrimitiveKind,
    seed: u64,
    canvas: (f64, f64),
    size_range: (f64, f64),
) -> Result<(Primitive, Stroke), Error> {
    let (lo, hi) = size_range;
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidSizeRange(lo, hi));
    }
    let (w, h) = canvas;
    assert!(w > 0.0 && h > 0.0, "canvas must be positive");
    let min_dim = w.min(h);
    let kind_idx = PrimitiveKind::ALL.iter().position(|&k| k == kind).unwrap() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x70 + kind_idx));

    let size = (rng.gen_range(lo..=hi) * min_dim).min(0.92 * min_dim);
    let (params, rotation_deg, commands) = build_primitive(kind, size, &mut rng);
    let base = make_stroke(commands);
    let bounds = base.ink_bounds(DEFAULT_TOLERANCE)?;
    // Place so the ink box fits; fall back to the canvas center.
    let margin = 1.0;
    let mut center = Point::new(w / 2.0, h / 2.0);
    for _ in 0..50 {
        let cx = rng.gen_range((margin - bounds.min_x)..=(w - margin - bounds.max_x).max(margin - bounds.min_x));
        let cy = rng.gen_range((margin - bounds.min_y)..=(h - margin - bounds.max_y).max(margin - bounds.min_y));
        let candidate = Point::new(cx, cy);
        let moved = bounds.expand(0.0);
        let shifted = Rect::new(moved.min_x + cx, moved.min_y + cy, moved.max_x + cx, moved.max_y + cy);
        if shifted.min_x >= 0.0 && shifted.min_y >= 0.0 && shifted.max_x <= w && shifted.max_y <= h {
            center = candidate;
            break;
        }
    }
    let stroke = base.translated(center.x, center.y);
    let primitive = Primitive {
        kind,
        params,
        center,
        rotation_deg,
        semantic_name: format!("{} {}", size_class(size, min_dim), kind.base_name()),
    };
    Ok((primitive, stroke))
}

// ---------------------------------------------------------------------------
// Relation predicates (independent audit arithmetic)

/// Checks the declared relation's geometric predicate on regions alone.
/// This is the audit the generator must satisfy; it never inspects
/// generator internals.
pub fn relation_holds(relation: Relation, regions: &[Rect], canvas: (f64, f64)) -> bool {
    match relation {
        Relation::Containment => {
            regions.len() >= 2 && regions[1..].iter().all(|r| regions[0].contains_rect(*r))
        }
        Relation::Adjacency => {
            regions.len() >= 2
                && pairs(regions.len()).all(|(i, j)| {
                    let gap = regions[i].gap(regions[j]);
                    regions[i].intersection_area(regions[j]) == 0.0 && (4.0..=40.0).contains(&gap)
                })
        }
        Relation::Overlap => {
            regions.len() >= 2
                && pairs(regions.len()).any(|(i, j)| {
                    regions[i].intersection_area(regions[j]) > 0.0
                        && !regions[i].contains_rect(regions[j])
                        && !regions[j].contains_rect(regions[i])
                })
        }
        Relation::Grouping => {
            if regions.len() < 3 {
                return false;
            }
            let centers: Vec<Point> = regions.iter().map(|r| r.center()).collect();
            let mean = Point::new(
                centers.iter().map(|c| c.x).sum::<f64>() / centers.len() as f64,
                centers.iter().map(|c| c.y).sum::<f64>() / centers.len() as f64,
            );
            let radius = 0.2 * canvas.0.min(canvas.1);
            centers.iter().all(|c| c.distance(mean) <= radius)
                && pairs(regions.len()).all(|(i, j)| regions[i].intersection_area(regions[j]) == 0.0)
        }
    }
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

// ---------------------------------------------------------------------------
// Outline clearance (keeps strokes from touching, so rendering stays
// one-connected-piece-per-frame)

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let d1 = orient(b1, b2, a1);
    let d2 = orient(b1, b2, a2);
    let d3 = orient(a1, a2, b1);
    let d4 = orient(a1, a2, b2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    false
}

fn seg_seg_distance(a1: Point, a2: Point, b1: Point, b2: Point) -> f64 {
    if segments_intersect(a1, a2, b1, b2) {
        return 0.0;
    }
    dist_point_segment(a1, b1, b2)
        .min(dist_point_segment(a2, b1, b2))
        .min(dist_point_segment(b1, a1, a2))
        .min(dist_point_segment(b2, a1, a2))
}

/// Minimum distance between two flattened outlines, with early exit once
/// it drops below `floor`.
fn polyline_clearance(a: &[Point], b: &[Point], floor: f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..a.len().saturating_sub(1) {
        for j in 0..b.len().saturating_sub(1) {
            let d = seg_seg_distance(a[i], a[i + 1], b[j], b[j + 1]);
            if d < best {
                best = d;
                if best < floor {
                    return best;
                }
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Composition generation

struct Placed {
    primitive: Primitive,
    stroke: Stroke,
}

impl Placed {
    fn region(&self) -> Rect {
        self.stroke.ink_bounds(DEFAULT_TOLERANCE).expect("generated strokes are non-degenerate")
    }
}

/// Builds one primitive at the origin, then shifts it to `center`.
fn place(kind: PrimitiveKind, size: f64, center: Point, min_dim: f64, rng: &mut ChaCha8Rng) -> Placed {
    let (params, rotation_deg, commands) = build_primitive(kind, size, rng);
    let stroke = make_stroke(commands).translated(center.x, center.y);
    let primitive = Primitive {
        kind,
        params,
        center,
        rotation_deg,
        semantic_name: format!("{} {}", size_class(size, min_dim), kind.base_name()),
    };
    Placed { primitive, stroke }
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, options: &[T]) -> T {
    options[rng.gen_range(0..options.len())]
}

const CLOSED_KINDS: [PrimitiveKind; 4] =
    [PrimitiveKind::Circle, PrimitiveKind::Ellipse, PrimitiveKind::Rectangle, PrimitiveKind::Polygon];

/// Radius of the disc around a closed shape's center guaranteed free of its
/// own outline ink (conservative per kind).
fn inscribed_radius(placed: &Placed) -> f64 {
    let p = &placed.primitive;
    let hw = placed.stroke.width / 2.0;
    let r = match p.kind {
        PrimitiveKind::Circle => p.params[0],
        PrimitiveKind::Ellipse => p.params[0].min(p.params[1]),
        PrimitiveKind::Rectangle => p.params[0].min(p.params[1]) / 2.0,
        PrimitiveKind::Polygon => {
            let k = p.params[1];
            0.8 * p.params[0] * (PI / k).cos()
        }
        _ => 0.0,
    };
    (r - hw).max(0.0)
}

fn try_containment(n: usize, canvas: (f64, f64), rng: &mut ChaCha8Rng) -> Option<Vec<Placed>> {
    let (w, h) = canvas;
    let min_dim = w.min(h);
    let outer_kind = pick(rng, &CLOSED_KINDS);
    let outer_size = rng.gen_range(0.55..0.68) * min_dim;
    let jitter = 0.04 * min_dim;
    let center = Point::new(
        w / 2.0 + rng.gen_range(-jitter..jitter),
        h / 2.0 + rng.gen_range(-jitter..jitter),
    );
    let mut outer_rng = rng.clone();
    let outer = match outer_kind {
        // Wide ellipses leave too little interior; keep the aspect high.
        PrimitiveKind::Ellipse => {
            let rx = outer_size / 2.0;
            let ry = rx * outer_rng.gen_range(0.75..0.95);
            let stroke = make_stroke(ellipse_commands(rx, ry)).translated(center.x, center.y);
            *rng = outer_rng;
            Placed {
                primitive: Primitive {
                    kind: outer_kind,
                    params: vec![rx, ry],
                    center,
                    rotation_deg: 0.0,
                    semantic_name: format!("{} oval", size_class(outer_size, min_dim)),
                },
                stroke,
            }
        }
        PrimitiveKind::Rectangle => {
            let rw = outer_size;
            let rh = outer_size * outer_rng.gen_range(0.8..0.95);
            let verts = [
                Point::new(-rw / 2.0, -rh / 2.0),
                Point::new(rw / 2.0, -rh / 2.0),
                Point::new(rw / 2.0, rh / 2.0),
                Point::new(-rw / 2.0, rh / 2.0),
            ];
            let stroke = make_stroke(loop_commands(&verts)).translated(center.x, center.y);
            *rng = outer_rng;
            Placed {
                primitive: Primitive {
                    kind: outer_kind,
                    params: vec![rw, rh],
                    center,
                    rotation_deg: 0.0,
                    semantic_name: format!("{} rectangle", size_class(outer_size, min_dim)),
                },
                stroke,
            }
        }
        _ => place(outer_kind, outer_size, center, min_dim, rng),
    };
    let outer_region = outer.region();
    if outer_region.min_x < 0.0 || outer_region.min_y < 0.0 || outer_region.max_x > w || outer_region.max_y > h {
        return None;
    }

    let free = inscribed_radius(&outer) - 2.0;
    let mut placed = vec![outer];
    for _ in 1..n {
        let mut ok = false;
        for _ in 0..30 {
            let kind = pick(rng, &PrimitiveKind::ALL);
            let size = rng.gen_range(0.07..0.11) * min_dim;
            let half_diag = (size / 2.0) * std::f64::consts::SQRT_2 + DEFAULT_STROKE_WIDTH / 2.0 + 1.0;
            let max_rho = free - half_diag;
            if max_rho <= 0.0 {
                return None;
            }
            let rho = max_rho * rng.gen::<f64>().sqrt();
            let phi = rng.gen_range(0.0..2.0 * PI);
            let c = center + Point::new(rho * phi.cos(), rho * phi.sin());
            let candidate = place(kind, size, c, min_dim, rng);
            let region = candidate.region();
            if placed[1..].iter().all(|p| p.region().gap(region) >= 3.0) {
                placed.push(candidate);
                ok = true;
                break;
            }
        }
        if !ok {
            return None;
        }
    }
    Some(placed)
}

fn try_adjacency(n: usize, canvas: (f64, f64), rng: &mut ChaCha8Rng) -> Option<Vec<Placed>> {
    let (w, h) = canvas;
    let min_dim = w.min(h);
    // Pairwise gaps must all land in [4, 40] px, which caps the cluster
    // extent. A hub-and-spoke layout keeps every pair close: sizes are
    // absolute (lightly canvas-scaled) because the gap band is absolute.
    let f = (min_dim / 400.0).clamp(0.15, 1.2);
    let hub_size = rng.gen_range(13.0..17.0) * f;
    let center = Point::new(
        w / 2.0 + rng.gen_range(-0.1..0.1) * w,
        h / 2.0 + rng.gen_range(-0.1..0.1) * h,
    );
    let hub = place(pick(rng, &PrimitiveKind::ALL), hub_size, center, min_dim, rng);
    let hub_region = hub.region();
    let mut placed = vec![hub];
    let slots = n - 1;
    let slot_angle = 2.0 * PI / slots.max(1) as f64;
    let base_angle = rng.gen_range(0.0..2.0 * PI);
    for s in 0..slots {
        let angle = base_angle + s as f64 * slot_angle + rng.gen_range(-0.08..0.08) * slot_angle;
        let dir = Point::new(angle.cos(), angle.sin());
        let size = rng.gen_range(11.0..16.0) * f;
        let origin_placed = place(pick(rng, &PrimitiveKind::ALL), size, Point::new(0.0, 0.0), min_dim, rng);
        let local = origin_placed.region();
        let target_gap = rng.gen_range(5.0..8.0);
        // The region gap grows monotonically with distance along the ray.
        let (mut lo, mut hi) = (0.0, 4.0 * min_dim.max(120.0));
        for _ in 0..60 {
            let mid = (lo + hi) / 2.0;
            let at = Rect::new(
                local.min_x + center.x + dir.x * mid,
                local.min_y + center.y + dir.y * mid,
                local.max_x + center.x + dir.x * mid,
                local.max_y + center.y + dir.y * mid,
            );
            if hub_region.gap(at) < target_gap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c = center + dir * hi;
        let candidate = Placed {
            stroke: origin_placed.stroke.translated(c.x, c.y),
            primitive: Primitive { center: c, ..origin_placed.primitive },
        };
        placed.push(candidate);
    }
    let regions: Vec<Rect> = placed.iter().map(Placed::region).collect();
    if regions.iter().any(|r| r.min_x < 0.0 || r.min_y < 0.0 || r.max_x > w || r.max_y > h) {
        return None;
    }
    relation_holds(Relation::Adjacency, &regions, canvas).then_some(placed)
}

fn try_overlap(n: usize, canvas: (f64, f64), rng: &mut ChaCha8Rng) -> Option<Vec<Placed>> {
    let (w, h) = canvas;
    let min_dim = w.min(h);
    // Round shapes only: their outlines stay clear of bounding-box corners,
    // so boxes can overlap at corners while the drawn outlines never touch.
    let kinds = [PrimitiveKind::Circle, PrimitiveKind::Ellipse];
    let mut placed: Vec<Placed> = Vec::with_capacity(n);
    let first_size = rng.gen_range(0.16..0.24) * min_dim;
    let c0 = Point::new(
        w / 2.0 + rng.gen_range(-0.12..0.12) * w,
        h / 2.0 + rng.gen_range(-0.12..0.12) * h,
    );
    placed.push(place(pick(rng, &kinds), first_size, c0, min_dim, rng));
    for _ in 1..n {
        let prev = placed.last().unwrap();
        let prev_region = prev.region();
        let size = rng.gen_range(0.16..0.24) * min_dim;
        let mut ok = false;
        for _ in 0..30 {
            let candidate0 = place(pick(rng, &kinds), size, Point::new(0.0, 0.0), min_dim, rng);
            let local = candidate0.region();
            let (ax, ay) = (prev_region.width() / 2.0, prev_region.height() / 2.0);
            let (bx, by) = (local.width() / 2.0, local.height() / 2.0);
            // Corner overlap depths stay small relative to the semi-axes so
            // the round outlines never reach the shared corner box.
            let ox = (rng.gen_range(0.06..0.12) * ax.min(bx)).max(2.5);
            let oy = (rng.gen_range(0.06..0.12) * ay.min(by)).max(2.5);
            let sx = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let sy = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let c = Point::new(
                prev_region.center().x + sx * (ax + bx - ox),
                prev_region.center().y + sy * (ay + by - oy),
            );
            let candidate = Placed {
                stroke: candidate0.stroke.translated(c.x - local.center().x, c.y - local.center().y),
                primitive: Primitive { center: c, ..candidate0.primitive },
            };
            let region = candidate.region();
            if region.min_x < 0.0 || region.min_y < 0.0 || region.max_x > w || region.max_y > h {
                continue;
            }
            // Only the chained pair may overlap; everything earlier must
            // keep its distance.
            let chain_ok = placed[..placed.len() - 1].iter().all(|p| p.region().gap(region) >= 3.0);
            if chain_ok {
                placed.push(candidate);
                ok = true;
                break;
            }
        }
        if !ok {
            return None;
        }
    }
    Some(placed)
}

fn try_grouping(n: usize, canvas: (f64, f64), rng: &mut ChaCha8Rng) -> Option<Vec<Placed>> {
    let (w, h) = canvas;
    let min_dim = w.min(h);
    let disc = 0.5 * 0.2 * min_dim * 0.95;
    let cluster = Point::new(
        w / 2.0 + rng.gen_range(-0.15..0.15) * w,
        h / 2.0 + rng.gen_range(-0.15..0.15) * h,
    );
    let grid = (n as f64).sqrt().ceil();
    let s_max = (0.13 * min_dim).min(1.6 * disc / grid * 0.85);
    let mut placed: Vec<Placed> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut ok = false;
        for _ in 0..60 {
            let kind = pick(rng, &PrimitiveKind::ALL);
            let size = rng.gen_range(0.75..1.0) * s_max;
            let rho = disc * rng.gen::<f64>().sqrt();
            let phi = rng.gen_range(0.0..2.0 * PI);
            let c = cluster + Point::new(rho * phi.cos(), rho * phi.sin());
            let candidate = place(kind, size, c, min_dim, rng);
            let region = candidate.region();
            if region.min_x < 0.0 || region.min_y < 0.0 || region.max_x > w || region.max_y > h {
                continue;
            }
            if placed.iter().all(|p| p.region().gap(region) >= 3.0) {
                placed.push(candidate);
                ok = true;
                break;
            }
        }
        if !ok {
            return None;
        }
    }
    Some(placed)
}

/// Minimum clearance between any two outlines, in pixels. Zero means some
/// pair of strokes touches or crosses.
fn min_outline_clearance(placed: &[Placed]) -> f64 {
    let polys: Vec<Vec<Point>> = placed
        .iter()
        .map(|p| p.stroke.flatten(DEFAULT_TOLERANCE).expect("non-degenerate").points().to_vec())
        .collect();
    let mut best = f64::INFINITY;
    for (i, j) in pairs(placed.len()) {
        let need = (placed[i].stroke.width + placed[j].stroke.width) / 2.0 + 1.2;
        let d = polyline_clearance(&polys[i], &polys[j], need);
        if d < best {
            best = d;
        }
        if best <= 0.0 {
            return 0.0;
        }
    }
    best
}

/// Every outline must lay down at least this fraction of its own region
/// box as ink. Region-activation order extraction fires a region at 5%
/// coverage by default; the extra margin absorbs antialiasing and
/// flattening slack.
const MIN_SELF_INK_FRACTION: f64 = 0.065;

/// Widens sparse outlines until `arc_length x width` covers
/// [`MIN_SELF_INK_FRACTION`] of the stroke's own region box. Small and
/// medium shapes already exceed the floor and keep the default width;
/// only large outlines (whose boxes dwarf their perimeters) grow.
fn normalize_widths(placed: &mut [Placed]) {
    for p in placed.iter_mut() {
        let len = p
            .stroke
            .flatten(DEFAULT_TOLERANCE)
            .expect("generated strokes are non-degenerate")
            .arc_length();
        if len <= 0.0 {
            continue;
        }
        // Widening enlarges the half-width-expanded region, so settle the
        // width -> area feedback with a second pass.
        for _ in 0..2 {
            let needed = MIN_SELF_INK_FRACTION * p.region().area() / len;
            if needed > p.stroke.width {
                p.stroke.width = needed;
            }
        }
    }
}

/// For containment, ink from the inner shapes lands inside the outer
/// region. Order extraction stays faithful only if that foreign ink can
/// never reach the outer region's activation threshold on its own, no
/// matter which strokes are drawn first.
fn containment_margin_ok(placed: &[Placed]) -> bool {
    let threshold = 0.05 * placed[0].region().area();
    let foreign: f64 = placed[1..]
        .iter()
        .map(|p| {
            let len = p
                .stroke
                .flatten(DEFAULT_TOLERANCE)
                .expect("generated strokes are non-degenerate")
                .arc_length();
            // Antialiased ink reads wider than the nominal width.
            len * (p.stroke.width + 1.0)
        })
        .sum();
    foreign <= 0.8 * threshold
}

fn step_description(relation: Relation, index: usize, n: usize, names: &[String]) -> String {
    match relation {
        Relation::Containment => {
            if index == 0 {
                "the enclosing outline that holds the rest.".to_string()
            } else {
                format!("drawn inside the {}.", names[0])
            }
        }
        Relation::Adjacency => {
            if index == 0 {
                "the anchor shape of the row.".to_string()
            } else {
                format!("set close beside the {}.", names[0])
            }
        }
        Relation::Overlap => {
            if index == 0 {
                "the rearmost shape.".to_string()
            } else {
                "partially overlapping the previous shape.".to_string()
            }
        }
        Relation::Grouping => format!("one of a tight cluster of {n} shapes."),
    }
}

const ORDINALS: [&str; 8] = ["first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth"];

/// Prefixes duplicate names with ordinals so every step name is unique.
fn unique_names(raw: Vec<String>) -> Vec<String> {
    let mut out = raw.clone();
    for i in 0..raw.len() {
        let duplicated = raw.iter().filter(|r| **r == raw[i]).count() > 1;
        if duplicated {
            let nth = raw[..i].iter().filter(|r| **r == raw[i]).count();
            out[i] = format!("{} {}", ORDINALS[nth.min(ORDINALS.len() - 1)], raw[i]);
        }
    }
    out
}

/// Generates a composition whose regions satisfy the relation predicate.
///
/// Deterministic for `(relation, n, seed, canvas)`. Fails with
/// `PlacementFailure` when 1000 attempts cannot satisfy the predicate.
pub fn gen_composition(relation: Relation, n: usize, seed: u64, canvas: (f64, f64)) -> Result<Composition, Error> {
    let min_count = match relation {
        Relation::Grouping => 3,
        _ => 2,
    };
    if n < min_count || n > 8 {
        return Err(Error::InvalidShapeCount { relation, n, min: min_count });
    }
    assert!(canvas.0 > 0.0 && canvas.1 > 0.0, "canvas must be positive");
    let relation_idx = Relation::ALL.iter().position(|&r| r == relation).unwrap() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, relation_idx * 0x100 + n as u64));

    const ATTEMPTS: usize = 1000;
    for _ in 0..ATTEMPTS {
        let candidate = match relation {
            Relation::Containment => try_containment(n, canvas, &mut rng),
            Relation::Adjacency => try_adjacency(n, canvas, &mut rng),
            Relation::Overlap => try_overlap(n, canvas, &mut rng),
            Relation::Grouping => try_grouping(n, canvas, &mut rng),
        };
        let Some(mut placed) = candidate else { continue };
        normalize_widths(&mut placed);
        let regions: Vec<Rect> = placed.iter().map(Placed::region).collect();
        if !relation_holds(relation, &regions, canvas) {
            continue;
        }
        if min_outline_clearance(&placed) <= 0.0 {
            continue;
        }
        if relation == Relation::Containment && !containment_margin_ok(&placed) {
            continue;
        }
        if regions.iter().any(|r| !Rect::new(0.0, 0.0, canvas.0, canvas.1).contains_rect(*r)) {
            continue;
        }
        let names = unique_names(placed.iter().map(|p| p.primitive.semantic_name.clone()).collect());
        let steps: Vec<(String, String)> = names
            .iter()
            .enumerate()
            .map(|(i, name)| (name.clone(), step_description(relation, i, n, &names)))
            .collect();
        let strokes: Vec<Stroke> = placed
            .into_iter()
            .enumerate()
            .map(|(i, p)| Stroke { id: i, ..p.stroke })
            .collect();
        let document = SketchDocument {
            name: format!("{}-{}", relation.word(), seed),
            canvas_w: canvas.0,
            canvas_h: canvas.1,
            strokes,
        };
        return Ok(Composition { document, relation, regions, steps, seed });
    }
    Err(Error::PlacementFailure { relation, attempts: ATTEMPTS })
}

/// Enumerates `count` distinct drawing orders for a composition. The first
/// is always the identity; the rest are a seeded draw without replacement
/// from the remaining permutations.
pub fn enumerate_orders(comp: &Composition, count: usize, seed: u64) -> Result<Vec<OrderPermutation>, Error> {
    let n = comp.document.strokes.len();
    if count == 0 {
        return Err(Error::InvalidOrderCount);
    }
    let available: u64 = (1..=n as u64).product();
    if count as u64 > available {
        return Err(Error::TooManyOrders { requested: count, available });
    }
    // n <= 8, so the full permutation set (<= 40320) fits comfortably.
    let mut all: Vec<Vec<usize>> = Vec::with_capacity(available as usize);
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        all.push(cur.clone());
        if !next_permutation(&mut cur) {
            break;
        }
    }
    debug_assert_eq!(all.len() as u64, available);
    let mut rest: Vec<Vec<usize>> = all.into_iter().skip(1).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x0ED4));
    // Partial Fisher-Yates: draw count-1 without replacement.
    let take = count - 1;
    for i in 0..take.min(rest.len()) {
        let j = rng.gen_range(i..rest.len());
        rest.swap(i, j);
    }
    let mut out = Vec::with_capacity(count);
    out.push(OrderPermutation::identity(n));
    for perm in rest.into_iter().take(take) {
        out.push(OrderPermutation(perm));
    }
    Ok(out)
}

/// Advances to the next lexicographic permutation; false when at the last.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
