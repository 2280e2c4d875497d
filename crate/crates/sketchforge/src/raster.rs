// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Turns timelines into pixels: antialiased pen strokes or brush-stamped
//! strokes on a white canvas, plus the brush-exemplar frame used as a
//! conditioning image.
//!
//! Rendering is deterministic — identical inputs give bit-identical frames
//! regardless of worker count — and cumulative: frame f's ink is a superset
//! of frame f−1's. For brush styles cumulativeness is guaranteed by
//! stamping the union of every reveal checkpoint up to the current frame,
//! so earlier end-of-frame stamps never vanish as the reveal advances.

use crate::geom::{derive_seed, dist_point_segment, Point, Rect, Rgb8};
use crate::shapes::OrderPermutation;
use crate::svgpath::{Polyline, SketchDocument, DEFAULT_TOLERANCE};
use crate::timeline::{compile_timeline, RenderPlan, Timeline};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("frame {frame} out of range 0..{frames}")]
    FrameOutOfRange { frame: usize, frames: usize },
    #[error("invalid brush: {0}")]
    BadBrush(String),
    #[error(transparent)]
    Timeline(#[from] crate::timeline::Error),
    #[error(transparent)]
    Geometry(#[from] crate::svgpath::Error),
}

/// One RGB frame, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn filled(width: u32, height: u32, color: Rgb8) -> Frame {
        let mut pixels = Vec::with_capacity((width * height * 3) as usize);
        for _ in 0..width * height {
            pixels.extend_from_slice(&color.channels());
        }
        Frame { width, height, pixels }
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb8 {
        let i = 3 * (y * self.width + x) as usize;
        Rgb8::new(self.pixels[i], self.pixels[i + 1], self.pixels[i + 2])
    }

    fn blend(&mut self, x: u32, y: u32, color: Rgb8, alpha: f32) {
        let i = 3 * (y * self.width + x) as usize;
        for (c, src) in color.channels().into_iter().enumerate() {
            let dst = self.pixels[i + c] as f32;
            self.pixels[i + c] = (dst + (src as f32 - dst) * alpha).round() as u8;
        }
    }
}

/// A rendered video: `frames.len()` equals the plan's frame count and all
/// frames share the plan's dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Frame>,
    pub plan: RenderPlan,
}

/// Default gap between stamp centers, as a fraction of the diameter.
pub const DEFAULT_SPACING_FACTOR: f64 = 0.25;

/// A stamp-based brush: a square grayscale alpha bitmap dragged along the
/// path at `spacing_factor * diameter` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Brush {
    pub id: String,
    stamp: Vec<u8>,
    side: u32,
    pub diameter: f64,
    pub spacing_factor: f64,
}

impl Brush {
    pub fn new(id: impl Into<String>, stamp: Vec<u8>, side: u32, diameter: f64, spacing_factor: f64) -> Result<Brush, Error> {
        if !(16..=128).contains(&side) {
            return Err(Error::BadBrush(format!("stamp side {side} outside 16..=128")));
        }
        if stamp.len() != (side * side) as usize {
            return Err(Error::BadBrush(format!("stamp byte count {} != {side}x{side}", stamp.len())));
        }
        if stamp.iter().all(|&a| a == 0) {
            return Err(Error::BadBrush("stamp is fully transparent".into()));
        }
        if !(diameter > 0.0) {
            return Err(Error::BadBrush(format!("diameter {diameter} must be positive")));
        }
        if !(spacing_factor > 0.0 && spacing_factor <= 1.0) {
            return Err(Error::BadBrush(format!("spacing factor {spacing_factor} outside (0, 1]")));
        }
        Ok(Brush { id: id.into(), stamp, side, diameter, spacing_factor })
    }

    /// Loads a brush stamp from an 8-bit grayscale (or converted) square
    /// image file; the file stem becomes the brush id.
    pub fn from_image_file(path: &std::path::Path, diameter: f64) -> Result<Brush, Error> {
        let img = image::ImageReader::open(path)
            .map_err(|e| Error::BadBrush(format!("{}: {e}", path.display())))?
            .decode()
            .map_err(|e| Error::BadBrush(format!("{}: {e}", path.display())))?;
        let gray = img.to_luma8();
        let (w, h) = gray.dimensions();
        if w != h {
            return Err(Error::BadBrush(format!("{}: stamp must be square, got {w}x{h}", path.display())));
        }
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("brush").to_string();
        Brush::new(id, gray.into_raw(), w, diameter, DEFAULT_SPACING_FACTOR)
    }

    /// Ids of the six built-in procedural brushes.
    pub fn builtin_ids() -> [&'static str; 6] {
        ["dots", "calligraphy-vertical", "bubbles", "soft-round", "hard-round", "splatter"]
    }

    /// A built-in procedural brush by id.
    pub fn builtin(id: &str) -> Result<Brush, Error> {
        const SIDE: u32 = 64;
        let center = (SIDE as f64 - 1.0) / 2.0;
        let radius = SIDE as f64 / 2.0 - 1.0;
        let mut stamp = vec![0u8; (SIDE * SIDE) as usize];
        let mut paint = |f: &mut dyn FnMut(f64, f64, f64) -> f64| {
            for y in 0..SIDE {
                for x in 0..SIDE {
                    let dx = x as f64 - center;
                    let dy = y as f64 - center;
                    let d = dx.hypot(dy);
                    let a = f(dx, dy, d).clamp(0.0, 1.0);
                    stamp[(y * SIDE + x) as usize] = (a * 255.0).round() as u8;
                }
            }
        };
        match id {
            "soft-round" => {
                paint(&mut |_, _, d| {
                    let t = (1.0 - d / radius).max(0.0);
                    t * t * (3.0 - 2.0 * t)
                });
            }
            "hard-round" => {
                paint(&mut |_, _, d| radius - d);
            }
            "calligraphy-vertical" => {
                // Tall narrow dab, soft horizontal falloff.
                paint(&mut |dx, dy, _| {
                    let u = (dx / (radius * 0.28)).abs();
                    let v = (dy / (radius * 0.95)).abs();
                    let e = (u * u + v * v).sqrt();
                    (1.0 - e) * 3.0
                });
            }
            "dots" => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(11, 1));
                let centers: Vec<(f64, f64, f64)> = (0..7)
                    .map(|_| {
                        let a = rng.gen_range(0.0..std::f64::consts::TAU);
                        let r = rng.gen_range(0.0..radius * 0.7);
                        (center + r * a.cos(), center + r * a.sin(), rng.gen_range(3.5..6.5))
                    })
                    .collect();
                for y in 0..SIDE {
                    for x in 0..SIDE {
                        let mut a: f64 = 0.0;
                        for &(cx, cy, rr) in &centers {
                            let d = (x as f64 - cx).hypot(y as f64 - cy);
                            a = a.max((rr - d).clamp(0.0, 1.0));
                        }
                        stamp[(y * SIDE + x) as usize] = (a * 255.0).round() as u8;
                    }
                }
            }
            "bubbles" => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(12, 2));
                let rings: Vec<(f64, f64, f64)> = (0..5)
                    .map(|_| {
                        let a = rng.gen_range(0.0..std::f64::consts::TAU);
                        let r = rng.gen_range(0.0..radius * 0.55);
                        (center + r * a.cos(), center + r * a.sin(), rng.gen_range(4.0..10.0))
                    })
                    .collect();
                for y in 0..SIDE {
                    for x in 0..SIDE {
                        let mut a: f64 = 0.0;
                        for &(cx, cy, rr) in &rings {
                            let d = (x as f64 - cx).hypot(y as f64 - cy);
                            a = a.max((1.4 - (d - rr).abs()).clamp(0.0, 1.0));
                        }
                        stamp[(y * SIDE + x) as usize] = (a * 255.0).round() as u8;
                    }
                }
            }
            "splatter" => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(13, 3));
                let specks: Vec<(f64, f64, f64, f64)> = (0..40)
                    .map(|_| {
                        let a = rng.gen_range(0.0..std::f64::consts::TAU);
                        let r = radius * rng.gen::<f64>().sqrt() * 0.9;
                        (center + r * a.cos(), center + r * a.sin(), rng.gen_range(1.0..2.8), rng.gen_range(0.45..1.0))
                    })
                    .collect();
                for y in 0..SIDE {
                    for x in 0..SIDE {
                        let mut a: f64 = 0.0;
                        for &(cx, cy, rr, opacity) in &specks {
                            let d = (x as f64 - cx).hypot(y as f64 - cy);
                            a = a.max(opacity * (rr - d).clamp(0.0, 1.0));
                        }
                        stamp[(y * SIDE + x) as usize] = (a * 255.0).round() as u8;
                    }
                }
            }
            other => return Err(Error::BadBrush(format!("unknown built-in brush {other:?}"))),
        }
        Brush::new(id, stamp, SIDE, 12.0, DEFAULT_SPACING_FACTOR)
    }

    /// Bilinear sample of the stamp scaled to `diameter`, at offset
    /// `(dx, dy)` from the stamp center. Outside the stamp the alpha is 0.
    fn sample(&self, dx: f64, dy: f64) -> f64 {
        let side = self.side as f64;
        let u = (dx / self.diameter + 0.5) * side - 0.5;
        let v = (dy / self.diameter + 0.5) * side - 0.5;
        let (u0, v0) = (u.floor(), v.floor());
        let (fu, fv) = (u - u0, v - v0);
        let tap = |x: f64, y: f64| -> f64 {
            if x < 0.0 || y < 0.0 || x >= side || y >= side {
                0.0
            } else {
                self.stamp[(y as u32 * self.side + x as u32) as usize] as f64 / 255.0
            }
        };
        let a00 = tap(u0, v0);
        let a10 = tap(u0 + 1.0, v0);
        let a01 = tap(u0, v0 + 1.0);
        let a11 = tap(u0 + 1.0, v0 + 1.0);
        (a00 * (1.0 - fu) + a10 * fu) * (1.0 - fv) + (a01 * (1.0 - fu) + a11 * fu) * fv
    }
}

/// A named color list for brush augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub colors: Vec<(String, Rgb8)>,
}

impl Palette {
    /// The standard eight-color augmentation palette.
    pub fn default_eight() -> Palette {
        let c = |name: &str, r, g, b| (name.to_string(), Rgb8::new(r, g, b));
        Palette {
            colors: vec![
                c("mocha-brown", 138, 92, 62),
                c("indigo-blue", 63, 81, 181),
                c("pink", 233, 30, 99),
                c("mustard-olive", 181, 166, 66),
                c("crimson", 183, 28, 45),
                c("forest-green", 46, 125, 50),
                c("teal", 0, 121, 107),
                c("violet", 123, 31, 162),
            ],
        }
    }

    pub fn lookup(&self, name: &str) -> Option<Rgb8> {
        self.colors.iter().find(|(n, _)| n == name).map(|(_, c)| *c)
    }
}

/// How strokes are inked.
#[derive(Debug, Clone, PartialEq)]
pub enum Style {
    /// Antialiased solid strokes in each stroke's own color and width.
    Pen,
    /// Every stroke stamped with one brush in one color.
    Brush { brush: Brush, color: Rgb8 },
}

// ---------------------------------------------------------------------------
// Pen rendering

struct ScaledStroke {
    poly: Polyline,
    half_width: f64,
    color: Rgb8,
}

/// Maps document space onto the plan's pixel grid: uniform scale,
/// centered. Returns `(scale, offset_x, offset_y)`.
pub fn document_transform(doc: &SketchDocument, plan: &RenderPlan) -> (f64, f64, f64) {
    let s = (plan.width as f64 / doc.canvas_w).min(plan.height as f64 / doc.canvas_h);
    let ox = (plan.width as f64 - s * doc.canvas_w) / 2.0;
    let oy = (plan.height as f64 - s * doc.canvas_h) / 2.0;
    (s, ox, oy)
}

fn scaled_strokes(doc: &SketchDocument, plan: &RenderPlan) -> Result<Vec<ScaledStroke>, Error> {
    let (s, ox, oy) = document_transform(doc, plan);
    doc.strokes
        .iter()
        .map(|stroke| {
            let poly = stroke.flatten(DEFAULT_TOLERANCE)?;
            let pts: Vec<Point> = poly.points().iter().map(|p| Point::new(p.x * s + ox, p.y * s + oy)).collect();
            Ok(ScaledStroke {
                poly: Polyline::new(pts),
                half_width: stroke.width * s / 2.0,
                color: stroke.color,
            })
        })
        .collect()
}

/// Draws an antialiased round-cap, round-join polyline: per-pixel coverage
/// is driven by the distance to the nearest drawn segment.
fn draw_pen_prefix(frame: &mut Frame, coverage: &mut [f32], stroke: &ScaledStroke, reveal: f64) {
    let pts = stroke.poly.prefix(reveal * stroke.poly.arc_length());
    let hw = stroke.half_width;
    let (w, h) = (frame.width as i64, frame.height as i64);
    let mut dirty = Rect::EMPTY;
    let mark = |a: Point, b: Point, coverage: &mut [f32], dirty: &mut Rect| {
        let reach = hw + 1.0;
        let x0 = ((a.x.min(b.x) - reach).floor().max(0.0)) as i64;
        let x1 = ((a.x.max(b.x) + reach).ceil() as i64).min(w - 1);
        let y0 = ((a.y.min(b.y) - reach).floor().max(0.0)) as i64;
        let y1 = ((a.y.max(b.y) + reach).ceil() as i64).min(h - 1);
        for py in y0..=y1 {
            for px in x0..=x1 {
                let p = Point::new(px as f64 + 0.5, py as f64 + 0.5);
                let d = dist_point_segment(p, a, b);
                let cov = (hw + 0.5 - d).clamp(0.0, 1.0) as f32;
                if cov > 0.0 {
                    let idx = (py * w + px) as usize;
                    if cov > coverage[idx] {
                        coverage[idx] = cov;
                    }
                    *dirty = dirty.include(p);
                }
            }
        }
    };
    if pts.len() == 1 {
        mark(pts[0], pts[0], coverage, &mut dirty);
    } else {
        for seg in pts.windows(2) {
            mark(seg[0], seg[1], coverage, &mut dirty);
        }
    }
    if dirty.is_empty() {
        return;
    }
    // Composite this stroke once, then clear its coverage footprint.
    let x0 = (dirty.min_x - 1.0).max(0.0) as i64;
    let x1 = ((dirty.max_x + 1.0) as i64).min(w - 1);
    let y0 = (dirty.min_y - 1.0).max(0.0) as i64;
    let y1 = ((dirty.max_y + 1.0) as i64).min(h - 1);
    for py in y0..=y1 {
        for px in x0..=x1 {
            let idx = (py * w + px) as usize;
            let cov = coverage[idx];
            if cov > 0.0 {
                frame.blend(px as u32, py as u32, stroke.color, cov);
                coverage[idx] = 0.0;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Brush stamping

/// Arc-length stamp positions for a reveal fraction: a regular grid of
/// `spacing_factor * diameter` steps from 0 to `r*L`, inclusive of both
/// ends.
pub fn stamp_positions(poly: &Polyline, brush: &Brush, r: f64) -> Vec<f64> {
    let limit = (r.clamp(0.0, 1.0)) * poly.arc_length();
    let step = brush.spacing_factor * brush.diameter;
    let mut out = Vec::new();
    let mut s = 0.0;
    while s <= limit + 1e-9 {
        out.push(s.min(limit));
        s += step;
    }
    if out.last().map_or(true, |&last| limit - last > 1e-9) {
        out.push(limit);
    }
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    out
}

fn stamp_at(frame: &mut Frame, brush: &Brush, color: Rgb8, center: Point, clip: Option<Rect>) {
    let reach = brush.diameter / 2.0 + 1.0;
    let (w, h) = (frame.width as i64, frame.height as i64);
    let x0 = ((center.x - reach).floor().max(0.0)) as i64;
    let x1 = (((center.x + reach).ceil()) as i64).min(w - 1);
    let y0 = ((center.y - reach).floor().max(0.0)) as i64;
    let y1 = (((center.y + reach).ceil()) as i64).min(h - 1);
    for py in y0..=y1 {
        for px in x0..=x1 {
            let p = Point::new(px as f64 + 0.5, py as f64 + 0.5);
            if let Some(c) = clip {
                if !c.contains_point(p) {
                    continue;
                }
            }
            let a = brush.sample(p.x - center.x, p.y - center.y);
            if a > 0.0 {
                frame.blend(px as u32, py as u32, color, a as f32);
            }
        }
    }
}

/// Stamps the prefix of `poly` up to reveal fraction `r` onto the frame.
/// `r = 0` produces exactly one stamp at the path start.
pub fn stamp_stroke(frame: &mut Frame, brush: &Brush, color: Rgb8, poly: &Polyline, r: f64) {
    for s in stamp_positions(poly, brush, r.clamp(0.0, 1.0)) {
        let p = poly.point_at(s).unwrap_or(poly.points()[0]);
        stamp_at(frame, brush, color, p, None);
    }
}

/// Stamp positions for frame `frame`: the regular grid up to the current
/// reveal plus every earlier frame's reveal endpoint. Using the union keeps
/// ink cumulative — an endpoint stamped on frame f stays stamped on f+1.
fn brush_positions_cumulative(poly: &Polyline, brush: &Brush, tl: &Timeline, stroke_id: usize, frame: usize) -> Vec<f64> {
    let entry = tl.entries[stroke_id];
    let reveal = tl.reveal_at(stroke_id, frame).expect("stroke exists");
    if reveal <= 0.0 {
        return Vec::new();
    }
    let mut positions = stamp_positions(poly, brush, reveal);
    for f in entry.intro_frame..=entry.complete_frame.min(frame) {
        let r = tl.reveal_at(stroke_id, f).expect("stroke exists");
        positions.push(r * poly.arc_length());
    }
    positions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    positions.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    positions
}

// ---------------------------------------------------------------------------
// Frame rendering

/// Renders a single frame of the timeline at the document's own size.
pub fn render_frame(doc: &SketchDocument, tl: &Timeline, frame: usize, style: &Style) -> Result<Frame, Error> {
    let plan = RenderPlan {
        frames: tl.frames,
        width: doc.canvas_w.ceil() as u32,
        height: doc.canvas_h.ceil() as u32,
        blank_lead: 0,
        hold_tail: 0,
        fps: 16.0,
    };
    let strokes = scaled_strokes(doc, &plan)?;
    render_prepared(&strokes, tl, frame, style, &plan)
}

fn render_prepared(strokes: &[ScaledStroke], tl: &Timeline, frame: usize, style: &Style, plan: &RenderPlan) -> Result<Frame, Error> {
    if frame >= tl.frames {
        return Err(Error::FrameOutOfRange { frame, frames: tl.frames });
    }
    let mut out = Frame::filled(plan.width, plan.height, Rgb8::WHITE);
    let mut coverage = vec![0f32; (plan.width * plan.height) as usize];
    for (id, stroke) in strokes.iter().enumerate() {
        let reveal = tl.reveal_at(id, frame)?;
        if reveal <= 0.0 {
            continue;
        }
        match style {
            Style::Pen => draw_pen_prefix(&mut out, &mut coverage, stroke, reveal),
            Style::Brush { brush, color } => {
                for s in brush_positions_cumulative(&stroke.poly, brush, tl, id, frame) {
                    let p = stroke.poly.point_at(s).unwrap_or(stroke.poly.points()[0]);
                    stamp_at(&mut out, brush, *color, p, None);
                }
            }
        }
    }
    Ok(out)
}

/// Renders every frame of the schedule. Frames are computed in parallel;
/// output is deterministic regardless of worker count.
pub fn render_sequence(doc: &SketchDocument, order: &OrderPermutation, plan: &RenderPlan, style: &Style) -> Result<FrameSequence, Error> {
    let tl = compile_timeline(doc, order, plan)?;
    render_timeline(doc, &tl, plan, style)
}

/// Renders every frame of an already-compiled timeline.
pub fn render_timeline(doc: &SketchDocument, tl: &Timeline, plan: &RenderPlan, style: &Style) -> Result<FrameSequence, Error> {
    let strokes = scaled_strokes(doc, plan)?;
    let frames: Result<Vec<Frame>, Error> = (0..plan.frames)
        .into_par_iter()
        .map(|f| render_prepared(&strokes, tl, f, style, plan))
        .collect();
    Ok(FrameSequence { frames: frames?, plan: *plan })
}

/// Renders the brush exemplar: a short S-curve stamped with `(brush,
/// color)` inside a box anchored at (3%·W, 3%·H) with side 12%·W. All other
/// pixels stay white.
pub fn conditioning_frame(brush: &Brush, color: Rgb8, plan: &RenderPlan) -> Frame {
    let mut out = Frame::filled(plan.width, plan.height, Rgb8::WHITE);
    let w = plan.width as f64;
    let side = 0.12 * w;
    let bx = 0.03 * w;
    let by = 0.03 * plan.height as f64;
    let clip = Rect::new(bx, by, bx + side, by + side);
    let inset = (brush.diameter / 2.0 + 1.0).min(side * 0.3);
    let p0 = Point::new(bx + inset, by + side - inset);
    let c1 = Point::new(bx + side * 0.92, by + side * 0.72);
    let c2 = Point::new(bx + side * 0.08, by + side * 0.28);
    let p1 = Point::new(bx + side - inset, by + inset);
    // Flatten the exemplar curve through a throwaway stroke.
    let stroke = crate::svgpath::Stroke {
        id: 0,
        commands: vec![
            crate::svgpath::PathCommand::MoveTo(p0),
            crate::svgpath::PathCommand::CubicTo { c1, c2, to: p1 },
        ],
        width: 1.0,
        color,
    };
    let poly = stroke.flatten(DEFAULT_TOLERANCE).expect("exemplar curve is non-degenerate");
    for s in stamp_positions(&poly, brush, 1.0) {
        let p = poly.point_at(s).expect("nonzero length");
        stamp_at(&mut out, brush, color, p, Some(clip));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::shapes::{gen_composition, Relation};
    use crate::svgpath::{PathCommand, Stroke};

    fn line_doc(canvas: (f64, f64), y: f64, x0: f64, x1: f64, width: f64) -> SketchDocument {
        SketchDocument {
            name: "line".into(),
            canvas_w: canvas.0,
            canvas_h: canvas.1,
            strokes: vec![Stroke {
                id: 0,
                commands: vec![PathCommand::MoveTo(Point::new(x0, y)), PathCommand::LineTo(Point::new(x1, y))],
                width,
                color: Rgb8::BLACK,
            }],
        }
    }

    fn small_plan(frames: usize, w: u32, h: u32) -> RenderPlan {
        RenderPlan::new(frames, w, h, 1, 1, 16.0).unwrap()
    }

    #[test]
    fn blank_lead_frame_is_all_white() {
        let doc = line_doc((100.0, 100.0), 50.0, 10.0, 90.0, 3.0);
        let plan = small_plan(8, 100, 100);
        let seq = render_sequence(&doc, &crate::shapes::OrderPermutation::identity(1), &plan, &Style::Pen).unwrap();
        assert!(seq.frames[0].pixels.iter().all(|&b| b == 255));
    }

    #[test]
    fn full_line_matches_brute_force_oracle() {
        let doc = line_doc((100.0, 100.0), 50.5, 0.0, 100.0, 3.0);
        let plan = small_plan(8, 100, 100);
        let seq = render_sequence(&doc, &crate::shapes::OrderPermutation::identity(1), &plan, &Style::Pen).unwrap();
        let last = &seq.frames[plan.frames - 1];

        let dark = |f: &Frame| {
            (0..100u32 * 100)
                .filter(|i| {
                    let p = f.pixel(i % 100, i / 100);
                    let lum = 0.2126 * p.r as f64 + 0.7152 * p.g as f64 + 0.0722 * p.b as f64;
                    lum < 128.0
                })
                .count()
        };
        let rendered_dark = dark(last);
        assert!(rendered_dark >= 300, "only {rendered_dark} dark pixels");

        // Independent oracle: analytic distance to the one segment.
        let (a, b) = (Point::new(0.0, 50.5), Point::new(100.0, 50.5));
        let mut oracle_dark = 0;
        for y in 0..100 {
            for x in 0..100 {
                let p = Point::new(x as f64 + 0.5, y as f64 + 0.5);
                let cov = (1.5 + 0.5 - dist_point_segment(p, a, b)).clamp(0.0, 1.0);
                let v = 255.0 - cov * 255.0;
                if 0.2126 * v + 0.7152 * v + 0.0722 * v < 128.0 {
                    oracle_dark += 1;
                }
            }
        }
        assert_eq!(rendered_dark, oracle_dark);
    }

    #[test]
    fn rendering_is_deterministic() {
        let comp = gen_composition(Relation::Grouping, 3, 5, (120.0, 208.0)).unwrap();
        let plan = RenderPlan::new(11, 120, 208, 1, 2, 16.0).unwrap();
        let order = crate::shapes::OrderPermutation::identity(3);
        let a = render_sequence(&comp.document, &order, &plan, &Style::Pen).unwrap();
        let b = render_sequence(&comp.document, &order, &plan, &Style::Pen).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hold_tail_frames_are_identical() {
        let doc = line_doc((100.0, 100.0), 50.0, 10.0, 90.0, 3.0);
        let plan = RenderPlan::new(9, 100, 100, 1, 3, 16.0).unwrap();
        let seq = render_sequence(&doc, &crate::shapes::OrderPermutation::identity(1), &plan, &Style::Pen).unwrap();
        for f in plan.frames - plan.hold_tail - 1..plan.frames {
            assert_eq!(seq.frames[f], seq.frames[plan.frames - 1], "frame {f} differs");
        }
    }

    #[test]
    fn final_frame_independent_of_order() {
        let comp = gen_composition(Relation::Adjacency, 3, 8, (120.0, 208.0)).unwrap();
        let plan = RenderPlan::new(13, 120, 208, 1, 1, 16.0).unwrap();
        let orders = crate::shapes::enumerate_orders(&comp, 3, 4).unwrap();
        let finals: Vec<Frame> = orders
            .iter()
            .map(|o| render_sequence(&comp.document, o, &plan, &Style::Pen).unwrap().frames.pop().unwrap())
            .collect();
        assert_eq!(finals[0], finals[1]);
        assert_eq!(finals[0], finals[2]);
    }

    #[test]
    fn ink_only_accumulates_pen_and_brush() {
        let comp = gen_composition(Relation::Containment, 3, 2, (120.0, 208.0)).unwrap();
        let plan = RenderPlan::new(13, 120, 208, 1, 1, 16.0).unwrap();
        let order = crate::shapes::OrderPermutation::identity(3);
        let styles = [
            Style::Pen,
            Style::Brush { brush: Brush::builtin("soft-round").unwrap(), color: Rgb8::new(63, 81, 181) },
        ];
        for style in styles {
            let seq = render_sequence(&comp.document, &order, &plan, &style).unwrap();
            for f in 1..plan.frames {
                let (prev, cur) = (&seq.frames[f - 1], &seq.frames[f]);
                for i in 0..prev.pixels.len() / 3 {
                    let dist = |px: &Frame| {
                        (0..3)
                            .map(|c| 255i32 - px.pixels[3 * i + c] as i32)
                            .max()
                            .unwrap()
                    };
                    assert!(
                        dist(cur) >= dist(prev),
                        "style {style:?} frame {f} pixel {i} lost ink"
                    );
                }
            }
        }
    }

    #[test]
    fn stamp_grid_counts() {
        let poly = Polyline::new(vec![Point::new(0.0, 0.0), Point::new(100.0, 0.0)]);
        let brush = Brush::new("b", vec![255; 64 * 64], 64, 8.0, 0.25).unwrap();
        assert_eq!(stamp_positions(&poly, &brush, 1.0).len(), 51);
        assert_eq!(stamp_positions(&poly, &brush, 0.0), vec![0.0]);
        // Ends are included even when the grid does not land on them.
        let positions = stamp_positions(&poly, &brush, 0.33);
        assert_eq!(*positions.last().unwrap(), 33.0);
        assert_eq!(positions[0], 0.0);
    }

    #[test]
    fn opaque_stamp_paints_exact_color() {
        let poly = Polyline::new(vec![Point::new(10.0, 16.0), Point::new(22.0, 16.0)]);
        let brush = Brush::new("opaque", vec![255; 32 * 32], 32, 6.0, 0.25).unwrap();
        let mut frame = Frame::filled(32, 32, Rgb8::WHITE);
        stamp_stroke(&mut frame, &brush, Rgb8::new(255, 0, 0), &poly, 1.0);
        let mut inked = 0;
        for y in 0..32 {
            for x in 0..32 {
                let p = frame.pixel(x, y);
                if p != Rgb8::WHITE {
                    assert_eq!(p, Rgb8::new(255, 0, 0), "pixel ({x},{y})");
                    inked += 1;
                }
            }
        }
        assert!(inked > 0);
    }

    #[test]
    fn conditioning_frame_ink_stays_in_the_box() {
        let plan = RenderPlan::default();
        for id in Brush::builtin_ids() {
            let brush = Brush::builtin(id).unwrap();
            let frame = conditioning_frame(&brush, Rgb8::BLACK, &plan);
            let w = plan.width as f64;
            let clip = Rect::new(0.03 * w, 0.03 * plan.height as f64, 0.03 * w + 0.12 * w, 0.03 * plan.height as f64 + 0.12 * w);
            let mut inked = 0;
            for y in 0..plan.height {
                for x in 0..plan.width {
                    if frame.pixel(x, y) != Rgb8::WHITE {
                        inked += 1;
                        let p = Point::new(x as f64 + 0.5, y as f64 + 0.5);
                        assert!(clip.contains_point(p), "ink at ({x},{y}) outside the exemplar box");
                    }
                }
            }
            assert!(inked > 20, "brush {id} exemplar almost invisible: {inked} px");
        }
    }

    #[test]
    fn conditioning_colors_share_one_mask() {
        let plan = RenderPlan::new(16, 240, 416, 1, 4, 16.0).unwrap();
        let brush = Brush::builtin("hard-round").unwrap();
        let a = conditioning_frame(&brush, Rgb8::new(183, 28, 45), &plan);
        let b = conditioning_frame(&brush, Rgb8::new(0, 121, 107), &plan);
        let mask = |f: &Frame| -> Vec<bool> {
            (0..f.pixels.len() / 3)
                .map(|i| (0..3).any(|c| f.pixels[3 * i + c] != 255))
                .collect()
        };
        assert_eq!(mask(&a), mask(&b));
        assert_ne!(a.pixels, b.pixels);
    }

    #[test]
    fn dark_exemplar_has_dark_pixels() {
        let plan = RenderPlan::default();
        let brush = Brush::builtin("hard-round").unwrap();
        let frame = conditioning_frame(&brush, Rgb8::BLACK, &plan);
        let dark = (0..plan.width * plan.height)
            .filter(|i| {
                let p = frame.pixel(i % plan.width, i / plan.width);
                0.2126 * p.r as f64 + 0.7152 * p.g as f64 + 0.0722 * (p.b as f64) < 128.0
            })
            .count();
        assert!(dark > 10, "{dark} dark pixels");
    }

    #[test]
    fn builtin_brushes_validate() {
        for id in Brush::builtin_ids() {
            let b = Brush::builtin(id).unwrap();
            assert_eq!(b.id, id);
            assert!(b.stamp.iter().any(|&a| a > 0));
        }
        assert!(Brush::builtin("nope").is_err());
    }

    #[test]
    fn brush_validation_rejects_bad_stamps() {
        assert!(Brush::new("b", vec![0; 64 * 64], 64, 8.0, 0.25).is_err()); // transparent
        assert!(Brush::new("b", vec![255; 8 * 8], 8, 8.0, 0.25).is_err()); // too small
        assert!(Brush::new("b", vec![255; 100], 64, 8.0, 0.25).is_err()); // wrong len
        assert!(Brush::new("b", vec![255; 64 * 64], 64, 8.0, 1.5).is_err()); // spacing
        assert!(Brush::new("b", vec![255; 64 * 64], 64, 0.0, 0.25).is_err()); // diameter
    }

    #[test]
    fn frame_out_of_range() {
        let doc = line_doc((100.0, 100.0), 50.0, 10.0, 90.0, 3.0);
        let plan = small_plan(8, 100, 100);
        let tl = compile_timeline(&doc, &crate::shapes::OrderPermutation::identity(1), &plan).unwrap();
        let strokes = scaled_strokes(&doc, &plan).unwrap();
        let err = render_prepared(&strokes, &tl, 8, &Style::Pen, &plan).unwrap_err();
        assert!(matches!(err, Error::FrameOutOfRange { frame: 8, frames: 8 }));
    }
}
