// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Parses a strict subset of SVG into ordered strokes and flattens them into
//! polylines with arc-length tables.
//!
//! One `path` element is one stroke; document order is drawing order. Path
//! data supports M/L/H/V/C/S/Q/T/A/Z in absolute and relative form with
//! implicit command repetition. Smooth commands (S/T) are expanded into their
//! explicit C/Q equivalents while parsing, and all coordinates are stored
//! absolute, so downstream consumers never see relative or shorthand forms.

use crate::geom::{dist_point_segment, Point, Rect, Rgb8};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default flattening tolerance in pixels: the polyline stays within this
/// distance of the exact curve.
pub const DEFAULT_TOLERANCE: f64 = 0.25;

/// Default stroke width in pixels when the document does not specify one.
pub const DEFAULT_STROKE_WIDTH: f64 = 3.0;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("malformed path data at byte {offset}: {detail}")]
    MalformedPathData { offset: usize, detail: String },
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("document contains no strokes")]
    NoStrokes,
    #[error("degenerate path: fewer than two distinct points")]
    DegeneratePath,
    #[error("zero-length polyline has no arc-length parameterization")]
    ZeroLength,
}

/// Absolute path command. The first command of a stroke is always `MoveTo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PathCommand {
    MoveTo(Point),
    LineTo(Point),
    CubicTo { c1: Point, c2: Point, to: Point },
    QuadTo { c: Point, to: Point },
    ArcTo { rx: f64, ry: f64, rotation: f64, large_arc: bool, sweep: bool, to: Point },
    ClosePath,
}

/// One recorded pen stroke: an ordered command list with paint attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    /// 0-based position in document order.
    pub id: usize,
    pub commands: Vec<PathCommand>,
    /// Stroke width in pixels; always positive.
    pub width: f64,
    pub color: Rgb8,
}

/// An ordered sketch: canvas dimensions plus strokes in drawing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchDocument {
    pub name: String,
    pub canvas_w: f64,
    pub canvas_h: f64,
    /// `strokes[i].id == i` always holds.
    pub strokes: Vec<Stroke>,
}

/// A flattened stroke: points plus a cumulative arc-length table.
/// `cumulative[0] == 0` and the table is strictly increasing (consecutive
/// points are always distinct).
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point>,
    cumulative: Vec<f64>,
}

impl Polyline {
    /// Builds a polyline, dropping consecutive duplicate points so the
    /// arc-length table stays strictly increasing.
    pub fn new(points: Vec<Point>) -> Polyline {
        let mut pts: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if pts.last().map_or(true, |q| q.distance(p) > 1e-9) {
                pts.push(p);
            }
        }
        let mut cumulative = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        for (i, p) in pts.iter().enumerate() {
            if i > 0 {
                acc += pts[i - 1].distance(*p);
            }
            cumulative.push(acc);
        }
        Polyline { points: pts, cumulative }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn cumulative_lengths(&self) -> &[f64] {
        &self.cumulative
    }

    /// Total arc length in pixels.
    pub fn arc_length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// Point at arc length `s` from the start. `s` is clamped to the valid
    /// range; a zero-length polyline has no parameterization.
    pub fn point_at(&self, s: f64) -> Result<Point, Error> {
        let total = self.arc_length();
        if total <= 0.0 || self.points.len() < 2 {
            return Err(Error::ZeroLength);
        }
        let s = s.clamp(0.0, total);
        let idx = self.cumulative.partition_point(|&c| c < s);
        if idx == 0 {
            return Ok(self.points[0]);
        }
        let (c0, c1) = (self.cumulative[idx - 1], self.cumulative[idx]);
        let t = (s - c0) / (c1 - c0);
        Ok(self.points[idx - 1].lerp(self.points[idx], t))
    }

    /// Points covering arc lengths `[0, s]`, ending exactly at `point_at(s)`.
    pub fn prefix(&self, s: f64) -> Vec<Point> {
        let total = self.arc_length();
        if total <= 0.0 {
            return vec![self.points[0]];
        }
        let s = s.clamp(0.0, total);
        let idx = self.cumulative.partition_point(|&c| c <= s);
        let mut out: Vec<Point> = self.points[..idx].to_vec();
        if idx < self.points.len() {
            let end = self.point_at(s).expect("nonzero length");
            if out.last().map_or(true, |q| q.distance(end) > 1e-9) {
                out.push(end);
            }
        }
        if out.is_empty() {
            out.push(self.points[0]);
        }
        out
    }

    pub fn bounds(&self) -> Rect {
        Rect::from_points(self.points.iter().copied())
    }
}

// ---------------------------------------------------------------------------
// Path data parsing

struct Lexer<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(d: &'a str) -> Self {
        Lexer { bytes: d.as_bytes(), pos: 0 }
    }

    fn err(&self, detail: impl Into<String>) -> Error {
        Error::MalformedPathData { offset: self.pos, detail: detail.into() }
    }

    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' | b',' => self.pos += 1,
                _ => break,
            }
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_separators();
        self.bytes.get(self.pos).copied()
    }

    /// True when the next token starts a number.
    fn at_number(&mut self) -> bool {
        matches!(self.peek(), Some(b'0'..=b'9' | b'.' | b'-' | b'+'))
    }

    fn next_command(&mut self) -> Option<u8> {
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => {
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn number(&mut self) -> Result<f64, Error> {
        self.skip_separators();
        let start = self.pos;
        let b = self.bytes;
        let mut i = self.pos;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let int_digits = Self::eat_digits(b, &mut i);
        let mut frac_digits = 0;
        if i < b.len() && b[i] == b'.' {
            i += 1;
            frac_digits = Self::eat_digits(b, &mut i);
        }
        if int_digits == 0 && frac_digits == 0 {
            return Err(self.err("expected number"));
        }
        if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            if Self::eat_digits(b, &mut j) > 0 {
                i = j;
            }
        }
        let text = std::str::from_utf8(&b[start..i]).expect("ascii slice");
        let value: f64 = text.parse().map_err(|_| self.err(format!("invalid number {text:?}")))?;
        if !value.is_finite() {
            return Err(self.err(format!("non-finite number {text:?}")));
        }
        self.pos = i;
        Ok(value)
    }

    fn eat_digits(b: &[u8], i: &mut usize) -> usize {
        let start = *i;
        while *i < b.len() && b[*i].is_ascii_digit() {
            *i += 1;
        }
        *i - start
    }

    /// Arc flags are a single `0` or `1` and may be packed without separators.
    fn flag(&mut self) -> Result<bool, Error> {
        self.skip_separators();
        match self.bytes.get(self.pos) {
            Some(b'0') => {
                self.pos += 1;
                Ok(false)
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(true)
            }
            _ => Err(self.err("expected arc flag 0 or 1")),
        }
    }
}

/// Parses one `d` attribute into absolute commands. Shorthand (H/V/S/T) and
/// relative coordinates are resolved here. In strict mode a second subpath is
/// rejected; otherwise it is joined to the previous one with a line and a
/// warning is recorded.
pub fn parse_path_data(d: &str, strict: bool, warnings: &mut Vec<String>) -> Result<Vec<PathCommand>, Error> {
    let mut lx = Lexer::new(d);
    let mut out: Vec<PathCommand> = Vec::new();
    let mut cur = Point::new(0.0, 0.0);
    let mut subpath_start = cur;
    // Reflection state for S/T: control point of the previous C/Q, if any.
    let mut last_cubic_c2: Option<Point> = None;
    let mut last_quad_c: Option<Point> = None;

    let first = lx.next_command().ok_or_else(|| lx.err("path data must start with a moveto"))?;
    if first != b'M' && first != b'm' {
        return Err(lx.err(format!("path data must start with M or m, found {:?}", first as char)));
    }
    let mut cmd = first;
    let mut started = false;

    loop {
        let relative = cmd.is_ascii_lowercase();
        let rel = |cur: Point, p: Point| if relative { cur + p } else { p };
        let mut new_cubic_c2: Option<Point> = None;
        let mut new_quad_c: Option<Point> = None;
        match cmd.to_ascii_uppercase() {
            b'M' => {
                let p = Point::new(lx.number()?, lx.number()?);
                let target = rel(cur, p);
                if !started {
                    out.push(PathCommand::MoveTo(target));
                    started = true;
                } else if strict {
                    return Err(Error::UnsupportedFeature("multiple subpaths in one path element".into()));
                } else {
                    warnings.push("joined second subpath with a line".into());
                    out.push(PathCommand::LineTo(target));
                }
                cur = target;
                subpath_start = target;
                // Implicit repetitions of a moveto are linetos.
                cmd = if relative { b'l' } else { b'L' };
            }
            b'L' => {
                let p = Point::new(lx.number()?, lx.number()?);
                cur = rel(cur, p);
                out.push(PathCommand::LineTo(cur));
            }
            b'H' => {
                let x = lx.number()?;
                cur = Point::new(if relative { cur.x + x } else { x }, cur.y);
                out.push(PathCommand::LineTo(cur));
            }
            b'V' => {
                let y = lx.number()?;
                cur = Point::new(cur.x, if relative { cur.y + y } else { y });
                out.push(PathCommand::LineTo(cur));
            }
            b'C' => {
                let c1 = rel(cur, Point::new(lx.number()?, lx.number()?));
                let c2 = rel(cur, Point::new(lx.number()?, lx.number()?));
                let to = rel(cur, Point::new(lx.number()?, lx.number()?));
                out.push(PathCommand::CubicTo { c1, c2, to });
                new_cubic_c2 = Some(c2);
                cur = to;
            }
            b'S' => {
                let c1 = match last_cubic_c2 {
                    Some(prev) => Point::new(2.0 * cur.x - prev.x, 2.0 * cur.y - prev.y),
                    None => cur,
                };
                let c2 = rel(cur, Point::new(lx.number()?, lx.number()?));
                let to = rel(cur, Point::new(lx.number()?, lx.number()?));
                out.push(PathCommand::CubicTo { c1, c2, to });
                new_cubic_c2 = Some(c2);
                cur = to;
            }
            b'Q' => {
                let c = rel(cur, Point::new(lx.number()?, lx.number()?));
                let to = rel(cur, Point::new(lx.number()?, lx.number()?));
                out.push(PathCommand::QuadTo { c, to });
                new_quad_c = Some(c);
                cur = to;
            }
            b'T' => {
                let c = match last_quad_c {
                    Some(prev) => Point::new(2.0 * cur.x - prev.x, 2.0 * cur.y - prev.y),
                    None => cur,
                };
                let to = rel(cur, Point::new(lx.number()?, lx.number()?));
                out.push(PathCommand::QuadTo { c, to });
                new_quad_c = Some(c);
                cur = to;
            }
            b'A' => {
                let rx = lx.number()?.abs();
                let ry = lx.number()?.abs();
                let rotation = lx.number()?;
                let large_arc = lx.flag()?;
                let sweep = lx.flag()?;
                let to = rel(cur, Point::new(lx.number()?, lx.number()?));
                if rx == 0.0 || ry == 0.0 {
                    // Zero radius degenerates to a straight line.
                    out.push(PathCommand::LineTo(to));
                } else {
                    out.push(PathCommand::ArcTo { rx, ry, rotation, large_arc, sweep, to });
                }
                cur = to;
            }
            b'Z' => {
                out.push(PathCommand::ClosePath);
                cur = subpath_start;
            }
            other => {
                return Err(lx.err(format!("unsupported path command {:?}", other as char)));
            }
        }
        last_cubic_c2 = new_cubic_c2;
        last_quad_c = new_quad_c;

        if lx.at_number() {
            if cmd.to_ascii_uppercase() == b'Z' {
                return Err(lx.err("coordinates after closepath without a command"));
            }
            continue; // implicit repetition of the current command
        }
        match lx.next_command() {
            Some(c) => cmd = c,
            None => break,
        }
    }
    lx.skip_separators();
    if lx.pos != lx.bytes.len() {
        return Err(lx.err("trailing garbage in path data"));
    }
    if out.len() < 2 {
        return Err(Error::DegeneratePath);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Flattening

impl Stroke {
    /// Flattens the command list into a polyline that stays within
    /// `tolerance` pixels of the exact curve. Fails with `DegeneratePath`
    /// when fewer than two distinct points result.
    pub fn flatten(&self, tolerance: f64) -> Result<Polyline, Error> {
        assert!(tolerance > 0.0, "flatten tolerance must be positive");
        let mut pts: Vec<Point> = Vec::new();
        let mut cur = Point::new(0.0, 0.0);
        let mut subpath_start = cur;
        for cmd in &self.commands {
            match *cmd {
                PathCommand::MoveTo(p) => {
                    // Interior movetos (possible in hand-built strokes) are
                    // joined with a line, matching lenient parsing.
                    pts.push(p);
                    subpath_start = p;
                    cur = p;
                }
                PathCommand::LineTo(p) => {
                    pts.push(p);
                    cur = p;
                }
                PathCommand::CubicTo { c1, c2, to } => {
                    flatten_cubic(cur, c1, c2, to, tolerance, 0, &mut pts);
                    cur = to;
                }
                PathCommand::QuadTo { c, to } => {
                    // Exact degree elevation to a cubic.
                    let c1 = cur.lerp(c, 2.0 / 3.0);
                    let c2 = to.lerp(c, 2.0 / 3.0);
                    flatten_cubic(cur, c1, c2, to, tolerance, 0, &mut pts);
                    cur = to;
                }
                PathCommand::ArcTo { rx, ry, rotation, large_arc, sweep, to } => {
                    flatten_arc(cur, rx, ry, rotation, large_arc, sweep, to, tolerance, &mut pts);
                    cur = to;
                }
                PathCommand::ClosePath => {
                    pts.push(subpath_start);
                    cur = subpath_start;
                }
            }
        }
        let poly = Polyline::new(pts);
        if poly.points().len() < 2 {
            return Err(Error::DegeneratePath);
        }
        Ok(poly)
    }

    /// Bounding box of the flattened stroke expanded by half the width.
    pub fn ink_bounds(&self, tolerance: f64) -> Result<Rect, Error> {
        Ok(self.flatten(tolerance)?.bounds().expand(self.width / 2.0))
    }

    /// Copy of the stroke shifted by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Stroke {
        let mut s = self.clone();
        let delta = Point::new(dx, dy);
        for cmd in &mut s.commands {
            match cmd {
                PathCommand::MoveTo(p) | PathCommand::LineTo(p) => *p = *p + delta,
                PathCommand::CubicTo { c1, c2, to } => {
                    *c1 = *c1 + delta;
                    *c2 = *c2 + delta;
                    *to = *to + delta;
                }
                PathCommand::QuadTo { c, to } => {
                    *c = *c + delta;
                    *to = *to + delta;
                }
                PathCommand::ArcTo { to, .. } => *to = *to + delta,
                PathCommand::ClosePath => {}
            }
        }
        s
    }
}

fn flatten_cubic(p0: Point, p1: Point, p2: Point, p3: Point, tol: f64, depth: u32, out: &mut Vec<Point>) {
    // Control-point distance from the chord bounds the curve's deviation
    // (the curve lies in the control polygon's convex hull).
    let d1 = dist_point_segment(p1, p0, p3);
    let d2 = dist_point_segment(p2, p0, p3);
    if d1.max(d2) <= tol || depth >= 24 {
        out.push(p3);
        return;
    }
    let mid = |a: Point, b: Point| a.lerp(b, 0.5);
    let p01 = mid(p0, p1);
    let p12 = mid(p1, p2);
    let p23 = mid(p2, p3);
    let p012 = mid(p01, p12);
    let p123 = mid(p12, p23);
    let m = mid(p012, p123);
    flatten_cubic(p0, p01, p012, m, tol, depth + 1, out);
    flatten_cubic(m, p123, p23, p3, tol, depth + 1, out);
}

#[allow(clippy::too_many_arguments)]
fn flatten_arc(from: Point, rx: f64, ry: f64, rotation_deg: f64, large_arc: bool, sweep: bool, to: Point, tol: f64, out: &mut Vec<Point>) {
    if from.distance(to) <= 1e-12 {
        return;
    }
    let phi = rotation_deg.to_radians();
    // Endpoint form to center form.
    let half = (from - to) * 0.5;
    let v = half.rotate(-phi);
    let (x1, y1) = (v.x, v.y);
    let (mut rx, mut ry) = (rx, ry);
    let lambda = x1 * x1 / (rx * rx) + y1 * y1 / (ry * ry);
    if lambda > 1.0 {
        let s = lambda.sqrt();
        rx *= s;
        ry *= s;
    }
    let num = (rx * rx * ry * ry - rx * rx * y1 * y1 - ry * ry * x1 * x1).max(0.0);
    let den = rx * rx * y1 * y1 + ry * ry * x1 * x1;
    let mut coef = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    if large_arc == sweep {
        coef = -coef;
    }
    let cxp = coef * rx * y1 / ry;
    let cyp = -coef * ry * x1 / rx;
    let mid = Point::new((from.x + to.x) / 2.0, (from.y + to.y) / 2.0);
    let center = Point::new(cxp, cyp).rotate(phi) + mid;

    let start_v = Point::new((x1 - cxp) / rx, (y1 - cyp) / ry);
    let end_v = Point::new((-x1 - cxp) / rx, (-y1 - cyp) / ry);
    let theta1 = start_v.y.atan2(start_v.x);
    let mut delta = (end_v.y.atan2(end_v.x) - theta1) % (2.0 * PI);
    if !sweep && delta > 0.0 {
        delta -= 2.0 * PI;
    } else if sweep && delta < 0.0 {
        delta += 2.0 * PI;
    }

    // Sagitta bound: a chord spanning angle t on radius r deviates by
    // r(1 - cos(t/2)), so t <= 2 acos(1 - tol/r) keeps deviation <= tol.
    let rmax = rx.max(ry);
    let theta_max = if tol >= rmax { PI / 2.0 } else { (2.0 * (1.0 - tol / rmax).acos()).max(1e-3) };
    let n = ((delta.abs() / theta_max).ceil() as usize).clamp(1, 4096);
    for i in 1..=n {
        let t = theta1 + delta * (i as f64) / (n as f64);
        let p = Point::new(rx * t.cos(), ry * t.sin()).rotate(phi) + center;
        out.push(if i == n { to } else { p });
    }
}

// ---------------------------------------------------------------------------
// Document parsing

#[derive(Clone, Copy)]
struct PaintCtx {
    // None = paint explicitly disabled (`stroke="none"`).
    stroke: Option<Rgb8>,
    // None = no stroke-width anywhere on the ancestor chain. Explicit widths
    // are user units and scale with the viewBox transform; the 3 px default
    // is applied after it.
    width: Option<f64>,
}

/// Parses an SVG document into a `SketchDocument`.
///
/// Returns the document plus the number of skipped items (always 0 in strict
/// mode, where anything outside the supported subset is an error instead).
pub fn parse_svg(text: &str, strict: bool) -> Result<(SketchDocument, usize), Error> {
    let mut warnings = Vec::new();
    let xml = roxmltree::Document::parse(text).map_err(|e| Error::MalformedDocument(e.to_string()))?;
    let root = xml.root_element();
    if root.tag_name().name() != "svg" {
        return Err(Error::MalformedDocument(format!("root element is <{}>, expected <svg>", root.tag_name().name())));
    }

    let view_box = match root.attribute("viewBox") {
        Some(vb) => Some(parse_view_box(vb)?),
        None => None,
    };
    let width = parse_length(root.attribute("width"), strict, &mut warnings)?;
    let height = parse_length(root.attribute("height"), strict, &mut warnings)?;
    let (canvas_w, canvas_h) = match (width, height, view_box) {
        (Some(w), Some(h), _) => (w, h),
        (_, _, Some([_, _, vw, vh])) => (vw, vh),
        _ => return Err(Error::MalformedDocument("canvas size requires width/height or viewBox".into())),
    };
    if canvas_w <= 0.0 || canvas_h <= 0.0 {
        return Err(Error::MalformedDocument("canvas dimensions must be positive".into()));
    }

    // Uniform fit-and-center mapping from viewBox space to canvas space.
    let (scale, tx, ty) = match view_box {
        Some([min_x, min_y, vw, vh]) => {
            let s = (canvas_w / vw).min(canvas_h / vh);
            ((s), (canvas_w - s * vw) / 2.0 - s * min_x, (canvas_h - s * vh) / 2.0 - s * min_y)
        }
        None => (1.0, 0.0, 0.0),
    };

    let ctx = PaintCtx { stroke: Some(Rgb8::BLACK), width: None };
    let mut tagged: Vec<(Stroke, bool)> = Vec::new();
    for child in root.children() {
        visit(child, ctx, strict, &mut tagged, &mut warnings)?;
    }
    if tagged.is_empty() {
        return Err(Error::NoStrokes);
    }

    let mut strokes = Vec::with_capacity(tagged.len());
    for (i, (mut s, explicit_width)) in tagged.into_iter().enumerate() {
        s.id = i;
        if scale != 1.0 || tx != 0.0 || ty != 0.0 {
            transform_stroke(&mut s, scale, tx, ty);
        }
        if !explicit_width {
            s.width = DEFAULT_STROKE_WIDTH;
        }
        strokes.push(s);
    }

    let mut doc = SketchDocument {
        name: document_name(root),
        canvas_w,
        canvas_h,
        strokes,
    };
    fit_within_canvas(&mut doc)?;
    Ok((doc, warnings.len()))
}

fn document_name(root: roxmltree::Node) -> String {
    for child in root.children() {
        if child.tag_name().name() == "title" {
            if let Some(t) = child.text() {
                let t = t.trim();
                if !t.is_empty() {
                    return t.to_string();
                }
            }
        }
    }
    root.attribute("id").unwrap_or("untitled").to_string()
}

fn parse_view_box(vb: &str) -> Result<[f64; 4], Error> {
    let nums: Vec<f64> = vb
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::MalformedDocument(format!("invalid viewBox {vb:?}")))?;
    if nums.len() != 4 || nums[2] <= 0.0 || nums[3] <= 0.0 {
        return Err(Error::MalformedDocument(format!("invalid viewBox {vb:?}")));
    }
    Ok([nums[0], nums[1], nums[2], nums[3]])
}

fn parse_length(attr: Option<&str>, strict: bool, warnings: &mut Vec<String>) -> Result<Option<f64>, Error> {
    let Some(raw) = attr else { return Ok(None) };
    let trimmed = raw.trim().trim_end_matches("px");
    match trimmed.parse::<f64>() {
        Ok(v) if v > 0.0 => Ok(Some(v)),
        _ if strict => Err(Error::UnsupportedFeature(format!("length {raw:?}"))),
        _ => {
            warnings.push(format!("ignored length {raw:?}"));
            Ok(None)
        }
    }
}

fn visit(
    node: roxmltree::Node,
    mut ctx: PaintCtx,
    strict: bool,
    strokes: &mut Vec<(Stroke, bool)>,
    warnings: &mut Vec<String>,
) -> Result<(), Error> {
    if !node.is_element() {
        return Ok(());
    }
    let name = node.tag_name().name();
    match name {
        "g" | "svg" => {
            apply_paint_attrs(node, &mut ctx, strict, warnings)?;
            for child in node.children() {
                visit(child, ctx, strict, strokes, warnings)?;
            }
            Ok(())
        }
        "path" => {
            apply_paint_attrs(node, &mut ctx, strict, warnings)?;
            if node.attribute("transform").is_some() {
                if strict {
                    return Err(Error::UnsupportedFeature("transform attribute".into()));
                }
                warnings.push("skipped path with transform".into());
                return Ok(());
            }
            let Some(color) = ctx.stroke else {
                if strict {
                    return Err(Error::UnsupportedFeature("path without stroke paint".into()));
                }
                warnings.push("skipped path without stroke paint".into());
                return Ok(());
            };
            let d = node.attribute("d").unwrap_or("");
            if d.trim().is_empty() {
                if strict {
                    return Err(Error::MalformedPathData { offset: 0, detail: "empty path data".into() });
                }
                warnings.push("skipped path with empty data".into());
                return Ok(());
            }
            match parse_path_data(d, strict, warnings) {
                Ok(commands) => {
                    let width = ctx.width.unwrap_or(DEFAULT_STROKE_WIDTH);
                    strokes.push((Stroke { id: strokes.len(), commands, width, color }, ctx.width.is_some()));
                    Ok(())
                }
                Err(e) if strict => Err(e),
                Err(e) => {
                    warnings.push(format!("skipped unparseable path: {e}"));
                    Ok(())
                }
            }
        }
        "title" | "desc" | "metadata" | "defs" => Ok(()),
        other => {
            if strict {
                Err(Error::UnsupportedFeature(format!("element <{other}>")))
            } else {
                warnings.push(format!("skipped element <{other}>"));
                Ok(())
            }
        }
    }
}

fn apply_paint_attrs(node: roxmltree::Node, ctx: &mut PaintCtx, strict: bool, warnings: &mut Vec<String>) -> Result<(), Error> {
    let mut stroke_attr = node.attribute("stroke").map(str::to_string);
    let mut width_attr = node.attribute("stroke-width").map(str::to_string);
    // Inline style declarations take precedence over presentation attributes.
    if let Some(style) = node.attribute("style") {
        for entry in style.split(';') {
            let mut parts = entry.splitn(2, ':');
            let (Some(key), Some(value)) = (parts.next(), parts.next()) else { continue };
            match key.trim() {
                "stroke" => stroke_attr = Some(value.trim().to_string()),
                "stroke-width" => width_attr = Some(value.trim().to_string()),
                _ => {}
            }
        }
    }
    if let Some(paint) = stroke_attr {
        match parse_paint(&paint) {
            Some(p) => ctx.stroke = p,
            None if strict => return Err(Error::UnsupportedFeature(format!("stroke paint {paint:?}"))),
            None => warnings.push(format!("ignored stroke paint {paint:?}")),
        }
    }
    if let Some(w) = width_attr {
        let w = w.trim().trim_end_matches("px");
        match w.parse::<f64>() {
            Ok(v) if v > 0.0 => ctx.width = Some(v),
            _ if strict => return Err(Error::MalformedDocument(format!("invalid stroke-width {w:?}"))),
            _ => warnings.push(format!("ignored stroke-width {w:?}")),
        }
    }
    Ok(())
}

/// Returns `Some(None)` for an explicit `none`, `Some(Some(color))` for a
/// recognized paint, and `None` for unsupported syntax.
fn parse_paint(paint: &str) -> Option<Option<Rgb8>> {
    let p = paint.trim();
    if p.eq_ignore_ascii_case("none") {
        return Some(None);
    }
    if let Some(c) = Rgb8::from_hex(p) {
        return Some(Some(c));
    }
    let named = match p.to_ascii_lowercase().as_str() {
        "black" => Rgb8::BLACK,
        "white" => Rgb8::WHITE,
        "red" => Rgb8::new(255, 0, 0),
        "green" => Rgb8::new(0, 128, 0),
        "blue" => Rgb8::new(0, 0, 255),
        "gray" | "grey" => Rgb8::new(128, 128, 128),
        _ => return None,
    };
    Some(Some(named))
}

fn transform_stroke(stroke: &mut Stroke, s: f64, tx: f64, ty: f64) {
    let map = |p: Point| Point::new(p.x * s + tx, p.y * s + ty);
    for cmd in &mut stroke.commands {
        match cmd {
            PathCommand::MoveTo(p) | PathCommand::LineTo(p) => *p = map(*p),
            PathCommand::CubicTo { c1, c2, to } => {
                *c1 = map(*c1);
                *c2 = map(*c2);
                *to = map(*to);
            }
            PathCommand::QuadTo { c, to } => {
                *c = map(*c);
                *to = map(*to);
            }
            PathCommand::ArcTo { rx, ry, to, .. } => {
                *rx *= s;
                *ry *= s;
                *to = map(*to);
            }
            PathCommand::ClosePath => {}
        }
    }
    stroke.width *= s;
}

/// Uniformly scales and centers the drawing when ink would fall outside the
/// canvas. Never scales up.
fn fit_within_canvas(doc: &mut SketchDocument) -> Result<(), Error> {
    let mut bounds = Rect::EMPTY;
    let mut max_half_width: f64 = 0.0;
    for stroke in &doc.strokes {
        bounds = bounds.union(stroke.flatten(DEFAULT_TOLERANCE)?.bounds());
        max_half_width = max_half_width.max(stroke.width / 2.0);
    }
    let margin = max_half_width + 0.5;
    let inked = bounds.expand(margin);
    let inside = inked.min_x >= -1e-6
        && inked.min_y >= -1e-6
        && inked.max_x <= doc.canvas_w + 1e-6
        && inked.max_y <= doc.canvas_h + 1e-6;
    if inside {
        return Ok(());
    }
    let avail_w = (doc.canvas_w - 2.0 * margin).max(1.0);
    let avail_h = (doc.canvas_h - 2.0 * margin).max(1.0);
    let sx = if bounds.width() > 0.0 { avail_w / bounds.width() } else { f64::INFINITY };
    let sy = if bounds.height() > 0.0 { avail_h / bounds.height() } else { f64::INFINITY };
    let s = sx.min(sy).min(1.0);
    let tx = (doc.canvas_w - s * bounds.width()) / 2.0 - s * bounds.min_x;
    let ty = (doc.canvas_h - s * bounds.height()) / 2.0 - s * bounds.min_y;
    for stroke in &mut doc.strokes {
        transform_stroke(stroke, s, tx, ty);
    }
    Ok(())
}
