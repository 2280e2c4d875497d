// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Metrics over rendered sketch videos: how often a transition adds more
//! than one disjoint piece of ink, how ink accumulates over time, which
//! order the regions of a sketch were drawn in, and a Gram-matrix style
//! distance over externally computed feature maps.

use crate::geom::{Rect, Rgb8};
use crate::raster::{Frame, FrameSequence};
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("video has no ink")]
    BlankVideo,
    #[error("sequences have different lengths: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("not a permutation of a common set")]
    NotAPermutation,
    #[error("need at least {need} frames, got {got}")]
    TooFewFrames { got: usize, need: usize },
    #[error("orderings need at least 2 elements")]
    TooShort,
    #[error("no regions supplied")]
    NoRegions,
    #[error("mask selects no positions in layer {0}")]
    EmptyMask(usize),
    #[error("{path}: {detail}")]
    BadFeatureFile { path: PathBuf, detail: String },
    #[error("{path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Pixel-connectivity rule for component counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    Four,
    Eight,
}

/// Knobs for ink detection and component counting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    /// Background the video was rendered on.
    pub canvas_color: Rgb8,
    /// Max per-channel distance from the canvas color that still counts
    /// as background.
    pub threshold: u8,
    pub connectivity: Connectivity,
    /// Components smaller than this many pixels are ignored.
    pub min_area: usize,
    /// Fraction of a region's area that must be inked before the region
    /// counts as activated.
    pub activation_fraction: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            canvas_color: Rgb8::WHITE,
            threshold: 40,
            connectivity: Connectivity::Eight,
            min_area: 12,
            activation_fraction: 0.05,
        }
    }
}

/// A boolean ink grid matching a frame's dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InkMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl InkMask {
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    /// Number of ink pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// What one frame transition added. A transition with fewer than
/// `min_area` new pixels always reports zero components; the converse can
/// fail when the new ink is nothing but sub-threshold speckle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaStats {
    pub frame: usize,
    pub new_pixels: usize,
    pub new_components: usize,
}

/// Everything the evaluator measures on one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub multi_stroke_ratio: f64,
    pub multi_stroke_frames: usize,
    pub considered_frames: usize,
    pub accumulation: Vec<f64>,
    pub order: Option<Vec<usize>>,
    pub inactive_regions: Vec<usize>,
    pub tau: Option<f64>,
    pub per_frame: Vec<DeltaStats>,
}

impl EvalReport {
    /// The accumulation curve as `frame_index,value` CSV.
    pub fn accumulation_csv(&self) -> String {
        let mut out = String::from("frame_index,value\n");
        for (i, v) in self.accumulation.iter().enumerate() {
            out.push_str(&format!("{i},{v}\n"));
        }
        out
    }
}

/// A C×h×w activation tensor, e.g. one network layer's response.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: u32,
    pub height: u32,
    pub width: u32,
    pub values: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: u32, height: u32, width: u32, values: Vec<f32>) -> Result<FeatureMap, Error> {
        let need = (channels * height * width) as usize;
        if values.len() != need {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {channels}x{height}x{width} map (need {need})",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch("feature map holds non-finite values".into()));
        }
        Ok(FeatureMap { channels, height, width, values })
    }
}

// ---------------------------------------------------------------------------
// Ink masks

/// Marks every pixel whose max per-channel distance from the canvas color
/// exceeds `threshold`.
pub fn ink_mask(frame: &Frame, canvas_color: Rgb8, threshold: u8) -> InkMask {
    assert!(threshold >= 1, "threshold must be at least 1");
    let canvas = canvas_color.channels();
    let bits = frame
        .pixels
        .chunks_exact(3)
        .map(|px| {
            (0..3)
                .map(|c| (px[c] as i32 - canvas[c] as i32).unsigned_abs())
                .max()
                .unwrap()
                > threshold as u32
        })
        .collect();
    InkMask { width: frame.width, height: frame.height, bits }
}

/// Pixels inked in `cur` but not in `prev`.
pub fn new_ink(prev: &InkMask, cur: &InkMask) -> Result<InkMask, Error> {
    if prev.width != cur.width || prev.height != cur.height {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            prev.width, prev.height, cur.width, cur.height
        )));
    }
    let bits = prev.bits.iter().zip(&cur.bits).map(|(&p, &c)| c && !p).collect();
    Ok(InkMask { width: cur.width, height: cur.height, bits })
}

// ---------------------------------------------------------------------------
// Connected components

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            self.parent[x as usize] = self.parent[self.parent[x as usize] as usize];
            x = self.parent[x as usize];
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
    }
}

/// Counts connected ink components with at least `min_area` pixels.
pub fn count_components(mask: &InkMask, connectivity: Connectivity, min_area: usize) -> usize {
    assert!(min_area >= 1, "min_area must be at least 1");
    let (w, h) = (mask.width as usize, mask.height as usize);
    let mut uf = UnionFind::new(w * h);
    for y in 0..h {
        for x in 0..w {
            if !mask.bits[y * w + x] {
                continue;
            }
            let idx = (y * w + x) as u32;
            // Join already-visited neighbors (scanline order).
            if x > 0 && mask.bits[y * w + x - 1] {
                uf.union(idx, idx - 1);
            }
            if y > 0 {
                if mask.bits[(y - 1) * w + x] {
                    uf.union(idx, idx - w as u32);
                }
                if connectivity == Connectivity::Eight {
                    if x > 0 && mask.bits[(y - 1) * w + x - 1] {
                        uf.union(idx, idx - w as u32 - 1);
                    }
                    if x + 1 < w && mask.bits[(y - 1) * w + x + 1] {
                        uf.union(idx, idx - w as u32 + 1);
                    }
                }
            }
        }
    }
    let mut count = 0;
    for y in 0..h {
        for x in 0..w {
            let idx = (y * w + x) as u32;
            if mask.bits[y * w + x] && uf.find(idx) == idx && uf.size[idx as usize] as usize >= min_area {
                count += 1;
            }
        }
    }
    count
}

// ---------------------------------------------------------------------------
// Video metrics

fn masks_of(seq: &FrameSequence, params: &EvalParams) -> Vec<InkMask> {
    seq.frames.iter().map(|f| ink_mask(f, params.canvas_color, params.threshold)).collect()
}

/// Per-transition delta statistics for frames `1..K`.
fn per_frame_stats(masks: &[InkMask], params: &EvalParams) -> Result<Vec<DeltaStats>, Error> {
    (1..masks.len())
        .map(|f| {
            let delta = new_ink(&masks[f - 1], &masks[f])?;
            Ok(DeltaStats {
                frame: f,
                new_pixels: delta.count(),
                new_components: count_components(&delta, params.connectivity, params.min_area),
            })
        })
        .collect()
}

/// Plain count arithmetic behind the multi-stroke percentage.
pub fn ratio_from_counts(multi: usize, considered: usize) -> f64 {
    multi as f64 / considered as f64
}

/// Fraction of frame transitions whose new ink forms two or more disjoint
/// components. Returns `(ratio, multi_frames, considered_frames, stats)`.
pub fn multi_stroke_ratio(seq: &FrameSequence, params: &EvalParams) -> Result<(f64, usize, usize, Vec<DeltaStats>), Error> {
    if seq.frames.len() < 2 {
        return Err(Error::TooFewFrames { got: seq.frames.len(), need: 2 });
    }
    let masks = masks_of(seq, params);
    let stats = per_frame_stats(&masks, params)?;
    let considered = stats.len();
    let multi = stats.iter().filter(|s| s.new_components >= 2).count();
    Ok((ratio_from_counts(multi, considered), multi, considered, stats))
}

/// Cumulative fraction of all new-ink pixels added by each frame. The
/// first frame's ink counts as new; the curve is nondecreasing and its
/// final value is exactly 1.
pub fn accumulation_curve(seq: &FrameSequence, params: &EvalParams) -> Result<Vec<f64>, Error> {
    let masks = masks_of(seq, params);
    accumulation_from_masks(&masks)
}

fn accumulation_from_masks(masks: &[InkMask]) -> Result<Vec<f64>, Error> {
    if masks.is_empty() {
        return Err(Error::BlankVideo);
    }
    let empty = InkMask {
        width: masks[0].width,
        height: masks[0].height,
        bits: vec![false; masks[0].bits.len()],
    };
    let mut cumulative = Vec::with_capacity(masks.len());
    let mut total = 0usize;
    let mut prev = &empty;
    for mask in masks {
        total += new_ink(prev, mask)?.count();
        cumulative.push(total);
        prev = mask;
    }
    if total == 0 {
        return Err(Error::BlankVideo);
    }
    Ok(cumulative.iter().map(|&c| c as f64 / total as f64).collect())
}

/// Recovers the drawing order from pixels: a region activates on the
/// first frame where the ink accumulated inside it reaches
/// `activation_fraction` of its pixel area. Returns region ids sorted by
/// activation frame (ties by id) plus the ids that never activated.
pub fn extract_order(seq: &FrameSequence, regions: &[Rect], params: &EvalParams) -> Result<(Vec<usize>, Vec<usize>), Error> {
    if regions.is_empty() {
        return Err(Error::NoRegions);
    }
    let (w, h) = (seq.plan.width, seq.plan.height);
    for (i, r) in regions.iter().enumerate() {
        if r.is_empty() || r.min_x < 0.0 || r.min_y < 0.0 || r.max_x > w as f64 || r.max_y > h as f64 {
            return Err(Error::DimensionMismatch(format!(
                "region {i} ({:.1},{:.1})-({:.1},{:.1}) outside the {w}x{h} frame",
                r.min_x, r.min_y, r.max_x, r.max_y
            )));
        }
    }
    // Pixel index lists per region, so areas are measured in pixels.
    let pixels_in: Vec<Vec<usize>> = regions
        .iter()
        .map(|r| {
            let mut v = Vec::new();
            let y0 = r.min_y.floor().max(0.0) as u32;
            let y1 = (r.max_y.ceil() as u32).min(h);
            let x0 = r.min_x.floor().max(0.0) as u32;
            let x1 = (r.max_x.ceil() as u32).min(w);
            for y in y0..y1 {
                for x in x0..x1 {
                    if r.contains_point(crate::geom::Point::new(x as f64 + 0.5, y as f64 + 0.5)) {
                        v.push((y * w + x) as usize);
                    }
                }
            }
            v
        })
        .collect();

    let masks = masks_of(seq, params);
    let mut inked_inside = vec![0usize; regions.len()];
    let mut activation: Vec<Option<usize>> = vec![None; regions.len()];
    let empty = InkMask { width: w, height: h, bits: vec![false; (w * h) as usize] };
    let mut prev = &empty;
    for (f, mask) in masks.iter().enumerate() {
        let delta = new_ink(prev, mask)?;
        for (i, pixels) in pixels_in.iter().enumerate() {
            if activation[i].is_some() {
                continue;
            }
            inked_inside[i] += pixels.iter().filter(|&&p| delta.bits[p]).count();
            let need = (params.activation_fraction * pixels.len() as f64).ceil().max(1.0) as usize;
            if inked_inside[i] >= need {
                activation[i] = Some(f);
            }
        }
        prev = mask;
    }
    let mut active: Vec<(usize, usize)> = activation
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.map(|f| (i, f)))
        .collect();
    active.sort_by_key(|&(i, f)| (f, i));
    let inactive: Vec<usize> = activation.iter().enumerate().filter(|(_, a)| a.is_none()).map(|(i, _)| i).collect();
    Ok((active.into_iter().map(|(i, _)| i).collect(), inactive))
}

/// Kendall tau-a between two orderings of the same element set:
/// `1 − 4·inversions / (n·(n−1))`.
pub fn kendall_tau(a: &[usize], b: &[usize]) -> Result<f64, Error> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { a: a.len(), b: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooShort);
    }
    let max = *b.iter().max().unwrap();
    let mut pos = vec![usize::MAX; max + 1];
    for (i, &e) in b.iter().enumerate() {
        if pos.get(e).copied() != Some(usize::MAX) {
            return Err(Error::NotAPermutation);
        }
        pos[e] = i;
    }
    let ranks: Vec<usize> = a
        .iter()
        .map(|&e| pos.get(e).copied().filter(|&p| p != usize::MAX).ok_or(Error::NotAPermutation))
        .collect::<Result<_, _>>()?;
    {
        let mut seen = vec![false; n];
        for &r in &ranks {
            if seen[r] {
                return Err(Error::NotAPermutation);
            }
            seen[r] = true;
        }
    }
    let mut inversions = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if ranks[i] > ranks[j] {
                inversions += 1;
            }
        }
    }
    Ok(1.0 - 4.0 * inversions as f64 / (n * (n - 1)) as f64)
}

// ---------------------------------------------------------------------------
// Gram-matrix style distance

fn gram(map: &FeatureMap, mask: Option<&[bool]>, layer: usize) -> Result<Vec<f64>, Error> {
    let spatial = (map.height * map.width) as usize;
    let c = map.channels as usize;
    let selected: Vec<usize> = match mask {
        Some(m) => {
            if m.len() != spatial {
                return Err(Error::DimensionMismatch(format!(
                    "layer {layer}: mask has {} entries for {spatial} positions",
                    m.len()
                )));
            }
            (0..spatial).filter(|&i| m[i]).collect()
        }
        None => (0..spatial).collect(),
    };
    if selected.is_empty() {
        return Err(Error::EmptyMask(layer));
    }
    let m = selected.len() as f64;
    let mut g = vec![0.0f64; c * c];
    for ci in 0..c {
        for cj in ci..c {
            let mut acc = 0.0f64;
            for &p in &selected {
                acc += map.values[ci * spatial + p] as f64 * map.values[cj * spatial + p] as f64;
            }
            let v = acc / m;
            g[ci * c + cj] = v;
            g[cj * c + ci] = v;
        }
    }
    Ok(g)
}

/// Mean (over layers) Frobenius distance between normalized Gram matrices
/// of two feature-map stacks, optionally restricted to per-layer spatial
/// masks.
pub fn gram_distance(a: &[FeatureMap], b: &[FeatureMap], masks: Option<&[Vec<bool>]>) -> Result<f64, Error> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { a: a.len(), b: b.len() });
    }
    if a.is_empty() {
        return Err(Error::TooFewFrames { got: 0, need: 1 });
    }
    if let Some(m) = masks {
        if m.len() != a.len() {
            return Err(Error::LengthMismatch { a: a.len(), b: m.len() });
        }
    }
    let mut total = 0.0;
    for (layer, (fa, fb)) in a.iter().zip(b).enumerate() {
        if (fa.channels, fa.height, fa.width) != (fb.channels, fb.height, fb.width) {
            return Err(Error::DimensionMismatch(format!(
                "layer {layer}: {}x{}x{} vs {}x{}x{}",
                fa.channels, fa.height, fa.width, fb.channels, fb.height, fb.width
            )));
        }
        let mask = masks.map(|m| m[layer].as_slice());
        let ga = gram(fa, mask, layer)?;
        let gb = gram(fb, mask, layer)?;
        let fro: f64 = ga.iter().zip(&gb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        total += fro;
    }
    Ok(total / a.len() as f64)
}

/// Reads a feature map from the flat binary layout: three little-endian
/// u32s (C, h, w), then C·h·w little-endian f32 values, channel-major.
pub fn read_feature_map(path: &Path) -> Result<FeatureMap, Error> {
    let io = |source| Error::IoFailure { path: path.to_path_buf(), source };
    let mut file = std::fs::File::open(path).map_err(io)?;
    let mut header = [0u8; 12];
    file.read_exact(&mut header)
        .map_err(|_| Error::BadFeatureFile { path: path.to_path_buf(), detail: "truncated header".into() })?;
    let c = u32::from_le_bytes(header[0..4].try_into().unwrap());
    let h = u32::from_le_bytes(header[4..8].try_into().unwrap());
    let w = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let count = (c as u64) * (h as u64) * (w as u64);
    if count == 0 || count > 256 * 1024 * 1024 {
        return Err(Error::BadFeatureFile { path: path.to_path_buf(), detail: format!("implausible shape {c}x{h}x{w}") });
    }
    let mut raw = Vec::new();
    file.read_to_end(&mut raw).map_err(io)?;
    if raw.len() != (count * 4) as usize {
        return Err(Error::BadFeatureFile {
            path: path.to_path_buf(),
            detail: format!("{} data bytes for shape {c}x{h}x{w} (need {})", raw.len(), count * 4),
        });
    }
    let values: Vec<f32> = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
    FeatureMap::new(c, h, w, values).map_err(|e| Error::BadFeatureFile { path: path.to_path_buf(), detail: e.to_string() })
}

/// Writes the binary layout accepted by [`read_feature_map`].
pub fn write_feature_map(map: &FeatureMap, path: &Path) -> Result<(), Error> {
    let mut buf = Vec::with_capacity(12 + map.values.len() * 4);
    buf.extend_from_slice(&map.channels.to_le_bytes());
    buf.extend_from_slice(&map.height.to_le_bytes());
    buf.extend_from_slice(&map.width.to_le_bytes());
    for v in &map.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, buf).map_err(|source| Error::IoFailure { path: path.to_path_buf(), source })
}

// ---------------------------------------------------------------------------
// Composite evaluation

/// Runs every pixel metric on one video. `regions` (frame-space boxes)
/// enable order extraction; `expected_order` additionally yields a tau.
pub fn evaluate(
    seq: &FrameSequence,
    regions: Option<&[Rect]>,
    expected_order: Option<&[usize]>,
    params: &EvalParams,
) -> Result<EvalReport, Error> {
    let (ratio, multi, considered, per_frame) = multi_stroke_ratio(seq, params)?;
    let accumulation = accumulation_curve(seq, params)?;
    let (order, inactive_regions) = match regions {
        Some(r) => {
            let (o, inactive) = extract_order(seq, r, params)?;
            (Some(o), inactive)
        }
        None => (None, Vec::new()),
    };
    let tau = match (&order, expected_order) {
        (Some(o), Some(e)) => Some(kendall_tau(o, e)?),
        _ => None,
    };
    Ok(EvalReport {
        multi_stroke_ratio: ratio,
        multi_stroke_frames: multi,
        considered_frames: considered,
        accumulation,
        order,
        inactive_regions,
        tau,
        per_frame,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{render_sequence, Brush, Style};
    use crate::shapes::{enumerate_orders, gen_composition, OrderPermutation, Relation};
    use crate::timeline::{compile_timeline, RenderPlan};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mask_from(rows: &[&str]) -> InkMask {
        let height = rows.len() as u32;
        let width = rows[0].len() as u32;
        let bits = rows.iter().flat_map(|r| r.chars().map(|c| c == '#')).collect();
        InkMask { width, height, bits }
    }

    #[test]
    fn ink_threshold_arithmetic() {
        let mut frame = Frame::filled(2, 1, Rgb8::WHITE);
        frame.pixels[0..3].copy_from_slice(&[230, 230, 230]);
        let mask = ink_mask(&frame, Rgb8::WHITE, 40);
        assert_eq!(mask.count(), 0, "diff 25 stays background");

        frame.pixels[3..6].copy_from_slice(&[0, 0, 0]);
        let mask = ink_mask(&frame, Rgb8::WHITE, 254);
        assert!(!mask.get(0, 0));
        assert!(mask.get(1, 0));

        let blank = ink_mask(&Frame::filled(4, 4, Rgb8::WHITE), Rgb8::WHITE, 40);
        assert_eq!(blank.count(), 0);
    }

    #[test]
    fn new_ink_is_set_difference() {
        let prev = mask_from(&["#.", ".#"]);
        let cur = mask_from(&["##", ".."]);
        let delta = new_ink(&prev, &cur).unwrap();
        assert_eq!(delta, mask_from(&[".#", ".."]));
        assert_eq!(new_ink(&cur, &cur).unwrap().count(), 0);
        let empty = mask_from(&["..", ".."]);
        assert_eq!(new_ink(&empty, &cur).unwrap(), cur);
        let tall = mask_from(&["#", "#", "#"]);
        assert!(matches!(new_ink(&prev, &tall), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn component_counting_examples() {
        let empty = mask_from(&["....", "...."]);
        assert_eq!(count_components(&empty, Connectivity::Eight, 1), 0);

        let blobs = mask_from(&[
            "###......###",
            "###......###",
            "###......###",
        ]);
        assert_eq!(count_components(&blobs, Connectivity::Eight, 1), 2);
        assert_eq!(count_components(&blobs, Connectivity::Eight, 9), 2);
        assert_eq!(count_components(&blobs, Connectivity::Eight, 10), 0);

        let diagonal = mask_from(&["#.", ".#"]);
        assert_eq!(count_components(&diagonal, Connectivity::Eight, 1), 1);
        assert_eq!(count_components(&diagonal, Connectivity::Four, 1), 2);
    }

    /// Independent flood fill used as the component-count oracle.
    fn flood_count(mask: &InkMask, connectivity: Connectivity, min_area: usize) -> usize {
        let (w, h) = (mask.width as i64, mask.height as i64);
        let mut seen = vec![false; (w * h) as usize];
        let mut count = 0;
        for start in 0..(w * h) as usize {
            if !mask.bits[start] || seen[start] {
                continue;
            }
            let mut area = 0;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(p) = stack.pop() {
                area += 1;
                let (x, y) = (p as i64 % w, p as i64 / w);
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if (dx, dy) == (0, 0) {
                            continue;
                        }
                        if connectivity == Connectivity::Four && dx != 0 && dy != 0 {
                            continue;
                        }
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= w || ny >= h {
                            continue;
                        }
                        let q = (ny * w + nx) as usize;
                        if mask.bits[q] && !seen[q] {
                            seen[q] = true;
                            stack.push(q);
                        }
                    }
                }
            }
            if area >= min_area {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn component_counts_match_flood_fill_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        for case in 0..500 {
            let w = rng.gen_range(1..=32u32);
            let h = rng.gen_range(1..=32u32);
            let density = rng.gen_range(0.05..0.9);
            let bits: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(density)).collect();
            let mask = InkMask { width: w, height: h, bits };
            let min_area = rng.gen_range(1..=6);
            for conn in [Connectivity::Four, Connectivity::Eight] {
                assert_eq!(
                    count_components(&mask, conn, min_area),
                    flood_count(&mask, conn, min_area),
                    "case {case} {w}x{h} {conn:?} min_area {min_area}"
                );
            }
        }
    }

    #[test]
    fn published_ratio_counts() {
        assert!((ratio_from_counts(2975, 15196) * 100.0 - 19.58).abs() <= 0.01);
        assert!((ratio_from_counts(2351, 6361) * 100.0 - 36.96).abs() <= 0.01);
    }

    fn render_comp(relation: Relation, n: usize, seed: u64, style: &Style) -> (FrameSequence, crate::shapes::Composition) {
        let comp = gen_composition(relation, n, seed, (480.0, 832.0)).unwrap();
        let plan = RenderPlan::new(17, 480, 832, 1, 2, 16.0).unwrap();
        let seq = render_sequence(&comp.document, &OrderPermutation::identity(n), &plan, style).unwrap();
        (seq, comp)
    }

    #[test]
    fn rendered_videos_never_multi_stroke() {
        let (seq, _) = render_comp(Relation::Grouping, 4, 21, &Style::Pen);
        let (ratio, multi, considered, stats) = multi_stroke_ratio(&seq, &EvalParams::default()).unwrap();
        assert_eq!(considered, 16);
        assert_eq!((ratio, multi), (0.0, 0));
        // Cross-check every transition against the flood-fill oracle.
        let params = EvalParams::default();
        let masks: Vec<InkMask> = seq.frames.iter().map(|f| ink_mask(f, params.canvas_color, params.threshold)).collect();
        for (f, stat) in stats.iter().enumerate() {
            let delta = new_ink(&masks[f], &masks[f + 1]).unwrap();
            assert_eq!(stat.new_components, flood_count(&delta, params.connectivity, params.min_area));
            assert!(stat.new_components <= 1);
        }

        let brush = Style::Brush { brush: Brush::builtin("hard-round").unwrap(), color: Rgb8::new(138, 92, 62) };
        let (seq, _) = render_comp(Relation::Overlap, 3, 4, &brush);
        let (ratio, ..) = multi_stroke_ratio(&seq, &EvalParams::default()).unwrap();
        assert_eq!(ratio, 0.0);
    }

    #[test]
    fn accumulation_curve_examples() {
        // Synthetic masks with new-ink counts (10, 10, 20, 0).
        let mut masks = Vec::new();
        let mut bits = vec![false; 64 * 64];
        let mut lit = 0usize;
        for add in [10usize, 10, 20, 0] {
            for _ in 0..add {
                bits[lit] = true;
                lit += 1;
            }
            masks.push(InkMask { width: 64, height: 64, bits: bits.clone() });
        }
        let curve = accumulation_from_masks(&masks).unwrap();
        assert_eq!(curve, vec![0.25, 0.5, 1.0, 1.0]);

        let (seq, _) = render_comp(Relation::Containment, 3, 2, &Style::Pen);
        let curve = accumulation_curve(&seq, &EvalParams::default()).unwrap();
        assert_eq!(curve.len(), seq.frames.len());
        assert_eq!(*curve.last().unwrap(), 1.0);
        for w in curve.windows(2) {
            assert!(w[1] >= w[0]);
        }

        let blank = FrameSequence {
            frames: vec![Frame::filled(32, 32, Rgb8::WHITE); 3],
            plan: RenderPlan::new(3, 32, 32, 1, 1, 16.0).unwrap(),
        };
        assert!(matches!(accumulation_curve(&blank, &EvalParams::default()), Err(Error::BlankVideo)));
    }

    #[test]
    fn order_extraction_recovers_permutations() {
        let comp = gen_composition(Relation::Grouping, 3, 9, (480.0, 832.0)).unwrap();
        let plan = RenderPlan::new(17, 480, 832, 1, 2, 16.0).unwrap();
        for order in enumerate_orders(&comp, 6, 5).unwrap() {
            let seq = render_sequence(&comp.document, &order, &plan, &Style::Pen).unwrap();
            let (extracted, inactive) = extract_order(&seq, &comp.regions, &EvalParams::default()).unwrap();
            assert!(inactive.is_empty());
            assert_eq!(&extracted, order.as_slice(), "order {order:?}");
            assert_eq!(kendall_tau(&extracted, order.as_slice()).unwrap(), 1.0);
        }
    }

    #[test]
    fn order_extraction_edge_cases() {
        let comp = gen_composition(Relation::Grouping, 3, 9, (480.0, 832.0)).unwrap();
        let plan = RenderPlan::new(17, 480, 832, 1, 2, 16.0).unwrap();
        let seq = render_sequence(&comp.document, &OrderPermutation::identity(3), &plan, &Style::Pen).unwrap();

        // Single region.
        let (one, inactive) = extract_order(&seq, &comp.regions[..1], &EvalParams::default()).unwrap();
        assert_eq!(one, vec![0]);
        assert!(inactive.is_empty());

        // A region with no ink is reported inactive.
        let mut regions = comp.regions.clone();
        let blank_corner = crate::geom::Rect::new(460.0, 810.0, 478.0, 830.0);
        regions.push(blank_corner);
        let (order, inactive) = extract_order(&seq, &regions, &EvalParams::default()).unwrap();
        assert_eq!(order.len(), 3);
        assert_eq!(inactive, vec![3]);

        assert!(matches!(extract_order(&seq, &[], &EvalParams::default()), Err(Error::NoRegions)));
        let outside = crate::geom::Rect::new(-5.0, 0.0, 20.0, 20.0);
        assert!(matches!(
            extract_order(&seq, &[outside], &EvalParams::default()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn kendall_tau_values() {
        assert_eq!(kendall_tau(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(kendall_tau(&[2, 1, 0], &[0, 1, 2]).unwrap(), -1.0);
        let tau = kendall_tau(&[0, 2, 1, 3], &[0, 1, 2, 3]).unwrap();
        assert!((tau - (1.0 - 4.0 / 12.0)).abs() < 1e-9);
        assert!(matches!(kendall_tau(&[0, 1], &[0, 1, 2]), Err(Error::LengthMismatch { a: 2, b: 3 })));
        assert!(matches!(kendall_tau(&[0, 0, 1], &[0, 1, 2]), Err(Error::NotAPermutation)));
        assert!(matches!(kendall_tau(&[5, 1, 2], &[0, 1, 2]), Err(Error::NotAPermutation)));
        assert!(matches!(kendall_tau(&[0], &[0]), Err(Error::TooShort)));
    }

    #[test]
    fn gram_distance_properties() {
        let constant = |v: f32| FeatureMap::new(1, 4, 4, vec![v; 16]).unwrap();
        let d = gram_distance(&[constant(3.0)], &[constant(2.0)], None).unwrap();
        assert!((d - (9.0 - 4.0)).abs() < 1e-9);

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let rand_map = |rng: &mut ChaCha8Rng| {
            let values: Vec<f32> = (0..2 * 3 * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            FeatureMap::new(2, 3, 3, values).unwrap()
        };
        for _ in 0..20 {
            let a = vec![rand_map(&mut rng), rand_map(&mut rng)];
            let b = vec![rand_map(&mut rng), rand_map(&mut rng)];
            let ab = gram_distance(&a, &b, None).unwrap();
            let ba = gram_distance(&b, &a, None).unwrap();
            assert!((ab - ba).abs() < 1e-12);
            assert!(ab >= 0.0);
            assert_eq!(gram_distance(&a, &a, None).unwrap(), 0.0);

            // Scaling features by s scales the Gram by s^2.
            let scaled: Vec<FeatureMap> = a
                .iter()
                .map(|m| FeatureMap::new(m.channels, m.height, m.width, m.values.iter().map(|v| v * 2.0).collect()).unwrap())
                .collect();
            let zero = vec![constant_like(&a[0], 0.0), constant_like(&a[1], 0.0)];
            let base = gram_distance(&a, &zero, None).unwrap();
            let grown = gram_distance(&scaled, &zero, None).unwrap();
            assert!((grown - 4.0 * base).abs() < 1e-6 * base.max(1.0));
        }
    }

    fn constant_like(m: &FeatureMap, v: f32) -> FeatureMap {
        FeatureMap::new(m.channels, m.height, m.width, vec![v; m.values.len()]).unwrap()
    }

    #[test]
    fn gram_masks_and_errors() {
        let a = FeatureMap::new(1, 2, 2, vec![1.0, 5.0, 5.0, 5.0]).unwrap();
        let b = FeatureMap::new(1, 2, 2, vec![2.0, 9.0, 9.0, 9.0]).unwrap();
        // Mask selecting only the first position reduces to the constant case.
        let mask = vec![vec![true, false, false, false]];
        let d = gram_distance(&[a.clone()], &[b.clone()], Some(&mask)).unwrap();
        assert!((d - 3.0).abs() < 1e-9);

        let none = vec![vec![false; 4]];
        assert!(matches!(gram_distance(&[a.clone()], &[b.clone()], Some(&none)), Err(Error::EmptyMask(0))));

        let c = FeatureMap::new(2, 2, 2, vec![0.0; 8]).unwrap();
        assert!(matches!(gram_distance(&[a.clone()], &[c], None), Err(Error::DimensionMismatch(_))));
        assert!(matches!(gram_distance(&[a], &[], None), Err(Error::LengthMismatch { a: 1, b: 0 })));
        assert!(FeatureMap::new(1, 2, 2, vec![f32::NAN; 4]).is_err());
    }

    #[test]
    fn feature_map_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("layer0.bin");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f32> = (0..3 * 5 * 4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let map = FeatureMap::new(3, 5, 4, values).unwrap();
        write_feature_map(&map, &path).unwrap();
        assert_eq!(read_feature_map(&path).unwrap(), map);

        std::fs::write(dir.path().join("short.bin"), [1, 0, 0, 0, 1, 0, 0, 0]).unwrap();
        assert!(matches!(
            read_feature_map(&dir.path().join("short.bin")),
            Err(Error::BadFeatureFile { .. })
        ));
    }

    #[test]
    fn composite_report() {
        let comp = gen_composition(Relation::Adjacency, 3, 6, (480.0, 832.0)).unwrap();
        let plan = RenderPlan::new(17, 480, 832, 1, 2, 16.0).unwrap();
        let order = OrderPermutation::new(vec![1, 2, 0]).unwrap();
        let seq = render_sequence(&comp.document, &order, &plan, &Style::Pen).unwrap();
        let tl = compile_timeline(&comp.document, &order, &plan).unwrap();
        let report = evaluate(&seq, Some(&comp.regions), Some(order.as_slice()), &EvalParams::default()).unwrap();
        assert_eq!(report.multi_stroke_ratio, 0.0);
        assert_eq!(report.considered_frames, 16);
        assert_eq!(report.tau, Some(1.0));
        assert_eq!(report.order.as_deref(), Some(order.as_slice()));
        assert_eq!(*report.accumulation.last().unwrap(), 1.0);
        assert_eq!(report.per_frame.len(), 16);

        // Extracted order agrees with the timeline's intro frames.
        let mut by_intro: Vec<usize> = (0..3).collect();
        by_intro.sort_by_key(|&i| tl.entries[i].intro_frame);
        assert_eq!(report.order.as_deref(), Some(by_intro.as_slice()));

        let csv = report.accumulation_csv();
        assert!(csv.starts_with("frame_index,value\n0,"));
        assert_eq!(csv.lines().count(), 18);

        // Report serializes to JSON and back.
        let json = serde_json::to_string(&report).unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
