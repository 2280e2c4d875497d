// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Schedules strokes onto a fixed frame budget: each stroke gets a
//! contiguous window of drawing frames, windows never overlap, and at most
//! one stroke is mid-reveal on any frame. Within its window a stroke is
//! revealed progressively along its arc length.

use crate::shapes::OrderPermutation;
use crate::svgpath::{SketchDocument, DEFAULT_TOLERANCE};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid render plan: {0}")]
    InvalidPlan(String),
    #[error("{strokes} strokes cannot fit a drawable budget of {budget} frames")]
    InsufficientFrames { strokes: usize, budget: usize },
    #[error("order has {order} entries but the document has {strokes} strokes")]
    OrderMismatch { order: usize, strokes: usize },
    #[error("no stroke {0} in timeline")]
    UnknownStroke(usize),
    #[error(transparent)]
    Geometry(#[from] crate::svgpath::Error),
}

/// Frame-grid parameters for rendering: `frames` total frames of
/// `width`x`height` pixels, with `blank_lead` empty frames up front and
/// `hold_tail` frames holding the finished sketch at the end. `fps` is
/// carried as metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderPlan {
    pub frames: usize,
    pub width: u32,
    pub height: u32,
    pub blank_lead: usize,
    pub hold_tail: usize,
    pub fps: f64,
}

impl Default for RenderPlan {
    fn default() -> Self {
        RenderPlan { frames: 81, width: 480, height: 832, blank_lead: 1, hold_tail: 4, fps: 16.0 }
    }
}

impl RenderPlan {
    pub fn new(frames: usize, width: u32, height: u32, blank_lead: usize, hold_tail: usize, fps: f64) -> Result<Self, Error> {
        let plan = RenderPlan { frames, width, height, blank_lead, hold_tail, fps };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.width < 16 || self.height < 16 {
            return Err(Error::InvalidPlan(format!("canvas {}x{} below the 16 px minimum", self.width, self.height)));
        }
        if self.frames < self.blank_lead + self.hold_tail + 1 {
            return Err(Error::InvalidPlan(format!(
                "{} frames cannot hold blank_lead {} + hold_tail {} + 1 drawing frame",
                self.frames, self.blank_lead, self.hold_tail
            )));
        }
        Ok(())
    }

    /// Frames available for actual drawing.
    pub fn drawable_budget(&self) -> usize {
        self.frames - self.blank_lead - self.hold_tail
    }
}

/// One stroke's drawing window: it first shows ink at `intro_frame` and is
/// fully revealed at `complete_frame` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub stroke_id: usize,
    pub intro_frame: usize,
    pub complete_frame: usize,
}

/// Compiled schedule: `entries[i]` is the window of stroke `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub frames: usize,
    pub entries: Vec<TimelineEntry>,
    pub order: OrderPermutation,
}

/// Partitions `budget` drawing frames among strokes proportionally to arc
/// length: every stroke gets a 1-frame floor, the rest follows largest-
/// remainder rounding (leftover frames go to the largest remainders, ties
/// broken by longer stroke then lower id).
fn allocate_budget(lengths: &[f64], budget: usize) -> Vec<usize> {
    let s = lengths.len();
    debug_assert!(budget >= s);
    let extra = budget - s;
    let total: f64 = lengths.iter().sum();
    let quotas: Vec<f64> = if total > 0.0 {
        lengths.iter().map(|l| extra as f64 * l / total).collect()
    } else {
        vec![extra as f64 / s as f64; s]
    };
    let mut shares: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = shares.iter().sum();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra)
            .unwrap()
            .then(lengths[b].partial_cmp(&lengths[a]).unwrap())
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(extra - assigned) {
        shares[i] += 1;
    }
    shares.iter_mut().for_each(|v| *v += 1);
    shares
}

/// Compiles a document and a drawing order into per-stroke frame windows.
///
/// Strokes are laid back-to-back in permutation order: stroke `i+1` is
/// introduced on the frame after stroke `i` completes, so every frame sees
/// at most one new stroke and at most one stroke mid-reveal.
pub fn compile_timeline(doc: &SketchDocument, order: &OrderPermutation, plan: &RenderPlan) -> Result<Timeline, Error> {
    plan.validate()?;
    let s = doc.strokes.len();
    if order.len() != s {
        return Err(Error::OrderMismatch { order: order.len(), strokes: s });
    }
    let budget = plan.drawable_budget();
    if s > budget {
        return Err(Error::InsufficientFrames { strokes: s, budget });
    }
    let mut lengths = vec![0.0; s];
    for stroke in &doc.strokes {
        lengths[stroke.id] = stroke.flatten(DEFAULT_TOLERANCE)?.arc_length();
    }
    // Budgets follow permutation order so ties resolve by drawing position.
    let ordered_lengths: Vec<f64> = order.as_slice().iter().map(|&i| lengths[i]).collect();
    let shares = allocate_budget(&ordered_lengths, budget);

    let mut entries = vec![TimelineEntry { stroke_id: 0, intro_frame: 0, complete_frame: 0 }; s];
    let mut cursor = plan.blank_lead;
    for (pos, &stroke_id) in order.as_slice().iter().enumerate() {
        let intro = cursor;
        let complete = cursor + shares[pos] - 1;
        entries[stroke_id] = TimelineEntry { stroke_id, intro_frame: intro, complete_frame: complete };
        cursor = complete + 1;
    }
    debug_assert_eq!(cursor, plan.blank_lead + budget);
    Ok(Timeline { frames: plan.frames, entries, order: order.clone() })
}

impl Timeline {
    /// Fraction of the stroke revealed at `frame`: 0 before its window, 1
    /// from its completion frame on, a linear ramp inside the window.
    pub fn reveal_at(&self, stroke_id: usize, frame: usize) -> Result<f64, Error> {
        assert!(frame < self.frames, "frame {frame} out of 0..{}", self.frames);
        let entry = self.entries.get(stroke_id).ok_or(Error::UnknownStroke(stroke_id))?;
        debug_assert_eq!(entry.stroke_id, stroke_id);
        if frame < entry.intro_frame {
            return Ok(0.0);
        }
        if frame >= entry.complete_frame {
            return Ok(1.0);
        }
        let num = (frame - entry.intro_frame + 1) as f64;
        let den = (entry.complete_frame - entry.intro_frame + 1) as f64;
        Ok(num / den)
    }
}
