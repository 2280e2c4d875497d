// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Builds the numbered drawing-order captions that pair with rendered
//! sketch videos: a subject line followed by one line per step, renumbered
//! to match whatever stroke permutation is being rendered.

use crate::shapes::{Composition, OrderPermutation, Relation};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum Error {
    #[error("permutation has {order} entries but the plan has {steps} steps")]
    LengthMismatch { order: usize, steps: usize },
    #[error("plan subject is empty")]
    EmptySubject,
    #[error("plan has no steps")]
    EmptyPlan,
    #[error("duplicate step name {0:?}")]
    DuplicateStepName(String),
}

/// The caption suffix asking the model to honor the brush exemplar drawn
/// in the frame corner.
pub const BRUSH_SUFFIX: &str = ", using the color and style of the brush shown in the top-left corner";

/// An ordered drawing plan: what is being drawn and the steps that draw
/// it. Step descriptions may be empty; names must be unique.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawPlan {
    pub subject: String,
    /// `(name, description)` per step, in base order.
    pub steps: Vec<(String, String)>,
}

impl DrawPlan {
    pub fn validate(&self) -> Result<(), Error> {
        if self.subject.trim().is_empty() {
            return Err(Error::EmptySubject);
        }
        if self.steps.is_empty() {
            return Err(Error::EmptyPlan);
        }
        for (i, (name, _)) in self.steps.iter().enumerate() {
            if self.steps[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::DuplicateStepName(name.clone()));
            }
        }
        Ok(())
    }
}

fn header(plan: &DrawPlan, suffix: &str) -> String {
    format!("Step-by-step sketch process of {}, following this drawing order{}:\n", plan.subject, suffix)
}

fn prompt_with_suffix(plan: &DrawPlan, perm: &OrderPermutation, suffix: &str) -> Result<String, Error> {
    plan.validate()?;
    if perm.len() != plan.steps.len() {
        return Err(Error::LengthMismatch { order: perm.len(), steps: plan.steps.len() });
    }
    let mut out = header(plan, suffix);
    for (k, &idx) in perm.as_slice().iter().enumerate() {
        let (name, description) = &plan.steps[idx];
        if description.is_empty() {
            out.push_str(&format!("{}. {}\n", k + 1, name));
        } else {
            out.push_str(&format!("{}. {} \u{2013} {}\n", k + 1, name, description));
        }
    }
    Ok(out)
}

/// Renders the caption for a plan drawn in the given stroke order: a
/// header line, then `1..n` numbered step lines in permuted order, each
/// "{k}. {name} – {description}" (the separator is dropped for
/// description-less steps), with a trailing newline.
pub fn build_prompt(plan: &DrawPlan, perm: &OrderPermutation) -> Result<String, Error> {
    prompt_with_suffix(plan, perm, "")
}

/// [`build_prompt`] with the brush-exemplar clause appended to the header.
pub fn brush_prompt(plan: &DrawPlan, perm: &OrderPermutation) -> Result<String, Error> {
    prompt_with_suffix(plan, perm, BRUSH_SUFFIX)
}

fn count_word(n: usize) -> String {
    match n {
        1 => "one".into(),
        2 => "two".into(),
        3 => "three".into(),
        4 => "four".into(),
        5 => "five".into(),
        6 => "six".into(),
        7 => "seven".into(),
        8 => "eight".into(),
        9 => "nine".into(),
        10 => "ten".into(),
        other => other.to_string(),
    }
}

fn relation_adjective(relation: Relation) -> &'static str {
    match relation {
        Relation::Containment => "nested",
        Relation::Adjacency => "side-by-side",
        Relation::Overlap => "overlapping",
        Relation::Grouping => "clustered",
    }
}

/// Derives a drawing plan from a generated composition: the subject names
/// the relation and shape count, the steps reuse the composition's
/// semantic names and descriptions in base (stroke-id) order.
pub fn shape_steps(comp: &Composition) -> DrawPlan {
    let n = comp.steps.len();
    let subject = if n == 1 {
        "a single shape".to_string()
    } else {
        format!("{} {} shapes", count_word(n), relation_adjective(comp.relation))
    };
    DrawPlan { subject, steps: comp.steps.clone() }
}
