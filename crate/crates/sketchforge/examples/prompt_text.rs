// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Builds step-ordered prompts: the header names the subject, and the
//! numbered lines follow the drawing order, so permuting the order
//! permutes the lines.

use sketchforge::prompts::{brush_prompt, build_prompt, shape_steps};
use sketchforge::shapes::{gen_composition, OrderPermutation, Relation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let comp = gen_composition(Relation::Overlap, 3, 5, (480.0, 832.0))?;
    let plan = shape_steps(&comp);

    let identity = OrderPermutation::identity(3);
    println!("-- document order --");
    print!("{}", build_prompt(&plan, &identity)?);

    let reversed = OrderPermutation::new(vec![2, 1, 0])?;
    println!("-- reversed order --");
    print!("{}", build_prompt(&plan, &reversed)?);

    println!("-- brush-conditioned variant --");
    print!("{}", brush_prompt(&plan, &identity)?);
    Ok(())
}
