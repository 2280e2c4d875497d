// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Renders a generated composition into a stroke-by-stroke frame
//! sequence and writes the frames as PPM files.

use sketchforge::dataset::{write_frames, FrameFormat};
use sketchforge::raster::{render_sequence, Style};
use sketchforge::shapes::{gen_composition, OrderPermutation, Relation};
use sketchforge::timeline::RenderPlan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plan = RenderPlan::new(25, 240, 416, 1, 4, 16.0)?;
    let comp = gen_composition(Relation::Containment, 3, 3, (plan.width as f64, plan.height as f64))?;
    let order = OrderPermutation::identity(comp.document.strokes.len());

    let seq = render_sequence(&comp.document, &order, &plan, &Style::Pen)?;
    println!("rendered {} frames at {}x{}", seq.frames.len(), plan.width, plan.height);

    // Count inked pixels per frame to show the sketch growing.
    for (i, frame) in seq.frames.iter().enumerate().step_by(6) {
        let dark = frame.pixels.chunks_exact(3).filter(|px| px.iter().any(|&c| c < 215)).count();
        println!("frame {i:>2}: {dark:>6} inked pixels");
    }

    let dir = std::env::temp_dir().join("sketchforge-render-example");
    let paths = write_frames(&seq, &dir, FrameFormat::Ppm)?;
    println!("wrote {} files under {}", paths.len(), dir.display());
    Ok(())
}
