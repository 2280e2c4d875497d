// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Runs the full dataset pipeline in miniature: generate compositions,
//! render one sample per drawing order, write a manifest, then reload
//! and validate it.

use sketchforge::dataset::{assemble, write_frames, FrameFormat, SampleRecord, SampleSource};
use sketchforge::prompts::{build_prompt, shape_steps};
use sketchforge::raster::{render_sequence, Style};
use sketchforge::shapes::{enumerate_orders, gen_composition, Relation};
use sketchforge::timeline::RenderPlan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::temp_dir().join("sketchforge-dataset-example");
    let _ = std::fs::remove_dir_all(&root);
    std::fs::create_dir_all(&root)?;
    let plan = RenderPlan::new(17, 240, 416, 1, 4, 16.0)?;

    let mut records = Vec::new();
    for seed in 0..2 {
        let comp = gen_composition(Relation::Grouping, 3, seed, (plan.width as f64, plan.height as f64))?;
        for (k, order) in enumerate_orders(&comp, 2, seed)?.into_iter().enumerate() {
            let id = format!("grouping-{seed}-o{k}");
            let seq = render_sequence(&comp.document, &order, &plan, &Style::Pen)?;
            write_frames(&seq, &root.join(&id).join("frames"), FrameFormat::Ppm)?;
            records.push(SampleRecord {
                id: id.clone(),
                prompt: build_prompt(&shape_steps(&comp), &order)?,
                frames_dir: [&id, "frames"].iter().collect(),
                frame_format: FrameFormat::Ppm,
                k: plan.frames,
                w: plan.width,
                h: plan.height,
                order,
                brush_id: None,
                color_name: None,
                conditioning_frame: None,
                seed,
                source: SampleSource::Shapes,
            });
        }
    }

    let manifest_path = root.join("manifest.jsonl");
    let manifest = assemble(records, plan, &manifest_path)?;
    println!("assembled {} samples -> {}", manifest.samples.len(), manifest_path.display());

    let reloaded = sketchforge::dataset::load_manifest(&manifest_path)?;
    println!("reloaded and validated: {} samples, created {}", reloaded.samples.len(), reloaded.created);
    let first = &reloaded.samples[0];
    println!("first sample: id={} K={} {}x{}", first.id, first.k, first.w, first.h);
    Ok(())
}
