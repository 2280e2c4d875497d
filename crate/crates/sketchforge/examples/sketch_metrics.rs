// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Renders a sketch video and measures it: one-stroke-per-frame ratio,
//! ink accumulation, drawing-order recovery from region activation, and
//! rank agreement with the intended order.

use sketchforge::evalkit::{evaluate, EvalParams};
use sketchforge::raster::{render_sequence, Style};
use sketchforge::shapes::{enumerate_orders, gen_composition, Relation};
use sketchforge::timeline::RenderPlan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plan = RenderPlan::new(33, 480, 832, 1, 4, 16.0)?;
    let comp = gen_composition(Relation::Adjacency, 4, 2, (plan.width as f64, plan.height as f64))?;
    let order = enumerate_orders(&comp, 2, 17)?.pop().expect("two orders");
    println!("intended drawing order: {:?}", order.as_slice());

    let seq = render_sequence(&comp.document, &order, &plan, &Style::Pen)?;
    let report = evaluate(&seq, Some(&comp.regions), Some(order.as_slice()), &EvalParams::default())?;

    println!(
        "multi-stroke transitions: {}/{} (ratio {:.4})",
        report.multi_stroke_frames, report.considered_frames, report.multi_stroke_ratio
    );
    println!("recovered order: {:?} (inactive regions: {:?})", report.order.as_ref().unwrap(), report.inactive_regions);
    println!("kendall tau vs intended: {:.4}", report.tau.unwrap());

    let curve = &report.accumulation;
    println!("ink accumulation: starts {:.3}, mid {:.3}, ends {:.3}", curve[0], curve[curve.len() / 2], curve[curve.len() - 1]);
    Ok(())
}
