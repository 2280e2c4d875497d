// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Parses a small SVG document and flattens each stroke into a polyline,
//! printing per-stroke geometry statistics.

use sketchforge::svgpath::{parse_svg, DEFAULT_TOLERANCE};

const DOC: &str = r##"<svg xmlns="http://www.w3.org/2000/svg" width="200" height="120">
  <path d="M 10 60 C 60 10 140 110 190 60" stroke="#1f6feb" stroke-width="3"/>
  <path d="M 10 20 L 190 20" stroke="black"/>
  <path d="M 40 100 Q 100 70 160 100" stroke="#b71c2d" stroke-width="5"/>
</svg>"##;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (doc, warnings) = parse_svg(DOC, true)?;
    println!("document: {} strokes on a {}x{} canvas ({} warnings)", doc.strokes.len(), doc.canvas_w, doc.canvas_h, warnings);

    for stroke in &doc.strokes {
        let poly = stroke.flatten(DEFAULT_TOLERANCE)?;
        let bounds = poly.bounds();
        println!(
            "stroke {}: {} commands -> {} points, arc length {:.2}, width {:.1}, bounds [{:.1},{:.1}]x[{:.1},{:.1}]",
            stroke.id,
            stroke.commands.len(),
            poly.points().len(),
            poly.arc_length(),
            stroke.width,
            bounds.min_x,
            bounds.max_x,
            bounds.min_y,
            bounds.max_y,
        );
        let mid = poly.point_at(poly.arc_length() / 2.0)?;
        println!("  midpoint along the stroke: ({:.2}, {:.2})", mid.x, mid.y);
    }
    Ok(())
}
