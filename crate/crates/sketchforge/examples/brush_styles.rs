// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Draws every built-in brush across the default palette: one stroke per
//! brush, plus the conditioning exemplar that identifies a brush/color
//! pair to a downstream model.

use sketchforge::dataset::write_ppm;
use sketchforge::raster::{conditioning_frame, stamp_stroke, Brush, Frame, Palette};
use sketchforge::svgpath::Polyline;
use sketchforge::{Point, Rgb8};
use sketchforge::timeline::RenderPlan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let palette = Palette::default_eight();
    let dir = std::env::temp_dir().join("sketchforge-brush-example");
    std::fs::create_dir_all(&dir)?;

    // One horizontal stroke per brush, tinted with successive palette
    // colors, all on one sheet.
    let mut sheet = Frame::filled(480, 420, Rgb8::WHITE);
    for (row, id) in Brush::builtin_ids().iter().enumerate() {
        let brush = Brush::builtin(id)?;
        let (name, color) = &palette.colors[row % palette.colors.len()];
        let y = 40.0 + 64.0 * row as f64;
        let poly = Polyline::new(vec![Point::new(40.0, y), Point::new(440.0, y)]);
        stamp_stroke(&mut sheet, &brush, *color, &poly, 1.0);
        println!("{id:<22} diameter {:>4.1} spacing {:.2} color {name}", brush.diameter, brush.spacing_factor);
    }
    let sheet_path = dir.join("brush_sheet.ppm");
    write_ppm(&sheet, &sheet_path)?;
    println!("wrote {}", sheet_path.display());

    // The conditioning exemplar: an S-curve swatch in the top-left box.
    let plan = RenderPlan::default();
    let exemplar = conditioning_frame(&Brush::builtin("calligraphy-vertical")?, Rgb8::new(63, 81, 181), &plan);
    let exemplar_path = dir.join("conditioning.ppm");
    write_ppm(&exemplar, &exemplar_path)?;
    println!("wrote {}", exemplar_path.display());
    Ok(())
}
