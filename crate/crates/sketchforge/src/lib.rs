// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Sketchforge compiles ordered vector sketches into stroke-by-stroke video
//! frame sequences and evaluates how sequential such videos really are.
//!
//! The pipeline starts from either a parsed SVG drawing or a procedurally
//! generated composition of geometric primitives, schedules every stroke
//! onto a fixed frame budget (one new stroke per frame window, progressive
//! reveal inside the window), rasterizes antialiased pen or brush-stamped
//! frames, writes prompts and dataset manifests, and measures the results
//! (stroke-per-frame ratio, ink accumulation, order recovery, style
//! distance). A small rectified-flow math kernel with a closed-form oracle
//! rounds out the toolkit for sanity-checking training-side code.
//!
//! Modules build on each other bottom-up:
//!
//! - [`geom`]: points, boxes, colors.
//! - [`svgpath`]: SVG parsing and polyline flattening.
//! - [`shapes`]: seeded primitive compositions with spatial relations.
//! - [`timeline`]: stroke scheduling over a frame budget.
//! - [`raster`]: antialiased pen and brush-stamp rendering.
//! - [`prompts`]: numbered drawing-order captions.
//! - [`dataset`]: frame/manifest I/O and brush-color augmentation.
//! - [`evalkit`]: sequentiality and style metrics.
//! - [`flowmatch`]: rectified-flow interpolation/loss/sampler kernel.
//! - [`cli`]: the `sketchforge` command-line front end.

pub mod cli;
pub mod dataset;
pub mod evalkit;
pub mod flowmatch;
pub mod geom;
pub mod prompts;
pub mod raster;
pub mod shapes;
pub mod svgpath;
pub mod timeline;

pub use geom::{Point, Rect, Rgb8};
pub use svgpath::{parse_svg, Polyline, SketchDocument, Stroke};
