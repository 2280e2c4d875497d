// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Command-line frontend: reproducible batch generation, rendering,
//! augmentation, and evaluation. Every subcommand materializes its fully
//! resolved configuration into `run_config.json` under the output root,
//! and reruns with the same configuration reproduce artifacts
//! byte-for-byte in PPM mode (set `SOURCE_DATE_EPOCH` to also pin
//! manifest timestamps).
//!
//! Exit codes: 0 success, 1 failed verification (flow-demo), 2 domain
//! error, 64 usage error.

use crate::dataset::{self, FrameFormat, SampleRecord, SampleSource};
use crate::evalkit::{self, Connectivity, EvalParams};
use crate::flowmatch::{euler_sample, interpolate, velocity_target, CondToken, TensorBuf};
use crate::geom::{derive_seed, Rgb8};
use crate::prompts::{brush_prompt, build_prompt, shape_steps};
use crate::raster::{render_sequence, Brush, Frame, FrameSequence, Palette, Style};
use crate::shapes::{enumerate_orders, gen_composition, Composition, OrderPermutation, Relation};
use crate::svgpath::{parse_svg, SketchDocument};
use crate::timeline::{compile_timeline, RenderPlan};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Exit codes used by [`run`].
pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(String),
    VerifyFailed,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
            CliError::VerifyFailed => f.write_str("verification failed"),
        }
    }
}

macro_rules! domain_from {
    ($($ty:ty),*) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Domain(e.to_string())
            }
        })*
    };
}

domain_from!(
    crate::shapes::Error,
    crate::svgpath::Error,
    crate::timeline::Error,
    crate::raster::Error,
    crate::prompts::Error,
    crate::dataset::Error,
    crate::evalkit::Error
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Argument types

/// Inclusive seed range: `7` or `0..4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedRange(pub Vec<u64>);

impl std::str::FromStr for SeedRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if let Some((a, b)) = s.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range start {a:?}"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range end {b:?}"))?;
            if b < a {
                return Err(format!("seed range {s:?} runs backwards"));
            }
            Ok(SeedRange((a..=b).collect()))
        } else {
            let v: u64 = s.trim().parse().map_err(|_| format!("bad seed {s:?}"))?;
            Ok(SeedRange(vec![v]))
        }
    }
}

/// Comma-separated stroke order, e.g. `2,0,1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderArg(pub Vec<usize>);

impl std::str::FromStr for OrderArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad order entry {p:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(OrderArg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum StyleArg {
    Pen,
    Brush,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ConnectivityArg {
    Four,
    Eight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum FormatArg {
    Ppm,
    Png,
}

impl From<FormatArg> for FrameFormat {
    fn from(f: FormatArg) -> FrameFormat {
        match f {
            FormatArg::Ppm => FrameFormat::Ppm,
            FormatArg::Png => FrameFormat::Png,
        }
    }
}

/// Render-plan overrides shared by the generating subcommands.
#[derive(Debug, Clone, Copy, Args, Serialize)]
struct PlanArgs {
    /// Total frame count.
    #[arg(long, default_value_t = 81)]
    frames: usize,
    /// Frame width in pixels.
    #[arg(long, default_value_t = 480)]
    width: u32,
    /// Frame height in pixels.
    #[arg(long, default_value_t = 832)]
    height: u32,
    /// Blank frames before drawing starts.
    #[arg(long, default_value_t = 1)]
    blank_lead: usize,
    /// Frames holding the finished sketch at the end.
    #[arg(long, default_value_t = 4)]
    hold_tail: usize,
    /// Frame rate recorded in metadata.
    #[arg(long, default_value_t = 16.0)]
    fps: f64,
}

impl PlanArgs {
    fn to_plan(self) -> Result<RenderPlan, CliError> {
        Ok(RenderPlan::new(self.frames, self.width, self.height, self.blank_lead, self.hold_tail, self.fps)?)
    }
}

/// Ink-detection parameters shared by evaluation paths.
#[derive(Debug, Clone, Copy, Args, Serialize)]
struct EvalArgs {
    /// Max per-channel distance from white still counted as background.
    #[arg(long, default_value_t = 40)]
    threshold: u8,
    /// Pixel connectivity for component counting.
    #[arg(long, value_enum, default_value_t = ConnectivityArg::Eight)]
    #[serde(serialize_with = "serialize_connectivity")]
    connectivity: ConnectivityArg,
    /// Smallest component size (pixels) that counts.
    #[arg(long, default_value_t = 12)]
    min_area: usize,
    /// Fraction of a region that must ink up before it activates.
    #[arg(long, default_value_t = 0.05)]
    activation_fraction: f64,
}

fn serialize_connectivity<S: serde::Serializer>(c: &ConnectivityArg, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match c {
        ConnectivityArg::Four => "four",
        ConnectivityArg::Eight => "eight",
    })
}

impl EvalArgs {
    fn to_params(self) -> EvalParams {
        EvalParams {
            canvas_color: Rgb8::WHITE,
            threshold: self.threshold,
            connectivity: match self.connectivity {
                ConnectivityArg::Four => Connectivity::Four,
                ConnectivityArg::Eight => Connectivity::Eight,
            },
            min_area: self.min_area,
            activation_fraction: self.activation_fraction,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sketchforge", version, about = "Sequential sketch dataset compiler and evaluator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate shape compositions and render one sample per drawing order.
    GenShapes {
        /// Spatial relation to build: containment, adjacency, overlap, grouping.
        #[arg(long)]
        relation: Relation,
        /// Number of shapes per composition.
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Drawing orders rendered per composition.
        #[arg(long, default_value_t = 3)]
        count: usize,
        /// Seed or inclusive seed range (`7` or `0..4`).
        #[arg(long, default_value = "0")]
        seeds: SeedRange,
        /// Output root directory.
        #[arg(long)]
        out: PathBuf,
        /// Frame file format.
        #[arg(long, value_enum, default_value_t = FormatArg::Ppm)]
        format: FormatArg,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Render one document (SVG or composition JSON) into a frame sequence.
    Render {
        /// SVG file to render.
        #[arg(long, conflicts_with = "document")]
        svg: Option<PathBuf>,
        /// Composition descriptor (document.json) to render.
        #[arg(long)]
        document: Option<PathBuf>,
        /// Stroke order as comma-separated ids (default: document order).
        #[arg(long)]
        order: Option<OrderArg>,
        /// Reject any SVG construct outside the supported subset.
        #[arg(long)]
        strict: bool,
        /// Stroke style.
        #[arg(long, value_enum, default_value_t = StyleArg::Pen)]
        style: StyleArg,
        /// Brush id (built-in) or stamp image path, for --style brush.
        #[arg(long)]
        brush: Option<String>,
        /// Color name from the default palette or #rrggbb, for --style brush.
        #[arg(long)]
        color: Option<String>,
        /// Output root directory.
        #[arg(long)]
        out: PathBuf,
        /// Frame file format.
        #[arg(long, value_enum, default_value_t = FormatArg::Ppm)]
        format: FormatArg,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Re-render every manifest sample across a brush/color grid.
    Augment {
        /// Input manifest (written by gen-shapes).
        #[arg(long)]
        manifest: PathBuf,
        /// Brush ids or stamp image paths (comma separated; default: all built-ins).
        #[arg(long, value_delimiter = ',')]
        brushes: Option<Vec<String>>,
        /// Restrict the palette to these color names (default: all eight).
        #[arg(long, value_delimiter = ',')]
        colors: Option<Vec<String>>,
        /// Output root directory.
        #[arg(long)]
        out: PathBuf,
        /// Frame file format.
        #[arg(long, value_enum, default_value_t = FormatArg::Ppm)]
        format: FormatArg,
    },
    /// Compute sketch metrics over a rendered frame directory.
    Eval {
        /// Directory of frame_%05d.{ppm,png} files.
        #[arg(long)]
        frames: PathBuf,
        /// Region boxes: JSON list of rects, or a composition document.json.
        #[arg(long)]
        regions: Option<PathBuf>,
        /// Expected drawing order for tau, e.g. `2,0,1`.
        #[arg(long)]
        target_order: Option<OrderArg>,
        /// Output root directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Verify the flow-matching kernel recovers endpoints exactly.
    FlowDemo {
        /// Tensor shape, e.g. `2x3x4` (or `1` for a scalar).
        #[arg(long, default_value = "4x8")]
        shape: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Step counts to test (comma separated).
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 7, 50])]
        steps: Vec<usize>,
        /// Optional output root for run metadata and the table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

// ---------------------------------------------------------------------------
// Entry points

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Testable entry point over explicit arguments.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    init_workers();
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            EXIT_DOMAIN
        }
        Err(CliError::VerifyFailed) => EXIT_VERIFY_FAILED,
    }
}

/// Applies `SKETCHFORGE_WORKERS` to the global worker pool (first call
/// wins; later calls are no-ops).
fn init_workers() {
    if let Ok(n) = std::env::var("SKETCHFORGE_WORKERS") {
        if let Ok(n) = n.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenShapes { relation, n, count, seeds, out, format, plan } => {
            cmd_gen_shapes(relation, n, count, &seeds, &out, format.into(), plan)
        }
        Command::Render { svg, document, order, strict, style, brush, color, out, format, plan } => {
            cmd_render(svg, document, order, strict, style, brush, color, &out, format.into(), plan)
        }
        Command::Augment { manifest, brushes, colors, out, format } => {
            cmd_augment(&manifest, brushes, colors, &out, format.into())
        }
        Command::Eval { frames, regions, target_order, out, eval } => {
            cmd_eval(&frames, regions.as_deref(), target_order, &out, eval)
        }
        Command::FlowDemo { shape, seed, steps, out } => cmd_flow_demo(&shape, seed, &steps, out.as_deref()),
    }
}

// ---------------------------------------------------------------------------
// Shared helpers

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Domain(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_run_config(out: &Path, config: serde_json::Value) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    let full = serde_json::json!({
        "tool": "sketchforge",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
    });
    write_json(&full, &out.join("run_config.json"))
}

fn resolve_style(style: StyleArg, brush: Option<&str>, color: Option<&str>) -> Result<Style, CliError> {
    match style {
        StyleArg::Pen => {
            if brush.is_some() || color.is_some() {
                return Err(CliError::Usage("--brush/--color require --style brush".into()));
            }
            Ok(Style::Pen)
        }
        StyleArg::Brush => {
            let id = brush.unwrap_or("soft-round");
            let brush = load_brush(id)?;
            let color = match color {
                None => Rgb8::BLACK,
                Some(name) => parse_color(name)?,
            };
            Ok(Style::Brush { brush, color })
        }
    }
}

fn load_brush(id: &str) -> Result<Brush, CliError> {
    if Brush::builtin_ids().iter().any(|b| *b == id) {
        return Ok(Brush::builtin(id)?);
    }
    let path = Path::new(id);
    if path.exists() {
        return Ok(Brush::from_image_file(path, 12.0)?);
    }
    Err(CliError::Domain(format!(
        "brush {id:?} is neither a built-in ({}) nor an existing stamp file",
        Brush::builtin_ids().join(", ")
    )))
}

fn parse_color(name: &str) -> Result<Rgb8, CliError> {
    if let Some(c) = Palette::default_eight().lookup(name) {
        return Ok(c);
    }
    Rgb8::from_hex(name).ok_or_else(|| CliError::Domain(format!("unknown color {name:?} (palette name or #rrggbb)")))
}

fn load_composition(path: &Path) -> Result<Composition, CliError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

/// Renders a sample and writes its files under `dir`; returns the record
/// fields that depend on the rendered artifacts.
struct SampleFiles {
    frames_dir: PathBuf,
    conditioning: Option<PathBuf>,
}

fn write_sample(
    dir: &Path,
    doc: &SketchDocument,
    order: &OrderPermutation,
    plan: &RenderPlan,
    style: &Style,
    format: FrameFormat,
) -> Result<SampleFiles, CliError> {
    std::fs::create_dir_all(dir)?;
    let seq = render_sequence(doc, order, plan, style)?;
    dataset::write_frames(&seq, &dir.join("frames"), format)?;
    let tl = compile_timeline(doc, order, plan)?;
    write_json(&tl, &dir.join("timeline.json"))?;
    let conditioning = match style {
        Style::Pen => None,
        Style::Brush { brush, color } => {
            let frame = crate::raster::conditioning_frame(brush, *color, plan);
            let path = dir.join(format!("conditioning.{}", format.extension()));
            match format {
                FrameFormat::Ppm => dataset::write_ppm(&frame, &path)?,
                FrameFormat::Png => dataset::write_png(&frame, &path)?,
            }
            Some(path)
        }
    };
    Ok(SampleFiles { frames_dir: dir.join("frames"), conditioning })
}

fn rel_to(root: &Path, path: &Path) -> PathBuf {
    path.strip_prefix(root).map(|p| p.to_path_buf()).unwrap_or_else(|_| path.to_path_buf())
}

// ---------------------------------------------------------------------------
// gen-shapes

fn cmd_gen_shapes(
    relation: Relation,
    n: usize,
    count: usize,
    seeds: &SeedRange,
    out: &Path,
    format: FrameFormat,
    plan_args: PlanArgs,
) -> Result<(), CliError> {
    if count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let plan = plan_args.to_plan()?;
    write_run_config(
        out,
        serde_json::json!({
            "subcommand": "gen-shapes",
            "relation": relation.word(),
            "n": n,
            "count": count,
            "seeds": seeds.0,
            "format": format.extension(),
            "plan": plan,
            "out": out,
        }),
    )?;

    // Generate compositions up front (cheap), then render samples in
    // parallel: one sample per (composition, order).
    let mut jobs = Vec::new();
    for &seed in &seeds.0 {
        let comp = gen_composition(relation, n, seed, (plan.width as f64, plan.height as f64))?;
        let orders = enumerate_orders(&comp, count, derive_seed(seed, 0x0ED4))?;
        for (k, order) in orders.into_iter().enumerate() {
            jobs.push((seed, k, order, comp.clone()));
        }
    }

    let records: Result<Vec<SampleRecord>, CliError> = jobs
        .par_iter()
        .map(|(seed, k, order, comp)| {
            let id = format!("{}-{}-o{}", relation.word(), seed, k);
            let dir = out.join(&id);
            let files = write_sample(&dir, &comp.document, order, &plan, &Style::Pen, format)?;
            write_json(comp, &dir.join("document.json"))?;
            let prompt = build_prompt(&shape_steps(comp), order)?;
            std::fs::write(dir.join("prompt.txt"), &prompt)?;
            Ok(SampleRecord {
                id,
                prompt,
                frames_dir: rel_to(out, &files.frames_dir),
                frame_format: format,
                k: plan.frames,
                w: plan.width,
                h: plan.height,
                order: order.clone(),
                brush_id: None,
                color_name: None,
                conditioning_frame: None,
                seed: *seed,
                source: SampleSource::Shapes,
            })
        })
        .collect();
    let records = records?;

    let manifest = dataset::assemble(records, plan, &out.join("manifest.jsonl"))?;
    println!(
        "gen-shapes: {} compositions x {} orders = {} samples -> {}",
        seeds.0.len(),
        count,
        manifest.samples.len(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// render

#[allow(clippy::too_many_arguments)]
fn cmd_render(
    svg: Option<PathBuf>,
    document: Option<PathBuf>,
    order: Option<OrderArg>,
    strict: bool,
    style: StyleArg,
    brush: Option<String>,
    color: Option<String>,
    out: &Path,
    format: FrameFormat,
    plan_args: PlanArgs,
) -> Result<(), CliError> {
    let plan = plan_args.to_plan()?;
    let style = resolve_style(style, brush.as_deref(), color.as_deref())?;

    let (doc, source) = match (&svg, &document) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            let (doc, warnings) = parse_svg(&text, strict)?;
            if warnings > 0 {
                eprintln!("note: {warnings} lenient-parse fixups applied to {}", path.display());
            }
            (doc, "svg")
        }
        (None, Some(path)) => {
            let comp = load_composition(path)?;
            (comp.document, "document")
        }
        _ => return Err(CliError::Usage("pass exactly one of --svg or --document".into())),
    };

    let order = match order {
        Some(OrderArg(ids)) => OrderPermutation::new(ids)?,
        None => OrderPermutation::identity(doc.strokes.len()),
    };

    write_run_config(
        out,
        serde_json::json!({
            "subcommand": "render",
            "input": svg.as_deref().or(document.as_deref()),
            "input_kind": source,
            "order": order,
            "strict": strict,
            "style": style_json(&style),
            "format": format.extension(),
            "plan": plan,
            "out": out,
        }),
    )?;

    write_sample(out, &doc, &order, &plan, &style, format)?;
    println!(
        "render: {} strokes -> {} frames at {}x{} in {}",
        doc.strokes.len(),
        plan.frames,
        plan.width,
        plan.height,
        out.display()
    );
    Ok(())
}

fn style_json(style: &Style) -> serde_json::Value {
    match style {
        Style::Pen => serde_json::json!({"kind": "pen"}),
        Style::Brush { brush, color } => serde_json::json!({
            "kind": "brush",
            "brush": brush.id,
            "color": color,
        }),
    }
}

// ---------------------------------------------------------------------------
// augment

fn cmd_augment(
    manifest_path: &Path,
    brushes: Option<Vec<String>>,
    colors: Option<Vec<String>>,
    out: &Path,
    format: FrameFormat,
) -> Result<(), CliError> {
    let brush_ids: Vec<String> = match brushes {
        None => Brush::builtin_ids().iter().map(|s| s.to_string()).collect(),
        Some(list) => {
            let list: Vec<String> = list.into_iter().filter(|s| !s.trim().is_empty()).collect();
            if list.is_empty() {
                return Err(CliError::Usage("--brushes needs at least one brush".into()));
            }
            list
        }
    };
    let brushes: Vec<Brush> = brush_ids.iter().map(|id| load_brush(id)).collect::<Result<_, _>>()?;

    let full = Palette::default_eight();
    let palette = match colors {
        None => full,
        Some(names) => {
            let names: Vec<String> = names.into_iter().filter(|s| !s.trim().is_empty()).collect();
            if names.is_empty() {
                return Err(CliError::Usage("--colors needs at least one color".into()));
            }
            let colors = names
                .iter()
                .map(|n| full.lookup(n).map(|c| (n.clone(), c)).ok_or_else(|| CliError::Domain(format!("unknown palette color {n:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            Palette { colors }
        }
    };

    let manifest = dataset::load_manifest(manifest_path)?;
    if manifest.samples.is_empty() {
        return Err(CliError::Domain("manifest has no samples".into()));
    }
    let root = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    // Rebuild the renderable bases from each sample's document.json.
    let mut bases = Vec::new();
    let mut comps = Vec::new();
    for record in &manifest.samples {
        let sample_dir = root.join(record.frames_dir.parent().unwrap_or_else(|| Path::new(".")));
        let doc_path = sample_dir.join("document.json");
        if !doc_path.is_file() {
            return Err(dataset::Error::MissingAsset(doc_path).into());
        }
        let comp = load_composition(&doc_path)?;
        let plan = RenderPlan::new(
            record.k,
            record.w,
            record.h,
            manifest.render_defaults.blank_lead,
            manifest.render_defaults.hold_tail,
            manifest.render_defaults.fps,
        )?;
        let mut doc = comp.document.clone();
        doc.name = record.id.clone();
        bases.push((doc, record.order.clone(), plan));
        comps.push(comp);
    }

    let specs = dataset::augment_brushes(&bases, &brushes, &palette);
    println!(
        "augment: {} bases x {} brushes x {} colors = {} samples",
        bases.len(),
        brushes.len(),
        palette.colors.len(),
        specs.len()
    );

    write_run_config(
        out,
        serde_json::json!({
            "subcommand": "augment",
            "manifest": manifest_path,
            "brushes": brush_ids,
            "colors": palette.colors.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
            "format": format.extension(),
            "out": out,
        }),
    )?;

    let records: Result<Vec<SampleRecord>, CliError> = specs
        .par_iter()
        .map(|spec| {
            let (doc, order, plan) = &bases[spec.base];
            let comp = &comps[spec.base];
            let source_record = &manifest.samples[spec.base];
            let style = Style::Brush { brush: spec.brush.clone(), color: spec.color };
            let dir = out.join(&spec.id);
            let files = write_sample(&dir, doc, order, plan, &style, format)?;
            write_json(comp, &dir.join("document.json"))?;
            let prompt = brush_prompt(&shape_steps(comp), order)?;
            std::fs::write(dir.join("prompt.txt"), &prompt)?;
            Ok(SampleRecord {
                id: spec.id.clone(),
                prompt,
                frames_dir: rel_to(out, &files.frames_dir),
                frame_format: format,
                k: plan.frames,
                w: plan.width,
                h: plan.height,
                order: order.clone(),
                brush_id: Some(spec.brush.id.clone()),
                color_name: Some(spec.color_name.clone()),
                conditioning_frame: files.conditioning.as_deref().map(|p| rel_to(out, p)),
                seed: source_record.seed,
                source: source_record.source,
            })
        })
        .collect();
    let records = records?;

    let manifest_out = dataset::assemble(records, manifest.render_defaults, &out.join("manifest.jsonl"))?;
    println!("augment: wrote {} samples -> {}", manifest_out.samples.len(), out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

fn load_frames_dir(dir: &Path) -> Result<FrameSequence, CliError> {
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("frame_") && (n.ends_with(".ppm") || n.ends_with(".png")))
        .collect();
    if names.is_empty() {
        return Err(CliError::Domain(format!("{}: no frame_*.ppm or frame_*.png files", dir.display())));
    }
    names.sort();
    let frames: Vec<Frame> = names
        .iter()
        .map(|n| dataset::read_frame(&dir.join(n)))
        .collect::<Result<_, _>>()?;
    let (w, h) = (frames[0].width, frames[0].height);
    for (n, f) in names.iter().zip(&frames) {
        if (f.width, f.height) != (w, h) {
            return Err(CliError::Domain(format!("{n}: {}x{} differs from first frame {w}x{h}", f.width, f.height)));
        }
    }
    let plan = RenderPlan::new(frames.len(), w, h, 0, 0, 16.0)?;
    Ok(FrameSequence { frames, plan })
}

fn load_regions(path: &Path) -> Result<Vec<crate::geom::Rect>, CliError> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(comp) = serde_json::from_str::<Composition>(&text) {
        return Ok(comp.regions);
    }
    serde_json::from_str(&text).map_err(|e| CliError::Domain(format!("{}: neither a composition nor a rect list: {e}", path.display())))
}

/// A minimal standalone SVG line chart of the accumulation curve.
fn curve_svg(curve: &[f64]) -> String {
    let (w, h) = (640.0, 400.0);
    let margin = 48.0;
    let (pw, ph) = (w - 2.0 * margin, h - 2.0 * margin);
    let x = |i: usize| {
        if curve.len() <= 1 {
            margin
        } else {
            margin + pw * i as f64 / (curve.len() - 1) as f64
        }
    };
    let y = |v: f64| margin + ph * (1.0 - v);
    let points: Vec<String> = curve.iter().enumerate().map(|(i, &v)| format!("{:.2},{:.2}", x(i), y(v))).collect();
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" width=\"{w}\" height=\"{h}\">\n",
            "  <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "  <line x1=\"{m}\" y1=\"{yb}\" x2=\"{xr}\" y2=\"{yb}\" stroke=\"black\"/>\n",
            "  <line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{yb}\" stroke=\"black\"/>\n",
            "  <text x=\"{m}\" y=\"{ylab}\" font-size=\"12\" text-anchor=\"middle\">0</text>\n",
            "  <text x=\"{xr}\" y=\"{ylab}\" font-size=\"12\" text-anchor=\"middle\">{last}</text>\n",
            "  <text x=\"{xlab}\" y=\"{yb}\" font-size=\"12\" text-anchor=\"end\">0</text>\n",
            "  <text x=\"{xlab}\" y=\"{yt}\" font-size=\"12\" text-anchor=\"end\">1</text>\n",
            "  <text x=\"{mid}\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">cumulative new-ink fraction per frame</text>\n",
            "  <polyline points=\"{pts}\" fill=\"none\" stroke=\"#1f6feb\" stroke-width=\"2\"/>\n",
            "</svg>\n"
        ),
        w = w,
        h = h,
        m = margin,
        yb = h - margin,
        xr = w - margin,
        yt = margin + 4.0,
        ylab = h - margin + 16.0,
        xlab = margin - 6.0,
        mid = w / 2.0,
        last = curve.len().saturating_sub(1),
        pts = points.join(" ")
    )
}

fn cmd_eval(
    frames: &Path,
    regions: Option<&Path>,
    target_order: Option<OrderArg>,
    out: &Path,
    eval_args: EvalArgs,
) -> Result<(), CliError> {
    let params = eval_args.to_params();
    let seq = load_frames_dir(frames)?;
    let region_list = regions.map(load_regions).transpose()?;
    let target: Option<Vec<usize>> = target_order.map(|o| o.0);

    write_run_config(
        out,
        serde_json::json!({
            "subcommand": "eval",
            "frames": frames,
            "regions": regions,
            "target_order": target,
            "params": params,
            "out": out,
        }),
    )?;

    let report = evalkit::evaluate(&seq, region_list.as_deref(), target.as_deref(), &params)?;
    write_json(&report, &out.join("report.json"))?;
    std::fs::write(out.join("curve.csv"), report.accumulation_csv())?;
    std::fs::write(out.join("curve.svg"), curve_svg(&report.accumulation))?;

    println!(
        "eval: {} frames, multi-stroke ratio {:.4} ({}/{}), final accumulation {:.4}",
        seq.frames.len(),
        report.multi_stroke_ratio,
        report.multi_stroke_frames,
        report.considered_frames,
        report.accumulation.last().copied().unwrap_or(0.0)
    );
    if let Some(order) = &report.order {
        println!("eval: extracted order {order:?} (inactive: {:?})", report.inactive_regions);
    }
    if let Some(tau) = report.tau {
        println!("eval: kendall tau {tau:.4}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// flow-demo

fn parse_shape(text: &str) -> Result<Vec<usize>, CliError> {
    text.split('x')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .ok()
                .filter(|&d| d >= 1)
                .ok_or_else(|| CliError::Usage(format!("bad shape component {p:?}")))
        })
        .collect()
}

fn cmd_flow_demo(shape: &str, seed: u64, steps: &[usize], out: Option<&Path>) -> Result<(), CliError> {
    let shape = parse_shape(shape)?;
    if steps.is_empty() {
        return Err(CliError::Usage("--steps needs at least one entry".into()));
    }
    let n: usize = shape.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        TensorBuf::new(shape.clone(), (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).expect("finite draws")
    };
    let x0 = draw(&mut rng);
    let eps = draw(&mut rng);
    let target = velocity_target(&x0, &eps).map_err(|e| CliError::Domain(e.to_string()))?;
    let x1 = interpolate(&x0, &eps, 1.0).map_err(|e| CliError::Domain(e.to_string()))?;

    const TOLERANCE: f64 = 1e-12;
    let field = |x: &TensorBuf, _t: f64, _c: CondToken| {
        TensorBuf::new(x.shape().to_vec(), target.values().to_vec()).expect("target is finite")
    };

    let mut table = String::new();
    table.push_str(&format!("flow-demo: shape {shape:?}, seed {seed}, tolerance {TOLERANCE:e}\n"));
    table.push_str("steps  max_abs_error  status\n");
    let mut all_ok = true;
    for &k in steps {
        if k == 0 {
            return Err(CliError::Usage("--steps entries must be at least 1".into()));
        }
        let recovered = euler_sample(&field, &x1, k, CondToken(seed)).map_err(|e| CliError::Domain(e.to_string()))?;
        let err = recovered.max_abs_diff(&x0).map_err(|e| CliError::Domain(e.to_string()))?;
        let ok = err < TOLERANCE;
        all_ok &= ok;
        table.push_str(&format!("{k:<6} {err:<14.3e} {}\n", if ok { "ok" } else { "FAIL" }));
    }
    print!("{table}");

    if let Some(out) = out {
        write_run_config(
            out,
            serde_json::json!({
                "subcommand": "flow-demo",
                "shape": shape,
                "seed": seed,
                "steps": steps,
                "tolerance": TOLERANCE,
                "out": out,
            }),
        )?;
        std::fs::write(out.join("flow_demo.txt"), &table)?;
    }

    if all_ok {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges_parse_inclusively() {
        assert_eq!("7".parse::<SeedRange>().unwrap().0, vec![7]);
        assert_eq!("0..4".parse::<SeedRange>().unwrap().0, vec![0, 1, 2, 3, 4]);
        assert_eq!("3..3".parse::<SeedRange>().unwrap().0, vec![3]);
        assert!("4..1".parse::<SeedRange>().is_err());
        assert!("x..y".parse::<SeedRange>().is_err());
    }

    #[test]
    fn order_args_parse() {
        assert_eq!("2,0,1".parse::<OrderArg>().unwrap().0, vec![2, 0, 1]);
        assert_eq!("0".parse::<OrderArg>().unwrap().0, vec![0]);
        assert!("2,x".parse::<OrderArg>().is_err());
    }

    #[test]
    fn shapes_parse() {
        assert_eq!(parse_shape("2x3x4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_shape("1").unwrap(), vec![1]);
        assert!(parse_shape("2x0").is_err());
        assert!(parse_shape("abc").is_err());
    }

    #[test]
    fn chart_is_wellformed() {
        let svg = curve_svg(&[0.0, 0.25, 0.5, 1.0]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline"));
        assert!(svg.trim_end().ends_with("</svg>"));
        // Curve endpoints map to plot corners.
        assert!(svg.contains("48.00,352.00"));
        assert!(svg.contains("592.00,48.00"));
    }

    #[test]
    fn color_resolution() {
        assert_eq!(parse_color("pink").unwrap(), Rgb8::new(233, 30, 99));
        assert_eq!(parse_color("#102030").unwrap(), Rgb8::new(16, 32, 48));
        assert!(parse_color("no-such-color").is_err());
    }

    #[test]
    fn usage_and_version_exit_codes() {
        assert_eq!(run_from(["sketchforge", "--version"]), EXIT_OK);
        assert_eq!(run_from(["sketchforge", "no-such-subcommand"]), EXIT_USAGE);
        assert_eq!(run_from(["sketchforge", "gen-shapes", "--relation", "bogus", "--out", "/tmp/x"]), EXIT_USAGE);
    }
}
