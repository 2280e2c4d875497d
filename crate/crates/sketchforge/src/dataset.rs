// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Dataset assembly: bit-exact frame I/O, the brush/color augmentation
//! grid, and a line-delimited JSON manifest tying frames, prompts, and
//! conditioning images together.

use crate::geom::Rgb8;
use crate::raster::{Brush, Frame, FrameSequence, Palette};
use crate::shapes::OrderPermutation;
use crate::svgpath::SketchDocument;
use crate::timeline::RenderPlan;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing asset: {0}")]
    MissingAsset(PathBuf),
    #[error("manifest schema violation: {0}")]
    SchemaViolation(String),
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::IoFailure { path: path.to_path_buf(), source }
}

/// On-disk frame encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameFormat {
    /// Binary P6 — the bit-exact baseline format.
    Ppm,
    /// 8-bit RGB PNG, no interlacing.
    Png,
}

impl FrameFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FrameFormat::Ppm => "ppm",
            FrameFormat::Png => "png",
        }
    }
}

impl std::str::FromStr for FrameFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "ppm" => Ok(FrameFormat::Ppm),
            "png" => Ok(FrameFormat::Png),
            other => Err(Error::SchemaViolation(format!("unknown frame format {other:?}"))),
        }
    }
}

/// One dataset sample: a frame directory plus everything needed to
/// interpret it. Paths are stored relative to the manifest location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub prompt: String,
    pub frames_dir: PathBuf,
    pub frame_format: FrameFormat,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "W")]
    pub w: u32,
    #[serde(rename = "H")]
    pub h: u32,
    pub order: OrderPermutation,
    pub brush_id: Option<String>,
    pub color_name: Option<String>,
    pub conditioning_frame: Option<PathBuf>,
    pub seed: u64,
    pub source: SampleSource,
}

/// Where a sample's geometry came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSource {
    Shapes,
    Svg,
}

/// The dataset index: a header line, then one [`SampleRecord`] per line.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub version: u32,
    pub created: String,
    pub samples: Vec<SampleRecord>,
    pub render_defaults: RenderPlan,
}

#[derive(Serialize, Deserialize)]
struct ManifestHeader {
    version: u32,
    created: String,
    render_defaults: RenderPlan,
}

pub const MANIFEST_VERSION: u32 = 1;

/// ISO-8601 creation stamp; honors `SOURCE_DATE_EPOCH` for reproducible
/// builds.
fn created_stamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok())
        .and_then(|secs| time::OffsetDateTime::from_unix_timestamp(secs).ok())
        .unwrap_or_else(time::OffsetDateTime::now_utc);
    now.format(&time::format_description::well_known::Rfc3339)
        .expect("RFC 3339 formatting of a valid timestamp")
}

// ---------------------------------------------------------------------------
// Frame I/O

fn frame_file_name(index: usize, format: FrameFormat) -> String {
    format!("frame_{index:05}.{}", format.extension())
}

/// Writes one frame as binary PPM (P6): header `P6\n{W} {H}\n255\n`, then
/// raw RGB rows. Byte-exact across platforms.
pub fn write_ppm(frame: &Frame, path: &Path) -> Result<(), Error> {
    let mut buf = Vec::with_capacity(frame.pixels.len() + 32);
    buf.extend_from_slice(format!("P6\n{} {}\n255\n", frame.width, frame.height).as_bytes());
    buf.extend_from_slice(&frame.pixels);
    std::fs::write(path, buf).map_err(io_err(path))
}

/// Reads a binary PPM written by [`write_ppm`] (tolerating generic
/// whitespace between header tokens).
pub fn read_ppm(path: &Path) -> Result<Frame, Error> {
    let data = std::fs::read(path).map_err(io_err(path))?;
    let mut pos = 0usize;
    let mut token = |data: &[u8]| -> Result<String, Error> {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::SchemaViolation(format!("{}: truncated PPM header", path.display())));
        }
        Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
    };
    if token(&data)? != "P6" {
        return Err(Error::SchemaViolation(format!("{}: not a P6 file", path.display())));
    }
    let w: u32 = token(&data)?.parse().map_err(|_| Error::SchemaViolation(format!("{}: bad width", path.display())))?;
    let h: u32 = token(&data)?.parse().map_err(|_| Error::SchemaViolation(format!("{}: bad height", path.display())))?;
    let maxval = token(&data)?;
    if maxval != "255" {
        return Err(Error::SchemaViolation(format!("{}: unsupported maxval {maxval}", path.display())));
    }
    pos += 1; // single whitespace byte after maxval
    let need = (w * h * 3) as usize;
    if data.len() < pos + need {
        return Err(Error::SchemaViolation(format!("{}: pixel data truncated", path.display())));
    }
    Ok(Frame { width: w, height: h, pixels: data[pos..pos + need].to_vec() })
}

/// Writes one frame as a PNG file.
pub fn write_png(frame: &Frame, path: &Path) -> Result<(), Error> {
    let img = image::RgbImage::from_raw(frame.width, frame.height, frame.pixels.clone())
        .expect("pixel buffer matches dimensions");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::IoFailure { path: path.to_path_buf(), source: std::io::Error::other(e) })
}

fn read_png(path: &Path) -> Result<Frame, Error> {
    let img = image::ImageReader::open(path)
        .map_err(io_err(path))?
        .decode()
        .map_err(|e| Error::SchemaViolation(format!("{}: {e}", path.display())))?
        .to_rgb8();
    let (width, height) = img.dimensions();
    Ok(Frame { width, height, pixels: img.into_raw() })
}

/// Reads a frame file in either supported format, chosen by extension.
pub fn read_frame(path: &Path) -> Result<Frame, Error> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") => read_ppm(path),
        Some("png") => read_png(path),
        other => Err(Error::SchemaViolation(format!("{}: unsupported frame extension {other:?}", path.display()))),
    }
}

/// Writes every frame of a sequence into `dir` as `frame_%05d.{ext}`,
/// returning the paths in frame order.
pub fn write_frames(seq: &FrameSequence, dir: &Path, format: FrameFormat) -> Result<Vec<PathBuf>, Error> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut paths = Vec::with_capacity(seq.frames.len());
    for (i, frame) in seq.frames.iter().enumerate() {
        let path = dir.join(frame_file_name(i, format));
        match format {
            FrameFormat::Ppm => write_ppm(frame, &path)?,
            FrameFormat::Png => write_png(frame, &path)?,
        }
        paths.push(path);
    }
    Ok(paths)
}

// ---------------------------------------------------------------------------
// Augmentation

/// One cell of the brush/color augmentation grid: which base sample to
/// re-render, with which brush and color.
#[derive(Debug, Clone)]
pub struct AugmentSpec {
    pub id: String,
    /// Index into the `bases` slice passed to [`augment_brushes`].
    pub base: usize,
    pub brush: Brush,
    pub color_name: String,
    pub color: Rgb8,
}

/// Expands base samples into the full `bases x brushes x colors` grid.
/// Ids follow `{base}-{brush}-{color}` using each document's name.
pub fn augment_brushes(
    bases: &[(SketchDocument, OrderPermutation, RenderPlan)],
    brushes: &[Brush],
    palette: &Palette,
) -> Vec<AugmentSpec> {
    assert!(!bases.is_empty() && !brushes.is_empty() && !palette.colors.is_empty(), "augmentation grid must be nonempty");
    let mut specs = Vec::with_capacity(bases.len() * brushes.len() * palette.colors.len());
    for (base, (doc, _, _)) in bases.iter().enumerate() {
        for brush in brushes {
            for (color_name, color) in &palette.colors {
                specs.push(AugmentSpec {
                    id: format!("{}-{}-{}", doc.name, brush.id, color_name),
                    base,
                    brush: brush.clone(),
                    color_name: color_name.clone(),
                    color: *color,
                });
            }
        }
    }
    specs
}

// ---------------------------------------------------------------------------
// Manifest assembly

fn validate_record(record: &SampleRecord, root: &Path) -> Result<(), Error> {
    if record.brush_id.is_some() != record.color_name.is_some() {
        return Err(Error::SchemaViolation(format!(
            "sample {:?}: brush_id and color_name must be present together",
            record.id
        )));
    }
    let frames_dir = root.join(&record.frames_dir);
    if !frames_dir.is_dir() {
        return Err(Error::MissingAsset(frames_dir));
    }
    for i in 0..record.k {
        let f = frames_dir.join(frame_file_name(i, record.frame_format));
        if !f.is_file() {
            return Err(Error::MissingAsset(f));
        }
    }
    let frame_files = std::fs::read_dir(&frames_dir)
        .map_err(io_err(&frames_dir))?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("frame_"))
        .count();
    if frame_files != record.k {
        return Err(Error::SchemaViolation(format!(
            "sample {:?}: frames_dir holds {frame_files} frame files, expected {}",
            record.id, record.k
        )));
    }
    if let Some(cond) = &record.conditioning_frame {
        let cond = root.join(cond);
        if !cond.is_file() {
            return Err(Error::MissingAsset(cond));
        }
    }
    Ok(())
}

fn check_unique_ids(samples: &[SampleRecord]) -> Result<(), Error> {
    let mut seen = std::collections::HashSet::new();
    for s in samples {
        if !seen.insert(s.id.as_str()) {
            return Err(Error::DuplicateId(s.id.clone()));
        }
    }
    Ok(())
}

/// Validates sample records against the files on disk and writes the
/// manifest: line 1 is the header object, then one sample object per line.
pub fn assemble(samples: Vec<SampleRecord>, render_defaults: RenderPlan, manifest_path: &Path) -> Result<Manifest, Error> {
    check_unique_ids(&samples)?;
    let root = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    for record in &samples {
        validate_record(record, root)?;
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        created: created_stamp(),
        samples,
        render_defaults,
    };
    let file = std::fs::File::create(manifest_path).map_err(io_err(manifest_path))?;
    let mut out = std::io::BufWriter::new(file);
    let header = ManifestHeader {
        version: manifest.version,
        created: manifest.created.clone(),
        render_defaults: manifest.render_defaults,
    };
    let to_io = |e: serde_json::Error| Error::IoFailure {
        path: manifest_path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    let mut line = serde_json::to_string(&header).map_err(to_io)?;
    line.push('\n');
    out.write_all(line.as_bytes()).map_err(io_err(manifest_path))?;
    for sample in &manifest.samples {
        let mut line = serde_json::to_string(sample).map_err(to_io)?;
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io_err(manifest_path))?;
    }
    out.flush().map_err(io_err(manifest_path))?;
    Ok(manifest)
}

/// Loads and fully validates a manifest written by [`assemble`].
pub fn load_manifest(path: &Path) -> Result<Manifest, Error> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::SchemaViolation(format!("{}: empty manifest", path.display())))?
        .map_err(io_err(path))?;
    let header: ManifestHeader = serde_json::from_str(&header_line)
        .map_err(|e| Error::SchemaViolation(format!("{}: bad header: {e}", path.display())))?;
    if header.version != MANIFEST_VERSION {
        return Err(Error::SchemaViolation(format!(
            "{}: manifest version {} unsupported (expected {MANIFEST_VERSION})",
            path.display(),
            header.version
        )));
    }
    let mut samples = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SampleRecord = serde_json::from_str(&line)
            .map_err(|e| Error::SchemaViolation(format!("{}: line {}: {e}", path.display(), n + 2)))?;
        samples.push(record);
    }
    check_unique_ids(&samples)?;
    let root = path.parent().unwrap_or_else(|| Path::new("."));
    for record in &samples {
        validate_record(record, root)?;
    }
    Ok(Manifest {
        version: header.version,
        created: header.created,
        samples,
        render_defaults: header.render_defaults,
    })
}

/// Reads every frame of a validated sample, in order.
pub fn read_sample_frames(record: &SampleRecord, root: &Path) -> Result<Vec<Frame>, Error> {
    let dir = root.join(&record.frames_dir);
    (0..record.k)
        .map(|i| read_frame(&dir.join(frame_file_name(i, record.frame_format))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::raster::{render_sequence, Style};
    use crate::svgpath::{PathCommand, Stroke};

    fn tiny_doc(name: &str) -> SketchDocument {
        SketchDocument {
            name: name.into(),
            canvas_w: 32.0,
            canvas_h: 32.0,
            strokes: vec![Stroke {
                id: 0,
                commands: vec![PathCommand::MoveTo(Point::new(4.0, 16.0)), PathCommand::LineTo(Point::new(28.0, 16.0))],
                width: 3.0,
                color: Rgb8::BLACK,
            }],
        }
    }

    fn tiny_seq() -> FrameSequence {
        let plan = RenderPlan::new(4, 32, 32, 1, 1, 16.0).unwrap();
        render_sequence(&tiny_doc("t"), &OrderPermutation::identity(1), &plan, &Style::Pen).unwrap()
    }

    #[test]
    fn ppm_bytes_are_exact() {
        let dir = tempfile::tempdir().unwrap();
        let frame = Frame::filled(2, 1, Rgb8::WHITE);
        let path = dir.path().join("f.ppm");
        write_ppm(&frame, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes, b"P6\n2 1\n255\n\xff\xff\xff\xff\xff\xff");
    }

    #[test]
    fn frame_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let seq = tiny_seq();
        for format in [FrameFormat::Ppm, FrameFormat::Png] {
            let sub = dir.path().join(format.extension());
            let paths = write_frames(&seq, &sub, format).unwrap();
            assert_eq!(paths.len(), 4);
            assert_eq!(paths[0].file_name().unwrap().to_str().unwrap(), format!("frame_00000.{}", format.extension()));
            for (path, frame) in paths.iter().zip(&seq.frames) {
                let back = read_frame(path).unwrap();
                assert_eq!(&back, frame);
            }
        }
    }

    #[test]
    fn augmentation_grid_counts() {
        let plan = RenderPlan::new(4, 32, 32, 1, 1, 16.0).unwrap();
        let brushes: Vec<Brush> = Brush::builtin_ids().iter().map(|id| Brush::builtin(id).unwrap()).collect();
        let palette = Palette::default_eight();
        let base = |name: &str| (tiny_doc(name), OrderPermutation::identity(1), plan);

        let bases: Vec<_> = (0..15).map(|i| base(&format!("b{i}"))).collect();
        assert_eq!(augment_brushes(&bases, &brushes, &palette).len(), 720);

        let bases: Vec<_> = (0..7).map(|i| base(&format!("b{i}"))).collect();
        assert_eq!(augment_brushes(&bases, &brushes, &palette).len(), 336);

        let one = augment_brushes(
            &[base("solo")],
            &brushes[..1],
            &Palette { colors: palette.colors[..1].to_vec() },
        );
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].id, "solo-dots-mocha-brown");
        assert_eq!(one[0].base, 0);
    }

    fn sample_on_disk(root: &Path, id: &str) -> SampleRecord {
        let seq = tiny_seq();
        let frames_dir = PathBuf::from(format!("{id}/frames"));
        write_frames(&seq, &root.join(&frames_dir), FrameFormat::Ppm).unwrap();
        SampleRecord {
            id: id.into(),
            prompt: "Step-by-step sketch process of a line, following this drawing order:\n1. Line\n".into(),
            frames_dir,
            frame_format: FrameFormat::Ppm,
            k: 4,
            w: 32,
            h: 32,
            order: OrderPermutation::identity(1),
            brush_id: None,
            color_name: None,
            conditioning_frame: None,
            seed: 7,
            source: SampleSource::Shapes,
        }
    }

    #[test]
    fn manifest_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let a = sample_on_disk(dir.path(), "s0");
        let mut b = sample_on_disk(dir.path(), "s1");
        b.brush_id = Some("dots".into());
        b.color_name = Some("pink".into());
        let cond = PathBuf::from("s1/conditioning.ppm");
        write_ppm(&Frame::filled(32, 32, Rgb8::WHITE), &dir.path().join(&cond)).unwrap();
        b.conditioning_frame = Some(cond);

        let path = dir.path().join("manifest.jsonl");
        let written = assemble(vec![a, b], RenderPlan::default(), &path).unwrap();
        let loaded = load_manifest(&path).unwrap();
        assert_eq!(written, loaded);
        assert_eq!(loaded.samples.len(), 2);
        assert_eq!(loaded.version, MANIFEST_VERSION);

        // Referenced frames decode to the recorded dimensions.
        for s in &loaded.samples {
            for frame in read_sample_frames(s, dir.path()).unwrap() {
                assert_eq!((frame.width, frame.height), (s.w, s.h));
            }
        }
    }

    #[test]
    fn missing_frames_dir_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = sample_on_disk(dir.path(), "s0");
        s.frames_dir = PathBuf::from("nowhere/frames");
        let err = assemble(vec![s], RenderPlan::default(), &dir.path().join("m.jsonl")).unwrap_err();
        assert!(matches!(err, Error::MissingAsset(_)), "{err}");
    }

    #[test]
    fn missing_frame_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample_on_disk(dir.path(), "s0");
        std::fs::remove_file(dir.path().join("s0/frames/frame_00002.ppm")).unwrap();
        let err = assemble(vec![s], RenderPlan::default(), &dir.path().join("m.jsonl")).unwrap_err();
        assert!(matches!(err, Error::MissingAsset(_)), "{err}");
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = sample_on_disk(dir.path(), "s0");
        let b = a.clone();
        let err = assemble(vec![a, b], RenderPlan::default(), &dir.path().join("m.jsonl")).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(id) if id == "s0"));
    }

    #[test]
    fn unpaired_brush_fields_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = sample_on_disk(dir.path(), "s0");
        s.brush_id = Some("dots".into());
        let err = assemble(vec![s], RenderPlan::default(), &dir.path().join("m.jsonl")).unwrap_err();
        assert!(matches!(err, Error::SchemaViolation(_)), "{err}");
    }

    #[test]
    fn source_date_epoch_pins_created() {
        // Set per-test env carefully: tests run in threads, so scope it.
        std::env::set_var("SOURCE_DATE_EPOCH", "946684800");
        let stamp = created_stamp();
        std::env::remove_var("SOURCE_DATE_EPOCH");
        assert_eq!(stamp, "2000-01-01T00:00:00Z");
    }
}
