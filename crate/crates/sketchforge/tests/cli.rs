// Copyright 2026 the Sketchforge Authors
// SPDX-License-Identifier: Apache-2.0 OR MIT

//! End-to-end tests of the `sketchforge` binary: exit codes, output
//! layout, manifest count laws, and byte-identical reruns.

use sketchforge::dataset::load_manifest;
use sketchforge::evalkit::EvalReport;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sketchforge"));
    // Pin the manifest timestamp so reruns compare byte-for-byte.
    cmd.env("SOURCE_DATE_EPOCH", "946684800");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Small render plan used throughout to keep the tests fast.
const SMALL: &[&str] = &["--frames", "17", "--width", "240", "--height", "416"];

fn gen_small(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "gen-shapes",
        "--relation",
        "grouping",
        "--count",
        "2",
        "--seeds",
        "0..1",
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    run(&args)
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                files.push((rel, std::fs::read(&path).expect("readable file")));
            }
        }
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&run(&["no-such-subcommand"])), 64);
    assert_eq!(code(&run(&["gen-shapes"])), 64); // missing required args
    assert_eq!(code(&run(&["gen-shapes", "--relation", "sideways", "--out", "/tmp/x"])), 64);
    assert_eq!(code(&run(&["render", "--out", "/tmp/x"])), 64); // no input
    assert_eq!(code(&run(&["flow-demo", "--shape", "2x0x4"])), 64);
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["gen-shapes", "--help"])), 0);
}

#[test]
fn domain_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();

    // Evaluating a directory without frames is a data problem, not usage.
    let out = run(&["eval", "--frames", empty.to_str().unwrap(), "--out", tmp.path().join("e").to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    // A missing manifest likewise.
    let out = run(&[
        "augment",
        "--manifest",
        tmp.path().join("nope.jsonl").to_str().unwrap(),
        "--out",
        tmp.path().join("a").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn gen_shapes_obeys_the_count_law() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("gen");
    let out = run(&[
        "gen-shapes",
        "--relation",
        "adjacency",
        "--count",
        "3",
        "--seeds",
        "0..4",
        "--out",
        out_dir.to_str().unwrap(),
        "--frames",
        "17",
        "--width",
        "240",
        "--height",
        "416",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("5 compositions x 3 orders = 15 samples"));

    let manifest = load_manifest(&out_dir.join("manifest.jsonl")).expect("manifest loads and validates");
    assert_eq!(manifest.samples.len(), 15);
    assert_eq!(manifest.created, "2000-01-01T00:00:00Z");
    for record in &manifest.samples {
        assert_eq!(record.k, 17);
        let sample_dir = out_dir.join(record.frames_dir.parent().unwrap());
        assert!(sample_dir.join("document.json").is_file());
        assert!(sample_dir.join("prompt.txt").is_file());
        assert!(sample_dir.join("timeline.json").is_file());
        assert_eq!(std::fs::read_dir(out_dir.join(&record.frames_dir)).unwrap().count(), 17);
    }
    assert!(out_dir.join("run_config.json").is_file());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("gen");

    assert_eq!(code(&gen_small(&out_dir, &[])), 0);
    let first = tree_bytes(&out_dir);
    assert!(!first.is_empty());

    std::fs::remove_dir_all(&out_dir).unwrap();
    // A different worker count must not change any byte.
    let out = bin()
        .args(["gen-shapes", "--relation", "grouping", "--count", "2", "--seeds", "0..1", "--out"])
        .arg(&out_dir)
        .args(SMALL)
        .env("SKETCHFORGE_WORKERS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let second = tree_bytes(&out_dir);

    assert_eq!(first.len(), second.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in first.iter().zip(&second) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} differs between reruns");
    }
}

#[test]
fn render_accepts_svg_and_respects_plan_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let svg = tmp.path().join("doc.svg");
    std::fs::write(
        &svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"200\" height=\"200\">\
         <path d=\"M 20 20 L 180 20\" stroke=\"black\" stroke-width=\"4\"/>\
         <path d=\"M 20 60 C 60 20 140 100 180 60\" stroke=\"blue\"/>\
         </svg>",
    )
    .unwrap();
    let out_dir = tmp.path().join("render");
    let out = run(&[
        "render",
        "--svg",
        svg.to_str().unwrap(),
        "--order",
        "1,0",
        "--out",
        out_dir.to_str().unwrap(),
        "--frames",
        "9",
        "--width",
        "160",
        "--height",
        "160",
        "--blank-lead",
        "2",
        "--hold-tail",
        "3",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_dir(out_dir.join("frames")).unwrap().count(), 9);
    assert!(out_dir.join("timeline.json").is_file());

    let config: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("run_config.json")).unwrap()).unwrap();
    assert_eq!(config["config"]["plan"]["frames"], 9);
    assert_eq!(config["config"]["plan"]["blank_lead"], 2);
    assert_eq!(config["config"]["plan"]["hold_tail"], 3);
    assert_eq!(config["config"]["order"], serde_json::json!([1, 0]));
    assert_eq!(config["version"], env!("CARGO_PKG_VERSION"));

    // Both blank-lead frames are pure white in PPM mode.
    let f0 = std::fs::read(out_dir.join("frames/frame_00000.ppm")).unwrap();
    let f1 = std::fs::read(out_dir.join("frames/frame_00001.ppm")).unwrap();
    assert_eq!(f0, f1);
    assert!(f0[15..].iter().all(|&b| b == 255));

    // An order that does not match the stroke count is a domain error.
    let out = run(&[
        "render",
        "--svg",
        svg.to_str().unwrap(),
        "--order",
        "2,0,1",
        "--out",
        tmp.path().join("r2").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn augment_prints_the_grid_law_and_writes_conditioning() {
    let tmp = tempfile::tempdir().unwrap();
    let gen_dir = tmp.path().join("gen");
    assert_eq!(code(&gen_small(&gen_dir, &[])), 0);

    let aug_dir = tmp.path().join("aug");
    let out = run(&[
        "augment",
        "--manifest",
        gen_dir.join("manifest.jsonl").to_str().unwrap(),
        "--brushes",
        "hard-round,dots",
        "--colors",
        "pink,teal,crimson",
        "--out",
        aug_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("4 bases x 2 brushes x 3 colors = 24 samples"));

    let manifest = load_manifest(&aug_dir.join("manifest.jsonl")).expect("augmented manifest validates");
    assert_eq!(manifest.samples.len(), 24);
    for record in &manifest.samples {
        assert!(record.brush_id.is_some() && record.color_name.is_some());
        let cond = record.conditioning_frame.as_ref().expect("brush samples carry a conditioning frame");
        assert!(aug_dir.join(cond).is_file());
        assert!(record.prompt.contains("brush shown in the top-left corner"));
    }
}

#[test]
fn eval_writes_report_curve_and_chart() {
    let tmp = tempfile::tempdir().unwrap();
    let gen_dir = tmp.path().join("gen");
    assert_eq!(code(&gen_small(&gen_dir, &[])), 0);

    let sample = gen_dir.join("grouping-0-o0");
    let eval_dir = tmp.path().join("eval");
    let out = run(&[
        "eval",
        "--frames",
        sample.join("frames").to_str().unwrap(),
        "--regions",
        sample.join("document.json").to_str().unwrap(),
        "--target-order",
        "0,1,2",
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let report: EvalReport =
        serde_json::from_str(&std::fs::read_to_string(eval_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.accumulation.len(), 17);
    assert_eq!(*report.accumulation.last().unwrap(), 1.0);
    assert!(report.order.is_some());
    assert!(report.tau.is_some());

    let csv = std::fs::read_to_string(eval_dir.join("curve.csv")).unwrap();
    assert!(csv.starts_with("frame_index,value\n"));
    assert_eq!(csv.lines().count(), 18);

    let svg = std::fs::read_to_string(eval_dir.join("curve.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
}

#[test]
fn flow_demo_verifies_within_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("flow");
    let out = run(&[
        "flow-demo",
        "--shape",
        "3x5",
        "--seed",
        "11",
        "--steps",
        "1,7,50",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.matches(" ok").count(), 3);
    assert!(!text.contains("FAIL"));
    assert!(out_dir.join("flow_demo.txt").is_file());
    assert!(out_dir.join("run_config.json").is_file());
}
