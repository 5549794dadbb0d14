use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::{Rgb, RgbImage};
use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

const KITCHEN: &str = r#"{
  "image": {"path": "kitchen.png", "width": 320, "height": 240},
  "detections": [
    {"detector_id": "owl", "class_label": "oven", "confidence": 0.92, "box": [100, 130, 220, 235]},
    {"detector_id": "yolo", "class_label": "oven", "confidence": 0.85, "box": [101, 131, 219, 234]},
    {"detector_id": "owl", "class_label": "potted plant", "confidence": 0.81, "box": [30, 165, 70, 235]},
    {"detector_id": "detr", "class_label": "refrigerator", "confidence": 0.9, "box": [240, 20, 315, 235]}
  ]
}"#;

fn gom() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gom"))
}

fn run(args: &[&str]) -> Output {
    gom().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let img = RgbImage::from_fn(320, 240, |x, y| Rgb([(x / 2) as u8, (y / 2) as u8, 128]));
        img.save(dir.path().join("kitchen.png")).unwrap();
        fs::write(dir.path().join("kitchen.json"), KITCHEN).unwrap();
        // 8-bit PGM: the plant is nearer than everything else.
        let mut pgm = b"P5\n320 240\n255\n".to_vec();
        for y in 0..240u32 {
            for x in 0..320u32 {
                let near = (30..70).contains(&x) && (165..235).contains(&y);
                pgm.push(if near { 230 } else { 120 });
            }
        }
        fs::write(dir.path().join("kitchen.pgm"), pgm).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn annotate(&self, out: &str, query: &str, extra: &[&str]) -> Output {
        let mut args = vec![
            "annotate".to_string(),
            "--image".into(),
            self.s("kitchen.png"),
            "--detections".into(),
            self.s("kitchen.json"),
            "--depth".into(),
            self.s("kitchen.pgm"),
            "--query".into(),
            query.into(),
            "--out".into(),
            self.s(out),
        ];
        args.extend(extra.iter().map(|s| s.to_string()));
        gom().args(&args).output().unwrap()
    }
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn digest(p: &Path) -> Vec<u8> {
    Sha256::digest(fs::read(p).unwrap()).to_vec()
}

const ARTIFACTS: [&str; 4] = [
    "annotated.png",
    "scene_graph.json",
    "prompt.json",
    "layout.json",
];

#[test]
fn annotate_keeps_query_objects() {
    let fx = Fixture::new();
    let o = fx.annotate("out", "Is the potted plant below the oven?", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for a in ARTIFACTS {
        assert!(fx.path("out").join(a).is_file(), "{a}");
    }
    let sg = read_json(&fx.path("out/scene_graph.json"));
    let classes: Vec<&str> = sg["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n["class"].as_str().unwrap())
        .collect();
    assert_eq!(classes, ["oven", "potted plant"]);
    let ids: Vec<u64> = sg["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n["id"].as_u64().unwrap())
        .collect();
    for e in sg["edges"].as_array().unwrap() {
        assert!(ids.contains(&e["head_id"].as_u64().unwrap()));
        assert!(ids.contains(&e["tail_id"].as_u64().unwrap()));
    }
    assert!(!sg["edges"].as_array().unwrap().is_empty());

    let prompt = read_json(&fx.path("out/prompt.json"));
    assert_eq!(prompt["mode"], "visual");
    assert!(prompt["user"]
        .as_str()
        .unwrap()
        .ends_with("Question: Is the potted plant below the oven?"));

    let layout = read_json(&fx.path("out/layout.json"));
    assert_eq!(layout["resolved"], true);
    let kinds: Vec<&str> = layout["placements"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["kind"].as_str().unwrap())
        .collect();
    assert!(kinds.contains(&"id_box") && kinds.contains(&"mask"));
}

#[test]
fn annotate_is_deterministic() {
    let fx = Fixture::new();
    let q = "Is the potted plant below the oven?";
    assert!(fx.annotate("out", q, &[]).status.success());
    let first: Vec<Vec<u8>> = ARTIFACTS
        .iter()
        .map(|a| digest(&fx.path("out").join(a)))
        .collect();
    assert!(fx.annotate("out", q, &[]).status.success());
    let second: Vec<Vec<u8>> = ARTIFACTS
        .iter()
        .map(|a| digest(&fx.path("out").join(a)))
        .collect();
    assert_eq!(first, second);
}

#[test]
fn nothing_above_threshold_copies_image() {
    let fx = Fixture::new();
    let o = fx.annotate("out", "Where is the oven?", &["--tau-od-min-conf", "0.99"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sg = read_json(&fx.path("out/scene_graph.json"));
    assert!(sg["nodes"].as_array().unwrap().is_empty());
    let src = image::open(fx.path("kitchen.png")).unwrap().to_rgb8();
    let out = image::open(fx.path("out/annotated.png")).unwrap().to_rgb8();
    assert_eq!(src.as_raw(), out.as_raw());
    assert!(fx.path("out/prompt.json").is_file());
}

#[test]
fn textual_mode_and_flags() {
    let fx = Fixture::new();
    let o = fx.annotate(
        "out",
        "Is the potted plant below the oven?",
        &[
            "--prompt-mode",
            "visual-textual",
            "--id-style",
            "textual",
            "--relation-labels",
            "off",
            "--k",
            "1",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let prompt = read_json(&fx.path("out/prompt.json"));
    assert_eq!(prompt["mode"], "visual_textual");
    let user = prompt["user"].as_str().unwrap();
    assert!(user.contains("Scene Graph (Textual):\n"));
    assert!(user.contains("potted plant_2 --(") || user.contains("oven_1 --("));
    let layout = read_json(&fx.path("out/layout.json"));
    assert!(layout["placements"]
        .as_array()
        .unwrap()
        .iter()
        .all(|p| p["kind"] != "edge_label"));
}

#[test]
fn missing_depth_warns() {
    let fx = Fixture::new();
    let o = run(&[
        "annotate",
        "--image",
        &fx.s("kitchen.png"),
        "--detections",
        &fx.s("kitchen.json"),
        "--query",
        "Is the plant in front of the oven?",
        "--out",
        &fx.s("out"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning: no depth map"));
    let sg = read_json(&fx.path("out/scene_graph.json"));
    assert!(sg["edges"]
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e["label"] != "in_front_of" && e["label"] != "behind"));
}

#[test]
fn bad_inputs_fail_with_stage_tag() {
    let fx = Fixture::new();
    fs::write(fx.path("kitchen.json"), r#"{"image": {"path": "x", "width": 320, "height": 240}, "detections": [{"detector_id": "a"}]}"#).unwrap();
    let o = fx.annotate("out", "q?", &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("fusion:"), "{}", stderr(&o));

    let fx = Fixture::new();
    let o = fx.annotate("out", "q?", &["--set", "no_such_key=1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no_such_key"));

    let fx = Fixture::new();
    let o = fx.annotate("out", "   ", &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("prompt:"), "{}", stderr(&o));
}

fn write_lines(p: &Path, lines: &[String]) {
    fs::write(p, lines.join("\n") + "\n").unwrap();
}

#[test]
fn eval_rec_inclusive_threshold() {
    let dir = TempDir::new().unwrap();
    let graph = r#"{"nodes": [
        {"id": 1, "mark": "1", "class": "cup", "box": [0, 0, 100, 100], "confidence": 0.9},
        {"id": 2, "mark": "2", "class": "mug", "box": [200, 0, 300, 100], "confidence": 0.8}
    ], "edges": []}"#;
    for item in ["a", "b", "c"] {
        fs::create_dir_all(dir.path().join(item)).unwrap();
        fs::write(dir.path().join(item).join("scene_graph.json"), graph).unwrap();
    }
    write_lines(
        &dir.path().join("pred.jsonl"),
        &[
            r#"{"item": "a", "predicted_id": "1"}"#.into(),
            r#"{"item": "b", "predicted_id": "cup_1"}"#.into(),
            r#"{"item": "c", "predicted_id": "9"}"#.into(),
        ],
    );
    // IoU 9000/10000 = 0.9 for a, 8900/10000 = 0.89 for b.
    write_lines(
        &dir.path().join("gt.jsonl"),
        &[
            r#"{"item": "a", "box": [0, 0, 90, 100]}"#.into(),
            r#"{"item": "b", "box": [0, 0, 89, 100]}"#.into(),
            r#"{"item": "c", "box": [0, 0, 100, 100]}"#.into(),
        ],
    );
    let d = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let o = run(&[
        "eval-rec",
        "--predictions",
        &d("pred.jsonl"),
        "--graph",
        &d("a/scene_graph.json"),
        "--graph",
        &format!("b={}", d("b/scene_graph.json")),
        "--graph",
        &d("c/scene_graph.json"),
        "--ground-truth",
        &d("gt.jsonl"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let verdicts: Vec<bool> = report["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["correct"].as_bool().unwrap())
        .collect();
    assert_eq!(verdicts, [true, false, false]);
    assert_eq!(report["items"][2]["flags"][0], "unknown_id");
    assert_eq!(report["unknown_ids"], 1);
    let mean = verdicts.iter().filter(|v| **v).count() as f64 / 3.0;
    assert_eq!(report["accuracy"].as_f64().unwrap(), mean);
    assert!(stderr(&o).contains("unknown_id"));
}

#[test]
fn eval_rec_rejects_malformed() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("p.jsonl"), "not json\n").unwrap();
    fs::write(dir.path().join("g.jsonl"), "").unwrap();
    fs::write(dir.path().join("sg.json"), r#"{"nodes": [], "edges": []}"#).unwrap();
    let d = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let o = run(&[
        "eval-rec",
        "--predictions",
        &d("p.jsonl"),
        "--graph",
        &format!("x={}", d("sg.json")),
        "--ground-truth",
        &d("g.jsonl"),
    ]);
    assert!(!o.status.success());
}

#[test]
fn batch_isolates_failures() {
    let fx = Fixture::new();
    fs::write(fx.path("broken.json"), "{ not json").unwrap();
    write_lines(
        &fx.path("manifest.jsonl"),
        &[
            r#"{"image": "kitchen.png", "detections": "kitchen.json", "depth": "kitchen.pgm", "query": "Is the potted plant below the oven?"}"#.into(),
            r#"{"image": "kitchen.png", "detections": "broken.json", "query": "Where is the oven?"}"#.into(),
            r#"{"image": "kitchen.png", "detections": "kitchen.json", "query": "Is the fridge right of the oven?", "name": "fridge"}"#.into(),
        ],
    );
    let o = run(&[
        "batch",
        "--manifest",
        &fx.s("manifest.jsonl"),
        "--out",
        &fx.s("batch"),
        "--workers",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let summary = read_json(&fx.path("batch/summary.json"));
    assert_eq!(summary["succeeded"], 2);
    assert_eq!(summary["failed"], 1);
    let rows = summary["rows"].as_array().unwrap();
    assert_eq!(rows[1]["ok"], false);
    assert!(rows[1]["error"].as_str().unwrap().contains("fusion:"));
    for dir in ["row_0", "fridge"] {
        for a in ARTIFACTS {
            assert!(fx.path("batch").join(dir).join(a).is_file(), "{dir}/{a}");
        }
    }
    for row in rows.iter().filter(|r| r["ok"] == true) {
        let t = &row["report"]["timings"];
        let mut sum = 0.0;
        for stage in ["fusion", "relations", "filtering", "render", "prompt"] {
            let v = t[stage].as_f64().unwrap();
            assert!(v > 0.0, "{stage}");
            sum += v;
        }
        assert!(sum <= row["report"]["wall_ms"].as_f64().unwrap());
    }
}

#[test]
fn batch_empty_manifest() {
    let fx = Fixture::new();
    fs::write(fx.path("empty.jsonl"), "").unwrap();
    let o = run(&[
        "batch",
        "--manifest",
        &fx.s("empty.jsonl"),
        "--out",
        &fx.s("batch"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = read_json(&fx.path("batch/summary.json"));
    assert!(summary["rows"].as_array().unwrap().is_empty());
    assert_eq!(summary["failed"], 0);
}

#[test]
fn batch_manifest_error_aborts() {
    let fx = Fixture::new();
    fs::write(fx.path("bad.jsonl"), "{\"image\": 3}\n").unwrap();
    let o = run(&[
        "batch",
        "--manifest",
        &fx.s("bad.jsonl"),
        "--out",
        &fx.s("batch"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!fx.path("batch/summary.json").exists());
}
