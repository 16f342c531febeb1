use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pinpoint_core::io::{read_mask, write_image, write_mask};
use pinpoint_core::Mask;
use pinpoint_pipeline::bench::{generate_scene, SceneSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pinpoint"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// A clean scene (one target, no distractors, no texture) written to `dir`.
fn clean_scene(dir: &Path) -> (PathBuf, PathBuf, String) {
    let spec = SceneSpec {
        distractors: 0,
        texture: 0.0,
        clutter: 0,
        ..SceneSpec::default()
    };
    let scene = generate_scene(&spec, 11).unwrap();
    let (img, mask) = (dir.join("img.png"), dir.join("mask.png"));
    write_image(&scene.image, &img).unwrap();
    write_mask(&scene.target, &mask).unwrap();
    (img, mask, scene.query)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn select_is_deterministic_and_within_budget() {
    let dir = tempfile::tempdir().unwrap();
    let (img, mask, _) = clean_scene(dir.path());
    let b = read_mask(&mask).unwrap().bounding_box().unwrap();
    let bx = format!("{},{},{},{}", b.x_min, b.y_min, b.x_max, b.y_max);
    let args = ["select", "--image", s(&img), "--box", &bx, "--n", "4"];
    let (a, c) = (run(&args), run(&args));
    assert_eq!(a.stdout, c.stdout);
    let v = stdout_json(&a);
    let pts = v["points"].as_array().unwrap();
    assert!(!pts.is_empty() && pts.len() <= 4);
    for p in pts {
        let (x, y) = (p["x"].as_i64().unwrap(), p["y"].as_i64().unwrap());
        assert!(x > b.x_min as i64 && x < b.x_max as i64);
        assert!(y > b.y_min as i64 && y < b.y_max as i64);
    }
    // The first point of a clean scene lands on the target.
    let m = read_mask(&mask).unwrap();
    assert!(m.get(
        pts[0]["y"].as_u64().unwrap() as usize,
        pts[0]["x"].as_u64().unwrap() as usize
    ));
    assert_eq!(
        v["config"]["pipeline"]["pinpoint"]["selection"]["budget"],
        4
    );
}

#[test]
fn dump_cues_writes_four_cues_and_consensus() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _, _) = clean_scene(dir.path());
    let out = dir.path().join("dump");
    let o = run(&[
        "select",
        "--image",
        s(&img),
        "--box",
        "10,10,90,90",
        "--dump-cues",
        "-o",
        s(&out),
    ]);
    stdout_json(&o);
    for f in ["cue_s", "cue_e", "cue_h", "cue_g", "consensus"] {
        assert!(out.join(format!("{f}.png")).is_file(), "{f}");
    }
    assert!(out.join("run_config.json").is_file());
}

#[test]
fn clean_oracle_run_recovers_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let (img, mask, query) = clean_scene(dir.path());
    let out = dir.path().join("run");
    let o = run(&[
        "run",
        "--image",
        s(&img),
        "--query",
        &query,
        "--oracle-mask",
        s(&mask),
        "--gt-mask",
        s(&mask),
        "--clean-oracle",
        "-o",
        s(&out),
    ]);
    let v = stdout_json(&o);
    assert!(v["iou"].as_f64().unwrap() >= 0.95, "{}", v["iou"]);
    let t = v["result"]["timings"].as_object().unwrap();
    let mut keys: Vec<&str> = t.keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(
        keys,
        [
            "localization",
            "point_filtering",
            "point_labeling",
            "point_selection",
            "segmentation"
        ]
    );
    assert!(out.join("mask.png").is_file());
    let saved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(saved, v);
}

#[test]
fn no_boxes_gives_an_empty_mask_and_success() {
    let dir = tempfile::tempdir().unwrap();
    let (img, mask, _) = clean_scene(dir.path());
    let m = read_mask(&mask).unwrap();
    let empty = dir.path().join("empty.png");
    write_mask(
        &Mask::new(m.height(), m.width(), vec![false; m.height() * m.width()]).unwrap(),
        &empty,
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = run(&[
        "run",
        "--image",
        s(&img),
        "--query",
        "nothing",
        "--oracle-mask",
        s(&empty),
        "-o",
        s(&out),
    ]);
    let v = stdout_json(&o);
    assert_eq!(v["result"]["mask_pixels"], 0);
    assert_eq!(read_mask(&out.join("mask.png")).unwrap().count(), 0);
}

#[test]
fn toml_config_is_overridden_by_flags_and_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _, _) = clean_scene(dir.path());
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "seed = 42\n[pipeline.pinpoint.selection]\nbudget = 2\nsigma_nms = 0.2\n",
    )
    .unwrap();
    let v = stdout_json(&run(&[
        "select",
        "--image",
        s(&img),
        "--box",
        "10,10,90,90",
        "--config",
        s(&cfg),
        "--n",
        "3",
    ]));
    let sel = &v["config"]["pipeline"]["pinpoint"]["selection"];
    assert_eq!(sel["budget"], 3);
    assert_eq!(sel["sigma_nms"], 0.2);
    assert_eq!(v["seed"], 42);
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _, _) = clean_scene(dir.path());
    let code = |args: &[&str]| run(args).status.code().unwrap();

    assert_eq!(code(&["select", "--image", s(&img), "--box", "1,2,3"]), 2);
    assert_eq!(
        code(&["select", "--image", s(&img), "--box", "0,0,500,500"]),
        2
    );
    assert_eq!(
        code(&["select", "--image", "/no/such.png", "--box", "1,1,9,9"]),
        3
    );
    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "unknown_key = 1\n").unwrap();
    assert_eq!(
        code(&[
            "select",
            "--image",
            s(&img),
            "--box",
            "1,1,9,9",
            "--config",
            s(&bad_cfg)
        ]),
        2
    );
    assert_eq!(
        code(&[
            "run",
            "--image",
            s(&img),
            "--query",
            "q",
            "-o",
            s(&dir.path().join("x"))
        ]),
        2,
        "oracle backend without a mask"
    );
    assert_eq!(
        code(&[
            "run",
            "--image",
            s(&img),
            "--query",
            "q",
            "--backend",
            "remote",
            "--vlm-url",
            "http://127.0.0.1:9",
            "--sam-url",
            "http://127.0.0.1:9",
            "-o",
            s(&dir.path().join("y")),
        ]),
        4
    );
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&["eval", "--manifest", s(&empty)]), 2);
    let garbled = dir.path().join("garbled.jsonl");
    std::fs::write(&garbled, "{not json\n").unwrap();
    assert_eq!(code(&["eval", "--manifest", s(&garbled)]), 5);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn ablation_and_sweep_tables_have_the_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    let o = run(&["generate", "--count", "200", "-o", s(&suite)]);
    assert!(o.status.success());
    let manifest = suite.join("manifest.jsonl");
    assert_eq!(
        std::fs::read_to_string(&manifest).unwrap().lines().count(),
        200
    );

    let walk = dir.path().join("walk");
    let o = run(&[
        "ablate",
        "--manifest",
        s(&manifest),
        "--jobs",
        "2",
        "-o",
        s(&walk),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&walk.join("stage_walk.csv"));
    let stages: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(stages, ["s1", "s2", "s3", "s4", "s5"]);
    let jsonl = std::fs::read_to_string(walk.join("stage_walk.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert!(first["run_config"].is_object());
    assert_eq!(jsonl.lines().count(), 1 + 5 * 200);

    // Relative paths in a manifest resolve against its own directory.
    let few_in_suite = suite.join("few.jsonl");
    let text = std::fs::read_to_string(&manifest).unwrap();
    let head: Vec<&str> = text.lines().take(10).collect();
    std::fs::write(&few_in_suite, head.join("\n")).unwrap();
    let sweep = dir.path().join("sweep");
    let o = run(&[
        "sweep",
        "--manifest",
        s(&few_in_suite),
        "--kind",
        "sigma-g",
        "-o",
        s(&sweep),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&sweep.join("sweep_sigma_g.csv"));
    let grid: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(grid, ["0.1", "0.18", "0.25", "0.33", "0.45"]);
    let default_row = rows.iter().find(|r| r[2] == "true").unwrap();
    assert_eq!(default_row[5], "0.0");
}
