//! Subcommand implementations. Each returns the text printed on stdout.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use pinpoint_core::io::{
    image_to_png_bytes, mask_to_png_bytes, read_image, read_mask, unit_map_to_png_bytes,
};
use pinpoint_core::{pinpoint_traced, BBox, Image, Mask, Point};
use pinpoint_pipeline::backends::{
    BackendSet, PseudoSam, RemoteLabeler, RemoteLocalizer, RemoteSegmenter,
};
use pinpoint_pipeline::bench::{
    evaluate, generate_suite, load_dataset, run_ablation_stage_walk, run_cue_dropout,
    run_filter_sweep, run_sensitivity_sweep, summarize, write_bytes, write_csv, write_jsonl,
    write_suite, write_text, BackendProvider, BenchError, CueDropoutReport, CueSetting,
    FilterSweepReport, Overlap, RemoteProvider, Sample, SensitivityReport, StageWalkReport,
    SuiteSpec, SweepAxis,
};
use pinpoint_pipeline::{run_query, run_stage_config, Allowlist, PipelineResult};

use crate::config::{BackendKind, RunConfig};
use crate::{AblationKind, CliError, Command, SweepKind};

const DEFAULT_TAUS: [f64; 6] = [0.0, 0.5, 0.6, 0.7, 0.8, 0.9];
const RUN_CONFIG_FILE: &str = "run_config.json";

pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<String, CliError> {
    match cmd {
        Command::Select { image, bbox } => cmd_select(image, &parse_box(bbox)?, cfg),
        Command::Run {
            image,
            query,
            oracle_mask,
            gt_mask,
        } => cmd_run(
            image,
            query,
            oracle_mask.as_deref(),
            gt_mask.as_deref(),
            cfg,
        ),
        Command::Eval { manifest, stage } => cmd_eval(manifest, *stage, cfg),
        Command::Ablate { manifest, kind } => cmd_ablate(manifest, *kind, cfg),
        Command::Sweep {
            manifest,
            kind,
            grid,
            allowlists,
        } => cmd_sweep(manifest, *kind, grid, allowlists, cfg),
        Command::Generate {
            count,
            suite_seed,
            size,
        } => cmd_generate(*count, *suite_seed, *size, cfg),
    }
}

pub fn parse_box(s: &str) -> Result<BBox, CliError> {
    let v: Vec<i32> = s
        .split(',')
        .map(|t| t.trim().parse::<i32>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("box `{s}`: {e}")))?;
    let [x0, y0, x1, y1] = v[..] else {
        return Err(CliError::Config(format!(
            "box `{s}` must be x_min,y_min,x_max,y_max"
        )));
    };
    BBox::new(x0, y0, x1, y1).map_err(|e| CliError::Config(e.to_string()))
}

fn load_image(path: &Path) -> Result<Image, CliError> {
    read_image(path).map_err(|e| CliError::Io(e.to_string()))
}

fn load_mask(path: &Path) -> Result<Mask, CliError> {
    read_mask(path).map_err(|e| CliError::Io(e.to_string()))
}

fn png(bytes: pinpoint_core::Result<Vec<u8>>, path: &Path) -> Result<(), CliError> {
    let bytes = bytes.map_err(|e| CliError::Io(e.to_string()))?;
    Ok(write_bytes(path, &bytes)?)
}

fn json_text<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable output") + "\n"
}

fn write_run_config(cfg: &RunConfig) -> Result<(), CliError> {
    write_text(
        &cfg.output_dir.join(RUN_CONFIG_FILE),
        &json_text(&cfg.echo()),
    )?;
    Ok(())
}

/// Draws a one-pixel rectangle outline.
fn draw_box(img: &mut Image, b: &BBox, rgb: [u8; 3]) {
    let (h, w) = (img.height() as i32, img.width() as i32);
    let mut put = |x: i32, y: i32| {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            img.set(y as usize, x as usize, rgb);
        }
    };
    for x in b.x_min..=b.x_max {
        put(x, b.y_min);
        put(x, b.y_max);
    }
    for y in b.y_min..=b.y_max {
        put(b.x_min, y);
        put(b.x_max, y);
    }
}

/// Draws a small plus sign centred on `p`.
fn draw_point(img: &mut Image, p: Point, rgb: [u8; 3]) {
    let (h, w) = (img.height() as i32, img.width() as i32);
    for d in -3..=3 {
        for (x, y) in [(p.x + d, p.y), (p.x, p.y + d)] {
            if (0..w).contains(&x) && (0..h).contains(&y) {
                img.set(y as usize, x as usize, rgb);
            }
        }
    }
}

const BOX_COLOR: [u8; 3] = [255, 215, 0];
const POSITIVE_COLOR: [u8; 3] = [0, 230, 0];
const NEGATIVE_COLOR: [u8; 3] = [230, 0, 0];
const UNLABELED_COLOR: [u8; 3] = [0, 200, 255];

fn cmd_select(path: &Path, b: &BBox, cfg: &RunConfig) -> Result<String, CliError> {
    let img = load_image(path)?;
    let bounds = BBox::new(0, 0, img.width() as i32 - 1, img.height() as i32 - 1)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if !bounds.contains_box(b) {
        return Err(CliError::Config(format!(
            "box {b:?} lies outside the {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let trace = pinpoint_traced::<f64>(&img, b, &cfg.pipeline.pinpoint)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let points: Vec<_> = trace
        .selected
        .iter()
        .map(|p| json!({"x": p.point.x, "y": p.point.y, "score": p.score}))
        .collect();
    if cfg.dump.cues || cfg.dump.overlays {
        write_run_config(cfg)?;
    }
    if cfg.dump.cues {
        let dir = &cfg.output_dir;
        let c = &trace.cues;
        for (name, map) in [
            ("cue_s", &c.s),
            ("cue_e", &c.e),
            ("cue_h", &c.h),
            ("cue_g", &c.g),
        ] {
            png(unit_map_to_png_bytes(map), &dir.join(format!("{name}.png")))?;
        }
        png(
            unit_map_to_png_bytes(&trace.consensus.values),
            &dir.join("consensus.png"),
        )?;
    }
    if cfg.dump.overlays {
        let mut over = img.clone();
        draw_box(&mut over, b, BOX_COLOR);
        for p in &trace.selected {
            draw_point(&mut over, p.point, UNLABELED_COLOR);
        }
        png(
            image_to_png_bytes(&over),
            &cfg.output_dir.join("overlay.png"),
        )?;
    }
    Ok(json_text(&json!({
        "config": cfg.echo(),
        "seed": cfg.seed,
        "box": b,
        "points": points,
    })))
}

fn remote_set(cfg: &RunConfig) -> Result<BackendSet, CliError> {
    Ok(BackendSet {
        localizer: Box::new(RemoteLocalizer::new(cfg.remote.vlm.clone())?),
        labeler: Box::new(RemoteLabeler::new(cfg.remote.vlm.clone())?),
        segmenter: Box::new(RemoteSegmenter::new(cfg.remote.sam.clone())?),
    })
}

fn overlay_of(img: &Image, result: &PipelineResult) -> Image {
    let mut over = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if result.mask.get(y, x) {
                let [r, g, b] = over.get(y, x);
                over.set(y, x, [r / 2 + 64, g / 2, b / 2 + 64]);
            }
        }
    }
    for rec in &result.boxes {
        if let Some(b) = &rec.bbox {
            draw_box(&mut over, b, BOX_COLOR);
        }
        for k in &rec.kept {
            let color = match k.label {
                pinpoint_core::protocol::Label::Positive => POSITIVE_COLOR,
                pinpoint_core::protocol::Label::Negative => NEGATIVE_COLOR,
            };
            draw_point(&mut over, k.point, color);
        }
    }
    over
}

fn cmd_run(
    image: &Path,
    query: &str,
    oracle_mask: Option<&Path>,
    gt_mask: Option<&Path>,
    cfg: &RunConfig,
) -> Result<String, CliError> {
    let img = load_image(image)?;
    let gt = gt_mask.map(load_mask).transpose()?;
    let set = match cfg.backend {
        BackendKind::Oracle => {
            let path = oracle_mask
                .ok_or_else(|| CliError::Config("the oracle backend needs --oracle-mask".into()))?;
            let target = load_mask(path)?;
            if (target.height(), target.width()) != (img.height(), img.width()) {
                return Err(CliError::Config(
                    "oracle mask and image sizes differ".into(),
                ));
            }
            let sample = Sample {
                id: image.display().to_string(),
                image: img.clone(),
                query: query.to_string(),
                gt_box: target.bounding_box(),
                gt: target,
                distractors: Vec::new(),
            };
            let mut set = cfg.oracle.backends(&sample)?;
            set.segmenter = Box::new(PseudoSam::new(cfg.oracle.max_delta_e));
            set
        }
        BackendKind::Remote => remote_set(cfg)?,
    };
    let result = run_query(&img, query, &cfg.pipeline, set.view());
    if cfg.backend == BackendKind::Remote {
        if let Some(e) = &result.localization_error {
            return Err(CliError::Backend(e.clone()));
        }
    }
    let overlap = match &gt {
        Some(g) => Some(Overlap::of(&result.mask, g).map_err(|e| CliError::Config(e.to_string()))?),
        None => None,
    };
    let dir = &cfg.output_dir;
    png(mask_to_png_bytes(&result.mask), &dir.join("mask.png"))?;
    if cfg.dump.overlays {
        png(
            image_to_png_bytes(&overlay_of(&img, &result)),
            &dir.join("overlay.png"),
        )?;
    }
    let doc = json!({
        "config": cfg.echo(),
        "seed": cfg.seed,
        "image": image,
        "query": query,
        "iou": overlap.map(|o| o.iou()),
        "result": result.record(),
    });
    let text = json_text(&doc);
    write_text(&dir.join("result.json"), &text)?;
    Ok(text)
}

fn provider(cfg: &RunConfig) -> Result<Box<dyn BackendProvider>, CliError> {
    Ok(match cfg.backend {
        BackendKind::Oracle => Box::new(cfg.oracle),
        BackendKind::Remote => Box::new(RemoteProvider::new(
            cfg.remote.vlm.clone(),
            cfg.remote.sam.clone(),
        )?),
    })
}

/// Left-aligned plain-text table.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let s: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        s.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out += &line(
        widths
            .iter()
            .map(|w| &"----------------------------------------"[..(*w).min(40)])
            .collect(),
    );
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}

/// Writes `<name>.csv`, `<name>.jsonl` and the resolved configuration, and
/// returns the text table.
fn emit<R: Serialize>(
    cfg: &RunConfig,
    name: &str,
    header: &[&str],
    rows: Vec<Vec<String>>,
    records: &[R],
) -> Result<String, CliError> {
    let dir = &cfg.output_dir;
    write_run_config(cfg)?;
    let mut header_full: Vec<&str> = header.to_vec();
    header_full.push("seed");
    let rows_full: Vec<Vec<String>> = rows
        .iter()
        .cloned()
        .map(|mut r| {
            r.push(cfg.seed.to_string());
            r
        })
        .collect();
    write_csv(&dir.join(format!("{name}.csv")), &header_full, &rows_full)?;
    let mut lines: Vec<serde_json::Value> =
        vec![json!({"run_config": cfg.echo(), "seed": cfg.seed})];
    lines.extend(
        records
            .iter()
            .map(|r| serde_json::to_value(r).expect("record serializes")),
    );
    write_jsonl(&dir.join(format!("{name}.jsonl")), &lines)?;
    Ok(render_table(header, &rows))
}

fn dataset(manifest: &Path) -> Result<Vec<Sample>, CliError> {
    Ok(load_dataset(manifest)?)
}

fn cmd_eval(
    manifest: &Path,
    stage: pinpoint_pipeline::Stage,
    cfg: &RunConfig,
) -> Result<String, CliError> {
    let ds = dataset(manifest)?;
    let prov = provider(cfg)?;
    let recs = evaluate(&ds, prov.as_ref(), cfg.jobs, stage.as_str(), |s, b| {
        run_stage_config(&s.image, &s.query, stage, &cfg.pipeline, b)
    })?;
    let overlaps: Vec<Overlap> = recs.iter().map(|r| r.overlap()).collect();
    let m = summarize(&overlaps).map_err(BenchError::from)?;
    let failed = recs.iter().filter(|r| !r.errors.is_empty()).count();
    let mean_kept = recs.iter().map(|r| r.kept as f64).sum::<f64>() / recs.len() as f64;
    let header = [
        "stage",
        "samples",
        "ciou",
        "giou",
        "mean_kept",
        "records_with_errors",
    ];
    let rows = vec![vec![
        stage.to_string(),
        recs.len().to_string(),
        format!("{:.1}", 100.0 * m.ciou),
        format!("{:.1}", 100.0 * m.giou),
        format!("{mean_kept:.2}"),
        failed.to_string(),
    ]];
    emit(cfg, "eval", &header, rows, &recs)
}

fn cmd_ablate(manifest: &Path, kind: AblationKind, cfg: &RunConfig) -> Result<String, CliError> {
    let ds = dataset(manifest)?;
    let prov = provider(cfg)?;
    match kind {
        AblationKind::StageWalk => {
            let r = run_ablation_stage_walk(&ds, &cfg.pipeline, prov.as_ref(), cfg.jobs)?;
            emit(
                cfg,
                "stage_walk",
                &StageWalkReport::HEADER,
                r.csv_rows(),
                &r.records,
            )
        }
        AblationKind::CueDropout => {
            let r = run_cue_dropout(
                &ds,
                &cfg.pipeline,
                prov.as_ref(),
                &CueSetting::SUPPORTED,
                cfg.jobs,
            )?;
            emit(
                cfg,
                "cue_dropout",
                &CueDropoutReport::HEADER,
                r.csv_rows(),
                &r.records,
            )
        }
    }
}

fn scalars(grid: &[String]) -> Result<Vec<f64>, CliError> {
    grid.iter()
        .map(|g| {
            g.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("grid value `{g}`: {e}")))
        })
        .collect()
}

fn pairs(grid: &[String]) -> Result<Vec<(f64, f64)>, CliError> {
    grid.iter()
        .map(|g| {
            let (a, b) = g
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("grid value `{g}` must be `a:b`")))?;
            let v = scalars(&[a.to_string(), b.to_string()])?;
            Ok((v[0], v[1]))
        })
        .collect()
}

fn cmd_sweep(
    manifest: &Path,
    kind: SweepKind,
    grid: &[String],
    allowlists: &[Allowlist],
    cfg: &RunConfig,
) -> Result<String, CliError> {
    if kind != SweepKind::Filter && !allowlists.is_empty() {
        return Err(CliError::Config(
            "--allowlists only applies to the filter sweep".into(),
        ));
    }
    let axis = match kind {
        SweepKind::Filter => None,
        SweepKind::SigmaG if grid.is_empty() => Some(SweepAxis::published_sigma_g()),
        SweepKind::SigmaG => Some(SweepAxis::SigmaG(scalars(grid)?)),
        SweepKind::Lambdas if grid.is_empty() => Some(SweepAxis::published_lambdas()),
        SweepKind::Lambdas => Some(SweepAxis::Lambdas(pairs(grid)?)),
        SweepKind::Clip if grid.is_empty() => Some(SweepAxis::published_clip()),
        SweepKind::Clip => Some(SweepAxis::Clip(pairs(grid)?)),
    };
    let ds = dataset(manifest)?;
    let prov = provider(cfg)?;
    match axis {
        None => {
            let taus = if grid.is_empty() {
                DEFAULT_TAUS.to_vec()
            } else {
                scalars(grid)?
            };
            let allow = if allowlists.is_empty() {
                vec![Allowlist::Both, Allowlist::Positive, Allowlist::Negative]
            } else {
                allowlists.to_vec()
            };
            let r = run_filter_sweep(&ds, &cfg.pipeline, prov.as_ref(), &taus, &allow, cfg.jobs)?;
            emit(
                cfg,
                "filter_sweep",
                &FilterSweepReport::HEADER,
                r.csv_rows(),
                &r.rows,
            )
        }
        Some(axis) => {
            let r = run_sensitivity_sweep(&ds, &cfg.pipeline, prov.as_ref(), &axis, cfg.jobs)?;
            let name = format!("sweep_{}", axis.name());
            emit(
                cfg,
                &name,
                &SensitivityReport::HEADER,
                r.csv_rows(),
                &r.records,
            )
        }
    }
}

fn cmd_generate(
    count: usize,
    suite_seed: Option<u64>,
    size: Option<usize>,
    cfg: &RunConfig,
) -> Result<String, CliError> {
    if count == 0 {
        return Err(CliError::Config("count must be >= 1".into()));
    }
    let mut suite = SuiteSpec::standard();
    suite.count = count;
    if let Some(s) = suite_seed {
        suite.seed = s;
    }
    if let Some(s) = size {
        suite.height = s;
        suite.width = s;
    }
    let scenes = generate_suite(&suite)?;
    let manifest: PathBuf = write_suite(&cfg.output_dir, &scenes)?;
    write_text(&cfg.output_dir.join("suite.json"), &json_text(&suite))?;
    write_run_config(cfg)?;
    Ok(format!("{}\n", manifest.display()))
}
