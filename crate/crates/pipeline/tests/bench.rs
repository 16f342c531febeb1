//! Metrics, scenes, dataset I/O and the runners on small seeded suites.

use proptest::prelude::*;

use pinpoint_core::{pinpoint, PinpointParams};
use pinpoint_pipeline::bench::{
    ciou, generate_scene, generate_suite, giou, load_dataset, run_ablation_stage_walk,
    run_cue_dropout, run_filter_sweep, run_sensitivity_sweep, summarize, write_suite, BenchError,
    CueSetting, OracleProvider, Overlap, Sample, SceneSpec, SuiteSpec, SweepAxis,
};
use pinpoint_pipeline::{Allowlist, PipelineConfig, Stage};

fn suite(count: usize) -> Vec<Sample> {
    let spec = SuiteSpec {
        count,
        ..SuiteSpec::standard()
    };
    generate_suite(&spec)
        .unwrap()
        .iter()
        .map(|s| s.to_sample())
        .collect()
}

fn ov(intersection: u64, union: u64) -> Overlap {
    Overlap {
        intersection,
        union,
    }
}

#[test]
fn metric_examples() {
    assert!(ciou(&[]).is_err() && giou(&[]).is_err());
    let third = summarize(&[ov(50, 150)]).unwrap();
    assert!((third.ciou - 1.0 / 3.0).abs() < 1e-15);
    assert!((third.giou - 1.0 / 3.0).abs() < 1e-15);
    let perfect = summarize(&[ov(30, 30), ov(7, 7)]).unwrap();
    assert_eq!((perfect.ciou, perfect.giou), (1.0, 1.0));
    // IoUs 1 and 0 with equal unions: the mean is 0.5 and the pooled ratio is
    // |G1| / (|G1| + |G2 u P2|) by counting.
    let two = [ov(40, 40), ov(0, 40)];
    assert_eq!(giou(&two).unwrap(), 0.5);
    assert_eq!(ciou(&two).unwrap(), 40.0 / 80.0);
}

proptest! {
    #[test]
    fn metrics_stay_in_unit_interval(pairs in prop::collection::vec((0u64..500, 0u64..500), 1..20)) {
        let o: Vec<Overlap> = pairs.iter().map(|&(i, extra)| ov(i, i + extra)).collect();
        let m = summarize(&o).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.ciou));
        prop_assert!((0.0..=1.0).contains(&m.giou));
    }

    #[test]
    fn equal_unions_make_ciou_and_giou_agree(union in 1u64..1000, inters in prop::collection::vec(0.0f64..=1.0, 1..20)) {
        let o: Vec<Overlap> = inters.iter().map(|f| ov((f * union as f64) as u64, union)).collect();
        let m = summarize(&o).unwrap();
        prop_assert!((m.ciou - m.giou).abs() < 1e-12);
    }

    #[test]
    fn metrics_ignore_record_order(pairs in prop::collection::vec((0u64..500, 1u64..500), 1..20)) {
        let o: Vec<Overlap> = pairs.iter().map(|&(i, extra)| ov(i, i + extra)).collect();
        let mut r = o.clone();
        r.reverse();
        prop_assert_eq!(ciou(&o).unwrap(), ciou(&r).unwrap());
        prop_assert!((giou(&o).unwrap() - giou(&r).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn scenes_are_reproducible() {
    let spec = SceneSpec::default();
    assert_eq!(
        generate_scene(&spec, 5).unwrap(),
        generate_scene(&spec, 5).unwrap()
    );
    assert_ne!(
        generate_scene(&spec, 5).unwrap().image,
        generate_scene(&spec, 6).unwrap().image
    );
}

#[test]
fn zero_overlap_keeps_distractors_disjoint() {
    let spec = SceneSpec {
        overlap: 0.0,
        distractors: 3,
        ..SceneSpec::default()
    };
    for seed in 0..20 {
        let s = generate_scene(&spec, seed).unwrap();
        assert!(s.target.count() > 0);
        for d in &s.distractors {
            let (i, _) = s.target.overlap_counts(d).unwrap();
            assert_eq!(i, 0, "seed {seed}");
        }
    }
}

#[test]
fn infeasible_specs_are_rejected() {
    let spec = SceneSpec {
        height: 16,
        width: 16,
        target_radius: (30.0, 40.0),
        ..SceneSpec::default()
    };
    assert!(matches!(generate_scene(&spec, 1), Err(BenchError::Spec(_))));
}

#[test]
fn clean_scene_first_point_hits_the_target() {
    let spec = SceneSpec {
        distractors: 0,
        texture: 0.0,
        clutter: 0,
        ..SceneSpec::default()
    };
    for seed in 0..10 {
        let s = generate_scene(&spec, seed).unwrap();
        let b = s.target.bounding_box().unwrap();
        let pts = pinpoint::<f64>(&s.image, &b, &PinpointParams::default()).unwrap();
        let p = pts[0].point;
        assert!(s.target.get(p.y as usize, p.x as usize), "seed {seed}");
    }
}

#[test]
fn suites_round_trip_through_the_manifest() {
    let spec = SuiteSpec {
        count: 4,
        ..SuiteSpec::standard()
    };
    let scenes = generate_suite(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_suite(dir.path(), &scenes).unwrap();
    let loaded = load_dataset(&manifest).unwrap();
    assert_eq!(loaded.len(), 4);
    for (s, l) in scenes.iter().zip(&loaded) {
        assert_eq!(
            (&s.id, &s.image, &s.target, &s.query),
            (&l.id, &l.image, &l.gt, &l.query)
        );
        assert_eq!(l.gt_box, s.target.bounding_box());
    }
}

#[test]
fn stage_walk_is_well_formed_even_for_one_scene() {
    let ds = suite(1);
    let r = run_ablation_stage_walk(
        &ds,
        &PipelineConfig::default(),
        &OracleProvider::default(),
        1,
    )
    .unwrap();
    let stages: Vec<Stage> = r.rows.iter().map(|r| r.stage).collect();
    assert_eq!(stages, Stage::ALL.to_vec());
    assert!(r.rows[0].delta_prev.is_none());
    assert!(r.rows[1..].iter().all(|r| r.delta_prev.is_some()));
    assert_eq!(r.records.len(), 5);
}

#[test]
fn runners_are_deterministic_across_repeats_and_thread_counts() {
    let ds = suite(12);
    let cfg = PipelineConfig::default();
    let p = OracleProvider::default();
    let a = run_ablation_stage_walk(&ds, &cfg, &p, 1).unwrap();
    let b = run_ablation_stage_walk(&ds, &cfg, &p, 1).unwrap();
    let c = run_ablation_stage_walk(&ds, &cfg, &p, 4).unwrap();
    let strip = |r: &pinpoint_pipeline::bench::StageWalkReport| {
        r.rows
            .iter()
            .map(|x| (x.stage, x.summary))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(strip(&a), strip(&c));
}

#[test]
fn filter_sweep_bookkeeping() {
    let ds = suite(12);
    let cfg = PipelineConfig::default();
    let taus = [0.0, 0.5, 0.9];
    let allow = [Allowlist::Both, Allowlist::Positive];
    let r = run_filter_sweep(&ds, &cfg, &OracleProvider::default(), &taus, &allow, 1).unwrap();
    assert_eq!(r.rows.len(), taus.len() * allow.len());
    let n = cfg.budget() as f64;
    for row in &r.rows {
        assert!(row.mean_kept <= n);
        let expect = if row.labeled == 0 {
            0.0
        } else {
            1.0 - row.kept as f64 / row.labeled as f64
        };
        assert!((row.filtered_fraction - expect).abs() < 1e-9);
    }
    let identity = r.row(0.0, Allowlist::Both).unwrap();
    assert_eq!(identity.filtered_fraction, 0.0);
    assert_eq!(identity.kept, identity.labeled);
    assert!(run_filter_sweep(&ds, &cfg, &OracleProvider::default(), &[1.5], &allow, 1).is_err());
}

#[test]
fn sensitivity_rows_match_the_grid_and_default_has_zero_delta() {
    let ds = suite(6);
    let cfg = PipelineConfig::default();
    let axis = SweepAxis::SigmaG(vec![0.1, 0.25, 0.45]);
    let r = run_sensitivity_sweep(&ds, &cfg, &OracleProvider::default(), &axis, 1).unwrap();
    assert_eq!(r.rows.len(), 3);
    let d = r.rows.iter().find(|r| r.is_default).unwrap();
    assert_eq!(d.delta, 0.0);
    assert!(run_sensitivity_sweep(
        &ds,
        &cfg,
        &OracleProvider::default(),
        &SweepAxis::SigmaG(vec![]),
        1
    )
    .is_err());
}

#[test]
fn cue_dropout_rejects_saliency_removal() {
    let ds = suite(2);
    let cfg = PipelineConfig::default();
    assert!(matches!(
        run_cue_dropout(&ds, &cfg, &OracleProvider::default(), &[CueSetting::NoS], 1),
        Err(BenchError::Unsupported(_))
    ));
    let r = run_cue_dropout(
        &ds,
        &cfg,
        &OracleProvider::default(),
        &CueSetting::SUPPORTED,
        1,
    )
    .unwrap();
    assert_eq!(r.rows.len(), 4);
    assert_eq!(r.rows[0].delta, 0.0);
}

#[test]
fn empty_datasets_are_errors() {
    let cfg = PipelineConfig::default();
    assert!(matches!(
        run_ablation_stage_walk(&[], &cfg, &OracleProvider::default(), 1),
        Err(BenchError::EmptyDataset)
    ));
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    std::fs::write(&m, "\n").unwrap();
    assert!(matches!(load_dataset(&m), Err(BenchError::EmptyDataset)));
}
