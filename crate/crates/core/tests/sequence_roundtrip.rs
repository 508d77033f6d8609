use eotrack::color::HsvImage;
use eotrack::feature;
use eotrack::feature::BoundingBox;
use eotrack::metrics;
use eotrack::sequence::{self, Motion, RunReport, SyntheticSpec, SyntheticTarget};
use eotrack::tracker::{self, TrackerConfig};
use proptest::prelude::*;

#[test]
fn synthetic_sequence_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec { frames: 8, ..SyntheticSpec::default() };
    let generated = sequence::generate_synthetic(&spec).unwrap();
    let path = sequence::write_sequence_dir(dir.path(), &generated).unwrap();
    let loaded = sequence::load_sequence(&path).unwrap();
    assert_eq!(loaded.spec.objects, generated.spec.objects);
    assert_eq!(loaded.spec.ground_truth, generated.spec.ground_truth);
    assert_eq!(loaded.spec.frame_count, 8);
    let frames: Vec<_> = loaded.frames().collect::<Result<_, _>>().unwrap();
    assert_eq!(frames, generated.frames);
}

#[test]
fn generation_is_deterministic_per_seed() {
    let spec = SyntheticSpec { frames: 4, ..SyntheticSpec::default() };
    let a = sequence::generate_synthetic(&spec).unwrap();
    let b = sequence::generate_synthetic(&spec).unwrap();
    assert_eq!(a.frames, b.frames);
    let c = sequence::generate_synthetic(&SyntheticSpec { seed: 2, ..spec }).unwrap();
    assert_ne!(a.frames, c.frames);
}

proptest! {
    #[test]
    fn ground_truth_text_round_trips(
        rows in prop::collection::vec((0u32..500, 0u32..500, 1u32..200, 1u32..200), 1..30)
    ) {
        let boxes: Vec<BoundingBox> = rows
            .iter()
            .map(|&(x, y, w, h)| BoundingBox::new(x as f64, y as f64, w as f64, h as f64).unwrap())
            .collect();
        let text = sequence::format_ground_truth(&boxes);
        let parsed = sequence::parse_ground_truth(&text, std::path::Path::new("gt.txt")).unwrap();
        prop_assert_eq!(parsed, boxes);
    }
}

#[test]
fn ground_truth_accepts_common_separators() {
    let path = std::path::Path::new("gt.txt");
    let comma = sequence::parse_ground_truth("11,21,30,40\n", path).unwrap();
    let tab = sequence::parse_ground_truth("11\t21\t30\t40\n", path).unwrap();
    let space = sequence::parse_ground_truth("11 21 30 40\n", path).unwrap();
    assert_eq!(comma, tab);
    assert_eq!(comma, space);
    assert_eq!(comma[0], BoundingBox::new(10.0, 20.0, 30.0, 40.0).unwrap());
    assert!(sequence::parse_ground_truth("1,2,3\n", path).is_err());
}

// red vs muted blue: hue, saturation and value bins are all disjoint
const PINNED_DISTANCE: f64 = 1.0;

fn two_hues() -> SyntheticSpec {
    SyntheticSpec {
        frames: 100,
        width: 240,
        height: 160,
        targets: vec![
            SyntheticTarget {
                width: 30,
                height: 30,
                color: sequence::object_color(0),
                start: [10.0, 20.0],
                motion: Motion::Linear { velocity: [1.0, 0.0] },
                occluder: None,
            },
            SyntheticTarget {
                width: 30,
                height: 30,
                color: sequence::object_color(1),
                start: [10.0, 100.0],
                motion: Motion::Linear { velocity: [1.0, 0.0] },
                occluder: None,
            },
        ],
        ..SyntheticSpec::default()
    }
}

fn template_distance(spec: &SyntheticSpec) -> f64 {
    let seq = sequence::generate_synthetic(spec).unwrap();
    let hsv = HsvImage::from_rgb(&seq.frames[0]);
    let h: Vec<_> = seq
        .spec
        .objects
        .iter()
        .map(|(_, b)| feature::compute_histogram(&hsv, b).unwrap())
        .collect();
    feature::bhattacharyya_distance(&h[0], &h[1]).unwrap()
}

#[test]
fn hue_alone_separates_templates_by_one_third() {
    // red vs green at equal saturation and value: only the hue block differs
    let spec = SyntheticSpec { noise_sigma: 0.0, ..two_hues() };
    assert!((template_distance(&spec) - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn distinct_hues_give_distant_templates() {
    let mut spec = two_hues();
    spec.targets[0].color = [220, 40, 40];
    spec.targets[1].color = [60, 80, 140];
    let d = template_distance(&spec);
    assert!(d > 0.5, "{d}");
    assert!((d - PINNED_DISTANCE).abs() < 1e-9, "{d}");
}

#[test]
fn outputs_have_one_row_per_object_frame_and_reparse() {
    let seq = sequence::generate_synthetic(&two_hues()).unwrap();
    let config = TrackerConfig { rng_seed: Some(2), ..TrackerConfig::mot() };
    let run = tracker::track_sequence(
        seq.frames.iter().cloned().map(Ok::<_, std::convert::Infallible>),
        &seq.spec.objects,
        &config,
    )
    .unwrap();
    let scores = metrics::score_trajectories(&run.trajectories, &seq.spec.ground_truth);
    let summary = metrics::summarize(&scores, &run.frame_times).unwrap();
    let records =
        sequence::build_records(&run.trajectories, &seq.spec.ground_truth, &run.frame_times);
    let report = RunReport {
        sequence: seq.spec.name.clone(),
        seed: 2,
        config: serde_json::to_value(&config).unwrap(),
        frames: 100,
        evaluations_per_object_frame: config.evaluations_per_object(),
        summary,
    };
    let dir = tempfile::tempdir().unwrap();
    let written = sequence::write_outputs(dir.path(), &report, &records, None).unwrap();
    assert!(written.annotated.is_empty());
    assert!(!dir.path().join("annotated").exists());
    let reread = sequence::read_frame_records(&written.frames_csv).unwrap();
    assert_eq!(reread.len(), 200);
    assert_eq!(reread, records);
    assert_eq!(sequence::read_report(&written.summary_json).unwrap(), report);
}

#[test]
fn truncated_ground_truth_limits_scoring_not_tracking() {
    let mut seq =
        sequence::generate_synthetic(&SyntheticSpec { frames: 10, ..SyntheticSpec::default() })
            .unwrap();
    seq.spec.ground_truth[0].truncate(6);
    let run = tracker::track_sequence(
        seq.frames.iter().cloned().map(Ok::<_, std::convert::Infallible>),
        &seq.spec.objects,
        &TrackerConfig { rng_seed: Some(1), ..TrackerConfig::mot() },
    )
    .unwrap();
    assert_eq!(run.trajectories[0].boxes.len(), 10);
    let scores = metrics::score_trajectories(&run.trajectories, &seq.spec.ground_truth);
    assert_eq!(scores[0].len(), 6);
    let records =
        sequence::build_records(&run.trajectories, &seq.spec.ground_truth, &run.frame_times);
    assert_eq!(records.len(), 10);
    assert!(records[6..].iter().all(|r| r.iou.is_none() && r.gt_x.is_none()));
}
