use std::collections::BTreeSet;
use std::path::Path;

use onscreen_core::detection_io::{
    parse_line, read_detections, summarize, BBox, DetectionError, DetectionSummary, FaceDetection, FrameDetections,
    Gender,
};
use onscreen_core::sampling::{frame_relative_path, plan_for_duration, timestamp_ms};
use proptest::prelude::*;

fn arb_face() -> impl Strategy<Value = FaceDetection> {
    (
        0u8..4,
        0u64..20,
        prop::sample::select(Gender::ALL.to_vec()),
        0.0f64..0.5,
        0.0f64..0.5,
        0.01f64..0.5,
        0.01f64..0.5,
        prop::option::of(0.0f64..=1.0),
    )
        .prop_map(|(m, ts, gender, x, y, w, h, confidence)| FaceDetection {
            movie_id: format!("movie-{m}"),
            frame_ts_ms: ts * 2000,
            bbox: BBox { x, y, w, h },
            gender,
            confidence,
        })
}

fn write_lines(path: &Path, lines: &[String]) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, lines.join("\n") + "\n").unwrap();
}

fn read_all(path: &Path) -> Vec<FrameDetections> {
    read_detections(path).unwrap().frames().collect::<Result<_, _>>().unwrap()
}

fn sort_key(f: &FaceDetection) -> (String, u64, String) {
    (f.movie_id.clone(), f.frame_ts_ms, f.to_json_line())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_lines_round_trip(face in arb_face()) {
        let back = parse_line(&face.to_json_line()).unwrap();
        prop_assert_eq!(back, face);
    }

    #[test]
    fn frames_come_out_grouped_and_ordered(
        faces in prop::collection::vec(arb_face(), 1..120),
        files in 1usize..5,
    ) {
        let dir = tempfile::tempdir().unwrap();
        for (i, chunk) in faces.chunks(faces.len().div_ceil(files)).enumerate() {
            let lines: Vec<String> = chunk.iter().map(|f| f.to_json_line()).collect();
            write_lines(&dir.path().join(format!("part{i}/d.jsonl")), &lines);
        }
        let frames = read_all(dir.path());
        prop_assert_eq!(&frames, &read_all(dir.path()));
        for w in frames.windows(2) {
            prop_assert!((&w[0].movie_id, w[0].frame_ts_ms) < (&w[1].movie_id, w[1].frame_ts_ms));
        }
        let mut got: Vec<_> = frames.iter().flat_map(|f| {
            f.faces.iter().map(move |x| {
                assert_eq!((&x.movie_id, x.frame_ts_ms), (&f.movie_id, f.frame_ts_ms));
                sort_key(x)
            })
        }).collect();
        let mut want: Vec<_> = faces.iter().map(sort_key).collect();
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn summaries_of_disjoint_movies_merge(faces in prop::collection::vec(arb_face(), 0..120)) {
        let dir = tempfile::tempdir().unwrap();
        let movies: BTreeSet<&str> = faces.iter().map(|f| f.movie_id.as_str()).collect();
        prop_assume!(!movies.is_empty());
        let mut merged = DetectionSummary::default();
        for m in &movies {
            let lines: Vec<String> = faces.iter().filter(|f| f.movie_id == *m).map(|f| f.to_json_line()).collect();
            let path = dir.path().join(format!("{m}.jsonl"));
            write_lines(&path, &lines);
            merged.merge(&summarize(read_detections(&path).unwrap().frames()).unwrap());
        }
        let whole = summarize(read_detections(dir.path()).unwrap().frames()).unwrap();
        prop_assert_eq!(&whole, &merged);
        prop_assert_eq!(whole.faces, faces.len() as u64);
        prop_assert_eq!(whole.female + whole.male, whole.faces);
        prop_assert_eq!(whole.movies(), movies.len());
    }

    #[test]
    fn invalid_share_above_one_percent_is_rejected(valid in 1usize..400, invalid in 0usize..8) {
        let dir = tempfile::tempdir().unwrap();
        let mut lines: Vec<String> = (0..valid)
            .map(|i| FaceDetection {
                movie_id: "m".into(),
                frame_ts_ms: 2000 * i as u64,
                bbox: BBox { x: 0.1, y: 0.1, w: 0.2, h: 0.2 },
                gender: Gender::Female,
                confidence: None,
            }.to_json_line())
            .collect();
        for i in 0..invalid {
            lines.insert((i * 7) % (lines.len() + 1), r#"{"movie_id":"m","frame_ts_ms":0,"x":0.9,"y":0.1,"w":0.5,"h":0.2,"gender":"male"}"#.into());
        }
        let path = dir.path().join("d.jsonl");
        write_lines(&path, &lines);
        let total = valid + invalid;
        match read_detections(&path) {
            Ok(reader) => {
                prop_assert!(invalid * 100 <= total);
                prop_assert_eq!(reader.tally().invalid, invalid);
                prop_assert_eq!(reader.tally().valid, valid);
                let frames: Vec<_> = reader.frames().collect::<Result<_, _>>().unwrap();
                prop_assert_eq!(frames.len(), valid);
            }
            Err(DetectionError::CorruptInput { invalid: i, total: t, .. }) => {
                prop_assert!(invalid * 100 > total);
                prop_assert_eq!((i, t), (invalid, total));
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn sampling_plan_covers_the_runtime(duration in 0.5f64..20_000.0, interval in 0.25f64..30.0) {
        let plan = plan_for_duration("m", duration, interval).unwrap();
        let expected = (duration / interval).ceil() as usize;
        prop_assert!(plan.len().abs_diff(expected) <= 1);
        prop_assert!(plan.timestamps.iter().all(|&t| t < duration));
        prop_assert!(plan.timestamps.last().unwrap() + interval >= duration);
        prop_assert_eq!(plan.timestamps[0], 0.0);
        let paths: BTreeSet<_> = plan.timestamps.iter().map(|&t| frame_relative_path("m", t)).collect();
        prop_assert_eq!(paths.len(), plan.len());
        prop_assert!(plan.timestamps.windows(2).all(|w| timestamp_ms(w[0]) < timestamp_ms(w[1])));
    }
}

#[test]
fn bad_inputs_are_reported() {
    assert!(plan_for_duration("m", 100.0, 0.0).is_err());
    assert!(plan_for_duration("m", 0.0, 2.0).is_err());
    assert!(plan_for_duration("m", f64::NAN, 2.0).is_err());
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(read_detections(dir.path()), Err(DetectionError::NoInput(_))));
}
