use std::collections::BTreeSet;
use std::convert::Infallible;

use onscreen_core::calibration::{
    adjudicate_export, build_confusions, precision_factors, read_export, sample_tasks, write_export,
    AdjudicatedTask, ExportRow, FactorPair, GenderConfusion, InBoxAnswer, OutsideAnswer,
};
use onscreen_core::detection_io::{BBox, FaceDetection, FrameDetections, Gender};
use proptest::prelude::*;

fn lambdas() -> impl Strategy<Value = (f64, f64)> {
    (0.0f64..=1.0, 0.0f64..=1.0).prop_filter("identifiable", |(m, f)| m + f > 1.0 + 1e-6)
}

fn gender() -> impl Strategy<Value = Gender> {
    prop::sample::select(Gender::ALL.to_vec())
}

fn in_box() -> impl Strategy<Value = InBoxAnswer> {
    prop::sample::select(InBoxAnswer::ALL.to_vec())
}

fn outside() -> impl Strategy<Value = OutsideAnswer> {
    prop::sample::select(vec![OutsideAnswer::Yes, OutsideAnswer::No, OutsideAnswer::Doubt])
}

fn frame(movie: &str, ts: u64, g: Gender) -> FrameDetections {
    let face = FaceDetection {
        movie_id: movie.to_string(),
        frame_ts_ms: ts,
        bbox: BBox { x: 0.1, y: 0.1, w: 0.2, h: 0.2 },
        gender: g,
        confidence: None,
    };
    FrameDetections { movie_id: movie.to_string(), frame_ts_ms: ts, faces: vec![face] }
}

#[test]
fn table_one_factors_and_correction() {
    let gc = GenderConfusion::from_rows([304, 162, 18, 16], [75, 410, 8, 7]);
    let f = precision_factors(&gc).unwrap();
    assert!((f.lambda_female - 304.0 / 466.0).abs() < 1e-15);
    assert!((f.lambda_male - 410.0 / 485.0).abs() < 1e-15);
    let c = f.correct_ffr(0.3);
    assert!((c.value - ((1.0 - f.lambda_male) + (f.lambda_male + f.lambda_female - 1.0) * 0.3)).abs() < 1e-15);
    assert!(!c.clamped);
}

#[test]
fn non_identifiable_factors_are_rejected() {
    assert!(FactorPair::new(0.5, 0.5).is_err());
    assert!(FactorPair::new(0.3, 0.6).is_err());
    assert!(precision_factors(&GenderConfusion::from_rows([1, 1, 0, 0], [1, 1, 0, 0])).is_err());
}

proptest! {
    #[test]
    fn correction_is_affine_and_increasing((lm, lf) in lambdas(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let f = FactorPair::new(lm, lf).unwrap();
        let (ca, cb) = (f.correct_ffr(a), f.correct_ffr(b));
        if a < b {
            prop_assert!(ca.value <= cb.value);
        }
        if !ca.clamped && !cb.clamped {
            let mid = f.correct_ffr((a + b) / 2.0);
            prop_assert!(!mid.clamped);
            prop_assert!((mid.value - (ca.value + cb.value) / 2.0).abs() < 1e-12);
        }
        prop_assert!((0.0..=1.0).contains(&ca.value));
    }

    #[test]
    fn identity_factors_change_nothing(raw in 0.0f64..=1.0, nf in 0.0f64..1e6, nm in 0.0f64..1e6) {
        prop_assert_eq!(FactorPair::IDENTITY.correct_ffr(raw).value, raw);
        prop_assert_eq!(FactorPair::IDENTITY.correct_counts(nf, nm), (nf, nm));
    }

    #[test]
    fn corrected_counts_keep_the_total((lm, lf) in lambdas(), nf in 0.0f64..1e6, nm in 0.0f64..1e6) {
        let (f, m) = FactorPair::new(lm, lf).unwrap().correct_counts(nf, nm);
        prop_assert!((f + m - (nf + nm)).abs() <= 1e-9 * (nf + nm).max(1.0));
        prop_assert!(f >= 0.0 && m >= 0.0);
    }

    #[test]
    fn confusion_cells_account_for_every_task(
        tasks in prop::collection::vec((gender(), in_box(), prop::sample::select(vec![OutsideAnswer::Yes, OutsideAnswer::No])), 0..200)
    ) {
        let tasks: Vec<AdjudicatedTask> = tasks
            .into_iter()
            .enumerate()
            .map(|(i, (g, a, o))| AdjudicatedTask {
                task_id: format!("t{i}"),
                movie_id: format!("m{i}"),
                detected_gender: g,
                in_box: a,
                outside_box: o,
            })
            .collect();
        let (face, gc) = build_confusions(&tasks);
        prop_assert_eq!(face.total(), 2 * tasks.len() as u64);
        prop_assert_eq!(face.tp + face.fp, tasks.len() as u64);
        prop_assert_eq!(gc.total(), tasks.len() as u64);
        for g in Gender::ALL {
            prop_assert_eq!(gc.row(g).iter().sum::<u64>(), tasks.iter().filter(|t| t.detected_gender == g).count() as u64);
        }
    }

    #[test]
    fn export_round_trips_and_adjudication_is_consistent(
        rows in prop::collection::vec((0usize..15, in_box(), outside(), 0u32..3), 0..60)
    ) {
        let rows: Vec<ExportRow> = rows
            .into_iter()
            .map(|(t, a, o, r)| ExportRow {
                task_id: format!("task-{t:02}"),
                movie_id: format!("m{t}"),
                frame_ts_ms: 2000 * t as u64,
                detected_gender: if t % 2 == 0 { Gender::Female } else { Gender::Male },
                reviewer_id: format!("r{r}"),
                in_box: a,
                outside_box: o,
                submitted_at: "2024-01-01T00:00:00Z".into(),
            })
            .collect();
        let mut buf = Vec::new();
        write_export(&rows, &mut buf).unwrap();
        prop_assert_eq!(read_export(buf.as_slice()).unwrap(), rows.clone());

        let (kept, report) = adjudicate_export(&rows).unwrap();
        let distinct: BTreeSet<&str> = rows.iter().map(|r| r.task_id.as_str()).collect();
        prop_assert_eq!(report.tasks, distinct.len());
        prop_assert_eq!(report.adjudicated, kept.len());
        prop_assert!(kept.len() + report.tied_in_box.max(report.tied_outside_box + report.outside_doubt) <= report.tasks);
        for t in &kept {
            prop_assert!(t.outside_box != OutsideAnswer::Doubt);
            let votes = rows.iter().filter(|r| r.task_id == t.task_id && r.in_box == t.in_box).count();
            for other in InBoxAnswer::ALL.iter().filter(|&&a| a != t.in_box) {
                prop_assert!(rows.iter().filter(|r| r.task_id == t.task_id && r.in_box == *other).count() < votes);
            }
        }
    }

    #[test]
    fn sampled_tasks_are_balanced_and_from_distinct_movies(
        movies in prop::collection::vec((any::<bool>(), any::<bool>(), 1u64..4), 1..40),
        half in 1usize..10,
        seed in any::<u64>(),
    ) {
        let mut frames = Vec::new();
        for (i, (has_f, has_m, reps)) in movies.iter().enumerate() {
            let id = format!("m{i:02}");
            for r in 0..*reps {
                if *has_f { frames.push(frame(&id, 2000 * r, Gender::Female)); }
                if *has_m { frames.push(frame(&id, 2000 * r + 1000, Gender::Male)); }
            }
        }
        frames.sort_by(|a, b| (&a.movie_id, a.frame_ts_ms).cmp(&(&b.movie_id, b.frame_ts_ms)));
        let n = 2 * half;
        let run = || sample_tasks(frames.iter().cloned().map(Ok::<_, Infallible>), None, n, seed).unwrap();
        let female = movies.iter().filter(|m| m.0).count();
        let male = movies.iter().filter(|m| m.1).count();
        let distinct = movies.iter().filter(|m| m.0 || m.1).count();
        match run() {
            Ok(tasks) => {
                prop_assert_eq!(tasks.len(), n);
                let ids: BTreeSet<&str> = tasks.iter().map(|t| t.movie_id.as_str()).collect();
                prop_assert_eq!(ids.len(), n);
                prop_assert_eq!(tasks.iter().filter(|t| t.detected_gender == Gender::Female).count(), half);
                let task_ids: BTreeSet<&str> = tasks.iter().map(|t| t.task_id.as_str()).collect();
                prop_assert_eq!(task_ids.len(), n);
                for t in &tasks {
                    let source = frames.iter().find(|f| f.movie_id == t.movie_id && f.frame_ts_ms == t.frame_ts_ms).unwrap();
                    prop_assert_eq!(source.faces[0].gender, t.detected_gender);
                }
                prop_assert_eq!(run().unwrap(), tasks);
            }
            Err(_) => {
                // exact feasibility: enough of each gender and enough movies overall
                prop_assert!(female < half || male < half || distinct < n);
            }
        }
    }
}

#[test]
fn odd_or_zero_task_counts_are_rejected() {
    let frames = vec![frame("a", 0, Gender::Female), frame("b", 0, Gender::Male)];
    for n in [0, 1, 3] {
        assert!(sample_tasks(frames.iter().cloned().map(Ok::<_, Infallible>), None, n, 1).unwrap().is_err());
    }
}
