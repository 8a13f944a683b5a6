use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use onscreen_annotate::{router, AppState, ReviewStore};
use onscreen_core::calibration::{adjudicate_export, build_confusions, read_export, AnnotationTask, EXPORT_COLUMNS};
use onscreen_core::detection_io::{BBox, Gender};
use serde_json::{json, Value};
use tower::ServiceExt;

fn tasks(n: usize) -> Vec<AnnotationTask> {
    (0..n)
        .map(|i| AnnotationTask {
            task_id: format!("task-{i:02}"),
            movie_id: format!("tt{i:07}"),
            frame_ts_ms: 4000,
            bbox: BBox { x: 0.25, y: 0.25, w: 0.5, h: 0.5 },
            detected_gender: if i % 2 == 0 { Gender::Female } else { Gender::Male },
            frame: format!("tt{i:07}/000004000.jpg"),
        })
        .collect()
}

struct Fixture {
    app: Router,
    _dir: tempfile::TempDir,
}

fn fixture(n: usize) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    for t in tasks(n).iter().take(1) {
        let p = frames.join(&t.frame);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, b"\xff\xd8\xff\xe0fakejpeg").unwrap();
    }
    let statics = dir.path().join("static");
    std::fs::create_dir_all(&statics).unwrap();
    std::fs::write(statics.join("index.html"), "<html>review</html>").unwrap();
    let store = ReviewStore::open(tasks(n), &dir.path().join("reviews.jsonl")).unwrap();
    let app = router(AppState::new(store, frames, 7), Some(statics));
    Fixture { app, _dir: dir }
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post_review(body: Value) -> Request<Body> {
    Request::post("/api/review").header("content-type", "application/json").body(Body::from(body.to_string())).unwrap()
}

#[tokio::test]
async fn next_task_returns_a_task_document() {
    let f = fixture(3);
    let (status, body) = call(&f.app, get("/api/task/next?reviewer=r1")).await;
    assert_eq!(status, StatusCode::OK);
    let task: AnnotationTask = serde_json::from_slice(&body).unwrap();
    assert!(task.task_id.starts_with("task-"));
    let (status, _) = call(&f.app, get("/api/task/next")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn review_flow_until_done() {
    let f = fixture(2);
    for _ in 0..2 {
        let (_, body) = call(&f.app, get("/api/task/next?reviewer=r1")).await;
        let task: AnnotationTask = serde_json::from_slice(&body).unwrap();
        let (status, _) = call(
            &f.app,
            post_review(json!({"task_id": task.task_id, "reviewer_id": "r1", "in_box": "female", "outside_box": "no"})),
        )
        .await;
        assert_eq!(status, StatusCode::NO_CONTENT);
    }
    let (_, body) = call(&f.app, get("/api/task/next?reviewer=r1")).await;
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap(), json!({"done": true}));
    let (_, body) = call(&f.app, get("/api/progress")).await;
    let p: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(p["total_reviews"], 2);
    assert_eq!(p["mean_reviews_per_task"], 1.0);
}

#[tokio::test]
async fn rejects_unknown_task_and_bad_enum() {
    let f = fixture(1);
    let (status, _) =
        call(&f.app, post_review(json!({"task_id": "x", "reviewer_id": "r", "in_box": "male", "outside_box": "no"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, body) = call(
        &f.app,
        post_review(json!({"task_id": "task-00", "reviewer_id": "r", "in_box": "cat", "outside_box": "no"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(String::from_utf8_lossy(&body).contains("error"));
    let (_, body) = call(&f.app, get("/api/progress")).await;
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["log_entries"], 0);
}

#[tokio::test]
async fn frames_are_served_by_task() {
    let f = fixture(2);
    let (status, body) = call(&f.app, get("/api/frame/task-00")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.starts_with(b"\xff\xd8"));
    let (status, _) = call(&f.app, get("/api/frame/task-01")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&f.app, get("/api/frame/nope")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn static_files_are_the_fallback() {
    let f = fixture(1);
    let (status, body) = call(&f.app, get("/index.html")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<html>review</html>");
}

/// Ten scripted answers, exported and adjudicated into the confusion
/// matrices worked out by hand below.
#[tokio::test]
async fn export_feeds_calibration() {
    let f = fixture(10);
    // task, in_box, outside_box ; even tasks detected female, odd male
    let answers = [
        ("task-00", "female", "no"),
        ("task-01", "male", "no"),
        ("task-02", "male", "yes"),
        ("task-03", "male", "no"),
        ("task-04", "female", "no"),
        ("task-05", "female", "yes"),
        ("task-06", "no_face", "no"),
        ("task-07", "male", "no"),
        ("task-08", "doubt", "no"),
        ("task-09", "male", "yes"),
    ];
    for (i, (task, in_box, outside)) in answers.iter().enumerate() {
        let body = json!({
            "task_id": task, "reviewer_id": "r1", "in_box": in_box, "outside_box": outside,
            "submitted_at": format!("2021-03-01T10:00:{i:02}Z"),
        });
        assert_eq!(call(&f.app, post_review(body)).await.0, StatusCode::NO_CONTENT);
    }
    let (status, body) = call(&f.app, get("/api/export")).await;
    assert_eq!(status, StatusCode::OK);
    let text = String::from_utf8(body.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), EXPORT_COLUMNS.join(","));
    assert_eq!(text.lines().count(), 11);
    assert!(text.contains("task-02,tt0000002,4000,female,r1,male,yes,2021-03-01T10:00:02Z"));

    let rows = read_export(&body[..]).unwrap();
    let (adjudicated, report) = adjudicate_export(&rows).unwrap();
    assert_eq!(report.adjudicated, 10);
    let (face, gender) = build_confusions(&adjudicated);
    assert_eq!((face.tp, face.fp, face.fn_, face.tn), (9, 1, 3, 7));
    // detected female: female 2, male 1, doubt 1, no_face 1
    assert_eq!(gender.counts[0], [2, 1, 1, 1]);
    // detected male: female 1, male 4
    assert_eq!(gender.counts[1], [1, 4, 0, 0]);
}

#[tokio::test]
async fn resubmission_keeps_one_row() {
    let f = fixture(1);
    for in_box in ["female", "male"] {
        let body = json!({"task_id": "task-00", "reviewer_id": "r", "in_box": in_box, "outside_box": "doubt"});
        assert_eq!(call(&f.app, post_review(body)).await.0, StatusCode::NO_CONTENT);
    }
    let (_, body) = call(&f.app, get("/api/export")).await;
    let rows = read_export(&body[..]).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(serde_json::to_value(rows[0].in_box).unwrap(), "male");
    let (_, body) = call(&f.app, get("/api/progress")).await;
    let p: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!((p["total_reviews"].as_u64(), p["log_entries"].as_u64()), (Some(1), Some(2)));
}
