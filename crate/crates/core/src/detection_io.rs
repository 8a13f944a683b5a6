//! Face-detection records: the JSON-lines wire format, validation, a
//! streaming reader that yields frames in `(movie_id, frame_ts_ms)` order,
//! the external detector process protocol, and corpus summaries.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fs::File;
use std::io::{BufRead, BufReader, Lines, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A file may contain at most this share of invalid lines.
pub const MAX_INVALID_SHARE: f64 = 0.01;

const BOUNDS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Female, Gender::Male];

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

impl std::fmt::Display for Gender {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "female" => Ok(Gender::Female),
            "male" => Ok(Gender::Male),
            other => Err(format!("invalid gender {other:?}")),
        }
    }
}

/// Bounding box normalised to the frame, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceDetection {
    pub movie_id: String,
    pub frame_ts_ms: u64,
    pub bbox: BBox,
    pub gender: Gender,
    pub confidence: Option<f64>,
}

/// One line of the detection record format, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub movie_id: String,
    pub frame_ts_ms: i64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub gender: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl From<&FaceDetection> for DetectionRecord {
    fn from(d: &FaceDetection) -> Self {
        Self {
            movie_id: d.movie_id.clone(),
            frame_ts_ms: d.frame_ts_ms as i64,
            x: d.bbox.x,
            y: d.bbox.y,
            w: d.bbox.w,
            h: d.bbox.h,
            gender: d.gender.as_str().to_string(),
            confidence: d.confidence,
        }
    }
}

impl FaceDetection {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&DetectionRecord::from(self)).expect("detection record serialises")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Error, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationError {
    #[error("bounding box outside the frame")]
    OutOfBounds,
    #[error("bounding box has non-positive width or height")]
    NonPositiveBox,
    #[error("gender must be \"female\" or \"male\"")]
    InvalidGender,
    #[error("negative frame timestamp")]
    NegativeTimestamp,
    #[error("confidence outside [0, 1]")]
    InvalidConfidence,
    #[error("empty movie id")]
    EmptyMovieId,
    #[error("line is not a detection record")]
    Malformed,
}

pub fn validate_detection(rec: &DetectionRecord) -> Result<FaceDetection, ValidationError> {
    if rec.movie_id.is_empty() {
        return Err(ValidationError::EmptyMovieId);
    }
    if rec.frame_ts_ms < 0 {
        return Err(ValidationError::NegativeTimestamp);
    }
    let gender: Gender = rec.gender.parse().map_err(|_| ValidationError::InvalidGender)?;
    let (x, y, w, h) = (rec.x, rec.y, rec.w, rec.h);
    if [x, y, w, h].iter().any(|v| !v.is_finite()) {
        return Err(ValidationError::OutOfBounds);
    }
    if w <= 0.0 || h <= 0.0 {
        return Err(ValidationError::NonPositiveBox);
    }
    if x < 0.0 || y < 0.0 || x + w > 1.0 + BOUNDS_EPS || y + h > 1.0 + BOUNDS_EPS {
        return Err(ValidationError::OutOfBounds);
    }
    if let Some(c) = rec.confidence {
        if !(0.0..=1.0).contains(&c) {
            return Err(ValidationError::InvalidConfidence);
        }
    }
    Ok(FaceDetection {
        movie_id: rec.movie_id.clone(),
        frame_ts_ms: rec.frame_ts_ms as u64,
        bbox: BBox { x, y, w, h },
        gender,
        confidence: rec.confidence,
    })
}

pub fn parse_line(line: &str) -> Result<FaceDetection, ValidationError> {
    let rec: DetectionRecord = serde_json::from_str(line).map_err(|_| ValidationError::Malformed)?;
    validate_detection(&rec)
}

/// All faces detected on one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDetections {
    pub movie_id: String,
    pub frame_ts_ms: u64,
    pub faces: Vec<FaceDetection>,
}

impl FrameDetections {
    pub fn count(&self, gender: Gender) -> u32 {
        self.faces.iter().filter(|f| f.gender == gender).count() as u32
    }
}

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {invalid} of {total} lines invalid (limit 1%)")]
    CorruptInput { path: PathBuf, invalid: usize, total: usize },
    #[error("no detection files under {0}")]
    NoInput(PathBuf),
    #[error("cannot start detector {program:?}: {source}")]
    Spawn { program: String, source: std::io::Error },
    #[error("detector exited with {status}: {diagnostics}")]
    DetectorFailed { status: String, diagnostics: String },
    #[error("detector protocol violation: {0}")]
    ProtocolViolation(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReadTally {
    pub files: usize,
    pub lines: usize,
    pub valid: usize,
    pub invalid: usize,
    pub invalid_by_kind: BTreeMap<ValidationError, usize>,
}

impl ReadTally {
    fn record(&mut self, outcome: &Result<FaceDetection, ValidationError>) {
        self.lines += 1;
        match outcome {
            Ok(_) => self.valid += 1,
            Err(e) => {
                self.invalid += 1;
                *self.invalid_by_kind.entry(*e).or_insert(0) += 1;
            }
        }
    }

    fn merge(&mut self, other: &ReadTally) {
        self.files += other.files;
        self.lines += other.lines;
        self.valid += other.valid;
        self.invalid += other.invalid;
        for (k, v) in &other.invalid_by_kind {
            *self.invalid_by_kind.entry(*k).or_insert(0) += v;
        }
    }
}

#[derive(Debug, Clone)]
struct SourceFile {
    path: PathBuf,
    sorted: bool,
}

/// A validated set of detection files. Construction scans every file once
/// to tally invalid lines and to learn which files are already in
/// `(movie_id, frame_ts_ms)` order; [`DetectionReader::frames`] then merges
/// them. Sorted files are streamed, unsorted ones are sorted in memory one
/// file at a time.
#[derive(Debug)]
pub struct DetectionReader {
    sources: Vec<SourceFile>,
    tally: ReadTally,
}

pub fn read_detections(path: &Path) -> Result<DetectionReader, DetectionError> {
    let files = detection_files(path)?;
    let mut tally = ReadTally::default();
    let mut sources = Vec::with_capacity(files.len());
    for file in files {
        let (file_tally, sorted) = scan_file(&file)?;
        let total = file_tally.lines;
        if total > 0 && file_tally.invalid as f64 > MAX_INVALID_SHARE * total as f64 {
            return Err(DetectionError::CorruptInput { path: file, invalid: file_tally.invalid, total });
        }
        tally.merge(&file_tally);
        sources.push(SourceFile { path: file, sorted });
    }
    Ok(DetectionReader { sources, tally })
}

fn detection_files(path: &Path) -> Result<Vec<PathBuf>, DetectionError> {
    let io = |source| DetectionError::Io { path: path.to_path_buf(), source };
    let meta = std::fs::metadata(path).map_err(io)?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|source| DetectionError::Io { path: dir.clone(), source })? {
            let entry = entry.map_err(|source| DetectionError::Io { path: dir.clone(), source })?;
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "jsonl") {
                files.push(p);
            }
        }
    }
    if files.is_empty() {
        return Err(DetectionError::NoInput(path.to_path_buf()));
    }
    files.sort();
    Ok(files)
}

fn open_lines(path: &Path) -> Result<Lines<BufReader<File>>, DetectionError> {
    let file = File::open(path).map_err(|source| DetectionError::Io { path: path.to_path_buf(), source })?;
    Ok(BufReader::with_capacity(1 << 16, file).lines())
}

fn scan_file(path: &Path) -> Result<(ReadTally, bool), DetectionError> {
    let mut tally = ReadTally { files: 1, ..Default::default() };
    let mut sorted = true;
    let mut last: Option<(String, u64)> = None;
    for line in open_lines(path)? {
        let line = line.map_err(|source| DetectionError::Io { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = parse_line(&line);
        tally.record(&parsed);
        if let (Ok(d), true) = (&parsed, sorted) {
            if let Some((m, t)) = &last {
                if (m.as_str(), *t) > (d.movie_id.as_str(), d.frame_ts_ms) {
                    sorted = false;
                }
            }
            last = Some((d.movie_id.clone(), d.frame_ts_ms));
        }
    }
    Ok((tally, sorted))
}

impl DetectionReader {
    pub fn tally(&self) -> &ReadTally {
        &self.tally
    }

    pub fn files(&self) -> impl Iterator<Item = &Path> {
        self.sources.iter().map(|s| s.path.as_path())
    }

    /// One reader per file, sharing the scan already done.
    pub fn per_file(&self) -> Vec<DetectionReader> {
        self.sources
            .iter()
            .map(|s| DetectionReader { sources: vec![s.clone()], tally: ReadTally { files: 1, ..Default::default() } })
            .collect()
    }

    /// Frames in `(movie_id, frame_ts_ms)` order. Faces within a frame keep
    /// file order, then line order.
    pub fn frames(&self) -> FrameIter {
        FrameIter::new(&self.sources)
    }
}

enum Source {
    Stream { path: PathBuf, lines: Lines<BufReader<File>> },
    Loaded(std::vec::IntoIter<FaceDetection>),
}

impl Source {
    fn next_valid(&mut self) -> Option<Result<FaceDetection, DetectionError>> {
        match self {
            Source::Loaded(it) => it.next().map(Ok),
            Source::Stream { path, lines } => loop {
                match lines.next()? {
                    Err(source) => return Some(Err(DetectionError::Io { path: path.clone(), source })),
                    Ok(line) => {
                        if let Ok(d) = parse_line(&line) {
                            return Some(Ok(d));
                        }
                    }
                }
            },
        }
    }
}

struct HeapEntry {
    key: (String, u64),
    source: usize,
    det: FaceDetection,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        (&self.key, self.source) == (&other.key, other.source)
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.key, self.source).cmp(&(&other.key, other.source))
    }
}

pub struct FrameIter {
    sources: Vec<Source>,
    heap: BinaryHeap<Reverse<HeapEntry>>,
    pending_error: Option<DetectionError>,
}

impl FrameIter {
    fn new(files: &[SourceFile]) -> Self {
        let mut it = Self { sources: Vec::with_capacity(files.len()), heap: BinaryHeap::new(), pending_error: None };
        for f in files {
            let source = if f.sorted {
                open_lines(&f.path).map(|lines| Source::Stream { path: f.path.clone(), lines })
            } else {
                load_sorted(&f.path).map(|v| Source::Loaded(v.into_iter()))
            };
            match source {
                Ok(s) => it.sources.push(s),
                Err(e) => {
                    it.pending_error = Some(e);
                    return it;
                }
            }
        }
        for i in 0..it.sources.len() {
            it.refill(i);
        }
        it
    }

    fn refill(&mut self, idx: usize) {
        match self.sources[idx].next_valid() {
            Some(Ok(det)) => {
                let key = (det.movie_id.clone(), det.frame_ts_ms);
                self.heap.push(Reverse(HeapEntry { key, source: idx, det }));
            }
            Some(Err(e)) => self.pending_error = Some(e),
            None => {}
        }
    }
}

fn load_sorted(path: &Path) -> Result<Vec<FaceDetection>, DetectionError> {
    let mut dets = Vec::new();
    for line in open_lines(path)? {
        let line = line.map_err(|source| DetectionError::Io { path: path.to_path_buf(), source })?;
        if let Ok(d) = parse_line(&line) {
            dets.push(d);
        }
    }
    dets.sort_by(|a, b| (&a.movie_id, a.frame_ts_ms).cmp(&(&b.movie_id, b.frame_ts_ms)));
    Ok(dets)
}

impl Iterator for FrameIter {
    type Item = Result<FrameDetections, DetectionError>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(e) = self.pending_error.take() {
            self.heap.clear();
            return Some(Err(e));
        }
        let Reverse(first) = self.heap.pop()?;
        self.refill(first.source);
        let key = first.key;
        let mut faces = vec![first.det];
        while self.heap.peek().is_some_and(|Reverse(e)| e.key == key) {
            let Reverse(e) = self.heap.pop().expect("peeked");
            self.refill(e.source);
            faces.push(e.det);
        }
        if let Some(e) = self.pending_error.take() {
            self.heap.clear();
            return Some(Err(e));
        }
        Some(Ok(FrameDetections { movie_id: key.0, frame_ts_ms: key.1, faces }))
    }
}

/// Result of one detector run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectorRun {
    pub frames_sent: usize,
    pub records: usize,
    pub rejected: usize,
    pub diagnostics: String,
}

/// Sends one frame path per line to `argv` on stdin and reads detection
/// records back from stdout; a blank line closes each frame. Valid records
/// go to `sink`; schema-valid but out-of-range records are counted as
/// rejected. Any other output line, a record for the wrong frame, or a
/// wrong number of frame terminators is a protocol violation.
pub fn run_external_detector(
    argv: &[String],
    frames: &[(String, u64, PathBuf)],
    mut sink: impl FnMut(FaceDetection),
) -> Result<DetectorRun, DetectionError> {
    let (program, args) = argv
        .split_first()
        .ok_or_else(|| DetectionError::ProtocolViolation("empty detector command".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| DetectionError::Spawn { program: program.clone(), source })?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let paths: Vec<String> = frames.iter().map(|(_, _, p)| p.to_string_lossy().into_owned()).collect();
    let writer = std::thread::spawn(move || {
        for p in paths {
            // a detector that exits early closes the pipe; its exit status
            // is reported instead
            if writeln!(stdin, "{p}").is_err() {
                break;
            }
        }
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let diag_reader = std::thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr.read_to_string(&mut buf);
        buf
    });

    let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
    let mut run = DetectorRun { frames_sent: frames.len(), ..Default::default() };
    let mut frame_idx = 0usize;
    let mut violation = None;
    for line in stdout.lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                violation = Some(format!("unreadable output: {e}"));
                break;
            }
        };
        if line.trim().is_empty() {
            frame_idx += 1;
            continue;
        }
        let Ok(rec) = serde_json::from_str::<DetectionRecord>(&line) else {
            violation = Some(format!("non-record output line: {}", truncate(&line, 120)));
            break;
        };
        let Some((movie, ts, _)) = frames.get(frame_idx) else {
            violation = Some("record after the last frame".into());
            break;
        };
        if rec.movie_id != *movie || rec.frame_ts_ms != *ts as i64 {
            violation = Some(format!(
                "record for {}@{} while processing {}@{}",
                rec.movie_id, rec.frame_ts_ms, movie, ts
            ));
            break;
        }
        match validate_detection(&rec) {
            Ok(d) => {
                run.records += 1;
                sink(d);
            }
            Err(_) => run.rejected += 1,
        }
    }
    if violation.is_some() {
        let _ = child.kill();
    }
    let status = child.wait().map_err(|source| DetectionError::Spawn { program: program.clone(), source })?;
    let _ = writer.join();
    run.diagnostics = diag_reader.join().unwrap_or_default();
    if let Some(v) = violation {
        return Err(DetectionError::ProtocolViolation(v));
    }
    if !status.success() {
        return Err(DetectionError::DetectorFailed {
            status: status.to_string(),
            diagnostics: truncate(run.diagnostics.trim(), 2000).to_string(),
        });
    }
    if frame_idx != frames.len() {
        return Err(DetectionError::ProtocolViolation(format!(
            "expected {} frame terminators, got {}",
            frames.len(),
            frame_idx
        )));
    }
    Ok(run)
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Corpus-level detection totals. Merging summaries of disjoint movie sets
/// is associative and commutative.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub faces: u64,
    pub frames_with_faces: u64,
    pub female: u64,
    pub male: u64,
    pub faces_per_movie: BTreeMap<String, u64>,
}

impl DetectionSummary {
    pub fn add_frame(&mut self, frame: &FrameDetections) {
        let n = frame.faces.len() as u64;
        if n == 0 {
            return;
        }
        self.faces += n;
        self.frames_with_faces += 1;
        let female = u64::from(frame.count(Gender::Female));
        self.female += female;
        self.male += n - female;
        *self.faces_per_movie.entry(frame.movie_id.clone()).or_insert(0) += n;
    }

    pub fn merge(&mut self, other: &DetectionSummary) {
        self.faces += other.faces;
        self.frames_with_faces += other.frames_with_faces;
        self.female += other.female;
        self.male += other.male;
        for (k, v) in &other.faces_per_movie {
            *self.faces_per_movie.entry(k.clone()).or_insert(0) += v;
        }
    }

    pub fn movies(&self) -> usize {
        self.faces_per_movie.len()
    }

    /// Mean and population standard deviation of faces per movie.
    pub fn faces_per_movie_stats(&self) -> (f64, f64) {
        let n = self.faces_per_movie.len();
        if n == 0 {
            return (0.0, 0.0);
        }
        let mean = self.faces_per_movie.values().map(|&v| v as f64).sum::<f64>() / n as f64;
        let var = self.faces_per_movie.values().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n as f64;
        (mean, var.sqrt())
    }
}

pub fn summarize<E>(frames: impl IntoIterator<Item = Result<FrameDetections, E>>) -> Result<DetectionSummary, E> {
    let mut s = DetectionSummary::default();
    for f in frames {
        s.add_frame(&f?);
    }
    Ok(s)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn face(movie: &str, ts: u64, gender: Gender, x: f64, y: f64, w: f64, h: f64) -> FaceDetection {
        FaceDetection { movie_id: movie.into(), frame_ts_ms: ts, bbox: BBox { x, y, w, h }, gender, confidence: None }
    }

    fn record(x: f64, y: f64, w: f64, h: f64, gender: &str) -> DetectionRecord {
        DetectionRecord { movie_id: "m".into(), frame_ts_ms: 0, x, y, w, h, gender: gender.into(), confidence: None }
    }

    #[test]
    fn validation_rules() {
        assert!(validate_detection(&record(0.1, 0.1, 0.2, 0.3, "female")).is_ok());
        assert_eq!(validate_detection(&record(0.5, 0.1, 0.7, 0.3, "male")), Err(ValidationError::OutOfBounds));
        assert_eq!(validate_detection(&record(0.1, 0.1, 0.2, 0.3, "unknown")), Err(ValidationError::InvalidGender));
        assert_eq!(validate_detection(&record(0.1, 0.1, 0.0, 0.3, "male")), Err(ValidationError::NonPositiveBox));
        assert_eq!(validate_detection(&record(-0.1, 0.1, 0.2, 0.3, "male")), Err(ValidationError::OutOfBounds));
        let mut r = record(0.1, 0.1, 0.2, 0.3, "male");
        r.frame_ts_ms = -5;
        assert_eq!(validate_detection(&r), Err(ValidationError::NegativeTimestamp));
        let mut r = record(0.1, 0.1, 0.2, 0.3, "male");
        r.confidence = Some(1.5);
        assert_eq!(validate_detection(&r), Err(ValidationError::InvalidConfidence));
        // a box touching the far edge is fine
        assert!(validate_detection(&record(0.7, 0.0, 0.3, 1.0, "male")).is_ok());
    }

    #[test]
    fn wire_format_keys() {
        let mut d = face("tt1", 2000, Gender::Female, 0.1, 0.2, 0.3, 0.4);
        assert_eq!(
            d.to_json_line(),
            r#"{"movie_id":"tt1","frame_ts_ms":2000,"x":0.1,"y":0.2,"w":0.3,"h":0.4,"gender":"female"}"#
        );
        d.confidence = Some(0.9);
        assert!(d.to_json_line().ends_with(r#""gender":"female","confidence":0.9}"#));
        assert_eq!(parse_line(&d.to_json_line()).unwrap(), d);
    }

    fn write_lines(path: &Path, lines: &[String]) {
        std::fs::write(path, lines.join("\n") + "\n").unwrap();
    }

    #[test]
    fn groups_records_into_frames() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        write_lines(
            &p,
            &[
                face("m", 2000, Gender::Male, 0.1, 0.1, 0.1, 0.1).to_json_line(),
                face("m", 0, Gender::Female, 0.1, 0.1, 0.1, 0.1).to_json_line(),
                face("m", 2000, Gender::Female, 0.5, 0.1, 0.1, 0.1).to_json_line(),
            ],
        );
        let reader = read_detections(&p).unwrap();
        let frames: Vec<_> = reader.frames().collect::<Result<_, _>>().unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].frame_ts_ms, 0);
        assert_eq!(frames[1].faces.len(), 2);
        assert_eq!(reader.tally().invalid, 0);
    }

    #[test]
    fn tolerates_one_percent_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        let mut lines: Vec<String> =
            (0..99).map(|i| face("m", i * 2000, Gender::Male, 0.1, 0.1, 0.1, 0.1).to_json_line()).collect();
        lines.insert(50, "{not json".into());
        write_lines(&p, &lines);
        let reader = read_detections(&p).unwrap();
        assert_eq!(reader.tally().invalid, 1);
        assert_eq!(reader.frames().count(), 99);
    }

    #[test]
    fn rejects_corrupt_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        let mut lines: Vec<String> =
            (0..95).map(|i| face("m", i * 2000, Gender::Male, 0.1, 0.1, 0.1, 0.1).to_json_line()).collect();
        lines.extend((0..5).map(|_| "garbage".to_string()));
        write_lines(&p, &lines);
        assert!(matches!(
            read_detections(&p),
            Err(DetectionError::CorruptInput { invalid: 5, total: 100, .. })
        ));
    }

    #[test]
    fn merges_directory_in_key_order() {
        let dir = tempfile::tempdir().unwrap();
        write_lines(
            &dir.path().join("b.jsonl"),
            &[
                face("a", 4000, Gender::Male, 0.1, 0.1, 0.1, 0.1).to_json_line(),
                face("c", 0, Gender::Male, 0.1, 0.1, 0.1, 0.1).to_json_line(),
            ],
        );
        write_lines(
            &dir.path().join("a.jsonl"),
            &[
                face("b", 0, Gender::Female, 0.1, 0.1, 0.1, 0.1).to_json_line(),
                face("a", 0, Gender::Female, 0.1, 0.1, 0.1, 0.1).to_json_line(),
                face("a", 4000, Gender::Female, 0.2, 0.1, 0.1, 0.1).to_json_line(),
            ],
        );
        let reader = read_detections(dir.path()).unwrap();
        let keys: Vec<_> = reader
            .frames()
            .map(|f| {
                let f = f.unwrap();
                (f.movie_id, f.frame_ts_ms, f.faces.len())
            })
            .collect();
        assert_eq!(
            keys,
            [("a".into(), 0, 1), ("a".into(), 4000, 2), ("b".into(), 0, 1), ("c".into(), 0, 1)]
        );
    }

    #[test]
    fn summary_counts() {
        let frames = vec![
            FrameDetections {
                movie_id: "m".into(),
                frame_ts_ms: 0,
                faces: vec![
                    face("m", 0, Gender::Male, 0.1, 0.1, 0.1, 0.1),
                    face("m", 0, Gender::Female, 0.1, 0.1, 0.1, 0.1),
                ],
            },
            FrameDetections { movie_id: "m".into(), frame_ts_ms: 2000, faces: vec![face("m", 2000, Gender::Male, 0.1, 0.1, 0.1, 0.1)] },
        ];
        let s = summarize(frames.into_iter().map(Ok::<_, ()>)).unwrap();
        assert_eq!((s.faces, s.frames_with_faces, s.female, s.male), (3, 2, 1, 2));
        assert_eq!(s.faces_per_movie_stats(), (3.0, 0.0));

        let empty = summarize(std::iter::empty::<Result<FrameDetections, ()>>()).unwrap();
        assert_eq!(empty, DetectionSummary::default());
        assert_eq!(empty.faces_per_movie_stats(), (0.0, 0.0));
    }

    fn frame_list(n: usize) -> Vec<(String, u64, PathBuf)> {
        (0..n).map(|i| ("m".to_string(), i as u64 * 2000, PathBuf::from(format!("m/{:09}.jpg", i * 2000)))).collect()
    }

    fn sh(script: &str) -> Vec<String> {
        vec!["sh".into(), "-c".into(), script.into()]
    }

    #[test]
    fn detector_one_record_per_frame() {
        // derive the timestamp from the frame file name, as a real bridge would
        let script = r#"while read p; do t=$(basename "$p" .jpg); t=$(expr "$t" + 0); echo "{\"movie_id\":\"m\",\"frame_ts_ms\":$t,\"x\":0.1,\"y\":0.1,\"w\":0.2,\"h\":0.2,\"gender\":\"male\"}"; echo; done"#;
        let mut got = Vec::new();
        let run = run_external_detector(&sh(script), &frame_list(4), |d| got.push(d)).unwrap();
        assert_eq!(run.records, 4);
        assert_eq!(got.len(), 4);
        assert_eq!(got[3].frame_ts_ms, 6000);
    }

    #[test]
    fn detector_prose_is_protocol_violation() {
        let script = "while read p; do echo 'I found a face!'; echo; done";
        let err = run_external_detector(&sh(script), &frame_list(2), |_| {}).unwrap_err();
        assert!(matches!(err, DetectionError::ProtocolViolation(_)), "{err}");
    }

    #[test]
    fn detector_failure_carries_diagnostics() {
        let err = run_external_detector(&sh("echo 'model missing' >&2; exit 1"), &frame_list(2), |_| {}).unwrap_err();
        match err {
            DetectionError::DetectorFailed { diagnostics, .. } => assert_eq!(diagnostics, "model missing"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn detector_missing_terminators() {
        let err = run_external_detector(&sh("cat > /dev/null"), &frame_list(3), |_| {}).unwrap_err();
        assert!(matches!(err, DetectionError::ProtocolViolation(m) if m.contains("expected 3")));
    }
}
