//! Human evaluation of the detector and the resulting label-noise correction.
//!
//! Reviewers see single-face frames and answer two questions: what is inside
//! the box, and is there an undetected face outside it. Majority answers
//! become two confusion matrices. The gender matrix gives the share of true
//! positives among faces detected as male (`lambda_male`) and as female
//! (`lambda_female`), which correct female face ratios and face counts.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusManifest, PeriodPartition};
use crate::detection_io::{BBox, FrameDetections, Gender};
use crate::sampling::frame_relative_path;
use crate::warnings::Warning;

pub const DEFAULT_TASK_COUNT: usize = 1000;
pub const DEFAULT_MIN_TASKS_PER_PERIOD: usize = 50;

/// Export CSV columns, in order.
pub const EXPORT_COLUMNS: [&str; 8] =
    ["task_id", "movie_id", "frame_ts_ms", "detected_gender", "reviewer_id", "in_box", "outside_box", "submitted_at"];

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("task count must be a positive even number, got {0}")]
    InvalidTaskCount(usize),
    #[error(
        "insufficient pool: need {per_gender} movies per detected gender and {needed} distinct movies; \
         have {female} female, {male} male, {distinct} distinct (shortfall female {female_short}, male {male_short})"
    )]
    InsufficientPool {
        per_gender: usize,
        needed: usize,
        female: usize,
        male: usize,
        distinct: usize,
        female_short: usize,
        male_short: usize,
    },
    #[error("no female/male answers in the {0} row")]
    EmptyRow(Gender),
    #[error("correction is not identifiable: lambda_male + lambda_female = {0} <= 1")]
    NonIdentifiable(f64),
    #[error("no correction factors for period {0:?}")]
    UnknownPeriod(String),
    #[error("task {task} belongs to movie {movie:?}, which is in no period")]
    UnmappedTask { task: String, movie: String },
    #[error("export: {0}")]
    Export(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InBoxAnswer {
    Female,
    Male,
    Doubt,
    NoFace,
}

impl InBoxAnswer {
    pub const ALL: [InBoxAnswer; 4] = [InBoxAnswer::Female, InBoxAnswer::Male, InBoxAnswer::Doubt, InBoxAnswer::NoFace];

    fn column(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutsideAnswer {
    Yes,
    No,
    Doubt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub movie_id: String,
    pub frame_ts_ms: u64,
    pub bbox: BBox,
    pub detected_gender: Gender,
    /// Frame image path relative to the frames directory.
    pub frame: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub task_id: String,
    pub reviewer_id: String,
    pub in_box: InBoxAnswer,
    pub outside_box: OutsideAnswer,
    pub submitted_at: String,
}

/// Draws `n` single-face frames, half detected female and half detected
/// male, every one from a distinct movie. Deterministic for a fixed seed
/// and input order.
///
/// Each (movie, detected gender) keeps one uniformly drawn candidate frame,
/// so memory grows with the number of movies only. Movies are then visited
/// in shuffled order and assigned to a gender that still needs tasks; if
/// that random pass cannot fill both halves, a feasibility-first pass
/// (single-gender movies before dual ones) takes over.
pub fn sample_tasks<E>(
    frames: impl IntoIterator<Item = Result<FrameDetections, E>>,
    manifest: Option<&CorpusManifest>,
    n: usize,
    seed: u64,
) -> Result<Result<Vec<AnnotationTask>, CalibrationError>, E> {
    if n == 0 || n % 2 == 1 {
        return Ok(Err(CalibrationError::InvalidTaskCount(n)));
    }
    let per_gender = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (movie, gender) -> (candidates seen, chosen frame)
    let mut reservoirs: BTreeMap<(String, Gender), (u64, FrameDetections)> = BTreeMap::new();
    for frame in frames {
        let frame = frame?;
        if frame.faces.len() != 1 {
            continue;
        }
        if manifest.is_some_and(|m| m.get(&frame.movie_id).is_none()) {
            continue;
        }
        let key = (frame.movie_id.clone(), frame.faces[0].gender);
        match reservoirs.get_mut(&key) {
            None => {
                reservoirs.insert(key, (1, frame));
            }
            Some((seen, chosen)) => {
                *seen += 1;
                if rng.gen_range(0..*seen) == 0 {
                    *chosen = frame;
                }
            }
        }
    }

    let mut options: BTreeMap<String, (bool, bool)> = BTreeMap::new();
    for (movie, gender) in reservoirs.keys() {
        let e = options.entry(movie.clone()).or_default();
        match gender {
            Gender::Female => e.0 = true,
            Gender::Male => e.1 = true,
        }
    }
    let female = options.values().filter(|o| o.0).count();
    let male = options.values().filter(|o| o.1).count();
    let distinct = options.len();
    if female < per_gender || male < per_gender || distinct < n {
        return Ok(Err(CalibrationError::InsufficientPool {
            per_gender,
            needed: n,
            female,
            male,
            distinct,
            female_short: per_gender.saturating_sub(female),
            male_short: per_gender.saturating_sub(male),
        }));
    }

    let mut movies: Vec<(&String, (bool, bool))> = options.iter().map(|(m, o)| (m, *o)).collect();
    movies.shuffle(&mut rng);
    let assignment = random_assignment(&movies, per_gender, &mut rng)
        .unwrap_or_else(|| feasible_assignment(&movies, per_gender));

    let mut tasks: Vec<AnnotationTask> = assignment
        .into_iter()
        .map(|(movie, gender)| {
            let frame = &reservoirs[&(movie.clone(), gender)].1;
            let face = &frame.faces[0];
            AnnotationTask {
                task_id: String::new(),
                movie_id: movie.clone(),
                frame_ts_ms: frame.frame_ts_ms,
                bbox: face.bbox,
                detected_gender: gender,
                frame: frame_relative_path(movie, frame.frame_ts_ms as f64 / 1000.0).to_string_lossy().into_owned(),
            }
        })
        .collect();
    // present tasks in a random order unrelated to movie ids
    tasks.shuffle(&mut rng);
    let width = (n.max(2) - 1).to_string().len();
    for (i, t) in tasks.iter_mut().enumerate() {
        t.task_id = format!("task-{i:0width$}");
    }
    Ok(Ok(tasks))
}

fn random_assignment<'a>(
    movies: &[(&'a String, (bool, bool))],
    per_gender: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<(&'a String, Gender)>> {
    let (mut need_f, mut need_m) = (per_gender, per_gender);
    let mut out = Vec::with_capacity(2 * per_gender);
    for &(movie, (has_f, has_m)) in movies {
        let can_f = has_f && need_f > 0;
        let can_m = has_m && need_m > 0;
        let pick = match (can_f, can_m) {
            (true, true) => {
                if rng.gen_bool(0.5) {
                    Gender::Female
                } else {
                    Gender::Male
                }
            }
            (true, false) => Gender::Female,
            (false, true) => Gender::Male,
            (false, false) => continue,
        };
        match pick {
            Gender::Female => need_f -= 1,
            Gender::Male => need_m -= 1,
        }
        out.push((movie, pick));
        if need_f == 0 && need_m == 0 {
            return Some(out);
        }
    }
    None
}

fn feasible_assignment<'a>(movies: &[(&'a String, (bool, bool))], per_gender: usize) -> Vec<(&'a String, Gender)> {
    let (mut need_f, mut need_m) = (per_gender, per_gender);
    let mut out = Vec::with_capacity(2 * per_gender);
    for &(movie, opts) in movies {
        match opts {
            (true, false) if need_f > 0 => {
                need_f -= 1;
                out.push((movie, Gender::Female));
            }
            (false, true) if need_m > 0 => {
                need_m -= 1;
                out.push((movie, Gender::Male));
            }
            _ => {}
        }
    }
    for &(movie, opts) in movies {
        if opts == (true, true) {
            if need_f > 0 {
                need_f -= 1;
                out.push((movie, Gender::Female));
            } else if need_m > 0 {
                need_m -= 1;
                out.push((movie, Gender::Male));
            }
        }
    }
    debug_assert!(need_f == 0 && need_m == 0, "pool was checked for feasibility");
    out
}

/// Strict plurality per question; `None` marks an exact tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewMajority {
    pub in_box: Option<InBoxAnswer>,
    pub outside_box: Option<OutsideAnswer>,
    pub reviews: usize,
}

fn plurality<T: Copy + Ord>(answers: impl Iterator<Item = T>) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for a in answers {
        *counts.entry(a).or_insert(0) += 1;
    }
    let max = *counts.values().max()?;
    let mut top = counts.into_iter().filter(|&(_, c)| c == max);
    let (winner, _) = top.next()?;
    top.next().is_none().then_some(winner)
}

pub fn aggregate_reviews(reviews: &[Review]) -> ReviewMajority {
    ReviewMajority {
        in_box: plurality(reviews.iter().map(|r| r.in_box)),
        outside_box: plurality(reviews.iter().map(|r| r.outside_box)),
        reviews: reviews.len(),
    }
}

/// A task whose majority answers are conclusive enough to enter both
/// confusion matrices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjudicatedTask {
    pub task_id: String,
    pub movie_id: String,
    pub detected_gender: Gender,
    pub in_box: InBoxAnswer,
    /// Always `Yes` or `No`.
    pub outside_box: OutsideAnswer,
}

/// `None` when either majority is a tie or the outside-box majority is
/// doubt: such tasks cannot contribute their two face observations.
pub fn adjudicate(
    task_id: &str,
    movie_id: &str,
    detected_gender: Gender,
    majority: &ReviewMajority,
) -> Option<AdjudicatedTask> {
    let in_box = majority.in_box?;
    let outside_box = majority.outside_box.filter(|o| *o != OutsideAnswer::Doubt)?;
    Some(AdjudicatedTask {
        task_id: task_id.to_string(),
        movie_id: movie_id.to_string(),
        detected_gender,
        in_box,
        outside_box,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceConfusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl FaceConfusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

/// Rows: detected female, detected male. Columns: human female, male,
/// doubt, no face.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GenderConfusion {
    pub counts: [[u64; 4]; 2],
}

impl GenderConfusion {
    pub fn from_rows(female: [u64; 4], male: [u64; 4]) -> Self {
        Self { counts: [female, male] }
    }

    pub fn row(&self, detected: Gender) -> &[u64; 4] {
        &self.counts[detected as usize]
    }

    pub fn get(&self, detected: Gender, human: InBoxAnswer) -> u64 {
        self.counts[detected as usize][human.column()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        self.get(Gender::Female, InBoxAnswer::Female) + self.get(Gender::Male, InBoxAnswer::Male)
    }

    /// Correct over all answers naming a gender (doubt and no-face ignored).
    pub fn gendered_accuracy(&self) -> f64 {
        let gendered: u64 = self.counts.iter().map(|r| r[0] + r[1]).sum();
        self.correct() as f64 / gendered as f64
    }

    /// Correct over correct plus errors, where errors are the misgendered
    /// cells and the doubt/no-face answers on male detections. This is the
    /// tally behind the 714/966 = 73.9% figure usually quoted for this
    /// matrix; [`gendered_accuracy`](Self::gendered_accuracy) is the
    /// symmetric alternative.
    pub fn legacy_accuracy(&self) -> f64 {
        let male = self.row(Gender::Male);
        let errors = self.get(Gender::Female, InBoxAnswer::Male) + male[0] + male[2] + male[3];
        self.correct() as f64 / (self.correct() + errors) as f64
    }
}

#[derive(Serialize, Deserialize)]
struct GenderRowDoc {
    female: u64,
    male: u64,
    doubt: u64,
    no_face: u64,
}

impl Serialize for GenderConfusion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let doc = |r: &[u64; 4]| GenderRowDoc { female: r[0], male: r[1], doubt: r[2], no_face: r[3] };
        let mut map = BTreeMap::new();
        map.insert("female", doc(&self.counts[0]));
        map.insert("male", doc(&self.counts[1]));
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GenderConfusion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map: BTreeMap<String, GenderRowDoc> = BTreeMap::deserialize(d)?;
        let row = |k: &str| {
            map.get(k)
                .map(|r| [r.female, r.male, r.doubt, r.no_face])
                .ok_or_else(|| serde::de::Error::missing_field("row"))
        };
        Ok(Self { counts: [row("female")?, row("male")?] })
    }
}

pub fn build_confusions(tasks: &[AdjudicatedTask]) -> (FaceConfusion, GenderConfusion) {
    let mut face = FaceConfusion::default();
    let mut gender = GenderConfusion::default();
    for t in tasks {
        if t.in_box == InBoxAnswer::NoFace {
            face.fp += 1;
        } else {
            face.tp += 1;
        }
        match t.outside_box {
            OutsideAnswer::Yes => face.fn_ += 1,
            OutsideAnswer::No => face.tn += 1,
            OutsideAnswer::Doubt => {}
        }
        gender.counts[t.detected_gender as usize][t.in_box.column()] += 1;
    }
    (face, gender)
}

/// Correction factors for one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorPair {
    /// Share of true positives among faces detected as male.
    pub lambda_male: f64,
    /// Share of true positives among faces detected as female.
    pub lambda_female: f64,
    pub n_tasks: u64,
}

impl FactorPair {
    pub const IDENTITY: FactorPair = FactorPair { lambda_male: 1.0, lambda_female: 1.0, n_tasks: 0 };

    pub fn new(lambda_male: f64, lambda_female: f64) -> Result<Self, CalibrationError> {
        let pair = FactorPair { lambda_male, lambda_female, n_tasks: 0 };
        pair.check()?;
        Ok(pair)
    }

    pub fn slope(&self) -> f64 {
        self.lambda_male + self.lambda_female - 1.0
    }

    pub fn check(&self) -> Result<(), CalibrationError> {
        if self.slope() > 0.0 {
            Ok(())
        } else {
            Err(CalibrationError::NonIdentifiable(self.lambda_male + self.lambda_female))
        }
    }

    /// `(1 - lambda_male) + (lambda_male + lambda_female - 1) * raw`, clamped
    /// to [0, 1].
    pub fn correct_ffr(&self, raw: f64) -> CorrectedFfr {
        let value = (1.0 - self.lambda_male) + self.slope() * raw;
        let clamped = value.clamp(0.0, 1.0);
        CorrectedFfr { value: clamped, clamped: clamped != value }
    }

    /// Expected (female, male) counts behind `n_female` and `n_male` detections.
    pub fn correct_counts(&self, n_female: f64, n_male: f64) -> (f64, f64) {
        let f = self.lambda_female * n_female + (1.0 - self.lambda_male) * n_male;
        let m = (1.0 - self.lambda_female) * n_female + self.lambda_male * n_male;
        (f, m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectedFfr {
    pub value: f64,
    /// The affine map left [0, 1] and the value was clamped.
    pub clamped: bool,
}

pub fn precision_factors(gc: &GenderConfusion) -> Result<FactorPair, CalibrationError> {
    let precision = |g: Gender| {
        let row = gc.row(g);
        let gendered = row[0] + row[1];
        if gendered == 0 {
            return Err(CalibrationError::EmptyRow(g));
        }
        Ok(row[g as usize] as f64 / gendered as f64)
    };
    let pair = FactorPair {
        lambda_male: precision(Gender::Male)?,
        lambda_female: precision(Gender::Female)?,
        n_tasks: gc.total(),
    };
    pair.check()?;
    Ok(pair)
}

/// Period label -> correction factors. Serialises as a plain JSON map.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorrectionFactors {
    pub periods: BTreeMap<String, FactorPair>,
}

impl CorrectionFactors {
    pub fn get(&self, period: &str) -> Result<&FactorPair, CalibrationError> {
        self.periods.get(period).ok_or_else(|| CalibrationError::UnknownPeriod(period.to_string()))
    }

    /// Identity factors for every period, for uncorrected runs.
    pub fn identity(partition: &PeriodPartition) -> Self {
        Self { periods: partition.labels().into_iter().map(|l| (l, FactorPair::IDENTITY)).collect() }
    }
}

pub fn correct_ffr(raw_ffr: f64, f: &CorrectionFactors, period: &str) -> Result<CorrectedFfr, CalibrationError> {
    Ok(f.get(period)?.correct_ffr(raw_ffr))
}

pub fn correct_counts(
    n_female_det: f64,
    n_male_det: f64,
    f: &CorrectionFactors,
    period: &str,
) -> Result<(f64, f64), CalibrationError> {
    Ok(f.get(period)?.correct_counts(n_female_det, n_male_det))
}

/// One factor pair per period from that period's own sub-table. Periods with
/// fewer than `min_tasks` adjudicated tasks, or whose sub-table is empty or
/// not identifiable, fall back to the global factors with a warning.
pub fn factors_by_period(
    tasks: &[AdjudicatedTask],
    partition: &PeriodPartition,
    min_tasks: usize,
) -> Result<(CorrectionFactors, Vec<Warning>), CalibrationError> {
    let (_, global_table) = build_confusions(tasks);
    let global = precision_factors(&global_table)?;
    let mut by_period: BTreeMap<String, Vec<AdjudicatedTask>> =
        partition.labels().into_iter().map(|l| (l, Vec::new())).collect();
    for t in tasks {
        let period = partition.period_of_movie(&t.movie_id).ok_or_else(|| CalibrationError::UnmappedTask {
            task: t.task_id.clone(),
            movie: t.movie_id.clone(),
        })?;
        by_period.get_mut(&period.label()).expect("label present").push(t.clone());
    }
    let mut warnings = Vec::new();
    let mut factors = CorrectionFactors::default();
    for (label, sub) in by_period {
        let n = sub.len() as u64;
        let pair = if sub.len() < min_tasks {
            warnings.push(Warning::new(
                "sparse_period",
                &label,
                format!("{} adjudicated tasks (< {min_tasks}); using global factors", sub.len()),
            ));
            FactorPair { n_tasks: n, ..global }
        } else {
            match precision_factors(&build_confusions(&sub).1) {
                Ok(p) => p,
                Err(e) => {
                    warnings.push(Warning::new("fallback_factors", &label, format!("{e}; using global factors")));
                    FactorPair { n_tasks: n, ..global }
                }
            }
        };
        factors.periods.insert(label, pair);
    }
    Ok((factors, warnings))
}

/// One row of the review export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRow {
    pub task_id: String,
    pub movie_id: String,
    pub frame_ts_ms: u64,
    pub detected_gender: Gender,
    pub reviewer_id: String,
    pub in_box: InBoxAnswer,
    pub outside_box: OutsideAnswer,
    pub submitted_at: String,
}

impl ExportRow {
    pub fn new(task: &AnnotationTask, review: &Review) -> Self {
        Self {
            task_id: task.task_id.clone(),
            movie_id: task.movie_id.clone(),
            frame_ts_ms: task.frame_ts_ms,
            detected_gender: task.detected_gender,
            reviewer_id: review.reviewer_id.clone(),
            in_box: review.in_box,
            outside_box: review.outside_box,
            submitted_at: review.submitted_at.clone(),
        }
    }
}

pub fn write_export<W: Write>(rows: &[ExportRow], out: W) -> Result<(), CalibrationError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EXPORT_COLUMNS).map_err(|e| CalibrationError::Export(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.task_id.as_str(),
            r.movie_id.as_str(),
            &r.frame_ts_ms.to_string(),
            r.detected_gender.as_str(),
            r.reviewer_id.as_str(),
            enum_text(&r.in_box).as_str(),
            enum_text(&r.outside_box).as_str(),
            r.submitted_at.as_str(),
        ])
        .map_err(|e| CalibrationError::Export(e.to_string()))?;
    }
    w.flush().map_err(|e| CalibrationError::Export(e.to_string()))
}

fn enum_text<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn read_export<R: Read>(input: R) -> Result<Vec<ExportRow>, CalibrationError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| CalibrationError::Export(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != EXPORT_COLUMNS {
        return Err(CalibrationError::Export(format!("unexpected columns {:?}", headers)));
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| CalibrationError::Export(format!("row {}: {e}", i + 2))))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjudicationReport {
    pub tasks: usize,
    pub adjudicated: usize,
    pub tied_in_box: usize,
    pub tied_outside_box: usize,
    pub outside_doubt: usize,
}

/// Groups export rows by task, takes majorities, and keeps conclusive tasks.
pub fn adjudicate_export(rows: &[ExportRow]) -> Result<(Vec<AdjudicatedTask>, AdjudicationReport), CalibrationError> {
    let mut by_task: BTreeMap<&str, Vec<&ExportRow>> = BTreeMap::new();
    for r in rows {
        by_task.entry(r.task_id.as_str()).or_default().push(r);
    }
    let mut report = AdjudicationReport { tasks: by_task.len(), ..Default::default() };
    let mut out = Vec::new();
    for (task_id, rows) in by_task {
        let first = rows[0];
        let identities: BTreeSet<(&str, Gender)> = rows.iter().map(|r| (r.movie_id.as_str(), r.detected_gender)).collect();
        if identities.len() != 1 {
            return Err(CalibrationError::Export(format!("task {task_id} has conflicting movie or detected gender")));
        }
        let reviews: Vec<Review> = rows
            .iter()
            .map(|r| Review {
                task_id: r.task_id.clone(),
                reviewer_id: r.reviewer_id.clone(),
                in_box: r.in_box,
                outside_box: r.outside_box,
                submitted_at: r.submitted_at.clone(),
            })
            .collect();
        let majority = aggregate_reviews(&reviews);
        if majority.in_box.is_none() {
            report.tied_in_box += 1;
        }
        match majority.outside_box {
            None => report.tied_outside_box += 1,
            Some(OutsideAnswer::Doubt) => report.outside_doubt += 1,
            _ => {}
        }
        if let Some(t) = adjudicate(task_id, &first.movie_id, first.detected_gender, &majority) {
            out.push(t);
        }
    }
    report.adjudicated = out.len();
    Ok((out, report))
}
