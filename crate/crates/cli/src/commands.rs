use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use log::{info, warn};
use onscreen_annotate::{read_tasks, router, serve, tasks_to_jsonl, AppState, ReviewStore};
use onscreen_core::analysis::{analyze, Analysis, AnalysisOptions};
use onscreen_core::calibration::{
    adjudicate_export, build_confusions, factors_by_period, precision_factors, read_export, sample_tasks,
    AdjudicationReport, CorrectionFactors, ExportRow, FaceConfusion, FactorPair, GenderConfusion,
};
use onscreen_core::corpus::{
    enrich_bechdel, filter_corpus, load_manifest, split_periods, write_manifest_csv, BechdelCache, BechdelSource,
    CorpusManifest, FilterCriteria, HttpBechdelClient, PeriodPartition,
};
use onscreen_core::detection_io::{read_detections, run_external_detector, DetectionReader, DetectionSummary, ReadTally};
use onscreen_core::report::{render_report, to_fixed_json, to_jsonl, write_atomic};
use onscreen_core::sampling::{build_plan, render_extraction_commands, verify_frames, CommandTemplate, FrameVerification, SamplingPlan};
use onscreen_core::warnings::Warning;
use rayon::prelude::*;
use serde::Serialize;

use crate::{Command, Opts};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Data,
    External,
}

#[derive(Debug)]
pub struct CliError {
    kind: Kind,
    inner: anyhow::Error,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self.kind {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::External => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if f.alternate() {
            write!(f, "{:#}", self.inner)
        } else {
            write!(f, "{}", self.inner)
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

trait Classify<T> {
    fn kind(self, kind: Kind) -> Result<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn kind(self, kind: Kind) -> Result<T> {
        self.map_err(|e| CliError { kind, inner: e.into() })
    }
}

fn usage(msg: impl fmt::Display) -> CliError {
    CliError { kind: Kind::Usage, inner: anyhow!("{msg}") }
}

fn data(msg: impl fmt::Display) -> CliError {
    CliError { kind: Kind::Data, inner: anyhow!("{msg}") }
}

fn external(msg: impl fmt::Display) -> CliError {
    CliError { kind: Kind::External, inner: anyhow!("{msg}") }
}

/// Artifact locations under `--out`.
struct Layout {
    out: PathBuf,
}

impl Layout {
    fn plan(&self) -> PathBuf {
        self.out.join("plan").join("sampling_plan.jsonl")
    }
    fn plan_manifest(&self) -> PathBuf {
        self.out.join("plan").join("manifest.csv")
    }
    fn frames(&self, o: &Opts) -> PathBuf {
        o.frames.clone().unwrap_or_else(|| self.out.join("frames"))
    }
    fn extract_report(&self) -> PathBuf {
        self.out.join("extract_report.json")
    }
    fn raw_detections(&self) -> PathBuf {
        self.out.join("raw_detections")
    }
    fn detect_report(&self) -> PathBuf {
        self.out.join("detect_report.json")
    }
    fn detections(&self) -> PathBuf {
        self.out.join("detections")
    }
    fn ingest_summary(&self) -> PathBuf {
        self.out.join("ingest_summary.json")
    }
    fn tasks(&self, o: &Opts) -> PathBuf {
        o.tasks.clone().unwrap_or_else(|| self.out.join("calibration").join("tasks.jsonl"))
    }
    fn review_log(&self, o: &Opts) -> PathBuf {
        o.review_log.clone().unwrap_or_else(|| self.out.join("calibration").join("reviews.jsonl"))
    }
    fn confusion(&self) -> PathBuf {
        self.out.join("calibration").join("confusion.json")
    }
    fn factors(&self, o: &Opts) -> PathBuf {
        o.factors.clone().unwrap_or_else(|| self.out.join("factors.json"))
    }
    fn analysis(&self, o: &Opts) -> PathBuf {
        o.analysis.clone().unwrap_or_else(|| self.out.join("analysis").join("analysis.json"))
    }
    fn analysis_warnings(&self) -> PathBuf {
        self.out.join("analysis").join("warnings.jsonl")
    }
    fn report(&self) -> PathBuf {
        self.out.join("report")
    }
}

fn require(path: &Path, producer: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(data(format!("{} not found; run `{producer}` first", path.display())))
    }
}

fn atomic(path: &Path, body: &str) -> Result<()> {
    write_atomic(path, body.as_bytes()).kind(Kind::Data)
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).kind(Kind::Data)?;
    s.push('\n');
    Ok(s)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().kind(Kind::Data)
}

pub fn run(cmd: Command, o: &Opts) -> Result<()> {
    let layout = Layout { out: o.out.clone() };
    match cmd {
        Command::Plan => plan(o, &layout),
        Command::Extract => extract(o, &layout),
        Command::Detect => detect(o, &layout),
        Command::Ingest => ingest(o, &layout),
        Command::CalibrateSample => calibrate_sample(o, &layout),
        Command::CalibrateServe => calibrate_serve(o, &layout),
        Command::CalibrateCompute => calibrate_compute(o, &layout),
        Command::Analyze => run_analyze(o, &layout),
        Command::Report => report(o, &layout),
    }
}

/// Loads `--manifest` and applies the corpus filter unless `--no-filter`.
fn manifest(o: &Opts) -> Result<CorpusManifest> {
    let path = o.manifest.as_deref().ok_or_else(|| usage("--manifest is required"))?;
    let m = load_manifest(path).kind(Kind::Data)?;
    for r in &m.provenance.rejected {
        warn!("manifest line {}: {}", r.line, r.reason);
    }
    if o.no_filter {
        return Ok(m);
    }
    if o.year_lo > o.year_hi {
        return Err(usage(format!("--year-lo {} is after --year-hi {}", o.year_lo, o.year_hi)));
    }
    let criteria = FilterCriteria {
        year_lo: o.year_lo,
        year_hi: o.year_hi,
        min_seeders: Some(o.min_seeders),
        ..FilterCriteria::default()
    };
    let (kept, report) = filter_corpus(&m, &criteria);
    info!(
        "corpus: kept {} (dropped year {}, genre {}, seeders {})",
        report.kept, report.dropped_year, report.dropped_genre, report.dropped_seeders
    );
    if kept.is_empty() {
        return Err(data("no movie in the manifest passes the corpus filter"));
    }
    Ok(kept)
}

fn partition(m: &CorpusManifest, o: &Opts) -> Result<PeriodPartition> {
    if o.periods == 0 {
        return Err(usage("--periods must be at least 1"));
    }
    split_periods(m, o.periods).kind(Kind::Data)
}

fn read_plans(path: &Path) -> Result<Vec<SamplingPlan>> {
    require(path, "plan")?;
    let file = fs::File::open(path).kind(Kind::Data)?;
    let mut plans = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.kind(Kind::Data)?;
        if line.trim().is_empty() {
            continue;
        }
        let plan = serde_json::from_str(&line)
            .with_context(|| format!("{} line {}", path.display(), i + 1))
            .kind(Kind::Data)?;
        plans.push(plan);
    }
    Ok(plans)
}

fn plan(o: &Opts, layout: &Layout) -> Result<()> {
    let m = manifest(o)?;
    let mut body = String::new();
    let mut frames = 0usize;
    for movie in m.movies() {
        let plan = build_plan(movie, o.interval_s).with_context(|| format!("movie {}", movie.id)).kind(Kind::Data)?;
        frames += plan.len();
        body.push_str(&serde_json::to_string(&plan).kind(Kind::Data)?);
        body.push('\n');
    }
    let mut csv = Vec::new();
    write_manifest_csv(&m, &mut csv).kind(Kind::Data)?;
    write_atomic(&layout.plan_manifest(), &csv).kind(Kind::Data)?;
    atomic(&layout.plan(), &body)?;
    info!("planned {frames} frames for {} movies", m.len());
    Ok(())
}

#[derive(Serialize)]
struct ExtractReport {
    commands_run: usize,
    commands_skipped: usize,
    failed_commands: Vec<String>,
    missing_videos: Vec<String>,
    movies: Vec<FrameVerification>,
}

fn extract(o: &Opts, layout: &Layout) -> Result<()> {
    let plans = read_plans(&layout.plan())?;
    let videos = o.videos.as_deref().ok_or_else(|| usage("--videos is required"))?;
    let template = match &o.template {
        Some(t) => CommandTemplate::parse(t).kind(Kind::Usage)?,
        None => CommandTemplate::default(),
    };
    let frames_dir = layout.frames(o);
    let mut missing_videos = Vec::new();
    let mut commands = Vec::new();
    for plan in &plans {
        let input = videos.join(format!("{}.{}", plan.movie_id, o.video_ext));
        if !input.is_file() {
            missing_videos.push(plan.movie_id.clone());
            continue;
        }
        commands.extend(render_extraction_commands(plan, &template, &input, &frames_dir));
    }
    if o.dry_run {
        let stdout = std::io::stdout();
        let mut out = stdout.lock();
        for c in &commands {
            writeln!(out, "{}", c.argv.join(" ")).kind(Kind::Data)?;
        }
        return Ok(());
    }
    let pending: Vec<_> =
        commands.iter().filter(|c| !fs::metadata(&c.output).map(|m| m.len() > 0).unwrap_or(false)).collect();
    let skipped = commands.len() - pending.len();
    let failed: Vec<String> = pool(o.jobs)?.install(|| {
        pending
            .par_iter()
            .filter_map(|c| {
                if let Some(dir) = c.output.parent() {
                    if let Err(e) = fs::create_dir_all(dir) {
                        return Some(format!("{}: {e}", dir.display()));
                    }
                }
                let status = std::process::Command::new(&c.argv[0])
                    .args(&c.argv[1..])
                    .stdin(std::process::Stdio::null())
                    .stdout(std::process::Stdio::null())
                    .stderr(std::process::Stdio::null())
                    .status();
                match status {
                    Ok(s) if s.success() => None,
                    Ok(s) => Some(format!("{}: {s}", c.output.display())),
                    Err(e) => Some(format!("{}: {e}", c.argv[0])),
                }
            })
            .collect()
    });
    let movies: Vec<_> = plans.iter().map(|p| verify_frames(p, &frames_dir)).collect();
    let incomplete = movies.iter().filter(|v| !v.is_complete()).count();
    let report = ExtractReport {
        commands_run: pending.len(),
        commands_skipped: skipped,
        failed_commands: failed,
        missing_videos,
        movies,
    };
    atomic(&layout.extract_report(), &pretty(&report)?)?;
    for id in &report.missing_videos {
        warn!("no video for {id}");
    }
    if !report.failed_commands.is_empty() {
        return Err(external(format!(
            "{} of {} extraction commands failed (see {})",
            report.failed_commands.len(),
            pending.len(),
            layout.extract_report().display()
        )));
    }
    info!("extracted frames; {incomplete} movies incomplete");
    Ok(())
}

#[derive(Serialize)]
struct DetectReport {
    movies: BTreeMap<String, onscreen_core::detection_io::DetectorRun>,
}

fn detect(o: &Opts, layout: &Layout) -> Result<()> {
    let plans = read_plans(&layout.plan())?;
    let argv: Vec<String> = o
        .detector
        .as_deref()
        .ok_or_else(|| usage("--detector is required"))?
        .split_whitespace()
        .map(str::to_string)
        .collect();
    if argv.is_empty() {
        return Err(usage("--detector is empty"));
    }
    let frames_dir = layout.frames(o);
    require(&frames_dir, "extract")?;
    let raw = layout.raw_detections();
    fs::create_dir_all(&raw).kind(Kind::Data)?;
    let mut report = DetectReport { movies: BTreeMap::new() };
    for plan in &plans {
        let frames: Vec<(String, u64, PathBuf)> = plan
            .frame_paths()
            .map(|(t, rel)| (plan.movie_id.clone(), onscreen_core::sampling::timestamp_ms(t), frames_dir.join(rel)))
            .filter(|(_, _, p)| p.is_file())
            .collect();
        if frames.is_empty() {
            warn!("{}: no extracted frames", plan.movie_id);
            continue;
        }
        let mut body = String::new();
        let run = run_external_detector(&argv, &frames, |d| {
            body.push_str(&d.to_json_line());
            body.push('\n');
        })
        .with_context(|| format!("movie {}", plan.movie_id))
        .kind(Kind::External)?;
        atomic(&raw.join(format!("{}.jsonl", plan.movie_id)), &body)?;
        info!("{}: {} frames, {} records, {} rejected", plan.movie_id, run.frames_sent, run.records, run.rejected);
        report.movies.insert(plan.movie_id.clone(), run);
    }
    atomic(&layout.detect_report(), &pretty(&report)?)
}

#[derive(Serialize)]
struct IngestSummary {
    tally: ReadTally,
    summary: DetectionSummary,
    faces_per_movie_mean: f64,
    faces_per_movie_sd: f64,
}

fn open_detections(path: &Path, producer: &str) -> Result<DetectionReader> {
    require(path, producer)?;
    read_detections(path).kind(Kind::Data)
}

fn ingest(o: &Opts, layout: &Layout) -> Result<()> {
    let source = o.detections.clone().unwrap_or_else(|| layout.raw_detections());
    let reader = open_detections(&source, "detect")?;
    let dest = layout.detections();
    let staging = layout.out.join(format!(".detections.tmp-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).kind(Kind::Data)?;
    }
    fs::create_dir_all(&staging).kind(Kind::Data)?;
    let mut summary = DetectionSummary::default();
    let mut current: Option<(String, BufWriter<fs::File>)> = None;
    for frame in reader.frames() {
        let frame = frame.kind(Kind::Data)?;
        summary.add_frame(&frame);
        if current.as_ref().map(|(id, _)| id != &frame.movie_id).unwrap_or(true) {
            if let Some((_, mut w)) = current.take() {
                w.flush().kind(Kind::Data)?;
            }
            let f = fs::File::create(staging.join(format!("{}.jsonl", frame.movie_id))).kind(Kind::Data)?;
            current = Some((frame.movie_id.clone(), BufWriter::new(f)));
        }
        let (_, w) = current.as_mut().expect("writer open");
        for face in &frame.faces {
            writeln!(w, "{}", face.to_json_line()).kind(Kind::Data)?;
        }
    }
    if let Some((_, mut w)) = current.take() {
        w.flush().kind(Kind::Data)?;
    }
    if dest.exists() {
        fs::remove_dir_all(&dest).kind(Kind::Data)?;
    }
    fs::rename(&staging, &dest).kind(Kind::Data)?;
    let (mean, sd) = summary.faces_per_movie_stats();
    let tally = reader.tally().clone();
    if tally.invalid > 0 {
        warn!("{} of {} detection lines invalid and skipped", tally.invalid, tally.lines);
    }
    info!("ingested {} faces from {} movies", summary.faces, summary.movies());
    let out = IngestSummary { tally, summary, faces_per_movie_mean: mean, faces_per_movie_sd: sd };
    atomic(&layout.ingest_summary(), &to_fixed_json(&out).kind(Kind::Data)?)
}

fn calibrate_sample(o: &Opts, layout: &Layout) -> Result<()> {
    let path = o.detections.clone().unwrap_or_else(|| layout.detections());
    let reader = open_detections(&path, "ingest")?;
    let m = match &o.manifest {
        Some(_) => Some(manifest(o)?),
        None => None,
    };
    let tasks = sample_tasks(reader.frames(), m.as_ref(), o.task_count, o.seed)
        .kind(Kind::Data)?
        .kind(Kind::Data)?;
    atomic(&layout.tasks(o), &tasks_to_jsonl(&tasks))?;
    info!("sampled {} review tasks", tasks.len());
    Ok(())
}

fn calibrate_serve(o: &Opts, layout: &Layout) -> Result<()> {
    let tasks_path = layout.tasks(o);
    require(&tasks_path, "calibrate-sample")?;
    let tasks = read_tasks(&tasks_path).kind(Kind::Data)?;
    let log_path = layout.review_log(o);
    if let Some(dir) = log_path.parent() {
        fs::create_dir_all(dir).kind(Kind::Data)?;
    }
    let store = ReviewStore::open(tasks, &log_path).kind(Kind::Data)?;
    let addr = o.addr.parse().map_err(|e| usage(format!("--addr {}: {e}", o.addr)))?;
    let app = router(AppState::new(store, layout.frames(o), o.seed), o.static_dir.clone());
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().kind(Kind::External)?;
    rt.block_on(serve(addr, app)).kind(Kind::External)
}

#[derive(Serialize)]
struct ConfusionReport {
    face: FaceConfusion,
    face_accuracy: f64,
    gender: GenderConfusion,
    gendered_accuracy: f64,
    legacy_accuracy: f64,
    global_factors: FactorPair,
    adjudication: AdjudicationReport,
    warnings: Vec<Warning>,
}

/// Export rows from `--export`, or from the review log and task set.
fn export_rows(o: &Opts, layout: &Layout) -> Result<Vec<ExportRow>> {
    if let Some(path) = &o.export {
        let f = fs::File::open(path).with_context(|| format!("cannot open {}", path.display())).kind(Kind::Data)?;
        return read_export(f).kind(Kind::Data);
    }
    let tasks_path = layout.tasks(o);
    let log_path = layout.review_log(o);
    require(&tasks_path, "calibrate-sample")?;
    require(&log_path, "calibrate-serve")?;
    let store = ReviewStore::open(read_tasks(&tasks_path).kind(Kind::Data)?, &log_path).kind(Kind::Data)?;
    Ok(store.export_rows())
}

fn calibrate_compute(o: &Opts, layout: &Layout) -> Result<()> {
    let rows = export_rows(o, layout)?;
    let m = manifest(o)?;
    let parts = partition(&m, o)?;
    let (tasks, adjudication) = adjudicate_export(&rows).kind(Kind::Data)?;
    let (face, gender) = build_confusions(&tasks);
    let global = precision_factors(&gender).kind(Kind::Data)?;
    let (factors, warnings) = factors_by_period(&tasks, &parts, o.min_tasks).kind(Kind::Data)?;
    for w in &warnings {
        warn!("{}: {}", w.subject, w.message);
    }
    let report = ConfusionReport {
        face_accuracy: face.accuracy(),
        gendered_accuracy: gender.gendered_accuracy(),
        legacy_accuracy: gender.legacy_accuracy(),
        face,
        gender,
        global_factors: global,
        adjudication,
        warnings,
    };
    atomic(&layout.confusion(), &pretty(&report)?)?;
    atomic(&layout.factors(o), &pretty(&factors)?)?;
    info!(
        "factors from {} adjudicated tasks: lambda_male {:.4}, lambda_female {:.4}",
        report.adjudication.adjudicated, global.lambda_male, global.lambda_female
    );
    Ok(())
}

fn load_factors(path: &Path) -> Result<CorrectionFactors> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).kind(Kind::Data)?;
    let f: CorrectionFactors =
        serde_json::from_str(&text).with_context(|| format!("{}", path.display())).kind(Kind::Data)?;
    for (label, pair) in &f.periods {
        pair.check().with_context(|| format!("factors for {label}")).kind(Kind::Data)?;
    }
    Ok(f)
}

fn with_bechdel(m: CorpusManifest, o: &Opts) -> Result<CorpusManifest> {
    let Some(cache_path) = &o.bechdel_cache else {
        return Ok(m);
    };
    let mut cache = BechdelCache::open(cache_path).kind(Kind::Data)?;
    let client = match &o.bechdel_url {
        Some(url) => Some(HttpBechdelClient::new(url.clone()).kind(Kind::External)?),
        None => None,
    };
    let (m, report) =
        enrich_bechdel(&m, &mut cache, client.as_ref().map(|c| c as &dyn BechdelSource)).kind(Kind::Data)?;
    info!(
        "bechdel: {} cached, {} fetched, {} uncovered",
        report.from_cache,
        report.fetched,
        report.uncovered.len()
    );
    Ok(m)
}

fn run_analyze(o: &Opts, layout: &Layout) -> Result<()> {
    let factors_path = layout.factors(o);
    let factors = if o.uncorrected {
        CorrectionFactors::default()
    } else if factors_path.exists() {
        load_factors(&factors_path)?
    } else {
        return Err(data(format!(
            "{} not found; run `calibrate-compute` first or pass --uncorrected",
            factors_path.display()
        )));
    };
    let m = with_bechdel(manifest(o)?, o)?;
    let parts = partition(&m, o)?;
    let path = o.detections.clone().unwrap_or_else(|| layout.detections());
    let reader = open_detections(&path, "ingest")?;
    let opts = AnalysisOptions { jobs: o.jobs, corrected: !o.uncorrected, ..AnalysisOptions::default() };
    let analysis = analyze(&reader, &m, &parts, &factors, &opts).kind(Kind::Data)?;
    atomic(&layout.analysis(o), &pretty(&analysis)?)?;
    atomic(&layout.analysis_warnings(), &to_jsonl(&analysis.warnings).kind(Kind::Data)?)?;
    info!(
        "analysed {} movies ({} without faces), {} warnings",
        analysis.movies.len(),
        analysis.no_faces.len(),
        analysis.warnings.len()
    );
    Ok(())
}

fn report(o: &Opts, layout: &Layout) -> Result<()> {
    let path = layout.analysis(o);
    require(&path, "analyze")?;
    let text = fs::read_to_string(&path).kind(Kind::Data)?;
    let analysis: Analysis =
        serde_json::from_str(&text).with_context(|| format!("{}", path.display())).kind(Kind::Data)?;
    let files = render_report(&analysis, &layout.report()).kind(Kind::Data)?;
    info!("wrote {} report files to {}", files.len(), layout.report().display());
    Ok(())
}
