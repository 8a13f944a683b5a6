//! End-to-end analysis over a manifest and a set of detection files.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::CorrectionFactors;
use crate::corpus::{top_genres, CorpusManifest, PeriodPartition};
use crate::detection_io::{DetectionError, DetectionReader};
use crate::metrics::{
    self, bechdel_comparison, bechdel_period_rates, covariate_projection, faceism, movie_ffr, period_histograms,
    thirds_independence, thirds_matrices, BechdelComparison, BechdelRate, CombinationDistribution, Covariate,
    CovariateTones, FaceismSummary, FramingAccumulator, IndependenceTest, MetricsError, Moments, MovieCounts,
    MovieMetrics, PeriodHistogram, ThirdsMatrix,
};
use crate::warnings::Warning;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("correction factors have no entry for period {0}")]
    MissingFactors(String),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub bin_width_pct: u32,
    pub top_genres: usize,
    pub coverage: f64,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub corrected: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            bin_width_pct: metrics::DEFAULT_BIN_WIDTH_PCT,
            top_genres: 10,
            coverage: metrics::DEFAULT_COVERAGE,
            jobs: 0,
            corrected: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodInfo {
    pub label: String,
    pub year_lo: i32,
    pub year_hi: i32,
    pub movies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisMeta {
    pub corrected: bool,
    pub bin_width_pct: u32,
    pub coverage: f64,
    pub periods: Vec<PeriodInfo>,
    pub latest_period: Option<String>,
    pub tone_normalisation: String,
    pub combination_unit: String,
    pub framing_scope: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionTotals {
    pub files: usize,
    pub records: usize,
    pub invalid: usize,
    pub faces: u64,
    pub frames_with_faces: u64,
    pub female: u64,
    pub male: u64,
    /// Faces of movies absent from the manifest; ignored.
    pub unknown_movie_faces: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreRow {
    pub genre: String,
    pub moments: Moments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodTones {
    pub period: String,
    pub covariates: Vec<CovariateTones>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub meta: AnalysisMeta,
    pub factors: CorrectionFactors,
    pub detections: DetectionTotals,
    pub movies: Vec<MovieMetrics>,
    pub no_faces: Vec<String>,
    pub genres: Vec<GenreRow>,
    pub histograms: Vec<PeriodHistogram>,
    pub tones: Vec<PeriodTones>,
    pub bechdel: Option<BechdelComparison>,
    pub bechdel_periods: BTreeMap<String, BechdelRate>,
    pub faceism: Option<FaceismSummary>,
    pub combinations: CombinationDistribution,
    pub thirds: Vec<ThirdsMatrix>,
    pub independence: Vec<IndependenceTest>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Default)]
struct Partial {
    counts: BTreeMap<String, MovieCounts>,
    framing: FramingAccumulator,
    faces: u64,
    frames_with_faces: u64,
    unknown_movie_faces: u64,
    /// Two partials saw the same movie, so frames may have been split.
    overlap: bool,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        for (id, c) in other.counts {
            match self.counts.entry(id) {
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    self.overlap = true;
                    e.get_mut().merge(&c);
                }
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(c);
                }
            }
        }
        self.framing.merge(&other.framing);
        self.faces += other.faces;
        self.frames_with_faces += other.frames_with_faces;
        self.unknown_movie_faces += other.unknown_movie_faces;
        self.overlap |= other.overlap;
        self
    }
}

fn accumulate(reader: &DetectionReader, manifest: &CorpusManifest, latest: &BTreeSet<String>) -> Result<Partial, DetectionError> {
    let mut p = Partial::default();
    for frame in reader.frames() {
        let frame = frame?;
        if frame.faces.is_empty() {
            continue;
        }
        if manifest.get(&frame.movie_id).is_none() {
            p.unknown_movie_faces += frame.faces.len() as u64;
            continue;
        }
        p.faces += frame.faces.len() as u64;
        p.frames_with_faces += 1;
        p.counts.entry(frame.movie_id.clone()).or_default().add_frame(&frame);
        if latest.contains(&frame.movie_id) {
            p.framing.add_frame(&frame);
        }
    }
    Ok(p)
}

/// Counts per movie and framing state for the latest period. Files are
/// processed in parallel when no movie spans two files; otherwise the merged
/// stream is read sequentially so that frames stay whole.
fn scan(reader: &DetectionReader, manifest: &CorpusManifest, latest: &BTreeSet<String>, jobs: usize) -> Result<Partial, AnalysisError> {
    let per_file = reader.per_file();
    if per_file.len() <= 1 {
        return Ok(accumulate(reader, manifest, latest)?);
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| AnalysisError::Pool(e.to_string()))?;
    let merged = pool.install(|| {
        per_file
            .par_iter()
            .map(|r| accumulate(r, manifest, latest))
            .try_reduce(Partial::default, |a, b| Ok(a.merge(b)))
    })?;
    if merged.overlap {
        return Ok(accumulate(reader, manifest, latest)?);
    }
    Ok(merged)
}

pub fn analyze(
    reader: &DetectionReader,
    manifest: &CorpusManifest,
    partition: &PeriodPartition,
    factors: &CorrectionFactors,
    opts: &AnalysisOptions,
) -> Result<Analysis, AnalysisError> {
    let factors = if opts.corrected {
        for label in partition.labels() {
            if !factors.periods.contains_key(&label) {
                return Err(AnalysisError::MissingFactors(label));
            }
        }
        CorrectionFactors { periods: partition.labels().into_iter().map(|l| (l.clone(), factors.periods[&l])).collect() }
    } else {
        CorrectionFactors::identity(partition)
    };
    let latest = metrics::latest_period_movies(partition);
    let partial = scan(reader, manifest, &latest, opts.jobs)?;
    let mut warnings = Vec::new();

    let mut movies = Vec::new();
    let mut no_faces = Vec::new();
    for m in manifest.movies() {
        let Some(period) = partition.period_of_movie(&m.id) else {
            warnings.push(Warning::new("unpartitioned_movie", &m.id, "movie is in no period; skipped"));
            continue;
        };
        let counts = partial.counts.get(&m.id).copied().unwrap_or_default();
        match movie_ffr(&m.id, &counts, &factors, &period.label()) {
            Ok(mm) => {
                if mm.clamped {
                    warnings.push(Warning::new("clamped_ffr", &m.id, format!("corrected FFR clamped to {}", mm.corrected_ffr)));
                }
                movies.push(mm);
            }
            Err(MetricsError::NoFaces(id)) => no_faces.push(id),
            Err(e) => return Err(e.into()),
        }
    }
    if !no_faces.is_empty() {
        warnings.push(Warning::new(
            "no_faces",
            format!("{} movies", no_faces.len()),
            "movies without detections are excluded from FFR aggregates",
        ));
    }
    if partial.unknown_movie_faces > 0 {
        warnings.push(Warning::new(
            "unknown_movie",
            format!("{} faces", partial.unknown_movie_faces),
            "detections for movies absent from the manifest were ignored",
        ));
    }

    let genres = top_genres(manifest, opts.top_genres);
    let genre_moments = metrics::aggregate_genre(&movies, manifest, &genres);
    let genre_rows = genres.iter().map(|g| GenreRow { genre: g.clone(), moments: genre_moments[g] }).collect();

    let (histograms, hist_warnings) = period_histograms(&movies, partition, opts.bin_width_pct)?;
    warnings.extend(hist_warnings);

    let mut tones = Vec::new();
    for h in &histograms {
        let in_period: Vec<MovieMetrics> = movies.iter().filter(|m| m.period == h.period).cloned().collect();
        let mut covariates = Vec::new();
        if !in_period.is_empty() {
            for c in Covariate::ALL {
                match covariate_projection(&in_period, manifest, c, &h.histogram) {
                    Ok(t) => covariates.push(t),
                    Err(e) => warnings.push(Warning::new("covariate_absent", format!("{}:{c}", h.period), e.to_string())),
                }
            }
        }
        tones.push(PeriodTones { period: h.period.clone(), covariates });
    }

    let bechdel = match bechdel_comparison(&movies, manifest, &genres) {
        Ok(b) => Some(b),
        Err(e) => {
            warnings.push(Warning::new("bechdel_comparison", "genres", e.to_string()));
            None
        }
    };
    let bechdel_periods = bechdel_period_rates(manifest, partition);

    let faceism = match faceism(&partial.framing) {
        Ok(f) => Some(f),
        Err(e) => {
            warnings.push(Warning::new("faceism", "latest period", e.to_string()));
            None
        }
    };
    let combinations = CombinationDistribution::from_counts(partial.framing.combinations.clone());
    let thirds = thirds_matrices(&partial.framing);
    let reported: BTreeSet<(u32, u32)> =
        combinations.truncated(opts.coverage).iter().map(|s| (s.n_female, s.n_male)).collect();
    let tested: Vec<ThirdsMatrix> =
        thirds.iter().filter(|m| reported.contains(&(m.n_female, m.n_male))).cloned().collect();
    let independence = thirds_independence(&tested)?;
    if independence.is_empty() {
        warnings.push(Warning::new("thirds_independence", "latest period", "fewer than two face configurations"));
    }

    let tally = reader.tally();
    Ok(Analysis {
        meta: AnalysisMeta {
            corrected: opts.corrected,
            bin_width_pct: opts.bin_width_pct,
            coverage: opts.coverage,
            periods: partition
                .periods
                .iter()
                .map(|p| PeriodInfo { label: p.label(), year_lo: p.year_lo, year_hi: p.year_hi, movies: p.movie_ids.len() })
                .collect(),
            latest_period: partition.latest().map(|p| p.label()),
            tone_normalisation: "per-histogram min-max of mean covariate rank".into(),
            combination_unit: "frames with at least one face".into(),
            framing_scope: "latest period, uncorrected labels".into(),
        },
        factors,
        detections: DetectionTotals {
            files: tally.files,
            records: tally.lines,
            invalid: tally.invalid,
            faces: partial.faces,
            frames_with_faces: partial.frames_with_faces,
            female: partial.counts.values().map(|c| c.female).sum(),
            male: partial.counts.values().map(|c| c.male).sum(),
            unknown_movie_faces: partial.unknown_movie_faces,
        },
        movies,
        no_faces,
        genres: genre_rows,
        histograms,
        tones,
        bechdel,
        bechdel_periods,
        faceism,
        combinations,
        thirds,
        independence,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::split_periods;
    use crate::detection_io::read_detections;
    use crate::synthetic::SyntheticConfig;

    fn fixture(movies: usize, faces: u64) -> (tempfile::TempDir, CorpusManifest, PeriodPartition) {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SyntheticConfig { movies, faces_per_movie: faces, ..Default::default() };
        cfg.write_detections(dir.path()).unwrap();
        let m = cfg.manifest().unwrap();
        let p = split_periods(&m, 4).unwrap();
        (dir, m, p)
    }

    #[test]
    fn uncorrected_run_counts_everything() {
        let (dir, m, p) = fixture(12, 300);
        let reader = read_detections(dir.path()).unwrap();
        let opts = AnalysisOptions { corrected: false, ..Default::default() };
        let a = analyze(&reader, &m, &p, &CorrectionFactors::default(), &opts).unwrap();
        assert_eq!(a.movies.len(), 12);
        assert_eq!(a.detections.faces, 3600);
        assert!(a.movies.iter().all(|mm| mm.raw_ffr == mm.corrected_ffr));
        let hist_total: u64 = a.histograms.iter().map(|h| h.histogram.total()).sum();
        assert_eq!(hist_total, 12);
        let latest = p.latest().unwrap();
        let thirds_total: u64 = a.thirds.iter().map(|t| t.female.iter().chain(&t.male).sum::<u64>()).sum();
        assert_eq!(thirds_total, 300 * latest.movie_ids.len() as u64);
        assert!(a.faceism.is_some());
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let (dir, m, p) = fixture(10, 200);
        let reader = read_detections(dir.path()).unwrap();
        let opts = |jobs| AnalysisOptions { corrected: false, jobs, ..Default::default() };
        let one = analyze(&reader, &m, &p, &CorrectionFactors::default(), &opts(1)).unwrap();
        let four = analyze(&reader, &m, &p, &CorrectionFactors::default(), &opts(4)).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn split_movie_falls_back_to_merged_stream() {
        let (dir, m, p) = fixture(4, 100);
        // move half of one movie's lines into a second file
        let path = dir.path().join("tt0000004.jsonl");
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let (a, b) = lines.split_at(lines.len() / 2);
        std::fs::write(&path, a.join("\n") + "\n").unwrap();
        std::fs::write(dir.path().join("zz_extra.jsonl"), b.join("\n") + "\n").unwrap();
        let reader = read_detections(dir.path()).unwrap();
        let opts = AnalysisOptions { corrected: false, jobs: 2, ..Default::default() };
        let a = analyze(&reader, &m, &p, &CorrectionFactors::default(), &opts).unwrap();
        let whole = fixture(4, 100);
        let reference =
            analyze(&read_detections(whole.0.path()).unwrap(), &whole.1, &whole.2, &CorrectionFactors::default(), &opts).unwrap();
        assert_eq!(a.combinations, reference.combinations);
        assert_eq!(a.movies, reference.movies);
    }

    #[test]
    fn corrected_run_needs_factors_for_every_period() {
        let (dir, m, p) = fixture(8, 50);
        let reader = read_detections(dir.path()).unwrap();
        let err = analyze(&reader, &m, &p, &CorrectionFactors::default(), &AnalysisOptions::default()).unwrap_err();
        assert!(matches!(err, AnalysisError::MissingFactors(_)));
    }

    #[test]
    fn movies_without_faces_are_flagged() {
        let (dir, m, p) = fixture(8, 50);
        std::fs::remove_file(dir.path().join("tt0000002.jsonl")).unwrap();
        let reader = read_detections(dir.path()).unwrap();
        let opts = AnalysisOptions { corrected: false, ..Default::default() };
        let a = analyze(&reader, &m, &p, &CorrectionFactors::default(), &opts).unwrap();
        assert_eq!(a.no_faces, vec!["tt0000002".to_string()]);
        assert_eq!(a.movies.len(), 7);
        assert!(a.warnings.iter().any(|w| w.kind == "no_faces"));
    }
}
