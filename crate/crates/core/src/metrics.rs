//! Presence and framing metrics.
//!
//! Everything that touches individual faces goes through mergeable
//! accumulators with integer state ([`MovieCounts`], [`FramingAccumulator`]),
//! so per-movie work can run in parallel and be reduced in any order with
//! identical results. The remaining operations work on per-movie rows.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{CalibrationError, CorrectionFactors};
use crate::corpus::{CorpusManifest, MovieRecord, PeriodPartition};
use crate::detection_io::{BBox, FrameDetections, Gender};
use crate::stats::{self, QuantileSketch, StatsError, TestResult};
use crate::warnings::Warning;

pub const DEFAULT_BIN_WIDTH_PCT: u32 = 5;
pub const DEFAULT_COVERAGE: f64 = 0.95;
pub const TAIL_QUANTILE: f64 = 0.2;

const BIN_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("movie {0} has no detected faces")]
    NoFaces(String),
    #[error("covariate {0} is absent for every movie in scope")]
    CovariateAbsent(Covariate),
    #[error("need at least 2 genres with Bechdel coverage, found {0}")]
    TooFewGenres(usize),
    #[error("no {0} faces in scope")]
    NoGenderFaces(Gender),
    #[error("bin width must be an integer percentage in 1..=100, got {0}")]
    InvalidBinWidth(u32),
    #[error("movie {0} is in no period")]
    UnmappedMovie(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

/// Detected faces per gender for one movie.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovieCounts {
    pub female: u64,
    pub male: u64,
}

impl MovieCounts {
    pub fn add_frame(&mut self, frame: &FrameDetections) {
        self.female += u64::from(frame.count(Gender::Female));
        self.male += u64::from(frame.count(Gender::Male));
    }

    pub fn merge(&mut self, other: &MovieCounts) {
        self.female += other.female;
        self.male += other.male;
    }

    pub fn total(&self) -> u64 {
        self.female + self.male
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovieMetrics {
    pub movie_id: String,
    pub period: String,
    pub n_female_det: u64,
    pub n_male_det: u64,
    pub raw_ffr: f64,
    pub corrected_ffr: f64,
    pub corrected_female: f64,
    pub corrected_male: f64,
    /// The corrected ratio fell outside [0, 1] and was clamped.
    pub clamped: bool,
}

pub fn movie_ffr(
    movie_id: &str,
    counts: &MovieCounts,
    factors: &CorrectionFactors,
    period: &str,
) -> Result<MovieMetrics, MetricsError> {
    if counts.total() == 0 {
        return Err(MetricsError::NoFaces(movie_id.to_string()));
    }
    let pair = factors.get(period)?;
    let raw = counts.female as f64 / counts.total() as f64;
    let corrected = pair.correct_ffr(raw);
    let (f, m) = pair.correct_counts(counts.female as f64, counts.male as f64);
    Ok(MovieMetrics {
        movie_id: movie_id.to_string(),
        period: period.to_string(),
        n_female_det: counts.female,
        n_male_det: counts.male,
        raw_ffr: raw,
        corrected_ffr: corrected.value,
        corrected_female: f,
        corrected_male: m,
        clamped: corrected.clamped,
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

impl Moments {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { n: 0, mean: None, sd: None };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { n: values.len(), mean: Some(mean), sd: Some(var.sqrt()) }
    }
}

/// Corrected-FFR moments per genre; a movie counts towards every genre it
/// carries.
pub fn aggregate_genre(
    metrics: &[MovieMetrics],
    manifest: &CorpusManifest,
    genres: &[String],
) -> BTreeMap<String, Moments> {
    genres
        .iter()
        .map(|g| {
            let values: Vec<f64> = metrics
                .iter()
                .filter(|m| manifest.get(&m.movie_id).is_some_and(|r| r.has_genre(g)))
                .map(|m| m.corrected_ffr)
                .collect();
            (g.clone(), Moments::of(&values))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfrHistogram {
    pub bin_width_pct: u32,
    pub bins: Vec<u64>,
}

impl FfrHistogram {
    pub fn new(bin_width_pct: u32) -> Result<Self, MetricsError> {
        if bin_width_pct == 0 || bin_width_pct > 100 {
            return Err(MetricsError::InvalidBinWidth(bin_width_pct));
        }
        Ok(Self { bin_width_pct, bins: vec![0; 100usize.div_ceil(bin_width_pct as usize)] })
    }

    /// Half-open bins `[k·w, (k+1)·w)` percent; 100% lands in the top bin.
    pub fn bin_of(&self, ffr: f64) -> usize {
        let k = (ffr * 100.0 / f64::from(self.bin_width_pct) + BIN_EPS).floor();
        (k.max(0.0) as usize).min(self.bins.len() - 1)
    }

    pub fn add(&mut self, ffr: f64) {
        let b = self.bin_of(ffr);
        self.bins[b] += 1;
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    /// Lower edge of each bin in percent.
    pub fn edges(&self) -> Vec<u32> {
        (0..self.bins.len() as u32).map(|k| k * self.bin_width_pct).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodHistogram {
    pub period: String,
    pub histogram: FfrHistogram,
    pub moments: Moments,
}

pub fn period_histograms(
    metrics: &[MovieMetrics],
    partition: &PeriodPartition,
    bin_width_pct: u32,
) -> Result<(Vec<PeriodHistogram>, Vec<Warning>), MetricsError> {
    let mut by_period: BTreeMap<String, Vec<f64>> = partition.labels().into_iter().map(|l| (l, vec![])).collect();
    for m in metrics {
        let p = partition.period_of_movie(&m.movie_id).ok_or_else(|| MetricsError::UnmappedMovie(m.movie_id.clone()))?;
        by_period.get_mut(&p.label()).expect("partition label").push(m.corrected_ffr);
    }
    let mut warnings = Vec::new();
    let mut out = Vec::new();
    for p in &partition.periods {
        let label = p.label();
        let values = &by_period[&label];
        let mut histogram = FfrHistogram::new(bin_width_pct)?;
        values.iter().for_each(|&v| histogram.add(v));
        if values.is_empty() {
            warnings.push(Warning::new("empty_period", &label, "no movie with a defined FFR"));
        }
        out.push(PeriodHistogram { period: label, histogram, moments: Moments::of(values) });
    }
    Ok((out, warnings))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    Budget,
    Gross,
    RatingValue,
    RatingCount,
    FemaleRatingShare,
}

impl Covariate {
    pub const ALL: [Covariate; 5] =
        [Covariate::Budget, Covariate::Gross, Covariate::RatingValue, Covariate::RatingCount, Covariate::FemaleRatingShare];

    pub fn as_str(self) -> &'static str {
        match self {
            Covariate::Budget => "budget",
            Covariate::Gross => "gross",
            Covariate::RatingValue => "rating_value",
            Covariate::RatingCount => "rating_count",
            Covariate::FemaleRatingShare => "female_rating_share",
        }
    }

    pub fn value(self, m: &MovieRecord) -> Option<f64> {
        match self {
            Covariate::Budget => Some(m.budget_usd as f64),
            Covariate::Gross => Some(m.gross_usd as f64),
            Covariate::RatingValue => Some(m.rating_value),
            Covariate::RatingCount => Some(m.rating_count as f64),
            Covariate::FemaleRatingShare => m.female_rating_share,
        }
    }
}

impl std::fmt::Display for Covariate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Covariate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Covariate::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| format!("unknown covariate {s:?}"))
    }
}

/// Tone per histogram bin: the mean covariate rank of the bin's movies,
/// min-max normalised across bins. `None` for bins with no ranked movie.
pub fn bin_tones(members: &[(usize, Option<f64>)], n_bins: usize) -> Option<Vec<Option<f64>>> {
    let ranked: Vec<(usize, f64)> = members.iter().filter_map(|&(b, v)| v.map(|v| (b, v))).collect();
    if ranked.is_empty() {
        return None;
    }
    let values: Vec<f64> = ranked.iter().map(|r| r.1).collect();
    let ranks = stats::average_ranks(&values);
    let mut sums = vec![(0.0, 0usize); n_bins];
    for (&(b, _), r) in ranked.iter().zip(ranks) {
        sums[b].0 += r;
        sums[b].1 += 1;
    }
    let means: Vec<Option<f64>> = sums.iter().map(|&(s, c)| (c > 0).then(|| s / c as f64)).collect();
    let present = means.iter().flatten();
    let lo = present.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = present.copied().fold(f64::NEG_INFINITY, f64::max);
    Some(
        means
            .into_iter()
            .map(|m| m.map(|m| if hi > lo { (m - lo) / (hi - lo) } else { 0.5 }))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateTones {
    pub covariate: Covariate,
    pub tones: Vec<Option<f64>>,
    /// Movies without a value: counted in the bins, absent from the ranking.
    pub unranked: usize,
}

/// Tones for one histogram, ranking only the movies in `metrics`.
pub fn covariate_projection(
    metrics: &[MovieMetrics],
    manifest: &CorpusManifest,
    covariate: Covariate,
    histogram: &FfrHistogram,
) -> Result<CovariateTones, MetricsError> {
    let members: Vec<(usize, Option<f64>)> = metrics
        .iter()
        .map(|m| (histogram.bin_of(m.corrected_ffr), manifest.get(&m.movie_id).and_then(|r| covariate.value(r))))
        .collect();
    let unranked = members.iter().filter(|m| m.1.is_none()).count();
    let tones = bin_tones(&members, histogram.bins.len()).ok_or(MetricsError::CovariateAbsent(covariate))?;
    Ok(CovariateTones { covariate, tones, unranked })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreBechdel {
    pub genre: String,
    pub mean_ffr: f64,
    pub pass_rate: f64,
    pub covered: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BechdelComparison {
    pub genres: Vec<GenreBechdel>,
    /// Genres dropped for lack of any movie with a Bechdel score.
    pub uncovered: Vec<String>,
    pub spearman_rho: f64,
}

pub fn bechdel_comparison(
    metrics: &[MovieMetrics],
    manifest: &CorpusManifest,
    genres: &[String],
) -> Result<BechdelComparison, MetricsError> {
    let mut rows = Vec::new();
    let mut uncovered = Vec::new();
    for g in genres {
        let in_genre: Vec<&MovieMetrics> = metrics
            .iter()
            .filter(|m| manifest.get(&m.movie_id).is_some_and(|r| r.has_genre(g)))
            .collect();
        let scores: Vec<bool> = in_genre
            .iter()
            .filter_map(|m| manifest.get(&m.movie_id).and_then(MovieRecord::passes_bechdel))
            .collect();
        if scores.is_empty() || in_genre.is_empty() {
            uncovered.push(g.clone());
            continue;
        }
        let mean = in_genre.iter().map(|m| m.corrected_ffr).sum::<f64>() / in_genre.len() as f64;
        rows.push(GenreBechdel {
            genre: g.clone(),
            mean_ffr: mean,
            pass_rate: scores.iter().filter(|&&p| p).count() as f64 / scores.len() as f64,
            covered: scores.len(),
        });
    }
    if rows.len() < 2 {
        return Err(MetricsError::TooFewGenres(rows.len()));
    }
    let ffr: Vec<f64> = rows.iter().map(|r| r.mean_ffr).collect();
    let pass: Vec<f64> = rows.iter().map(|r| r.pass_rate).collect();
    let spearman_rho = stats::spearman(&ffr, &pass)?;
    Ok(BechdelComparison { genres: rows, uncovered, spearman_rho })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BechdelRate {
    pub covered: usize,
    pub passing: usize,
    pub rate: Option<f64>,
}

pub fn bechdel_period_rates(manifest: &CorpusManifest, partition: &PeriodPartition) -> BTreeMap<String, BechdelRate> {
    partition
        .periods
        .iter()
        .map(|p| {
            let scores: Vec<bool> =
                p.movie_ids.iter().filter_map(|id| manifest.get(id).and_then(MovieRecord::passes_bechdel)).collect();
            let passing = scores.iter().filter(|&&s| s).count();
            let rate = (!scores.is_empty()).then(|| passing as f64 / scores.len() as f64);
            (p.label(), BechdelRate { covered: scores.len(), passing, rate })
        })
        .collect()
}

/// (female faces, male faces) in one frame.
pub type Combination = (u32, u32);

/// 3×3 rule-of-thirds cell of a box centre: (row, column), each 0..3.
pub fn thirds_cell(bbox: &BBox) -> (usize, usize) {
    let (cx, cy) = bbox.center();
    let third = |v: f64| {
        if v < 1.0 / 3.0 {
            0
        } else if v < 2.0 / 3.0 {
            1
        } else {
            2
        }
    };
    (third(cy), third(cx))
}

fn gender_index(g: Gender) -> usize {
    match g {
        Gender::Female => 0,
        Gender::Male => 1,
    }
}

/// Framing state over a set of frames: area sketches, frame combinations,
/// and per-combination thirds counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FramingAccumulator {
    pub areas: [QuantileSketch; 2],
    pub combinations: BTreeMap<Combination, u64>,
    /// combination -> gender -> row-major 3×3 counts
    pub thirds: BTreeMap<Combination, [[u64; 9]; 2]>,
    pub faces: u64,
}

impl FramingAccumulator {
    pub fn add_frame(&mut self, frame: &FrameDetections) {
        if frame.faces.is_empty() {
            return;
        }
        let key = (frame.count(Gender::Female), frame.count(Gender::Male));
        *self.combinations.entry(key).or_insert(0) += 1;
        let cells = self.thirds.entry(key).or_insert([[0; 9]; 2]);
        for f in &frame.faces {
            let g = gender_index(f.gender);
            self.areas[g].insert(f.bbox.area());
            let (r, c) = thirds_cell(&f.bbox);
            cells[g][r * 3 + c] += 1;
            self.faces += 1;
        }
    }

    pub fn merge(&mut self, other: &FramingAccumulator) {
        for g in 0..2 {
            self.areas[g].merge(&other.areas[g]);
        }
        for (k, v) in &other.combinations {
            *self.combinations.entry(*k).or_insert(0) += v;
        }
        for (k, cells) in &other.thirds {
            let mine = self.thirds.entry(*k).or_insert([[0; 9]; 2]);
            for g in 0..2 {
                for i in 0..9 {
                    mine[g][i] += cells[g][i];
                }
            }
        }
        self.faces += other.faces;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaStats {
    pub faces: u64,
    pub median: f64,
    pub p20: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceismSummary {
    pub female: AreaStats,
    pub male: AreaStats,
    pub overall_median: f64,
    /// Area below which 20% of all faces fall.
    pub tail_threshold: f64,
    /// Male median minus female median, in area fraction.
    pub median_difference: f64,
    /// U statistic is for the female sample.
    pub mann_whitney: TestResult,
}

pub fn faceism(acc: &FramingAccumulator) -> Result<FaceismSummary, MetricsError> {
    let stats_of = |g: Gender| -> Result<AreaStats, MetricsError> {
        let s = &acc.areas[gender_index(g)];
        if s.is_empty() {
            return Err(MetricsError::NoGenderFaces(g));
        }
        Ok(AreaStats { faces: s.count(), median: s.quantile(0.5)?, p20: s.quantile(TAIL_QUANTILE)? })
    };
    let female = stats_of(Gender::Female)?;
    let male = stats_of(Gender::Male)?;
    let mut all = acc.areas[0].clone();
    all.merge(&acc.areas[1]);
    let groups = QuantileSketch::tie_groups(&acc.areas[0], &acc.areas[1]);
    Ok(FaceismSummary {
        median_difference: male.median - female.median,
        female,
        male,
        overall_median: all.quantile(0.5)?,
        tail_threshold: all.quantile(TAIL_QUANTILE)?,
        mann_whitney: stats::mann_whitney_u_grouped(&groups)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationShare {
    pub n_female: u32,
    pub n_male: u32,
    pub frames: u64,
    pub share: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CombinationDistribution {
    #[serde(with = "combination_counts")]
    pub counts: BTreeMap<Combination, u64>,
    pub total: u64,
}

/// JSON object keys must be strings, so the map travels as a list.
mod combination_counts {
    use super::Combination;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    #[derive(Serialize, Deserialize)]
    struct Entry {
        n_female: u32,
        n_male: u32,
        frames: u64,
    }

    pub fn serialize<S: Serializer>(m: &BTreeMap<Combination, u64>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Entry> = m.iter().map(|(&(f, ma), &c)| Entry { n_female: f, n_male: ma, frames: c }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Combination, u64>, D::Error> {
        Ok(Vec::<Entry>::deserialize(d)?.into_iter().map(|e| ((e.n_female, e.n_male), e.frames)).collect())
    }
}

impl CombinationDistribution {
    pub fn from_counts(counts: BTreeMap<Combination, u64>) -> Self {
        let counts: BTreeMap<_, _> = counts.into_iter().filter(|(k, v)| k.0 + k.1 > 0 && *v > 0).collect();
        let total = counts.values().sum();
        Self { counts, total }
    }

    /// All keys by descending frame count, ties by key.
    pub fn ranked(&self) -> Vec<CombinationShare> {
        let mut keys: Vec<(&Combination, &u64)> = self.counts.iter().collect();
        keys.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        let mut running = 0u64;
        keys.into_iter()
            .map(|(&(f, m), &c)| {
                running += c;
                CombinationShare {
                    n_female: f,
                    n_male: m,
                    frames: c,
                    share: c as f64 / self.total as f64,
                    cumulative: running as f64 / self.total as f64,
                }
            })
            .collect()
    }

    /// Share of frames covered by the `k` most frequent keys.
    pub fn coverage(&self, k: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let mut v: Vec<u64> = self.counts.values().copied().collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v.iter().take(k).sum::<u64>() as f64 / self.total as f64
    }

    /// Shortest prefix of [`ranked`](Self::ranked) reaching `target` coverage.
    pub fn truncated(&self, target: f64) -> Vec<CombinationShare> {
        let mut out = Vec::new();
        for s in self.ranked() {
            let done = s.cumulative + BIN_EPS >= target;
            out.push(s);
            if done {
                break;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThirdsMatrix {
    pub n_female: u32,
    pub n_male: u32,
    /// Row-major 3×3 counts (top/middle/bottom × left/center/right).
    pub female: [u64; 9],
    pub male: [u64; 9],
}

impl ThirdsMatrix {
    pub fn counts(&self, g: Gender) -> &[u64; 9] {
        match g {
            Gender::Female => &self.female,
            Gender::Male => &self.male,
        }
    }

    pub fn faces(&self, g: Gender) -> u64 {
        self.counts(g).iter().sum()
    }

    /// Percentages over this gender's faces; `None` when there are none.
    pub fn percentages(&self, g: Gender) -> Option<[f64; 9]> {
        let total = self.faces(g);
        (total > 0).then(|| self.counts(g).map(|c| 100.0 * c as f64 / total as f64))
    }
}

pub fn thirds_matrices(acc: &FramingAccumulator) -> Vec<ThirdsMatrix> {
    acc.thirds
        .iter()
        .map(|(&(f, m), cells)| ThirdsMatrix { n_female: f, n_male: m, female: cells[0], male: cells[1] })
        .collect()
}

/// A (combination, gender) face configuration, e.g. the female faces of
/// frames with one woman and one man.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    pub n_female: u32,
    pub n_male: u32,
    pub gender: Gender,
}

impl Configuration {
    pub fn label(&self) -> String {
        format!("{}F{}M:{}", self.n_female, self.n_male, self.gender)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceTest {
    pub a: Configuration,
    pub b: Configuration,
    pub grid: TestResult,
    pub horizontal: TestResult,
    pub vertical: TestResult,
}

fn columns_of(cells: &[u64; 9]) -> Vec<u64> {
    (0..3).map(|c| cells[c] + cells[3 + c] + cells[6 + c]).collect()
}

fn rows_of(cells: &[u64; 9]) -> Vec<u64> {
    (0..3).map(|r| cells[3 * r] + cells[3 * r + 1] + cells[3 * r + 2]).collect()
}

/// Chi-square independence tests between every pair of configurations with
/// at least one face: on the full grid, on columns (horizontal position)
/// and on rows (vertical position).
pub fn thirds_independence(matrices: &[ThirdsMatrix]) -> Result<Vec<IndependenceTest>, MetricsError> {
    let mut configs: Vec<(Configuration, [u64; 9])> = Vec::new();
    for m in matrices {
        for g in Gender::ALL {
            if m.faces(g) > 0 {
                configs.push((Configuration { n_female: m.n_female, n_male: m.n_male, gender: g }, *m.counts(g)));
            }
        }
    }
    configs.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out = Vec::new();
    for i in 0..configs.len() {
        for j in i + 1..configs.len() {
            let (a, ca) = &configs[i];
            let (b, cb) = &configs[j];
            out.push(IndependenceTest {
                a: *a,
                b: *b,
                grid: stats::chi_square(&[ca.to_vec(), cb.to_vec()])?,
                horizontal: stats::chi_square(&[columns_of(ca), columns_of(cb)])?,
                vertical: stats::chi_square(&[rows_of(ca), rows_of(cb)])?,
            });
        }
    }
    Ok(out)
}

/// Movies whose frames feed the framing analyses.
pub fn latest_period_movies(partition: &PeriodPartition) -> BTreeSet<String> {
    partition.latest().map(|p| p.movie_ids.clone()).unwrap_or_default()
}
