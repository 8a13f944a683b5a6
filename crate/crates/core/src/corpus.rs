//! Movie manifest: loading, validation, filtering, period partitioning, and
//! Bechdel enrichment.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Manifest columns in their canonical order.
pub const MANIFEST_COLUMNS: [&str; 14] = [
    "id",
    "title",
    "year",
    "genres",
    "runtime_min",
    "budget_usd",
    "gross_usd",
    "rating_value",
    "rating_count",
    "female_rating_share",
    "parental_rating",
    "seeders",
    "frame_width",
    "frame_height",
];

/// Genres dropped by [`FilterCriteria::default`].
pub const DEFAULT_EXCLUDED_GENRES: [&str; 2] = ["Documentary", "Animation"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed manifest {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("manifest has no usable rows")]
    EmptyManifest,
    #[error("duplicate movie id {0:?}")]
    DuplicateId(String),
    #[error("period count must be at least 1")]
    InvalidPeriodCount,
    #[error("cannot split {years} distinct years into {k} periods")]
    TooManyPeriods { k: usize, years: usize },
    #[error("bechdel cache {path}: {message}")]
    Cache { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovieRecord {
    pub id: String,
    pub title: String,
    pub year: i32,
    pub genres: BTreeSet<String>,
    pub runtime_min: u32,
    pub budget_usd: u64,
    pub gross_usd: u64,
    pub rating_value: f64,
    pub rating_count: u64,
    pub female_rating_share: Option<f64>,
    pub parental_rating: String,
    pub seeders: Option<u64>,
    pub bechdel_score: Option<u8>,
    pub frame_width: u32,
    pub frame_height: u32,
}

impl MovieRecord {
    pub fn has_genre(&self, genre: &str) -> bool {
        self.genres.iter().any(|g| g.eq_ignore_ascii_case(genre))
    }

    /// `None` when the movie has no Bechdel rating.
    pub fn passes_bechdel(&self) -> Option<bool> {
        self.bechdel_score.map(passes_bechdel)
    }
}

/// A movie passes iff all three criteria hold, i.e. a score of 3.
pub fn passes_bechdel(score: u8) -> bool {
    score == 3
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based line number in the source file (header is line 1 for CSV).
    pub line: usize,
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: PathBuf,
    pub rows_read: usize,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    movies: Vec<MovieRecord>,
    index: HashMap<String, usize>,
    pub provenance: Provenance,
}

impl CorpusManifest {
    /// Sorts by id and rejects duplicate ids.
    pub fn from_movies(mut movies: Vec<MovieRecord>, provenance: Provenance) -> Result<Self, CorpusError> {
        movies.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = HashMap::with_capacity(movies.len());
        for (i, m) in movies.iter().enumerate() {
            if index.insert(m.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(m.id.clone()));
            }
        }
        Ok(Self { movies, index, provenance })
    }

    pub fn movies(&self) -> &[MovieRecord] {
        &self.movies
    }

    pub fn get(&self, id: &str) -> Option<&MovieRecord> {
        self.index.get(id).map(|&i| &self.movies[i])
    }

    pub fn len(&self) -> usize {
        self.movies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.movies.is_empty()
    }

    fn with_movies(&self, movies: Vec<MovieRecord>) -> Self {
        let index = movies.iter().enumerate().map(|(i, m)| (m.id.clone(), i)).collect();
        Self { movies, index, provenance: self.provenance.clone() }
    }
}

/// Loads a CSV or JSON-lines manifest (chosen by extension: `.jsonl`,
/// `.ndjson` and `.json` are JSON lines, anything else CSV).
pub fn load_manifest(path: &Path) -> Result<CorpusManifest, CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.to_path_buf(), source };
    let rows = if is_json_lines(path) {
        read_json_rows(path, File::open(path).map_err(io_err)?)?
    } else {
        read_csv_rows(path, File::open(path).map_err(io_err)?)?
    };
    if rows.is_empty() {
        return Err(CorpusError::EmptyManifest);
    }
    let mut provenance = Provenance { source: path.to_path_buf(), rows_read: rows.len(), rejected: vec![] };
    let mut movies = Vec::new();
    for (line, fields) in rows {
        match parse_movie(&fields) {
            Ok(m) => movies.push(m),
            Err(reason) => provenance.rejected.push(Rejection {
                line,
                id: fields.get("id").cloned(),
                reason,
            }),
        }
    }
    if movies.is_empty() {
        return Err(CorpusError::EmptyManifest);
    }
    CorpusManifest::from_movies(movies, provenance)
}

/// Writes a manifest as CSV in canonical column order plus `bechdel_score`.
/// [`load_manifest`] reads the result back unchanged.
pub fn write_manifest_csv<W: Write>(m: &CorpusManifest, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = MANIFEST_COLUMNS.to_vec();
    header.push("bechdel_score");
    w.write_record(&header)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in m.movies() {
        w.write_record([
            r.id.clone(),
            r.title.clone(),
            r.year.to_string(),
            r.genres.iter().cloned().collect::<Vec<_>>().join("|"),
            r.runtime_min.to_string(),
            r.budget_usd.to_string(),
            r.gross_usd.to_string(),
            r.rating_value.to_string(),
            r.rating_count.to_string(),
            opt(r.female_rating_share.map(|v| v.to_string())),
            r.parental_rating.clone(),
            opt(r.seeders.map(|v| v.to_string())),
            r.frame_width.to_string(),
            r.frame_height.to_string(),
            opt(r.bechdel_score.map(|v| v.to_string())),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn is_json_lines(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("jsonl" | "ndjson" | "json")
    )
}

type Row = (usize, HashMap<String, String>);

fn read_csv_rows(path: &Path, file: File) -> Result<Vec<Row>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(file);
    let malformed = |e: csv::Error| CorpusError::Malformed { path: path.to_path_buf(), message: e.to_string() };
    let headers = reader.headers().map_err(malformed)?.clone();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(malformed)?;
        let fields = headers
            .iter()
            .zip(record.iter())
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        rows.push((i + 2, fields));
    }
    Ok(rows)
}

fn read_json_rows(path: &Path, file: File) -> Result<Vec<Row>, CorpusError> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = HashMap::new();
        // A line that is not a JSON object becomes a row with no fields and
        // is rejected on the first required column.
        if let Ok(serde_json::Value::Object(obj)) = serde_json::from_str::<serde_json::Value>(&line) {
            for (k, v) in obj {
                let text = match v {
                    serde_json::Value::Null => continue,
                    serde_json::Value::String(s) => s,
                    serde_json::Value::Array(items) => items
                        .iter()
                        .map(|g| g.as_str().map(str::to_string).unwrap_or_else(|| g.to_string()))
                        .collect::<Vec<_>>()
                        .join("|"),
                    other => other.to_string(),
                };
                if !text.trim().is_empty() {
                    fields.insert(k, text.trim().to_string());
                }
            }
        } else {
            fields.insert("__malformed".into(), line);
        }
        rows.push((i + 1, fields));
    }
    Ok(rows)
}

fn parse_movie(f: &HashMap<String, String>) -> Result<MovieRecord, String> {
    if f.contains_key("__malformed") {
        return Err("malformed-row".into());
    }
    fn required<'a>(f: &'a HashMap<String, String>, name: &str) -> Result<&'a str, String> {
        f.get(name).map(String::as_str).ok_or_else(|| format!("missing-field:{name}"))
    }
    fn parsed<T: std::str::FromStr>(f: &HashMap<String, String>, name: &str) -> Result<T, String> {
        required(f, name)?.parse().map_err(|_| format!("invalid-field:{name}"))
    }
    fn optional<T: std::str::FromStr>(f: &HashMap<String, String>, name: &str) -> Result<Option<T>, String> {
        f.get(name).map(|v| v.parse().map_err(|_| format!("invalid-field:{name}"))).transpose()
    }
    let invalid = |name: &str| format!("invalid-field:{name}");

    // Check presence of every required column first so the reported reason
    // names the first missing column in manifest order.
    for name in MANIFEST_COLUMNS {
        if !matches!(name, "female_rating_share" | "seeders") {
            required(f, name)?;
        }
    }
    let genres: BTreeSet<String> = required(f, "genres")?
        .split('|')
        .map(str::trim)
        .filter(|g| !g.is_empty())
        .map(str::to_string)
        .collect();
    if genres.is_empty() {
        return Err(invalid("genres"));
    }
    let runtime_min: u32 = parsed(f, "runtime_min")?;
    if runtime_min == 0 {
        return Err(invalid("runtime_min"));
    }
    let rating_value: f64 = parsed(f, "rating_value")?;
    if !(0.0..=10.0).contains(&rating_value) {
        return Err(invalid("rating_value"));
    }
    let female_rating_share: Option<f64> = optional(f, "female_rating_share")?;
    if female_rating_share.is_some_and(|s| !(0.0..=1.0).contains(&s)) {
        return Err(invalid("female_rating_share"));
    }
    let bechdel_score: Option<u8> = optional(f, "bechdel_score")?;
    if bechdel_score.is_some_and(|s| s > 3) {
        return Err(invalid("bechdel_score"));
    }
    let frame_width: u32 = parsed(f, "frame_width")?;
    let frame_height: u32 = parsed(f, "frame_height")?;
    if frame_width == 0 {
        return Err(invalid("frame_width"));
    }
    if frame_height == 0 {
        return Err(invalid("frame_height"));
    }
    Ok(MovieRecord {
        id: required(f, "id")?.to_string(),
        title: required(f, "title")?.to_string(),
        year: parsed(f, "year")?,
        genres,
        runtime_min,
        budget_usd: parsed(f, "budget_usd")?,
        gross_usd: parsed(f, "gross_usd")?,
        rating_value,
        rating_count: parsed(f, "rating_count")?,
        female_rating_share,
        parental_rating: required(f, "parental_rating")?.to_string(),
        seeders: optional(f, "seeders")?,
        bechdel_score,
        frame_width,
        frame_height,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterCriteria {
    pub year_lo: i32,
    pub year_hi: i32,
    pub excluded_genres: Vec<String>,
    /// Movies with a known seeder count below this are dropped; movies
    /// without a seeder count are kept.
    pub min_seeders: Option<u64>,
}

impl Default for FilterCriteria {
    fn default() -> Self {
        Self {
            year_lo: 1985,
            year_hi: 2019,
            excluded_genres: DEFAULT_EXCLUDED_GENRES.iter().map(|g| g.to_string()).collect(),
            min_seeders: Some(3),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub kept: usize,
    pub dropped_year: usize,
    pub dropped_genre: usize,
    pub dropped_seeders: usize,
}

/// Keeps only movies meeting every criterion. Each dropped movie is
/// attributed to the first failing criterion (year, genre, seeders).
pub fn filter_corpus(m: &CorpusManifest, criteria: &FilterCriteria) -> (CorpusManifest, FilterReport) {
    assert!(criteria.year_lo <= criteria.year_hi, "year range is inverted");
    let mut report = FilterReport::default();
    let mut kept = Vec::new();
    for movie in m.movies() {
        if movie.year < criteria.year_lo || movie.year > criteria.year_hi {
            report.dropped_year += 1;
        } else if criteria.excluded_genres.iter().any(|g| movie.has_genre(g)) {
            report.dropped_genre += 1;
        } else if matches!((criteria.min_seeders, movie.seeders), (Some(min), Some(s)) if s < min) {
            report.dropped_seeders += 1;
        } else {
            kept.push(movie.clone());
        }
    }
    report.kept = kept.len();
    (m.with_movies(kept), report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub year_lo: i32,
    pub year_hi: i32,
    pub movie_ids: BTreeSet<String>,
}

impl Period {
    pub fn label(&self) -> String {
        format!("{}-{}", self.year_lo, self.year_hi)
    }

    pub fn contains_year(&self, year: i32) -> bool {
        (self.year_lo..=self.year_hi).contains(&year)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodPartition {
    pub periods: Vec<Period>,
}

impl PeriodPartition {
    pub fn labels(&self) -> Vec<String> {
        self.periods.iter().map(Period::label).collect()
    }

    pub fn period_of_year(&self, year: i32) -> Option<&Period> {
        self.periods.iter().find(|p| p.contains_year(year))
    }

    pub fn period_of_movie(&self, id: &str) -> Option<&Period> {
        self.periods.iter().find(|p| p.movie_ids.contains(id))
    }

    pub fn latest(&self) -> Option<&Period> {
        self.periods.last()
    }
}

/// Splits the corpus into `k` contiguous year intervals whose sizes deviate
/// as little as possible from `n / k` (minimising the largest deviation).
/// Among optimal splits the one with the smallest spread between the
/// largest and smallest period wins, then the one with the earliest cuts.
pub fn split_periods(m: &CorpusManifest, k: usize) -> Result<PeriodPartition, CorpusError> {
    if k == 0 {
        return Err(CorpusError::InvalidPeriodCount);
    }
    if m.is_empty() {
        return Err(CorpusError::EmptyManifest);
    }
    let mut by_year: BTreeMap<i32, BTreeSet<String>> = BTreeMap::new();
    for movie in m.movies() {
        by_year.entry(movie.year).or_default().insert(movie.id.clone());
    }
    let years: Vec<i32> = by_year.keys().copied().collect();
    let counts: Vec<i64> = by_year.values().map(|s| s.len() as i64).collect();
    let cuts = optimal_cuts(&counts, k).ok_or(CorpusError::TooManyPeriods { k, years: years.len() })?;

    let mut periods = Vec::with_capacity(k);
    let mut start = 0;
    for end in cuts.into_iter().chain(std::iter::once(years.len())) {
        let movie_ids = years[start..end].iter().flat_map(|y| by_year[y].iter().cloned()).collect();
        periods.push(Period { year_lo: years[start], year_hi: years[end - 1], movie_ids });
        start = end;
    }
    Ok(PeriodPartition { periods })
}

/// Returns the `k - 1` cut indices (group boundaries as exclusive ends) into
/// `counts`, or `None` when `k` exceeds the number of groups available.
fn optimal_cuts(counts: &[i64], k: usize) -> Option<Vec<usize>> {
    let y = counts.len();
    if k > y {
        return None;
    }
    let n: i64 = counts.iter().sum();
    let mut prefix = vec![0i64; y + 1];
    for i in 0..y {
        prefix[i + 1] = prefix[i] + counts[i];
    }
    let size = |a: usize, b: usize| prefix[b] - prefix[a];
    // Deviation of a group scaled by k to stay integral: |k * size - n|.
    let cost = |a: usize, b: usize| ((k as i64) * size(a, b) - n).abs();

    // best[j][i]: smallest achievable max cost splitting the first i years into j groups.
    const INF: i64 = i64::MAX;
    let mut best = vec![vec![INF; y + 1]; k + 1];
    best[0][0] = 0;
    for j in 1..=k {
        for i in j..=y {
            for p in (j - 1)..i {
                if best[j - 1][p] == INF {
                    continue;
                }
                let c = best[j - 1][p].max(cost(p, i));
                if c < best[j][i] {
                    best[j][i] = c;
                }
            }
        }
    }
    let target = best[k][y];

    // The smallest period of any split is at most n / k, so only those
    // sizes are candidates for the lower bound.
    let mut lows: Vec<i64> = (0..y)
        .flat_map(|a| (a + 1..=y).map(move |b| (a, b)))
        .filter(|&(a, b)| cost(a, b) <= target && (k as i64) * size(a, b) <= n)
        .map(|(a, b)| size(a, b))
        .collect();
    lows.sort_unstable();
    lows.dedup();

    let mut chosen: Option<(i64, Vec<usize>)> = None;
    for lo in lows {
        let ok = |a: usize, b: usize| cost(a, b) <= target && size(a, b) >= lo;
        let Some(hi) = smallest_largest(y, k, &size, &ok) else {
            continue;
        };
        let spread = hi - lo;
        if chosen.as_ref().is_some_and(|(s, _)| spread > *s) {
            continue;
        }
        let cuts = earliest_cuts(y, k, |a, b| ok(a, b) && size(a, b) <= hi).expect("bounded split exists");
        let better = match &chosen {
            None => true,
            Some((s, c)) => spread < *s || cuts < *c,
        };
        if better {
            chosen = Some((spread, cuts));
        }
    }
    chosen.map(|(_, cuts)| cuts)
}

/// Smallest possible largest group over splits of `0..y` into `k` groups
/// that all satisfy `ok`.
fn smallest_largest(
    y: usize,
    k: usize,
    size: &impl Fn(usize, usize) -> i64,
    ok: &impl Fn(usize, usize) -> bool,
) -> Option<i64> {
    const INF: i64 = i64::MAX;
    let mut best = vec![vec![INF; y + 1]; k + 1];
    best[0][0] = 0;
    for j in 1..=k {
        for i in j..=y {
            for p in (j - 1)..i {
                if best[j - 1][p] == INF || !ok(p, i) {
                    continue;
                }
                best[j][i] = best[j][i].min(best[j - 1][p].max(size(p, i)));
            }
        }
    }
    (best[k][y] != INF).then_some(best[k][y])
}

/// Lexicographically smallest cut list among splits whose groups all satisfy `ok`.
fn earliest_cuts(y: usize, k: usize, ok: impl Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    // feasible[j][i]: years i.. can form j groups that all satisfy `ok`.
    let mut feasible = vec![vec![false; y + 1]; k + 1];
    feasible[0][y] = true;
    for j in 1..=k {
        for i in (0..y).rev() {
            feasible[j][i] = (i + 1..=y).any(|e| feasible[j - 1][e] && ok(i, e));
        }
    }
    if !feasible[k][0] {
        return None;
    }
    let mut cuts = Vec::with_capacity(k - 1);
    let mut start = 0;
    for remaining in (1..k).rev() {
        let end = (start + 1..=y).find(|&e| ok(start, e) && feasible[remaining][e])?;
        cuts.push(end);
        start = end;
    }
    Some(cuts)
}

/// The `n` most frequent genres; a movie counts once for each of its genres.
pub fn top_genres(m: &CorpusManifest, n: usize) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for movie in m.movies() {
        for g in &movie.genres {
            *counts.entry(g.as_str()).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    // stable sort keeps the lexicographic order among equal counts
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    ranked.into_iter().take(n).map(|(g, _)| g.to_string()).collect()
}

#[derive(Debug, Error)]
pub enum BechdelError {
    #[error("bechdel service unreachable: {0}")]
    Network(String),
}

/// Something that can look up a Bechdel score by movie id.
pub trait BechdelSource {
    /// `Ok(None)` when the service has no rating for the id.
    fn lookup(&self, movie_id: &str) -> Result<Option<u8>, BechdelError>;
}

/// Blocking HTTP client for the bechdeltest.com JSON API.
pub struct HttpBechdelClient {
    base_url: String,
    client: reqwest::blocking::Client,
}

impl HttpBechdelClient {
    pub const DEFAULT_BASE_URL: &'static str = "http://bechdeltest.com";

    pub fn new(base_url: impl Into<String>) -> Result<Self, BechdelError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(15))
            .build()
            .map_err(|e| BechdelError::Network(e.to_string()))?;
        Ok(Self { base_url: base_url.into().trim_end_matches('/').to_string(), client })
    }
}

#[derive(Deserialize)]
struct BechdelResponse {
    #[serde(default)]
    rating: Option<serde_json::Value>,
}

fn rating_from_value(v: &serde_json::Value) -> Option<u8> {
    let r = match v {
        serde_json::Value::String(s) => s.trim().parse::<u8>().ok()?,
        serde_json::Value::Number(n) => u8::try_from(n.as_u64()?).ok()?,
        _ => return None,
    };
    (r <= 3).then_some(r)
}

impl BechdelSource for HttpBechdelClient {
    fn lookup(&self, movie_id: &str) -> Result<Option<u8>, BechdelError> {
        let imdb = movie_id.trim_start_matches("tt");
        let url = format!("{}/api/v1/getMovieByImdbId?imdbid={}", self.base_url, imdb);
        let resp = self.client.get(url).send().map_err(|e| BechdelError::Network(e.to_string()))?;
        if resp.status() == reqwest::StatusCode::NOT_FOUND {
            return Ok(None);
        }
        if !resp.status().is_success() {
            return Err(BechdelError::Network(format!("HTTP {}", resp.status())));
        }
        let body = resp.text().map_err(|e| BechdelError::Network(e.to_string()))?;
        Ok(serde_json::from_str::<BechdelResponse>(&body)
            .ok()
            .and_then(|r| r.rating)
            .as_ref()
            .and_then(rating_from_value))
    }
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    imdbid: String,
    rating: Option<u8>,
}

/// JSON-lines cache of Bechdel lookups keyed by movie id. Negative answers
/// are cached too (`"rating": null`).
#[derive(Debug)]
pub struct BechdelCache {
    path: PathBuf,
    entries: BTreeMap<String, Option<u8>>,
}

impl BechdelCache {
    pub fn open(path: &Path) -> Result<Self, CorpusError> {
        let mut entries = BTreeMap::new();
        if path.exists() {
            let file = File::open(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CacheLine = serde_json::from_str(&line).map_err(|e| CorpusError::Cache {
                    path: path.to_path_buf(),
                    message: format!("line {}: {e}", i + 1),
                })?;
                entries.insert(entry.imdbid, entry.rating);
            }
        }
        Ok(Self { path: path.to_path_buf(), entries })
    }

    pub fn get(&self, id: &str) -> Option<Option<u8>> {
        self.entries.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn append(&mut self, id: &str, rating: Option<u8>) -> Result<(), CorpusError> {
        let io = |source| CorpusError::Io { path: self.path.clone(), source };
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path).map_err(io)?;
        let line = serde_json::to_string(&CacheLine { imdbid: id.to_string(), rating }).expect("cache line");
        writeln!(file, "{line}").map_err(io)?;
        self.entries.insert(id.to_string(), rating);
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichReport {
    pub from_cache: usize,
    pub fetched: usize,
    pub network_calls: usize,
    /// Movies for which no score is known after enrichment.
    pub uncovered: Vec<String>,
    pub warning: Option<String>,
}

/// Fills `bechdel_score` from the cache, then from `source` for ids the
/// cache has never seen. After the first network failure the remaining
/// movies are resolved from the cache only.
pub fn enrich_bechdel(
    m: &CorpusManifest,
    cache: &mut BechdelCache,
    source: Option<&dyn BechdelSource>,
) -> Result<(CorpusManifest, EnrichReport), CorpusError> {
    let mut report = EnrichReport::default();
    let mut source = source;
    let mut movies = Vec::with_capacity(m.len());
    for movie in m.movies() {
        let mut movie = movie.clone();
        let score = match cache.get(&movie.id) {
            Some(cached) => {
                report.from_cache += 1;
                cached
            }
            None => match source {
                Some(s) => {
                    report.network_calls += 1;
                    match s.lookup(&movie.id) {
                        Ok(score) => {
                            report.fetched += 1;
                            cache.append(&movie.id, score)?;
                            score
                        }
                        Err(e) => {
                            log::warn!("{e}; continuing with cached scores only");
                            report.warning = Some(e.to_string());
                            source = None;
                            None
                        }
                    }
                }
                None => None,
            },
        };
        if let Some(score) = score {
            movie.bechdel_score = Some(score);
        }
        if movie.bechdel_score.is_none() {
            report.uncovered.push(movie.id.clone());
        }
        movies.push(movie);
    }
    Ok((m.with_movies(movies), report))
}
