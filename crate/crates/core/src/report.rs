//! Rendering of an [`Analysis`] into report files.
//!
//! Every float is written with exactly six decimals, in JSON and CSV alike,
//! and every file is written through a temporary sibling and renamed into
//! place, so a report directory is either complete or absent per file.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Number, Value};
use thiserror::Error;

use crate::analysis::Analysis;
use crate::detection_io::Gender;
use crate::metrics::Covariate;
use crate::warnings::Warning;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot serialise {0}")]
    Json(String),
}

/// Files produced by [`render_report`], in the order they are written.
pub const REPORT_FILES: [&str; 13] = [
    "summary.json",
    "ffr_by_movie.csv",
    "ffr_by_period.csv",
    "ffr_by_genre.csv",
    "ffr_histograms.csv",
    "bechdel_genres.csv",
    "faceism.json",
    "combinations.csv",
    "combinations.json",
    "thirds_matrices.json",
    "thirds_cells.csv",
    "thirds_independence.csv",
    "warnings.jsonl",
];

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let io = |source| ReportError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(io)
}

pub fn fixed6(v: f64) -> String {
    format!("{v:.6}")
}

fn fixed_opt(v: Option<f64>) -> String {
    v.map(fixed6).unwrap_or_default()
}

/// Rewrites every non-integer number in `v` with six decimals.
pub fn fix_floats(v: &mut Value) {
    match v {
        Value::Number(n) => {
            let text = n.to_string();
            if text.contains(['.', 'e', 'E']) {
                if let Some(f) = n.as_f64() {
                    *n = Number::from_str(&fixed6(f)).expect("fixed decimal is a JSON number");
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(fix_floats),
        Value::Object(map) => map.values_mut().for_each(fix_floats),
        _ => {}
    }
}

/// Pretty JSON with fixed six-decimal floats and a trailing newline.
pub fn to_fixed_json<T: Serialize>(value: &T) -> Result<String, ReportError> {
    let mut v = serde_json::to_value(value).map_err(|e| ReportError::Json(e.to_string()))?;
    fix_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| ReportError::Json(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// One compact JSON object per line.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String, ReportError> {
    let mut out = String::new();
    for item in items {
        let mut v = serde_json::to_value(item).map_err(|e| ReportError::Json(e.to_string()))?;
        fix_floats(&mut v);
        out.push_str(&v.to_string());
        out.push('\n');
    }
    Ok(out)
}

struct Csv(String);

impl Csv {
    fn new(header: &[&str]) -> Self {
        let mut c = Csv(String::new());
        c.row(header.iter().map(|s| s.to_string()));
        c
    }

    fn row(&mut self, fields: impl IntoIterator<Item = String>) {
        let fields: Vec<String> = fields
            .into_iter()
            .map(|f| if f.contains([',', '"', '\n']) { format!("\"{}\"", f.replace('"', "\"\"")) } else { f })
            .collect();
        let _ = writeln!(self.0, "{}", fields.join(","));
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    meta: &'a crate::analysis::AnalysisMeta,
    factors: &'a crate::calibration::CorrectionFactors,
    detections: &'a crate::analysis::DetectionTotals,
    movies_with_ffr: usize,
    movies_without_faces: usize,
    corpus_ffr: crate::metrics::Moments,
    bechdel_spearman_rho: Option<f64>,
    combination_keys_for_coverage: usize,
    independence_tests: usize,
    warnings: usize,
}

#[derive(Serialize)]
struct GenderCells {
    faces: u64,
    counts: [[u64; 3]; 3],
    percentages: Option<[[f64; 3]; 3]>,
}

#[derive(Serialize)]
struct MatrixDoc {
    n_female: u32,
    n_male: u32,
    female: GenderCells,
    male: GenderCells,
}

fn grid<T: Copy>(cells: &[T; 9]) -> [[T; 3]; 3] {
    [[cells[0], cells[1], cells[2]], [cells[3], cells[4], cells[5]], [cells[6], cells[7], cells[8]]]
}

/// Renders every report file from `analysis` into `out_dir`, returning the
/// written paths. Nothing is recomputed beyond formatting and ordering.
pub fn render_report(analysis: &Analysis, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();
    let mut emit = |name: &str, body: String| -> Result<(), ReportError> {
        let p = out_dir.join(name);
        write_atomic(&p, body.as_bytes())?;
        written.push(p);
        Ok(())
    };
    let a = analysis;

    let ffrs: Vec<f64> = a.movies.iter().map(|m| m.corrected_ffr).collect();
    let truncated = a.combinations.truncated(a.meta.coverage);
    emit(
        "summary.json",
        to_fixed_json(&Summary {
            meta: &a.meta,
            factors: &a.factors,
            detections: &a.detections,
            movies_with_ffr: a.movies.len(),
            movies_without_faces: a.no_faces.len(),
            corpus_ffr: crate::metrics::Moments::of(&ffrs),
            bechdel_spearman_rho: a.bechdel.as_ref().map(|b| b.spearman_rho),
            combination_keys_for_coverage: truncated.len(),
            independence_tests: a.independence.len(),
            warnings: a.warnings.len(),
        })?,
    )?;

    let mut c = Csv::new(&[
        "movie_id",
        "period",
        "n_female_det",
        "n_male_det",
        "raw_ffr",
        "corrected_ffr",
        "corrected_female",
        "corrected_male",
        "clamped",
    ]);
    for m in &a.movies {
        c.row([
            m.movie_id.clone(),
            m.period.clone(),
            m.n_female_det.to_string(),
            m.n_male_det.to_string(),
            fixed6(m.raw_ffr),
            fixed6(m.corrected_ffr),
            fixed6(m.corrected_female),
            fixed6(m.corrected_male),
            m.clamped.to_string(),
        ]);
    }
    emit("ffr_by_movie.csv", c.0)?;

    let mut c = Csv::new(&[
        "period",
        "year_lo",
        "year_hi",
        "movies",
        "movies_with_ffr",
        "mean_ffr",
        "sd_ffr",
        "lambda_male",
        "lambda_female",
        "bechdel_covered",
        "bechdel_pass_rate",
    ]);
    for (info, h) in a.meta.periods.iter().zip(&a.histograms) {
        let f = a.factors.periods.get(&info.label);
        let b = a.bechdel_periods.get(&info.label);
        c.row([
            info.label.clone(),
            info.year_lo.to_string(),
            info.year_hi.to_string(),
            info.movies.to_string(),
            h.moments.n.to_string(),
            fixed_opt(h.moments.mean),
            fixed_opt(h.moments.sd),
            fixed_opt(f.map(|f| f.lambda_male)),
            fixed_opt(f.map(|f| f.lambda_female)),
            b.map(|b| b.covered.to_string()).unwrap_or_default(),
            fixed_opt(b.and_then(|b| b.rate)),
        ]);
    }
    emit("ffr_by_period.csv", c.0)?;

    let mut c = Csv::new(&["genre", "movies", "mean_ffr", "sd_ffr"]);
    for g in &a.genres {
        c.row([g.genre.clone(), g.moments.n.to_string(), fixed_opt(g.moments.mean), fixed_opt(g.moments.sd)]);
    }
    emit("ffr_by_genre.csv", c.0)?;

    let mut header = vec!["period".to_string(), "bin_lo_pct".into(), "bin_hi_pct".into(), "movies".into()];
    header.extend(Covariate::ALL.iter().map(|c| format!("tone_{c}")));
    let mut c = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (h, t) in a.histograms.iter().zip(&a.tones) {
        let w = h.histogram.bin_width_pct;
        for (k, (&count, lo)) in h.histogram.bins.iter().zip(h.histogram.edges()).enumerate() {
            let mut row = vec![h.period.clone(), lo.to_string(), (lo + w).min(100).to_string(), count.to_string()];
            for cov in Covariate::ALL {
                let tone = t.covariates.iter().find(|ct| ct.covariate == cov).and_then(|ct| ct.tones[k]);
                row.push(fixed_opt(tone));
            }
            c.row(row);
        }
    }
    emit("ffr_histograms.csv", c.0)?;

    let mut c = Csv::new(&["genre", "mean_ffr", "pass_rate", "covered"]);
    if let Some(b) = &a.bechdel {
        for g in &b.genres {
            c.row([g.genre.clone(), fixed6(g.mean_ffr), fixed6(g.pass_rate), g.covered.to_string()]);
        }
    }
    emit("bechdel_genres.csv", c.0)?;

    emit("faceism.json", to_fixed_json(&a.faceism)?)?;

    let mut c = Csv::new(&["n_female", "n_male", "frames", "share", "cumulative"]);
    for s in &truncated {
        c.row([s.n_female.to_string(), s.n_male.to_string(), s.frames.to_string(), fixed6(s.share), fixed6(s.cumulative)]);
    }
    emit("combinations.csv", c.0)?;
    emit(
        "combinations.json",
        to_fixed_json(&serde_json::json!({
            "total_frames": a.combinations.total,
            "coverage_target": a.meta.coverage,
            "reported_keys": truncated.len(),
            "combinations": a.combinations.ranked(),
        }))?,
    )?;

    let cells = |m: &crate::metrics::ThirdsMatrix, g: Gender| GenderCells {
        faces: m.faces(g),
        counts: grid(m.counts(g)),
        percentages: m.percentages(g).map(|p| grid(&p)),
    };
    let docs: Vec<MatrixDoc> = a
        .thirds
        .iter()
        .map(|m| MatrixDoc { n_female: m.n_female, n_male: m.n_male, female: cells(m, Gender::Female), male: cells(m, Gender::Male) })
        .collect();
    emit("thirds_matrices.json", to_fixed_json(&docs)?)?;

    let mut c = Csv::new(&["n_female", "n_male", "gender", "row", "col", "faces", "percent"]);
    for m in &a.thirds {
        for g in Gender::ALL {
            let Some(pct) = m.percentages(g) else { continue };
            for i in 0..9 {
                c.row([
                    m.n_female.to_string(),
                    m.n_male.to_string(),
                    g.to_string(),
                    (i / 3).to_string(),
                    (i % 3).to_string(),
                    m.counts(g)[i].to_string(),
                    fixed6(pct[i]),
                ]);
            }
        }
    }
    emit("thirds_cells.csv", c.0)?;

    let mut c = Csv::new(&["config_a", "config_b", "table", "statistic", "df", "p_value"]);
    for t in &a.independence {
        for (name, r) in [("grid", &t.grid), ("horizontal", &t.horizontal), ("vertical", &t.vertical)] {
            c.row([
                t.a.label(),
                t.b.label(),
                name.to_string(),
                fixed6(r.statistic),
                r.df.map(|d| d.to_string()).unwrap_or_default(),
                fixed6(r.p_value),
            ]);
        }
    }
    emit("thirds_independence.csv", c.0)?;

    emit("warnings.jsonl", to_jsonl::<Warning>(&a.warnings)?)?;
    Ok(written)
}
