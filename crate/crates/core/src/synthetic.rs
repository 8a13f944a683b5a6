//! Seeded synthetic corpora with a planted female face ratio.
//!
//! Each face is drawn as a detector label first and a true gender second:
//! a face labelled female is truly female with probability `lambda_female`,
//! a face labelled male is truly male with probability `lambda_male`. The
//! detected-female share is chosen so that the expected true share equals
//! the planted ratio, which is exactly the situation the affine correction
//! inverts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::calibration::FactorPair;
use crate::corpus::{CorpusManifest, MovieRecord, Provenance};
use crate::detection_io::{BBox, FaceDetection, FrameDetections, Gender};

pub const GENRES: [&str; 8] = ["Action", "Comedy", "Crime", "Drama", "Horror", "Romance", "Thriller", "Western"];

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("planted FFR {ffr} is unreachable with lambda_male {lambda_male}, lambda_female {lambda_female}")]
    Unreachable { ffr: f64, lambda_male: f64, lambda_female: f64 },
    #[error("{0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub movies: usize,
    pub year_lo: i32,
    pub year_hi: i32,
    pub faces_per_movie: u64,
    /// Cycled over movies in id order.
    pub true_ffr: Vec<f64>,
    pub factors: FactorPair,
    pub max_faces_per_frame: u32,
    pub interval_ms: u64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            movies: 20,
            year_lo: 1985,
            year_hi: 2019,
            faces_per_movie: 1000,
            true_ffr: vec![0.2, 0.35, 0.5, 0.65],
            factors: FactorPair { lambda_male: 410.0 / 485.0, lambda_female: 304.0 / 466.0, n_tasks: 0 },
            max_faces_per_frame: 3,
            interval_ms: 2000,
            seed: 1,
        }
    }
}

/// What one generated movie really contains.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedMovie {
    pub id: String,
    pub true_ffr: f64,
    pub detected_female_share: f64,
}

/// Realised labels for one movie.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelTally {
    pub detected_female: u64,
    pub detected_male: u64,
    pub true_female: u64,
    pub true_male: u64,
}

pub fn movie_id(index: usize) -> String {
    format!("tt{:07}", index + 1)
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        if self.movies == 0 || self.true_ffr.is_empty() || self.max_faces_per_frame == 0 || self.interval_ms == 0 {
            return Err(SyntheticError::Config("movies, true_ffr, max faces and interval must be non-empty".into()));
        }
        if self.year_lo > self.year_hi {
            return Err(SyntheticError::Config(format!("year range {}..{} is empty", self.year_lo, self.year_hi)));
        }
        for &p in &self.true_ffr {
            self.detected_share(p)?;
        }
        Ok(())
    }

    /// Detected-female share whose corrected value is `true_ffr`.
    pub fn detected_share(&self, true_ffr: f64) -> Result<f64, SyntheticError> {
        let f = &self.factors;
        let r = (true_ffr - (1.0 - f.lambda_male)) / f.slope();
        if f.slope() <= 0.0 || !(0.0..=1.0).contains(&r) {
            return Err(SyntheticError::Unreachable { ffr: true_ffr, lambda_male: f.lambda_male, lambda_female: f.lambda_female });
        }
        Ok(r)
    }

    fn rng(&self, index: usize, purpose: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64 * 2 + purpose);
        rng
    }

    pub fn planted(&self) -> Result<Vec<PlantedMovie>, SyntheticError> {
        (0..self.movies)
            .map(|i| {
                let p = self.true_ffr[i % self.true_ffr.len()];
                Ok(PlantedMovie { id: movie_id(i), true_ffr: p, detected_female_share: self.detected_share(p)? })
            })
            .collect()
    }

    pub fn movie_record(&self, index: usize) -> MovieRecord {
        let mut rng = self.rng(index, 0);
        let span = (self.year_hi - self.year_lo + 1) as usize;
        let year = self.year_lo + (index * span / self.movies) as i32;
        let mut genres = std::collections::BTreeSet::new();
        genres.insert(GENRES[rng.gen_range(0..GENRES.len())].to_string());
        if rng.gen_bool(0.5) {
            genres.insert(GENRES[rng.gen_range(0..GENRES.len())].to_string());
        }
        let budget = rng.gen_range(1u64..200) * 500_000;
        MovieRecord {
            id: movie_id(index),
            title: format!("Synthetic {}", index + 1),
            year,
            genres,
            runtime_min: rng.gen_range(80..150),
            budget_usd: budget,
            gross_usd: budget / 100 * rng.gen_range(20u64..400),
            rating_value: f64::from(rng.gen_range(20u32..90)) / 10.0,
            rating_count: rng.gen_range(100..500_000),
            female_rating_share: rng.gen_bool(0.8).then(|| f64::from(rng.gen_range(5u32..60)) / 100.0),
            parental_rating: ["G", "PG", "PG-13", "R"][rng.gen_range(0..4)].to_string(),
            seeders: Some(rng.gen_range(3..300)),
            bechdel_score: rng.gen_bool(0.7).then(|| rng.gen_range(0..4)),
            frame_width: 1920,
            frame_height: 1080,
        }
    }

    pub fn manifest(&self) -> Result<CorpusManifest, SyntheticError> {
        let movies = (0..self.movies).map(|i| self.movie_record(i)).collect();
        CorpusManifest::from_movies(movies, Provenance::default()).map_err(|e| SyntheticError::Config(e.to_string()))
    }

    /// Frames of one movie in timestamp order, with the realised labels.
    pub fn movie_frames(&self, index: usize) -> Result<(Vec<FrameDetections>, LabelTally), SyntheticError> {
        let id = movie_id(index);
        let r = self.detected_share(self.true_ffr[index % self.true_ffr.len()])?;
        let mut rng = self.rng(index, 1);
        let mut tally = LabelTally::default();
        let mut frames = Vec::new();
        let mut ts = 0u64;
        let mut remaining = self.faces_per_movie;
        while remaining > 0 {
            let k = u64::from(rng.gen_range(1..=self.max_faces_per_frame)).min(remaining);
            remaining -= k;
            let mut faces = Vec::with_capacity(k as usize);
            for _ in 0..k {
                let gender = if rng.gen_bool(r) { Gender::Female } else { Gender::Male };
                let truly_female = match gender {
                    Gender::Female => {
                        tally.detected_female += 1;
                        rng.gen_bool(self.factors.lambda_female)
                    }
                    Gender::Male => {
                        tally.detected_male += 1;
                        !rng.gen_bool(self.factors.lambda_male)
                    }
                };
                if truly_female {
                    tally.true_female += 1;
                } else {
                    tally.true_male += 1;
                }
                faces.push(FaceDetection {
                    movie_id: id.clone(),
                    frame_ts_ms: ts,
                    bbox: random_box(&mut rng),
                    gender,
                    confidence: Some(f64::from(rng.gen_range(500u32..1000)) / 1000.0),
                });
            }
            frames.push(FrameDetections { movie_id: id.clone(), frame_ts_ms: ts, faces });
            ts += self.interval_ms * rng.gen_range(1..4);
        }
        Ok((frames, tally))
    }

    /// Writes `<dir>/<movie_id>.jsonl` for every movie; returns the number
    /// of records written.
    pub fn write_detections(&self, dir: &Path) -> Result<u64, SyntheticError> {
        std::fs::create_dir_all(dir).map_err(|source| SyntheticError::Io { path: dir.to_path_buf(), source })?;
        let mut written = 0;
        for i in 0..self.movies {
            let path = dir.join(format!("{}.jsonl", movie_id(i)));
            let io = |source| SyntheticError::Io { path: path.clone(), source };
            let mut out = BufWriter::new(File::create(&path).map_err(io)?);
            for frame in self.movie_frames(i)?.0 {
                for face in &frame.faces {
                    writeln!(out, "{}", face.to_json_line()).map_err(io)?;
                    written += 1;
                }
            }
            out.flush().map_err(io)?;
        }
        Ok(written)
    }
}

fn random_box(rng: &mut ChaCha8Rng) -> BBox {
    let round = |v: f64| (v * 1e4).round() / 1e4;
    let floor = |v: f64| (v * 1e4).floor() / 1e4;
    let w = round(rng.gen_range(0.02..0.25));
    let h = round((w * rng.gen_range(1.0..1.6)).min(0.9));
    let x = floor(rng.gen_range(0.0..=1.0 - w));
    let y = floor(rng.gen_range(0.0..=1.0 - h));
    BBox { x, y, w, h }
}
