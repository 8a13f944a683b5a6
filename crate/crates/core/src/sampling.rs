//! Fixed-frequency frame sampling plans and the external decoder commands
//! that realise them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::MovieRecord;

pub const DEFAULT_INTERVAL_S: f64 = 2.0;

/// Decoder invocation used when no template is configured.
pub const DEFAULT_TEMPLATE: &str = "ffmpeg -nostdin -loglevel error -ss {timestamp} -i {input} -frames:v 1 -q:v 2 -y {output}";

const PLACEHOLDERS: [&str; 3] = ["{input}", "{timestamp}", "{output}"];

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("sampling interval must be positive, got {0}")]
    NonPositiveInterval(f64),
    #[error("duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("malformed command template: {0}")]
    MalformedTemplate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub movie_id: String,
    pub interval_s: f64,
    pub timestamps: Vec<f64>,
}

impl SamplingPlan {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Relative frame paths, in timestamp order.
    pub fn frame_paths(&self) -> impl Iterator<Item = (f64, PathBuf)> + '_ {
        self.timestamps.iter().map(|&t| (t, frame_relative_path(&self.movie_id, t)))
    }
}

pub fn build_plan(movie: &MovieRecord, interval_s: f64) -> Result<SamplingPlan, SamplingError> {
    plan_for_duration(&movie.id, f64::from(movie.runtime_min) * 60.0, interval_s)
}

/// Timestamps `0, i, 2i, ...` strictly below `duration_s`.
pub fn plan_for_duration(movie_id: &str, duration_s: f64, interval_s: f64) -> Result<SamplingPlan, SamplingError> {
    if !(interval_s > 0.0) || !interval_s.is_finite() {
        return Err(SamplingError::NonPositiveInterval(interval_s));
    }
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(SamplingError::NonPositiveDuration(duration_s));
    }
    let timestamps = (0u64..)
        .map(|k| k as f64 * interval_s)
        .take_while(|&t| t < duration_s)
        .collect();
    Ok(SamplingPlan { movie_id: movie_id.to_string(), interval_s, timestamps })
}

pub fn timestamp_ms(t: f64) -> u64 {
    (t * 1000.0).round() as u64
}

/// `<movie_id>/<timestamp_ms zero-padded to 9 digits>.jpg`
pub fn frame_relative_path(movie_id: &str, t: f64) -> PathBuf {
    PathBuf::from(movie_id).join(format!("{:09}.jpg", timestamp_ms(t)))
}

/// A validated decoder command template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandTemplate {
    args: Vec<String>,
}

impl CommandTemplate {
    pub fn parse(template: &str) -> Result<Self, SamplingError> {
        let args: Vec<String> = template.split_whitespace().map(str::to_string).collect();
        if args.is_empty() {
            return Err(SamplingError::MalformedTemplate("empty template".into()));
        }
        for p in PLACEHOLDERS {
            if !template.contains(p) {
                return Err(SamplingError::MalformedTemplate(format!("missing {p}")));
            }
        }
        // any other {name} is a typo we refuse to pass through to the shell
        let mut rest = template;
        while let Some(open) = rest.find('{') {
            let close = rest[open..]
                .find('}')
                .ok_or_else(|| SamplingError::MalformedTemplate("unbalanced '{'".into()))?;
            let token = &rest[open..open + close + 1];
            if !PLACEHOLDERS.contains(&token) {
                return Err(SamplingError::MalformedTemplate(format!("unknown placeholder {token}")));
            }
            rest = &rest[open + close + 1..];
        }
        Ok(Self { args })
    }

    fn render(&self, input: &str, timestamp: &str, output: &str) -> Vec<String> {
        self.args
            .iter()
            .map(|a| a.replace("{input}", input).replace("{timestamp}", timestamp).replace("{output}", output))
            .collect()
    }
}

impl Default for CommandTemplate {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATE).expect("default template is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionCommand {
    pub timestamp_ms: u64,
    pub output: PathBuf,
    /// Program followed by its arguments.
    pub argv: Vec<String>,
}

pub fn render_extraction_commands(
    plan: &SamplingPlan,
    template: &CommandTemplate,
    input: &Path,
    out_dir: &Path,
) -> Vec<ExtractionCommand> {
    let input = input.to_string_lossy();
    plan.frame_paths()
        .map(|(t, rel)| {
            let output = out_dir.join(rel);
            let argv = template.render(&input, &format!("{t:.3}"), &output.to_string_lossy());
            ExtractionCommand { timestamp_ms: timestamp_ms(t), output, argv }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameVerification {
    pub movie_id: String,
    pub expected: usize,
    /// Timestamps (ms) whose frame file is absent or empty.
    pub missing: Vec<u64>,
}

impl FrameVerification {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }
}

pub fn verify_frames(plan: &SamplingPlan, dir: &Path) -> FrameVerification {
    let missing = plan
        .frame_paths()
        .filter(|(_, rel)| !std::fs::metadata(dir.join(rel)).map(|m| m.is_file() && m.len() > 0).unwrap_or(false))
        .map(|(t, _)| timestamp_ms(t))
        .collect();
    FrameVerification { movie_id: plan.movie_id.clone(), expected: plan.len(), missing }
}
