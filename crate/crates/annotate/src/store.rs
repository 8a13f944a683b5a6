use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use onscreen_core::calibration::{AnnotationTask, ExportRow, Review};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("empty reviewer id")]
    EmptyReviewer,
    #[error("task set is empty")]
    NoTasks,
    #[error("duplicate task id {0:?}")]
    DuplicateTask(String),
    #[error("{path}:{line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// One line of the review log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub review: Review,
    /// Sequence number of the answer this one supersedes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replaces: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SubmitOutcome {
    pub seq: u64,
    pub replaced: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub tasks: usize,
    pub total_reviews: usize,
    pub log_entries: usize,
    pub reviewers: usize,
    /// review count -> number of tasks with that many reviews
    pub tasks_by_review_count: BTreeMap<usize, usize>,
    pub mean_reviews_per_task: f64,
    pub sd_reviews_per_task: f64,
}

pub fn read_tasks(path: &Path) -> Result<Vec<AnnotationTask>, StoreError> {
    let file = File::open(path).map_err(|source| StoreError::Io { path: path.to_path_buf(), source })?;
    let mut tasks = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| StoreError::Io { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        tasks.push(serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(tasks)
}

pub fn tasks_to_jsonl(tasks: &[AnnotationTask]) -> String {
    tasks.iter().map(|t| serde_json::to_string(t).expect("task serialises") + "\n").collect()
}

/// Append-only review log with per-task tallies derived from it.
///
/// A reviewer answering the same task again supersedes the earlier answer:
/// the log keeps both, the tallies and the export only the latest.
#[derive(Debug)]
pub struct ReviewStore {
    tasks: Vec<AnnotationTask>,
    index: HashMap<String, usize>,
    log: Vec<LogEntry>,
    /// (task index, reviewer) -> position in `log` of the current answer
    current: BTreeMap<(usize, String), usize>,
    tallies: Vec<usize>,
    sink: Option<(PathBuf, File)>,
}

impl ReviewStore {
    pub fn in_memory(tasks: Vec<AnnotationTask>) -> Result<Self, StoreError> {
        if tasks.is_empty() {
            return Err(StoreError::NoTasks);
        }
        let mut index = HashMap::new();
        for (i, t) in tasks.iter().enumerate() {
            if index.insert(t.task_id.clone(), i).is_some() {
                return Err(StoreError::DuplicateTask(t.task_id.clone()));
            }
        }
        let n = tasks.len();
        Ok(Self { tasks, index, log: Vec::new(), current: BTreeMap::new(), tallies: vec![0; n], sink: None })
    }

    /// Opens (or creates) the log at `log_path` and replays it.
    pub fn open(tasks: Vec<AnnotationTask>, log_path: &Path) -> Result<Self, StoreError> {
        let mut store = Self::in_memory(tasks)?;
        let io = |source| StoreError::Io { path: log_path.to_path_buf(), source };
        if log_path.exists() {
            let file = File::open(log_path).map_err(io)?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(io)?;
                if line.trim().is_empty() {
                    continue;
                }
                let corrupt = |message: String| StoreError::Corrupt { path: log_path.to_path_buf(), line: i + 1, message };
                let entry: LogEntry = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
                if entry.seq != store.log.len() as u64 {
                    return Err(corrupt(format!("expected seq {}, found {}", store.log.len(), entry.seq)));
                }
                store.apply(entry.review).map_err(|e| corrupt(e.to_string()))?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(log_path).map_err(io)?;
        store.sink = Some((log_path.to_path_buf(), file));
        Ok(store)
    }

    pub fn tasks(&self) -> &[AnnotationTask] {
        &self.tasks
    }

    pub fn task(&self, task_id: &str) -> Option<&AnnotationTask> {
        self.index.get(task_id).map(|&i| &self.tasks[i])
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    fn apply(&mut self, review: Review) -> Result<SubmitOutcome, StoreError> {
        if review.reviewer_id.trim().is_empty() {
            return Err(StoreError::EmptyReviewer);
        }
        let &ti = self.index.get(&review.task_id).ok_or_else(|| StoreError::UnknownTask(review.task_id.clone()))?;
        let seq = self.log.len() as u64;
        let key = (ti, review.reviewer_id.clone());
        let replaced = self.current.get(&key).map(|&pos| self.log[pos].seq);
        if replaced.is_none() {
            self.tallies[ti] += 1;
        }
        self.current.insert(key, self.log.len());
        self.log.push(LogEntry { seq, review, replaces: replaced });
        Ok(SubmitOutcome { seq, replaced })
    }

    /// Validates, appends to the log file, then updates the tallies.
    pub fn submit(&mut self, review: Review) -> Result<SubmitOutcome, StoreError> {
        if review.reviewer_id.trim().is_empty() {
            return Err(StoreError::EmptyReviewer);
        }
        let &ti = self.index.get(&review.task_id).ok_or_else(|| StoreError::UnknownTask(review.task_id.clone()))?;
        if let Some((path, file)) = &mut self.sink {
            let replaces = self.current.get(&(ti, review.reviewer_id.clone())).map(|&pos| self.log[pos].seq);
            let entry = LogEntry { seq: self.log.len() as u64, review: review.clone(), replaces };
            let line = serde_json::to_string(&entry).expect("log entry serialises") + "\n";
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|source| StoreError::Io { path: path.clone(), source })?;
        }
        self.apply(review)
    }

    pub fn has_answered(&self, task_id: &str, reviewer: &str) -> bool {
        self.index.get(task_id).is_some_and(|&i| self.current.contains_key(&(i, reviewer.to_string())))
    }

    pub fn review_count(&self, task_id: &str) -> Option<usize> {
        self.index.get(task_id).map(|&i| self.tallies[i])
    }

    /// A uniformly random task among the least-reviewed ones this reviewer
    /// has not answered yet; `None` when every task is answered.
    pub fn next_task<R: Rng>(&self, reviewer: &str, rng: &mut R) -> Option<&AnnotationTask> {
        let open: Vec<usize> =
            (0..self.tasks.len()).filter(|&i| !self.current.contains_key(&(i, reviewer.to_string()))).collect();
        let fewest = open.iter().map(|&i| self.tallies[i]).min()?;
        let least: Vec<usize> = open.into_iter().filter(|&i| self.tallies[i] == fewest).collect();
        least.choose(rng).map(|&i| &self.tasks[i])
    }

    pub fn progress(&self) -> Progress {
        let n = self.tasks.len() as f64;
        let total: usize = self.tallies.iter().sum();
        let mean = total as f64 / n;
        let var = self.tallies.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n;
        let mut by_count = BTreeMap::new();
        for &c in &self.tallies {
            *by_count.entry(c).or_insert(0) += 1;
        }
        let reviewers: std::collections::BTreeSet<&str> = self.current.keys().map(|(_, r)| r.as_str()).collect();
        Progress {
            tasks: self.tasks.len(),
            total_reviews: total,
            log_entries: self.log.len(),
            reviewers: reviewers.len(),
            tasks_by_review_count: by_count,
            mean_reviews_per_task: mean,
            sd_reviews_per_task: var.sqrt(),
        }
    }

    /// Current answers in submission order.
    pub fn export_rows(&self) -> Vec<ExportRow> {
        let mut positions: Vec<usize> = self.current.values().copied().collect();
        positions.sort_unstable();
        positions
            .into_iter()
            .map(|pos| {
                let review = &self.log[pos].review;
                ExportRow::new(&self.tasks[self.index[&review.task_id]], review)
            })
            .collect()
    }
}
