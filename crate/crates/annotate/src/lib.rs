//! HTTP service that hands calibration tasks to reviewers and collects
//! their answers.

pub mod server;
pub mod store;

pub use server::{router, serve, AppState};
pub use store::{read_tasks, tasks_to_jsonl, Progress, ReviewStore, StoreError};
