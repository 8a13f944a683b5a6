#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use onscreen_core::calibration::CorrectionFactors;
use onscreen_core::corpus::{split_periods, write_manifest_csv};
use onscreen_core::synthetic::SyntheticConfig;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_onscreen"))
}

pub fn onscreen(args: &[&str]) -> Output {
    Command::new(bin()).args(args).env("RUST_LOG", "warn").output().expect("spawn onscreen")
}

pub fn ok(args: &[&str]) -> Output {
    let out = onscreen(args);
    assert!(
        out.status.success(),
        "onscreen {args:?} failed with {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub struct Fixture {
    pub manifest: PathBuf,
    pub detections: PathBuf,
    pub factors: PathBuf,
}

/// Manifest, detections and the generator's factors for every period.
pub fn write_fixture(dir: &Path, cfg: &SyntheticConfig, periods: usize) -> Fixture {
    fs::create_dir_all(dir).unwrap();
    let m = cfg.manifest().unwrap();
    let manifest = dir.join("manifest.csv");
    write_manifest_csv(&m, fs::File::create(&manifest).unwrap()).unwrap();
    let detections = dir.join("detections");
    cfg.write_detections(&detections).unwrap();
    let partition = split_periods(&m, periods).unwrap();
    let factors = CorrectionFactors {
        periods: partition.labels().into_iter().map(|l| (l, cfg.factors)).collect(),
    };
    let factors_path = dir.join("factors.json");
    fs::write(&factors_path, serde_json::to_string_pretty(&factors).unwrap()).unwrap();
    Fixture { manifest, detections, factors: factors_path }
}

/// Relative path -> bytes for every file under `root`.
pub fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
