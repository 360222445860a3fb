//! Input resolution: single files or directories of sequence/detection/track
//! files, paired by file stem and loaded on a worker pool.

use crate::CliError;
use laa3d::data::{DetectionSet, Sequence};
use laa3d::mot::TrackSet;
use std::path::{Path, PathBuf};

/// Collect the files under `path`: the file itself, or every `*.{ext}` in
/// the directory sorted by name.
fn collect(path: &Path, ext: &str) -> Result<Vec<PathBuf>, CliError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| CliError::Input(format!("cannot read directory {}: {e}", path.display())))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|x| x == ext).unwrap_or(false))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(CliError::Input(format!(
                "no *.{ext} files in {}",
                path.display()
            )));
        }
        return Ok(files);
    }
    Err(CliError::Input(format!("no such file or directory: {}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Pair ground-truth files with companion files by stem. A single file on
/// each side pairs directly regardless of stems.
fn pair(gt_files: Vec<PathBuf>, other_files: Vec<PathBuf>) -> Result<Vec<(PathBuf, PathBuf)>, CliError> {
    if gt_files.len() == 1 && other_files.len() == 1 {
        return Ok(vec![(gt_files.into_iter().next().unwrap(), other_files.into_iter().next().unwrap())]);
    }
    let mut pairs = Vec::with_capacity(gt_files.len());
    for gt in gt_files {
        let key = stem(&gt);
        let partner = other_files
            .iter()
            .find(|p| stem(p) == key)
            .ok_or_else(|| CliError::Input(format!("no companion file for sequence `{key}`")))?;
        pairs.push((gt, partner.clone()));
    }
    Ok(pairs)
}

fn with_pool<T: Send>(jobs: usize, work: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if jobs > 0 {
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Internal(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(work))
}

pub fn load_sequences_with(
    gt: &Path,
    other: &Path,
    other_ext: &str,
    jobs: usize,
) -> Result<Vec<(Sequence, PathBuf)>, CliError> {
    let pairs = pair(collect(gt, "seq")?, collect(other, other_ext)?)?;
    let loaded: Result<Vec<(Sequence, PathBuf)>, laa3d::io::IoError> = with_pool(jobs, || {
        use rayon::prelude::*;
        pairs
            .par_iter()
            .map(|(g, o)| laa3d::io::load_sequence(g).map(|s| (s, o.clone())))
            .collect()
    })?;
    Ok(loaded?)
}

pub fn load_detection_inputs(
    gt: &Path,
    det: &Path,
    jobs: usize,
) -> Result<Vec<(Sequence, DetectionSet)>, CliError> {
    let with_paths = load_sequences_with(gt, det, "det", jobs)?;
    let mut out = Vec::with_capacity(with_paths.len());
    for (seq, det_path) in with_paths {
        out.push((seq, laa3d::io::load_detections(&det_path)?));
    }
    Ok(out)
}

pub fn load_track_inputs(
    gt: &Path,
    tracks: &Path,
    jobs: usize,
) -> Result<Vec<(Sequence, TrackSet)>, CliError> {
    let with_paths = load_sequences_with(gt, tracks, "trk", jobs)?;
    let mut out = Vec::with_capacity(with_paths.len());
    for (seq, trk_path) in with_paths {
        out.push((seq, laa3d::io::load_tracks(&trk_path)?));
    }
    Ok(out)
}

pub fn load_gt_only(gt: &Path, jobs: usize) -> Result<Vec<Sequence>, CliError> {
    let files = collect(gt, "seq")?;
    let loaded: Result<Vec<Sequence>, laa3d::io::IoError> = with_pool(jobs, || {
        use rayon::prelude::*;
        files.par_iter().map(laa3d::io::load_sequence).collect()
    })?;
    Ok(loaded?)
}
