//! Plain-text point clouds: one point per line, three whitespace-separated
//! reals; `#` starts a comment; blank lines are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cif_core::cloud::PointCloud;

use crate::error::{io_at, Error, Result};
use crate::fsutil::write_atomic;

pub fn parse_cloud(text: &str, id: &str, path: &Path) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse { path: path.to_path_buf(), line: k + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 values, found {}", fields.len())));
        }
        let mut p = [0.0; 3];
        for (slot, f) in p.iter_mut().zip(&fields) {
            *slot = f.parse::<f64>().map_err(|_| bad(format!("`{f}` is not a number")))?;
            if !slot.is_finite() {
                return Err(bad(format!("`{f}` is not finite")));
            }
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::NoPoints { path: path.to_path_buf() });
    }
    Ok(PointCloud::new(id, points)?)
}

/// Loads a cloud; its id is the file stem.
pub fn load_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_cloud(&text, &id, path)
}

/// Shortest round-trip decimal form of every coordinate.
pub fn format_cloud(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 64);
    for p in cloud.points() {
        let _ = writeln!(out, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    out
}

pub fn save_cloud(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), format_cloud(cloud).as_bytes())
}
