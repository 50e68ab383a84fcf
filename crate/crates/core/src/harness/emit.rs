use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::experiment::{ResultManifest, ResultRow};
use crate::error::Result;

pub const CSV_HEADER: &str = "param,n,statistic,mean,stderr,samples,seed";

/// Rows in the documented column order. Numbers use Rust's shortest
/// round-trip formatting; an absent parameter is an empty field.
pub fn write_csv<W: Write>(rows: &[ResultRow], seed: u64, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let param = r.param.map(|p| p.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{param},{},{},{},{},{},{seed}",
            r.n, r.statistic, r.summary.mean, r.summary.stderr, r.summary.count
        )?;
    }
    Ok(())
}

/// Write `<dir>/<name>.csv` and `<dir>/<name>.manifest.json`, returning both
/// paths.
pub fn emit(manifest: &ResultManifest, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", manifest.name));
    let json_path = dir.join(format!("{}.manifest.json", manifest.name));
    let mut csv = Vec::new();
    write_csv(&manifest.rows, manifest.config.seed, &mut csv)?;
    fs::write(&csv_path, csv)?;
    let mut json = serde_json::to_vec_pretty(manifest)?;
    json.push(b'\n');
    fs::write(&json_path, json)?;
    Ok((csv_path, json_path))
}
