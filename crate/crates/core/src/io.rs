//! Data files and run manifests.
//!
//! Every CSV starts with a `# digest=<hex>` comment line tying it to the run
//! manifest that lists it, followed by a header row and one row per point.
//! Floats are written with 16 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::TimeSeries;
use crate::classical::PhasePortrait;
use crate::distribution::{MomentumDistribution, MomentumGrid};
use crate::error::{Error, Result};

pub const DISTRIBUTION_HEADER: &str = "p,density";
pub const PORTRAIT_HEADER: &str = "x,p,count";
pub const SERIES_HEADER: &str = "n,value";

/// Hex SHA-256 of the JSON serialization of `value`.
pub fn digest<T: Serialize>(value: &T) -> String {
    digest_bytes(&serde_json::to_vec(value).expect("value serializes to JSON"))
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn distribution_csv(dist: &MomentumDistribution, digest: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# digest={digest} n_kicks={} n_samples={} overflow_below={:.6e} overflow_above={:.6e}",
        dist.n_kicks, dist.n_samples, dist.overflow_below, dist.overflow_above
    );
    out.push_str(DISTRIBUTION_HEADER);
    out.push('\n');
    for (p, rho) in dist.grid.values().zip(&dist.density) {
        let _ = writeln!(out, "{p:.15e},{rho:.15e}");
    }
    out
}

pub fn write_distribution(path: &Path, dist: &MomentumDistribution, digest: &str) -> Result<()> {
    write_file(path, &distribution_csv(dist, digest))
}

pub fn portrait_csv(portrait: &PhasePortrait, digest: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# digest={digest} bins_x={} bins_p={}",
        portrait.bins_x, portrait.bins_p
    );
    out.push_str(PORTRAIT_HEADER);
    out.push('\n');
    for ix in 0..portrait.bins_x {
        for ip in 0..portrait.bins_p {
            let (x, p) = portrait.cell_center(ix, ip);
            let _ = writeln!(out, "{x:.15e},{p:.15e},{}", portrait.count(ix, ip));
        }
    }
    out
}

pub fn write_portrait(path: &Path, portrait: &PhasePortrait, digest: &str) -> Result<()> {
    write_file(path, &portrait_csv(portrait, digest))
}

pub fn series_csv(series: &TimeSeries, digest: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# digest={digest}");
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for (n, v) in series.iter() {
        let _ = writeln!(out, "{n},{v:.15e}");
    }
    out
}

pub fn write_series(path: &Path, series: &TimeSeries, digest: &str) -> Result<()> {
    write_file(path, &series_csv(series, digest))
}

/// Numbered data lines and the leading comment lines.
type Rows<'a> = (Vec<(usize, &'a str)>, Vec<&'a str>);

/// Data rows of a CSV with the expected header, with 1-based line numbers.
fn data_rows<'a>(path: &Path, text: &'a str, header: &str) -> Result<Rows<'a>> {
    let mut comments = Vec::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim());
            continue;
        }
        if !seen_header {
            if line != header {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: k + 1,
                    reason: format!("expected header `{header}`, found `{line}`"),
                });
            }
            seen_header = true;
            continue;
        }
        rows.push((k + 1, line));
    }
    if !seen_header {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 0,
            reason: format!("missing header `{header}`"),
        });
    }
    Ok((rows, comments))
}

fn parse_fields<const N: usize>(path: &Path, line: usize, row: &str) -> Result<[f64; N]> {
    let bad = |reason: String| Error::Parse {
        path: path.to_owned(),
        line,
        reason,
    };
    let fields: Vec<&str> = row.split(',').collect();
    if fields.len() != N {
        return Err(bad(format!("expected {N} fields, found {}", fields.len())));
    }
    let mut out = [0.0; N];
    for (slot, f) in out.iter_mut().zip(&fields) {
        *slot = f
            .trim()
            .parse::<f64>()
            .map_err(|e| bad(format!("cannot parse `{f}`: {e}")))?;
        if !slot.is_finite() {
            return Err(bad(format!("non-finite value `{f}`")));
        }
    }
    Ok(out)
}

fn comment_value<T: std::str::FromStr>(comments: &[&str], key: &str) -> Option<T> {
    comments
        .iter()
        .flat_map(|c| c.split_whitespace())
        .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .and_then(|v| v.parse().ok())
}

/// Reads a `p,density` file. The grid must be uniform.
pub fn read_distribution(path: &Path) -> Result<MomentumDistribution> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (rows, comments) = data_rows(path, &text, DISTRIBUTION_HEADER)?;
    let mut ps = Vec::with_capacity(rows.len());
    let mut rho = Vec::with_capacity(rows.len());
    for &(line, row) in &rows {
        let [p, d] = parse_fields::<2>(path, line, row)?;
        if d < 0.0 {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                reason: format!("negative density {d}"),
            });
        }
        ps.push(p);
        rho.push(d);
    }
    if ps.len() < 2 {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: rows.last().map_or(0, |r| r.0),
            reason: "need at least two grid points".into(),
        });
    }
    let spacing = (ps[ps.len() - 1] - ps[0]) / (ps.len() - 1) as f64;
    for (k, w) in ps.windows(2).enumerate() {
        if ((w[1] - w[0]) - spacing).abs() > 1e-6 * spacing.abs().max(1e-300) || spacing <= 0.0 {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: rows[k + 1].0,
                reason: "momentum grid is not uniform and increasing".into(),
            });
        }
    }
    let grid = MomentumGrid::new(ps[0], spacing, ps.len())?;
    let mut dist = MomentumDistribution::from_density(
        grid,
        rho,
        comment_value(&comments, "n_kicks").unwrap_or(0),
        comment_value(&comments, "n_samples").unwrap_or(0),
    )?;
    dist.overflow_below = comment_value(&comments, "overflow_below").unwrap_or(0.0);
    dist.overflow_above = comment_value(&comments, "overflow_above").unwrap_or(0.0);
    Ok(dist)
}

/// Reads an `n,value` file.
pub fn read_series(path: &Path) -> Result<TimeSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (rows, _) = data_rows(path, &text, SERIES_HEADER)?;
    let mut kicks = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for &(line, row) in &rows {
        let [n, v] = parse_fields::<2>(path, line, row)?;
        if n < 0.0 || n.fract() != 0.0 {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                reason: format!("kick count `{n}` is not a nonnegative integer"),
            });
        }
        if kicks.last().is_some_and(|&last| n as u64 <= last) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                reason: "kick counts must be strictly increasing".into(),
            });
        }
        kicks.push(n as u64);
        values.push(v);
    }
    TimeSeries::new(kicks, values)
}

/// The digest recorded in a data file's leading comment.
pub fn file_digest(path: &Path) -> Result<Option<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .and_then(|c| comment_value::<String>(&[c.trim()], "digest")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Classical,
    Quantum,
    Analysis,
    Gogolin,
}

/// Record of one run; written last, so a directory without a manifest holds
/// an incomplete run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub digest: String,
    pub engine: Engine,
    pub seed: u64,
    /// Effective configuration of the run.
    pub config: serde_json::Value,
    pub samples: u64,
    pub record_at: Vec<u64>,
    pub grid: Option<MomentumGrid>,
    /// Lattice sizes visited (quantum runs): initial size and final-size histogram.
    pub lattice: Option<serde_json::Value>,
    pub threads: usize,
    pub reduction: Option<String>,
    pub wall_seconds: f64,
    pub files: Vec<PathBuf>,
    /// Extra per-run notes such as conventions and fit settings.
    pub notes: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = dir.join(MANIFEST_NAME);
    let tmp = dir.join(format!("{MANIFEST_NAME}.partial"));
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write_file(&tmp, &(json + "\n"))?;
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path,
        line: e.line(),
        reason: e.to_string(),
    })
}
