//! File formats: radial CSV, diagnostics CSV, binary snapshots with a JSON
//! sidecar, and JSON documents.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hartree_blowup_core::radial::RadialField;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::field::CartesianField;
use crate::solver::Diagnostic;

fn write(path: &Path, text: &str) -> LabResult<()> {
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

fn read(path: &Path) -> LabResult<String> {
    fs::read_to_string(path).map_err(|e| LabError::io(path, e))
}

/// Fails unless `dir` exists and is a directory.
pub fn require_dir(dir: &Path) -> LabResult<()> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(LabError::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist")))
    }
}

/// `r,value_real[,value_imag]` with a header row; the imaginary column is
/// written only for complex fields.
pub fn write_radial_csv(path: &Path, f: &RadialField) -> LabResult<()> {
    let complex = !f.is_real();
    let mut s = String::from(if complex { "r,value_real,value_imag\n" } else { "r,value_real\n" });
    for (r, v) in f.grid().nodes().iter().zip(f.values()) {
        if complex {
            let _ = writeln!(s, "{r:e},{:e},{:e}", v.re, v.im);
        } else {
            let _ = writeln!(s, "{r:e},{:e}", v.re);
        }
    }
    write(path, &s)
}

/// Columns of a radial CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    pub r: Vec<f64>,
    pub values: Vec<Complex64>,
}

pub fn read_radial_csv(path: &Path) -> LabResult<RadialTable> {
    let text = read(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| LabError::format(path, "empty file"))?;
    let cols = match header.trim() {
        "r,value_real" => 2,
        "r,value_real,value_imag" => 3,
        h => return Err(LabError::format(path, format!("unexpected header {h:?}"))),
    };
    let mut out = RadialTable { r: Vec::new(), values: Vec::new() };
    for (i, line) in lines.enumerate() {
        let nums = parse_row(line, cols).map_err(|m| LabError::format(path, format!("row {}: {m}", i + 2)))?;
        out.r.push(nums[0]);
        out.values.push(Complex64::new(nums[1], if cols == 3 { nums[2] } else { 0.0 }));
    }
    Ok(out)
}

fn parse_row(line: &str, cols: usize) -> Result<Vec<f64>, String> {
    let nums: Vec<f64> = line
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number {x:?}")))
        .collect::<Result<_, _>>()?;
    if nums.len() != cols {
        return Err(format!("expected {cols} columns, got {}", nums.len()));
    }
    Ok(nums)
}

pub const DIAGNOSTICS_HEADER: &str = "t,mass,energy,lambda,b,gamma,eps_h1,grad_norm";

pub fn write_diagnostics_csv(path: &Path, rows: &[Diagnostic]) -> LabResult<()> {
    let mut s = format!("{DIAGNOSTICS_HEADER}\n");
    for d in rows {
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            d.t, d.mass, d.energy, d.lambda, d.b, d.gamma, d.eps_h1, d.grad_norm
        );
    }
    write(path, &s)
}

pub fn read_diagnostics_csv(path: &Path) -> LabResult<Vec<Diagnostic>> {
    let text = read(path)?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(DIAGNOSTICS_HEADER) {
        return Err(LabError::format(path, "missing diagnostics header"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let v = parse_row(line, 8).map_err(|m| LabError::format(path, format!("row {}: {m}", i + 2)))?;
            Ok(Diagnostic {
                t: v[0],
                mass: v[1],
                energy: v[2],
                lambda: v[3],
                b: v[4],
                gamma: v[5],
                eps_h1: v[6],
                grad_norm: v[7],
            })
        })
        .collect()
}

/// Sidecar of a binary snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    #[serde(rename = "N")]
    pub dim: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub extent: f64,
    pub t: f64,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<stem>.bin` (little-endian `f32` pairs, row-major) and `<stem>.json`.
pub fn write_snapshot(stem: &Path, field: &CartesianField) -> LabResult<()> {
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&(v.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    let bin = with_ext(stem, ".bin");
    fs::write(&bin, bytes).map_err(|e| LabError::io(&bin, e))?;
    let meta = SnapshotMeta { dim: field.dim(), n: field.cells(), extent: field.extent(), t: field.t };
    write_json(&with_ext(stem, ".json"), &meta)
}

pub fn read_snapshot(stem: &Path) -> LabResult<CartesianField> {
    let meta: SnapshotMeta = read_json(&with_ext(stem, ".json"))?;
    let bin = with_ext(stem, ".bin");
    let bytes = fs::read(&bin).map_err(|e| LabError::io(&bin, e))?;
    let count = meta.n.checked_pow(meta.dim as u32).unwrap_or(usize::MAX);
    if bytes.len() != 8 * count {
        return Err(LabError::format(&bin, format!("{} bytes, expected {}", bytes.len(), 8 * count)));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    CartesianField::new(meta.dim, meta.extent, meta.n, values, meta.t)
}

/// Pretty JSON with a trailing newline; key order follows the type.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> LabResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| LabError::format(path, e.to_string()))?;
    s.push('\n');
    write(path, &s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> LabResult<T> {
    serde_json::from_str(&read(path)?).map_err(|e| LabError::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hartree_blowup_core::radial::RadialGrid;
    use std::sync::Arc;

    #[test]
    fn radial_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Arc::new(RadialGrid::new(1, 2.0, 16).unwrap());
        let f = RadialField::new(
            g.clone(),
            g.nodes().iter().map(|&r| Complex64::new((-r * r).exp(), 0.25 * r)).collect(),
        )
        .unwrap();
        let p = dir.path().join("f.csv");
        write_radial_csv(&p, &f).unwrap();
        let t = read_radial_csv(&p).unwrap();
        assert_eq!(t.r, g.nodes());
        assert_eq!(t.values, f.values());
        let real = RadialField::from_real(g, &[1.0; 17]).unwrap();
        write_radial_csv(&p, &real).unwrap();
        assert!(read(&p).unwrap().starts_with("r,value_real\n"));
    }

    #[test]
    fn snapshot_round_trip_at_single_precision() {
        let dir = tempfile::tempdir().unwrap();
        let mut u = CartesianField::from_fn(2, 5.0, 8, |x| Complex64::new(x[0], -x[1] / 3.0)).unwrap();
        u.t = -0.125;
        let stem = dir.path().join("snap");
        write_snapshot(&stem, &u).unwrap();
        let back = read_snapshot(&stem).unwrap();
        assert_eq!(back.t, u.t);
        for (a, b) in back.values().iter().zip(u.values()) {
            assert!((a - b).norm() <= 1e-6 * b.norm().max(1.0));
        }
        let side = read(&with_ext(&stem, ".json")).unwrap();
        let keys: Vec<usize> = ["\"N\"", "\"n\"", "\"L\"", "\"t\""].iter().map(|k| side.find(k).unwrap()).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]), "{side}");
    }

    #[test]
    fn diagnostics_round_trip_and_missing_dir() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![Diagnostic {
            t: -1.0,
            mass: 2.5,
            energy: 0.0,
            lambda: 0.1,
            b: f64::NAN,
            gamma: 3.0,
            eps_h1: 1e-9,
            grad_norm: 12.0,
        }];
        let p = dir.path().join("d.csv");
        write_diagnostics_csv(&p, &rows).unwrap();
        let back = read_diagnostics_csv(&p).unwrap();
        assert!(back[0].b.is_nan());
        assert_eq!(back[0].grad_norm, 12.0);
        let missing = dir.path().join("nope");
        let e = require_dir(&missing).unwrap_err();
        assert!(e.to_string().contains("nope"));
    }
}
