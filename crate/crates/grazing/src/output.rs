//! Artifact writers: snapshot and sweep CSVs, diagnostics and summary JSON,
//! check tables, and a manifest of content hashes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::experiments::{CoupledSnapshot, SweepReport, SweepRow};
use crate::trajectory::{Diagnostics, Trajectory};

/// One line of a verifier table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub parameter: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckRow {
    /// A row passing when `measured ≤ threshold`.
    pub fn at_most(check: &str, parameter: impl Into<String>, measured: f64, threshold: f64) -> Self {
        CheckRow {
            check: check.into(),
            parameter: parameter.into(),
            measured,
            threshold,
            pass: measured <= threshold,
        }
    }

    /// A row passing when `measured ≥ threshold`.
    pub fn at_least(check: &str, parameter: impl Into<String>, measured: f64, threshold: f64) -> Self {
        CheckRow {
            check: check.into(),
            parameter: parameter.into(),
            measured,
            threshold,
            pass: measured >= threshold,
        }
    }
}

/// Collects the files written by one command, in order.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

fn csv_float(x: f64) -> String {
    format!("{x:e}")
}

impl ArtifactWriter {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(ArtifactWriter { dir, files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    /// `t,particle,vx,vy,vz` for every snapshot, plus `<stem>_diagnostics.json`.
    pub fn trajectory(&mut self, stem: &str, traj: &Trajectory) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "particle", "vx", "vy", "vz"])?;
        for s in &traj.snapshots {
            let t = csv_float(s.cloud.time);
            for (i, v) in s.cloud.velocities.iter().enumerate() {
                w.write_record([t.clone(), i.to_string(), csv_float(v.x), csv_float(v.y), csv_float(v.z)])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        self.put(&format!("{stem}.csv"), &bytes)?;
        let diags: Vec<Diagnostics> = traj.snapshots.iter().map(|s| s.diagnostics).collect();
        self.json(&format!("{stem}_diagnostics.json"), &diags)?;
        Ok(())
    }

    /// `eps,seed,t,paired_l2,w2,m2_boltz,m2_landau`; a missing `w2` is an empty field.
    pub fn sweep_rows(&mut self, name: &str, rows: &[SweepRow]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["eps", "seed", "t", "paired_l2", "w2", "m2_boltz", "m2_landau"])?;
        for r in rows {
            w.write_record([
                csv_float(r.eps),
                r.seed.to_string(),
                csv_float(r.t),
                csv_float(r.paired_l2),
                r.w2.map(csv_float).unwrap_or_default(),
                csv_float(r.m2_boltz),
                csv_float(r.m2_landau),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        self.put(name, &bytes)
    }

    /// A coupled run in the sweep schema, with a single `(eps, seed)`.
    pub fn coupled(&mut self, name: &str, eps: f64, seed: u64, snaps: &[CoupledSnapshot]) -> Result<PathBuf> {
        let rows: Vec<SweepRow> = snaps
            .iter()
            .map(|s| SweepRow {
                eps,
                seed,
                t: s.t,
                paired_l2: s.paired_l2,
                w2: s.w2,
                m2_boltz: s.m2_boltz,
                m2_landau: s.m2_landau,
            })
            .collect();
        self.sweep_rows(name, &rows)
    }

    /// The sweep CSV and a JSON summary without the per-row data.
    pub fn sweep(&mut self, stem: &str, report: &SweepReport) -> Result<()> {
        self.sweep_rows(&format!("{stem}.csv"), &report.rows)?;
        #[derive(Serialize)]
        struct Summary<'a> {
            family: &'a crate::experiments::SweepFamily,
            eps_list: &'a [f64],
            dt: f64,
            summary: &'a [crate::experiments::EpsSummary],
            slope: f64,
            slope_stderr: f64,
            intercept: f64,
            proven_exponent: f64,
            conjectured_exponent: f64,
            strictly_decreasing: bool,
            non_increasing_within_errors: bool,
            verdict: crate::experiments::Verdict,
        }
        self.json(
            &format!("{stem}_summary.json"),
            &Summary {
                family: &report.family,
                eps_list: &report.eps_list,
                dt: report.dt,
                summary: &report.summary,
                slope: report.fit.slope,
                slope_stderr: report.fit.slope_stderr,
                intercept: report.fit.intercept,
                proven_exponent: report.proven_exponent,
                conjectured_exponent: report.conjectured_exponent,
                strictly_decreasing: report.strictly_decreasing,
                non_increasing_within_errors: report.non_increasing_within_errors,
                verdict: report.verdict,
            },
        )?;
        Ok(())
    }

    /// `check,parameter,measured,threshold,pass`.
    pub fn checks(&mut self, name: &str, rows: &[CheckRow]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["check", "parameter", "measured", "threshold", "pass"])?;
        for r in rows {
            w.write_record([
                r.check.clone(),
                r.parameter.clone(),
                csv_float(r.measured),
                csv_float(r.threshold),
                r.pass.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        self.put(name, &bytes)
    }

    /// Hash every file written so far and write `manifest.json`.
    pub fn finish<K: Serialize>(self, config_toml: &str, kernel: Option<&K>, seed: Option<u64>) -> Result<Manifest> {
        let mut files = Vec::new();
        for path in &self.files {
            let bytes = fs::read(path)?;
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            files.push(FileHash {
                name,
                bytes: bytes.len() as u64,
                sha256: blob_hash(&bytes),
            });
        }
        let manifest = Manifest {
            config: config_toml.to_string(),
            kernel: kernel.map(serde_json::to_value).transpose()?,
            seed,
            content_hash: combined_hash(&files),
            files,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileHash {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    /// the effective configuration, as TOML
    pub config: String,
    pub kernel: Option<serde_json::Value>,
    pub seed: Option<u64>,
    pub files: Vec<FileHash>,
    /// hash over the per-file hashes
    pub content_hash: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Git-style object hash: `sha256("blob <len>\0" ++ bytes)`.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex(&h.finalize())
}

/// Tree-style hash over `"<sha256> <name>\n"` lines.
pub fn combined_hash(files: &[FileHash]) -> String {
    let mut h = Sha256::new();
    for f in files {
        h.update(format!("{} {}\n", f.sha256, f.name).as_bytes());
    }
    hex(&h.finalize())
}
