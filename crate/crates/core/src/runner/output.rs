use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::dynprog::{AuditEntry, Solution};
use crate::geometry::MedialAxis;
use crate::metrics::{MetricReport, RouteSample};
use crate::stagegame::FictitiousPlayTrace;
use crate::{Error, NodeId, Result};

/// Collects CSV artifacts in memory, then writes them with a manifest.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add_csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Other(format!("csv buffer: {e}")))?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    /// Writes every file plus `manifest.txt` into `dir`.
    pub fn write(&self, dir: &Path, header: &[(&str, String)]) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let mut manifest = String::new();
        for (k, v) in header {
            manifest.push_str(&format!("{k} = {v}\n"));
        }
        manifest.push_str("[files]\n");
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
            manifest.push_str(&format!("{}  {name}\n", hex::encode(Sha256::digest(bytes))));
            written.push(path);
        }
        let path = dir.join("manifest.txt");
        fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(written)
    }
}

fn f(v: f64) -> String {
    format!("{v}")
}

pub fn strategy_rows(solution: &Solution) -> Vec<Vec<String>> {
    solution
        .strategies
        .iter()
        .flat_map(|((node, s), e)| {
            e.candidates
                .iter()
                .zip(&e.strategy.probs)
                .map(move |(c, p)| vec![node.to_string(), s.to_string(), c.to_string(), f(*p)])
        })
        .collect()
}

pub fn value_rows(solution: &Solution) -> Vec<Vec<String>> {
    solution
        .values
        .values
        .iter()
        .flat_map(|(node, v)| {
            v.iter()
                .enumerate()
                .map(move |(s, x)| vec![node.to_string(), s.to_string(), f(*x)])
        })
        .collect()
}

pub fn audit_rows(audit: &[AuditEntry]) -> Vec<Vec<String>> {
    audit
        .iter()
        .map(|a| {
            vec![
                a.state.to_string(),
                a.level.to_string(),
                a.players.to_string(),
                a.iterations.to_string(),
                a.converged.to_string(),
                f(a.relative_gap),
            ]
        })
        .collect()
}

/// Axis polyline points tagged with the level band they fall in.
pub fn axis_rows(axis: &MedialAxis, levels: usize) -> Vec<Vec<String>> {
    let width = axis.length() / levels.max(1) as f64;
    axis.points
        .iter()
        .zip(&axis.arc)
        .map(|(p, &s)| {
            let band = if width > 0.0 {
                ((s / width).floor() as usize + 1).min(levels)
            } else {
                1
            };
            vec![f(p.x), f(p.y), band.to_string()]
        })
        .collect()
}

pub fn route_rows(samples: &[RouteSample]) -> Vec<Vec<String>> {
    samples
        .iter()
        .flat_map(|s| {
            s.path.iter().enumerate().map(move |(h, p)| {
                vec![
                    s.seed.to_string(),
                    s.algorithm.name().to_string(),
                    h.to_string(),
                    f(p.x),
                    f(p.y),
                ]
            })
        })
        .collect()
}

pub fn report_rows(report: &[MetricReport]) -> Vec<Vec<String>> {
    report
        .iter()
        .flat_map(|r| {
            r.bins.iter().map(move |b| {
                vec![
                    r.algorithm.name().to_string(),
                    f(b.center),
                    f(b.mean),
                    b.n.to_string(),
                ]
            })
        })
        .collect()
}

/// Frequencies of the selected players (all when `only` is empty).
pub fn trace_rows(
    trace: &FictitiousPlayTrace,
    players: &[NodeId],
    actions: &[Vec<NodeId>],
    only: Option<NodeId>,
) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (k, freqs) in trace.frequencies.iter().enumerate() {
        for (i, fi) in freqs.iter().enumerate() {
            if only.is_some_and(|n| n != players[i]) {
                continue;
            }
            for (a, p) in fi.probs.iter().enumerate() {
                rows.push(vec![
                    (k + 1).to_string(),
                    players[i].to_string(),
                    actions[i][a].to_string(),
                    f(*p),
                ]);
            }
        }
    }
    rows
}
