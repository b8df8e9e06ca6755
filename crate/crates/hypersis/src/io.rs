//! File formats: hypergraphs and parameters as JSON, trajectories and
//! ensemble comparisons as CSV, analysis reports as JSON.
//!
//! JSON files index nodes from 1; everything in memory is 0-based.
//! Floats are written in the shortest form that parses back to the same
//! bits, so write/read/write is byte-stable.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{BiTrajectory, GeneralParams, SisParams, Trajectory};
use crate::error::{Error, Result};
use crate::hypergraph::{DirectedHypergraph, Hyperedge};
use crate::stochastic::EnsembleRow;

#[derive(Debug, Serialize, Deserialize)]
struct EdgeFile {
    tail: usize,
    heads: Vec<usize>,
    weight: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct HypergraphFile {
    n: usize,
    edges: Vec<EdgeFile>,
}

/// Serializes a hypergraph to JSON with 1-based node indices.
pub fn hypergraph_to_json(hg: &DirectedHypergraph) -> Result<String> {
    let file = HypergraphFile {
        n: hg.n(),
        edges: hg
            .edges()
            .iter()
            .map(|e| EdgeFile {
                tail: e.tail + 1,
                heads: e.heads.iter().map(|&h| h + 1).collect(),
                weight: e.weight,
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Parses a hypergraph from 1-based JSON.
pub fn hypergraph_from_json(text: &str) -> Result<DirectedHypergraph> {
    let file: HypergraphFile = serde_json::from_str(text)?;
    let mut edges = Vec::with_capacity(file.edges.len());
    for e in file.edges {
        if e.tail == 0 || e.heads.iter().any(|&h| h == 0) {
            return Err(Error::Input("node indices are 1-based".into()));
        }
        edges.push(Hyperedge {
            tail: e.tail - 1,
            heads: e.heads.iter().map(|&h| h - 1).collect(),
            weight: e.weight,
        });
    }
    DirectedHypergraph::new(file.n, edges)
}

pub fn write_hypergraph(path: &Path, hg: &DirectedHypergraph) -> Result<()> {
    fs::write(path, hypergraph_to_json(hg)? + "\n")?;
    Ok(())
}

pub fn read_hypergraph(path: &Path) -> Result<DirectedHypergraph> {
    hypergraph_from_json(&fs::read_to_string(path)?)
}

/// On-disk model parameters: curing rates, step size, and per-node
/// infection rates keyed by interaction order (`mu2` pairwise, `mu3`
/// triples, `muK` for anything higher, keyed by the order as a string).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSpec {
    pub delta: Vec<f64>,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu3: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty", rename = "muK")]
    pub mu_higher: BTreeMap<String, Vec<f64>>,
}

impl ParamSpec {
    /// Per-order rate vectors above the pairwise layer, with `muK` keys
    /// parsed and validated.
    fn higher_rates(&self, n: usize) -> Result<BTreeMap<usize, Vec<f64>>> {
        let mut out = BTreeMap::new();
        if let Some(mu3) = &self.mu3 {
            out.insert(3, mu3.clone());
        }
        for (key, rates) in &self.mu_higher {
            let order: usize = key
                .parse()
                .map_err(|_| Error::Input(format!("muK key {key:?} is not an order")))?;
            if order < 4 {
                return Err(Error::Input(format!(
                    "muK key {order} collides with mu2/mu3 fields"
                )));
            }
            out.insert(order, rates.clone());
        }
        for rates in out.values() {
            if rates.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: rates.len(),
                });
            }
        }
        Ok(out)
    }

    /// Third-order model on a hypergraph; missing rate vectors mean zero.
    pub fn to_sis(&self, hg: &DirectedHypergraph) -> Result<SisParams> {
        let n = hg.n();
        let higher = self.higher_rates(n)?;
        if let Some(&order) = higher.keys().find(|&&k| k > 3) {
            return Err(Error::Input(format!(
                "order-{order} rates need the general model"
            )));
        }
        let zeros = vec![0.0; n];
        let mu2 = self.mu2.clone().unwrap_or_else(|| zeros.clone());
        let mu3 = higher.get(&3).cloned().unwrap_or(zeros);
        SisParams::from_hypergraph(hg, self.delta.clone(), &mu2, &mu3, self.h)
    }

    /// General-order model on a hypergraph.
    pub fn to_general(&self, hg: &DirectedHypergraph) -> Result<GeneralParams> {
        let n = hg.n();
        let higher = self.higher_rates(n)?;
        let mu2 = self.mu2.clone().unwrap_or_else(|| vec![0.0; n]);
        GeneralParams::from_hypergraph(hg, self.delta.clone(), &mu2, &higher, self.h)
    }
}

pub fn write_params(path: &Path, spec: &ParamSpec) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(spec)? + "\n")?;
    Ok(())
}

pub fn read_params(path: &Path) -> Result<ParamSpec> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn format_float(v: f64) -> String {
    format!("{v}")
}

/// Writes a trajectory as CSV with header `t,x1,...,xn` and integer step
/// indices.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=traj.n()).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (t, state) in traj.states().iter().enumerate() {
        let mut record = vec![t.to_string()];
        record.extend(state.iter().map(|&v| format_float(v)));
        w.write_record(&record)?;
    }
    w.flush().map_err(std::io::Error::from)?;
    Ok(())
}

fn parse_rows(path: &Path, expected_cols: Option<usize>) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let cols = r.headers()?.len();
    if cols < 2 {
        return Err(Error::Input("trajectory needs a t column and data".into()));
    }
    if let Some(e) = expected_cols {
        if cols != e {
            return Err(Error::Dimension {
                expected: e,
                found: cols,
            });
        }
    }
    let mut rows = Vec::new();
    for (idx, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != cols {
            return Err(Error::Input(format!("row {idx} has {} fields, expected {cols}", record.len())));
        }
        let t: usize = record[0]
            .parse()
            .map_err(|_| Error::Input(format!("row {idx} has non-integer t {:?}", &record[0])))?;
        if t != idx {
            return Err(Error::Input(format!("row {idx} has step index {t}")));
        }
        let mut row = Vec::with_capacity(cols - 1);
        for field in record.iter().skip(1) {
            row.push(
                field
                    .parse::<f64>()
                    .map_err(|_| Error::Input(format!("row {idx} has non-numeric value {field:?}")))?,
            );
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Input("trajectory file has no rows".into()));
    }
    Ok(rows)
}

/// Reads a trajectory written by [`write_trajectory`]; the step size is
/// not stored in the file and must be supplied.
pub fn read_trajectory(path: &Path, h: f64) -> Result<Trajectory> {
    Trajectory::from_states(h, parse_rows(path, None)?)
}

/// Writes a two-virus trajectory as CSV with header
/// `t,v1_x1,...,v1_xn,v2_x1,...,v2_xn`.
pub fn write_bi_trajectory(path: &Path, traj: &BiTrajectory) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let n = traj.n();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("v1_x{i}")));
    header.extend((1..=n).map(|i| format!("v2_x{i}")));
    w.write_record(&header)?;
    for (t, (x1, x2)) in traj.states().iter().enumerate() {
        let mut record = vec![t.to_string()];
        record.extend(x1.iter().map(|&v| format_float(v)));
        record.extend(x2.iter().map(|&v| format_float(v)));
        w.write_record(&record)?;
    }
    w.flush().map_err(std::io::Error::from)?;
    Ok(())
}

/// Reads a two-virus trajectory written by [`write_bi_trajectory`].
pub fn read_bi_trajectory(path: &Path, h: f64) -> Result<BiTrajectory> {
    let rows = parse_rows(path, None)?;
    let cols = rows[0].len();
    if cols % 2 != 0 {
        return Err(Error::Input(
            "two-virus trajectory needs an even number of state columns".into(),
        ));
    }
    let n = cols / 2;
    let states = rows
        .into_iter()
        .map(|row| (row[..n].to_vec(), row[n..].to_vec()))
        .collect();
    BiTrajectory::from_states(h, states)
}

/// Writes the mean-field versus Monte Carlo comparison as CSV with header
/// `t,meanfield_avg,mc_avg,abs_error`.
pub fn write_ensemble(path: &Path, rows: &[EnsembleRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "meanfield_avg", "mc_avg", "abs_error"])?;
    for row in rows {
        w.write_record(&[
            row.t.to_string(),
            format_float(row.meanfield_avg),
            format_float(row.mc_avg),
            format_float(row.abs_error),
        ])?;
    }
    w.flush().map_err(std::io::Error::from)?;
    Ok(())
}

/// Writes any serializable report as pretty JSON.
pub fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(report)? + "\n")?;
    Ok(())
}
