//! Per-state result rows, their aggregates, and CSV output.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{fidelity, hs_distance_sq, optimal_axis_qfi, root_fidelity};
use crate::states::DensityMatrix;

/// Metrics of one estimate against its target.
///
/// `root_fidelity` is Tr√(√ρ τ √ρ), `fidelity` its square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub setting: String,
    /// Swept quantity of the setting: the trial count, or the OAT time.
    pub param: f64,
    pub state: usize,
    pub method: String,
    pub root_fidelity: f64,
    pub fidelity: f64,
    pub hs_distance_sq: f64,
    pub qfi: Option<f64>,
    pub qfi_normalized: Option<f64>,
    pub depth: Option<usize>,
}

impl ResultRow {
    pub fn evaluate(
        setting: &str,
        param: f64,
        state: usize,
        method: &str,
        estimate: &DensityMatrix,
        target: &DensityMatrix,
        with_qfi: bool,
    ) -> Result<Self> {
        let report = if with_qfi {
            Some(optimal_axis_qfi(estimate)?)
        } else {
            None
        };
        Ok(Self {
            setting: setting.to_string(),
            param,
            state,
            method: method.to_string(),
            root_fidelity: root_fidelity(estimate, target)?,
            fidelity: fidelity(estimate, target)?,
            hs_distance_sq: hs_distance_sq(estimate, target)?,
            qfi: report.as_ref().map(|r| r.qfi),
            qfi_normalized: report.as_ref().map(|r| r.normalized),
            depth: report.map(|r| r.depth),
        })
    }
}

/// Mean and sample standard deviation (n - 1 in the denominator).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub setting: String,
    pub param: f64,
    pub method: String,
    pub count: usize,
    pub mean_root_fidelity: f64,
    pub std_root_fidelity: f64,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub mean_hs_distance_sq: f64,
    pub std_hs_distance_sq: f64,
    pub mean_qfi_normalized: Option<f64>,
    pub std_qfi_normalized: Option<f64>,
}

/// One aggregate per (setting, method), in order of first appearance.
pub fn aggregate(rows: &[ResultRow]) -> Vec<Aggregate> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.setting.clone(), r.method.clone());
        let g = groups.entry(key.clone()).or_default();
        if g.is_empty() {
            order.push(key);
        }
        g.push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let col = |f: fn(&ResultRow) -> f64| g.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (mrf, srf) = mean_std(&col(|r| r.root_fidelity));
            let (mf, sf) = mean_std(&col(|r| r.fidelity));
            let (mh, sh) = mean_std(&col(|r| r.hs_distance_sq));
            let qfis: Option<Vec<f64>> = g.iter().map(|r| r.qfi_normalized).collect();
            let q = qfis.map(|v| mean_std(&v));
            Aggregate {
                setting: key.0,
                param: g[0].param,
                method: key.1,
                count: g.len(),
                mean_root_fidelity: mrf,
                std_root_fidelity: srf,
                mean_fidelity: mf,
                std_fidelity: sf,
                mean_hs_distance_sq: mh,
                std_hs_distance_sq: sh,
                mean_qfi_normalized: q.map(|q| q.0),
                std_qfi_normalized: q.map(|q| q.1),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub name: String,
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<Aggregate>,
    /// Scalars worth recording next to the tables (calibrated N, budgets, ...).
    pub extra: BTreeMap<String, f64>,
}

impl ExperimentResult {
    pub fn new(name: &str, rows: Vec<ResultRow>, extra: BTreeMap<String, f64>) -> Self {
        Self {
            name: name.to_string(),
            aggregates: aggregate(&rows),
            rows,
            extra,
        }
    }

    pub fn get(&self, setting: &str, method: &str) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.setting == setting && a.method == method)
    }

    pub fn rows_for<'a>(
        &'a self,
        setting: &'a str,
        method: &'a str,
    ) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.setting == setting && r.method == method)
    }

    /// Writes `NAME.csv`, `NAME_aggregates.csv` and, when present, `NAME_extra.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_csv(&dir.join(format!("{}.csv", self.name)), &self.rows)?;
        write_csv(
            &dir.join(format!("{}_aggregates.csv", self.name)),
            &self.aggregates,
        )?;
        if !self.extra.is_empty() {
            #[derive(Serialize)]
            struct Kv<'a> {
                key: &'a str,
                value: f64,
            }
            let kv: Vec<_> = self
                .extra
                .iter()
                .map(|(k, v)| Kv { key: k, value: *v })
                .collect();
            write_csv(&dir.join(format!("{}_extra.csv", self.name)), &kv)?;
        }
        Ok(())
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(Error::Io)
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::Csv)).collect()
}
