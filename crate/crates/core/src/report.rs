//! The JSON/CSV report shared by every experiment.
//!
//! Paired statistics pass when `|empirical - oracle| <= tolerance`; bounds
//! pass when `min <= value <= max`. The verdict is the conjunction of both.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

/// A one-sided or two-sided range check on a single value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub name: String,
    pub value: f64,
    pub min: f64,
    pub max: f64,
}

impl Bound {
    pub fn holds(&self) -> bool {
        self.value >= self.min && self.value <= self.max
    }
}

/// Column-oriented series, emitted as CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub version: String,
    pub seed: u64,
    pub samples: u64,
    pub horizon: u64,
    pub params: BTreeMap<String, Value>,
    pub labels: Vec<String>,
    pub oracle: Vec<f64>,
    pub empirical: Vec<f64>,
    pub tolerance: Vec<f64>,
    pub bounds: Vec<Bound>,
    pub diagnostics: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub verdict: Verdict,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, seed: u64, samples: u64, horizon: u64) -> Self {
        ExperimentReport {
            name: name.into(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            samples,
            horizon,
            params: BTreeMap::new(),
            labels: Vec::new(),
            oracle: Vec::new(),
            empirical: Vec::new(),
            tolerance: Vec::new(),
            bounds: Vec::new(),
            diagnostics: BTreeMap::new(),
            table: None,
            timestamp: None,
            verdict: Verdict::Pass,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.params.insert(key.to_string(), to_value(value));
        self
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.diagnostics.insert(key.to_string(), to_value(value));
        self
    }

    /// Adds a paired statistic and refreshes the verdict.
    pub fn pair(&mut self, label: impl Into<String>, oracle: f64, empirical: f64, tolerance: f64) -> &mut Self {
        self.labels.push(label.into());
        self.oracle.push(oracle);
        self.empirical.push(empirical);
        self.tolerance.push(tolerance);
        self.refresh();
        self
    }

    pub fn bound(&mut self, name: impl Into<String>, value: f64, min: f64, max: f64) -> &mut Self {
        self.bounds.push(Bound {
            name: name.into(),
            value,
            min,
            max,
        });
        self.refresh();
        self
    }

    pub fn set_table(&mut self, table: Table) -> &mut Self {
        self.table = Some(table);
        self
    }

    pub fn pair_passes(&self, i: usize) -> bool {
        (self.empirical[i] - self.oracle[i]).abs() <= self.tolerance[i]
    }

    fn refresh(&mut self) {
        let pairs = (0..self.labels.len()).all(|i| self.pair_passes(i));
        let bounds = self.bounds.iter().all(Bound::holds);
        self.verdict = Verdict::from_bool(pairs && bounds);
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }

    /// Names of every failing paired statistic or bound.
    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = (0..self.labels.len())
            .filter(|&i| !self.pair_passes(i))
            .map(|i| self.labels[i].clone())
            .collect();
        out.extend(self.bounds.iter().filter(|b| !b.holds()).map(|b| b.name.clone()));
        out
    }

    /// Looks up a paired statistic by label.
    pub fn paired(&self, label: &str) -> Option<(f64, f64, f64)> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some((self.oracle[i], self.empirical[i], self.tolerance[i]))
    }

    pub fn find_bound(&self, name: &str) -> Option<&Bound> {
        self.bounds.iter().find(|b| b.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes the per-window table if present, else the paired statistics.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        if let Some(t) = &self.table {
            return t.write_csv(out);
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["label", "oracle", "empirical", "tolerance", "pass"])?;
        for i in 0..self.labels.len() {
            w.write_record([
                self.labels[i].clone(),
                self.oracle[i].to_string(),
                self.empirical[i].to_string(),
                self.tolerance[i].to_string(),
                self.pair_passes(i).to_string(),
            ])?;
        }
        for b in &self.bounds {
            w.write_record([
                b.name.clone(),
                format!("[{}, {}]", b.min, b.max),
                b.value.to_string(),
                String::new(),
                b.holds().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}
