use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    method: String,
    rounds: Vec<f64>,
    arr: f64,
    per_person_counts: BTreeMap<String, usize>,
}

impl EvaluationReport {
    pub fn new(method: String, rounds: Vec<f64>, per_person_counts: BTreeMap<String, usize>) -> Self {
        let arr = if rounds.is_empty() { f64::NAN } else { rounds.iter().sum::<f64>() / rounds.len() as f64 };
        Self { method, rounds, arr, per_person_counts }
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    /// Accuracy of each round, in `[0, 1]`.
    pub fn rounds(&self) -> &[f64] {
        &self.rounds
    }

    /// Mean of [`rounds`](Self::rounds).
    pub fn arr(&self) -> f64 {
        self.arr
    }

    pub fn per_person_counts(&self) -> &BTreeMap<String, usize> {
        &self.per_person_counts
    }
}

/// Writes one CSV row: `method,per_person_counts,round_1..round_n,arr`.
/// Counts are encoded as `id=count` pairs joined with `;`.
pub fn export_report(report: &EvaluationReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if report.rounds.is_empty() {
        return Err(Error::Report("report has no rounds".into()));
    }
    let mut header = vec!["method".to_string(), "per_person_counts".to_string()];
    header.extend((1..=report.rounds.len()).map(|i| format!("round_{i}")));
    header.push("arr".into());

    let counts: Vec<String> = report.per_person_counts.iter().map(|(id, n)| format!("{id}={n}")).collect();
    let mut row = vec![report.method.clone(), counts.join(";")];
    row.extend(report.rounds.iter().map(|r| r.to_string()));
    row.push(report.arr.to_string());

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    w.write_record(&row)?;
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    fs::write(path, bytes).map_err(|source| Error::Write { path: path.to_path_buf(), source })
}

pub fn read_report(path: impl AsRef<Path>) -> Result<EvaluationReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let n = header.len();
    if n < 4 || &header[0] != "method" || &header[1] != "per_person_counts" || &header[n - 1] != "arr" {
        return Err(Error::Report(format!("{}: unexpected header", path.display())));
    }
    let record = reader.records().next().ok_or_else(|| Error::Report(format!("{}: no data row", path.display())))??;
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Report(format!("'{s}': {e}")));
    let rounds = (2..n - 1).map(|i| num(&record[i])).collect::<Result<Vec<_>>>()?;
    let mut counts = BTreeMap::new();
    for pair in record[1].split(';').filter(|p| !p.is_empty()) {
        let (id, count) = pair.rsplit_once('=').ok_or_else(|| Error::Report(format!("bad person count '{pair}'")))?;
        let count = count.parse().map_err(|_| Error::Report(format!("bad person count '{pair}'")))?;
        counts.insert(id.to_string(), count);
    }
    let report = EvaluationReport::new(record[0].to_string(), rounds, counts);
    let stored_arr = num(&record[n - 1])?;
    if (stored_arr - report.arr).abs() > 1e-12 {
        return Err(Error::Report(format!("arr {stored_arr} does not equal the mean of the rounds {}", report.arr)));
    }
    Ok(report)
}
