//! Summary tables shaped as dataset x missing-ratio rows with one column per
//! regime and method, and loss/win counts against a reference method.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{missing_percent, Method, RunResult};
use crate::error::{Error, Result};
use crate::stream::Regime;

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub dataset: String,
    /// Label-missing ratio in percent.
    pub missing: u32,
    /// Regime-major: `values[r * methods.len() + m]`.
    pub values: Vec<Option<f64>>,
}

/// Final CERs laid out as `dataset, missing, regime:method...`.
#[derive(Clone, Debug, PartialEq)]
pub struct CerTable {
    pub regimes: Vec<String>,
    pub methods: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl CerTable {
    pub fn get(&self, row: usize, regime: usize, method: usize) -> Option<f64> {
        self.rows.get(row)?.values.get(regime * self.methods.len() + method).copied().flatten()
    }

    fn method_index(&self, name: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == name)
    }

    /// Seed-averaged final CERs for the summary-table methods, rows in
    /// first-seen dataset order and ascending ratio.
    pub fn from_results<'a>(results: impl IntoIterator<Item = &'a RunResult>) -> CerTable {
        let regimes = [Regime::Capricious, Regime::Trapezoidal];
        let methods = Method::TABLE;
        let mut datasets: Vec<String> = Vec::new();
        let mut sums: BTreeMap<(usize, u32, usize, usize), (f64, usize)> = BTreeMap::new();
        for r in results {
            let Some(m) = methods.iter().position(|&m| m == r.config.method) else {
                continue;
            };
            let Some(g) = regimes.iter().position(|&g| g == r.config.stream.regime) else {
                continue;
            };
            let name = r.config.data.name();
            let di = match datasets.iter().position(|d| *d == name) {
                Some(i) => i,
                None => {
                    datasets.push(name);
                    datasets.len() - 1
                }
            };
            let e = sums
                .entry((di, missing_percent(r.config.stream.label_missing_ratio), g, m))
                .or_insert((0.0, 0));
            e.0 += r.final_cer;
            e.1 += 1;
        }
        let mut keys: Vec<(usize, u32)> = sums.keys().map(|&(d, p, _, _)| (d, p)).collect();
        keys.dedup();
        let rows = keys
            .into_iter()
            .map(|(di, missing)| TableRow {
                dataset: datasets[di].clone(),
                missing,
                values: (0..regimes.len())
                    .flat_map(|g| (0..methods.len()).map(move |m| (g, m)))
                    .map(|(g, m)| sums.get(&(di, missing, g, m)).map(|(s, n)| s / *n as f64))
                    .collect(),
            })
            .collect();
        CerTable {
            regimes: regimes.iter().map(|r| r.as_str().to_string()).collect(),
            methods: methods.iter().map(|m| m.display().to_string()).collect(),
            rows,
        }
    }

    pub fn read_csv(input: impl Read) -> Result<CerTable> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.len() < 3 || &headers[0] != "dataset" || &headers[1] != "missing" {
            return Err(Error::Parse {
                path: "<table>".into(),
                line: 1,
                msg: "expected header dataset,missing,<regime>:<method>,...".into(),
            });
        }
        let mut regimes: Vec<String> = Vec::new();
        let mut methods: Vec<String> = Vec::new();
        let mut columns = Vec::new();
        for h in headers.iter().skip(2) {
            let (regime, method) = h.split_once(':').ok_or_else(|| Error::Parse {
                path: "<table>".into(),
                line: 1,
                msg: format!("column {h:?} is not <regime>:<method>"),
            })?;
            if !regimes.iter().any(|r| r == regime) {
                regimes.push(regime.to_string());
            }
            if !methods.iter().any(|m| m == method) {
                methods.push(method.to_string());
            }
            columns.push((regime.to_string(), method.to_string()));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let bad = |msg: String| Error::Parse { path: "<table>".into(), line, msg };
            let missing: u32 = rec[1].parse().map_err(|_| bad(format!("bad missing ratio {:?}", &rec[1])))?;
            let mut values = vec![None; regimes.len() * methods.len()];
            for (k, (regime, method)) in columns.iter().enumerate() {
                let cell = rec.get(k + 2).unwrap_or("");
                if cell.is_empty() {
                    continue;
                }
                let v: f64 = cell.parse().map_err(|_| bad(format!("bad value {cell:?}")))?;
                let g = regimes.iter().position(|r| r == regime).unwrap_or(0);
                let m = methods.iter().position(|x| x == method).unwrap_or(0);
                values[g * methods.len() + m] = Some(v);
            }
            rows.push(TableRow { dataset: rec[0].to_string(), missing, values });
        }
        Ok(CerTable { regimes, methods, rows })
    }

    /// Four decimals per cell; absent cells stay empty.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["dataset".to_string(), "missing".to_string()];
        for g in &self.regimes {
            for m in &self.methods {
                header.push(format!("{g}:{m}"));
            }
        }
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.dataset.clone(), row.missing.to_string()];
            rec.extend(row.values.iter().map(|v| v.map(|x| format!("{x:.4}")).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<table>", e))?;
        Ok(())
    }
}

/// How equal CERs are counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Ties are neither a loss nor a win.
    #[default]
    Exclude,
    /// Ties count as wins for the reference.
    ReferenceWins,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub method: String,
    /// Cells where this method beat the reference.
    pub loss: usize,
    /// Cells where the reference beat this method.
    pub win: usize,
    pub ties: usize,
}

impl Tally {
    /// `loss/win`, the way summary tables print it.
    pub fn cell(&self) -> String {
        format!("{}/{}", self.loss, self.win)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeComparison {
    pub regime: String,
    pub competitors: Vec<Tally>,
    /// Sum over competitors, credited to the reference.
    pub total: Tally,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub reference: String,
    pub policy: TiePolicy,
    pub regimes: Vec<RegimeComparison>,
    /// Cells that could not be compared, as `dataset missing% regime method`.
    pub gaps: Vec<String>,
}

impl Comparison {
    pub fn regime(&self, name: &str) -> Option<&RegimeComparison> {
        self.regimes.iter().find(|r| r.regime == name)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["regime", "method", "loss", "win", "ties", "loss/win"])?;
        for r in &self.regimes {
            for t in r.competitors.iter().chain(std::iter::once(&r.total)) {
                w.write_record([
                    r.regime.clone(),
                    t.method.clone(),
                    t.loss.to_string(),
                    t.win.to_string(),
                    t.ties.to_string(),
                    t.cell(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<comparison>", e))?;
        Ok(())
    }
}

/// Loss/win counts of `reference` against every other method, per regime.
/// Incomplete cells are skipped and listed in `gaps`.
pub fn compare_table(table: &CerTable, reference: &str, policy: TiePolicy) -> Result<Comparison> {
    let r = table
        .method_index(reference)
        .ok_or_else(|| Error::Config(format!("reference method {reference:?} is not a table column")))?;
    let mut gaps = Vec::new();
    let mut regimes = Vec::new();
    for (g, regime) in table.regimes.iter().enumerate() {
        let mut competitors = Vec::new();
        for (m, method) in table.methods.iter().enumerate() {
            if m == r {
                continue;
            }
            let mut tally = Tally { method: method.clone(), ..Tally::default() };
            for (i, row) in table.rows.iter().enumerate() {
                let (Some(theirs), Some(ours)) = (table.get(i, g, m), table.get(i, g, r)) else {
                    gaps.push(format!("{} {}% {regime} {method}", row.dataset, row.missing));
                    continue;
                };
                if theirs < ours {
                    tally.loss += 1;
                } else if theirs > ours {
                    tally.win += 1;
                } else {
                    match policy {
                        TiePolicy::Exclude => tally.ties += 1,
                        TiePolicy::ReferenceWins => tally.win += 1,
                    }
                }
            }
            competitors.push(tally);
        }
        let total = competitors.iter().fold(
            Tally { method: "total".into(), ..Tally::default() },
            |mut acc, t| {
                acc.loss += t.loss;
                acc.win += t.win;
                acc.ties += t.ties;
                acc
            },
        );
        regimes.push(RegimeComparison { regime: regime.clone(), competitors, total });
    }
    Ok(Comparison { reference: reference.to_string(), policy, regimes, gaps })
}
