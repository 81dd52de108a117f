//! On-disk artifacts: per-run traces and records, the summary tables,
//! plots and a manifest tying config hashes to files.
//!
//! Layout under the output directory:
//! `traces/<run>.csv`, `runs/<run>.json`, `summary.csv`, `cells.csv`,
//! `comparison.csv`, `plots/*.svg`, `manifest.json` and `timings.csv`.
//! Everything except the timings is a pure function of the configs.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::plot::{plot_ablation, plot_cer_trends, PlotSeries};
use super::table::{compare_table, CerTable, TiePolicy};
use super::{missing_percent, Method, RunConfig, RunResult, TraceRow};
use crate::drift::{DriftEvent, Trigger};
use crate::error::{Error, Result};
use crate::ingest::Label;

const TRACE_HEADER: [&str; 12] = [
    "t",
    "prediction",
    "true_label",
    "revealed",
    "mistake",
    "cer",
    "alpha1",
    "entropy",
    "mismatch",
    "drift",
    "pseudo_label",
    "pseudo_confidence",
];

fn label_str(l: Label) -> &'static str {
    match l {
        Label::Pos => "+1",
        Label::Neg => "-1",
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trace(trace: &[TraceRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.t.to_string(),
            label_str(r.prediction).into(),
            label_str(r.true_label).into(),
            u8::from(r.revealed).to_string(),
            u8::from(r.mistake).to_string(),
            r.cer.to_string(),
            opt(r.alpha1),
            r.entropy.to_string(),
            r.mismatch.to_string(),
            r.drift.map(|t| t.as_str().to_string()).unwrap_or_default(),
            r.pseudo_label.map(|l| label_str(l).to_string()).unwrap_or_default(),
            opt(r.pseudo_confidence),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

pub fn read_trace(input: impl Read) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |col: &str| Error::Parse { path: "<trace>".into(), line, msg: format!("bad {col}") };
        let label = |k: usize| Label::parse_signed(&rec[k]).ok_or_else(|| bad(TRACE_HEADER[k]));
        let num = |k: usize| rec[k].parse::<f64>().map_err(|_| bad(TRACE_HEADER[k]));
        let opt_num = |k: usize| if rec[k].is_empty() { Ok(None) } else { num(k).map(Some) };
        let flag = |k: usize| match &rec[k] {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(bad(TRACE_HEADER[k])),
        };
        if rec.len() != TRACE_HEADER.len() {
            return Err(bad("column count"));
        }
        rows.push(TraceRow {
            t: rec[0].parse().map_err(|_| bad("t"))?,
            prediction: label(1)?,
            true_label: label(2)?,
            revealed: flag(3)?,
            mistake: flag(4)?,
            cer: num(5)?,
            alpha1: opt_num(6)?,
            entropy: num(7)?,
            mismatch: num(8)?,
            drift: match &rec[9] {
                "" => None,
                "entropy" => Some(Trigger::Entropy),
                "mismatch" => Some(Trigger::Mismatch),
                "both" => Some(Trigger::Both),
                _ => return Err(bad("drift")),
            },
            pseudo_label: if rec[10].is_empty() { None } else { Some(label(10)?) },
            pseudo_confidence: opt_num(11)?,
        });
    }
    Ok(rows)
}

/// Everything about a run except its trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub config_hash: String,
    pub dataset: String,
    pub config: RunConfig,
    pub n: usize,
    pub final_cer: f64,
    pub events: Vec<DriftEvent>,
    /// Relative to the output directory.
    pub trace_file: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub run_id: String,
    pub files: Vec<String>,
}

/// Config hash to the files of that run, plus the grid-level files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub runs: BTreeMap<String, ManifestEntry>,
    pub files: Vec<String>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn with_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        Error::Csv(c) => Error::io(path, std::io::Error::other(c.to_string())),
        other => other,
    })?;
    finish(path, w)
}

/// Wall-clock seconds per run id; kept apart from the deterministic files.
const TIMINGS: &str = "timings.csv";

fn read_timings(path: &Path) -> BTreeMap<String, f64> {
    let Ok(mut rdr) = csv::Reader::from_path(path) else {
        return BTreeMap::new();
    };
    rdr.records()
        .filter_map(|r| r.ok())
        .filter_map(|r| Some((r.get(0)?.to_string(), r.get(1)?.parse().ok()?)))
        .collect()
}

pub fn read_run_record(path: &Path) -> Result<RunRecord> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

/// Reads back every run under `dir` in file-name order.
pub fn load_results(dir: &Path) -> Result<Vec<RunResult>> {
    let runs = dir.join("runs");
    let mut paths: Vec<PathBuf> = fs::read_dir(&runs)
        .map_err(|e| Error::io(&runs, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let timings = read_timings(&dir.join(TIMINGS));
    paths
        .iter()
        .map(|p| {
            let rec = read_run_record(p)?;
            let tp = dir.join(&rec.trace_file);
            let f = File::open(&tp).map_err(|e| Error::io(&tp, e))?;
            let trace = read_trace(BufReader::new(f))?;
            Ok(RunResult {
                config: rec.config,
                dataset: rec.dataset,
                trace,
                events: rec.events,
                final_cer: rec.final_cer,
                wall_clock_secs: timings.get(&rec.run_id).copied().unwrap_or(0.0),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutputOptions {
    /// Keep every n-th step in plots.
    pub downsample: usize,
    pub plots: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions { downsample: 1, plots: true }
    }
}

fn write_cells(results: &[RunResult], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "run_id",
        "dataset",
        "regime",
        "missing",
        "method",
        "seed",
        "n",
        "final_cer",
        "drift_events",
        "pseudo_labels",
        "pseudo_accuracy",
    ])?;
    for r in results {
        let (acc, n_pseudo) = r.pseudo_audit();
        w.write_record([
            r.run_id(),
            r.config.data.name(),
            r.config.stream.regime.as_str().to_string(),
            missing_percent(r.config.stream.label_missing_ratio).to_string(),
            r.config.method.id().to_string(),
            r.config.stream.seed.to_string(),
            r.trace.len().to_string(),
            r.final_cer.to_string(),
            r.events.len().to_string(),
            n_pseudo.to_string(),
            if n_pseudo == 0 { String::new() } else { acc.to_string() },
        ])?;
    }
    w.flush().map_err(|e| Error::io("<cells>", e))?;
    Ok(())
}

/// Element-wise mean of equally long trajectories; falls back to the first
/// one when lengths differ.
fn mean_trajectory(runs: &[&RunResult], f: impl Fn(&RunResult) -> Option<Vec<f64>>) -> Option<Vec<f64>> {
    let all: Vec<Vec<f64>> = runs.iter().filter_map(|r| f(r)).collect();
    let first = all.first()?.clone();
    if all.iter().any(|v| v.len() != first.len()) {
        return Some(first);
    }
    let k = all.len() as f64;
    Some((0..first.len()).map(|i| all.iter().map(|v| v[i]).sum::<f64>() / k).collect())
}

/// One CER-trend plot per dataset, regime and ratio, and an ablation plot
/// wherever the full model ran. Seeds are averaged.
fn write_plots(results: &[RunResult], dir: &Path, opts: OutputOptions) -> Result<Vec<String>> {
    type Key = (String, &'static str, u32);
    let mut groups: BTreeMap<Key, BTreeMap<Method, Vec<&RunResult>>> = BTreeMap::new();
    for r in results {
        let key = (
            r.config.data.name(),
            r.config.stream.regime.as_str(),
            missing_percent(r.config.stream.label_missing_ratio),
        );
        groups.entry(key).or_default().entry(r.config.method).or_default().push(r);
    }
    let mut files = Vec::new();
    for ((dataset, regime, pct), by_method) in &groups {
        let stem = format!("{dataset}_{regime}_m{pct:02}");
        let title = format!("{dataset} ({regime}, {pct}% labels missing)");
        let cer = |m: Method| {
            let runs = by_method.get(&m)?;
            mean_trajectory(runs, |r| Some(r.cer_trajectory()))
                .map(|ys| PlotSeries::downsampled(m.display(), &ys, opts.downsample))
        };
        let trends: Vec<PlotSeries> = by_method.keys().filter_map(|&m| cer(m)).collect();
        let rel = format!("plots/{stem}_cer.svg");
        let path = dir.join(&rel);
        fs::create_dir_all(dir.join("plots")).map_err(|e| Error::io(dir.join("plots"), e))?;
        plot_cer_trends(&path, &title, &trends)?;
        files.push(rel);

        let Some(full) = by_method.get(&Method::OlMdisf) else {
            continue;
        };
        let Some(alpha) = mean_trajectory(full, RunResult::alpha1_trajectory) else {
            continue;
        };
        let alpha = PlotSeries::downsampled("alpha1", &alpha, opts.downsample);
        let ablation: Vec<PlotSeries> = [Method::OlMdisf, Method::OlMdisfF, Method::OlMdisfL]
            .into_iter()
            .filter_map(cer)
            .collect();
        let rel = format!("plots/{stem}_ablation.svg");
        plot_ablation(&dir.join(&rel), &title, &alpha, &ablation)?;
        files.push(rel);
    }
    Ok(files)
}

/// Writes traces, records, summary tables, plots and the manifest.
pub fn write_outputs(results: &[RunResult], dir: &Path, opts: OutputOptions) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest::default();
    for r in results {
        let id = r.run_id();
        let trace_rel = format!("traces/{id}.csv");
        let record_rel = format!("runs/{id}.json");
        with_file(&dir.join(&trace_rel), |w| write_trace(&r.trace, w))?;
        let record = RunRecord {
            run_id: id.clone(),
            config_hash: r.config.hash(),
            dataset: r.dataset.clone(),
            config: r.config.clone(),
            n: r.trace.len(),
            final_cer: r.final_cer,
            events: r.events.clone(),
            trace_file: trace_rel.clone(),
        };
        with_file(&dir.join(&record_rel), |w| {
            serde_json::to_writer_pretty(&mut *w, &record)?;
            Ok(())
        })?;
        manifest
            .runs
            .insert(record.config_hash, ManifestEntry { run_id: id, files: vec![trace_rel, record_rel] });
    }

    let table = CerTable::from_results(results);
    with_file(&dir.join("summary.csv"), |w| table.write_csv(w))?;
    with_file(&dir.join("cells.csv"), |w| write_cells(results, w))?;
    manifest.files.extend(["summary.csv".to_string(), "cells.csv".to_string()]);
    if table.methods.iter().any(|m| m == Method::OlMdisf.display()) && !table.rows.is_empty() {
        let cmp = compare_table(&table, Method::OlMdisf.display(), TiePolicy::Exclude)?;
        with_file(&dir.join("comparison.csv"), |w| cmp.write_csv(w))?;
        manifest.files.push("comparison.csv".into());
    }
    if opts.plots {
        manifest.files.extend(write_plots(results, dir, opts)?);
    }
    with_file(&dir.join(TIMINGS), |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["run_id", "wall_clock_secs"])?;
        for r in results {
            c.write_record([r.run_id(), format!("{:.6}", r.wall_clock_secs)])?;
        }
        c.flush().map_err(|e| Error::io(TIMINGS, e))?;
        Ok(())
    })?;
    with_file(&dir.join("manifest.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        Ok(())
    })?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{run_experiment, DataSource, Method, RunConfig};
    use crate::synth::Generator;

    fn result(method: Method) -> RunResult {
        let mut c = RunConfig::new(DataSource::Synthetic(Generator::TwoClusters { n: 120, d: 3, sep: 2.0 }), method);
        c.stream.label_missing_ratio = 0.5;
        run_experiment(&c).unwrap()
    }

    #[test]
    fn trace_round_trip() {
        let r = result(Method::OlMdisf);
        let mut buf = Vec::new();
        write_trace(&r.trace, &mut buf).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf).lines().count(), r.trace.len() + 1);
        assert_eq!(read_trace(buf.as_slice()).unwrap(), r.trace);
    }

    #[test]
    fn outputs_and_reload() {
        let results = vec![result(Method::OlMdisf), result(Method::OlMdisfF), result(Method::Lr)];
        let dir = tempfile::tempdir().unwrap();
        let m = write_outputs(&results, dir.path(), OutputOptions::default()).unwrap();
        assert_eq!(m.runs.len(), 3);
        for f in m.files.iter().chain(m.runs.values().flat_map(|e| e.files.iter())) {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        assert!(m.files.iter().any(|f| f.ends_with("_ablation.svg")));
        let back = load_results(dir.path()).unwrap();
        assert_eq!(back.len(), 3);
        for r in &results {
            let b = back.iter().find(|b| b.run_id() == r.run_id()).unwrap();
            assert_eq!(b.trace, r.trace);
            assert_eq!(b.config, r.config);
        }
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.starts_with("dataset,missing,capricious:LR,capricious:PAC,capricious:Per"));
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_outputs(&[result(Method::Lr)], &blocker.join("sub"), OutputOptions::default()).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
