//! Experiment harness: run configs, the online evaluation loop, grids of
//! runs, loss/win tables and file outputs.

mod output;
mod plot;
mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::drift::{DriftEvent, Trigger};
use crate::engine::{BaselineModel, Mode, ModelConfig, OnlineModel, StreamModel, MAX_PSEUDO_WEIGHT};
use crate::error::{Error, Result};
use crate::ingest::{infer_feature_types, parse_dataset, standardize, DataFormat, Dataset, Label};
use crate::learners::{LearnerConfig, LearnerKind, LinearLearner, OnlineClassifier};
use crate::stream::{synthesize, Instance, Regime, StreamConfig};
use crate::synth::Generator;

pub use output::{
    load_results, read_run_record, read_trace, write_outputs, write_trace, Manifest, ManifestEntry, OutputOptions,
    RunRecord,
};
pub use plot::{plot_ablation, plot_cer_trends, PlotSeries};
pub use table::{compare_table, CerTable, Comparison, RegimeComparison, Tally, TableRow, TiePolicy};

/// Algorithms the harness can run. The first three share the copula
/// pipeline; the rest are single learners on zero-filled inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    OlMdisf,
    OlMdisfF,
    OlMdisfL,
    Lr,
    Pac,
    Perceptron,
    Ridge,
    Sgdc,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::OlMdisf,
        Method::OlMdisfF,
        Method::OlMdisfL,
        Method::Lr,
        Method::Pac,
        Method::Perceptron,
        Method::Ridge,
        Method::Sgdc,
    ];

    /// The six columns of the per-regime summary table, in order.
    pub const TABLE: [Method; 6] = [
        Method::Lr,
        Method::Pac,
        Method::Perceptron,
        Method::Ridge,
        Method::Sgdc,
        Method::OlMdisf,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::OlMdisf => "ol_mdisf",
            Method::OlMdisfF => "ol_mdisf_f",
            Method::OlMdisfL => "ol_mdisf_l",
            Method::Lr => "lr",
            Method::Pac => "pac",
            Method::Perceptron => "perceptron",
            Method::Ridge => "ridge",
            Method::Sgdc => "sgdc",
        }
    }

    /// Column header used in summary tables.
    pub fn display(self) -> &'static str {
        match self {
            Method::OlMdisf => "OL-MDISF",
            Method::OlMdisfF => "OL-MDISF-F",
            Method::OlMdisfL => "OL-MDISF-L",
            Method::Lr => "LR",
            Method::Pac => "PAC",
            Method::Perceptron => "Per",
            Method::Ridge => "Ridge",
            Method::Sgdc => "SGDC",
        }
    }

    pub fn from_id(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.id() == s)
    }

    pub fn from_display(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.display() == s)
    }

    pub fn mode(self) -> Option<Mode> {
        match self {
            Method::OlMdisf => Some(Mode::Full),
            Method::OlMdisfF => Some(Mode::FOnly),
            Method::OlMdisfL => Some(Mode::LOnly),
            _ => None,
        }
    }

    pub fn baseline_kind(self) -> Option<LearnerKind> {
        match self {
            Method::Lr => Some(LearnerKind::Logistic),
            Method::Pac => Some(LearnerKind::PassiveAggressive),
            Method::Perceptron => Some(LearnerKind::Perceptron),
            Method::Ridge => Some(LearnerKind::RidgeSgd),
            Method::Sgdc => Some(LearnerKind::HingeSgd),
            _ => None,
        }
    }
}

/// Where the records come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSource {
    File {
        path: PathBuf,
        /// Guessed from the extension when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<DataFormat>,
    },
    Synthetic(Generator),
}

impl DataSource {
    pub fn file(path: impl Into<PathBuf>) -> Self {
        DataSource::File { path: path.into(), format: None }
    }

    /// Relative file paths are taken relative to `base`.
    pub fn resolve(&mut self, base: &Path) {
        if let DataSource::File { path, .. } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    /// Short name used in run ids and tables.
    pub fn name(&self) -> String {
        match self {
            DataSource::File { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "data".into()),
            DataSource::Synthetic(g) => g.name().to_string(),
        }
    }
}

fn default_ordinal_max_levels() -> usize {
    crate::ingest::DEFAULT_ORDINAL_MAX_LEVELS
}

/// One experiment. Every field but `data` has a default, and a serialized
/// config reproduces its run exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    #[serde(default)]
    pub stream: StreamConfig,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub model: ModelConfig,
    /// Hyperparameters for the single-learner methods; `kind` follows
    /// `method`.
    #[serde(default)]
    pub baseline: LearnerConfig,
    #[serde(default = "default_ordinal_max_levels")]
    pub ordinal_max_levels: usize,
    /// Truncate the dataset to its first records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_instances: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn default_method() -> Method {
    Method::OlMdisf
}

impl RunConfig {
    pub fn new(data: DataSource, method: Method) -> Self {
        RunConfig {
            data,
            stream: StreamConfig::default(),
            method,
            model: ModelConfig::default(),
            baseline: LearnerConfig::default(),
            ordinal_max_levels: default_ordinal_max_levels(),
            max_instances: None,
            out_dir: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.stream.validate()?;
        self.model.validate()?;
        self.baseline.validate()?;
        if self.ordinal_max_levels < 2 {
            return Err(Error::Config("ordinal_max_levels must be >= 2".into()));
        }
        if self.max_instances == Some(0) {
            return Err(Error::Config("max_instances must be >= 1".into()));
        }
        if let DataSource::File { path, .. } = &self.data {
            if !path.is_file() {
                return Err(Error::Config(format!("dataset not found: {}", path.display())));
            }
        }
        Ok(())
    }

    /// SHA-256 of the config with `out_dir` removed, so that the same
    /// experiment hashes equally wherever its files land.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn run_id(&self) -> String {
        let name: String = self
            .data
            .name()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        format!(
            "{name}_{}_m{:02}_{}_s{}",
            self.stream.regime.as_str(),
            missing_percent(self.stream.label_missing_ratio),
            self.method.id(),
            self.stream.seed
        )
    }

    /// Parsed, typed and standardized records for this run.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let raw = match &self.data {
            DataSource::File { path, format } => {
                let format = format.unwrap_or_else(|| DataFormat::from_path(path));
                parse_dataset(path, format)?
            }
            DataSource::Synthetic(g) => g.generate(self.stream.seed)?,
        };
        let mut ds = prepare(raw, self.ordinal_max_levels)?;
        if let Some(max) = self.max_instances {
            ds.records.truncate(max);
        }
        Ok(ds)
    }

    pub fn build_stream(&self, dataset: &Dataset) -> Result<Vec<Instance>> {
        synthesize(dataset, &self.stream)
    }
}

/// Label-missing ratio as a whole percentage.
pub fn missing_percent(ratio: f64) -> u32 {
    (ratio * 100.0).round() as u32
}

/// Type inference (unless the dataset carries a schema) and standardization.
pub fn prepare(raw: Dataset, ordinal_max_levels: usize) -> Result<Dataset> {
    let schema = match &raw.schema {
        Some(s) => s.clone(),
        None => infer_feature_types(&raw, ordinal_max_levels)?,
    };
    standardize(&raw, &schema)
}

/// Running mistake rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CerTracker {
    pub mistakes: u64,
    pub seen: u64,
}

impl CerTracker {
    pub fn update(&mut self, mistake: bool) -> f64 {
        self.seen += 1;
        self.mistakes += u64::from(mistake);
        self.cer()
    }

    pub fn cer(&self) -> f64 {
        if self.seen == 0 {
            0.0
        } else {
            self.mistakes as f64 / self.seen as f64
        }
    }
}

/// One line of the per-run trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub prediction: Label,
    pub true_label: Label,
    /// Whether the learner was shown the label.
    pub revealed: bool,
    pub mistake: bool,
    pub cer: f64,
    pub alpha1: Option<f64>,
    pub entropy: f64,
    pub mismatch: f64,
    pub drift: Option<Trigger>,
    pub pseudo_label: Option<Label>,
    pub pseudo_confidence: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub config: RunConfig,
    pub dataset: String,
    pub trace: Vec<TraceRow>,
    pub events: Vec<DriftEvent>,
    pub final_cer: f64,
    pub wall_clock_secs: f64,
}

impl RunResult {
    pub fn run_id(&self) -> String {
        self.config.run_id()
    }

    pub fn cer_trajectory(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.cer).collect()
    }

    /// `None` for single-learner baselines.
    pub fn alpha1_trajectory(&self) -> Option<Vec<f64>> {
        self.trace.iter().map(|r| r.alpha1).collect()
    }

    /// Share of pseudo-labels that matched the hidden truth, with the count.
    pub fn pseudo_audit(&self) -> (f64, usize) {
        let (n, ok) = self.trace.iter().fold((0usize, 0usize), |(n, ok), r| match r.pseudo_label {
            Some(p) => (n + 1, ok + usize::from(p == r.true_label)),
            None => (n, ok),
        });
        (if n == 0 { 0.0 } else { ok as f64 / n as f64 }, n)
    }
}

/// Which learner slot a factory call fills.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LearnerRole {
    Observed,
    Latent,
    Baseline,
}

/// Replaces the learners a run would normally build; receives the slot and
/// the input dimension.
pub type LearnerFactory<'a> = &'a dyn Fn(LearnerRole, usize) -> Box<dyn OnlineClassifier>;

pub fn run_experiment(config: &RunConfig) -> Result<RunResult> {
    run_experiment_with(config, None)
}

/// [`run_experiment`] with optional injected learners.
pub fn run_experiment_with(config: &RunConfig, factory: Option<LearnerFactory<'_>>) -> Result<RunResult> {
    config.validate()?;
    let started = Instant::now();
    let dataset = config.load_dataset()?;
    let stream = config.build_stream(&dataset)?;
    let schema = dataset.require_schema()?.clone();
    let d = schema.dim();

    let mut model: Box<dyn StreamModel> = match config.method.mode() {
        Some(mode) => {
            let mc = ModelConfig { mode, ..config.model.clone() };
            match factory {
                Some(f) => Box::new(OnlineModel::with_learners(
                    &schema,
                    mc,
                    f(LearnerRole::Observed, d),
                    f(LearnerRole::Latent, d),
                )?),
                None => Box::new(OnlineModel::new(&schema, mc)?),
            }
        }
        None => {
            let kind = config.method.baseline_kind().expect("baseline method");
            let learner: Box<dyn OnlineClassifier> = match factory {
                Some(f) => f(LearnerRole::Baseline, d),
                None => Box::new(LinearLearner::new(d, LearnerConfig { kind, ..config.baseline.clone() })),
            };
            Box::new(BaselineModel::with_learner(d, learner))
        }
    };

    let mut tracker = CerTracker::default();
    let mut trace = Vec::with_capacity(stream.len());
    let mut events = Vec::new();
    for inst in &stream {
        let out = model.step(inst)?;
        check_update_weight(inst, out.update_weight)?;
        let mistake = out.mistake(inst.true_label);
        let cer = tracker.update(mistake);
        if let Some(ev) = &out.drift {
            events.push(ev.clone());
        }
        trace.push(TraceRow {
            t: inst.t,
            prediction: out.prediction.label,
            true_label: inst.true_label,
            revealed: inst.label.is_some(),
            mistake,
            cer,
            alpha1: out.alpha1,
            entropy: out.entropy,
            mismatch: out.mismatch,
            drift: out.drift.map(|e| e.trigger),
            pseudo_label: out.pseudo.map(|p| p.label),
            pseudo_confidence: out.pseudo.map(|p| p.confidence),
        });
    }
    Ok(RunResult {
        config: config.clone(),
        dataset: dataset.name.clone(),
        trace,
        events,
        final_cer: tracker.cer(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

/// Revealed labels train with weight 1; pseudo-labels strictly below.
fn check_update_weight(inst: &Instance, weight: Option<f64>) -> Result<()> {
    let ok = match (inst.label, weight) {
        (Some(_), w) => w == Some(1.0),
        (None, Some(w)) => w > 0.0 && w <= MAX_PSEUDO_WEIGHT,
        (None, None) => true,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Protocol(format!("update weight {weight:?} at t = {} violates the label contract", inst.t)))
    }
}

/// Runs every config on a pool of `parallelism` threads. Results keep the
/// input order and a failing cell does not stop the others.
pub fn run_grid(configs: &[RunConfig], parallelism: usize) -> Vec<Result<RunResult>> {
    if configs.is_empty() {
        return Vec::new();
    }
    let run_all = || configs.par_iter().map(run_experiment).collect();
    match rayon::ThreadPoolBuilder::new().num_threads(parallelism.max(1)).build() {
        Ok(pool) => pool.install(run_all),
        Err(_) => configs.iter().map(run_experiment).collect(),
    }
}

fn default_regimes() -> Vec<Regime> {
    vec![Regime::Capricious, Regime::Trapezoidal]
}

fn default_missing() -> Vec<f64> {
    vec![0.1, 0.5, 0.7, 0.9]
}

fn default_methods() -> Vec<Method> {
    Method::TABLE.to_vec()
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// A cross product of datasets, regimes, label-missing ratios, methods and
/// seeds over shared settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub datasets: Vec<DataSource>,
    #[serde(default = "default_regimes")]
    pub regimes: Vec<Regime>,
    #[serde(default = "default_missing")]
    pub missing: Vec<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Regime and seed are overwritten per cell; the other fields apply
    /// to all of them.
    #[serde(default)]
    pub stream: StreamConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub baseline: LearnerConfig,
    #[serde(default = "default_ordinal_max_levels")]
    pub ordinal_max_levels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_instances: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl GridConfig {
    pub fn new(datasets: Vec<DataSource>) -> Self {
        GridConfig {
            datasets,
            regimes: default_regimes(),
            missing: default_missing(),
            methods: default_methods(),
            seeds: default_seeds(),
            parallelism: default_parallelism(),
            stream: StreamConfig::default(),
            model: ModelConfig::default(),
            baseline: LearnerConfig::default(),
            ordinal_max_levels: default_ordinal_max_levels(),
            max_instances: None,
            out_dir: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Cells in dataset, regime, ratio, method, seed order.
    pub fn expand(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for data in &self.datasets {
            for &regime in &self.regimes {
                for &missing in &self.missing {
                    for &method in &self.methods {
                        for &seed in &self.seeds {
                            out.push(RunConfig {
                                data: data.clone(),
                                stream: StreamConfig {
                                    regime,
                                    label_missing_ratio: missing,
                                    seed,
                                    ..self.stream.clone()
                                },
                                method,
                                model: self.model.clone(),
                                baseline: self.baseline.clone(),
                                ordinal_max_levels: self.ordinal_max_levels,
                                max_instances: self.max_instances,
                                out_dir: self.out_dir.clone(),
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(method: Method) -> RunConfig {
        RunConfig::new(
            DataSource::Synthetic(Generator::TwoClusters { n: 300, d: 4, sep: 2.0 }),
            method,
        )
    }

    #[test]
    fn cer_examples() {
        let mut c = CerTracker::default();
        assert_eq!(c.cer(), 0.0);
        for i in 0..10 {
            c.update(i < 3);
        }
        assert_eq!(c.cer(), 0.3);
        let mut none = CerTracker::default();
        (0..25).for_each(|_| {
            none.update(false);
        });
        assert_eq!(none.cer(), 0.0);
        let mut all = CerTracker::default();
        (0..7).for_each(|_| {
            all.update(true);
        });
        assert_eq!(all.cer(), 1.0);
    }

    #[test]
    fn trajectory_matches_stream_length() {
        for method in Method::ALL {
            let r = run_experiment(&synthetic(method)).unwrap();
            assert_eq!(r.trace.len(), 300);
            assert_eq!(r.cer_trajectory().len(), 300);
            assert_eq!(r.alpha1_trajectory().is_some(), method.mode().is_some());
            assert_eq!(*r.cer_trajectory().last().unwrap(), r.final_cer);
        }
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut c = synthetic(Method::Pac);
        c.stream.label_missing_ratio = 0.7;
        c.model.pseudo.k = 7;
        let text = c.to_toml().unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(run_experiment(&back).unwrap().trace, run_experiment(&c).unwrap().trace);
    }

    #[test]
    fn file_source_parses_from_toml() {
        let c = RunConfig::from_toml("method = \"lr\"\n[data]\npath = \"x.csv\"\n").unwrap();
        assert_eq!(c.data, DataSource::file("x.csv"));
        assert_eq!(c.method, Method::Lr);
        let g = RunConfig::from_toml("[data]\ngenerator = \"two_clusters\"\nn = 10\nd = 2\nsep = 1.0\n").unwrap();
        assert_eq!(g.data.name(), "two_clusters");
        assert!(RunConfig::from_toml("[data]\npath = \"x.csv\"\n[model]\nbogus = 1\n").is_err());
    }

    #[test]
    fn invalid_config_fails_before_work() {
        let mut c = synthetic(Method::OlMdisf);
        c.stream.label_missing_ratio = 1.5;
        assert!(matches!(run_experiment(&c), Err(Error::Config(_))));
        let missing = RunConfig::new(DataSource::file("/nonexistent/data.csv"), Method::Lr);
        assert!(matches!(run_experiment(&missing), Err(Error::Config(_))));
    }

    #[test]
    fn grid_counts_and_order() {
        let datasets = (0..14)
            .map(|i| DataSource::file(format!("d{i}.csv")))
            .collect();
        let g = GridConfig::new(datasets);
        let cells = g.expand();
        assert_eq!(cells.len(), 14 * 2 * 4 * 6);
        assert!(run_grid(&[], 4).is_empty());
    }

    #[test]
    fn grid_parallelism_does_not_change_results() {
        let mut g = GridConfig::new(vec![DataSource::Synthetic(Generator::TwoClusters { n: 150, d: 3, sep: 1.5 })]);
        g.missing = vec![0.5];
        g.seeds = vec![1, 2];
        let cells = g.expand();
        let a = run_grid(&cells, 1);
        let b = run_grid(&cells, 8);
        assert_eq!(a.len(), cells.len());
        for ((x, y), c) in a.iter().zip(&b).zip(&cells) {
            let (x, y) = (x.as_ref().unwrap(), y.as_ref().unwrap());
            assert_eq!(x.trace, y.trace);
            assert_eq!(&x.config, c);
        }
    }

    #[test]
    fn grid_reports_failures_per_cell() {
        let good = synthetic(Method::Lr);
        let bad = RunConfig::new(DataSource::file("/nonexistent.csv"), Method::Lr);
        let out = run_grid(&[good, bad], 2);
        assert!(out[0].is_ok() && out[1].is_err());
    }

    #[test]
    fn run_ids_are_distinct_per_cell() {
        let g = GridConfig {
            seeds: vec![0, 1],
            methods: Method::ALL.to_vec(),
            ..GridConfig::new(vec![DataSource::file("a/wdbc.csv")])
        };
        let ids: std::collections::BTreeSet<String> = g.expand().iter().map(RunConfig::run_id).collect();
        assert_eq!(ids.len(), 2 * 4 * 8 * 2);
        assert!(ids.contains("wdbc_capricious_m10_ol_mdisf_s0"));
    }
}
