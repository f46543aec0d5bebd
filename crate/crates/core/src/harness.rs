//! Experiment orchestration: train one model per (training spec, gamma
//! candidate, repeat), evaluate every model on every noisy test set, select
//! the best gamma per spec, and aggregate into an accuracy matrix with
//! sparsity and improvement reports.
//!
//! The whole pipeline is a pure function of the plan: every trial derives its
//! seeds from the master seed, never from execution order, so results are
//! byte-identical regardless of how many jobs run in parallel.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::{self, NoiseKind, NoiseSpec, DEFAULT_COPIES_PER_LAW, DEFAULT_REPLICATION};
use crate::dataio::{self, Dataset};
use crate::nn::{self, ModelConfig, Optimizer, TrainConfig, SPARSITY_THRESHOLD};
use crate::stable_dist::{RngStream, StableMixture, StableParams};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Plan schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    /// Sparse-template synthetic images in [0,1]; the desk-scale stand-in
    /// when real image files are absent.
    SyntheticImages {
        n_train_per_class: usize,
        n_test_per_class: usize,
        n_classes: usize,
        shape: Vec<usize>,
        jitter: f64,
    },
    SyntheticGaussians {
        n_train_per_class: usize,
        n_test_per_class: usize,
        n_classes: usize,
        n_features: usize,
        class_separation: f64,
    },
    MnistIdx {
        train_images: String,
        train_labels: String,
        test_images: String,
        test_labels: String,
        train_subset: Option<usize>,
        test_subset: Option<usize>,
    },
    /// Pre-saved NPY-pair datasets, referenced by sidecar path.
    DatasetFiles {
        train_sidecar: String,
        test_sidecar: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelPlan {
    pub width: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainPlan {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for TrainPlan {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 64,
            learning_rate: 0.01,
            momentum: 0.9,
        }
    }
}

fn default_replication() -> usize {
    DEFAULT_REPLICATION
}
fn default_copies() -> usize {
    DEFAULT_COPIES_PER_LAW
}
fn default_include_clean() -> bool {
    true
}

/// One training-noise configuration with its gamma candidates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecPlan {
    pub label: String,
    pub scheme: String,
    /// Single noise: the one exponent.
    pub alpha: Option<f64>,
    /// Multiple/mixture noise: the exponent list.
    pub alphas: Option<Vec<f64>>,
    /// Gamma candidates for the grid search; empty for clean.
    #[serde(default)]
    pub gammas: Vec<f64>,
    #[serde(default = "default_replication")]
    pub replication: usize,
    #[serde(default = "default_copies")]
    pub copies_per_law: usize,
    #[serde(default = "default_include_clean")]
    pub include_clean: bool,
}

impl SpecPlan {
    /// Materialize the noise spec at a chosen gamma (ignored for clean).
    pub fn to_noise_spec(&self, gamma: Option<f64>) -> Result<NoiseSpec> {
        match self.scheme.as_str() {
            "clean" => Ok(NoiseSpec::clean()),
            "single" => {
                let alpha = self
                    .alpha
                    .ok_or_else(|| Error::Parameter(format!("spec '{}': single scheme needs alpha", self.label)))?;
                let gamma = gamma
                    .ok_or_else(|| Error::Parameter(format!("spec '{}': no gamma chosen", self.label)))?;
                Ok(NoiseSpec {
                    kind: NoiseKind::Single {
                        params: StableParams::new(alpha, gamma, 0.0)?,
                        replication: self.replication,
                    },
                    include_clean: self.include_clean,
                })
            }
            "multiple" => {
                let alphas = self
                    .alphas
                    .as_ref()
                    .ok_or_else(|| Error::Parameter(format!("spec '{}': multiple scheme needs alphas", self.label)))?;
                let gamma = gamma
                    .ok_or_else(|| Error::Parameter(format!("spec '{}': no gamma chosen", self.label)))?;
                let laws = alphas
                    .iter()
                    .map(|&a| StableParams::new(a, gamma, 0.0))
                    .collect::<Result<Vec<_>>>()?;
                Ok(NoiseSpec {
                    kind: NoiseKind::Multiple {
                        laws,
                        copies_per_law: self.copies_per_law,
                    },
                    include_clean: self.include_clean,
                })
            }
            "mixture" => {
                let alphas = self
                    .alphas
                    .as_ref()
                    .ok_or_else(|| Error::Parameter(format!("spec '{}': mixture scheme needs alphas", self.label)))?;
                let gamma = gamma
                    .ok_or_else(|| Error::Parameter(format!("spec '{}': no gamma chosen", self.label)))?;
                Ok(NoiseSpec {
                    kind: NoiseKind::Mixture {
                        mix: StableMixture::equal_weight(alphas, gamma)?,
                        replication: self.replication,
                    },
                    include_clean: self.include_clean,
                })
            }
            other => Err(Error::Parameter(format!(
                "spec '{}': unknown scheme '{other}'",
                self.label
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub dataset: DatasetSource,
    pub model: ModelPlan,
    #[serde(default)]
    pub train: TrainPlan,
    pub training_specs: Vec<SpecPlan>,
    pub test_alphas: Vec<f64>,
    pub test_gammas: Vec<f64>,
    pub repeats: usize,
    pub master_seed: u64,
}

/// Upper bound accepted for any gamma candidate.
pub const GAMMA_BOUND: f64 = 10.0;

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        // schema problems are caller mistakes, not data corruption
        let plan: ExperimentPlan = serde_json::from_str(text)
            .map_err(|e| Error::Parameter(format!("invalid plan: {e}")))?;
        plan.validate().map_err(|violations| {
            Error::Parameter(format!("invalid plan: {}", violations.join("; ")))
        })?;
        Ok(plan)
    }

    /// Schema validation beyond what deserialization enforces; returns the
    /// JSON path of every violation.
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut violations = Vec::new();
        if self.repeats < 1 {
            violations.push("$.repeats: must be >= 1".into());
        }
        if self.training_specs.is_empty() {
            violations.push("$.training_specs: must be non-empty".into());
        }
        let has_clean = self.training_specs.iter().any(|s| s.scheme == "clean");
        let has_gaussian = self
            .training_specs
            .iter()
            .any(|s| s.scheme == "single" && s.alpha == Some(2.0));
        if !has_clean {
            violations.push("$.training_specs: missing the clean baseline".into());
        }
        if !has_gaussian {
            violations.push("$.training_specs: missing the Gaussian (single, alpha=2) baseline".into());
        }
        for (i, spec) in self.training_specs.iter().enumerate() {
            let path = format!("$.training_specs[{i}]");
            match spec.scheme.as_str() {
                "clean" => {
                    if !spec.gammas.is_empty() {
                        violations.push(format!("{path}.gammas: clean spec takes no gamma candidates"));
                    }
                }
                "single" => {
                    if spec.alpha.is_none() {
                        violations.push(format!("{path}.alpha: required for the single scheme"));
                    }
                }
                "multiple" | "mixture" => {
                    if spec.alphas.as_ref().is_none_or(|a| a.is_empty()) {
                        violations.push(format!("{path}.alphas: required for the {} scheme", spec.scheme));
                    }
                }
                other => violations.push(format!("{path}.scheme: unknown scheme '{other}'")),
            }
            if spec.scheme != "clean" && spec.gammas.is_empty() {
                violations.push(format!("{path}.gammas: need at least one candidate"));
            }
            for (j, &g) in spec.gammas.iter().enumerate() {
                if !(g > 0.0 && g <= GAMMA_BOUND) || !g.is_finite() {
                    violations.push(format!(
                        "{path}.gammas[{j}]: {g} outside (0, {GAMMA_BOUND}]"
                    ));
                }
            }
            if let Some(a) = spec.alpha {
                if !(a > 0.0 && a <= 2.0) {
                    violations.push(format!("{path}.alpha: {a} outside (0, 2]"));
                }
            }
            for a in spec.alphas.iter().flatten() {
                if !(*a > 0.0 && *a <= 2.0) {
                    violations.push(format!("{path}.alphas: {a} outside (0, 2]"));
                }
            }
        }
        if self.test_alphas.is_empty() {
            violations.push("$.test_alphas: must be non-empty".into());
        }
        if self.test_gammas.is_empty() {
            violations.push("$.test_gammas: must be non-empty".into());
        }
        if self.model.width < 1 || self.model.depth < 1 {
            violations.push("$.model: width and depth must be >= 1".into());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    fn train_config(&self, shuffle_seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            learning_rate: self.train.learning_rate,
            optimizer: if self.train.momentum > 0.0 {
                Optimizer::SgdMomentum {
                    mu: self.train.momentum,
                }
            } else {
                Optimizer::Sgd
            },
            shuffle_seed,
        }
    }
}

/// Geometric gamma grid over a closed range, mirroring the usual search
/// practice (default 6 points).
pub fn geometric_gamma_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
    (0..points).map(|i| lo * ratio.powi(i as i32)).collect()
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    /// Mean accuracy over successful trials; absent when every trial failed.
    pub mean: Option<f64>,
    /// Sample standard deviation (n-1); 0 for a single trial.
    pub std: Option<f64>,
    pub n_trials: usize,
    pub n_failed: usize,
    pub raw: Vec<f64>,
}

impl CellStats {
    pub fn from_raw(raw: Vec<f64>, n_failed: usize) -> Self {
        let n = raw.len();
        if n == 0 {
            return Self {
                mean: None,
                std: None,
                n_trials: 0,
                n_failed,
                raw,
            };
        }
        let mean = raw.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (raw.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean: Some(mean),
            std: Some(std),
            n_trials: n,
            n_failed,
            raw,
        }
    }
}

/// Mean/std accuracy per (training spec x test set) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<CellStats>>,
}

impl EvalMatrix {
    pub fn cell(&self, row_label: &str, col_label: &str) -> Result<&CellStats> {
        let r = self
            .rows
            .iter()
            .position(|r| r == row_label)
            .ok_or_else(|| Error::Parameter(format!("no training spec '{row_label}' in matrix")))?;
        let c = self
            .cols
            .iter()
            .position(|c| c == col_label)
            .ok_or_else(|| Error::Parameter(format!("no test set '{col_label}' in matrix")))?;
        Ok(&self.cells[r][c])
    }

    /// Mean accuracy of a row averaged uniformly over all test sets.
    pub fn row_average(&self, row_label: &str) -> Result<f64> {
        let r = self
            .rows
            .iter()
            .position(|r| r == row_label)
            .ok_or_else(|| Error::Parameter(format!("no training spec '{row_label}' in matrix")))?;
        let means = self.cells[r]
            .iter()
            .map(|c| {
                c.mean
                    .ok_or_else(|| Error::Numeric(format!("row '{row_label}' has an all-failed cell")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(means.iter().sum::<f64>() / means.len() as f64)
    }
}

/// Sparsity of one trained model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparsityRecord {
    pub spec_label: String,
    pub gamma: Option<f64>,
    pub repeat: usize,
    pub sparsity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub spec_label: String,
    pub gamma: Option<f64>,
    pub repeat: usize,
    pub stream_id: u64,
    /// Per-test-set accuracy, in test-suite order; absent if the trial failed.
    pub accuracies: Option<Vec<f64>>,
    pub sparsity: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutput {
    pub matrix: EvalMatrix,
    /// Selected gamma per training spec (None for clean).
    pub selected_gammas: Vec<(String, Option<f64>)>,
    /// Sparsity of every model trained at its spec's selected gamma.
    pub sparsity: Vec<SparsityRecord>,
    pub trials: Vec<TrialRecord>,
}

// ---------------------------------------------------------------------------
// Dataset realization
// ---------------------------------------------------------------------------

/// Build the (train, test) pair a plan asks for. Subset selection for real
/// files is seeded from the master seed.
pub fn realize_dataset(plan: &ExperimentPlan) -> Result<(Dataset, Dataset)> {
    let stream = RngStream::new(plan.master_seed);
    match &plan.dataset {
        DatasetSource::SyntheticImages {
            n_train_per_class,
            n_test_per_class,
            n_classes,
            shape,
            jitter,
        } => {
            // one pooled draw so train and test share the class templates,
            // then a per-class prefix/suffix split
            let per_class = n_train_per_class + n_test_per_class;
            let pool =
                dataio::synth_images(per_class, *n_classes, shape, *jitter, stream.derive("data", 0))?;
            let mut train_idx = Vec::new();
            let mut test_idx = Vec::new();
            for c in 0..*n_classes {
                let base = c * per_class;
                train_idx.extend(base..base + n_train_per_class);
                test_idx.extend(base + n_train_per_class..base + per_class);
            }
            Ok((
                pool.subset(&train_idx, "synth_images[train]")?,
                pool.subset(&test_idx, "synth_images[test]")?,
            ))
        }
        DatasetSource::SyntheticGaussians {
            n_train_per_class,
            n_test_per_class,
            n_classes,
            n_features,
            class_separation,
        } => {
            let train = dataio::synth_gaussians(
                *n_train_per_class,
                *n_classes,
                *n_features,
                *class_separation,
                stream.derive("data-train", 0),
            )?;
            let test = dataio::synth_gaussians(
                *n_test_per_class,
                *n_classes,
                *n_features,
                *class_separation,
                stream.derive("data-test", 0),
            )?;
            Ok((train, test))
        }
        DatasetSource::MnistIdx {
            train_images,
            train_labels,
            test_images,
            test_labels,
            train_subset,
            test_subset,
        } => {
            let train = dataio::load_idx(Path::new(train_images), Path::new(train_labels))?;
            let test = dataio::load_idx(Path::new(test_images), Path::new(test_labels))?;
            let train = maybe_subset(&train, *train_subset, stream.derive("subset-train", 0))?;
            let test = maybe_subset(&test, *test_subset, stream.derive("subset-test", 0))?;
            Ok((train, test))
        }
        DatasetSource::DatasetFiles {
            train_sidecar,
            test_sidecar,
        } => Ok((
            dataio::load_dataset(Path::new(train_sidecar))?,
            dataio::load_dataset(Path::new(test_sidecar))?,
        )),
    }
}

fn maybe_subset(ds: &Dataset, subset: Option<usize>, stream: RngStream) -> Result<Dataset> {
    match subset {
        None => Ok(ds.clone()),
        Some(n) if n >= ds.n_samples() => Ok(ds.clone()),
        Some(n) => {
            let mut indices: Vec<usize> = (0..ds.n_samples()).collect();
            dataio::shuffle(&mut indices, &mut stream.rng());
            indices.truncate(n);
            ds.subset(&indices, format!("{}[{n}]", ds.name()))
        }
    }
}

/// The synthetic-image fallback source used when MNIST files are absent:
/// a seeded 2000-train / 1000-test, 10-class, 28x28 image dataset.
pub fn desk_scale_fallback_source() -> DatasetSource {
    DatasetSource::SyntheticImages {
        n_train_per_class: 200,
        n_test_per_class: 100,
        n_classes: 10,
        shape: vec![28, 28, 1],
        jitter: 0.1,
    }
}

// ---------------------------------------------------------------------------
// The grid runner
// ---------------------------------------------------------------------------

fn run_trial(
    plan: &ExperimentPlan,
    train_base: &Dataset,
    test_suite: &[(String, Dataset)],
    spec: &SpecPlan,
    spec_index: usize,
    gamma: Option<f64>,
    gamma_index: usize,
    repeat: usize,
) -> TrialRecord {
    let stream = RngStream::new(plan.master_seed)
        .derive("spec", spec_index as u64)
        .derive("gamma", gamma_index as u64)
        .derive("repeat", repeat as u64);
    let mut record = TrialRecord {
        spec_label: spec.label.clone(),
        gamma,
        repeat,
        stream_id: stream.stream_id,
        accuracies: None,
        sparsity: None,
        error: None,
    };

    let result = (|| -> Result<(Vec<f64>, f64)> {
        let noise_spec = spec.to_noise_spec(gamma)?;
        let augmented = augment::augment(train_base, &noise_spec, stream.derive("augment", 0))?;
        let config = ModelConfig {
            width: plan.model.width,
            depth: plan.model.depth,
            n_inputs: train_base.n_features(),
            n_classes: train_base.n_classes(),
            init_seed: stream.derive("init", 0).stream_id,
        };
        let model = nn::init(&config)?;
        let tc = plan.train_config(stream.derive("shuffle", 0).stream_id);
        let (trained, _) = nn::train(model, &augmented.data, &tc)?;
        let accuracies = test_suite
            .iter()
            .map(|(_, ds)| nn::accuracy(&trained, ds))
            .collect::<Result<Vec<_>>>()?;
        let sparsity = trained.sparsity(SPARSITY_THRESHOLD)?;
        Ok((accuracies, sparsity))
    })();

    match result {
        Ok((accuracies, sparsity)) => {
            record.accuracies = Some(accuracies);
            record.sparsity = Some(sparsity);
        }
        Err(err) => record.error = Some(err.to_string()),
    }
    record
}

/// Choose the gamma maximizing mean accuracy; candidates are
/// `(gamma, average accuracy over all test sets)`. Ties break toward the
/// smaller gamma.
pub fn gamma_select(candidates: &[(f64, f64)]) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::Parameter("gamma_select needs at least one candidate".into()));
    }
    let mut best = candidates[0];
    for &(g, acc) in &candidates[1..] {
        if acc > best.1 || (acc == best.1 && g < best.0) {
            best = (g, acc);
        }
    }
    Ok(best.0)
}

/// Execute the full plan. `jobs` controls how many trials run concurrently
/// and never affects results. When `out_dir` is given, every raw trial is
/// persisted before aggregation.
pub fn run(plan: &ExperimentPlan, out_dir: Option<&Path>, jobs: usize) -> Result<RunOutput> {
    plan.validate()
        .map_err(|v| Error::Parameter(format!("invalid plan: {}", v.join("; "))))?;
    let (train_base, test_base) = realize_dataset(plan)?;
    let test_suite = augment::make_test_suite(
        &test_base,
        &plan.test_alphas,
        &plan.test_gammas,
        RngStream::new(plan.master_seed).derive("test-suite", 0),
    )?;

    // enumerate every (spec, gamma candidate, repeat) trial
    struct Job<'a> {
        spec: &'a SpecPlan,
        spec_index: usize,
        gamma: Option<f64>,
        gamma_index: usize,
        repeat: usize,
    }
    let mut jobs_list = Vec::new();
    for (si, spec) in plan.training_specs.iter().enumerate() {
        let gammas: Vec<Option<f64>> = if spec.gammas.is_empty() {
            vec![None]
        } else {
            spec.gammas.iter().map(|&g| Some(g)).collect()
        };
        for (gi, gamma) in gammas.into_iter().enumerate() {
            for repeat in 0..plan.repeats {
                jobs_list.push(Job {
                    spec,
                    spec_index: si,
                    gamma,
                    gamma_index: gi,
                    repeat,
                });
            }
        }
    }

    let run_one = |job: &Job| {
        run_trial(
            plan,
            &train_base,
            &test_suite,
            job.spec,
            job.spec_index,
            job.gamma,
            job.gamma_index,
            job.repeat,
        )
    };
    let trials: Vec<TrialRecord> = if jobs <= 1 {
        jobs_list.iter().map(run_one).collect()
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Parameter(format!("cannot build thread pool: {e}")))?;
        pool.install(|| jobs_list.par_iter().map(run_one).collect())
    };

    if let Some(dir) = out_dir {
        let raw_dir = dir.join("raw");
        fs::create_dir_all(&raw_dir)?;
        fs::write(dir.join("plan.json"), serde_json::to_string_pretty(plan)?)?;
        for trial in &trials {
            let name = format!("trial-{:016x}.json", trial.stream_id);
            fs::write(raw_dir.join(name), serde_json::to_string_pretty(trial)?)?;
        }
    }

    // gamma selection per spec: mean accuracy over all test sets and repeats
    let mut selected_gammas = Vec::new();
    for spec in &plan.training_specs {
        if spec.gammas.is_empty() {
            selected_gammas.push((spec.label.clone(), None));
            continue;
        }
        let mut candidates = Vec::new();
        for &g in &spec.gammas {
            let accs: Vec<f64> = trials
                .iter()
                .filter(|t| t.spec_label == spec.label && t.gamma == Some(g))
                .filter_map(|t| t.accuracies.as_ref())
                .map(|a| a.iter().sum::<f64>() / a.len() as f64)
                .collect();
            if !accs.is_empty() {
                candidates.push((g, accs.iter().sum::<f64>() / accs.len() as f64));
            }
        }
        let chosen = gamma_select(&candidates)?;
        selected_gammas.push((spec.label.clone(), Some(chosen)));
    }

    // matrix over the selected-gamma trials
    let cols: Vec<String> = test_suite.iter().map(|(label, _)| label.clone()).collect();
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut sparsity = Vec::new();
    for (spec, (_, chosen)) in plan.training_specs.iter().zip(&selected_gammas) {
        let selected: Vec<&TrialRecord> = trials
            .iter()
            .filter(|t| t.spec_label == spec.label && t.gamma == *chosen)
            .collect();
        let mut row_cells = Vec::with_capacity(cols.len());
        for col in 0..cols.len() {
            let raw: Vec<f64> = selected
                .iter()
                .filter_map(|t| t.accuracies.as_ref())
                .map(|a| a[col])
                .collect();
            let n_failed = selected.iter().filter(|t| t.error.is_some()).count();
            row_cells.push(CellStats::from_raw(raw, n_failed));
        }
        rows.push(spec.label.clone());
        cells.push(row_cells);
        for t in &selected {
            if let Some(s) = t.sparsity {
                sparsity.push(SparsityRecord {
                    spec_label: t.spec_label.clone(),
                    gamma: t.gamma,
                    repeat: t.repeat,
                    sparsity: s,
                });
            }
        }
    }

    let output = RunOutput {
        matrix: EvalMatrix { rows, cols, cells },
        selected_gammas,
        sparsity,
        trials,
    };
    if let Some(dir) = out_dir {
        report(&output, plan, dir)?;
    }
    Ok(output)
}

/// Relative percentage improvement of the subject's uniform-average accuracy
/// over the baseline's: `100 (A_subject - A_baseline) / A_baseline`.
pub fn improvement_table(matrix: &EvalMatrix, subject: &str, baseline: &str) -> Result<f64> {
    let a_subject = matrix.row_average(subject)?;
    let a_baseline = matrix.row_average(baseline)?;
    if a_baseline == 0.0 {
        return Err(Error::Numeric("baseline average accuracy is zero".into()));
    }
    Ok(100.0 * (a_subject - a_baseline) / a_baseline)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "NA".into(),
    }
}

/// Emit `matrix.csv`, `matrix.json` (with the full plan echoed),
/// `sparsity.csv` and per-spec plot-data files under `plotdata/`.
pub fn report(output: &RunOutput, plan: &ExperimentPlan, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let mut csv = String::from("train_spec,test_set,mean,std,n_trials\n");
    for (r, row) in output.matrix.rows.iter().enumerate() {
        for (c, col) in output.matrix.cols.iter().enumerate() {
            let cell = &output.matrix.cells[r][c];
            let _ = writeln!(
                csv,
                "{row},{col},{},{},{}",
                fmt_opt(cell.mean),
                fmt_opt(cell.std),
                cell.n_trials
            );
        }
    }
    fs::write(dir.join("matrix.csv"), csv)?;

    let json = serde_json::json!({
        "plan": plan,
        "selected_gammas": output.selected_gammas,
        "matrix": output.matrix,
    });
    fs::write(dir.join("matrix.json"), serde_json::to_string_pretty(&json)?)?;

    let mut sp = String::from("train_spec,gamma,repeat,sparsity\n");
    for rec in &output.sparsity {
        let _ = writeln!(
            sp,
            "{},{},{},{}",
            rec.spec_label,
            fmt_opt(rec.gamma),
            rec.repeat,
            rec.sparsity
        );
    }
    fs::write(dir.join("sparsity.csv"), sp)?;

    // plot data: x-axis clean first, then descending test alpha
    let plot_dir = dir.join("plotdata");
    fs::create_dir_all(&plot_dir)?;
    let col_order = plot_column_order(&output.matrix.cols);
    for (r, row) in output.matrix.rows.iter().enumerate() {
        let mut tsv = String::from("test_set\tmean\tstd\n");
        for &c in &col_order {
            let cell = &output.matrix.cells[r][c];
            let _ = writeln!(
                tsv,
                "{}\t{}\t{}",
                output.matrix.cols[c],
                fmt_opt(cell.mean),
                fmt_opt(cell.std)
            );
        }
        let safe: String = row
            .chars()
            .map(|ch| if ch.is_alphanumeric() || ch == '-' || ch == '_' { ch } else { '_' })
            .collect();
        fs::write(plot_dir.join(format!("{safe}.tsv")), tsv)?;
    }
    Ok(())
}

/// Column order for plot data: clean first, then descending alpha (2 -> 0.5).
fn plot_column_order(cols: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cols.len()).collect();
    let key = |label: &str| -> (u8, f64) {
        if label == "clean" {
            return (0, 0.0);
        }
        let alpha = label
            .strip_prefix("alpha=")
            .and_then(|rest| rest.split(',').next())
            .and_then(|a| a.parse::<f64>().ok())
            .unwrap_or(0.0);
        (1, -alpha)
    };
    order.sort_by(|&a, &b| {
        let (ka, va) = key(&cols[a]);
        let (kb, vb) = key(&cols[b]);
        ka.cmp(&kb).then(va.partial_cmp(&vb).unwrap())
    });
    order
}

/// Re-ingest a `matrix.json` report.
pub fn load_matrix_json(path: &Path) -> Result<(ExperimentPlan, RunOutputSummary)> {
    #[derive(Deserialize)]
    struct File {
        plan: ExperimentPlan,
        selected_gammas: Vec<(String, Option<f64>)>,
        matrix: EvalMatrix,
    }
    let file: File = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok((
        file.plan,
        RunOutputSummary {
            matrix: file.matrix,
            selected_gammas: file.selected_gammas,
        },
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutputSummary {
    pub matrix: EvalMatrix,
    pub selected_gammas: Vec<(String, Option<f64>)>,
}
