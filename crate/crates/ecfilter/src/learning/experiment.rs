//! The synthetic filter-learning experiment: seeded smooth signals on a
//! grid graph, one fit per (target, basis, beta) cell, and a report that
//! compares the best corrected-spectrum run against the beta = 1
//! baseline.

use crate::correction::correct;
use crate::error::{Error, Result};
use crate::filters::{BasisKind, TargetFilterKind};
use crate::graph::Graph;
use crate::learning::fit::{
    fit_gradient_descent, fit_least_squares, make_filter_task, FitConfig, FitProblem,
};
use crate::spectral::{eigendecompose, EigenSystem};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Default beta grid for filter learning: {0.0, 0.1, ..., 0.9}.
pub fn filter_beta_grid() -> Vec<f64> {
    (0..10).map(|i| i as f64 / 10.0).collect()
}

/// Default beta grid for classification sweeps: {0.0, 0.01, ..., 0.99}.
pub fn classify_beta_grid() -> Vec<f64> {
    (0..100).map(|i| i as f64 / 100.0).collect()
}

/// How each experiment cell is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    /// Full-batch gradient descent (the training protocol).
    GradientDescent,
    /// The closed-form least-squares oracle.
    LeastSquares,
}

/// Settings for [`run_filter_experiment`].
#[derive(Debug, Clone)]
pub struct FilterExperimentConfig {
    pub rows: usize,
    pub cols: usize,
    /// Number of synthetic images.
    pub images: usize,
    pub kinds: Vec<TargetFilterKind>,
    pub bases: Vec<BasisKind>,
    /// Corrected-spectrum mixing weights to evaluate; the beta = 1
    /// baseline is always added.
    pub beta_grid: Vec<f64>,
    pub order: usize,
    /// Constant gradient-descent step; `None` picks `1 / L` per cell from
    /// the quadratic's curvature.
    pub learning_rate: Option<f64>,
    pub max_iters: usize,
    pub seed: u64,
    /// Keep Bernstein coefficients non-negative during training.
    pub nonneg_bernstein: bool,
    /// Low-pass strength of the synthetic signals: white noise filtered
    /// by `exp(-smoothness * lambda)`.
    pub smoothness: f64,
    pub method: FitMethod,
    /// Also record the least-squares oracle MSE for every cell.
    pub oracle_column: bool,
}

impl Default for FilterExperimentConfig {
    fn default() -> Self {
        FilterExperimentConfig {
            rows: 16,
            cols: 16,
            images: 10,
            kinds: TargetFilterKind::ALL.to_vec(),
            bases: vec![
                BasisKind::GprMonomial,
                BasisKind::Bernstein,
                BasisKind::Jacobi { a: 1.0, b: 1.0 },
            ],
            beta_grid: filter_beta_grid(),
            order: 10,
            learning_rate: None,
            max_iters: 3000,
            seed: 7,
            nonneg_bernstein: true,
            smoothness: 2.0,
            method: FitMethod::GradientDescent,
            oracle_column: false,
        }
    }
}

impl FilterExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows * self.cols < 2 {
            return Err(Error::InvalidParameter(
                "experiment grid needs at least 2 nodes".into(),
            ));
        }
        if self.images == 0 {
            return Err(Error::InvalidParameter("images must be >= 1".into()));
        }
        if self.kinds.is_empty() || self.bases.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one target and one basis are required".into(),
            ));
        }
        for basis in &self.bases {
            basis.validate()?;
        }
        for &b in &self.beta_grid {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::InvalidParameter(format!(
                    "beta grid value {b} outside [0, 1]"
                )));
            }
        }
        if let Some(lr) = self.learning_rate {
            if !(lr > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "learning_rate must be positive, got {lr}"
                )));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if self.smoothness < 0.0 {
            return Err(Error::InvalidParameter(
                "smoothness must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One fitted cell of the experiment grid.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub target: String,
    pub basis: String,
    pub beta: f64,
    pub order: usize,
    pub mse: f64,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_mse: Option<f64>,
}

/// Baseline-vs-best summary for one (target, basis) pair.
#[derive(Debug, Clone, Serialize)]
pub struct TrendSummary {
    pub target: String,
    pub basis: String,
    /// MSE at beta = 1 (original eigenvalues).
    pub baseline_mse: f64,
    /// Best beta strictly below 1.
    pub best_beta: f64,
    pub best_mse: f64,
    /// `(baseline - best) / baseline`, in percent.
    pub improvement_pct: f64,
}

/// Statistics of the generated signals, reported so runs are comparable.
#[derive(Debug, Clone, Serialize)]
pub struct SignalStats {
    pub nodes: usize,
    pub images: usize,
    pub smoothness: f64,
    pub value_mean: f64,
    pub value_std: f64,
    /// Fraction of spectral energy below lambda = 1.
    pub low_freq_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub records: Vec<ExperimentRecord>,
    pub summaries: Vec<TrendSummary>,
    pub signal_stats: SignalStats,
}

impl ExperimentReport {
    /// CSV rows `target,basis,beta,K,mse,seconds`, plus an `oracle_mse`
    /// column when any record carries one. `with_timing = false` zeroes
    /// the seconds column for byte-reproducible output.
    pub fn to_csv(&self, with_timing: bool) -> String {
        let oracle = self.records.iter().any(|r| r.oracle_mse.is_some());
        let mut out = String::from("target,basis,beta,K,mse,seconds");
        if oracle {
            out.push_str(",oracle_mse");
        }
        out.push('\n');
        for r in &self.records {
            let seconds = if with_timing { r.seconds } else { 0.0 };
            out.push_str(&format!(
                "{},{},{},{},{},{}",
                r.target, r.basis, r.beta, r.order, r.mse, seconds
            ));
            if oracle {
                match r.oracle_mse {
                    Some(v) => out.push_str(&format!(",{v}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    /// JSON summary; timing is zeroed when `with_timing` is false.
    pub fn to_json(&self, with_timing: bool) -> serde_json::Value {
        let mut clone = self.clone();
        if !with_timing {
            for r in &mut clone.records {
                r.seconds = 0.0;
            }
        }
        serde_json::to_value(&clone).expect("report serialization cannot fail")
    }
}

/// Seeded smooth random fields: white noise low-pass filtered by
/// `exp(-smoothness * lambda)`, each column normalized to unit length.
pub fn smooth_signals(eig: &EigenSystem, images: usize, smoothness: f64, seed: u64) -> Array2<f64> {
    let n = eig.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Array2::from_shape_fn((n, images), |_| {
        let v: f64 = StandardNormal.sample(&mut rng);
        v
    });
    let u = eig.eigenvectors();
    let mut hat = u.t().dot(&noise);
    for (i, &lambda) in eig.eigenvalues().iter().enumerate() {
        let gain = (-smoothness * lambda).exp();
        for j in 0..images {
            hat[[i, j]] *= gain;
        }
    }
    let mut signals = u.dot(&hat);
    for mut col in signals.columns_mut() {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            col.mapv_inplace(|v| v / norm);
        }
    }
    signals
}

fn signal_stats(eig: &EigenSystem, signals: &Array2<f64>, smoothness: f64) -> SignalStats {
    let total = signals.len() as f64;
    let mean = signals.sum() / total;
    let var = signals.mapv(|v| (v - mean) * (v - mean)).sum() / total;
    let hat = eig.eigenvectors().t().dot(signals);
    let mut low = 0.0;
    let mut all = 0.0;
    for (i, &lambda) in eig.eigenvalues().iter().enumerate() {
        for j in 0..signals.ncols() {
            let e = hat[[i, j]] * hat[[i, j]];
            all += e;
            if lambda < 1.0 {
                low += e;
            }
        }
    }
    SignalStats {
        nodes: signals.nrows(),
        images: signals.ncols(),
        smoothness,
        value_mean: mean,
        value_std: var.sqrt(),
        low_freq_mass: if all > 0.0 { low / all } else { 0.0 },
    }
}

/// Deterministic per-cell seed derived from the experiment seed.
fn cell_seed(seed: u64, kind: usize, basis: usize, beta_idx: usize) -> u64 {
    let mut x = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(kind as u64)
        .wrapping_mul(0xbf58476d1ce4e5b9)
        .wrapping_add(basis as u64)
        .wrapping_mul(0x94d049bb133111eb)
        .wrapping_add(beta_idx as u64);
    x ^= x >> 31;
    x
}

/// Runs the full experiment grid: one fit per (target, basis, beta),
/// with the beta = 1 baseline always included.
pub fn run_filter_experiment(config: &FilterExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let g = Graph::grid(config.rows, config.cols)?;
    let eig = eigendecompose(&g.normalized_operators().lap_norm)?;
    let signals = smooth_signals(&eig, config.images, config.smoothness, config.seed);
    let stats = signal_stats(&eig, &signals, config.smoothness);

    let mut betas = config.beta_grid.clone();
    if !betas.contains(&1.0) {
        betas.push(1.0);
    }
    betas.sort_by(f64::total_cmp);
    betas.dedup();

    let mut records = Vec::new();
    for (ki, &kind) in config.kinds.iter().enumerate() {
        let task = make_filter_task(&eig, kind, &signals)?;
        for (bi, &basis) in config.bases.iter().enumerate() {
            for (gi, &beta) in betas.iter().enumerate() {
                let spec = correct(&eig, beta)?;
                let fit = match config.method {
                    FitMethod::LeastSquares => {
                        fit_least_squares(&task, &eig, &spec, basis, config.order)?
                    }
                    FitMethod::GradientDescent => {
                        let lr = match config.learning_rate {
                            Some(lr) => lr,
                            None => {
                                let problem =
                                    FitProblem::new(&task, &eig, &spec, basis, config.order)?;
                                1.0 / problem.max_curvature()
                            }
                        };
                        let fit_config = FitConfig {
                            basis,
                            order: config.order,
                            learning_rate: lr,
                            max_iters: config.max_iters,
                            seed: cell_seed(config.seed, ki, bi, gi),
                            nonneg: config.nonneg_bernstein,
                        };
                        fit_gradient_descent(&task, &eig, &spec, &fit_config)?
                    }
                };
                let oracle_mse = if config.oracle_column {
                    Some(fit_least_squares(&task, &eig, &spec, basis, config.order)?.train_mse)
                } else {
                    None
                };
                records.push(ExperimentRecord {
                    target: kind.label().to_string(),
                    basis: basis.to_string(),
                    beta,
                    order: config.order,
                    mse: fit.train_mse,
                    seconds: fit.wall_time_s,
                    oracle_mse,
                });
            }
        }
    }

    let mut summaries = Vec::new();
    for kind in &config.kinds {
        for basis in &config.bases {
            let cell: Vec<&ExperimentRecord> = records
                .iter()
                .filter(|r| r.target == kind.label() && r.basis == basis.to_string())
                .collect();
            let baseline = cell
                .iter()
                .find(|r| r.beta == 1.0)
                .expect("baseline run exists");
            let best = cell
                .iter()
                .filter(|r| r.beta < 1.0)
                .min_by(|a, b| a.mse.total_cmp(&b.mse));
            if let Some(best) = best {
                summaries.push(TrendSummary {
                    target: baseline.target.clone(),
                    basis: baseline.basis.clone(),
                    baseline_mse: baseline.mse,
                    best_beta: best.beta,
                    best_mse: best.mse,
                    improvement_pct: if baseline.mse > 0.0 {
                        100.0 * (baseline.mse - best.mse) / baseline.mse
                    } else {
                        0.0
                    },
                });
            }
        }
    }

    Ok(ExperimentReport {
        records,
        summaries,
        signal_stats: stats,
    })
}
