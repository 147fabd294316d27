//! JSON config files for the experiment subcommands. Every setting has a
//! default, a config file overrides defaults, and command-line flags
//! override the file.

use ecfilter::filters::{BasisKind, TargetFilterKind};
use ecfilter::learning::{classify_beta_grid, FilterExperimentConfig, FitMethod};
use ecfilter::{Error, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub fn parse_basis(label: &str, jacobi_ab: Option<(f64, f64)>) -> Result<BasisKind> {
    BasisKind::parse(label, jacobi_ab)
}

pub fn parse_method(label: &str) -> Result<FitMethod> {
    match label {
        "gd" | "gradient-descent" => Ok(FitMethod::GradientDescent),
        "ls" | "least-squares" => Ok(FitMethod::LeastSquares),
        other => Err(Error::InvalidParameter(format!(
            "unknown fit method '{other}' (expected gd or ls)"
        ))),
    }
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(Error::from)
}

/// `fit-filter` config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitFileConfig {
    pub grid: Option<GridSpec>,
    pub images: Option<usize>,
    pub targets: Option<Vec<String>>,
    pub bases: Option<Vec<String>>,
    pub jacobi_ab: Option<(f64, f64)>,
    pub order: Option<usize>,
    pub beta_grid: Option<Vec<f64>>,
    pub learning_rate: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub nonneg_bernstein: Option<bool>,
    pub smoothness: Option<f64>,
    pub method: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
}

impl FitFileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        load_json(path)
    }

    /// Applies the file on top of the built-in defaults.
    pub fn apply(self, config: &mut FilterExperimentConfig) -> Result<()> {
        if let Some(grid) = self.grid {
            config.rows = grid.rows;
            config.cols = grid.cols;
        }
        if let Some(v) = self.images {
            config.images = v;
        }
        let jacobi_ab = self.jacobi_ab;
        if let Some(targets) = self.targets {
            config.kinds = targets
                .iter()
                .map(|t| t.parse::<TargetFilterKind>())
                .collect::<Result<_>>()?;
        }
        if let Some(bases) = self.bases {
            config.bases = bases
                .iter()
                .map(|b| parse_basis(b, jacobi_ab))
                .collect::<Result<_>>()?;
        } else if let Some((a, b)) = jacobi_ab {
            for basis in config.bases.iter_mut() {
                if matches!(basis, BasisKind::Jacobi { .. }) {
                    *basis = BasisKind::Jacobi { a, b };
                }
            }
        }
        if let Some(v) = self.order {
            config.order = v;
        }
        if let Some(v) = self.beta_grid {
            config.beta_grid = v;
        }
        if self.learning_rate.is_some() {
            config.learning_rate = self.learning_rate;
        }
        if let Some(v) = self.max_iters {
            config.max_iters = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.nonneg_bernstein {
            config.nonneg_bernstein = v;
        }
        if let Some(v) = self.smoothness {
            config.smoothness = v;
        }
        if let Some(m) = self.method {
            config.method = parse_method(&m)?;
        }
        Ok(())
    }
}

/// `classify` config file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyFileConfig {
    pub sbm: Option<SbmSpec>,
    pub edge_list: Option<PathBuf>,
    pub n_hint: Option<usize>,
    pub dataset_files: Option<DatasetFiles>,
    pub feature_noise: Option<f64>,
    pub split: Option<SplitSpec>,
    pub basis: Option<String>,
    pub jacobi_ab: Option<(f64, f64)>,
    pub order: Option<usize>,
    pub beta: Option<f64>,
    pub beta_grid: Option<Vec<f64>>,
    pub learning_rate: Option<f64>,
    pub max_iters: Option<usize>,
    pub patience: Option<usize>,
    pub seed: Option<u64>,
    pub nonneg: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SbmSpec {
    pub n: usize,
    pub p_in: f64,
    pub p_out: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct DatasetFiles {
    pub features: PathBuf,
    pub labels: PathBuf,
    pub train: PathBuf,
    pub val: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
}

impl ClassifyFileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        load_json(path)
    }
}

/// Fully resolved classify settings (defaults + file + flags).
#[derive(Debug, Clone)]
pub struct ClassifySettings {
    pub sbm: SbmSpec,
    pub edge_list: Option<PathBuf>,
    pub n_hint: Option<usize>,
    pub dataset_files: Option<DatasetFiles>,
    pub feature_noise: f64,
    pub split: (f64, f64),
    pub basis_label: String,
    pub jacobi_ab: Option<(f64, f64)>,
    pub order: usize,
    pub beta: f64,
    pub beta_grid: Vec<f64>,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub patience: usize,
    pub seed: u64,
    pub nonneg: bool,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        ClassifySettings {
            sbm: SbmSpec {
                n: 200,
                p_in: 0.2,
                p_out: 0.01,
            },
            edge_list: None,
            n_hint: None,
            dataset_files: None,
            feature_noise: 0.4,
            split: (0.6, 0.2),
            basis_label: "gpr".into(),
            jacobi_ab: None,
            order: 10,
            beta: 0.5,
            beta_grid: classify_beta_grid(),
            learning_rate: 0.2,
            max_iters: 1000,
            patience: 200,
            seed: 0,
            nonneg: true,
        }
    }
}

impl ClassifySettings {
    pub fn apply_file(&mut self, file: ClassifyFileConfig) -> Result<()> {
        if let Some(s) = file.sbm {
            self.sbm = s;
        }
        if file.edge_list.is_some() {
            self.edge_list = file.edge_list;
        }
        if file.n_hint.is_some() {
            self.n_hint = file.n_hint;
        }
        if file.dataset_files.is_some() {
            self.dataset_files = file.dataset_files;
        }
        if let Some(v) = file.feature_noise {
            self.feature_noise = v;
        }
        if let Some(s) = file.split {
            self.split = (s.train, s.val);
        }
        if let Some(b) = file.basis {
            self.basis_label = b;
        }
        if file.jacobi_ab.is_some() {
            self.jacobi_ab = file.jacobi_ab;
        }
        if let Some(v) = file.order {
            self.order = v;
        }
        if let Some(v) = file.beta {
            self.beta = v;
        }
        if let Some(v) = file.beta_grid {
            self.beta_grid = v;
        }
        if let Some(v) = file.learning_rate {
            self.learning_rate = v;
        }
        if let Some(v) = file.max_iters {
            self.max_iters = v;
        }
        if let Some(v) = file.patience {
            self.patience = v;
        }
        if let Some(v) = file.seed {
            self.seed = v;
        }
        if let Some(v) = file.nonneg {
            self.nonneg = v;
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<BasisKind> {
        parse_basis(&self.basis_label, self.jacobi_ab)
    }
}
