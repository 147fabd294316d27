//! A linear spectral classifier: `Z = U diag(h(mu)) U^T X W` with the
//! filter coefficients and the feature map trained jointly by full-batch
//! gradient descent on softmax cross-entropy.

use crate::correction::{correct, CorrectedSpectrum};
use crate::error::{Error, Result};
use crate::filters::{basis_matrix, BasisKind};
use crate::spectral::EigenSystem;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

const DIVERGENCE_FACTOR: f64 = 1e6;

/// Node features, class labels, and disjoint train/val/test index sets.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        train_idx: Vec<usize>,
        val_idx: Vec<usize>,
        test_idx: Vec<usize>,
    ) -> Result<Self> {
        let n = features.nrows();
        if labels.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {n} feature rows",
                labels.len()
            )));
        }
        let mut seen = vec![false; n];
        for (name, split) in [
            ("train", &train_idx),
            ("val", &val_idx),
            ("test", &test_idx),
        ] {
            for &i in split {
                if i >= n {
                    return Err(Error::InvalidParameter(format!(
                        "{name} index {i} out of range for n={n}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidParameter(format!(
                        "index {i} appears in more than one split"
                    )));
                }
                seen[i] = true;
            }
        }
        if train_idx.is_empty() || val_idx.is_empty() || test_idx.is_empty() {
            return Err(Error::InvalidParameter(
                "all three splits must be non-empty".into(),
            ));
        }
        Ok(LabeledDataset {
            features,
            labels,
            train_idx,
            val_idx,
            test_idx,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().copied().max().unwrap_or(0) + 1
    }

    /// Loads features (numeric CSV, one node per row), labels (one
    /// integer per line), and three index-list files (one index per
    /// line).
    pub fn from_files(
        features: &Path,
        labels: &Path,
        train: &Path,
        val: &Path,
        test: &Path,
    ) -> Result<Self> {
        let feature_text = std::fs::read_to_string(features)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in feature_text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| Error::EdgeList {
                        line: idx + 1,
                        reason: format!("invalid feature value '{tok}'"),
                    })
                })
                .collect::<Result<_>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::EdgeList {
                        line: idx + 1,
                        reason: format!(
                            "expected {} feature columns, found {}",
                            first.len(),
                            row.len()
                        ),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::InvalidParameter("feature file is empty".into()));
        }
        let d = rows[0].len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let n = flat.len() / d;
        let features = Array2::from_shape_vec((n, d), flat)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;

        let labels = read_index_list(labels)?;
        let train_idx = read_index_list(train)?;
        let val_idx = read_index_list(val)?;
        let test_idx = read_index_list(test)?;
        Self::new(features, labels, train_idx, val_idx, test_idx)
    }
}

fn read_index_list(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            l.trim().parse::<usize>().map_err(|_| Error::EdgeList {
                line: idx + 1,
                reason: format!("invalid index '{}'", l.trim()),
            })
        })
        .collect()
}

/// One-hot community indicators plus seeded Gaussian noise.
pub fn community_features(
    labels: &[usize],
    n_classes: usize,
    noise: f64,
    seed: u64,
) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::<f64>::zeros((labels.len(), n_classes));
    for (i, &label) in labels.iter().enumerate() {
        for c in 0..n_classes {
            let indicator = if c == label { 1.0 } else { 0.0 };
            let e: f64 = StandardNormal.sample(&mut rng);
            x[[i, c]] = indicator + noise * e;
        }
    }
    x
}

/// Seeded shuffle split; fractions are (train, val), the rest is test.
pub fn random_split(
    n: usize,
    fractions: (f64, f64),
    seed: u64,
) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = ((n as f64) * fractions.0).round() as usize;
    let n_val = ((n as f64) * fractions.1).round() as usize;
    let train = order[..n_train].to_vec();
    let val = order[n_train..(n_train + n_val).min(n)].to_vec();
    let test = order[(n_train + n_val).min(n)..].to_vec();
    (train, val, test)
}

/// Training settings for [`train_classifier`].
#[derive(Debug, Clone)]
pub struct ClassifierConfig {
    pub basis: BasisKind,
    pub order: usize,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Early-stopping patience on validation accuracy, in iterations.
    pub patience: usize,
    pub seed: u64,
    /// Keep Bernstein coefficients non-negative. Ignored otherwise.
    pub nonneg: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            basis: BasisKind::GprMonomial,
            order: 10,
            learning_rate: 0.2,
            max_iters: 2000,
            patience: 200,
            seed: 0,
            nonneg: true,
        }
    }
}

/// Accuracy report of one training run.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifierReport {
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    /// Iteration whose parameters were kept (best validation accuracy).
    pub best_iter: usize,
    pub iters_run: usize,
    pub wall_time_s: f64,
}

/// The classifier objective in spectral coordinates, factored out so the
/// analytic gradients can be finite-difference checked.
pub struct ClassifierProblem<'a> {
    ds: &'a LabeledDataset,
    eig: &'a EigenSystem,
    basis_mat: Array2<f64>,
    features_hat: Array2<f64>,
    per_channel: bool,
    n_classes: usize,
}

impl<'a> ClassifierProblem<'a> {
    pub fn new(
        ds: &'a LabeledDataset,
        eig: &'a EigenSystem,
        spec: &CorrectedSpectrum,
        basis: BasisKind,
        order: usize,
    ) -> Result<Self> {
        if ds.n() != eig.n() {
            return Err(Error::DimensionMismatch(format!(
                "dataset has {} nodes but the eigensystem has {}",
                ds.n(),
                eig.n()
            )));
        }
        if spec.source_lambda() != eig.eigenvalues() {
            return Err(Error::SourceMismatch);
        }
        Ok(ClassifierProblem {
            ds,
            eig,
            basis_mat: basis_matrix(basis, spec.mu(), order)?,
            features_hat: eig.eigenvectors().t().dot(&ds.features),
            // Per Jacobi convention each output dimension gets its own
            // filter; the other families share one.
            per_channel: matches!(basis, BasisKind::Jacobi { .. }),
            n_classes: ds.n_classes(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn filter_channels(&self) -> usize {
        if self.per_channel {
            self.n_classes
        } else {
            1
        }
    }

    pub fn coeff_shape(&self) -> (usize, usize) {
        (self.basis_mat.ncols(), self.filter_channels())
    }

    /// Node logits `Z = U diag(h) U^T X W`.
    pub fn logits(&self, alpha: &Array2<f64>, w: &Array2<f64>) -> Array2<f64> {
        let h = self.basis_mat.dot(alpha); // n x channels
        let mut t = self.features_hat.dot(w); // n x C, spectral domain
        for i in 0..t.nrows() {
            for c in 0..t.ncols() {
                let src = if self.per_channel { c } else { 0 };
                t[[i, c]] *= h[[i, src]];
            }
        }
        self.eig.eigenvectors().dot(&t)
    }

    fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
        let mut p = logits.clone();
        for mut row in p.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        p
    }

    /// Mean cross-entropy over the training indices.
    pub fn loss(&self, alpha: &Array2<f64>, w: &Array2<f64>) -> f64 {
        let probs = Self::softmax_rows(&self.logits(alpha, w));
        let mut acc = 0.0;
        for &i in &self.ds.train_idx {
            acc -= probs[[i, self.ds.labels[i]]].max(1e-300).ln();
        }
        acc / self.ds.train_idx.len() as f64
    }

    /// Analytic gradients of [`ClassifierProblem::loss`] with respect to
    /// the filter coefficients and the feature map.
    pub fn gradients(&self, alpha: &Array2<f64>, w: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let n = self.ds.n();
        let c = self.n_classes;
        let logits = self.logits(alpha, w);
        let probs = Self::softmax_rows(&logits);

        // dL/dZ, non-zero only on training rows
        let mut g = Array2::<f64>::zeros((n, c));
        let scale = 1.0 / self.ds.train_idx.len() as f64;
        for &i in &self.ds.train_idx {
            for cls in 0..c {
                let y = if cls == self.ds.labels[i] { 1.0 } else { 0.0 };
                g[[i, cls]] = (probs[[i, cls]] - y) * scale;
            }
        }
        let g_hat = self.eig.eigenvectors().t().dot(&g);
        let t = self.features_hat.dot(w);
        let h = self.basis_mat.dot(alpha);

        // dL/dh[i, src] accumulates T[i,c] * G_hat[i,c] over the channels
        // mapped to src.
        let channels = self.filter_channels();
        let mut dh = Array2::<f64>::zeros((n, channels));
        for i in 0..n {
            for cls in 0..c {
                let src = if self.per_channel { cls } else { 0 };
                dh[[i, src]] += t[[i, cls]] * g_hat[[i, cls]];
            }
        }
        let d_alpha = self.basis_mat.t().dot(&dh);

        // dL/dW = X_hat^T (h .* G_hat)
        let mut hg = g_hat;
        for i in 0..n {
            for cls in 0..c {
                let src = if self.per_channel { cls } else { 0 };
                hg[[i, cls]] *= h[[i, src]];
            }
        }
        let d_w = self.features_hat.t().dot(&hg);
        (d_alpha, d_w)
    }

    fn accuracy(&self, logits: &Array2<f64>, idx: &[usize]) -> f64 {
        let mut hits = 0usize;
        for &i in idx {
            let row = logits.row(i);
            let mut best = 0usize;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            if best == self.ds.labels[i] {
                hits += 1;
            }
        }
        hits as f64 / idx.len() as f64
    }
}

/// Trains the classifier with early stopping on validation accuracy and
/// reports accuracy on all three splits at the best iterate.
pub fn train_classifier(
    ds: &LabeledDataset,
    eig: &EigenSystem,
    spec: &CorrectedSpectrum,
    config: &ClassifierConfig,
) -> Result<ClassifierReport> {
    if !(config.learning_rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "learning_rate must be positive, got {}",
            config.learning_rate
        )));
    }
    if config.max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
    }
    let started = Instant::now();
    let problem = ClassifierProblem::new(ds, eig, spec, config.basis, config.order)?;
    let project = config.nonneg && config.basis == BasisKind::Bernstein;

    // h starts as the identity response (alpha_0 = 1): plain logistic
    // regression on the raw features, for every basis family.
    let (k, channels) = problem.coeff_shape();
    let mut alpha = Array2::<f64>::zeros((k, channels));
    for ch in 0..channels {
        alpha[[0, ch]] = 1.0;
    }
    let d = ds.features.ncols();
    let c = problem.n_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let w_scale = 1.0 / (d as f64).sqrt();
    let mut w = Array2::from_shape_fn((d, c), |_| {
        let v: f64 = StandardNormal.sample(&mut rng);
        w_scale * v
    });

    // Best iterate by validation accuracy; ties go to the lower training
    // loss so a saturated (small) validation set does not freeze the
    // snapshot while the model is still improving.
    struct Best {
        val_acc: f64,
        loss: f64,
        iter: usize,
        alpha: Array2<f64>,
        w: Array2<f64>,
    }
    let initial_loss = problem.loss(&alpha, &w);
    let guard = DIVERGENCE_FACTOR * initial_loss.max(f64::MIN_POSITIVE);
    let mut best = Best {
        val_acc: 0.0,
        loss: f64::INFINITY,
        iter: 0,
        alpha: alpha.clone(),
        w: w.clone(),
    };
    let mut iters_run = 0;
    for iter in 0..config.max_iters {
        iters_run = iter + 1;
        let (d_alpha, d_w) = problem.gradients(&alpha, &w);
        alpha.scaled_add(-config.learning_rate, &d_alpha);
        w.scaled_add(-config.learning_rate, &d_w);
        if project {
            alpha.mapv_inplace(|v| v.max(0.0));
        }

        let logits = problem.logits(&alpha, &w);
        let val_acc = problem.accuracy(&logits, &ds.val_idx);
        let loss = problem.loss(&alpha, &w);
        if !loss.is_finite() || loss > guard {
            return Err(Error::Diverged { iter, loss });
        }
        if val_acc > best.val_acc || (val_acc == best.val_acc && loss < best.loss) {
            best = Best {
                val_acc,
                loss,
                iter,
                alpha: alpha.clone(),
                w: w.clone(),
            };
        }
        if iter - best.iter >= config.patience {
            break;
        }
    }

    let logits = problem.logits(&best.alpha, &best.w);
    Ok(ClassifierReport {
        train_accuracy: problem.accuracy(&logits, &ds.train_idx),
        val_accuracy: problem.accuracy(&logits, &ds.val_idx),
        test_accuracy: problem.accuracy(&logits, &ds.test_idx),
        best_iter: best.iter,
        iters_run,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// One point of a beta sweep.
#[derive(Debug, Clone, Serialize)]
pub struct BetaAccuracy {
    pub beta: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
}

/// Trains one classifier per beta. Selection between betas should use
/// `val_accuracy`; `test_accuracy` is what the sweep curve plots.
pub fn beta_sweep(
    ds: &LabeledDataset,
    eig: &EigenSystem,
    betas: &[f64],
    config: &ClassifierConfig,
) -> Result<Vec<BetaAccuracy>> {
    let mut out = Vec::with_capacity(betas.len());
    for &beta in betas {
        let spec = correct(eig, beta)?;
        let report = train_classifier(ds, eig, &spec, config)?;
        out.push(BetaAccuracy {
            beta,
            val_accuracy: report.val_accuracy,
            test_accuracy: report.test_accuracy,
        });
    }
    Ok(out)
}
