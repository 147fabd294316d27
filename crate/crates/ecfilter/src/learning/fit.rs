//! Filter fitting: a closed-form least-squares oracle and plain
//! full-batch gradient descent over the same quadratic objective.
//!
//! Both fitters work in the spectral domain. With `x_hat = U^T x` and
//! `t_hat = U^T t`, the objective per image is
//! `(1/n) sum_i (B[i,:] a * x_hat[i] - t_hat[i])^2`, which is quadratic
//! in the coefficient vector `a`, so the normal-equations solution is an
//! exact oracle for what gradient descent should reach.

use crate::correction::CorrectedSpectrum;
use crate::error::{Error, Result};
use crate::filters::{basis_matrix, target_response, BasisKind, FilterModel, TargetFilterKind};
use crate::spectral::EigenSystem;
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::time::Instant;

/// Ridge added to the normal equations; large enough to survive
/// rank-deficient designs, small enough not to move well-posed optima.
const RIDGE: f64 = 1e-10;
/// Condition-number threshold above which a fit is flagged.
const CONDITION_WARN: f64 = 1e12;
/// Divergence guard: abort when the loss exceeds this multiple of its
/// initial value.
const DIVERGENCE_FACTOR: f64 = 1e6;

/// A filter-learning task: per-image input signals and their filtered
/// ground truth, both in the node domain.
#[derive(Debug, Clone)]
pub struct FilterTask {
    /// `n x m` input signals, one image per column.
    pub inputs: Array2<f64>,
    /// `n x m` target signals.
    pub targets: Array2<f64>,
}

/// Builds ground truth by applying a predefined target response to each
/// input signal.
///
/// Targets always come from the original eigenvalues; the corrected
/// spectrum is a model-side device and never touches the ground truth.
pub fn make_filter_task(
    eig: &EigenSystem,
    kind: TargetFilterKind,
    signals: &Array2<f64>,
) -> Result<FilterTask> {
    let n = eig.n();
    if signals.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "signals have {} rows but the graph has {n} nodes",
            signals.nrows()
        )));
    }
    let u = eig.eigenvectors();
    let mut s_hat = u.t().dot(signals);
    for (i, &lambda) in eig.eigenvalues().iter().enumerate() {
        let gain = target_response(kind, lambda)?;
        for j in 0..s_hat.ncols() {
            s_hat[[i, j]] *= gain;
        }
    }
    Ok(FilterTask {
        inputs: signals.clone(),
        targets: u.dot(&s_hat),
    })
}

/// Gradient-descent settings for [`fit_gradient_descent`].
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub basis: BasisKind,
    pub order: usize,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Project Bernstein coefficients to `>= 0` after every step.
    /// Ignored for the other bases.
    pub nonneg: bool,
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        self.basis.validate()?;
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: FilterModel,
    /// Mean of `per_image_mse`.
    pub train_mse: f64,
    pub per_image_mse: Vec<f64>,
    pub wall_time_s: f64,
    /// Set when the normal-equations design was close to rank-deficient.
    pub condition_warning: bool,
}

/// The quadratic objective shared by both fitters, reduced to the
/// spectral domain. Public so that gradient checks can finite-difference
/// [`FitProblem::mse`] against [`FitProblem::gradient`].
#[derive(Debug, Clone)]
pub struct FitProblem {
    basis: BasisKind,
    order: usize,
    basis_mat: Array2<f64>,
    x_hat: Array2<f64>,
    t_hat: Array2<f64>,
    /// `w[i] = sum_j x_hat[i,j]^2`
    weights: Array1<f64>,
    /// `r[i] = sum_j x_hat[i,j] t_hat[i,j]`
    cross: Array1<f64>,
    target_sq: f64,
    scale: f64, // 1 / (n * m)
}

impl FitProblem {
    pub fn new(
        task: &FilterTask,
        eig: &EigenSystem,
        spec: &CorrectedSpectrum,
        basis: BasisKind,
        order: usize,
    ) -> Result<Self> {
        let n = eig.n();
        if spec.source_lambda() != eig.eigenvalues() {
            return Err(Error::SourceMismatch);
        }
        if task.inputs.nrows() != n || task.targets.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "task signals have {} rows but the graph has {n} nodes",
                task.inputs.nrows()
            )));
        }
        if task.inputs.dim() != task.targets.dim() {
            return Err(Error::DimensionMismatch(
                "inputs and targets must have identical shape".into(),
            ));
        }
        let m = task.inputs.ncols();
        if m == 0 {
            return Err(Error::InvalidParameter("task has no images".into()));
        }
        let u = eig.eigenvectors();
        let x_hat = u.t().dot(&task.inputs);
        let t_hat = u.t().dot(&task.targets);
        let mut weights = Array1::<f64>::zeros(n);
        let mut cross = Array1::<f64>::zeros(n);
        let mut target_sq = 0.0;
        for i in 0..n {
            for j in 0..m {
                weights[i] += x_hat[[i, j]] * x_hat[[i, j]];
                cross[i] += x_hat[[i, j]] * t_hat[[i, j]];
                target_sq += t_hat[[i, j]] * t_hat[[i, j]];
            }
        }
        Ok(FitProblem {
            basis,
            order,
            basis_mat: basis_matrix(basis, spec.mu(), order)?,
            x_hat,
            t_hat,
            weights,
            cross,
            target_sq,
            scale: 1.0 / (n * m) as f64,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Training MSE (mean over images of per-node mean squared error).
    pub fn mse(&self, coeffs: &Array1<f64>) -> f64 {
        let resp = self.basis_mat.dot(coeffs);
        let mut acc = self.target_sq;
        for i in 0..resp.len() {
            acc += self.weights[i] * resp[i] * resp[i] - 2.0 * resp[i] * self.cross[i];
        }
        self.scale * acc
    }

    /// Analytic gradient of [`FitProblem::mse`].
    pub fn gradient(&self, coeffs: &Array1<f64>) -> Array1<f64> {
        let resp = self.basis_mat.dot(coeffs);
        let residual =
            Array1::from_iter((0..resp.len()).map(|i| self.weights[i] * resp[i] - self.cross[i]));
        self.basis_mat.t().dot(&residual) * (2.0 * self.scale)
    }

    pub fn per_image_mse(&self, coeffs: &Array1<f64>) -> Vec<f64> {
        let resp = self.basis_mat.dot(coeffs);
        let n = self.x_hat.nrows();
        let m = self.x_hat.ncols();
        (0..m)
            .map(|j| {
                let mut acc = 0.0;
                for i in 0..n {
                    let e = resp[i] * self.x_hat[[i, j]] - self.t_hat[[i, j]];
                    acc += e * e;
                }
                acc / n as f64
            })
            .collect()
    }

    /// Largest eigenvalue of the objective's Hessian. `1 / curvature` is
    /// the largest safe constant step for gradient descent.
    pub fn max_curvature(&self) -> f64 {
        let k = self.order + 1;
        let mut hess = nalgebra::DMatrix::<f64>::zeros(k, k);
        for a in 0..k {
            for b in 0..=a {
                let mut acc = 0.0;
                for i in 0..self.basis_mat.nrows() {
                    acc += self.weights[i] * self.basis_mat[[i, a]] * self.basis_mat[[i, b]];
                }
                let v = 2.0 * self.scale * acc;
                hess[(a, b)] = v;
                hess[(b, a)] = v;
            }
        }
        hess.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    fn result(&self, coeffs: Array1<f64>, started: Instant, condition_warning: bool) -> FitResult {
        let per_image_mse = self.per_image_mse(&coeffs);
        let train_mse = per_image_mse.iter().sum::<f64>() / per_image_mse.len() as f64;
        let cols = Array2::from_shape_vec((coeffs.len(), 1), coeffs.to_vec())
            .expect("column reshape cannot fail");
        FitResult {
            model: FilterModel::new_unchecked(self.basis, self.order, cols)
                .expect("validated parameters"),
            train_mse,
            per_image_mse,
            wall_time_s: started.elapsed().as_secs_f64(),
            condition_warning,
        }
    }
}

/// Exact minimizer of the fitting objective via normal equations with a
/// tiny ridge. Serves as the oracle that gradient descent is checked
/// against; rank-deficient designs are flagged, not rejected.
pub fn fit_least_squares(
    task: &FilterTask,
    eig: &EigenSystem,
    spec: &CorrectedSpectrum,
    basis: BasisKind,
    order: usize,
) -> Result<FitResult> {
    let started = Instant::now();
    let problem = FitProblem::new(task, eig, spec, basis, order)?;
    let k = order + 1;

    let mut gram = nalgebra::DMatrix::<f64>::zeros(k, k);
    let mut rhs = nalgebra::DVector::<f64>::zeros(k);
    for a in 0..k {
        for b in 0..=a {
            let mut acc = 0.0;
            for i in 0..problem.basis_mat.nrows() {
                acc += problem.weights[i] * problem.basis_mat[[i, a]] * problem.basis_mat[[i, b]];
            }
            gram[(a, b)] = acc;
            gram[(b, a)] = acc;
        }
        let mut acc = 0.0;
        for i in 0..problem.basis_mat.nrows() {
            acc += problem.cross[i] * problem.basis_mat[[i, a]];
        }
        rhs[a] = acc;
    }

    let eigs = gram.clone().symmetric_eigenvalues();
    let max_eig = eigs.iter().cloned().fold(0.0f64, f64::max);
    let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition_warning = !(min_eig > max_eig / CONDITION_WARN);

    for i in 0..k {
        gram[(i, i)] += RIDGE;
    }
    let solved = nalgebra::Cholesky::new(gram)
        .map(|c| c.solve(&rhs))
        .ok_or(Error::SolverFailure)?;
    let coeffs = Array1::from_iter(solved.iter().copied());
    Ok(problem.result(coeffs, started, condition_warning))
}

/// Plain full-batch gradient descent with a constant step on the same
/// objective as [`fit_least_squares`]. Deterministic for a given seed.
pub fn fit_gradient_descent(
    task: &FilterTask,
    eig: &EigenSystem,
    spec: &CorrectedSpectrum,
    config: &FitConfig,
) -> Result<FitResult> {
    config.validate()?;
    let started = Instant::now();
    let problem = FitProblem::new(task, eig, spec, config.basis, config.order)?;
    let project = config.nonneg && config.basis == BasisKind::Bernstein;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut coeffs = Array1::from_iter((0..=config.order).map(|_| {
        let v: f64 = StandardNormal.sample(&mut rng);
        0.1 * v
    }));
    if project {
        coeffs.mapv_inplace(f64::abs);
    }

    let initial_mse = problem.mse(&coeffs);
    let guard = DIVERGENCE_FACTOR * initial_mse.max(f64::MIN_POSITIVE);
    for iter in 0..config.max_iters {
        let grad = problem.gradient(&coeffs);
        coeffs.scaled_add(-config.learning_rate, &grad);
        if project {
            coeffs.mapv_inplace(|v| v.max(0.0));
        }
        let mse = problem.mse(&coeffs);
        if !mse.is_finite() || mse > guard {
            return Err(Error::Diverged { iter, loss: mse });
        }
    }
    Ok(problem.result(coeffs, started, false))
}
