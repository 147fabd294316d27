//! Polynomial filter bases and the filtering operator.
//!
//! Three basis families share one evaluation surface. Argument
//! conventions are fixed here and nowhere else: the monomial and Jacobi
//! bases act on `1 - mu` (adjacency convention), Bernstein acts on `mu`
//! directly. Mixing those up degrades fits silently, so callers never
//! apply the transform themselves.

use crate::error::{Error, Result};
use crate::spectral::EigenSystem;
use ndarray::{Array1, Array2};
use std::fmt;
use std::str::FromStr;

/// Which polynomial family a filter uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisKind {
    /// Monomials of the normalized adjacency: `(1 - mu)^k`.
    GprMonomial,
    /// Bernstein basis on `[0, 2]`: `2^-K C(K,k) (2 - mu)^(K-k) mu^k`.
    Bernstein,
    /// Jacobi polynomials `P_k^{a,b}(1 - mu)` via the three-term recurrence.
    Jacobi { a: f64, b: f64 },
}

impl BasisKind {
    /// Classical orthogonality requires `a, b > -1`.
    pub fn validate(&self) -> Result<()> {
        if let BasisKind::Jacobi { a, b } = self {
            if !(*a > -1.0 && *b > -1.0) {
                return Err(Error::InvalidParameter(format!(
                    "jacobi parameters must satisfy a, b > -1, got a={a}, b={b}"
                )));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self {
            BasisKind::GprMonomial => "gpr",
            BasisKind::Bernstein => "bern",
            BasisKind::Jacobi { .. } => "jacobi",
        }
    }

    /// Parses a basis label; `jacobi` gets the default `(a, b) = (1, 1)`.
    pub fn parse(label: &str, jacobi_ab: Option<(f64, f64)>) -> Result<Self> {
        let kind = match label {
            "gpr" => BasisKind::GprMonomial,
            "bern" | "bernstein" => BasisKind::Bernstein,
            "jacobi" => {
                let (a, b) = jacobi_ab.unwrap_or((1.0, 1.0));
                BasisKind::Jacobi { a, b }
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown basis '{other}' (expected gpr, bern, or jacobi)"
                )))
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisKind::Jacobi { a, b } => write!(f, "jacobi({a},{b})"),
            other => f.write_str(other.label()),
        }
    }
}

/// The five predefined target responses used in the filter-learning
/// experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetFilterKind {
    Low,
    High,
    Band,
    Reject,
    Comb,
}

impl TargetFilterKind {
    pub const ALL: [TargetFilterKind; 5] = [
        TargetFilterKind::Low,
        TargetFilterKind::High,
        TargetFilterKind::Band,
        TargetFilterKind::Reject,
        TargetFilterKind::Comb,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            TargetFilterKind::Low => "low",
            TargetFilterKind::High => "high",
            TargetFilterKind::Band => "band",
            TargetFilterKind::Reject => "reject",
            TargetFilterKind::Comb => "comb",
        }
    }
}

impl FromStr for TargetFilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(TargetFilterKind::Low),
            "high" => Ok(TargetFilterKind::High),
            "band" => Ok(TargetFilterKind::Band),
            "reject" => Ok(TargetFilterKind::Reject),
            "comb" => Ok(TargetFilterKind::Comb),
            other => Err(Error::InvalidParameter(format!(
                "unknown target filter '{other}'"
            ))),
        }
    }
}

/// Target gain at a single frequency; `lambda` must lie in `[0, 2]`.
pub fn target_response(kind: TargetFilterKind, lambda: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda {lambda} outside [0, 2]"
        )));
    }
    let g = match kind {
        TargetFilterKind::Low => (-10.0 * lambda * lambda).exp(),
        TargetFilterKind::High => 1.0 - (-10.0 * lambda * lambda).exp(),
        TargetFilterKind::Band => (-10.0 * (lambda - 1.0).powi(2)).exp(),
        TargetFilterKind::Reject => 1.0 - (-10.0 * (lambda - 1.0).powi(2)).exp(),
        TargetFilterKind::Comb => (std::f64::consts::PI * lambda).sin().abs(),
    };
    Ok(g)
}

/// `C(n, k)` computed multiplicatively in floating point.
fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Recurrence coefficients of the Jacobi three-term iteration, written so
/// that `P_k(x) = (a_k x + b_k) P_{k-1}(x) - c_k P_{k-2}(x)` for `k >= 2`.
struct JacobiRecurrence {
    a: f64,
    b: f64,
}

impl JacobiRecurrence {
    fn step(&self, k: usize) -> (f64, f64, f64) {
        let (a, b) = (self.a, self.b);
        let k = k as f64;
        let t = 2.0 * k + a + b;
        let ak = (t - 1.0) * t / (2.0 * k * (k + a + b));
        let bk = (t - 1.0) * (a * a - b * b) / (2.0 * k * (k + a + b) * (t - 2.0));
        let ck = (k + a - 1.0) * (k + b - 1.0) * t / (k * (k + a + b) * (t - 2.0));
        (ak, bk, ck)
    }

    fn first(&self, x: f64) -> f64 {
        0.5 * self.a - 0.5 * self.b + (0.5 * self.a + 0.5 * self.b + 1.0) * x
    }
}

/// Evaluates the basis functions at every corrected eigenvalue.
///
/// Returns the `n x (K + 1)` matrix with `B[i][k]` the k-th basis
/// function at `mu[i]`.
pub fn basis_matrix(basis: BasisKind, mu: &Array1<f64>, order: usize) -> Result<Array2<f64>> {
    basis.validate()?;
    if let Some(v) = mu.iter().find(|v| !(0.0..=2.0).contains(*v)) {
        return Err(Error::InvalidParameter(format!(
            "corrected eigenvalue {v} outside [0, 2]"
        )));
    }
    let n = mu.len();
    let mut out = Array2::<f64>::zeros((n, order + 1));
    match basis {
        BasisKind::GprMonomial => {
            for (i, &m) in mu.iter().enumerate() {
                let x = 1.0 - m;
                let mut p = 1.0;
                for k in 0..=order {
                    out[[i, k]] = p;
                    p *= x;
                }
            }
        }
        BasisKind::Bernstein => {
            let scale = 0.5f64.powi(order as i32);
            for (i, &m) in mu.iter().enumerate() {
                for k in 0..=order {
                    out[[i, k]] = scale
                        * binomial(order, k)
                        * (2.0 - m).powi((order - k) as i32)
                        * m.powi(k as i32);
                }
            }
        }
        BasisKind::Jacobi { a, b } => {
            let rec = JacobiRecurrence { a, b };
            for (i, &m) in mu.iter().enumerate() {
                let x = 1.0 - m;
                out[[i, 0]] = 1.0;
                if order >= 1 {
                    out[[i, 1]] = rec.first(x);
                }
                for k in 2..=order {
                    let (ak, bk, ck) = rec.step(k);
                    out[[i, k]] = (ak * x + bk) * out[[i, k - 1]] - ck * out[[i, k - 2]];
                }
            }
        }
    }
    Ok(out)
}

/// A polynomial filter: basis, order, and one coefficient column per
/// output channel (a single shared column for the monomial and Bernstein
/// families; one per output dimension for Jacobi).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterModel {
    basis: BasisKind,
    order: usize,
    coeffs: Array2<f64>,
}

impl FilterModel {
    /// Validating constructor. Bernstein filters must have non-negative
    /// coefficients.
    pub fn new(basis: BasisKind, order: usize, coeffs: Array2<f64>) -> Result<Self> {
        let model = Self::new_unchecked(basis, order, coeffs)?;
        if basis == BasisKind::Bernstein && model.coeffs.iter().any(|&c| c < 0.0) {
            return Err(Error::InvalidParameter(
                "bernstein filter coefficients must be non-negative".into(),
            ));
        }
        Ok(model)
    }

    /// Like [`FilterModel::new`] but without the Bernstein sign
    /// constraint. Used by the unconstrained fitting routines whose whole
    /// point is the exact quadratic optimum.
    pub fn new_unchecked(basis: BasisKind, order: usize, coeffs: Array2<f64>) -> Result<Self> {
        basis.validate()?;
        if coeffs.nrows() != order + 1 || coeffs.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "coefficients must be (K+1) x C with C >= 1; got {}x{} for K={order}",
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        Ok(FilterModel {
            basis,
            order,
            coeffs,
        })
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn channels(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn coeffs(&self) -> &Array2<f64> {
        &self.coeffs
    }

    /// JSON object `{basis, a, b, K, coeffs}` with row-major coefficients.
    pub fn to_json(&self) -> serde_json::Value {
        let (a, b) = match self.basis {
            BasisKind::Jacobi { a, b } => (Some(a), Some(b)),
            _ => (None, None),
        };
        serde_json::json!({
            "basis": self.basis.label(),
            "a": a,
            "b": b,
            "K": self.order,
            "coeffs": self.coeffs.iter().copied().collect::<Vec<f64>>(),
        })
    }

    /// Parses the [`FilterModel::to_json`] schema. The channel count is
    /// recovered from the coefficient length.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let get = |key: &str| {
            value
                .get(key)
                .ok_or_else(|| Error::InvalidParameter(format!("filter json missing '{key}'")))
        };
        let basis_label = get("basis")?
            .as_str()
            .ok_or_else(|| Error::InvalidParameter("'basis' must be a string".into()))?;
        let ab = match (
            value.get("a").and_then(|v| v.as_f64()),
            value.get("b").and_then(|v| v.as_f64()),
        ) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        };
        let basis = BasisKind::parse(basis_label, ab)?;
        let order = get("K")?
            .as_u64()
            .ok_or_else(|| Error::InvalidParameter("'K' must be a non-negative integer".into()))?
            as usize;
        let flat: Vec<f64> = get("coeffs")?
            .as_array()
            .ok_or_else(|| Error::InvalidParameter("'coeffs' must be an array".into()))?
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| Error::InvalidParameter("non-numeric coefficient".into()))
            })
            .collect::<Result<_>>()?;
        if flat.is_empty() || flat.len() % (order + 1) != 0 {
            return Err(Error::InvalidParameter(format!(
                "coefficient count {} is not a multiple of K+1 = {}",
                flat.len(),
                order + 1
            )));
        }
        let channels = flat.len() / (order + 1);
        let coeffs = Array2::from_shape_vec((order + 1, channels), flat)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Self::new_unchecked(basis, order, coeffs)
    }
}

/// Per-eigenvalue responses `h_l(mu_i)`, one column per channel.
pub fn filter_response(model: &FilterModel, mu: &Array1<f64>) -> Result<Array2<f64>> {
    let basis = basis_matrix(model.basis, mu, model.order)?;
    Ok(basis.dot(model.coeffs()))
}

fn check_feature_dims(
    n: usize,
    features: &Array2<f64>,
    weights: &Array2<f64>,
    model_channels: usize,
) -> Result<usize> {
    if features.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "features have {} rows but the graph has {n} nodes",
            features.nrows()
        )));
    }
    if weights.nrows() != features.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "weights are {}x{} but features have {} columns",
            weights.nrows(),
            weights.ncols(),
            features.ncols()
        )));
    }
    let channels = weights.ncols();
    if model_channels != 1 && model_channels != channels {
        return Err(Error::DimensionMismatch(format!(
            "filter has {model_channels} channels but the output has {channels}"
        )));
    }
    Ok(channels)
}

/// The complete filtering process through the eigenvalue route:
/// `Z[:, l] = U diag(h_l(mu)) U^T (X W)[:, l]`.
///
/// A single-channel model is broadcast across all output channels.
pub fn apply_filter(
    eig: &EigenSystem,
    model: &FilterModel,
    mu: &Array1<f64>,
    features: &Array2<f64>,
    weights: &Array2<f64>,
) -> Result<Array2<f64>> {
    let n = eig.n();
    if mu.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "mu has length {} but the eigensystem has {n} values",
            mu.len()
        )));
    }
    let channels = check_feature_dims(n, features, weights, model.channels())?;
    let responses = filter_response(model, mu)?;

    let u = eig.eigenvectors();
    let xw = features.dot(weights);
    let mut xw_hat = u.t().dot(&xw);
    for l in 0..channels {
        let src = if model.channels() == 1 { 0 } else { l };
        for i in 0..n {
            xw_hat[[i, l]] *= responses[[i, src]];
        }
    }
    Ok(u.dot(&xw_hat))
}

/// Adds `coeff_row (x) term` into `acc`, broadcasting a single-channel
/// coefficient row across all output channels.
fn accumulate(acc: &mut Array2<f64>, term: &Array2<f64>, model: &FilterModel, k: usize) {
    let channels = acc.ncols();
    for l in 0..channels {
        let src = if model.channels() == 1 { 0 } else { l };
        let c = model.coeffs()[[k, src]];
        if c == 0.0 {
            continue;
        }
        for i in 0..acc.nrows() {
            acc[[i, l]] += c * term[[i, l]];
        }
    }
}

/// The matrix-polynomial route: evaluates the same filter as
/// [`apply_filter`] but as polynomials of the operator itself, using
/// iterated matrix products against `X W` (never explicit matrix
/// powers). Kept as an equivalence oracle and timing baseline.
pub fn apply_filter_matrix_form(
    operator: &Array2<f64>,
    model: &FilterModel,
    features: &Array2<f64>,
    weights: &Array2<f64>,
) -> Result<Array2<f64>> {
    let (r, c) = operator.dim();
    if r != c {
        return Err(Error::DimensionMismatch(format!(
            "operator must be square, got {r}x{c}"
        )));
    }
    let channels = check_feature_dims(r, features, weights, model.channels())?;
    let xw = features.dot(weights);
    let order = model.order();
    let mut acc = Array2::<f64>::zeros((r, channels));

    match model.basis() {
        BasisKind::GprMonomial => {
            // powers of I - H
            let base = Array2::<f64>::eye(r) - operator;
            let mut term = xw;
            accumulate(&mut acc, &term, model, 0);
            for k in 1..=order {
                term = base.dot(&term);
                accumulate(&mut acc, &term, model, k);
            }
        }
        BasisKind::Bernstein => {
            let scale = 0.5f64.powi(order as i32);
            let two_minus = {
                let mut m = operator.clone() * -1.0;
                for i in 0..r {
                    m[[i, i]] += 2.0;
                }
                m
            };
            // H^k (XW) for every k, then (2I - H)^(K-k) applied on top.
            let mut h_pow = Vec::with_capacity(order + 1);
            h_pow.push(xw);
            for _ in 1..=order {
                let next = operator.dot(h_pow.last().unwrap());
                h_pow.push(next);
            }
            for (k, base_term) in h_pow.into_iter().enumerate() {
                let mut term = base_term;
                for _ in 0..(order - k) {
                    term = two_minus.dot(&term);
                }
                let weight = scale * binomial(order, k);
                let mut weighted = term;
                weighted.mapv_inplace(|v| v * weight);
                accumulate(&mut acc, &weighted, model, k);
            }
        }
        BasisKind::Jacobi { a, b } => {
            let rec = JacobiRecurrence { a, b };
            let base = Array2::<f64>::eye(r) - operator;
            let mut p_prev = xw;
            accumulate(&mut acc, &p_prev, model, 0);
            if order >= 1 {
                let mut p_curr =
                    &base.dot(&p_prev) * (0.5 * a + 0.5 * b + 1.0) + &p_prev * (0.5 * a - 0.5 * b);
                accumulate(&mut acc, &p_curr, model, 1);
                for k in 2..=order {
                    let (ak, bk, ck) = rec.step(k);
                    let p_next = &base.dot(&p_curr) * ak + &p_curr * bk - &p_prev * ck;
                    accumulate(&mut acc, &p_next, model, k);
                    p_prev = p_curr;
                    p_curr = p_next;
                }
            }
        }
    }
    Ok(acc)
}
