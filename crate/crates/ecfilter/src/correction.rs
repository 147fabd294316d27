//! Eigenvalue correction: mixes the original spectrum with an equidistant
//! grid over `[0, 2]` so that repeated eigenvalues become distinct while
//! the frequency ordering is preserved.

use crate::error::{Error, Result};
use crate::spectral::EigenSystem;
use ndarray::{Array1, Array2};

/// A corrected spectrum `mu = beta * lambda + (1 - beta) * upsilon`.
///
/// Carries a copy of the eigenvalues it was derived from so that
/// [`corrected_operator`] can refuse a mismatched eigensystem.
#[derive(Debug, Clone)]
pub struct CorrectedSpectrum {
    beta: f64,
    upsilon: Array1<f64>,
    mu: Array1<f64>,
    source_lambda: Array1<f64>,
}

/// Monotonicity report for a corrected spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    pub strictly_increasing: bool,
    /// Smallest consecutive gap; infinite for sequences shorter than 2.
    pub min_gap: f64,
}

impl CorrectedSpectrum {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The equidistant grid `upsilon[i] = 2i / (n - 1)`.
    pub fn upsilon(&self) -> &Array1<f64> {
        &self.upsilon
    }

    /// Corrected eigenvalues.
    pub fn mu(&self) -> &Array1<f64> {
        &self.mu
    }

    /// The original eigenvalues this spectrum was derived from.
    pub fn source_lambda(&self) -> &Array1<f64> {
        &self.source_lambda
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// CSV with header `index,lambda,upsilon,mu`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,lambda,upsilon,mu\n");
        for i in 0..self.n() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                i, self.source_lambda[i], self.upsilon[i], self.mu[i]
            ));
        }
        out
    }
}

/// The equidistant grid over `[0, 2]`: first element 0, last element 2,
/// common difference `2 / (n - 1)`.
pub fn equidistant(n: usize) -> Result<Array1<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "equidistant grid needs n >= 2, got {n}"
        )));
    }
    let denom = (n - 1) as f64;
    Ok(Array1::from_iter((0..n).map(|i| 2.0 * i as f64 / denom)))
}

/// Mixes original and equidistant eigenvalues with weight `beta`.
///
/// `beta = 1` reproduces the original eigenvalues exactly; `beta = 0`
/// yields the equidistant grid exactly.
pub fn correct(eig: &EigenSystem, beta: f64) -> Result<CorrectedSpectrum> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in [0, 1], got {beta}"
        )));
    }
    let lambda = eig.eigenvalues();
    let upsilon = equidistant(lambda.len())?;
    let mu = Array1::from_iter(
        lambda
            .iter()
            .zip(upsilon.iter())
            .map(|(&l, &u)| beta * l + (1.0 - beta) * u),
    );
    Ok(CorrectedSpectrum {
        beta,
        upsilon,
        mu,
        source_lambda: lambda.clone(),
    })
}

/// Checks that every consecutive gap is strictly positive and reports the
/// smallest one.
pub fn verify_strictly_increasing(values: &[f64]) -> MonotonicityReport {
    if values.len() < 2 {
        return MonotonicityReport {
            strictly_increasing: true,
            min_gap: f64::INFINITY,
        };
    }
    let mut min_gap = f64::INFINITY;
    for w in values.windows(2) {
        min_gap = min_gap.min(w[1] - w[0]);
    }
    MonotonicityReport {
        strictly_increasing: min_gap > 0.0,
        min_gap,
    }
}

/// The corrected operator `H = U diag(mu) U^T`, equal to
/// `beta * L + (1 - beta) * U diag(upsilon) U^T`.
///
/// Fails with [`Error::SourceMismatch`] if `spec` was not derived from
/// `eig`'s eigenvalues.
pub fn corrected_operator(eig: &EigenSystem, spec: &CorrectedSpectrum) -> Result<Array2<f64>> {
    if spec.source_lambda != *eig.eigenvalues() {
        return Err(Error::SourceMismatch);
    }
    let u = eig.eigenvectors();
    let scaled = u * spec.mu(); // scales column j by mu[j]
    Ok(scaled.dot(&u.t()))
}
