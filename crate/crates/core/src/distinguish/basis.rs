//! Basis optimality of the occupation-correlation difference matrix D:
//! Σ|diag(U†DU)| is maximised when U diagonalises D.

use nalgebra::{DMatrix as Matrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_D_DIMENSION: usize = 64;

/// Hermitian matrix of occupation-correlation differences.
#[derive(Debug, Clone, PartialEq)]
pub struct DMatrix {
    entries: Matrix<Complex64>,
}

impl DMatrix {
    pub fn new(entries: Matrix<Complex64>) -> Result<Self> {
        let n = entries.nrows();
        if n != entries.ncols() {
            return Err(Error::domain("D matrix must be square"));
        }
        if n == 0 || n > MAX_D_DIMENSION {
            return Err(Error::domain(format!("D dimension {n} outside 1..={MAX_D_DIMENSION}")));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("D matrix entries must be finite"));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let asymmetry = (&entries - entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asymmetry > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::domain(format!("D matrix is not Hermitian (max |D − D†| = {asymmetry:e})")));
        }
        Ok(Self { entries })
    }

    pub fn from_real(rows: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * rows {
            return Err(Error::domain("data length does not match a square matrix"));
        }
        Self::new(Matrix::from_row_iterator(rows, rows, data.iter().map(|&x| Complex64::from(x))))
    }

    /// Random Hermitian matrix (GUE-like, entries of order `scale`).
    pub fn random(dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        let g = ginibre(dim, rng);
        Self::new((&g + g.adjoint()) * Complex64::from(0.5 * scale))
    }

    pub fn entries(&self) -> &Matrix<Complex64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        self.entries.clone().symmetric_eigenvalues()
    }

    /// Σ|λ_i|.
    pub fn eigen_abs_sum(&self) -> f64 {
        self.eigenvalues().iter().map(|l| l.abs()).sum()
    }

    /// Σ|(U†DU)_ii|.
    pub fn diagonal_abs_sum_in(&self, u: &Matrix<Complex64>) -> f64 {
        let rotated = u.adjoint() * &self.entries * u;
        rotated.diagonal().iter().map(|z| z.re.abs()).sum()
    }

    pub fn diagonal_abs_sum(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re.abs()).sum()
    }
}

fn ginibre(dim: usize, rng: &mut ChaCha8Rng) -> Matrix<Complex64> {
    Matrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of R's diagonal moved into Q.
pub fn haar_unitary(dim: usize, rng: &mut ChaCha8Rng) -> Matrix<Complex64> {
    let qr = ginibre(dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::from(1.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisOptimalityReport {
    /// Σ|eigenvalues(D)|.
    pub eigen_sum: f64,
    /// Σ|diag(D)| in the given basis.
    pub original_diagonal_sum: f64,
    /// Largest Σ|diag(U†DU)| over the random trials.
    pub best_trial_sum: f64,
    pub trials: usize,
    /// Trials whose diagonal sum exceeded the eigen-sum beyond round-off.
    pub violations: usize,
}

/// Compare the eigenbasis against `trials` Haar-random bases. Trial t draws
/// its unitary from ChaCha8 seeded with `seed` on stream t, so the result
/// does not depend on thread scheduling.
pub fn basis_optimality_check(d: &DMatrix, trials: usize, seed: u64) -> BasisOptimalityReport {
    let eigen_sum = d.eigen_abs_sum();
    let tolerance = 1e-10 * eigen_sum.max(f64::MIN_POSITIVE);
    let sums: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            d.diagonal_abs_sum_in(&haar_unitary(d.dim(), &mut rng))
        })
        .collect();
    BasisOptimalityReport {
        eigen_sum,
        original_diagonal_sum: d.diagonal_abs_sum(),
        best_trial_sum: sums.iter().copied().fold(0.0, f64::max),
        trials,
        violations: sums.iter().filter(|&&s| s > eigen_sum + tolerance).count(),
    }
}
