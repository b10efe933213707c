//! Discrete least-squares fits on a product basis.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{ProductBasis, Space};
use crate::design::sample_iid;
use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};

/// Default number of validation samples.
pub const DEFAULT_VALIDATION_SAMPLES: usize = 1000;

/// Relative singular value cutoff below which a design matrix is rejected.
const RANK_RTOL: f64 = 1e-13;

/// Expansion `sum_n coefficients[n] psi_{alpha(n)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub basis: ProductBasis,
    pub coefficients: Vec<f64>,
}

impl Surrogate {
    pub fn new(basis: ProductBasis, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::LengthMismatch {
                expected: basis.len(),
                got: coefficients.len(),
            });
        }
        Ok(Self {
            basis,
            coefficients,
        })
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        let row = self.basis.eval_row(y, Space::P)?;
        Ok(row.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum())
    }

    pub fn eval_many(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        points.par_iter().map(|y| self.eval(y)).collect()
    }
}

/// Weighted fit: minimizes `|V(A, Q) v - W f|` with `W = diag(1/sqrt(K(y_m)))`.
pub fn solve_weighted(
    basis: &ProductBasis,
    points: &[Vec<f64>],
    values: &[f64],
) -> Result<Surrogate> {
    check_inputs(basis, points, values)?;
    let n = basis.len();
    let mut data = vec![0.0; points.len() * n];
    let mut rhs = Vec::with_capacity(points.len());
    for ((row, y), &f) in data.chunks_mut(n).zip(points).zip(values) {
        basis.eval_row_into(y, Space::P, row)?;
        let k: f64 = row.iter().map(|v| v * v).sum();
        let w = 1.0 / k.sqrt();
        row.iter_mut().for_each(|v| *v *= w);
        rhs.push(w * f);
    }
    let v = DMatrix::from_row_slice(points.len(), n, &data);
    let coefficients = qr_least_squares(v, DVector::from_vec(rhs))?;
    Surrogate::new(basis.clone(), coefficients)
}

/// Unweighted fit: minimizes `|V(A, P) v - f|`.
pub fn solve_unweighted(
    basis: &ProductBasis,
    points: &[Vec<f64>],
    values: &[f64],
) -> Result<Surrogate> {
    check_inputs(basis, points, values)?;
    let v = basis.vandermonde(points, Space::P)?.entries;
    let coefficients = qr_least_squares(v, DVector::from_column_slice(values))?;
    Surrogate::new(basis.clone(), coefficients)
}

fn check_inputs(basis: &ProductBasis, points: &[Vec<f64>], values: &[f64]) -> Result<()> {
    if points.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    if points.len() < basis.len() {
        return Err(Error::InvalidArgument(format!(
            "{} samples cannot determine {} coefficients",
            points.len(),
            basis.len()
        )));
    }
    Ok(())
}

/// Householder QR solve of an overdetermined full-rank system.
fn qr_least_squares(v: DMatrix<f64>, rhs: DVector<f64>) -> Result<Vec<f64>> {
    let n = v.ncols();
    let sv = v.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smin > RANK_RTOL * smax) {
        return Err(Error::SingularLeastSquares { sigma_min: smin });
    }
    let qr = v.qr();
    let mut b = rhs;
    qr.q_tr_mul(&mut b);
    let r = qr.r();
    let top = b.rows(0, n).into_owned();
    let x = r
        .solve_upper_triangular(&top)
        .ok_or(Error::SingularLeastSquares { sigma_min: smin })?;
    Ok(x.iter().copied().collect())
}

/// Root-mean-square error of `surrogate` against `target` on `n_val` iid draws
/// from the basis density, using the validation stream of `seed`.
pub fn validation_error<F>(surrogate: &Surrogate, target: F, n_val: usize, seed: u64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n_val == 0 {
        return Err(Error::InvalidArgument(
            "need at least one validation sample".into(),
        ));
    }
    let points = validation_points(&surrogate.basis, n_val, seed);
    let values: Vec<f64> = points.par_iter().map(|y| target(y)).collect();
    validation_error_on(surrogate, &points, &values)
}

/// Validation draws used by [`validation_error`].
pub fn validation_points(basis: &ProductBasis, n_val: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, &[stream::VALIDATION]);
    sample_iid(&basis.densities(), n_val, &mut rng)
}

/// RMS error against precomputed target values.
pub fn validation_error_on(
    surrogate: &Surrogate,
    points: &[Vec<f64>],
    values: &[f64],
) -> Result<f64> {
    if points.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one validation sample".into(),
        ));
    }
    let fitted = surrogate.eval_many(points)?;
    let sq: f64 = fitted
        .iter()
        .zip(values)
        .map(|(s, f)| (f - s) * (f - s))
        .sum();
    Ok((sq / points.len() as f64).sqrt())
}
