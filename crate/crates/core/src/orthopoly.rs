//! Univariate orthonormal polynomial families.
//!
//! A family is described by its three-term recurrence
//!
//! ```text
//! y phi_n(y) = sqrt(b_n) phi_{n-1}(y) + a_n phi_n(y) + sqrt(b_{n+1}) phi_{n+1}(y)
//! ```
//!
//! with `phi_0 = 1` (every supported density is a probability density). Besides
//! evaluation this module provides Gauss rules from the Jacobi matrix, the ratio
//! `r_N = phi_N / phi_{N-1}` and its level sets, which are the unit-condition
//! one-dimensional designs for the weighted space.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability densities with a closed-form recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    /// Uniform on `[-1, 1]`, density `1/2`. Orthonormal Legendre polynomials.
    Uniform,
    /// Gaussian with density `exp(-y^2) / sqrt(pi)`. Orthonormal Hermite polynomials.
    Gaussian,
}

impl Density {
    pub fn name(self) -> &'static str {
        match self {
            Density::Uniform => "uniform",
            Density::Gaussian => "gaussian",
        }
    }

    /// Whether `y` lies in the support of the density.
    pub fn in_support(self, y: f64) -> bool {
        match self {
            Density::Uniform => (-1.0..=1.0).contains(&y),
            Density::Gaussian => y.is_finite(),
        }
    }
}

impl std::str::FromStr for Density {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" | "legendre" => Ok(Density::Uniform),
            "gaussian" | "hermite" => Ok(Density::Gaussian),
            other => Err(Error::UnsupportedDensity(other.to_string())),
        }
    }
}

impl std::fmt::Display for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Recurrence coefficients for `phi_0 .. phi_{n_max}`.
///
/// `a[n]` holds `a_n` for `n = 0..=n_max`; `b[n - 1]` holds `b_n` for `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTable {
    density: Density,
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Value of `r_N(y)`, or a marker that `y` sits on a pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    Pole,
}

impl Ratio {
    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Finite(v) => Some(v),
            Ratio::Pole => None,
        }
    }
}

/// Nodes (ascending) and positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const POLE_RTOL: f64 = 1e-12;
const SEARCH_LIMIT: f64 = 1e8;

/// Builds the recurrence table of `density` valid through degree `n_max`.
pub fn recurrence_coefficients(density: Density, n_max: usize) -> Result<RecurrenceTable> {
    if n_max < 1 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let a = vec![0.0; n_max + 1];
    let b = (1..=n_max)
        .map(|n| {
            let n = n as f64;
            match density {
                Density::Uniform => n * n / (4.0 * n * n - 1.0),
                Density::Gaussian => n / 2.0,
            }
        })
        .collect();
    Ok(RecurrenceTable { density, a, b })
}

impl RecurrenceTable {
    pub fn new(density: Density, n_max: usize) -> Result<Self> {
        recurrence_coefficients(density, n_max)
    }

    pub fn density(&self) -> Density {
        self.density
    }

    pub fn n_max(&self) -> usize {
        self.a.len() - 1
    }

    /// `a_n`, `n <= n_max`.
    pub fn a(&self, n: usize) -> f64 {
        self.a[n]
    }

    /// `b_n`, `1 <= n <= n_max`.
    pub fn b(&self, n: usize) -> f64 {
        self.b[n - 1]
    }

    fn check_degree(&self, degree: usize) -> Result<()> {
        if degree > self.n_max() {
            Err(Error::DegreeOutOfRange {
                degree,
                n_max: self.n_max(),
            })
        } else {
            Ok(())
        }
    }

    /// `phi_n(y)` by the forward recurrence.
    pub fn eval_phi(&self, n: usize, y: f64) -> Result<f64> {
        self.check_degree(n)?;
        let mut prev = 0.0;
        let mut cur = 1.0;
        for k in 0..n {
            let next = self.step(k, y, cur, prev);
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }

    /// `phi_0(y) .. phi_n(y)` into `out` (cleared first).
    pub fn eval_all_into(&self, n: usize, y: f64, out: &mut Vec<f64>) -> Result<()> {
        self.check_degree(n)?;
        out.clear();
        out.push(1.0);
        let mut prev = 0.0;
        for k in 0..n {
            let cur = out[k];
            let next = self.step(k, y, cur, prev);
            prev = cur;
            out.push(next);
        }
        Ok(())
    }

    pub fn eval_all(&self, n: usize, y: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n + 1);
        self.eval_all_into(n, y, &mut out)?;
        Ok(out)
    }

    // phi_{k+1} from phi_k and phi_{k-1}
    #[inline]
    fn step(&self, k: usize, y: f64, cur: f64, prev: f64) -> f64 {
        let back = if k == 0 { 0.0 } else { self.b(k).sqrt() * prev };
        ((y - self.a[k]) * cur - back) / self.b(k + 1).sqrt()
    }

    /// The `n x n` Jacobi matrix (diagonal `a_0..a_{n-1}`, off-diagonal `sqrt(b_1..b_{n-1})`).
    pub fn jacobi_matrix(&self, n: usize) -> Result<DMatrix<f64>> {
        if n == 0 {
            return Err(Error::InvalidArgument("Jacobi matrix needs n >= 1".into()));
        }
        self.check_degree(n.saturating_sub(1))?;
        let mut j = DMatrix::zeros(n, n);
        for i in 0..n {
            j[(i, i)] = self.a[i];
            if i + 1 < n {
                let off = self.b(i + 1).sqrt();
                j[(i, i + 1)] = off;
                j[(i + 1, i)] = off;
            }
        }
        Ok(j)
    }

    /// `n`-point Gauss rule for the table's density (Golub-Welsch).
    pub fn gauss_rule(&self, n: usize) -> Result<GaussRule> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "Gauss rule needs at least one node".into(),
            ));
        }
        self.check_degree(n)?;
        let (nodes, vectors) = sorted_eigen(self.jacobi_matrix(n)?)?;
        let weights = (0..n).map(|k| vectors[k][0] * vectors[k][0]).collect();
        Ok(GaussRule { nodes, weights })
    }

    /// `r_N(y) = phi_N(y) / phi_{N-1}(y)`.
    ///
    /// `y` is treated as a pole when `|phi_{N-1}(y)| < 1e-12 max(1, |phi_N(y)|)`.
    pub fn r_ratio(&self, n: usize, y: f64) -> Result<Ratio> {
        if n == 0 {
            return Err(Error::InvalidArgument("r_N needs N >= 1".into()));
        }
        self.check_degree(n)?;
        let phi = self.eval_all(n, y)?;
        Ok(ratio_from(phi[n], phi[n - 1]))
    }

    /// The level set `r_N^{-1}(r_N(y))`: `N` distinct sorted points containing `y`.
    ///
    /// Computed as the eigenvalues of the Jacobi matrix whose last diagonal entry is
    /// shifted by `r_N(y) sqrt(b_N)`. Each eigenvalue is checked against the bracket
    /// between consecutive poles of `r_N`; any root that falls outside its bracket
    /// is recomputed by bisection.
    pub fn level_set(&self, n: usize, y: f64) -> Result<Vec<f64>> {
        let c = self.level_value(n, y)?;
        let mut jac = self.jacobi_matrix(n)?;
        jac[(n - 1, n - 1)] += c * self.b(n).sqrt();
        let (mut roots, _) = sorted_eigen(jac)?;

        let poles = self.poles(n)?;
        for (i, root) in roots.iter_mut().enumerate() {
            let lo = if i == 0 {
                f64::NEG_INFINITY
            } else {
                poles[i - 1]
            };
            let hi = poles.get(i).copied().unwrap_or(f64::INFINITY);
            if !(*root > lo && *root < hi) {
                *root = self.bisect_branch(n, c, lo, hi)?;
            }
        }
        Ok(roots)
    }

    /// Level set computed purely by bisection of `r_N - c` between consecutive poles.
    pub fn level_set_bisection(&self, n: usize, y: f64) -> Result<Vec<f64>> {
        let c = self.level_value(n, y)?;
        let poles = self.poles(n)?;
        (0..n)
            .map(|i| {
                let lo = if i == 0 {
                    f64::NEG_INFINITY
                } else {
                    poles[i - 1]
                };
                let hi = poles.get(i).copied().unwrap_or(f64::INFINITY);
                self.bisect_branch(n, c, lo, hi)
            })
            .collect()
    }

    fn level_value(&self, n: usize, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite start point {y}"
            )));
        }
        match self.r_ratio(n, y)? {
            Ratio::Finite(c) => Ok(c),
            Ratio::Pole => Err(Error::PoleStart(y)),
        }
    }

    // roots of phi_{N-1}, ascending
    fn poles(&self, n: usize) -> Result<Vec<f64>> {
        if n <= 1 {
            Ok(Vec::new())
        } else {
            Ok(self.gauss_rule(n - 1)?.nodes)
        }
    }

    // r_N is increasing on (lo, hi) from -inf to +inf; find r_N(z) = c there.
    fn bisect_branch(&self, n: usize, c: f64, lo: f64, hi: f64) -> Result<f64> {
        let below = |z: f64| -> Result<bool> {
            let phi = self.eval_all(n, z)?;
            let (num, den) = (phi[n], phi[n - 1]);
            // sign of r_N(z) - c without dividing
            Ok((num - c * den) * den.signum() < 0.0)
        };
        let anchor = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo + 1.0,
            (false, true) => hi - 1.0,
            (false, false) => 0.0,
        };
        let mut left = if lo.is_finite() { lo } else { anchor };
        let mut right = if hi.is_finite() { hi } else { anchor };
        let mut step = 1.0;
        while !lo.is_finite() && !below(left)? {
            left = anchor - step;
            step *= 2.0;
            if step > SEARCH_LIMIT {
                return Err(Error::EigenFailure(
                    "level set branch search diverged".into(),
                ));
            }
        }
        step = 1.0;
        while !hi.is_finite() && below(right)? {
            right = anchor + step;
            step *= 2.0;
            if step > SEARCH_LIMIT {
                return Err(Error::EigenFailure(
                    "level set branch search diverged".into(),
                ));
            }
        }
        for _ in 0..2000 {
            let mid = 0.5 * (left + right);
            if mid <= left || mid >= right {
                break;
            }
            if below(mid)? {
                left = mid;
            } else {
                right = mid;
            }
        }
        Ok(0.5 * (left + right))
    }
}

fn ratio_from(num: f64, den: f64) -> Ratio {
    if den.abs() < POLE_RTOL * num.abs().max(1.0) {
        Ratio::Pole
    } else {
        Ratio::Finite(num / den)
    }
}

// Eigenvalues ascending with matching eigenvectors.
fn sorted_eigen(m: DMatrix<f64>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure("no convergence".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    Ok((values, vectors))
}

/// Per-degree errors `|sum_z phi_m(z) / K(z) - delta_{m,0}|` for `m = 0..=max_degree`.
pub fn quadrature_exactness_report(
    table: &RecurrenceTable,
    nodes: &[f64],
    k_values: &[f64],
    max_degree: usize,
) -> Result<Vec<f64>> {
    if nodes.len() != k_values.len() {
        return Err(Error::LengthMismatch {
            expected: nodes.len(),
            got: k_values.len(),
        });
    }
    let mut sums = vec![0.0; max_degree + 1];
    let mut phi = Vec::with_capacity(max_degree + 1);
    for (&z, &k) in nodes.iter().zip(k_values) {
        table.eval_all_into(max_degree, z, &mut phi)?;
        for (s, p) in sums.iter_mut().zip(&phi) {
            *s += p / k;
        }
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(m, s)| (s - if m == 0 { 1.0 } else { 0.0 }).abs())
        .collect())
}

/// Christoffel sum `K(z) = sum_{j<n} phi_j(z)^2` for the univariate set `{0..n-1}`.
pub fn christoffel_1d(table: &RecurrenceTable, n: usize, z: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("empty index set".into()));
    }
    Ok(table.eval_all(n - 1, z)?.iter().map(|p| p * p).sum())
}
