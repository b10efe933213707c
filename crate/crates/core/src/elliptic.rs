//! One-dimensional diffusion benchmark
//!
//! ```text
//! -(kappa(x, y) u'(x))' = 2 on (0, 1),  u(0) = u(1) = 0,
//! kappa(x, y) = 1 + sigma sum_k cos(2 pi k x) y_k / (k^2 pi^2)
//! ```
//!
//! solved by a conservative second-order finite-difference scheme; the quantity
//! of interest is `u(0.5, y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_GRID_POINTS: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticConfig {
    pub dim: usize,
    pub sigma: f64,
    /// Number of grid nodes including both boundaries; odd so that x = 0.5 is a node.
    pub grid_points: usize,
}

impl EllipticConfig {
    pub fn new(dim: usize, sigma: f64, grid_points: usize) -> Result<Self> {
        let cfg = Self {
            dim,
            sigma,
            grid_points,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_defaults(dim: usize) -> Result<Self> {
        Self::new(dim, DEFAULT_SIGMA, DEFAULT_GRID_POINTS)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument(
                "parameter dimension must be at least 1".into(),
            ));
        }
        if self.grid_points < 3 || self.grid_points.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "grid_points must be odd and >= 3, got {}",
                self.grid_points
            )));
        }
        if !(self.sigma.abs() * self.amplitude_sum() < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma = {} does not keep the diffusivity positive on [-1,1]^{}",
                self.sigma, self.dim
            )));
        }
        Ok(())
    }

    fn amplitude_sum(&self) -> f64 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        (1..=self.dim).map(|k| 1.0 / ((k * k) as f64 * pi2)).sum()
    }

    /// `kappa(x, y)`.
    pub fn diffusivity(&self, x: f64, y: &[f64]) -> f64 {
        let pi = std::f64::consts::PI;
        1.0 + self.sigma
            * y.iter()
                .enumerate()
                .map(|(i, &yk)| {
                    let k = (i + 1) as f64;
                    (2.0 * pi * k * x).cos() * yk / (k * k * pi * pi)
                })
                .sum::<f64>()
    }

    /// `u(0.5, y)`.
    pub fn solve_bvp(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        let u = self.solve_profile(y)?;
        Ok(u[(self.grid_points - 1) / 2])
    }

    /// Full nodal solution including boundary zeros.
    pub fn solve_profile(&self, y: &[f64]) -> Result<Vec<f64>> {
        let g = self.grid_points;
        let h = 1.0 / (g - 1) as f64;
        let interior = g - 2;
        // kappa at cell midpoints x_{i+1/2}, i = 0..g-2
        let kmid: Vec<f64> = (0..g - 1)
            .map(|i| self.diffusivity((i as f64 + 0.5) * h, y))
            .collect();
        let rhs = 2.0 * h * h;

        // Thomas algorithm on rows i = 1..=interior
        let mut c_prime = vec![0.0; interior];
        let mut d_prime = vec![0.0; interior];
        for r in 0..interior {
            let left = kmid[r];
            let right = kmid[r + 1];
            let diag = left + right;
            let lower = if r == 0 { 0.0 } else { -left };
            let upper = -right;
            let denom = diag - lower * if r == 0 { 0.0 } else { c_prime[r - 1] };
            if denom.abs() < f64::MIN_POSITIVE || !denom.is_finite() {
                return Err(Error::SingularSystem(r + 1));
            }
            c_prime[r] = upper / denom;
            let prev = if r == 0 { 0.0 } else { d_prime[r - 1] };
            d_prime[r] = (rhs - lower * prev) / denom;
        }
        let mut u = vec![0.0; g];
        for r in (0..interior).rev() {
            let next = if r + 1 < interior { u[r + 2] } else { 0.0 };
            u[r + 1] = d_prime[r] - c_prime[r] * next;
        }
        Ok(u)
    }
}
