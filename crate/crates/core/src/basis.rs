//! Tensor-product orthonormal bases, the Christoffel sum `K`, Vandermonde-like
//! matrices for the polynomial space `P` and the weighted space `Q`, and the
//! determinant modulus / condition number diagnostics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndexSet;
use crate::orthopoly::{Density, RecurrenceTable};

/// Which function space the rows of a design matrix come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    /// Orthonormal polynomials `psi_alpha`.
    P,
    /// Weighted polynomials `psi_alpha / sqrt(K)`; every row has unit norm.
    Q,
}

/// Singular values below this are treated as zero by [`condition_number`].
pub const SIGMA_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductBasis {
    tables: Vec<RecurrenceTable>,
    set: MultiIndexSet,
}

impl ProductBasis {
    pub fn new(tables: Vec<RecurrenceTable>, set: MultiIndexSet) -> Result<Self> {
        if tables.len() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: tables.len(),
            });
        }
        for (table, &deg) in tables.iter().zip(&set.max_degree_per_dim()) {
            if deg > table.n_max() {
                return Err(Error::DegreeOutOfRange {
                    degree: deg,
                    n_max: table.n_max(),
                });
            }
        }
        Ok(Self { tables, set })
    }

    /// One table per coordinate, each just deep enough for `set`.
    pub fn with_densities(densities: &[Density], set: MultiIndexSet) -> Result<Self> {
        if densities.len() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: densities.len(),
            });
        }
        let tables = densities
            .iter()
            .zip(set.max_degree_per_dim())
            .map(|(&d, deg)| RecurrenceTable::new(d, deg.max(1)))
            .collect::<Result<_>>()?;
        Self::new(tables, set)
    }

    /// Same density in every coordinate.
    pub fn isotropic(density: Density, set: MultiIndexSet) -> Result<Self> {
        let densities = vec![density; set.dim()];
        Self::with_densities(&densities, set)
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn set(&self) -> &MultiIndexSet {
        &self.set
    }

    pub fn tables(&self) -> &[RecurrenceTable] {
        &self.tables
    }

    pub fn densities(&self) -> Vec<Density> {
        self.tables.iter().map(|t| t.density()).collect()
    }

    /// Same coordinate families over a different index set.
    pub fn with_set(&self, set: MultiIndexSet) -> Result<Self> {
        Self::with_densities(&self.densities(), set)
    }

    /// Writes the row for `y` into `out` (length `N`).
    pub fn eval_row_into(&self, y: &[f64], space: Space, out: &mut [f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        if out.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: out.len(),
            });
        }
        let per_dim: Vec<Vec<f64>> = self
            .tables
            .iter()
            .zip(y)
            .zip(self.set.max_degree_per_dim())
            .map(|((t, &yj), deg)| t.eval_all(deg, yj))
            .collect::<Result<_>>()?;
        for (slot, alpha) in out.iter_mut().zip(self.set.iter()) {
            *slot = alpha
                .iter()
                .zip(&per_dim)
                .map(|(&a, vals)| vals[a as usize])
                .product();
        }
        if space == Space::Q {
            let k: f64 = out.iter().map(|v| v * v).sum();
            let scale = 1.0 / k.sqrt();
            out.iter_mut().for_each(|v| *v *= scale);
        }
        Ok(())
    }

    pub fn eval_row(&self, y: &[f64], space: Space) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.eval_row_into(y, space, &mut out)?;
        Ok(out)
    }

    /// `K(y) = sum_alpha psi_alpha(y)^2`.
    pub fn christoffel(&self, y: &[f64]) -> Result<f64> {
        Ok(self.eval_row(y, Space::P)?.iter().map(|v| v * v).sum())
    }

    /// Row-major `|points| x N` buffer of basis rows.
    pub fn rows(&self, points: &[Vec<f64>], space: Space) -> Result<Vec<f64>> {
        let n = self.len();
        let mut data = vec![0.0; points.len() * n];
        for (row, y) in data.chunks_mut(n.max(1)).zip(points) {
            self.eval_row_into(y, space, row)?;
        }
        Ok(data)
    }

    pub fn vandermonde(&self, points: &[Vec<f64>], space: Space) -> Result<DesignMatrix> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("point set must be nonempty".into()));
        }
        let data = self.rows(points, space)?;
        Ok(DesignMatrix {
            entries: DMatrix::from_row_slice(points.len(), self.len(), &data),
            space,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub entries: DMatrix<f64>,
    pub space: Space,
}

impl DesignMatrix {
    pub fn point_count(&self) -> usize {
        self.entries.nrows()
    }

    pub fn basis_size(&self) -> usize {
        self.entries.ncols()
    }

    pub fn det_modulus(&self) -> Result<f64> {
        det_modulus(&self.entries)
    }

    pub fn condition_number(&self) -> f64 {
        condition_number(&self.entries)
    }
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

/// `sqrt(|det(V V^T)|)` for an `m x N` matrix with `m <= N`, as the product of
/// singular values.
pub fn det_modulus(v: &DMatrix<f64>) -> Result<f64> {
    if v.nrows() > v.ncols() {
        return Err(Error::InvalidArgument(format!(
            "determinant modulus needs m <= N, got {} x {}",
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(singular_values(v).iter().product())
}

/// `sigma_max / sigma_min` over the `min(m, N)` singular values; `+inf` when the
/// smallest is below [`SIGMA_FLOOR`].
pub fn condition_number(v: &DMatrix<f64>) -> f64 {
    let sv = singular_values(v);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if sv.is_empty() || min < SIGMA_FLOOR {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::total_degree;
    use crate::orthopoly::{Density, RecurrenceTable};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize) -> ProductBasis {
        ProductBasis::isotropic(Density::Uniform, total_degree(1, n - 1).unwrap()).unwrap()
    }

    #[test]
    fn eval_row_examples() {
        let b = ProductBasis::isotropic(Density::Uniform, total_degree(3, 0).unwrap()).unwrap();
        assert_eq!(b.eval_row(&[0.3, -0.2, 0.9], Space::P).unwrap(), vec![1.0]);

        let b = line(2);
        let q = b.eval_row(&[1.0], Space::Q).unwrap();
        assert_abs_diff_eq!(q[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q[1], 3f64.sqrt() / 2.0, epsilon = 1e-15);

        let b = ProductBasis::isotropic(Density::Uniform, total_degree(2, 1).unwrap()).unwrap();
        assert_eq!(
            b.eval_row(&[0.0, 0.0], Space::P).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        assert!(b.eval_row(&[0.0], Space::P).is_err());
    }

    #[test]
    fn christoffel_examples() {
        let b = line(1);
        assert_eq!(b.christoffel(&[0.77]).unwrap(), 1.0);
        let b = line(2);
        assert_abs_diff_eq!(b.christoffel(&[1.0]).unwrap(), 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            b.christoffel(&[-1.0 / 3.0]).unwrap(),
            4.0 / 3.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn level_set_q_matrix_is_orthogonal() {
        let b = line(2);
        let v = b
            .vandermonde(&[vec![-1.0 / 3.0], vec![1.0]], Space::Q)
            .unwrap();
        let s3 = 3f64.sqrt() / 2.0;
        assert_abs_diff_eq!(v.entries[(0, 0)], s3, epsilon = 1e-15);
        assert_abs_diff_eq!(v.entries[(0, 1)], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v.entries[(1, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(v.det_modulus().unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v.condition_number(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn constant_basis_gives_ones_column() {
        let b = line(1);
        let v = b
            .vandermonde(&[vec![0.1], vec![-0.5], vec![0.9]], Space::P)
            .unwrap();
        assert!(v.entries.iter().all(|&x| x == 1.0));
        assert!(b.vandermonde(&[], Space::P).is_err());
    }

    #[test]
    fn det_and_condition_examples() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert_abs_diff_eq!(det_modulus(&id).unwrap(), 1.0, epsilon = 1e-15);
        let row = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        assert_abs_diff_eq!(det_modulus(&row).unwrap(), 5.0, epsilon = 1e-14);
        assert!(det_modulus(&DMatrix::<f64>::zeros(3, 2)).is_err());
        let d = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(condition_number(&d), 2.0, epsilon = 1e-14);
        assert_eq!(
            condition_number(&DMatrix::<f64>::zeros(2, 2)),
            f64::INFINITY
        );
    }

    #[test]
    fn basis_requires_enough_table_depth() {
        let set = total_degree(1, 4).unwrap();
        let shallow = vec![RecurrenceTable::new(Density::Uniform, 2).unwrap()];
        assert!(ProductBasis::new(shallow, set.clone()).is_err());
        let two = vec![RecurrenceTable::new(Density::Uniform, 4).unwrap(); 2];
        assert!(ProductBasis::new(two, set).is_err());
    }

    #[test]
    fn gauss_tensor_orthonormality() {
        for density in [Density::Uniform, Density::Gaussian] {
            for d in 1..=3 {
                let k = if d == 3 { 3 } else { 5 };
                let basis = ProductBasis::isotropic(density, total_degree(d, k).unwrap()).unwrap();
                let rule = RecurrenceTable::new(density, k + 2)
                    .unwrap()
                    .gauss_rule(k + 1)
                    .unwrap();
                let q = rule.nodes.len();
                let n = basis.len();
                let mut gram = vec![0.0; n * n];
                for code in 0..q.pow(d as u32) {
                    let mut c = code;
                    let mut y = vec![0.0; d];
                    let mut w = 1.0;
                    for yj in y.iter_mut() {
                        *yj = rule.nodes[c % q];
                        w *= rule.weights[c % q];
                        c /= q;
                    }
                    let row = basis.eval_row(&y, Space::P).unwrap();
                    for i in 0..n {
                        for j in 0..n {
                            gram[i * n + j] += w * row[i] * row[j];
                        }
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        let e = if i == j { 1.0 } else { 0.0 };
                        assert!((gram[i * n + j] - e).abs() < 1e-10);
                    }
                }
            }
        }
    }

    fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        m.qr().q()
    }

    #[test]
    fn det_invariant_under_basis_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let basis = ProductBasis::isotropic(Density::Uniform, total_degree(2, 3).unwrap()).unwrap();
        for _ in 0..20 {
            let pts: Vec<Vec<f64>> = (0..basis.len())
                .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let v = basis.vandermonde(&pts, Space::P).unwrap().entries;
            let u = random_orthogonal(basis.len(), &mut rng);
            let a = det_modulus(&v).unwrap();
            let b = det_modulus(&(&v * &u)).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.max(1e-300));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn q_rows_unit_norm(y0 in -3.0f64..3.0, y1 in -3.0f64..3.0, k in 0usize..7, gaussian in any::<bool>()) {
                let density = if gaussian { Density::Gaussian } else { Density::Uniform };
                let b = ProductBasis::isotropic(density, total_degree(2, k).unwrap()).unwrap();
                let row = b.eval_row(&[y0, y1], Space::Q).unwrap();
                let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                prop_assert!((norm - 1.0).abs() < 1e-12);
                prop_assert!(b.christoffel(&[y0, y1]).unwrap() >= 1.0);
            }

            #[test]
            fn hadamard_bound(seed in any::<u64>(), k in 1usize..5) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let b = ProductBasis::isotropic(Density::Uniform, total_degree(2, k).unwrap()).unwrap();
                let pts: Vec<Vec<f64>> = (0..b.len())
                    .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                    .collect();
                let v = b.vandermonde(&pts, Space::Q).unwrap();
                prop_assert!(v.det_modulus().unwrap() <= 1.0 + 1e-12);
            }
        }
    }
}
