//! Candidate sets and sample selection.
//!
//! CFP selects rows of `V(candidates, Q)` by greedy volume maximization, which
//! is what a column-pivoted QR of `V^T` does; AFP is the same procedure on the
//! unweighted space `P`. [`greedy_select_reference`] and [`global_select_oracle`]
//! evaluate the determinant or condition-number objective literally and serve
//! as brute-force oracles on small instances.
//!
//! All ties between candidates whose objectives agree to a relative
//! [`TIE_RTOL`] are broken towards the lowest candidate index. In `Q` every row
//! has unit norm, so the first CFP pivot is always the first (deduplicated)
//! candidate.

use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{condition_number, det_modulus, ProductBasis, Space};
use crate::error::{Error, Result};
use crate::orthopoly::Density;
use crate::rng::{stream, stream_rng};

/// Relative tolerance under which two objective values count as tied.
pub const TIE_RTOL: f64 = 1e-10;
/// A residual norm below this fraction of the largest row norm ends the factorization.
pub const RANK_RTOL: f64 = 1e-12;
/// Largest candidate set accepted by [`greedy_select_reference`].
pub const REFERENCE_MAX_CANDIDATES: usize = 1000;
/// Largest number of subsets [`global_select_oracle`] will enumerate.
pub const GLOBAL_MAX_SUBSETS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// iid draws from the density itself.
    Iid,
    /// Tensor-product Chebyshev (arcsine) draws on `[-1, 1]^d`.
    Chebyshev,
    /// Draws from `(1 - |s|^2 / (2n))^{d/2}` on the ball of radius `sqrt(2n)`.
    Ball,
    /// Supplied by the caller.
    Given,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub points: Vec<Vec<f64>>,
    pub tags: Vec<Ensemble>,
    pub seed: u64,
}

impl CandidateSet {
    pub fn from_points(points: Vec<Vec<f64>>) -> Self {
        let tags = vec![Ensemble::Given; points.len()];
        Self {
            points,
            tags,
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices of first occurrences, in order; exact duplicates are dropped.
    pub fn unique_indices(&self) -> Vec<usize> {
        let mut seen = HashSet::with_capacity(self.points.len());
        (0..self.points.len())
            .filter(|&i| {
                // +0.0 and -0.0 are the same point
                let key: Vec<u64> = self.points[i]
                    .iter()
                    .map(|&x| (x + 0.0).to_bits())
                    .collect();
                seen.insert(key)
            })
            .collect()
    }
}

/// One draw from the density.
pub fn sample_density<R: Rng + ?Sized>(density: Density, rng: &mut R) -> f64 {
    match density {
        Density::Uniform => rng.random_range(-1.0..=1.0),
        // exp(-y^2) has variance 1/2
        Density::Gaussian => Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2)
            .expect("valid normal")
            .sample(rng),
    }
}

/// `count` iid points from the tensor-product density.
pub fn sample_iid<R: Rng + ?Sized>(
    densities: &[Density],
    count: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| densities.iter().map(|&d| sample_density(d, rng)).collect())
        .collect()
}

/// Arcsine draw `cos(pi U)`.
pub fn sample_chebyshev<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| (std::f64::consts::PI * rng.random::<f64>()).cos())
        .collect()
}

/// Rejection sample from `(1 - |s|^2/(2n))^{d/2}` on the radius `sqrt(2n)` ball,
/// with a uniform-on-ball proposal.
pub fn sample_ball<R: Rng + ?Sized>(dim: usize, degree: usize, rng: &mut R) -> Vec<f64> {
    let r2max = 2.0 * degree as f64;
    let radius = r2max.sqrt();
    loop {
        let mut dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
        dir.iter_mut().for_each(|x| *x *= r / norm);
        let accept = (1.0 - r * r / r2max).max(0.0).powf(dim as f64 / 2.0);
        if rng.random::<f64>() < accept {
            return dir;
        }
    }
}

/// `m_tilde / 2` iid draws from the density followed by `m_tilde / 2` draws from
/// the degree-asymptotic ensemble (Chebyshev for uniform, ball for Gaussian).
///
/// The two halves use independent streams derived from `seed`.
pub fn candidate_set(
    densities: &[Density],
    m_tilde: usize,
    degree_hint: usize,
    seed: u64,
) -> Result<CandidateSet> {
    if densities.is_empty() {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    if m_tilde < 2 || !m_tilde.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "candidate count must be even and at least 2, got {m_tilde}"
        )));
    }
    let family = densities[0];
    if densities.iter().any(|&d| d != family) {
        return Err(Error::UnsupportedDensity(
            "mixed families have no asymptotic candidate ensemble".into(),
        ));
    }
    if family == Density::Gaussian && degree_hint == 0 {
        return Err(Error::InvalidArgument(
            "ball ensemble needs degree hint >= 1".into(),
        ));
    }
    let half = m_tilde / 2;
    let dim = densities.len();
    let mut iid_rng = stream_rng(seed, &[stream::CANDIDATES, stream::IID]);
    let mut asym_rng = stream_rng(seed, &[stream::CANDIDATES, stream::ASYMPTOTIC]);

    let mut points = sample_iid(densities, half, &mut iid_rng);
    let mut tags = vec![Ensemble::Iid; half];
    let (tag, asym): (Ensemble, Vec<Vec<f64>>) = match family {
        Density::Uniform => (
            Ensemble::Chebyshev,
            (0..half)
                .map(|_| sample_chebyshev(dim, &mut asym_rng))
                .collect(),
        ),
        Density::Gaussian => (
            Ensemble::Ball,
            (0..half)
                .map(|_| sample_ball(dim, degree_hint, &mut asym_rng))
                .collect(),
        ),
    };
    points.extend(asym);
    tags.extend(std::iter::repeat_n(tag, half));
    Ok(CandidateSet { points, tags, seed })
}

/// Selected design and its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub space: Space,
    pub points: Vec<Vec<f64>>,
    /// Indices into the candidate set, in selection order.
    pub pivot_order: Vec<usize>,
    /// Objective after each step: determinant modulus of the rows chosen so far
    /// (condition number for condition-driven oracles).
    pub objective_trace: Vec<f64>,
    /// `|det V(A, space)|` when the design is square.
    pub det_modulus: Option<f64>,
    /// `kappa(V(A, space))` over the selection basis.
    pub condition_number: f64,
}

impl DesignResult {
    fn finish(
        candidates: &CandidateSet,
        basis: &ProductBasis,
        space: Space,
        pivots: Vec<usize>,
        trace: Vec<f64>,
    ) -> Result<Self> {
        let points: Vec<Vec<f64>> = pivots
            .iter()
            .map(|&i| candidates.points[i].clone())
            .collect();
        let v = basis.vandermonde(&points, space)?;
        let det = if points.len() == basis.len() {
            Some(v.det_modulus()?)
        } else {
            None
        };
        Ok(Self {
            space,
            points,
            pivot_order: pivots,
            objective_trace: trace,
            det_modulus: det,
            condition_number: v.condition_number(),
        })
    }
}

/// Objective for the brute-force selectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Maximize the determinant modulus.
    Det,
    /// Minimize the condition number.
    Cond,
}

fn check_selection(candidates: &CandidateSet, basis: &ProductBasis, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "must select at least one point".into(),
        ));
    }
    if m > basis.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot select {m} points with a {}-dimensional basis",
            basis.len()
        )));
    }
    if m > candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot select {m} points from {} candidates",
            candidates.len()
        )));
    }
    Ok(())
}

/// Greedy row selection on a row-major `rows x cols` matrix: at each step take
/// the row with the largest residual norm after projecting out the rows already
/// taken (equivalently, the next column pivot of a pivoted QR of the transpose).
///
/// Returns the selected row positions and the running product of pivot norms.
pub fn pivoted_row_selection(
    data: &[f64],
    cols: usize,
    m: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    if cols == 0 || !data.len().is_multiple_of(cols) {
        return Err(Error::InvalidArgument(
            "matrix buffer does not match column count".into(),
        ));
    }
    let rows = data.len() / cols;
    if m > rows.min(cols) {
        return Err(Error::RankDeficient {
            achieved: rows.min(cols),
            requested: m,
        });
    }
    let mut resid = data.to_vec();
    let mut norm2: Vec<f64> = resid.chunks(cols).map(|r| dot(r, r)).collect();
    // reference value for the downdate accuracy guard
    let mut anchor = norm2.clone();
    let mut active = vec![true; rows];
    let scale = norm2.iter().copied().fold(0.0, f64::max).sqrt();

    let mut basis_vecs: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut pivots = Vec::with_capacity(m);
    let mut trace = Vec::with_capacity(m);
    let mut volume = 1.0;

    for step in 0..m {
        let best = (0..rows)
            .filter(|&i| active[i])
            .map(|i| norm2[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if !(best.sqrt() > RANK_RTOL * scale) {
            return Err(Error::RankDeficient {
                achieved: step,
                requested: m,
            });
        }
        let cutoff = best.sqrt() * (1.0 - TIE_RTOL);
        let pivot = (0..rows)
            .find(|&i| active[i] && norm2[i].sqrt() >= cutoff)
            .expect("maximum is attained");
        active[pivot] = false;

        let mut q = resid[pivot * cols..(pivot + 1) * cols].to_vec();
        for prev in &basis_vecs {
            let c = dot(&q, prev);
            axpy(-c, prev, &mut q);
        }
        let norm = dot(&q, &q).sqrt();
        q.iter_mut().for_each(|x| *x /= norm);
        volume *= norm;
        pivots.push(pivot);
        trace.push(volume);

        if step + 1 < m {
            let update = |(i, row): (usize, &mut [f64]), n2: &mut f64, a: &mut f64| {
                if !active[i] {
                    return;
                }
                let c = dot(row, &q);
                axpy(-c, &q, row);
                *n2 -= c * c;
                if *n2 < 1e-4 * *a {
                    *n2 = dot(row, row);
                    *a = *n2;
                }
            };
            if rows * cols >= 1 << 16 {
                resid
                    .par_chunks_mut(cols)
                    .enumerate()
                    .zip(norm2.par_iter_mut().zip(anchor.par_iter_mut()))
                    .for_each(|(r, (n2, a))| update(r, n2, a));
            } else {
                resid
                    .chunks_mut(cols)
                    .enumerate()
                    .zip(norm2.iter_mut().zip(anchor.iter_mut()))
                    .for_each(|(r, (n2, a))| update(r, n2, a));
            }
        }
        basis_vecs.push(q);
    }
    Ok((pivots, trace))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn pivoted_select(
    candidates: &CandidateSet,
    basis: &ProductBasis,
    m: usize,
    space: Space,
) -> Result<DesignResult> {
    check_selection(candidates, basis, m)?;
    let unique = candidates.unique_indices();
    let n = basis.len();
    let mut data = vec![0.0; unique.len() * n];
    let fill = |(row, &idx): (&mut [f64], &usize)| {
        basis.eval_row_into(&candidates.points[idx], space, row)
    };
    if unique.len() * n >= 1 << 16 {
        data.par_chunks_mut(n)
            .zip(unique.par_iter())
            .try_for_each(fill)?;
    } else {
        data.chunks_mut(n).zip(unique.iter()).try_for_each(fill)?;
    }
    let (local, trace) = pivoted_row_selection(&data, n, m)?;
    let pivots = local.into_iter().map(|i| unique[i]).collect();
    DesignResult::finish(candidates, basis, space, pivots, trace)
}

/// Christoffel-weighted approximate Fekete points: greedy determinant
/// maximization over `V(candidates, Q)`.
pub fn cfp_select(
    candidates: &CandidateSet,
    basis: &ProductBasis,
    m: usize,
) -> Result<DesignResult> {
    pivoted_select(candidates, basis, m, Space::Q)
}

/// Unweighted approximate Fekete points over `V(candidates, P)`.
pub fn afp_select(
    candidates: &CandidateSet,
    basis: &ProductBasis,
    m: usize,
) -> Result<DesignResult> {
    pivoted_select(candidates, basis, m, Space::P)
}

/// Monte Carlo baseline: `m` iid draws from the density.
pub fn monte_carlo_design(densities: &[Density], m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, &[stream::MONTE_CARLO]);
    sample_iid(densities, m, &mut rng)
}

fn objective_value(rows: &DMatrix<f64>, objective: Objective) -> Result<f64> {
    match objective {
        Objective::Det => det_modulus(rows),
        Objective::Cond => Ok(condition_number(rows)),
    }
}

// true when `value` beats `best` by more than the tie tolerance
fn improves(value: f64, best: f64, objective: Objective) -> bool {
    match objective {
        Objective::Det => value > best * (1.0 + TIE_RTOL),
        Objective::Cond => value < best * (1.0 - TIE_RTOL),
    }
}

/// Literal greedy: at each step evaluate the objective for every remaining
/// candidate appended to the current selection.
pub fn greedy_select_reference(
    candidates: &CandidateSet,
    basis: &ProductBasis,
    m: usize,
    space: Space,
    objective: Objective,
) -> Result<DesignResult> {
    if candidates.len() > REFERENCE_MAX_CANDIDATES {
        return Err(Error::InstanceTooLarge(format!(
            "{} candidates (limit {REFERENCE_MAX_CANDIDATES})",
            candidates.len()
        )));
    }
    check_selection(candidates, basis, m)?;
    let unique = candidates.unique_indices();
    let n = basis.len();
    let rows: Vec<Vec<f64>> = unique
        .iter()
        .map(|&i| basis.eval_row(&candidates.points[i], space))
        .collect::<Result<_>>()?;
    let mut taken = vec![false; unique.len()];
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    let mut trace = Vec::with_capacity(m);

    for step in 0..m {
        let mut best: Option<(usize, f64)> = None;
        for (local, row) in rows.iter().enumerate() {
            if taken[local] {
                continue;
            }
            let mut mat = DMatrix::zeros(step + 1, n);
            for (r, &c) in chosen.iter().enumerate() {
                mat.row_mut(r).copy_from_slice(&rows[c]);
            }
            mat.row_mut(step).copy_from_slice(row);
            let value = objective_value(&mat, objective)?;
            match best {
                None => best = Some((local, value)),
                Some((_, b)) if improves(value, b, objective) => best = Some((local, value)),
                _ => {}
            }
        }
        let (local, value) = best.expect("at least one candidate remains");
        if objective == Objective::Det && !(value > 0.0) {
            return Err(Error::RankDeficient {
                achieved: step,
                requested: m,
            });
        }
        taken[local] = true;
        chosen.push(local);
        trace.push(value);
    }
    let pivots = chosen.into_iter().map(|l| unique[l]).collect();
    DesignResult::finish(candidates, basis, space, pivots, trace)
}

/// Exhaustive optimum over all size-`n` subsets of the (deduplicated) candidates.
///
/// The earliest subset in lexicographic order wins ties.
pub fn global_select_oracle(
    candidates: &CandidateSet,
    basis: &ProductBasis,
    n: usize,
    space: Space,
    objective: Objective,
) -> Result<DesignResult> {
    check_selection(candidates, basis, n)?;
    let unique = candidates.unique_indices();
    match crate::multiindex::binomial(unique.len(), n) {
        Some(c) if c <= GLOBAL_MAX_SUBSETS => {}
        _ => {
            return Err(Error::InstanceTooLarge(format!(
                "binomial({}, {n}) subsets exceeds {GLOBAL_MAX_SUBSETS}",
                unique.len()
            )))
        }
    }
    if n > unique.len() {
        return Err(Error::InvalidArgument(
            "fewer distinct candidates than requested".into(),
        ));
    }
    let cols = basis.len();
    let rows: Vec<Vec<f64>> = unique
        .iter()
        .map(|&i| basis.eval_row(&candidates.points[i], space))
        .collect::<Result<_>>()?;

    let mut combo: Vec<usize> = (0..n).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut mat = DMatrix::zeros(n, cols);
    loop {
        for (r, &c) in combo.iter().enumerate() {
            mat.row_mut(r).copy_from_slice(&rows[c]);
        }
        let value = objective_value(&mat, objective)?;
        match &best {
            Some((_, b)) if !improves(value, *b, objective) => {}
            _ => best = Some((combo.clone(), value)),
        }
        // next combination in lexicographic order
        let mut i = n;
        while i > 0 && combo[i - 1] == unique.len() - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        combo[i - 1] += 1;
        for j in i..n {
            combo[j] = combo[j - 1] + 1;
        }
    }
    let (subset, _) = best.expect("at least one subset");
    let trace = (1..=n)
        .map(|k| {
            let mut m = DMatrix::zeros(k, cols);
            for (r, &c) in subset[..k].iter().enumerate() {
                m.row_mut(r).copy_from_slice(&rows[c]);
            }
            objective_value(&m, objective)
        })
        .collect::<Result<_>>()?;
    let pivots = subset.into_iter().map(|l| unique[l]).collect();
    DesignResult::finish(candidates, basis, space, pivots, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::total_degree;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize) -> ProductBasis {
        ProductBasis::isotropic(Density::Uniform, total_degree(1, n - 1).unwrap()).unwrap()
    }

    fn pts(v: &[f64]) -> CandidateSet {
        CandidateSet::from_points(v.iter().map(|&x| vec![x]).collect())
    }

    #[test]
    fn cfp_hand_example() {
        let c = pts(&[-1.0, -1.0 / 3.0, 0.2, 1.0]);
        let r = cfp_select(&c, &line(2), 2).unwrap();
        assert_eq!(r.pivot_order, vec![0, 2]);
        // 1 - (psi(-1) . psi(0.2))^2 with dot = 0.4 / (2 sqrt(1.12))
        let dot = 0.4 / (2.0 * 1.12f64.sqrt());
        assert_abs_diff_eq!(
            r.objective_trace[1],
            (1.0 - dot * dot).sqrt(),
            epsilon = 1e-14
        );
        assert!((r.objective_trace[1] - 0.982).abs() < 5e-4);
    }

    #[test]
    fn cfp_recovers_level_set_when_started_inside() {
        let c = pts(&[-1.0 / 3.0, -1.0, 0.2, 1.0]);
        let r = cfp_select(&c, &line(2), 2).unwrap();
        assert_eq!(r.pivot_order, vec![0, 3]);
        assert_abs_diff_eq!(r.det_modulus.unwrap(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(r.condition_number, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn single_point_selection() {
        let c = pts(&[0.4, -0.7, 0.1]);
        let r = cfp_select(&c, &line(3), 1).unwrap();
        assert_eq!(r.pivot_order, vec![0]);
        assert_abs_diff_eq!(r.objective_trace[0], 1.0, epsilon = 1e-14);
        let r = greedy_select_reference(&c, &line(3), 1, Space::Q, Objective::Det).unwrap();
        assert_eq!(r.pivot_order, vec![0]);
        let r = greedy_select_reference(&c, &line(3), 1, Space::Q, Objective::Cond).unwrap();
        assert_eq!(r.pivot_order, vec![0]);
    }

    #[test]
    fn afp_examples() {
        let c = pts(&[-1.0, 0.0, 0.5, 1.0]);
        let r = afp_select(&c, &line(2), 2).unwrap();
        assert_eq!(r.pivot_order, vec![0, 3]);
        let r = afp_select(&c, &line(1), 1).unwrap();
        assert_eq!(r.pivot_order, vec![0]);
    }

    #[test]
    fn afp_square_design_is_locally_optimal_at_last_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let basis = line(6);
        let c = CandidateSet::from_points(
            (0..300)
                .map(|_| vec![rng.random_range(-1.0..1.0)])
                .collect(),
        );
        let r = afp_select(&c, &basis, 6).unwrap();
        let det = r.det_modulus.unwrap();
        let mut swapped = r.points.clone();
        for p in &c.points {
            swapped[5] = p.clone();
            let v = basis.vandermonde(&swapped, Space::P).unwrap();
            assert!(v.det_modulus().unwrap() <= det * (1.0 + 1e-10));
        }
    }

    #[test]
    fn global_oracle_examples() {
        let c = pts(&[-1.0, -1.0 / 3.0, 0.2, 1.0]);
        let r = global_select_oracle(&c, &line(2), 2, Space::Q, Objective::Det).unwrap();
        assert_eq!(r.pivot_order, vec![1, 3]);
        assert_abs_diff_eq!(r.det_modulus.unwrap(), 1.0, epsilon = 1e-13);
        let r = global_select_oracle(&c, &line(2), 2, Space::Q, Objective::Cond).unwrap();
        assert_eq!(r.pivot_order, vec![1, 3]);
        assert_abs_diff_eq!(r.condition_number, 1.0, epsilon = 1e-13);
        let r = global_select_oracle(&c, &line(1), 1, Space::Q, Objective::Det).unwrap();
        assert_eq!(r.pivot_order, vec![0]);
    }

    #[test]
    fn size_guards() {
        let big = CandidateSet::from_points((0..1001).map(|i| vec![i as f64 / 1001.0]).collect());
        assert!(matches!(
            greedy_select_reference(&big, &line(2), 2, Space::Q, Objective::Det),
            Err(Error::InstanceTooLarge(_))
        ));
        let mid = CandidateSet::from_points((0..200).map(|i| vec![i as f64 / 200.0]).collect());
        assert!(matches!(
            global_select_oracle(&mid, &line(5), 5, Space::Q, Objective::Det),
            Err(Error::InstanceTooLarge(_))
        ));
    }

    #[test]
    fn rank_deficiency_reports_rank() {
        // three candidates but only two distinct points
        let c = pts(&[0.5, 0.5, -0.5]);
        assert_eq!(
            cfp_select(&c, &line(3), 3),
            Err(Error::RankDeficient {
                achieved: 2,
                requested: 3
            })
        );
        assert!(cfp_select(&c, &line(2), 3).is_err());
    }

    #[test]
    fn duplicates_are_skipped() {
        let c = pts(&[0.3, 0.3, -0.0, 0.0, 0.9]);
        assert_eq!(c.unique_indices(), vec![0, 2, 4]);
        let r = cfp_select(&c, &line(3), 3).unwrap();
        let mut sorted = r.pivot_order.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 2, 4]);
    }

    #[test]
    fn candidate_set_split_and_support() {
        let c = candidate_set(&[Density::Uniform; 2], 10_000, 3, 42).unwrap();
        assert_eq!(c.len(), 10_000);
        assert_eq!(c.tags.iter().filter(|&&t| t == Ensemble::Iid).count(), 5000);
        assert_eq!(
            c.tags.iter().filter(|&&t| t == Ensemble::Chebyshev).count(),
            5000
        );
        assert!(c.points.iter().flatten().all(|y| (-1.0..=1.0).contains(y)));

        let g = candidate_set(&[Density::Gaussian], 4000, 2, 1).unwrap();
        for (p, t) in g.points.iter().zip(&g.tags) {
            if *t == Ensemble::Ball {
                assert!(p[0].abs() <= 2.0);
            }
        }
        assert!(candidate_set(&[Density::Uniform], 7, 1, 0).is_err());
        assert!(matches!(
            candidate_set(&[Density::Uniform, Density::Gaussian], 10, 1, 0),
            Err(Error::UnsupportedDensity(_))
        ));
        assert_eq!(
            candidate_set(&[Density::Gaussian; 3], 100, 4, 5).unwrap(),
            candidate_set(&[Density::Gaussian; 3], 100, 4, 5).unwrap()
        );
    }

    fn ks_distance(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        sample.sort_by(f64::total_cmp);
        let n = sample.len() as f64;
        sample
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn chebyshev_half_follows_arcsine_law() {
        let c = candidate_set(&[Density::Uniform], 40_000, 1, 3).unwrap();
        let cheb: Vec<f64> = c
            .points
            .iter()
            .zip(&c.tags)
            .filter(|(_, t)| **t == Ensemble::Chebyshev)
            .map(|(p, _)| p[0])
            .collect();
        let d = ks_distance(cheb, |y| {
            1.0 - y.clamp(-1.0, 1.0).acos() / std::f64::consts::PI
        });
        assert!(d < 0.02, "KS distance {d}");
    }

    #[test]
    fn ball_rejection_matches_inverse_cdf_radius() {
        for (dim, degree) in [(1usize, 2usize), (2, 3), (4, 5)] {
            let r2 = 2.0 * degree as f64;
            let rmax = r2.sqrt();
            // radial density r^{d-1} (1 - r^2/R^2)^{d/2}, tabulated CDF
            let grid = 4000;
            let h = rmax / grid as f64;
            let dens = |r: f64| {
                r.powi(dim as i32 - 1) * (1.0 - r * r / r2).max(0.0).powf(dim as f64 / 2.0)
            };
            let mut cdf = vec![0.0; grid + 1];
            for i in 0..grid {
                let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
                cdf[i + 1] = cdf[i] + h / 6.0 * (dens(a) + 4.0 * dens(0.5 * (a + b)) + dens(b));
            }
            let total = cdf[grid];
            cdf.iter_mut().for_each(|c| *c /= total);
            // inverse-CDF sampler
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let inv: Vec<f64> = (0..20_000)
                .map(|_| {
                    let u: f64 = rng.random();
                    let i = cdf.partition_point(|&c| c < u).clamp(1, grid);
                    let t = (u - cdf[i - 1]) / (cdf[i] - cdf[i - 1]);
                    (i as f64 - 1.0 + t) * h
                })
                .collect();
            let rej: Vec<f64> = (0..20_000)
                .map(|_| {
                    sample_ball(dim, degree, &mut rng)
                        .iter()
                        .map(|x| x * x)
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            // two-sample KS
            let mut a = inv;
            let mut b = rej;
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
            while i < a.len() && j < b.len() {
                if a[i] <= b[j] {
                    i += 1;
                } else {
                    j += 1;
                }
                d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
            }
            assert!(d < 0.02, "dim {dim}: KS {d}");
            assert!(b.iter().all(|&r| r <= rmax));
        }
    }

    #[test]
    fn q_trace_bounded_by_one() {
        let basis =
            ProductBasis::isotropic(Density::Gaussian, total_degree(2, 4).unwrap()).unwrap();
        let c = candidate_set(&[Density::Gaussian; 2], 2000, 5, 8).unwrap();
        let r = cfp_select(&c, &basis, basis.len()).unwrap();
        assert!(r.objective_trace.iter().all(|&v| v <= 1.0 + 1e-12));
        assert_eq!(r, cfp_select(&c, &basis, basis.len()).unwrap());
    }
}
