//! Multi-index sets: total degree, hyperbolic cross, and enrichment.
//!
//! Sets are kept in graded reverse lexicographic order: by total degree first,
//! and within a degree `alpha` precedes `beta` when the last nonzero entry of
//! `alpha - beta` is negative. For `d = 2`, degree 2 this gives
//! `(2,0), (1,1), (0,2)`.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type MultiIndex = Vec<u32>;

/// Upper bound on the number of indices any constructor will produce.
pub const MAX_SET_SIZE: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiIndexSet {
    dim: usize,
    indices: Vec<MultiIndex>,
}

/// Index-set family used by studies and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexRule {
    #[serde(rename = "TD")]
    TotalDegree,
    #[serde(rename = "HC")]
    HyperbolicCross,
}

impl IndexRule {
    pub fn build(self, dim: usize, degree: usize) -> Result<MultiIndexSet> {
        match self {
            IndexRule::TotalDegree => total_degree(dim, degree),
            IndexRule::HyperbolicCross => hyperbolic_cross(dim, degree),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IndexRule::TotalDegree => "TD",
            IndexRule::HyperbolicCross => "HC",
        }
    }
}

impl std::str::FromStr for IndexRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TD" | "TOTAL_DEGREE" => Ok(IndexRule::TotalDegree),
            "HC" | "HYPERBOLIC_CROSS" => Ok(IndexRule::HyperbolicCross),
            other => Err(Error::InvalidArgument(format!(
                "unknown index rule {other}"
            ))),
        }
    }
}

/// Graded reverse lexicographic comparison.
pub fn grevlex_cmp(a: &[u32], b: &[u32]) -> Ordering {
    let da: u64 = a.iter().map(|&x| x as u64).sum();
    let db: u64 = b.iter().map(|&x| x as u64).sum();
    da.cmp(&db).then_with(|| {
        for (x, y) in a.iter().zip(b).rev() {
            if x != y {
                // last nonzero entry of a - b negative => a first
                return if x < y {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
            }
        }
        Ordering::Equal
    })
}

fn degree_of(alpha: &[u32]) -> usize {
    alpha.iter().map(|&x| x as usize).sum()
}

/// `binomial(n, k)` or `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

impl MultiIndexSet {
    /// Builds a set from explicit indices, keeping the given order.
    pub fn from_indices(dim: usize, indices: Vec<MultiIndex>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        if indices.is_empty() {
            return Err(Error::InvalidArgument("index set must be nonempty".into()));
        }
        let mut seen = HashSet::with_capacity(indices.len());
        for alpha in &indices {
            if alpha.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: alpha.len(),
                });
            }
            if !seen.insert(alpha.as_slice()) {
                return Err(Error::InvalidArgument(format!("duplicate index {alpha:?}")));
            }
        }
        Ok(Self { dim, indices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.indices.iter()
    }

    pub fn max_total_degree(&self) -> usize {
        self.indices.iter().map(|a| degree_of(a)).max().unwrap_or(0)
    }

    /// Largest entry along each coordinate.
    pub fn max_degree_per_dim(&self) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for alpha in &self.indices {
            for (m, &a) in out.iter_mut().zip(alpha) {
                *m = (*m).max(a as usize);
            }
        }
        out
    }

    pub fn contains(&self, alpha: &[u32]) -> bool {
        self.indices.iter().any(|a| a.as_slice() == alpha)
    }

    /// Position of the zero multi-index, if present.
    pub fn zero_position(&self) -> Option<usize> {
        self.indices.iter().position(|a| a.iter().all(|&x| x == 0))
    }

    /// Returns the first index whose backward neighbour is missing, if any.
    pub fn downward_closure_violation(&self) -> Option<MultiIndex> {
        let set: HashSet<&[u32]> = self.indices.iter().map(|a| a.as_slice()).collect();
        let mut probe = vec![0u32; self.dim];
        for alpha in &self.indices {
            for j in 0..self.dim {
                if alpha[j] == 0 {
                    continue;
                }
                probe.copy_from_slice(alpha);
                probe[j] -= 1;
                if !set.contains(probe.as_slice()) {
                    return Some(probe.clone());
                }
            }
        }
        None
    }

    pub fn is_downward_closed(&self) -> bool {
        self.downward_closure_violation().is_none()
    }
}

/// All `alpha` with `|alpha| <= degree`, in grevlex order.
pub fn total_degree(dim: usize, degree: usize) -> Result<MultiIndexSet> {
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    match binomial(degree + dim, dim) {
        Some(n) if n <= MAX_SET_SIZE => {}
        _ => {
            return Err(Error::SizeOverflow {
                limit: MAX_SET_SIZE,
            })
        }
    }
    let mut indices = Vec::new();
    let mut cur = vec![0u32; dim];
    fill_total_degree(&mut cur, 0, degree as u32, &mut indices);
    indices.sort_by(|a, b| grevlex_cmp(a, b));
    Ok(MultiIndexSet { dim, indices })
}

fn fill_total_degree(cur: &mut Vec<u32>, pos: usize, budget: u32, out: &mut Vec<MultiIndex>) {
    if pos == cur.len() {
        out.push(cur.clone());
        return;
    }
    for v in 0..=budget {
        cur[pos] = v;
        fill_total_degree(cur, pos + 1, budget - v, out);
    }
    cur[pos] = 0;
}

/// All `alpha` with `prod (alpha_j + 1) <= degree + 1`, in grevlex order.
pub fn hyperbolic_cross(dim: usize, degree: usize) -> Result<MultiIndexSet> {
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 1".into(),
        ));
    }
    let mut indices = Vec::new();
    let mut cur = vec![0u32; dim];
    fill_hyperbolic(&mut cur, 0, degree as u64 + 1, &mut indices)?;
    indices.sort_by(|a, b| grevlex_cmp(a, b));
    Ok(MultiIndexSet { dim, indices })
}

fn fill_hyperbolic(
    cur: &mut Vec<u32>,
    pos: usize,
    budget: u64,
    out: &mut Vec<MultiIndex>,
) -> Result<()> {
    if pos == cur.len() {
        if out.len() >= MAX_SET_SIZE {
            return Err(Error::SizeOverflow {
                limit: MAX_SET_SIZE,
            });
        }
        out.push(cur.clone());
        return Ok(());
    }
    let mut v = 0u64;
    while v < budget {
        cur[pos] = v as u32;
        fill_hyperbolic(cur, pos + 1, budget / (v + 1), out)?;
        v += 1;
    }
    cur[pos] = 0;
    Ok(())
}

/// Default enrichment size `max(1, floor(0.05 N))`.
pub fn default_enrichment(n: usize) -> usize {
    (n / 20).max(1)
}

/// An enriched index set together with the total degree used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct Enrichment {
    pub set: MultiIndexSet,
    /// The degree `n` whose total-degree set supplied the appended indices.
    pub degree: usize,
}

/// Appends `extra` indices taken in grevlex order from `TD_n \ set`.
///
/// `n` is the largest total degree in `set`, raised by one when `set` already
/// equals `TD_n`, and raised further while `TD_n \ set` has fewer than `extra`
/// elements.
pub fn enrich(set: &MultiIndexSet, extra: usize) -> Result<Enrichment> {
    if extra == 0 {
        return Err(Error::InvalidArgument(
            "enrichment size must be at least 1".into(),
        ));
    }
    if let Some(missing) = set.downward_closure_violation() {
        return Err(Error::NotDownwardClosed { missing });
    }
    let dim = set.dim();
    let mut n = set.max_total_degree();
    if binomial(n + dim, dim) == Some(set.len()) {
        n += 1;
    }
    let members: HashSet<&[u32]> = set.iter().map(|a| a.as_slice()).collect();
    loop {
        let td = total_degree(dim, n)?;
        let candidates: Vec<&MultiIndex> = td
            .iter()
            .filter(|a| !members.contains(a.as_slice()))
            .collect();
        if candidates.len() >= extra {
            let mut indices = set.indices().to_vec();
            indices.extend(candidates.into_iter().take(extra).cloned());
            return Ok(Enrichment {
                set: MultiIndexSet { dim, indices },
                degree: n,
            });
        }
        n += 1;
    }
}

/// Degree hint a set would receive from [`enrich`] without appending anything.
pub fn enrichment_degree(set: &MultiIndexSet) -> usize {
    let n = set.max_total_degree();
    if binomial(n + set.dim(), set.dim()) == Some(set.len()) {
        n + 1
    } else {
        n
    }
}
