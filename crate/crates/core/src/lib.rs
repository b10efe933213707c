//! Christoffel-weighted approximate Fekete points for polynomial least squares.
//!
//! The crate builds orthonormal product bases over downward-closed index sets,
//! selects sample designs by greedy pivoted row selection on candidate sets,
//! and fits least-squares surrogates on them.

// `!(x > t)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod design;
pub mod elliptic;
pub mod error;
pub mod lsq;
pub mod multiindex;
pub mod orthopoly;
pub mod rng;
pub mod study;

pub use basis::{DesignMatrix, ProductBasis, Space};
pub use design::{
    afp_select, candidate_set, cfp_select, monte_carlo_design, CandidateSet, DesignResult,
};
pub use error::{Error, Result};
pub use lsq::{solve_unweighted, solve_weighted, Surrogate};
pub use multiindex::{IndexRule, MultiIndexSet};
pub use orthopoly::{Density, RecurrenceTable};
