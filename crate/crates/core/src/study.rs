//! Batch studies and the one-dimensional verification report.
//!
//! Studies emit long-format CSV (`method,degree,N,M,stat_name,value`) preceded by
//! `#` comment lines echoing the full configuration, so a file on its own is
//! enough to reproduce it. Trials run in parallel on per-trial derived seeds and
//! are gathered in trial order, so output bytes do not depend on scheduling.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{ProductBasis, Space};
use crate::design::{
    afp_select, candidate_set, cfp_select, monte_carlo_design, sample_density, CandidateSet,
    DesignResult,
};
use crate::elliptic::{EllipticConfig, DEFAULT_GRID_POINTS, DEFAULT_SIGMA};
use crate::error::{Error, Result};
use crate::lsq::{
    solve_unweighted, solve_weighted, validation_error_on, validation_points, Surrogate,
};
use crate::multiindex::{enrich, enrichment_degree, IndexRule, MultiIndexSet};
use crate::orthopoly::{christoffel_1d, quadrature_exactness_report, Density, RecurrenceTable};
use crate::rng::{derive_seed, stream, stream_rng};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CFP")]
    Cfp,
    #[serde(rename = "AFP")]
    Afp,
    #[serde(rename = "MC")]
    Mc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cfp => "CFP",
            Method::Afp => "AFP",
            Method::Mc => "MC",
        }
    }

    /// Space whose Vandermonde matrix the method's least-squares system uses.
    pub fn space(self) -> Space {
        match self {
            Method::Cfp => Space::Q,
            Method::Afp | Method::Mc => Space::P,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CFP" | "C-FEKETE" => Ok(Method::Cfp),
            "AFP" | "FEKETE" => Ok(Method::Afp),
            "MC" => Ok(Method::Mc),
            other => Err(Error::InvalidArgument(format!("unknown method {other}"))),
        }
    }
}

/// Built-in approximation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    /// `exp(-sum y_j^2)`
    #[serde(rename = "exp_negsumsq")]
    ExpNegSumSq,
    /// `exp(-sum y_j)`
    #[serde(rename = "exp_negsum")]
    ExpNegSum,
    /// `u(0.5, y)` of the diffusion benchmark.
    #[serde(rename = "elliptic")]
    Elliptic,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::ExpNegSumSq => "exp_negsumsq",
            Target::ExpNegSum => "exp_negsum",
            Target::Elliptic => "elliptic",
        }
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exp_negsumsq" => Ok(Target::ExpNegSumSq),
            "exp_negsum" => Ok(Target::ExpNegSum),
            "elliptic" => Ok(Target::Elliptic),
            other => Err(Error::InvalidArgument(format!("unknown target {other}"))),
        }
    }
}

/// A target bound to its configuration.
#[derive(Debug, Clone, Copy)]
pub enum TargetFn {
    ExpNegSumSq,
    ExpNegSum,
    Elliptic(EllipticConfig),
}

impl TargetFn {
    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        match self {
            TargetFn::ExpNegSumSq => Ok((-y.iter().map(|v| v * v).sum::<f64>()).exp()),
            TargetFn::ExpNegSum => Ok((-y.iter().sum::<f64>()).exp()),
            TargetFn::Elliptic(cfg) => cfg.solve_bvp(y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub family: Density,
    pub dim: usize,
    pub index: IndexRule,
    pub degree_min: usize,
    pub degree_max: usize,
    /// Samples per basis function; `M = ceil(oversampling * N)`.
    pub oversampling: f64,
    pub trials: usize,
    pub m_tilde: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub n_val: usize,
    pub sigma: f64,
    pub grid_points: usize,
    /// One-dimensional studies only: put the level set of the first candidate
    /// at the front of every candidate set, its generating point at index 0.
    pub level_set_start: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            family: Density::Uniform,
            dim: 2,
            index: IndexRule::TotalDegree,
            degree_min: 1,
            degree_max: 10,
            oversampling: 1.05,
            trials: 50,
            m_tilde: 10_000,
            seed: 0,
            methods: vec![Method::Cfp, Method::Afp, Method::Mc],
            n_val: 1000,
            sigma: DEFAULT_SIGMA,
            grid_points: DEFAULT_GRID_POINTS,
            level_set_start: false,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.dim == 0 {
            return bad("d must be at least 1".into());
        }
        if self.degree_min > self.degree_max {
            return bad(format!(
                "empty degree range {}..={}",
                self.degree_min, self.degree_max
            ));
        }
        if !(self.oversampling >= 1.0) || !self.oversampling.is_finite() {
            return bad(format!(
                "oversampling must be >= 1, got {}",
                self.oversampling
            ));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("method list is empty".into());
        }
        if self.level_set_start && self.dim != 1 {
            return bad("level_set_start needs d = 1".into());
        }
        if self.n_val == 0 {
            return bad("n_val must be at least 1".into());
        }
        if self.m_tilde < 2 || !self.m_tilde.is_multiple_of(2) {
            return bad(format!(
                "m_tilde must be even and >= 2, got {}",
                self.m_tilde
            ));
        }
        Ok(())
    }

    pub fn degrees(&self) -> std::ops::RangeInclusive<usize> {
        self.degree_min..=self.degree_max
    }

    pub fn densities(&self) -> Vec<Density> {
        vec![self.family; self.dim]
    }

    /// Sets one key of the `key = value` config format.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_err =
            |what: &str| Error::InvalidArgument(format!("bad value {value:?} for {what}"));
        let v = value.trim();
        match key.trim() {
            "family" => self.family = v.parse()?,
            "d" | "dim" => self.dim = v.parse().map_err(|_| parse_err("d"))?,
            "index" => self.index = v.parse()?,
            "degree_min" => self.degree_min = v.parse().map_err(|_| parse_err("degree_min"))?,
            "degree_max" => self.degree_max = v.parse().map_err(|_| parse_err("degree_max"))?,
            "degrees" => {
                let (lo, hi) = v.split_once("..").ok_or_else(|| parse_err("degrees"))?;
                self.degree_min = lo.trim().parse().map_err(|_| parse_err("degrees"))?;
                self.degree_max = hi
                    .trim()
                    .trim_start_matches('=')
                    .parse()
                    .map_err(|_| parse_err("degrees"))?;
            }
            "oversampling" => {
                self.oversampling = v.parse().map_err(|_| parse_err("oversampling"))?
            }
            "trials" => self.trials = v.parse().map_err(|_| parse_err("trials"))?,
            "m_tilde" => self.m_tilde = v.parse().map_err(|_| parse_err("m_tilde"))?,
            "seed" => self.seed = v.parse().map_err(|_| parse_err("seed"))?,
            "methods" => {
                self.methods = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "n_val" => self.n_val = v.parse().map_err(|_| parse_err("n_val"))?,
            "sigma" => self.sigma = v.parse().map_err(|_| parse_err("sigma"))?,
            "grid_points" => self.grid_points = v.parse().map_err(|_| parse_err("grid_points"))?,
            "level_set_start" => {
                self.level_set_start = v.parse().map_err(|_| parse_err("level_set_start"))?
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown config key {other}"
                )))
            }
        }
        Ok(())
    }

    /// Applies a config file: one `key = value` per line, `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Config echo in the same `key = value` format [`StudyConfig::apply_text`] reads.
    pub fn to_text(&self) -> String {
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        format!(
            "family = {}\nd = {}\nindex = {}\ndegree_min = {}\ndegree_max = {}\noversampling = {}\n\
             trials = {}\nm_tilde = {}\nseed = {}\nmethods = {}\nn_val = {}\nsigma = {}\ngrid_points = {}\nlevel_set_start = {}\n",
            self.family,
            self.dim,
            self.index.name(),
            self.degree_min,
            self.degree_max,
            self.oversampling,
            self.trials,
            self.m_tilde,
            self.seed,
            methods.join(","),
            self.n_val,
            self.sigma,
            self.grid_points,
            self.level_set_start
        )
    }
}

/// `ceil(factor * n)`, robust to representation error in `factor`.
pub fn sample_count(factor: f64, n: usize) -> usize {
    let raw = factor * n as f64;
    let rounded = raw.round();
    if (raw - rounded).abs() <= 1e-9 * raw.max(1.0) {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

/// Index sets and sizes for one degree of a study.
#[derive(Debug, Clone)]
pub struct DegreePlan {
    pub degree: usize,
    /// Basis for the least-squares fit (`Lambda`).
    pub basis: ProductBasis,
    /// Enriched basis used for selection (`Lambda~`, `|Lambda~| = M`).
    pub selection_basis: ProductBasis,
    pub n: usize,
    pub m: usize,
    /// Degree hint for the asymptotic candidate ensemble.
    pub degree_hint: usize,
}

impl DegreePlan {
    pub fn new(
        family: Density,
        dim: usize,
        index: IndexRule,
        degree: usize,
        oversampling: f64,
    ) -> Result<Self> {
        let set = index.build(dim, degree)?;
        let n = set.len();
        let m = sample_count(oversampling, n);
        let (selection_set, degree_hint): (MultiIndexSet, usize) = if m > n {
            let e = enrich(&set, m - n)?;
            (e.set, e.degree)
        } else {
            let hint = enrichment_degree(&set);
            (set.clone(), hint)
        };
        let densities = vec![family; dim];
        Ok(Self {
            degree,
            basis: ProductBasis::with_densities(&densities, set)?,
            selection_basis: ProductBasis::with_densities(&densities, selection_set)?,
            n,
            m,
            degree_hint,
        })
    }

    pub fn from_config(cfg: &StudyConfig, degree: usize) -> Result<Self> {
        let plan = Self::new(cfg.family, cfg.dim, cfg.index, degree, cfg.oversampling)?;
        if plan.m > cfg.m_tilde {
            return Err(Error::InvalidArgument(format!(
                "degree {degree} needs {} samples but only {} candidates",
                plan.m, cfg.m_tilde
            )));
        }
        Ok(plan)
    }

    /// Draws the sample set of `method`. CFP and AFP share `candidates`.
    pub fn design(
        &self,
        method: Method,
        candidates: &CandidateSet,
        mc_seed: u64,
    ) -> Result<Vec<Vec<f64>>> {
        Ok(match method {
            Method::Cfp => cfp_select(candidates, &self.selection_basis, self.m)?.points,
            Method::Afp => afp_select(candidates, &self.selection_basis, self.m)?.points,
            Method::Mc => monte_carlo_design(&self.basis.densities(), self.m, mc_seed),
        })
    }

    pub fn candidates(&self, m_tilde: usize, seed: u64) -> Result<CandidateSet> {
        candidate_set(&self.basis.densities(), m_tilde, self.degree_hint, seed)
    }

    /// Candidates for one trial; empty when only MC is requested.
    pub fn trial_candidates(&self, cfg: &StudyConfig, seed: u64) -> Result<CandidateSet> {
        if cfg.methods.iter().all(|&m| m == Method::Mc) {
            return Ok(CandidateSet::from_points(Vec::new()));
        }
        let drawn = self.candidates(cfg.m_tilde, seed)?;
        if !cfg.level_set_start {
            return Ok(drawn);
        }
        let n = self.selection_basis.len();
        let table = RecurrenceTable::new(cfg.family, n + 1)?;
        let mut start = None;
        for p in &drawn.points {
            if table.r_ratio(n, p[0])?.value().is_some() {
                start = Some(p[0]);
                break;
            }
        }
        let start =
            start.ok_or_else(|| Error::InvalidArgument("no candidate off the poles".into()))?;
        let level_set = table.level_set(n, start)?;
        let own = level_set
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - start).abs().total_cmp(&(b.1 - start).abs()))
            .map(|(i, _)| i)
            .expect("level set is nonempty");
        let mut points = vec![vec![start]];
        points.extend(
            level_set
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != own)
                .map(|(_, &z)| vec![z]),
        );
        points.extend(drawn.points);
        Ok(CandidateSet::from_points(points))
    }

    /// Least-squares fit the way `method` solves it (weighted for CFP).
    pub fn fit(&self, method: Method, points: &[Vec<f64>], values: &[f64]) -> Result<Surrogate> {
        match method {
            Method::Cfp => solve_weighted(&self.basis, points, values),
            Method::Afp | Method::Mc => solve_unweighted(&self.basis, points, values),
        }
    }
}

fn trial_seed(base: u64, trial: usize, degree: usize) -> u64 {
    derive_seed(base, &[trial as u64, degree as u64])
}

/// Summary statistics reported per (method, degree).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub q20: f64,
    pub q80: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Summary {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        q20: quantile(&sorted, 0.2),
        q80: quantile(&sorted, 0.8),
    }
}

/// One `(method, degree)` cell of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub method: Method,
    pub degree: usize,
    pub n: usize,
    pub m: usize,
    pub values: Vec<f64>,
}

impl StudyRow {
    pub fn summary(&self) -> Summary {
        summarize(&self.values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub kind: String,
    pub config: StudyConfig,
    pub extra: Vec<(String, String)>,
    pub rows: Vec<StudyRow>,
}

fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

impl StudyTable {
    pub fn row(&self, method: Method, degree: usize) -> Option<&StudyRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.degree == degree)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# cfp {VERSION}");
        let _ = writeln!(out, "# study = {}", self.kind);
        for line in self.config.to_text().lines() {
            let _ = writeln!(out, "# {line}");
        }
        for (k, v) in &self.extra {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str("method,degree,N,M,stat_name,value\n");
        for row in &self.rows {
            let s = row.summary();
            for (name, v) in [("mean", s.mean), ("q20", s.q20), ("q80", s.q80)] {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    row.method.name(),
                    row.degree,
                    row.n,
                    row.m,
                    name,
                    fmt_num(v)
                );
            }
        }
        out
    }
}

/// Condition numbers per method and degree: `kappa(V(A, Q))` for CFP and
/// `kappa(V(A, P))` for AFP and MC, over the fit index set.
pub fn study_condition(cfg: &StudyConfig) -> Result<StudyTable> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for degree in cfg.degrees() {
        let plan = DegreePlan::from_config(cfg, degree)?;
        let per_trial: Vec<Vec<f64>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = trial_seed(cfg.seed, trial, degree);
                let candidates = plan.trial_candidates(cfg, seed)?;
                cfg.methods
                    .iter()
                    .map(|&method| {
                        let pts = plan.design(method, &candidates, seed)?;
                        Ok(plan
                            .basis
                            .vandermonde(&pts, method.space())?
                            .condition_number())
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        for (k, &method) in cfg.methods.iter().enumerate() {
            rows.push(StudyRow {
                method,
                degree,
                n: plan.n,
                m: plan.m,
                values: per_trial.iter().map(|t| t[k]).collect(),
            });
        }
    }
    Ok(StudyTable {
        kind: "cond".into(),
        config: cfg.clone(),
        extra: Vec::new(),
        rows,
    })
}

/// Validation errors per method and degree for a built-in target.
pub fn study_approx(cfg: &StudyConfig, target: Target) -> Result<StudyTable> {
    cfg.validate()?;
    let target_fn = match target {
        Target::ExpNegSumSq => TargetFn::ExpNegSumSq,
        Target::ExpNegSum => TargetFn::ExpNegSum,
        Target::Elliptic => {
            if cfg.family != Density::Uniform {
                return Err(Error::UnsupportedDensity(
                    "the diffusion target is defined for uniform parameters only".into(),
                ));
            }
            TargetFn::Elliptic(EllipticConfig::new(cfg.dim, cfg.sigma, cfg.grid_points)?)
        }
    };
    study_approx_with(cfg, target.name(), |y| target_fn.eval(y))
}

/// Validation-error study for an arbitrary target function.
pub fn study_approx_with<F>(cfg: &StudyConfig, name: &str, f: F) -> Result<StudyTable>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let plans: Vec<DegreePlan> = cfg
        .degrees()
        .map(|k| DegreePlan::from_config(cfg, k))
        .collect::<Result<_>>()?;

    // per trial: per degree: per method error
    let per_trial: Vec<Vec<Vec<f64>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let vseed = derive_seed(cfg.seed, &[trial as u64, stream::VALIDATION]);
            let vpts = validation_points(&plans[0].basis, cfg.n_val, vseed);
            let vvals: Vec<f64> = vpts.iter().map(|y| f(y)).collect::<Result<_>>()?;
            plans
                .iter()
                .map(|plan| {
                    let seed = trial_seed(cfg.seed, trial, plan.degree);
                    let candidates = plan.trial_candidates(cfg, seed)?;
                    cfg.methods
                        .iter()
                        .map(|&method| {
                            let pts = plan.design(method, &candidates, seed)?;
                            let vals: Vec<f64> = pts.iter().map(|y| f(y)).collect::<Result<_>>()?;
                            let s = plan.fit(method, &pts, &vals)?;
                            validation_error_on(&s, &vpts, &vvals)
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (p, plan) in plans.iter().enumerate() {
        for (k, &method) in cfg.methods.iter().enumerate() {
            rows.push(StudyRow {
                method,
                degree: plan.degree,
                n: plan.n,
                m: plan.m,
                values: per_trial.iter().map(|t| t[p][k]).collect(),
            });
        }
    }
    Ok(StudyTable {
        kind: "approx".into(),
        config: cfg.clone(),
        extra: vec![("target".into(), name.into())],
        rows,
    })
}

/// Options for [`verify_oned`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub family: Density,
    pub n_max: usize,
    /// Random non-pole starting points per `N`, in addition to the roots of `phi_N`.
    pub random_starts: usize,
    /// Evenly spaced distractor candidates placed after the level set.
    pub distractors: usize,
    pub seed: u64,
}

impl VerifyConfig {
    pub fn new(family: Density, n_max: usize) -> Self {
        Self {
            family,
            n_max,
            random_starts: 5,
            distractors: 64,
            seed: 0,
        }
    }
}

pub const VERIFY_KAPPA_TOL: f64 = 1e-8;
pub const VERIFY_DET_TOL: f64 = 1e-8;
pub const VERIFY_NODE_TOL: f64 = 1e-10;
pub const VERIFY_QUAD_TOL: f64 = 1e-10;
pub const VERIFY_WEIGHT_TOL: f64 = 1e-12;

/// Kind of starting point in a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartKind {
    GaussRoot,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub n: usize,
    pub start: f64,
    pub start_kind: StartKind,
    pub check: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "# cfp {VERSION}");
        let _ = writeln!(out, "# report = verify oned");
        let _ = writeln!(out, "# family = {}", c.family);
        let _ = writeln!(out, "# n_max = {}", c.n_max);
        let _ = writeln!(out, "# random_starts = {}", c.random_starts);
        let _ = writeln!(out, "# distractors = {}", c.distractors);
        let _ = writeln!(out, "# seed = {}", c.seed);
        out.push_str("family,N,start_kind,start,check,value,tolerance,status\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.family,
                r.n,
                match r.start_kind {
                    StartKind::GaussRoot => "gauss_root",
                    StartKind::Random => "random",
                },
                fmt_num(r.start),
                r.check,
                fmt_num(r.value),
                fmt_num(r.tolerance),
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        out
    }
}

fn distractor_grid(family: Density, count: usize) -> Vec<f64> {
    let half_width = match family {
        Density::Uniform => 1.0,
        Density::Gaussian => 3.0,
    };
    if count == 0 {
        return Vec::new();
    }
    if count == 1 {
        return vec![0.0];
    }
    (0..count)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (count - 1) as f64)
        .collect()
}

/// Outcome of running CFP from one starting point in one dimension.
#[derive(Debug, Clone)]
pub struct OnedRun {
    pub level_set: Vec<f64>,
    pub design: DesignResult,
    /// Selected nodes, ascending.
    pub nodes: Vec<f64>,
}

/// Builds the level set of `start`, places `start` at candidate index 0 followed
/// by the rest of the level set and `distractors`, and runs CFP with `M = N`.
pub fn oned_cfp_run(
    table: &RecurrenceTable,
    n: usize,
    start: f64,
    distractors: &[f64],
) -> Result<OnedRun> {
    let level_set = table.level_set(n, start)?;
    let own = level_set
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - start).abs().total_cmp(&(b.1 - start).abs()))
        .map(|(i, _)| i)
        .expect("level set is nonempty");
    let mut points = vec![vec![start]];
    points.extend(
        level_set
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != own)
            .map(|(_, &z)| vec![z]),
    );
    points.extend(distractors.iter().map(|&z| vec![z]));
    let candidates = CandidateSet::from_points(points);
    let set = IndexRule::TotalDegree.build(1, n - 1)?;
    let basis = ProductBasis::with_densities(&[table.density()], set)?;
    let design = cfp_select(&candidates, &basis, n)?;
    let mut nodes: Vec<f64> = design.points.iter().map(|p| p[0]).collect();
    nodes.sort_by(f64::total_cmp);
    Ok(OnedRun {
        level_set,
        design,
        nodes,
    })
}

/// One-dimensional optimality report: for each `N <= n_max` and each start,
/// CFP must reproduce the level set with unit condition number and determinant,
/// the `1/K` rule on it must be exact through degree `2N - 2`, and Gauss roots
/// must reproduce the Gauss nodes.
pub fn verify_oned(cfg: &VerifyConfig) -> Result<VerifyReport> {
    if cfg.n_max == 0 || cfg.n_max > 40 {
        return Err(Error::InvalidArgument(format!(
            "n_max must be in 1..=40, got {}",
            cfg.n_max
        )));
    }
    let table = RecurrenceTable::new(cfg.family, 2 * cfg.n_max + 1)?;
    let distractors = distractor_grid(cfg.family, cfg.distractors);
    let mut rows = Vec::new();
    for n in 1..=cfg.n_max {
        let gauss = table.gauss_rule(n)?.nodes;
        let mut starts: Vec<(f64, StartKind)> =
            gauss.iter().map(|&g| (g, StartKind::GaussRoot)).collect();
        let mut rng = stream_rng(cfg.seed, &[stream::TARGET, n as u64]);
        while starts.len() < gauss.len() + cfg.random_starts {
            let y = sample_density(cfg.family, &mut rng);
            if table.r_ratio(n, y)?.value().is_some() {
                starts.push((y, StartKind::Random));
            }
        }
        for (start, kind) in starts {
            let mut push = |check: &'static str, value: f64, tolerance: f64, pass: bool| {
                rows.push(VerifyRow {
                    n,
                    start,
                    start_kind: kind,
                    check,
                    value,
                    tolerance,
                    pass,
                });
            };
            let run = match oned_cfp_run(&table, n, start, &distractors) {
                Ok(run) => run,
                Err(_) => {
                    push("cfp_run", f64::NAN, 0.0, false);
                    continue;
                }
            };
            let kappa = run.design.condition_number;
            push(
                "kappa",
                kappa,
                VERIFY_KAPPA_TOL,
                kappa <= 1.0 + VERIFY_KAPPA_TOL,
            );
            let det = run.design.det_modulus.unwrap_or(0.0);
            push(
                "det_modulus",
                det,
                VERIFY_DET_TOL,
                det >= 1.0 - VERIFY_DET_TOL,
            );
            let ls_err = run
                .nodes
                .iter()
                .zip(&run.level_set)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            push(
                "level_set_match",
                ls_err,
                VERIFY_NODE_TOL,
                ls_err <= VERIFY_NODE_TOL,
            );

            let k: Vec<f64> = run
                .nodes
                .iter()
                .map(|&z| christoffel_1d(&table, n, z))
                .collect::<Result<_>>()?;
            let quad = quadrature_exactness_report(&table, &run.nodes, &k, 2 * n - 2)?;
            let qmax = quad.iter().copied().fold(0.0, f64::max);
            push(
                "quadrature_max_error",
                qmax,
                VERIFY_QUAD_TOL,
                qmax < VERIFY_QUAD_TOL,
            );
            let wmin = k.iter().map(|k| 1.0 / k).fold(f64::INFINITY, f64::min);
            push("weight_min", wmin, 0.0, wmin > 0.0);
            let wsum_err = (k.iter().map(|k| 1.0 / k).sum::<f64>() - 1.0).abs();
            push(
                "weight_sum_error",
                wsum_err,
                VERIFY_WEIGHT_TOL,
                wsum_err <= VERIFY_WEIGHT_TOL,
            );
            if kind == StartKind::GaussRoot {
                let gerr = run
                    .nodes
                    .iter()
                    .zip(&gauss)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                push(
                    "gauss_nodes",
                    gerr,
                    VERIFY_NODE_TOL,
                    gerr <= VERIFY_NODE_TOL,
                );
            }
        }
    }
    Ok(VerifyReport {
        config: cfg.clone(),
        rows,
    })
}

/// Options for a single design run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    pub family: Density,
    pub dim: usize,
    pub index: IndexRule,
    pub degree: usize,
    pub method: Method,
    pub oversampling: f64,
    pub m_tilde: usize,
    pub seed: u64,
    /// Fit this target on the design and report its validation error.
    pub target: Option<Target>,
    pub n_val: usize,
    pub sigma: f64,
    pub grid_points: usize,
}

impl DesignConfig {
    pub fn from_study(
        cfg: &StudyConfig,
        degree: usize,
        method: Method,
        target: Option<Target>,
    ) -> Self {
        Self {
            family: cfg.family,
            dim: cfg.dim,
            index: cfg.index,
            degree,
            method,
            oversampling: cfg.oversampling,
            m_tilde: cfg.m_tilde,
            seed: cfg.seed,
            target,
            n_val: cfg.n_val,
            sigma: cfg.sigma,
            grid_points: cfg.grid_points,
        }
    }
}

/// JSON document written by the `design` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignOutput {
    pub version: String,
    pub config: DesignConfig,
    pub fit_index_set: MultiIndexSet,
    pub selection_index_set: MultiIndexSet,
    pub n: usize,
    pub m: usize,
    pub design: DesignResult,
    /// `kappa` of the least-squares matrix (`V(A, Q)` for CFP, `V(A, P)` otherwise).
    pub lsq_condition_number: f64,
    pub surrogate: Option<Surrogate>,
    pub validation_error: Option<f64>,
}

pub fn run_design(cfg: &DesignConfig) -> Result<DesignOutput> {
    let plan = DegreePlan::new(cfg.family, cfg.dim, cfg.index, cfg.degree, cfg.oversampling)?;
    let seed = trial_seed(cfg.seed, 0, cfg.degree);
    let design = match cfg.method {
        Method::Cfp | Method::Afp => {
            let candidates = plan.candidates(cfg.m_tilde, seed)?;
            if cfg.method == Method::Cfp {
                cfp_select(&candidates, &plan.selection_basis, plan.m)?
            } else {
                afp_select(&candidates, &plan.selection_basis, plan.m)?
            }
        }
        Method::Mc => {
            let pts = monte_carlo_design(&plan.basis.densities(), plan.m, seed);
            let v = plan.selection_basis.vandermonde(&pts, Space::P)?;
            DesignResult {
                space: Space::P,
                pivot_order: (0..pts.len()).collect(),
                objective_trace: Vec::new(),
                det_modulus: None,
                condition_number: v.condition_number(),
                points: pts,
            }
        }
    };
    let lsq_condition_number = plan
        .basis
        .vandermonde(&design.points, cfg.method.space())?
        .condition_number();
    let (surrogate, validation_error) = match cfg.target {
        None => (None, None),
        Some(target) => {
            let f = match target {
                Target::ExpNegSumSq => TargetFn::ExpNegSumSq,
                Target::ExpNegSum => TargetFn::ExpNegSum,
                Target::Elliptic => {
                    TargetFn::Elliptic(EllipticConfig::new(cfg.dim, cfg.sigma, cfg.grid_points)?)
                }
            };
            let vals: Vec<f64> = design
                .points
                .iter()
                .map(|y| f.eval(y))
                .collect::<Result<_>>()?;
            let s = plan.fit(cfg.method, &design.points, &vals)?;
            let vseed = derive_seed(cfg.seed, &[0, stream::VALIDATION]);
            let vpts = validation_points(&plan.basis, cfg.n_val.max(1), vseed);
            let vvals: Vec<f64> = vpts.iter().map(|y| f.eval(y)).collect::<Result<_>>()?;
            let err = validation_error_on(&s, &vpts, &vvals)?;
            (Some(s), Some(err))
        }
    };
    Ok(DesignOutput {
        version: VERSION.into(),
        config: cfg.clone(),
        fit_index_set: plan.basis.set().clone(),
        selection_index_set: plan.selection_basis.set().clone(),
        n: plan.n,
        m: plan.m,
        design,
        lsq_condition_number,
        surrogate,
        validation_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(methods: &[Method]) -> StudyConfig {
        StudyConfig {
            degree_min: 1,
            degree_max: 3,
            trials: 4,
            m_tilde: 400,
            methods: methods.to_vec(),
            n_val: 200,
            ..Default::default()
        }
    }

    #[test]
    fn sample_count_examples() {
        assert_eq!(sample_count(1.05, 6), 7);
        assert_eq!(sample_count(1.05, 20), 21);
        assert_eq!(sample_count(1.05, 60), 63);
        assert_eq!(sample_count(1.05, 136), 143);
        assert_eq!(sample_count(1.0, 10), 10);
    }

    #[test]
    fn quantiles() {
        let s = summarize(&[5.0, 1.0, 3.0, 2.0, 4.0]);
        assert_eq!(s.mean, 3.0);
        assert!((s.q20 - 1.8).abs() < 1e-15);
        assert!((s.q80 - 4.2).abs() < 1e-15);
        let s = summarize(&[1.0, f64::INFINITY]);
        assert_eq!(s.mean, f64::INFINITY);
    }

    #[test]
    fn config_text_round_trip() {
        let mut cfg = StudyConfig::default();
        cfg.apply_text("# comment\nfamily = gaussian\nd=3 # trailing\nindex = HC\ndegrees = 2..=7\nmethods = CFP,MC\n")
            .unwrap();
        assert_eq!(cfg.family, Density::Gaussian);
        assert_eq!(cfg.dim, 3);
        assert_eq!(cfg.index, IndexRule::HyperbolicCross);
        assert_eq!((cfg.degree_min, cfg.degree_max), (2, 7));
        assert_eq!(cfg.methods, vec![Method::Cfp, Method::Mc]);
        let mut back = StudyConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.clone().apply_text("bogus = 1").is_err());
        assert!(cfg.clone().apply_text("trials").is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = StudyConfig {
            degree_min: 5,
            degree_max: 4,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = StudyConfig {
            oversampling: 0.9,
            ..Default::default()
        };
        assert!(study_condition(&cfg).is_err());
    }

    #[test]
    fn condition_csv_schema() {
        let cfg = small(&[Method::Cfp, Method::Afp, Method::Mc]);
        let table = study_condition(&cfg).unwrap();
        assert_eq!(table.rows.len(), 3 * 3);
        let csv = table.to_csv();
        let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], "method,degree,N,M,stat_name,value");
        // three statistics per (method, degree)
        assert_eq!(data.len() - 1, 3 * 3 * 3);
        assert!(csv.contains("# seed = 0"));
        assert!(csv.starts_with(&format!("# cfp {VERSION}")));
        assert_eq!(csv, study_condition(&cfg).unwrap().to_csv());
    }

    #[test]
    fn oned_cfp_with_square_design_is_optimal() {
        let mut cfg = small(&[Method::Cfp]);
        cfg.dim = 1;
        cfg.oversampling = 1.0;
        cfg.degree_min = 1;
        cfg.degree_max = 6;
        let plan = DegreePlan::from_config(&cfg, 4).unwrap();
        let table = RecurrenceTable::new(Density::Uniform, 10).unwrap();
        let start = table.gauss_rule(5).unwrap().nodes[1];
        let ls = table.level_set(5, start).unwrap();
        let mut pts = vec![vec![start]];
        pts.extend(
            ls.iter()
                .filter(|&&z| (z - start).abs() > 1e-12)
                .map(|&z| vec![z]),
        );
        let c = CandidateSet::from_points(pts);
        let r = cfp_select(&c, &plan.selection_basis, plan.m).unwrap();
        assert!((r.condition_number - 1.0).abs() < 1e-10);
    }

    #[test]
    fn level_set_start_gives_unit_condition() {
        let cfg = StudyConfig {
            dim: 1,
            oversampling: 1.0,
            degree_min: 1,
            degree_max: 12,
            trials: 3,
            m_tilde: 200,
            methods: vec![Method::Cfp],
            level_set_start: true,
            ..Default::default()
        };
        for family in [Density::Uniform, Density::Gaussian] {
            let table = study_condition(&StudyConfig {
                family,
                ..cfg.clone()
            })
            .unwrap();
            for row in &table.rows {
                assert!(
                    row.values.iter().all(|&k| (k - 1.0).abs() < 1e-8),
                    "{row:?}"
                );
            }
        }
        assert!(StudyConfig { dim: 2, ..cfg }.validate().is_err());
    }

    #[test]
    fn polynomial_target_is_recovered_by_every_method() {
        let cfg = small(&[Method::Cfp, Method::Afp, Method::Mc]);
        let plan = DegreePlan::from_config(&cfg, 3).unwrap();
        let truth = Surrogate::new(
            plan.basis.clone(),
            (0..plan.n).map(|i| 1.0 / (i + 1) as f64).collect(),
        )
        .unwrap();
        let mut cfg3 = cfg.clone();
        cfg3.degree_min = 3;
        let table = study_approx_with(&cfg3, "poly", |y| truth.eval(y)).unwrap();
        for row in &table.rows {
            assert!(row.values.iter().all(|&e| e < 1e-9), "{:?}", row);
        }
    }

    #[test]
    fn constant_fit_error_is_target_std_dev() {
        // degree 0: best constant is the mean; the error is the standard deviation
        let mut cfg = small(&[Method::Cfp]);
        cfg.degree_min = 0;
        cfg.degree_max = 0;
        cfg.n_val = 20_000;
        cfg.trials = 1;
        cfg.oversampling = 1.0;
        // tensor Gauss reference for the std-dev of exp(-y1^2 - y2^2) under the uniform density
        let g = RecurrenceTable::new(Density::Uniform, 30)
            .unwrap()
            .gauss_rule(30)
            .unwrap();
        let (mut m1, mut m2) = (0.0, 0.0);
        for (a, wa) in g.nodes.iter().zip(&g.weights) {
            for (b, wb) in g.nodes.iter().zip(&g.weights) {
                let f = (-(a * a) - b * b).exp();
                m1 += wa * wb * f;
                m2 += wa * wb * f * f;
            }
        }
        let std = (m2 - m1 * m1).sqrt();
        let table = study_approx(&cfg, Target::ExpNegSumSq).unwrap();
        let err = table.rows[0].values[0];
        // one design point: the constant fit is f(y1); the error also contains the offset
        let design_pt = {
            let plan = DegreePlan::from_config(&cfg, 0).unwrap();
            let c = plan
                .candidates(cfg.m_tilde, trial_seed(cfg.seed, 0, 0))
                .unwrap();
            plan.design(Method::Cfp, &c, 0).unwrap()
        };
        let offset = TargetFn::ExpNegSumSq.eval(&design_pt[0]).unwrap() - m1;
        let expected = (std * std + offset * offset).sqrt();
        assert!(
            (err - expected).abs() < 0.02 * expected,
            "{err} vs {expected}"
        );
    }

    #[test]
    fn elliptic_target_requires_uniform() {
        let mut cfg = small(&[Method::Mc]);
        cfg.family = Density::Gaussian;
        assert!(study_approx(&cfg, Target::Elliptic).is_err());
    }

    #[test]
    fn verify_small_report_passes() {
        for family in [Density::Uniform, Density::Gaussian] {
            let report = verify_oned(&VerifyConfig::new(family, 6)).unwrap();
            let fails: Vec<_> = report.failures().collect();
            assert!(fails.is_empty(), "{fails:?}");
            assert!(report.to_csv().contains(",PASS"));
        }
        assert!(verify_oned(&VerifyConfig::new(Density::Uniform, 41)).is_err());
    }

    #[test]
    fn verify_uniform_two_point_chain() {
        let table = RecurrenceTable::new(Density::Uniform, 5).unwrap();
        let run = oned_cfp_run(&table, 2, 1.0, &[0.0, 0.5]).unwrap();
        assert!((run.nodes[0] + 1.0 / 3.0).abs() < 1e-14);
        assert!((run.nodes[1] - 1.0).abs() < 1e-14);
        assert!((run.design.condition_number - 1.0).abs() < 1e-12);
    }

    #[test]
    fn design_output_serializes() {
        let cfg = DesignConfig::from_study(
            &small(&[Method::Cfp]),
            2,
            Method::Cfp,
            Some(Target::ExpNegSumSq),
        );
        let out = run_design(&cfg).unwrap();
        assert_eq!(out.design.points.len(), out.m);
        assert!(out.validation_error.unwrap() < 0.1);
        let text = serde_json::to_string(&out).unwrap();
        let back: DesignOutput = serde_json::from_str(&text).unwrap();
        assert_eq!(back.design.pivot_order, out.design.pivot_order);
        assert!(text.contains("\"target\":\"exp_negsumsq\""));
    }
}
