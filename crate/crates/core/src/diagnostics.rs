//! Monte Carlo checks of the exact tree-level identities of the branching
//! process.
//!
//! With `Z(v) = τ(v)^{-ρ}` and `S(v) = ρ log τ(v)` (a Poisson weighted
//! infinite tree):
//!
//! * `E Σ_{|v|=n} τ(v)^{-λ} = (ρ/λ)^n`;
//! * `W_n = Σ_{|v|=n} Z(v)` is a martingale with `E W_n = 1` and
//!   `E W_n² = 3/2 + (E W_{n-1}² − 1)/2 = 2 − 2^{-n}`;
//! * `W_N = Σ_{|v|=n} Z(v) W_{N-n}(v)` holds exactly on every tree;
//! * `E #{|v| = n : S(v) <= x} = x^n / n!`.
//!
//! Level statistics are only meaningful on trees cut at a fixed time
//! horizon: a vertex budget stops at a random, tree-dependent time and
//! biases level sums. Such trees are refused with [`Error::IncompleteLevel`].
//! A horizon `T` still drops vertices born after `T`; [`level_tail_mass`]
//! bounds what is lost, and the runners pick `T` to make it negligible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branching::{generate_replicas, growth_exponent, BranchingTree, Budget, Truncation};
use crate::error::{Error, Result};
use crate::profiles::{ProcessParams, SpatialProfile};
use crate::stats::{compensated_sum, Summary};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Relative truncation loss the runners tolerate at the deepest level.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-6;

/// Telescoping identity tolerance.
pub const TELESCOPING_TOLERANCE: f64 = 1e-10;

fn check_level(tree: &BranchingTree, level: usize) -> Result<()> {
    if tree.truncation == Truncation::VertexBudget {
        return Err(Error::IncompleteLevel {
            level,
            reason: "tree was cut by a vertex budget, not a time horizon".into(),
        });
    }
    if let Some(cap) = tree.max_depth {
        if level > cap {
            return Err(Error::IncompleteLevel {
                level,
                reason: format!("generation stopped reproducing at depth {cap}"),
            });
        }
    }
    Ok(())
}

/// Fraction of `E Σ_{|v|=n} τ^{-λ}` carried by vertices with
/// `ρ log τ > x`, i.e. `P(Gamma(n, λ/ρ) > x)`.
pub fn level_tail_fraction(level: usize, lambda_over_rho: f64, x: f64) -> f64 {
    if level == 0 {
        return 0.0;
    }
    let cx = lambda_over_rho * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..level {
        term *= cx / k as f64;
        sum += term;
    }
    ((-cx).exp() * sum).min(1.0)
}

/// Expected level-`n` mass of `τ^{-λ}` beyond the log-horizon `x = ρ log T`.
pub fn level_tail_mass(level: usize, lambda_over_rho: f64, x: f64) -> f64 {
    lambda_over_rho.recip().powi(level as i32) * level_tail_fraction(level, lambda_over_rho, x)
}

/// Smallest log-horizon `x = ρ log T` (on a 0.5 grid) keeping the relative
/// truncation loss at `level` below `tol` for every `λ/ρ >= min_ratio`.
pub fn log_horizon_for(level: usize, min_ratio: f64, tol: f64) -> f64 {
    let mut x = 1.0;
    while level_tail_fraction(level, min_ratio, x) > tol {
        x += 0.5;
    }
    x
}

/// `Σ_{|v|=n} τ(v)^{-λ}`.
pub fn level_weight_sum(tree: &BranchingTree, level: usize, lambda: f64) -> Result<f64> {
    check_level(tree, level)?;
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    Ok(compensated_sum(
        tree.taus()
            .iter()
            .zip(tree.depths())
            .filter(|(_, &d)| d == level)
            .map(|(&t, _)| t.powf(-lambda)),
    ))
}

/// `W_0, W_1, ..., W_{n_max}` with `W_k = Σ_{|v|=k} τ(v)^{-ρ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleTrace {
    pub values: Vec<f64>,
}

pub fn martingale_trace(tree: &BranchingTree, n_max: usize) -> Result<MartingaleTrace> {
    check_level(tree, n_max)?;
    let rho = tree.params.rho;
    let mut sums = vec![crate::stats::CompensatedSum::default(); n_max + 1];
    for (&t, &d) in tree.taus().iter().zip(tree.depths()) {
        if d <= n_max {
            sums[d].add(t.powf(-rho));
        }
    }
    Ok(MartingaleTrace {
        values: sums.iter().map(|s| s.value()).collect(),
    })
}

/// For every vertex `v`, the sum of `Z(z)` over descendants `z` at depth
/// `target` (zero for vertices deeper than `target`).
fn descendant_mass(tree: &BranchingTree, target: usize) -> Vec<f64> {
    let rho = tree.params.rho;
    let mut mass = vec![0.0; tree.len()];
    for v in (0..tree.len()).rev() {
        if tree.depth(v) == target {
            mass[v] = tree.tau(v).powf(-rho);
        }
        if let Some(p) = tree.parent(v) {
            if tree.depth(v) <= target {
                mass[p] += mass[v];
            }
        }
    }
    mass
}

/// Limit-uniform-measure weights `Z(v) W_m(v)` for every vertex at `level`,
/// with `W_m(v) = Σ_{z >= v, |z| = |v|+m} Z(z)/Z(v)` standing in for the
/// almost-sure limit `W(v)`. Returned as `(vertex id, weight)` pairs.
pub fn limit_uniform_weights(
    tree: &BranchingTree,
    level: usize,
    lookahead: usize,
) -> Result<Vec<(usize, f64)>> {
    if lookahead == 0 {
        return Err(Error::Domain("lookahead must be at least 1".into()));
    }
    check_level(tree, level + lookahead)?;
    let rho = tree.params.rho;
    let mass = descendant_mass(tree, level + lookahead);
    Ok((0..tree.len())
        .filter(|&v| tree.depth(v) == level)
        .map(|v| {
            let z = tree.tau(v).powf(-rho);
            let w = mass[v] / z;
            (v, z * w)
        })
        .collect())
}

/// `|Σ_{|v|=n} Z(v) W_{N-n}(v) − W_N|` for `n < N`.
pub fn telescoping_residual(tree: &BranchingTree, level: usize, deepest: usize) -> Result<f64> {
    if level >= deepest {
        return Err(Error::Domain(format!(
            "need level < deepest, got {level} >= {deepest}"
        )));
    }
    let weights = limit_uniform_weights(tree, level, deepest - level)?;
    let lhs = compensated_sum(weights.iter().map(|&(_, w)| w));
    let w_n = martingale_trace(tree, deepest)?.values[deepest];
    Ok((lhs - w_n).abs())
}

/// Mean over replicas of `#{v : |v| = n, ρ log τ(v) <= x}`.
pub fn pwit_level_counts(trees: &[BranchingTree], level: usize, x: f64) -> Result<Summary> {
    if trees.is_empty() {
        return Err(Error::InsufficientData("no replicas".into()));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("x must be non-negative, got {x}")));
    }
    let mut counts = Vec::with_capacity(trees.len());
    for (i, tree) in trees.iter().enumerate() {
        check_level(tree, level)?;
        let rho = tree.params.rho;
        let available = rho * tree.horizon.ln();
        if x > available {
            return Err(Error::HorizonTooSmall {
                needed: x,
                available,
                replica: i,
            });
        }
        let c = tree
            .taus()
            .iter()
            .zip(tree.depths())
            .filter(|&(&t, &d)| d == level && rho * t.ln() <= x)
            .count();
        counts.push(c as f64);
    }
    Ok(Summary::of(&counts))
}

/// How a diagnostic record decides pass/fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PassRule {
    /// `|empirical − theoretical| <= k · stderr`.
    Sigma { k: f64 },
    /// `|empirical − theoretical| <= f · |theoretical|`.
    Relative { f: f64 },
    /// `|empirical − theoretical| <= tol`.
    Absolute { tol: f64 },
}

impl PassRule {
    pub fn holds(self, theoretical: f64, empirical: f64, stderr: f64) -> bool {
        let diff = (empirical - theoretical).abs();
        match self {
            PassRule::Sigma { k } => diff <= k * stderr,
            PassRule::Relative { f } => diff <= f * theoretical.abs(),
            PassRule::Absolute { tol } => diff <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub identity: String,
    pub label: String,
    pub theoretical: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub median: f64,
    pub trimmed_mean: f64,
    pub replicas: usize,
    pub rule: PassRule,
    pub pass: bool,
    /// Upper bound on the expectation lost to the time horizon, if relevant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_bias: Option<f64>,
    /// Lookahead depth used for finite approximations of limits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lookahead: Option<usize>,
}

impl DiagnosticRecord {
    fn from_summary(
        identity: &str,
        label: String,
        theoretical: f64,
        s: &Summary,
        rule: PassRule,
    ) -> Self {
        DiagnosticRecord {
            identity: identity.to_string(),
            label,
            theoretical,
            empirical: s.mean,
            stderr: s.stderr,
            median: s.median,
            trimmed_mean: s.trimmed_mean,
            replicas: s.n,
            rule,
            pass: rule.holds(theoretical, s.mean, s.stderr),
            truncation_bias: None,
            lookahead: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub format_version: u32,
    pub identity: String,
    pub seed: u64,
    pub records: Vec<DiagnosticRecord>,
}

impl DiagnosticReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }
}

const THREE_SIGMA: PassRule = PassRule::Sigma { k: 3.0 };

/// Settings shared by the Monte Carlo runners.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub replicas: usize,
    pub max_level: usize,
    pub seed: u64,
    pub tail_tolerance: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            replicas: 5000,
            max_level: 3,
            seed: 1,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }
}

/// Depth-capped replicas cut at a horizon fine enough for `λ/ρ >= min_ratio`.
pub fn diagnostic_replicas(
    rho: f64,
    settings: &RunSettings,
    min_ratio: f64,
) -> Result<Vec<BranchingTree>> {
    let x = log_horizon_for(settings.max_level, min_ratio, settings.tail_tolerance);
    let params =
        ProcessParams::from_rho(2, rho, SpatialProfile::Gaussian)?.with_seed(settings.seed);
    let budget = Budget::time((x / rho).exp()).with_max_depth(settings.max_level);
    Ok(generate_replicas(&params, &budget, settings.replicas)?
        .into_iter()
        .map(|(tree, _)| tree)
        .collect())
}

fn per_tree<F>(trees: &[BranchingTree], f: F) -> Result<Vec<f64>>
where
    F: Fn(&BranchingTree) -> Result<f64> + Sync + Send,
{
    trees.par_iter().map(f).collect()
}

/// Moment identity over the given `λ` multipliers of `ρ` and levels `1..=max_level`.
pub fn run_moment(
    rho: f64,
    lambda_ratios: &[f64],
    settings: &RunSettings,
) -> Result<Vec<DiagnosticRecord>> {
    let min_ratio = lambda_ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let trees = diagnostic_replicas(rho, settings, min_ratio)?;
    let x = rho * trees[0].horizon.ln();
    let mut records = Vec::new();
    for &ratio in lambda_ratios {
        let lambda = ratio * rho;
        for level in 1..=settings.max_level {
            let values = per_tree(&trees, |t| level_weight_sum(t, level, lambda))?;
            let theoretical = (rho / lambda).powi(level as i32);
            let mut rec = DiagnosticRecord::from_summary(
                "moment",
                format!("rho={rho} lambda={lambda} n={level}"),
                theoretical,
                &Summary::of(&values),
                THREE_SIGMA,
            );
            rec.truncation_bias = Some(level_tail_mass(level, ratio, x));
            records.push(rec);
        }
    }
    Ok(records)
}

/// Martingale moments `E W_k = 1`, `E W_k² = 2 − 2^{-k}`, plus the exact
/// telescoping identity on every tree.
pub fn run_martingale(rho: f64, settings: &RunSettings) -> Result<Vec<DiagnosticRecord>> {
    let trees = diagnostic_replicas(rho, settings, 1.0)?;
    let x = rho * trees[0].horizon.ln();
    let levels = settings.max_level;
    let traces: Vec<MartingaleTrace> = trees
        .par_iter()
        .map(|t| martingale_trace(t, levels))
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    for k in 1..=levels {
        let w: Vec<f64> = traces.iter().map(|tr| tr.values[k]).collect();
        let w2: Vec<f64> = w.iter().map(|v| v * v).collect();
        let mut rec = DiagnosticRecord::from_summary(
            "martingale_mean",
            format!("rho={rho} n={k}"),
            1.0,
            &Summary::of(&w),
            THREE_SIGMA,
        );
        rec.truncation_bias = Some(level_tail_mass(k, 1.0, x));
        records.push(rec);
        let mut rec = DiagnosticRecord::from_summary(
            "martingale_second_moment",
            format!("rho={rho} n={k}"),
            2.0 - 0.5f64.powi(k as i32),
            &Summary::of(&w2),
            THREE_SIGMA,
        );
        rec.truncation_bias = Some(level_tail_mass(k, 1.0, x));
        records.push(rec);
    }
    let residuals = per_tree(&trees, |t| {
        let mut worst: f64 = 0.0;
        for deepest in 1..=levels {
            for level in 0..deepest {
                worst = worst.max(telescoping_residual(t, level, deepest)?);
            }
        }
        Ok(worst)
    })?;
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    let rule = PassRule::Absolute {
        tol: TELESCOPING_TOLERANCE,
    };
    records.push(DiagnosticRecord {
        identity: "telescoping".into(),
        label: format!("rho={rho} levels<={levels} (max residual over trees)"),
        theoretical: 0.0,
        empirical: worst,
        stderr: 0.0,
        median: Summary::of(&residuals).median,
        trimmed_mean: Summary::of(&residuals).trimmed_mean,
        replicas: trees.len(),
        rule,
        pass: rule.holds(0.0, worst, 0.0),
        truncation_bias: None,
        lookahead: Some(levels),
    });
    Ok(records)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Level-count law `E #{|v|=n, S(v) <= x} = x^n/n!`.
pub fn run_levelcount(
    rho: f64,
    xs: &[f64],
    settings: &RunSettings,
) -> Result<Vec<DiagnosticRecord>> {
    let trees = diagnostic_replicas(rho, settings, 1.0)?;
    let mut records = Vec::new();
    for level in 1..=settings.max_level {
        for &x in xs {
            let s = pwit_level_counts(&trees, level, x)?;
            records.push(DiagnosticRecord::from_summary(
                "levelcount",
                format!("rho={rho} n={level} x={x}"),
                x.powi(level as i32) / factorial(level),
                &s,
                THREE_SIGMA,
            ));
        }
    }
    Ok(records)
}

/// Relative tolerance on the fitted growth exponent.
pub const GROWTH_TOLERANCE: f64 = 0.10;

/// Growth exponent from vertex-budget replicas.
pub fn run_growth(rho: f64, vertices: usize, settings: &RunSettings) -> Result<DiagnosticRecord> {
    let params =
        ProcessParams::from_rho(2, rho, SpatialProfile::Gaussian)?.with_seed(settings.seed);
    let traces: Vec<_> =
        generate_replicas(&params, &Budget::vertices(vertices), settings.replicas)?
            .into_iter()
            .map(|(_, trace)| trace)
            .collect();
    let fit = growth_exponent(&traces, rho)?;
    let w = Summary::of(&fit.w_estimates);
    let rule = PassRule::Relative {
        f: GROWTH_TOLERANCE,
    };
    Ok(DiagnosticRecord {
        identity: "growth".into(),
        label: format!("rho={rho} vertices={vertices} (median W = {:.4})", w.median),
        theoretical: rho,
        empirical: fit.slope,
        stderr: fit.slope_stderr,
        median: w.median,
        trimmed_mean: w.trimmed_mean,
        replicas: traces.len(),
        rule,
        pass: rule.holds(rho, fit.slope, fit.slope_stderr),
        truncation_bias: None,
        lookahead: None,
    })
}
