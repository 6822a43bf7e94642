//! Empirical fractal dimension: box counting, correlation sums and
//! energy integrals over finite point sets.
//!
//! These measure box-counting and correlation dimensions, not Hausdorff
//! dimension. The two can differ in general; at desk scale they are the
//! computable stand-ins, and checks against a theoretical dimension use
//! tolerance bands wide enough to absorb that gap and finite-size effects.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{distance, PointIndex};
use crate::sampling;
use crate::stats::{compensated_sum, linear_fit};

pub const DIMFIT_FORMAT_VERSION: u32 = 1;

/// Default number of scales in a sweep.
pub const DEFAULT_EPS_STEPS: usize = 20;

/// Fraction of scales dropped from each end of the sweep before fitting.
pub const DEFAULT_TRIM: f64 = 0.2;

/// Above this many points, pair statistics use a subsample of centres.
pub const EXACT_PAIR_LIMIT: usize = 20_000;

/// Number of centres drawn when subsampling.
pub const DEFAULT_SUBSAMPLE: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DimMethod {
    #[serde(rename = "boxcount")]
    BoxCount,
    #[serde(rename = "corrsum")]
    CorrelationSum,
}

impl fmt::Display for DimMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DimMethod::BoxCount => "boxcount",
            DimMethod::CorrelationSum => "corrsum",
        })
    }
}

impl FromStr for DimMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boxcount" => Ok(DimMethod::BoxCount),
            "corrsum" => Ok(DimMethod::CorrelationSum),
            other => Err(Error::Domain(format!("unknown method {other:?}"))),
        }
    }
}

/// A flat point cloud with stride `d`.
#[derive(Debug, Clone, Copy)]
pub struct Points<'a> {
    pub d: usize,
    pub coords: &'a [f64],
}

impl<'a> Points<'a> {
    pub fn new(d: usize, coords: &'a [f64]) -> Result<Self> {
        if d == 0 || !coords.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: coords.len() % d.max(1),
            });
        }
        Ok(Points { d, coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> &'a [f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    fn min_corner(&self) -> Vec<f64> {
        let mut lo = vec![f64::INFINITY; self.d];
        for p in self.coords.chunks_exact(self.d) {
            lo.iter_mut().zip(p).for_each(|(l, &x)| *l = l.min(x));
        }
        lo
    }

    /// Diagonal of the axis-aligned bounding box.
    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = vec![f64::INFINITY; self.d];
        let mut hi = vec![f64::NEG_INFINITY; self.d];
        for p in self.coords.chunks_exact(self.d) {
            for k in 0..self.d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        lo.iter()
            .zip(&hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }
}

/// Occupied cells of the grid of side `eps` anchored at `anchor`.
pub fn box_count_anchored(points: Points<'_>, eps: f64, anchor: &[f64]) -> usize {
    let mut cells = FxHashSet::default();
    for p in points.coords.chunks_exact(points.d) {
        let key: Vec<i64> = p
            .iter()
            .zip(anchor)
            .map(|(&x, &a)| ((x - a) / eps).floor() as i64)
            .collect();
        cells.insert(key);
    }
    cells.len()
}

/// Occupied cells of the grid of side `eps` anchored at the coordinate-wise minimum.
pub fn box_count(points: Points<'_>, eps: f64) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::Empty);
    }
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    Ok(box_count_anchored(points, eps, &points.min_corner()))
}

/// Box counts on a grid shifted by `shift * eps` along every axis.
pub fn box_counts_shifted(points: Points<'_>, eps_values: &[f64], shift: f64) -> Vec<usize> {
    let lo = points.min_corner();
    eps_values
        .par_iter()
        .map(|&eps| {
            let anchor: Vec<f64> = lo.iter().map(|&l| l + shift * eps).collect();
            box_count_anchored(points, eps, &anchor)
        })
        .collect()
}

/// `count` logarithmically spaced scales from `eps_max` down to `eps_min`.
pub fn log_scales(eps_max: f64, eps_min: f64, count: usize) -> Result<Vec<f64>> {
    if !(eps_min > 0.0 && eps_max > eps_min && eps_max.is_finite()) {
        return Err(Error::Domain(format!(
            "need 0 < eps_min < eps_max, got {eps_min} and {eps_max}"
        )));
    }
    if count < 2 {
        return Err(Error::Domain("need at least two scales".into()));
    }
    let ratio = (eps_min / eps_max).ln() / (count - 1) as f64;
    Ok((0..count)
        .map(|i| match i {
            0 => eps_max,
            _ if i == count - 1 => eps_min,
            _ => eps_max * (ratio * i as f64).exp(),
        })
        .collect())
}

/// Positive nearest-neighbour distances (of a seeded subsample of at most
/// `EXACT_PAIR_LIMIT` points, measured against the full set).
pub fn nearest_neighbor_distances(points: Points<'_>, seed: u64) -> Vec<f64> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let diag = points.bbox_diagonal().max(f64::MIN_POSITIVE);
    let cell = diag * (n as f64).powf(-1.0 / points.d as f64);
    let mut index = PointIndex::with_cell(points.d, cell.max(1e-300));
    for p in points.coords.chunks_exact(points.d) {
        index.insert(p).expect("points validated by caller");
    }
    let ids: Vec<usize> = if n > EXACT_PAIR_LIMIT {
        let mut rng = sampling::rng_from_seed(seed);
        let mut ids = sample(&mut rng, n, EXACT_PAIR_LIMIT).into_vec();
        ids.sort_unstable();
        ids
    } else {
        (0..n).collect()
    };
    ids.par_iter()
        .map(|&i| index.nearest_other(i).expect("at least two points").1)
        .filter(|&r| r > 0.0)
        .collect()
}

fn percentile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = (q * (values.len() - 1) as f64).round() as usize;
    values[pos]
}

/// Default sweep: `steps` log-spaced scales from a quarter of the bounding
/// box diagonal down to the 1st percentile of nearest-neighbour distances.
pub fn default_scales(points: Points<'_>, steps: usize, seed: u64) -> Result<Vec<f64>> {
    let mut nn = nearest_neighbor_distances(points, seed);
    if nn.is_empty() {
        return Err(Error::Degenerate("no two distinct points".into()));
    }
    let eps_min = percentile(&mut nn, 0.01);
    let eps_max = points.bbox_diagonal() / 4.0;
    log_scales(eps_max, eps_min.min(eps_max / 2.0), steps)
}

/// Log–log regression result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimFit {
    pub format_version: u32,
    pub method: DimMethod,
    /// Strictly decreasing.
    pub eps_values: Vec<f64>,
    pub stats: Vec<f64>,
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    /// Half-open index range `[start, end)` of the scales used in the fit.
    pub fit_window: (usize, usize),
    /// Subsample seed when pair statistics were subsampled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsample_seed: Option<u64>,
}

/// Drops the largest and smallest `DEFAULT_TRIM` fraction of scales.
pub fn default_window(len: usize) -> (usize, usize) {
    let cut = (DEFAULT_TRIM * len as f64).floor() as usize;
    (cut, len - cut)
}

/// Box counts above this fraction of the point count are treated as saturated.
pub const BOX_SATURATION: f64 = 0.1;
/// Fewest occupied boxes at a scale used in the default fit.
pub const MIN_BOXES: f64 = 10.0;
/// Correlation sums above this value are treated as saturated.
pub const CORR_SATURATION: f64 = 0.1;
/// Fewest counted pairs at a scale used in the default fit.
pub const MIN_PAIRS: f64 = 100.0;

/// Contiguous range of scales whose statistic lies in the scaling regime:
/// `MIN_BOXES <= N <= BOX_SATURATION * n` for box counts and
/// `MIN_PAIRS / (centres * (n − 1)) <= C <= CORR_SATURATION` for correlation
/// sums. `None` when fewer than four scales qualify.
pub fn scaling_window(
    method: DimMethod,
    stats: &[f64],
    n_points: usize,
    centres: usize,
) -> Option<(usize, usize)> {
    let n = n_points as f64;
    let (lo, hi) = match method {
        DimMethod::BoxCount => (MIN_BOXES, BOX_SATURATION * n),
        DimMethod::CorrelationSum => (
            MIN_PAIRS / (centres as f64 * (n - 1.0)).max(1.0),
            CORR_SATURATION,
        ),
    };
    let ok = |s: f64| s >= lo && s <= hi;
    let start = stats.iter().position(|&s| ok(s))?;
    let end = start + stats[start..].iter().take_while(|&&s| ok(s)).count();
    (end - start >= 4).then_some((start, end))
}

/// Fits the dimension to per-scale statistics. Box counts regress
/// `log N` on `log(1/eps)`; correlation sums regress `log C` on `log eps`.
/// Scales whose statistic is zero are skipped.
pub fn fit_dimension(
    method: DimMethod,
    eps_values: &[f64],
    stats: &[f64],
    window: Option<(usize, usize)>,
) -> Result<DimFit> {
    if eps_values.len() != stats.len() {
        return Err(Error::Domain("eps and statistics lengths differ".into()));
    }
    if eps_values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Domain(
            "eps values must be strictly decreasing".into(),
        ));
    }
    let (start, end) = window.unwrap_or_else(|| default_window(eps_values.len()));
    if start >= end || end > eps_values.len() || end - start < 4 {
        return Err(Error::InsufficientData(format!(
            "fit window [{start}, {end}) needs at least 4 of {} scales",
            eps_values.len()
        )));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in start..end {
        if stats[i] > 0.0 {
            let le = eps_values[i].ln();
            xs.push(match method {
                DimMethod::BoxCount => -le,
                DimMethod::CorrelationSum => le,
            });
            ys.push(stats[i].ln());
        }
    }
    let fit = linear_fit(&xs, &ys).ok_or_else(|| {
        Error::Degenerate(format!("only {} usable scales in the fit window", xs.len()))
    })?;
    Ok(DimFit {
        format_version: DIMFIT_FORMAT_VERSION,
        method,
        eps_values: eps_values.to_vec(),
        stats: stats.to_vec(),
        slope: fit.slope,
        stderr: fit.slope_stderr,
        intercept: fit.intercept,
        fit_window: (start, end),
        subsample_seed: None,
    })
}

/// Which centres pair statistics iterate over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSampling {
    pub limit: usize,
    pub subsample: usize,
    pub seed: u64,
}

impl Default for PairSampling {
    fn default() -> Self {
        PairSampling {
            limit: EXACT_PAIR_LIMIT,
            subsample: DEFAULT_SUBSAMPLE,
            seed: 0,
        }
    }
}

impl PairSampling {
    fn centres(&self, n: usize) -> (Vec<usize>, Option<u64>) {
        if n > self.limit {
            let mut rng = sampling::rng_from_seed(self.seed);
            let mut ids = sample(&mut rng, n, self.subsample.min(n)).into_vec();
            ids.sort_unstable();
            (ids, Some(self.seed))
        } else {
            ((0..n).collect(), None)
        }
    }
}

fn check_pairs(points: Points<'_>) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::InsufficientData("need at least two points".into()));
    }
    let first = points.get(0);
    if (1..points.len()).all(|i| points.get(i) == first) {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    Ok(())
}

/// Correlation sums at several scales at once, with the subsample seed if
/// centres were subsampled. `C(eps)` is the fraction of ordered pairs
/// `(i, j)`, `i != j`, with `0 < |p_i − p_j| <= eps`.
pub fn correlation_sums(
    points: Points<'_>,
    eps_values: &[f64],
    sampling: PairSampling,
) -> Result<(Vec<f64>, Option<u64>)> {
    check_pairs(points)?;
    if eps_values.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Domain("eps values must be positive".into()));
    }
    let n = points.len();
    let mut ascending: Vec<(f64, usize)> = eps_values.iter().copied().zip(0..).collect();
    ascending.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sorted_eps: Vec<f64> = ascending.iter().map(|a| a.0).collect();
    let max_eps = *sorted_eps.last().expect("non-empty");

    let mut index = PointIndex::with_cell(points.d, max_eps);
    for p in points.coords.chunks_exact(points.d) {
        index.insert(p)?;
    }
    let (centres, seed) = sampling.centres(n);
    let m = sorted_eps.len();
    let hist = centres
        .par_iter()
        .map(|&i| {
            let mut h = vec![0u64; m];
            index
                .for_each_within(points.get(i), max_eps, |j, dist| {
                    if j != i && dist > 0.0 {
                        let slot = sorted_eps.partition_point(|&e| e < dist);
                        h[slot] += 1;
                    }
                })
                .expect("query validated");
            h
        })
        .reduce(
            || vec![0u64; m],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let denom = centres.len() as f64 * (n - 1) as f64;
    let mut cumulative = 0u64;
    let mut out = vec![0.0; m];
    for (slot, &(_, original)) in ascending.iter().enumerate() {
        cumulative += hist[slot];
        out[original] = cumulative as f64 / denom;
    }
    Ok((out, seed))
}

pub fn correlation_sum(points: Points<'_>, eps: f64) -> Result<f64> {
    Ok(correlation_sums(points, &[eps], PairSampling::default())?.0[0])
}

/// Mean of `|p_i − p_j|^{-a}` over ordered pairs of distinct locations.
pub fn energy_estimate(points: Points<'_>, a: f64, sampling: PairSampling) -> Result<f64> {
    check_pairs(points)?;
    let n = points.len();
    let (centres, _) = sampling.centres(n);
    let partial: Vec<(f64, u64)> = centres
        .par_iter()
        .map(|&i| {
            let p = points.get(i);
            let mut count = 0u64;
            let s = compensated_sum((0..n).filter(|&j| j != i).filter_map(|j| {
                let r = distance(p, points.get(j));
                (r > 0.0).then(|| {
                    count += 1;
                    r.powf(-a)
                })
            }));
            (s, count)
        })
        .collect();
    let total = compensated_sum(partial.iter().map(|x| x.0));
    let pairs: u64 = partial.iter().map(|x| x.1).sum();
    Ok(total / pairs as f64)
}

/// Scale sweep for [`estimate_dimension`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sweep {
    pub eps_min: Option<f64>,
    pub eps_max: Option<f64>,
    pub steps: Option<usize>,
    pub seed: u64,
}

impl Sweep {
    pub fn scales(&self, points: Points<'_>) -> Result<Vec<f64>> {
        let steps = self.steps.unwrap_or(DEFAULT_EPS_STEPS);
        match (self.eps_min, self.eps_max) {
            (Some(lo), Some(hi)) => log_scales(hi, lo, steps),
            (lo, hi) => {
                let defaults = default_scales(points, steps, self.seed)?;
                let hi = hi.unwrap_or(defaults[0]);
                let lo = lo.unwrap_or(defaults[defaults.len() - 1]);
                log_scales(hi, lo, steps)
            }
        }
    }
}

/// Sweep, measure and fit with the default window.
pub fn estimate_dimension(points: Points<'_>, method: DimMethod, sweep: &Sweep) -> Result<DimFit> {
    if points.is_empty() {
        return Err(Error::Empty);
    }
    let eps = sweep.scales(points)?;
    match method {
        DimMethod::BoxCount => {
            let counts: Vec<f64> = box_counts_shifted(points, &eps, 0.0)
                .into_iter()
                .map(|c| c as f64)
                .collect();
            let window = scaling_window(method, &counts, points.len(), points.len())
                .unwrap_or_else(|| default_window(eps.len()));
            fit_dimension(method, &eps, &counts, Some(window))
        }
        DimMethod::CorrelationSum => {
            let sampling = PairSampling {
                seed: sweep.seed,
                ..PairSampling::default()
            };
            let (sums, seed) = correlation_sums(points, &eps, sampling)?;
            let centres = sampling.centres(points.len()).0.len();
            let window = scaling_window(method, &sums, points.len(), centres)
                .unwrap_or_else(|| default_window(eps.len()));
            let mut fit = fit_dimension(method, &eps, &sums, Some(window))?;
            fit.subsample_seed = seed;
            Ok(fit)
        }
    }
}
