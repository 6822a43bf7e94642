//! Discrete-time "agoraphobic" point processes in the unit ball.
//!
//! Both models grow a rooted tree of points one accepted point at a time,
//! starting from the origin. Each step first runs a single
//! Bernoulli(θ/(θ+n−1)) trial (with 0/0 = 1); on success the step appends a
//! uniform point of the unit ball as a new seed hanging off the root.
//! Otherwise proposals are drawn until one is accepted:
//!
//! * smooth: `X` uniform in the ball, accepted with probability
//!   `exp(-Δ n^{1/α})` where `Δ` is the distance to the nearest non-root
//!   point, which becomes the parent;
//! * hard threshold: `Y` uniform in the ball of radius `n^{-1/α}` about a
//!   uniformly chosen non-root point `z` (the parent), accepted with
//!   probability `1/k`, `k` counting non-root points within `r_count` of `Y`.
//!
//! Here `n` is the current number of points including the root.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{distance, PointId, PointIndex};
use crate::sampling::{self, SimRng};

pub const DEFAULT_MAX_REJECTIONS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgoraModel {
    #[serde(rename = "smooth")]
    Smooth,
    #[serde(rename = "hard")]
    HardThreshold,
}

impl AgoraModel {
    pub fn name(self) -> &'static str {
        match self {
            AgoraModel::Smooth => "smooth",
            AgoraModel::HardThreshold => "hard",
        }
    }
}

impl fmt::Display for AgoraModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgoraModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth" => Ok(AgoraModel::Smooth),
            "hard" => Ok(AgoraModel::HardThreshold),
            other => Err(Error::Domain(format!("unknown discrete model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgoraConfig {
    pub d: usize,
    /// Target fractal dimension, `0 < alpha < d`.
    pub alpha: f64,
    /// Innovation parameter, `theta >= 0`.
    pub theta: f64,
    pub n_points: usize,
    pub model: AgoraModel,
    #[serde(default = "default_max_rejections")]
    pub max_rejections_per_point: u64,
    /// Counting radius of the hard model; `None` means `n^{-1/alpha}`.
    #[serde(default)]
    pub r_count: Option<f64>,
    pub seed: u64,
}

fn default_max_rejections() -> u64 {
    DEFAULT_MAX_REJECTIONS
}

impl AgoraConfig {
    pub fn new(d: usize, alpha: f64, theta: f64, n_points: usize, model: AgoraModel) -> Self {
        AgoraConfig {
            d,
            alpha,
            theta,
            n_points,
            model,
            max_rejections_per_point: DEFAULT_MAX_REJECTIONS,
            r_count: None,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Domain(format!(
                "dimension must be >= 2, got {}",
                self.d
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < self.d as f64) {
            return Err(Error::Domain(format!(
                "alpha must lie in (0, {}), got {}",
                self.d, self.alpha
            )));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::Domain(format!(
                "theta must be >= 0, got {}",
                self.theta
            )));
        }
        if self.max_rejections_per_point == 0 {
            return Err(Error::Domain(
                "max_rejections_per_point must be positive".into(),
            ));
        }
        if let Some(r) = self.r_count {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Domain(format!("r_count must be positive, got {r}")));
            }
        }
        Ok(())
    }

    /// Proposal radius (and default counting radius) when the tree holds `n` points.
    pub fn radius(&self, n: usize) -> f64 {
        (n as f64).powf(-1.0 / self.alpha)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgoraStats {
    pub proposals: u64,
    pub rejections: u64,
    pub seeds: u64,
}

/// Output of the discrete models: points in arrival order with parent edges.
#[derive(Debug, Clone)]
pub struct PointTree {
    index: PointIndex,
    parent: Vec<usize>,
    is_seed: Vec<bool>,
    pub stats: AgoraStats,
}

impl PartialEq for PointTree {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self.coords() == other.coords()
            && self.parent == other.parent
            && self.is_seed == other.is_seed
            && self.stats == other.stats
    }
}

/// Parent value stored for the root.
pub const NO_PARENT: usize = usize::MAX;

impl PointTree {
    /// The root-only tree.
    pub fn new(d: usize) -> Self {
        let mut index = PointIndex::new(d);
        index.insert(&vec![0.0; d]).expect("origin is finite");
        PointTree {
            index,
            parent: vec![NO_PARENT],
            is_seed: vec![false],
            stats: AgoraStats::default(),
        }
    }

    /// Rebuilds a tree from raw columns, checking the structural invariants.
    pub fn from_parts(
        d: usize,
        coords: &[f64],
        parents: &[Option<usize>],
        is_seed: &[bool],
        stats: AgoraStats,
    ) -> Result<Self> {
        let n = parents.len();
        if n == 0 || coords.len() != n * d || is_seed.len() != n {
            return Err(Error::Domain("column lengths disagree".into()));
        }
        if coords[..d].iter().any(|&x| x != 0.0) || parents[0].is_some() || is_seed[0] {
            return Err(Error::Domain("point 0 must be the origin root".into()));
        }
        let mut tree = PointTree::new(d);
        tree.stats = stats;
        for k in 1..n {
            let p = match parents[k] {
                Some(p) if p < k => p,
                _ => return Err(Error::Domain(format!("bad parent for point {k}"))),
            };
            if is_seed[k] != (p == 0) {
                return Err(Error::Domain(format!(
                    "seed flag of point {k} disagrees with parent"
                )));
            }
            tree.push(&coords[k * d..(k + 1) * d], p, is_seed[k])?;
        }
        Ok(tree)
    }

    fn push(&mut self, p: &[f64], parent: usize, seed: bool) -> Result<PointId> {
        let id = self.index.insert(p)?;
        self.parent.push(parent);
        self.is_seed.push(seed);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    pub fn point(&self, id: usize) -> &[f64] {
        self.index.point(id)
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        match self.parent[id] {
            NO_PARENT => None,
            p => Some(p),
        }
    }

    pub fn is_seed(&self, id: usize) -> bool {
        self.is_seed[id]
    }

    pub fn seed_count(&self) -> usize {
        self.is_seed.iter().filter(|&&s| s).count()
    }

    /// All points, flat with stride `d`, root first.
    pub fn coords(&self) -> &[f64] {
        self.index.coords()
    }

    pub fn index(&self) -> &PointIndex {
        &self.index
    }
}

/// Distance from `x` to the nearest non-root point and that point's index
/// (lowest index on ties).
pub fn min_dist(x: &[f64], tree: &PointTree) -> Result<(f64, usize)> {
    let (id, dist) = tree.index.nearest(x, true)?;
    Ok((dist, id))
}

/// Probability of seeding a new clump when the tree has `n` points.
pub fn seed_probability(theta: f64, n: usize) -> f64 {
    let denom = theta + (n as f64 - 1.0);
    if denom == 0.0 {
        1.0
    } else {
        theta / denom
    }
}

/// Acceptance probability of the smooth model.
pub fn smooth_acceptance_probability(delta: f64, n: usize, alpha: f64) -> f64 {
    (-delta * (n as f64).powf(1.0 / alpha)).exp()
}

/// Expected number of seeds after `n` points: `Σ_{k<n} θ/(θ+k)`.
pub fn expected_seed_count(theta: f64, n: usize) -> f64 {
    (1..=n).map(|k| seed_probability(theta, k)).sum()
}

/// Asymptotic seed count `θ log((n+θ)/θ)`.
pub fn seed_count_asymptote(theta: f64, n: usize) -> f64 {
    theta * ((n as f64 + theta) / theta).ln()
}

fn try_seed(tree: &mut PointTree, cfg: &AgoraConfig, rng: &mut SimRng) -> Result<bool> {
    let n = tree.len();
    if rng.random::<f64>() < seed_probability(cfg.theta, n) {
        let mut x = vec![0.0; cfg.d];
        sampling::uniform_in_ball(&mut x, 1.0, rng);
        tree.stats.proposals += 1;
        tree.stats.seeds += 1;
        tree.push(&x, 0, true)?;
        return Ok(true);
    }
    Ok(false)
}

fn guard(tree: &PointTree, cfg: &AgoraConfig, rejected: u64) -> Result<()> {
    if rejected >= cfg.max_rejections_per_point {
        return Err(Error::RejectionGuard {
            index: tree.len(),
            rejections: rejected,
            stats: tree.stats,
        });
    }
    Ok(())
}

/// One step of the smooth minimum-distance model.
pub fn step_smooth(tree: &mut PointTree, cfg: &AgoraConfig, rng: &mut SimRng) -> Result<()> {
    if try_seed(tree, cfg, rng)? {
        return Ok(());
    }
    let n = tree.len();
    let rate = (n as f64).powf(1.0 / cfg.alpha);
    tree.index.set_scale(rate.recip());
    let mut x = vec![0.0; cfg.d];
    let mut rejected = 0;
    loop {
        sampling::uniform_in_ball(&mut x, 1.0, rng);
        tree.stats.proposals += 1;
        // Accepting with probability exp(-rate Δ) is the event
        // Δ <= -ln(U)/rate, so only a bounded nearest query is needed.
        let reach = -sampling::open_unit(rng).ln() / rate;
        if let Some((parent, _)) = tree.index.nearest_within(&x, reach, true)? {
            tree.push(&x, parent, false)?;
            return Ok(());
        }
        tree.stats.rejections += 1;
        rejected += 1;
        guard(tree, cfg, rejected)?;
    }
}

/// Hard-threshold acceptance trial for proposal `y`: returns whether it was
/// accepted and the neighbour count `k`. `k = 0` (only possible with a
/// counting radius below the proposal radius) is accepted outright.
pub fn hard_acceptance<R: Rng + ?Sized>(
    tree: &PointTree,
    y: &[f64],
    r_count: f64,
    rng: &mut R,
) -> Result<(bool, usize)> {
    let k = tree.index.count_within(y, r_count, true)?;
    let accepted = k <= 1 || rng.random_range(0..k) == 0;
    Ok((accepted, k))
}

/// One step of the hard-threshold model.
pub fn step_hard(tree: &mut PointTree, cfg: &AgoraConfig, rng: &mut SimRng) -> Result<()> {
    if try_seed(tree, cfg, rng)? {
        return Ok(());
    }
    let n = tree.len();
    if n < 2 {
        return Err(Error::Empty);
    }
    let radius = cfg.radius(n);
    let r_count = cfg.r_count.unwrap_or(radius);
    tree.index.set_scale(r_count.max(radius));
    let mut y = vec![0.0; cfg.d];
    let mut rejected = 0;
    loop {
        let z = rng.random_range(1..n);
        loop {
            sampling::uniform_in_ball(&mut y, radius, rng);
            for (yk, zk) in y.iter_mut().zip(tree.point(z)) {
                *yk += zk;
            }
            // Rounding in the sum must not push Y past the radius.
            if distance(&y, tree.point(z)) <= radius {
                break;
            }
        }
        tree.stats.proposals += 1;
        let (accepted, _) = hard_acceptance(tree, &y, r_count, rng)?;
        if accepted {
            tree.push(&y, z, false)?;
            return Ok(());
        }
        tree.stats.rejections += 1;
        rejected += 1;
        guard(tree, cfg, rejected)?;
    }
}

/// Runs `cfg.n_points` steps on the given RNG stream.
pub fn generate_discrete_with_rng(cfg: &AgoraConfig, rng: &mut SimRng) -> Result<PointTree> {
    cfg.validate()?;
    let mut tree = PointTree::new(cfg.d);
    let step = match cfg.model {
        AgoraModel::Smooth => step_smooth,
        AgoraModel::HardThreshold => step_hard,
    };
    for _ in 0..cfg.n_points {
        if let Err(source) = step(&mut tree, cfg, rng) {
            return Err(Error::Partial {
                partial: Box::new(tree),
                source: Box::new(source),
            });
        }
    }
    Ok(tree)
}

/// Runs the configured model on the stream seeded by `cfg.seed`.
pub fn generate_discrete(cfg: &AgoraConfig) -> Result<PointTree> {
    let mut rng = sampling::rng_from_seed(cfg.seed);
    generate_discrete_with_rng(cfg, &mut rng)
}

/// Independent replicas on per-replica streams, in parallel.
pub fn generate_discrete_replicas(cfg: &AgoraConfig, replicas: usize) -> Result<Vec<PointTree>> {
    use rayon::prelude::*;
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::replica_rng(cfg.seed, i as u64);
            generate_discrete_with_rng(cfg, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::distance;
    use crate::sampling::rng_from_seed;

    fn cfg(model: AgoraModel, theta: f64, n: usize) -> AgoraConfig {
        AgoraConfig::new(2, 1.5, theta, n, model).with_seed(17)
    }

    fn brute_min(x: &[f64], pts: &[Vec<f64>]) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (i, p) in pts.iter().enumerate().skip(1) {
            let d = distance(x, p);
            if d < best.0 {
                best = (d, i);
            }
        }
        best
    }

    #[test]
    fn min_dist_cases() {
        let mut tree = PointTree::new(2);
        assert!(matches!(min_dist(&[0.0, 0.0], &tree), Err(Error::Empty)));
        tree.push(&[1.0, 0.0], 0, true).unwrap();
        assert_eq!(min_dist(&[0.0, 0.0], &tree).unwrap(), (1.0, 1));
        assert_eq!(min_dist(&[1.0, 0.0], &tree).unwrap(), (0.0, 1));
    }

    #[test]
    fn min_dist_matches_exhaustive_scan() {
        let mut rng = rng_from_seed(3);
        let mut tree = PointTree::new(2);
        let mut pts = vec![vec![0.0, 0.0]];
        for _ in 0..100 {
            let mut p = vec![0.0; 2];
            sampling::uniform_in_ball(&mut p, 1.0, &mut rng);
            tree.push(&p, 0, true).unwrap();
            pts.push(p);
        }
        for _ in 0..100 {
            let mut q = vec![0.0; 2];
            sampling::uniform_in_ball(&mut q, 1.5, &mut rng);
            assert_eq!(min_dist(&q, &tree).unwrap(), brute_min(&q, &pts));
        }
    }

    #[test]
    fn seeding_probabilities() {
        assert_eq!(seed_probability(0.0, 1), 1.0);
        assert_eq!(seed_probability(0.0, 5), 0.0);
        assert_eq!(seed_probability(2.0, 1), 1.0);
        assert_eq!(seed_probability(2.0, 3), 0.5);
        assert_eq!(smooth_acceptance_probability(0.0, 1000, 1.5), 1.0);
    }

    #[test]
    fn first_point_is_a_seed_even_without_innovation() {
        let tree = generate_discrete(&cfg(AgoraModel::Smooth, 0.0, 1)).unwrap();
        assert_eq!(tree.len(), 2);
        assert!(tree.is_seed(1));
        assert_eq!(tree.parent(1), Some(0));
        assert!(distance(tree.point(1), &[0.0, 0.0]) <= 1.0);

        let tree = generate_discrete(&cfg(AgoraModel::Smooth, 0.0, 300)).unwrap();
        assert_eq!(tree.seed_count(), 1);
    }

    #[test]
    fn zero_points_is_root_only() {
        let tree = generate_discrete(&cfg(AgoraModel::HardThreshold, 1.0, 0)).unwrap();
        assert_eq!(tree.len(), 1);
        assert_eq!(tree.parent(0), None);
    }

    #[test]
    fn lone_isolated_point_always_accepts() {
        let mut tree = PointTree::new(2);
        tree.push(&[0.5, 0.5], 0, true).unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..100 {
            let (accepted, k) = hard_acceptance(&tree, &[0.5, 0.6], 0.2, &mut rng).unwrap();
            assert!(accepted);
            assert_eq!(k, 1);
        }
        let c = cfg(AgoraModel::HardThreshold, 0.0, 2);
        step_hard(&mut tree, &c, &mut rng).unwrap();
        assert_eq!(tree.parent(2), Some(1));
        assert!(!tree.is_seed(2));
    }

    #[test]
    fn smooth_parents_are_nearest_points() {
        let tree = generate_discrete(&cfg(AgoraModel::Smooth, 1.0, 2000)).unwrap();
        let d = tree.dim();
        for k in 1..tree.len() {
            if tree.is_seed(k) {
                assert_eq!(tree.parent(k), Some(0));
                continue;
            }
            let x = tree.point(k);
            let mut best = (f64::INFINITY, 0);
            for j in 1..k {
                let dist = distance(x, &tree.coords()[j * d..(j + 1) * d]);
                if dist < best.0 {
                    best = (dist, j);
                }
            }
            assert_eq!(tree.parent(k), Some(best.1), "point {k}");
        }
    }

    #[test]
    fn smooth_points_stay_in_unit_ball() {
        let tree = generate_discrete(&cfg(AgoraModel::Smooth, 2.0, 500)).unwrap();
        for k in 0..tree.len() {
            assert!(distance(tree.point(k), &[0.0, 0.0]) <= 1.0);
        }
    }

    #[test]
    fn hard_points_within_radius_of_parent() {
        let c = cfg(AgoraModel::HardThreshold, 1.0, 5000);
        let tree = generate_discrete(&c).unwrap();
        for k in 1..tree.len() {
            let p = tree.parent(k).unwrap();
            assert_eq!(tree.is_seed(k), p == 0);
            if p != 0 {
                assert!(distance(tree.point(k), tree.point(p)) <= c.radius(k));
            }
        }
        assert_eq!(tree.stats.seeds as usize, tree.seed_count());
        assert_eq!(
            tree.stats.proposals,
            tree.stats.rejections + tree.len() as u64 - 1
        );
    }

    #[test]
    fn generation_is_deterministic() {
        for model in [AgoraModel::Smooth, AgoraModel::HardThreshold] {
            let c = cfg(model, 1.0, 800);
            assert_eq!(
                generate_discrete(&c).unwrap(),
                generate_discrete(&c).unwrap()
            );
        }
    }

    #[test]
    fn rejection_guard_reports_partial_tree() {
        // Huge n^{1/alpha} makes smooth acceptance essentially impossible.
        let mut c = AgoraConfig::new(2, 0.05, 0.0, 5, AgoraModel::Smooth);
        c.max_rejections_per_point = 50;
        match generate_discrete(&c) {
            Err(Error::Partial { partial, source }) => {
                assert_eq!(partial.len(), 2);
                assert!(matches!(
                    *source,
                    Error::RejectionGuard { rejections: 50, .. }
                ));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_configs() {
        let mut c = cfg(AgoraModel::Smooth, 1.0, 10);
        c.alpha = 2.0;
        assert!(c.validate().is_err());
        c.alpha = 1.5;
        c.d = 1;
        assert!(c.validate().is_err());
        c.d = 2;
        c.theta = -1.0;
        assert!(c.validate().is_err());
        c.theta = 0.0;
        c.r_count = Some(0.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn from_parts_round_trip_and_checks() {
        let tree = generate_discrete(&cfg(AgoraModel::HardThreshold, 2.0, 200)).unwrap();
        let parents: Vec<_> = (0..tree.len()).map(|k| tree.parent(k)).collect();
        let seeds: Vec<_> = (0..tree.len()).map(|k| tree.is_seed(k)).collect();
        let back = PointTree::from_parts(2, tree.coords(), &parents, &seeds, tree.stats).unwrap();
        assert_eq!(back, tree);

        let mut bad = seeds.clone();
        bad[5] = !bad[5];
        assert!(PointTree::from_parts(2, tree.coords(), &parents, &bad, tree.stats).is_err());
    }

    #[test]
    fn expected_seed_counts() {
        assert_eq!(expected_seed_count(0.0, 10), 1.0);
        let e = expected_seed_count(2.0, 10_000);
        assert!((e - 17.58).abs() < 0.01, "{e}");
        assert!((seed_count_asymptote(2.0, 10_000) - 17.03).abs() < 0.01);
    }
}
