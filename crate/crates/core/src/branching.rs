//! Continuous-time branching random walk in `R^d`.
//!
//! Every vertex born at time `s` reproduces at rate `rho / t` for `t > s`,
//! i.e. its children's log-birth-times form a Poisson process of rate `rho`
//! started at `log s`. A child born at time `t` is displaced from its parent
//! by a draw from the profile scaled by `t^{-1/d}`.
//!
//! The simulation keeps one pending birth per live vertex in a min-heap.
//! Memorylessness of the log-time Poisson process means the next point after
//! any time can be drawn afresh, so each pop creates one vertex and pushes
//! two entries: the parent's next birth and the newborn's first.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index;
use crate::profiles::{sample_displacement_into, ProcessParams, SpatialProfile};
use crate::sampling::{self, SimRng};
use crate::stats;

/// Birth times beyond this are treated as overflow.
pub const MAX_BIRTH_TIME: f64 = 1e300;

/// Default allowance for a single generation run.
pub const DEFAULT_MEMORY_LIMIT: usize = 4 << 30;

/// Fraction of log-time (the latest part) used by [`growth_exponent`].
pub const DEFAULT_GROWTH_WINDOW: f64 = 0.8;

/// Minimum number of births per trace accepted by [`growth_exponent`].
pub const MIN_GROWTH_BIRTHS: usize = 100;

/// Next point after `tau_current` of a Poisson process with intensity `rho/t dt`.
pub fn next_child_time<R: Rng + ?Sized>(tau_current: f64, rho: f64, rng: &mut R) -> f64 {
    tau_current * (sampling::unit_exponential(rng) / rho).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Stopped on reaching the vertex budget; horizon is the last birth time.
    VertexBudget,
    /// Stopped when the next pending birth exceeded the time horizon.
    TimeHorizon,
    /// Nothing left to simulate (only possible with a depth cap of 0).
    Exhausted,
}

/// Stopping rules for [`generate_tree`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_vertices: usize,
    pub max_time: Option<f64>,
    /// Vertices at this depth never reproduce. Levels up to the cap are
    /// still exactly those of the time-`T` tree.
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default = "default_memory_limit")]
    pub memory_limit: usize,
}

fn default_memory_limit() -> usize {
    DEFAULT_MEMORY_LIMIT
}

impl Budget {
    pub fn vertices(max_vertices: usize) -> Self {
        Budget {
            max_vertices,
            max_time: None,
            max_depth: None,
            memory_limit: DEFAULT_MEMORY_LIMIT,
        }
    }

    /// Time-horizon run with no practical vertex cap.
    pub fn time(max_time: f64) -> Self {
        Budget {
            max_vertices: usize::MAX,
            max_time: Some(max_time),
            max_depth: None,
            memory_limit: DEFAULT_MEMORY_LIMIT,
        }
    }

    pub fn with_max_time(mut self, t: f64) -> Self {
        self.max_time = Some(t);
        self
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = Some(depth);
        self
    }

    pub fn with_memory_limit(mut self, bytes: usize) -> Self {
        self.memory_limit = bytes;
        self
    }
}

/// Borrowed view of one vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex<'a> {
    pub id: usize,
    pub parent: Option<usize>,
    pub tau: f64,
    pub chi: &'a [f64],
    pub depth: usize,
}

/// A realized tree: every vertex with birth time at most `horizon`, stored
/// flat in birth order (root = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchingTree {
    pub params: ProcessParams,
    pub horizon: f64,
    pub truncation: Truncation,
    #[serde(default)]
    pub max_depth: Option<usize>,
    parent: Vec<usize>,
    tau: Vec<f64>,
    depth: Vec<usize>,
    chi: Vec<f64>,
}

/// Parent value stored for the root.
pub const NO_PARENT: usize = usize::MAX;

impl BranchingTree {
    fn root_only(params: ProcessParams, max_depth: Option<usize>) -> Self {
        let d = params.d;
        BranchingTree {
            params,
            horizon: 1.0,
            truncation: Truncation::VertexBudget,
            max_depth,
            parent: vec![NO_PARENT],
            tau: vec![1.0],
            depth: vec![0],
            chi: vec![0.0; d],
        }
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.params.d
    }

    pub fn vertex(&self, id: usize) -> Vertex<'_> {
        Vertex {
            id,
            parent: self.parent(id),
            tau: self.tau[id],
            chi: self.chi(id),
            depth: self.depth[id],
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex<'_>> + '_ {
        (0..self.len()).map(|i| self.vertex(i))
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        match self.parent[id] {
            NO_PARENT => None,
            p => Some(p),
        }
    }

    pub fn tau(&self, id: usize) -> f64 {
        self.tau[id]
    }

    pub fn taus(&self) -> &[f64] {
        &self.tau
    }

    pub fn depth(&self, id: usize) -> usize {
        self.depth[id]
    }

    pub fn depths(&self) -> &[usize] {
        &self.depth
    }

    pub fn chi(&self, id: usize) -> &[f64] {
        let d = self.params.d;
        &self.chi[id * d..(id + 1) * d]
    }

    /// All locations, flat with stride `d`.
    pub fn coords(&self) -> &[f64] {
        &self.chi
    }

    /// Checks the structural invariants: root at time 1 and the origin,
    /// parents precede children, birth times strictly increase with id and
    /// exceed the parent's, depth is parent depth plus one.
    pub fn check_invariants(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if self.tau.first() != Some(&1.0) || self.parent[0] != NO_PARENT || self.depth[0] != 0 {
            return bad("root must be born at time 1 with no parent".into());
        }
        if self.chi(0).iter().any(|&x| x != 0.0) {
            return bad("root must sit at the origin".into());
        }
        for v in 1..self.len() {
            let p = self.parent[v];
            if p >= v {
                return bad(format!("vertex {v} has parent {p}"));
            }
            if self.tau[v] <= self.tau[v - 1] {
                return bad(format!("birth times not increasing at {v}"));
            }
            if self.tau[v] <= self.tau[p] {
                return bad(format!("vertex {v} born before its parent"));
            }
            if self.depth[v] != self.depth[p] + 1 {
                return bad(format!("vertex {v} has inconsistent depth"));
            }
        }
        Ok(())
    }

    /// Reassembles a tree from raw columns, checking invariants.
    pub fn from_parts(
        params: ProcessParams,
        horizon: f64,
        truncation: Truncation,
        parents: Vec<Option<usize>>,
        tau: Vec<f64>,
        chi: Vec<f64>,
    ) -> Result<Self> {
        let n = tau.len();
        if parents.len() != n || chi.len() != n * params.d || n == 0 {
            return Err(Error::Domain("column lengths disagree".into()));
        }
        let mut depth = vec![0usize; n];
        let mut parent = vec![NO_PARENT; n];
        for (v, p) in parents.iter().enumerate() {
            match *p {
                None if v == 0 => {}
                Some(p) if p < v => {
                    parent[v] = p;
                    depth[v] = depth[p] + 1;
                }
                _ => return Err(Error::Domain(format!("bad parent for vertex {v}"))),
            }
        }
        let tree = BranchingTree {
            params,
            horizon,
            truncation,
            max_depth: None,
            parent,
            tau,
            depth,
            chi,
        };
        tree.check_invariants()?;
        Ok(tree)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthEvent {
    pub t: f64,
    pub n: usize,
}

/// Population size after every birth.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GrowthTrace {
    pub events: Vec<GrowthEvent>,
}

impl GrowthTrace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    time: f64,
    vertex: usize,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.vertex.cmp(&other.vertex))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn bytes_per_vertex(d: usize) -> usize {
    // parent + depth + tau + chi + heap entry + trace event
    3 * 8 + 8 * d + 16 + 16
}

/// Simulates the tree up to the first of the stopping rules in `budget`.
pub fn generate_tree(
    params: &ProcessParams,
    budget: &Budget,
    rng: &mut SimRng,
) -> Result<(BranchingTree, GrowthTrace)> {
    params.validate()?;
    if budget.max_vertices == 0 {
        return Err(Error::Domain("max_vertices must be at least 1".into()));
    }
    if let Some(t) = budget.max_time {
        if !(t >= 1.0) {
            return Err(Error::Domain(format!("max_time must be >= 1, got {t}")));
        }
    }
    let d = params.d;
    let rho = params.rho;
    let beta = params.beta();
    let per_vertex = bytes_per_vertex(d);

    let mut tree = BranchingTree::root_only(params.clone(), budget.max_depth);
    let mut trace = GrowthTrace::default();
    let mut heap = BinaryHeap::new();
    let may_reproduce = |depth: usize| budget.max_depth.is_none_or(|cap| depth < cap);
    if may_reproduce(0) {
        heap.push(Reverse(Pending {
            time: next_child_time(1.0, rho, rng),
            vertex: 0,
        }));
    }
    let mut displacement = vec![0.0; d];

    loop {
        let n = tree.len();
        if n >= budget.max_vertices {
            tree.truncation = Truncation::VertexBudget;
            tree.horizon = tree.tau[n - 1];
            break;
        }
        let Some(&Reverse(next)) = heap.peek() else {
            tree.truncation = Truncation::Exhausted;
            tree.horizon = budget.max_time.unwrap_or(tree.tau[n - 1]);
            break;
        };
        if let Some(limit) = budget.max_time {
            if next.time > limit {
                tree.truncation = Truncation::TimeHorizon;
                tree.horizon = limit;
                break;
            }
        }
        if !(next.time <= MAX_BIRTH_TIME) {
            return Err(Error::TimeOverflow(next.time));
        }
        if n.saturating_add(1).saturating_mul(per_vertex) > budget.memory_limit {
            return Err(Error::Resource(format!(
                "{} vertices exceed the memory limit of {} bytes",
                n + 1,
                budget.memory_limit
            )));
        }
        heap.pop();

        let parent = next.vertex;
        let t = next.time;
        let child = n;
        let bound = (t / beta).powf(-1.0 / d as f64);
        loop {
            sample_displacement_into(params.profile, t / beta, &mut displacement, rng);
            for (k, dx) in displacement.iter().enumerate() {
                let x = tree.chi[parent * d + k] + dx;
                tree.chi.push(x);
            }
            // Rounding in the sum must not break the cutoff on stored coordinates.
            if params.profile != SpatialProfile::HardCutoff
                || index::distance(
                    &tree.chi[parent * d..(parent + 1) * d],
                    &tree.chi[child * d..],
                ) <= bound
            {
                break;
            }
            tree.chi.truncate(child * d);
        }
        let depth = tree.depth[parent] + 1;
        tree.parent.push(parent);
        tree.tau.push(t);
        tree.depth.push(depth);
        trace.events.push(GrowthEvent { t, n: n + 1 });

        heap.push(Reverse(Pending {
            time: next_child_time(t, rho, rng),
            vertex: parent,
        }));
        if may_reproduce(depth) {
            heap.push(Reverse(Pending {
                time: next_child_time(t, rho, rng),
                vertex: child,
            }));
        }
    }
    Ok((tree, trace))
}

/// [`generate_tree`] driven by the RNG stream seeded from `params.seed`.
pub fn generate_tree_seeded(
    params: &ProcessParams,
    budget: &Budget,
) -> Result<(BranchingTree, GrowthTrace)> {
    let mut rng = sampling::rng_from_seed(params.seed);
    generate_tree(params, budget, &mut rng)
}

/// Independent replicas on per-replica RNG streams, in parallel.
pub fn generate_replicas(
    params: &ProcessParams,
    budget: &Budget,
    replicas: usize,
) -> Result<Vec<(BranchingTree, GrowthTrace)>> {
    use rayon::prelude::*;
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::replica_rng(params.seed, i as u64);
            generate_tree(params, budget, &mut rng)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Pooled within-replica slope of `log n` against `log t`.
    pub slope: f64,
    pub slope_stderr: f64,
    /// `n(T) T^{-rho}` per replica, `T` its last birth time.
    pub w_estimates: Vec<f64>,
    pub window_fraction: f64,
    pub points_used: usize,
}

/// Growth exponent over the default window.
pub fn growth_exponent(traces: &[GrowthTrace], rho_hint: f64) -> Result<GrowthFit> {
    growth_exponent_with_window(traces, rho_hint, DEFAULT_GROWTH_WINDOW)
}

/// Least-squares slope of `log n(t)` against `log t` over the latest
/// `window` fraction of each trace's log-time span. Replicas share the
/// slope but keep their own intercept (`log W` differs between replicas).
pub fn growth_exponent_with_window(
    traces: &[GrowthTrace],
    rho_hint: f64,
    window: f64,
) -> Result<GrowthFit> {
    if traces.is_empty() {
        return Err(Error::InsufficientData("no traces".into()));
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::Domain(format!(
            "window must be in (0, 1], got {window}"
        )));
    }
    let mut sxx = stats::CompensatedSum::default();
    let mut sxy = stats::CompensatedSum::default();
    let mut syy_resid = Vec::new();
    let mut w_estimates = Vec::with_capacity(traces.len());
    let mut points_used = 0;
    let mut centered: Vec<(f64, f64)> = Vec::new();

    for (i, trace) in traces.iter().enumerate() {
        if trace.len() < MIN_GROWTH_BIRTHS {
            return Err(Error::InsufficientData(format!(
                "trace {i} has {} births, need {MIN_GROWTH_BIRTHS}",
                trace.len()
            )));
        }
        let last = trace.events[trace.len() - 1];
        w_estimates.push(last.n as f64 * last.t.powf(-rho_hint));
        let log_end = last.t.ln();
        let start = (1.0 - window) * log_end;
        let pts: Vec<(f64, f64)> = trace
            .events
            .iter()
            .map(|e| (e.t.ln(), (e.n as f64).ln()))
            .filter(|&(lt, _)| lt >= start)
            .collect();
        if pts.len() < 2 {
            continue;
        }
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        for &(x, y) in &pts {
            sxx.add((x - mx) * (x - mx));
            sxy.add((x - mx) * (y - my));
            centered.push((x - mx, y - my));
        }
        points_used += pts.len();
    }
    let sxx = sxx.value();
    if sxx <= 0.0 {
        return Err(Error::Degenerate("no spread in log-time".into()));
    }
    let slope = sxy.value() / sxx;
    syy_resid.extend(centered.iter().map(|&(x, y)| (y - slope * x).powi(2)));
    let dof = points_used.saturating_sub(traces.len() + 1).max(1);
    let slope_stderr = (stats::compensated_sum(syy_resid) / dof as f64 / sxx).sqrt();
    Ok(GrowthFit {
        slope,
        slope_stderr,
        w_estimates,
        window_fraction: window,
        points_used,
    })
}
