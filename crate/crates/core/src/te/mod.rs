//! Capacitated flow assignment.
//!
//! Two phases: flows are admitted one by one in demand order on a
//! constrained shortest path (links that cannot take the flow are pruned),
//! then admitted flows are repeatedly re-routed one at a time whenever that
//! lowers the network-wide M/M/1 crossing time. When no single re-route
//! helps, bounded ejection chains move several flows at once. Flows are never
//! split and rejected flows are never reconsidered.

mod delay;
mod metric;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use delay::{incremental_delay_weight, t_avg, LinkLoad, Saturated};
pub use metric::{metrics, HopCount, IgpCost, IncrementalDelay, LinkMetric, DEFAULT_METRIC};

use crate::demand::{DemandSet, FlowDemand};
use crate::topo::{constrained_shortest_path, k_shortest_paths, NodeId, TopoError, Topology};

/// Hop-by-hop node sequence from ingress to egress.
pub type TePath = Vec<NodeId>;

#[derive(Clone, Debug, PartialEq)]
pub struct AdmittedFlow {
    pub flow: FlowDemand,
    pub path: TePath,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub cspf_s: f64,
    pub reassign_s: f64,
    pub passes: usize,
}

#[derive(Clone, Debug)]
pub struct Allocation {
    /// In demand order.
    pub admitted: Vec<AdmittedFlow>,
    pub rejected: Vec<FlowDemand>,
    pub load: LinkLoad,
    pub t_avg: f64,
    pub timing: Timing,
    /// Crossing time after admission, then after each re-assignment pass.
    pub history: Vec<f64>,
}

impl Allocation {
    pub fn empty(t: &Topology) -> Self {
        Self {
            admitted: Vec::new(),
            rejected: Vec::new(),
            load: LinkLoad::empty(t),
            t_avg: 0.0,
            timing: Timing::default(),
            history: vec![0.0],
        }
    }
}

#[derive(Clone)]
pub struct SolverConfig {
    pub metric: Arc<dyn LinkMetric>,
    /// Stop once a pass improves the crossing time by less than this
    /// relative amount.
    pub tol: f64,
    pub max_passes: usize,
    /// Route computations per admitted flow spent on multi-flow moves once
    /// single moves stall; 0 disables them.
    pub search_budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { metric: Arc::new(IncrementalDelay), tol: 1e-6, max_passes: 100, search_budget: 1024 }
    }
}

impl std::fmt::Debug for SolverConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolverConfig")
            .field("tol", &self.tol)
            .field("max_passes", &self.max_passes)
            .field("search_budget", &self.search_budget)
            .finish_non_exhaustive()
    }
}

fn route(t: &Topology, load: &LinkLoad, metric: &dyn LinkMetric, flow: &FlowDemand) -> Option<TePath> {
    constrained_shortest_path(t, flow.src, flow.dst, |l| {
        let f = load.get(l.id);
        (f + flow.rate < l.capacity).then(|| metric.weight(l, f, flow.rate))
    })
    .filter(|p| p.len() >= 2)
}

fn crossing_time(t: &Topology, load: &LinkLoad) -> f64 {
    t_avg(t, load).expect("loads stay below capacity")
}

/// Admission phase: route each flow in order, or reject it.
pub fn cspf_phase(t: &Topology, d: &DemandSet, metric: &dyn LinkMetric) -> Allocation {
    let mut a = Allocation::empty(t);
    for flow in &d.flows {
        match route(t, &a.load, metric, flow) {
            Some(path) => {
                a.load.add_path(t, &path, flow.rate);
                a.admitted.push(AdmittedFlow { flow: flow.clone(), path });
            }
            None => a.rejected.push(flow.clone()),
        }
    }
    a.t_avg = crossing_time(t, &a.load);
    a.history = vec![a.t_avg];
    a
}

/// Re-assignment phase.
///
/// Single-flow passes visit admitted flows in demand order, lift each flow
/// off the network, search a new route, and keep it only if the crossing
/// time strictly drops. Passes repeat until the relative gain of a pass
/// falls below `tol` or `max_passes` is reached. A converged state is then
/// probed with [`kick_sweep`] rounds, which share a budget of
/// `search_budget` route computations per admitted flow; a round that gains
/// at least `tol` restarts the single-flow passes.
pub fn reassignment_phase(t: &Topology, mut a: Allocation, cfg: &SolverConfig) -> Allocation {
    let mut current = crossing_time(t, &a.load);
    let mut passes = 0;
    let mut sweeps = 0;
    let mut budget = cfg.search_budget.saturating_mul(a.admitted.len());
    while passes < cfg.max_passes {
        passes += 1;
        let before = current;
        single_pass(t, &mut a, cfg, &mut current);
        a.history.push(current);
        log::debug!("pass {passes}: T_avg {current:.6e}, relative gain {:.3e}", rel_gain(before, current));
        if rel_gain(before, current) >= cfg.tol {
            continue;
        }
        if budget == 0 || a.admitted.len() < 2 {
            break;
        }
        sweeps += 1;
        let before = current;
        kick_sweep(t, &mut a, cfg, &mut current, &mut budget);
        if current < before {
            a.history.push(current);
        }
        log::debug!("kick sweep {sweeps}: T_avg {current:.6e}, {budget} routes left");
        if rel_gain(before, current) < cfg.tol {
            break;
        }
    }
    a.t_avg = current;
    a.timing.passes = passes;
    a
}

fn rel_gain(before: f64, after: f64) -> f64 {
    if before > 0.0 {
        (before - after) / before
    } else {
        0.0
    }
}

fn single_pass(t: &Topology, a: &mut Allocation, cfg: &SolverConfig, current: &mut f64) {
    for i in 0..a.admitted.len() {
        let AdmittedFlow { flow, path } = &a.admitted[i];
        let mut trial = a.load.clone();
        trial.remove_path(t, path, flow.rate);
        let Some(cand) = route(t, &trial, cfg.metric.as_ref(), flow) else { continue };
        if cand == *path {
            continue;
        }
        trial.add_path(t, &cand, flow.rate);
        let Ok(tt) = t_avg(t, &trial) else { continue };
        if tt < *current {
            log::trace!("flow {} rerouted, T_avg {current:.6e} -> {tt:.6e}", flow.id);
            a.load = trial;
            a.admitted[i].path = cand;
            *current = tt;
        }
    }
}

/// Routes for flow `i` other than its current one: its zero-load route and
/// its best route with each link of the current path banned in turn. These
/// are the detours a single move refuses because someone is in the way.
fn detours(t: &Topology, a: &Allocation, metric: &dyn LinkMetric, i: usize) -> Vec<TePath> {
    let AdmittedFlow { flow, path } = &a.admitted[i];
    let mut base = a.load.clone();
    base.remove_path(t, path, flow.rate);
    let mut out = Vec::new();
    out.extend(route(t, &LinkLoad::empty(t), metric, flow));
    // full links stay usable at a penalty; the kick may clear them
    out.extend(k_shortest_paths(t, flow.src, flow.dst, DETOURS, |l| {
        let f = base.get(l.id);
        if flow.rate >= l.capacity {
            None
        } else if f + flow.rate < l.capacity {
            Some(metric.weight(l, f, flow.rate))
        } else {
            Some(FULL_LINK)
        }
    }));
    out.retain(|p| p != path);
    out.sort();
    out.dedup();
    out
}

/// Ranked routes considered per flow, current route included.
const DETOURS: usize = 4;

/// Longest repair chain after a kick.
const REPAIR_STEPS: usize = 24;

/// Multi-flow moves for states where no single re-route helps.
///
/// Each flow in turn is forced onto one of its [`detours`]; flows sharing a
/// link with its old or new route are then re-routed best-response style,
/// and each flow that moves pulls in its own neighbours. The chain is kept
/// if the crossing time strictly drops. Every route computation uses up one
/// unit of `budget`.
pub fn kick_sweep(t: &Topology, a: &mut Allocation, cfg: &SolverConfig, current: &mut f64, budget: &mut usize) {
    let metric = cfg.metric.as_ref();
    let mut users = link_users(t, a);
    for i in 0..a.admitted.len() {
        let Some(left) = budget.checked_sub(a.admitted[i].path.len()) else { return };
        *budget = left;
        for q in detours(t, a, metric, i) {
            if *budget == 0 {
                return;
            }
            let Some((load, moved)) = Kick::run(t, a, metric, &users, i, q, budget).map(Kick::into_parts) else {
                continue;
            };
            let Ok(tt) = t_avg(t, &load) else { continue };
            if tt < *current {
                log::trace!("kick on flow {} moved {} flows", a.admitted[i].flow.id, moved.len());
                a.load = load;
                for (k, p) in moved {
                    a.admitted[k].path = p;
                }
                users = link_users(t, a);
                *current = tt;
                break;
            }
        }
    }
}

fn link_users(t: &Topology, a: &Allocation) -> Vec<Vec<usize>> {
    let mut users = vec![Vec::new(); t.link_count()];
    for (k, f) in a.admitted.iter().enumerate() {
        for l in t.path_links(&f.path) {
            users[l.id.index()].push(k);
        }
    }
    users
}

/// Depth of nested ejections when re-inserting ejected flows.
const EJECT_DEPTH: usize = 2;

/// Penalty on a full link in a relaxed route, above any real link weight.
const FULL_LINK: f64 = 1e12;

/// Trial state of one ejection chain, on top of a committed allocation.
struct Kick<'a> {
    t: &'a Topology,
    a: &'a Allocation,
    metric: &'a dyn LinkMetric,
    users: &'a [Vec<usize>],
    load: LinkLoad,
    moved: BTreeMap<usize, TePath>,
    /// Links newly used by moved flows, with those flows.
    arrived: HashMap<usize, Vec<usize>>,
    /// Placed during this chain, or lifted and waiting to be placed.
    locked: Vec<bool>,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
}

impl<'a> Kick<'a> {
    /// Forces flow `i` onto `q`, ejecting flows from links of `q` that
    /// cannot take it, re-inserts the ejected flows, then lets neighbours
    /// re-route one at a time. `None` if some flow cannot be placed.
    fn run(
        t: &'a Topology,
        a: &'a Allocation,
        metric: &'a dyn LinkMetric,
        users: &'a [Vec<usize>],
        i: usize,
        q: TePath,
        budget: &mut usize,
    ) -> Option<Self> {
        let n = a.admitted.len();
        let mut kick = Self {
            t,
            a,
            metric,
            users,
            load: a.load.clone(),
            moved: BTreeMap::new(),
            arrived: HashMap::new(),
            locked: vec![false; n],
            queue: VecDeque::new(),
            queued: vec![false; n],
        };
        let flow = &a.admitted[i].flow;
        kick.locked[i] = true;
        kick.queued[i] = true;
        kick.load.remove_path(t, &a.admitted[i].path, flow.rate);
        let ejected = kick.eject(&q, flow.rate);
        if !kick.fits(&q, flow.rate) {
            return None;
        }
        kick.settle(i, q);
        if !kick.place_all(ejected, EJECT_DEPTH, budget) {
            return None;
        }
        kick.repair(budget);
        Some(kick)
    }

    fn into_parts(self) -> (LinkLoad, BTreeMap<usize, TePath>) {
        (self.load, self.moved)
    }

    fn path_of(&self, k: usize) -> &TePath {
        self.moved.get(&k).unwrap_or(&self.a.admitted[k].path)
    }

    fn fits(&self, p: &[NodeId], rate: f64) -> bool {
        self.t.path_links(p).all(|l| self.load.get(l.id) + rate < l.capacity)
    }

    /// Lifts unlocked flows off every link of `p` that cannot take `rate`.
    fn eject(&mut self, p: &[NodeId], rate: f64) -> Vec<usize> {
        let mut out = Vec::new();
        for l in self.t.path_links(p) {
            if self.load.get(l.id) + rate < l.capacity {
                continue;
            }
            for &k in &self.users[l.id.index()] {
                if !self.locked[k] {
                    self.locked[k] = true;
                    out.push(k);
                }
            }
        }
        for &k in &out {
            let f = &self.a.admitted[k];
            self.load.remove_path(self.t, &f.path, f.flow.rate);
        }
        out
    }

    fn settle(&mut self, k: usize, p: TePath) {
        let rate = self.a.admitted[k].flow.rate;
        self.load.add_path(self.t, &p, rate);
        let old = self.a.admitted[k].path.clone();
        self.enqueue(&old);
        self.enqueue(&p);
        self.record(k, p);
    }

    fn record(&mut self, k: usize, p: TePath) {
        for l in self.t.path_links(&p) {
            self.arrived.entry(l.id.index()).or_default().push(k);
        }
        self.moved.insert(k, p);
    }

    fn place_all(&mut self, mut flows: Vec<usize>, depth: usize, budget: &mut usize) -> bool {
        // larger flows first, they have fewer places to go
        let rate = |k: usize| self.a.admitted[k].flow.rate;
        flows.sort_by(|&x, &y| rate(y).total_cmp(&rate(x)).then(x.cmp(&y)));
        flows.into_iter().all(|k| self.place(k, depth, budget))
    }

    fn place(&mut self, k: usize, depth: usize, budget: &mut usize) -> bool {
        *budget = budget.saturating_sub(1);
        let f = &self.a.admitted[k].flow;
        if let Some(p) = route(self.t, &self.load, self.metric, f) {
            self.settle(k, p);
            return true;
        }
        if depth == 0 {
            return false;
        }
        // fewest full links first; a full link must be clearable
        let (load, users, locked, metric) = (&self.load, self.users, &self.locked, self.metric);
        let relaxed = constrained_shortest_path(self.t, f.src, f.dst, |l| {
            let used = load.get(l.id);
            if used + f.rate < l.capacity {
                return Some(metric.weight(l, used, f.rate));
            }
            let movable: f64 =
                users[l.id.index()].iter().filter(|&&u| !locked[u]).map(|&u| self.a.admitted[u].flow.rate).sum();
            (used - movable + f.rate < l.capacity).then_some(FULL_LINK)
        });
        let Some(p) = relaxed else { return false };
        let ejected = self.eject(&p, f.rate);
        if !self.fits(&p, f.rate) {
            return false;
        }
        self.settle(k, p);
        self.place_all(ejected, depth - 1, budget)
    }

    fn enqueue(&mut self, p: &[NodeId]) {
        for l in self.t.path_links(p) {
            let arrived = self.arrived.get(&l.id.index()).into_iter().flatten();
            for &k in self.users[l.id.index()].iter().chain(arrived) {
                if !self.queued[k] {
                    self.queued[k] = true;
                    self.queue.push_back(k);
                }
            }
        }
    }

    /// Best-response re-routes of queued neighbours; each flow that moves
    /// queues its own neighbours.
    fn repair(&mut self, budget: &mut usize) {
        let mut steps = 0;
        while let Some(k) = self.queue.pop_front() {
            self.queued[k] = false;
            if steps == REPAIR_STEPS || *budget == 0 {
                break;
            }
            steps += 1;
            *budget -= 1;
            let f = &self.a.admitted[k].flow;
            let cur = self.path_of(k).clone();
            let mut without = self.load.clone();
            without.remove_path(self.t, &cur, f.rate);
            let Some(cand) = route(self.t, &without, self.metric, f) else { continue };
            let cost = |p: &[NodeId]| -> f64 {
                self.t.path_links(p).filter_map(|l| incremental_delay_weight(l, without.get(l.id), f.rate)).sum()
            };
            if cand == cur || cost(&cand) >= cost(&cur) {
                continue;
            }
            self.load = without;
            self.load.add_path(self.t, &cand, f.rate);
            self.enqueue(&cur);
            self.enqueue(&cand);
            self.record(k, cand);
        }
    }
}

pub fn solve(t: &Topology, d: &DemandSet, cfg: &SolverConfig) -> Allocation {
    let start = Instant::now();
    let a = cspf_phase(t, d, cfg.metric.as_ref());
    let cspf_s = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let mut a = reassignment_phase(t, a, cfg);
    a.timing.cspf_s = cspf_s;
    a.timing.reassign_s = start.elapsed().as_secs_f64();
    log::info!("admitted {}/{} flows, T_avg {:.6e}, {} passes", a.admitted.len(), d.len(), a.t_avg, a.timing.passes);
    a
}

#[derive(Debug, Error)]
pub enum AllocationError {
    #[error("invalid allocation JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Topo(#[from] TopoError),
    #[error("flow {0}: path is not a simple path of the topology")]
    BadPath(u32),
}

#[derive(Serialize, Deserialize)]
struct AllocationDoc {
    admitted: Vec<AdmittedDoc>,
    rejected: Vec<u32>,
    t_avg: f64,
    timing: Timing,
}

#[derive(Serialize, Deserialize)]
struct AdmittedDoc {
    flow_id: u32,
    path: Vec<String>,
}

/// Allocation JSON. With `timing` off the wall-clock fields are written as
/// zero so that output depends on the inputs only.
pub fn allocation_to_json(t: &Topology, a: &Allocation, timing: bool) -> String {
    let mut tm = a.timing;
    if !timing {
        tm.cspf_s = 0.0;
        tm.reassign_s = 0.0;
    }
    let doc = AllocationDoc {
        admitted: a.admitted.iter().map(|f| AdmittedDoc { flow_id: f.flow.id, path: t.path_names(&f.path) }).collect(),
        rejected: a.rejected.iter().map(|f| f.id).collect(),
        t_avg: a.t_avg,
        timing: tm,
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Paths and rejections read back from allocation JSON.
#[derive(Clone, Debug, PartialEq)]
pub struct AllocationRecord {
    pub admitted: Vec<(u32, TePath)>,
    pub rejected: Vec<u32>,
    pub t_avg: f64,
    pub timing: Timing,
}

pub fn parse_allocation(t: &Topology, text: &str) -> Result<AllocationRecord, AllocationError> {
    let doc: AllocationDoc = serde_json::from_str(text)?;
    let admitted = doc
        .admitted
        .into_iter()
        .map(|f| {
            let path = f.path.iter().map(|n| t.resolve(n)).collect::<Result<TePath, _>>()?;
            if path.len() < 2 || !t.is_simple_path(&path) {
                return Err(AllocationError::BadPath(f.flow_id));
            }
            Ok((f.flow_id, path))
        })
        .collect::<Result<_, _>>()?;
    Ok(AllocationRecord { admitted, rejected: doc.rejected, t_avg: doc.t_avg, timing: doc.timing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::fixtures::*;
    use crate::topo::{exhaustive_simple_paths, ShortestPaths, TopologyBuilder};
    use proptest::prelude::*;

    fn demand(flows: &[(NodeId, NodeId, f64)]) -> DemandSet {
        DemandSet {
            flows: flows
                .iter()
                .enumerate()
                .map(|(i, &(src, dst, rate))| FlowDemand { id: i as u32, src, dst, rate })
                .collect(),
            ..Default::default()
        }
    }

    /// Minimum crossing time over every assignment of simple paths to the
    /// given flows that respects capacity.
    fn exhaustive_optimum(t: &Topology, flows: &[FlowDemand]) -> Option<f64> {
        let choices: Vec<Vec<Vec<NodeId>>> = flows.iter().map(|f| exhaustive_simple_paths(t, f.src, f.dst)).collect();
        let mut best: Option<f64> = None;
        let mut pick = vec![0usize; flows.len()];
        if choices.iter().any(Vec::is_empty) {
            return None;
        }
        loop {
            let mut load = LinkLoad::empty(t);
            for (k, f) in flows.iter().enumerate() {
                load.add_path(t, &choices[k][pick[k]], f.rate);
            }
            if let Ok(v) = t_avg(t, &load) {
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
            let mut k = 0;
            loop {
                if k == pick.len() {
                    return best;
                }
                pick[k] += 1;
                if pick[k] < choices[k].len() {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
        }
    }

    fn check_invariants(t: &Topology, a: &Allocation) {
        assert!(a.load.within_capacity(t));
        for w in a.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{:?}", a.history);
        }
        let links: f64 = a.load.rates().iter().sum();
        let flows: f64 = a.admitted.iter().map(|f| f.flow.rate * (f.path.len() - 1) as f64).sum();
        assert!((links - flows).abs() <= 1e-9 * flows.max(1.0));
        for f in &a.admitted {
            assert!(t.is_simple_path(&f.path));
            assert_eq!((f.path[0], *f.path.last().unwrap()), (f.flow.src, f.flow.dst));
        }
    }

    #[test]
    fn triangle_second_flow_detours() {
        let t = triangle();
        let [a, b, c] = ids(&t, &["A", "B", "C"])[..] else { unreachable!() };
        let d = demand(&[(a, b, 8.0), (a, b, 8.0)]);
        let alloc = cspf_phase(&t, &d, &IncrementalDelay);
        assert_eq!(alloc.admitted[0].path, vec![a, b]);
        assert_eq!(alloc.admitted[1].path, vec![a, c, b]);
        // the only feasible assignments put one flow on each route
        let opt = exhaustive_optimum(&t, &d.flows).unwrap();
        assert!((alloc.t_avg - opt).abs() < 1e-12);
        let solved = solve(&t, &d, &SolverConfig::default());
        check_invariants(&t, &solved);
    }

    #[test]
    fn oversized_flow_is_rejected() {
        let t = triangle();
        let [a, b, _] = ids(&t, &["A", "B", "C"])[..] else { unreachable!() };
        let alloc = solve(&t, &demand(&[(a, b, 25.0)]), &SolverConfig::default());
        assert!(alloc.admitted.is_empty());
        assert_eq!(alloc.rejected.len(), 1);
        assert!(alloc.load.rates().iter().all(|&r| r == 0.0));
        assert_eq!(alloc.t_avg, 0.0);
    }

    #[test]
    fn empty_demand() {
        let t = triangle();
        let a = solve(&t, &DemandSet::default(), &SolverConfig::default());
        assert!(a.admitted.is_empty() && a.rejected.is_empty());
        assert_eq!(a.t_avg, 0.0);
        assert_eq!(a.timing.passes, 1);
    }

    #[test]
    fn light_load_keeps_natural_paths() {
        let t = fig3();
        let sp = ShortestPaths::new(&t);
        let n: Vec<_> = t.node_ids().collect();
        let mut flows = Vec::new();
        for &s in &n {
            for &d in &n {
                if s != d {
                    flows.push((s, d, 0.001));
                }
            }
        }
        let a = solve(&t, &demand(&flows), &SolverConfig::default());
        assert_eq!(a.admitted.len(), flows.len());
        for f in &a.admitted {
            let sps = sp.all_shortest_paths(f.flow.src, f.flow.dst).unwrap();
            assert!(sps.iter().any(|p| p == f.path.as_slice()), "{:?}", f.path);
        }
    }

    #[test]
    fn reassignment_balances_parallel_paths() {
        // s -> {x, y} -> d, capacity 10; both flows start on s-x-d
        let t = undirected(&["s", "x", "y", "d"], &[("s", "x"), ("x", "d"), ("s", "y"), ("y", "d")], 10.0);
        let [s, x, y, d] = ids(&t, &["s", "x", "y", "d"])[..] else { unreachable!() };
        let dem = demand(&[(s, d, 4.0), (s, d, 4.0)]);
        let mut load = LinkLoad::empty(&t);
        let stacked: Vec<AdmittedFlow> = dem
            .flows
            .iter()
            .map(|f| {
                load.add_path(&t, &[s, x, d], f.rate);
                AdmittedFlow { flow: f.clone(), path: vec![s, x, d] }
            })
            .collect();
        let t0 = t_avg(&t, &load).unwrap();
        let start = Allocation {
            admitted: stacked,
            rejected: vec![],
            load,
            t_avg: t0,
            timing: Timing::default(),
            history: vec![t0],
        };
        let out = reassignment_phase(&t, start, &SolverConfig::default());
        assert_eq!(out.admitted[0].path, vec![s, y, d]);
        assert_eq!(out.admitted[1].path, vec![s, x, d]);
        // balanced: each flow alone on a 2-hop path, 2 * (4/6) / 4
        let balanced = 2.0 * (4.0 / 6.0) / 4.0;
        assert!((out.t_avg - balanced).abs() < 1e-12);
        assert!((exhaustive_optimum(&t, &dem.flows).unwrap() - balanced).abs() < 1e-12);
        assert!(out.t_avg < t0);

        // already optimal: one pass, nothing moves
        let again = reassignment_phase(&t, out.clone(), &SolverConfig::default());
        assert_eq!(again.timing.passes, 1);
        assert_eq!(again.admitted, out.admitted);
        assert_eq!(again.t_avg, out.t_avg);
    }

    #[test]
    fn json_roundtrip() {
        let t = triangle();
        let [a, b, c] = ids(&t, &["A", "B", "C"])[..] else { unreachable!() };
        let alloc = solve(&t, &demand(&[(a, b, 8.0), (a, b, 8.0), (c, a, 30.0)]), &SolverConfig::default());
        let rec = parse_allocation(&t, &allocation_to_json(&t, &alloc, false)).unwrap();
        assert_eq!(rec.admitted, alloc.admitted.iter().map(|f| (f.flow.id, f.path.clone())).collect::<Vec<_>>());
        assert_eq!(rec.rejected, vec![2]);
        assert_eq!(rec.t_avg, alloc.t_avg);
        assert_eq!((rec.timing.cspf_s, rec.timing.passes), (0.0, alloc.timing.passes));
        assert!(parse_allocation(&t, r#"{"admitted":[{"flow_id":0,"path":["A","A"]}],"rejected":[],"t_avg":0,"timing":{"cspf_s":0,"reassign_s":0,"passes":0}}"#).is_err());
    }

    fn small_graph(n: usize, edges: &[(usize, usize)], cap: f64) -> Topology {
        let mut b = TopologyBuilder::new();
        let v: Vec<_> = (0..n).map(|i| b.node(&format!("v{i}"))).collect();
        for i in 1..n {
            b.add_edge(v[i - 1], v[i], cap, 1).unwrap();
        }
        for &(x, y) in edges {
            let (x, y) = (x % n, y % n);
            if x != y && !b.has_link(v[x], v[y]) {
                b.add_edge(v[x], v[y], cap, 1).unwrap();
            }
        }
        b.build().unwrap()
    }

    proptest! {
        // fixed seed: the search is a heuristic, and a rare miss should
        // reproduce rather than flicker
        #![proptest_config(ProptestConfig {
            cases: 256,
            rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
            ..ProptestConfig::default()
        })]
        #[test]
        fn solve_invariants_and_quality(
            n in 3usize..=6,
            edges in prop::collection::vec((0usize..6, 0usize..6), 0..6),
            flows in prop::collection::vec((0usize..6, 0usize..6, 0.5f64..6.0), 1..=4),
        ) {
            let t = small_graph(n, &edges, 10.0);
            let flows: Vec<_> = flows.into_iter()
                .map(|(s, d, r)| (NodeId((s % n) as u32), NodeId((d % n) as u32), r))
                .filter(|(s, d, _)| s != d)
                .collect();
            prop_assume!(!flows.is_empty());
            let d = demand(&flows);
            let a = solve(&t, &d, &SolverConfig::default());
            check_invariants(&t, &a);
            let kept: Vec<FlowDemand> = a.admitted.iter().map(|f| f.flow.clone()).collect();
            if let Some(opt) = exhaustive_optimum(&t, &kept) {
                prop_assert!(a.t_avg <= opt * 1.10 + 1e-12, "heuristic {} vs optimum {}", a.t_avg, opt);
            }
            // admitting a prefix never admits anything outside it
            for k in 0..d.len() {
                let p = solve(&t, &d.prefix(k), &SolverConfig::default());
                prop_assert!(p.admitted.iter().all(|f| (f.flow.id as usize) < k));
            }
        }
    }
}
