//! Segment lists for engineered paths.
//!
//! A node SID forwards along the IGP shortest paths toward its target. A
//! direct-link SID takes the direct link to its target when the current node
//! has one, and otherwise behaves like a node SID. [`segment_allocation`]
//! turns a hop-by-hop path into the shortest list of such SIDs whose
//! forwarding reproduces exactly that path.

mod json;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use json::{parse_sr_paths, sr_paths_to_json, SrPathRecord};

use crate::registry::Registry;
use crate::sim::{self, SimError};
use crate::te::Allocation;
use crate::topo::{NodeId, PathSet, ShortestPaths, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SidKind {
    #[serde(rename = "node")]
    Node,
    #[serde(rename = "direct")]
    DirectLink,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sid {
    pub kind: SidKind,
    pub target: NodeId,
}

impl Sid {
    pub fn node(target: NodeId) -> Self {
        Self { kind: SidKind::Node, target }
    }

    pub fn direct(target: NodeId) -> Self {
        Self { kind: SidKind::DirectLink, target }
    }
}

/// Segment list of one flow. `sids` never names the ingress itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SrPath {
    pub ingress: NodeId,
    pub egress: NodeId,
    pub sids: Vec<Sid>,
}

impl SrPath {
    pub fn len(&self) -> usize {
        self.sids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sids.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum SrError {
    #[error("not a simple path of the topology")]
    BadPath,
    #[error("no segment list of at most {0} SIDs reproduces the path")]
    NotFound(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Next hops of `u` under a direct-link SID for `dst`.
pub fn star_next_hops(sp: &ShortestPaths<'_>, u: NodeId, dst: NodeId) -> Vec<NodeId> {
    if u == dst {
        return Vec::new();
    }
    match sp.topology().direct_link(u, dst) {
        Some(_) => vec![dst],
        None => sp.next_hops(u, dst).collect(),
    }
}

/// SP*: every path a packet can take from `src` under a direct-link SID for
/// `dst`, in lexicographic order. Empty if `dst` is unreachable.
pub fn sp_star(sp: &ShortestPaths<'_>, src: NodeId, dst: NodeId) -> PathSet {
    PathSet::new(sp_star_upto(sp, src, dst, usize::MAX))
}

/// The first `limit` paths of [`sp_star`].
pub fn sp_star_upto(sp: &ShortestPaths<'_>, src: NodeId, dst: NodeId, limit: usize) -> Vec<Vec<NodeId>> {
    let mut out = Vec::new();
    if src == dst || limit == 0 || sp.distance(src, dst).is_none() {
        return out;
    }
    // Off the direct link every step lowers the IGP distance, so the walk is
    // finite and never revisits a node.
    let mut path = vec![src];
    let mut stack = vec![star_next_hops(sp, src, dst)];
    while let Some(frontier) = stack.last_mut() {
        if frontier.is_empty() {
            stack.pop();
            path.pop();
            continue;
        }
        let v = frontier.remove(0);
        path.push(v);
        if v == dst {
            out.push(path.clone());
            if out.len() >= limit {
                break;
            }
            path.pop();
        } else {
            stack.push(star_next_hops(sp, v, dst));
        }
    }
    out
}

/// Greedy farthest-reach segment list for `p`.
///
/// From the current segment start, the target slides back along `p` from the
/// egress until the sub-path up to it is the only shortest path (node SID)
/// or the only direct-link-biased path (direct-link SID). The successor of
/// the start always qualifies through its direct link.
pub fn segment_allocation(sp: &ShortestPaths<'_>, p: &[NodeId]) -> Result<SrPath, SrError> {
    if p.len() < 2 || !sp.topology().is_simple_path(p) {
        return Err(SrError::BadPath);
    }
    let last = p.len() - 1;
    let mut sids = Vec::new();
    let mut s = 0;
    while s < last {
        let mut d = last;
        loop {
            let sub = &p[s..=d];
            if sp.shortest_paths_upto(p[s], p[d], 2).is_only(sub) {
                sids.push(Sid::node(p[d]));
                break;
            }
            if is_only(&sp_star_upto(sp, p[s], p[d], 2), sub) {
                sids.push(Sid::direct(p[d]));
                break;
            }
            assert!(d > s + 1, "one-hop segment {} -> {} not covered", p[s], p[d]);
            d -= 1;
        }
        s = d;
    }
    Ok(SrPath { ingress: p[0], egress: p[last], sids })
}

fn is_only(paths: &[Vec<NodeId>], p: &[NodeId]) -> bool {
    paths.len() == 1 && paths[0] == p
}

pub trait SegmentAllocator: Send + Sync + std::fmt::Debug {
    fn allocate(&self, sp: &ShortestPaths<'_>, p: &[NodeId]) -> Result<SrPath, SrError>;
}

#[derive(Debug, Default)]
pub struct Greedy;

impl SegmentAllocator for Greedy {
    fn allocate(&self, sp: &ShortestPaths<'_>, p: &[NodeId]) -> Result<SrPath, SrError> {
        segment_allocation(sp, p)
    }
}

/// Shortest list by exhaustive search; exponential, for small paths.
#[derive(Debug, Default)]
pub struct Exhaustive;

impl SegmentAllocator for Exhaustive {
    fn allocate(&self, sp: &ShortestPaths<'_>, p: &[NodeId]) -> Result<SrPath, SrError> {
        if p.len() < 2 || !sp.topology().is_simple_path(p) {
            return Err(SrError::BadPath);
        }
        let max = p.len() - 1;
        sim::brute_force_min_srp(sp, p, max)?.ok_or(SrError::NotFound(max))
    }
}

pub const DEFAULT_ALLOCATOR: &str = "greedy";

pub fn allocators() -> Registry<dyn SegmentAllocator> {
    Registry::<dyn SegmentAllocator>::new("segment allocator")
        .register("greedy", Arc::new(Greedy))
        .register("exhaustive", Arc::new(Exhaustive))
}

/// Segment list of every admitted flow, in allocation order.
pub fn assign_all(t: &Topology, a: &Allocation, alg: &dyn SegmentAllocator) -> Result<Vec<(u32, SrPath)>, SrError> {
    let sp = ShortestPaths::new(t);
    a.admitted.iter().map(|f| Ok((f.flow.id, alg.allocate(&sp, &f.path)?))).collect()
}
