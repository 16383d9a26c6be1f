//! Network topology model and shortest-path machinery.
//!
//! A [`Topology`] is an immutable directed graph of PE/CR routers joined by
//! capacitated unidirectional links. Node indices are dense and fixed at load
//! time; every tie-break in the crate is decided by them.

mod graphml;
mod json;
mod paths;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graphml::{load_graphml, GraphmlOptions};
pub use json::{load_json, to_json};
pub use paths::{
    constrained_shortest_path, exhaustive_simple_paths, k_shortest_paths, PathSet, ShortestPaths, DEFAULT_PATH_CAP,
};

/// Number of loopback bits carried in a SID label.
pub const NODE_BITS: u32 = 15;
/// Largest topology whose nodes all fit in the SID label space.
pub const MAX_NODES: usize = 1 << NODE_BITS;
/// Capacity given to links whose input carries none (10 Gb/s).
pub const DEFAULT_CAPACITY: f64 = 10e9;

#[derive(Debug, Error)]
pub enum TopoError {
    #[error("malformed GraphML: {0}")]
    Graphml(String),
    #[error("invalid topology JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("topology has {0} nodes, the SID space holds at most 32768")]
    TooManyNodes(usize),
    #[error("duplicate node name {0:?}")]
    DuplicateNode(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("nodes {0:?} and {1:?} share loopback low bits {2:#06x}")]
    LoopbackClash(String, String, u32),
    #[error("link {0} -> {1}: {2}")]
    BadLink(String, String, &'static str),
    #[error("more than {0} equal-cost paths")]
    PathExplosion(usize),
}

/// Dense node index. Ordering by index is the global tie-break order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Dense link index, used to address per-link state such as loads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub u32);

impl LinkId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "PE")]
    Pe,
    #[serde(rename = "CR")]
    #[default]
    Cr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub role: Role,
    pub loopback: Ipv4Addr,
}

impl Node {
    /// The loopback bits that identify this node inside an MPLS label.
    pub fn sid_bits(&self) -> u32 {
        u32::from(self.loopback) & ((1 << NODE_BITS) - 1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub src: NodeId,
    pub dst: NodeId,
    /// Bits per second.
    pub capacity: f64,
    /// IGP metric, at least 1.
    pub cost: u64,
}

/// Loopback assigned to nodes that come without one: 10.0.x.y with
/// x*256 + y equal to the node index.
pub fn auto_loopback(index: usize) -> Ipv4Addr {
    Ipv4Addr::new(10, 0, (index >> 8) as u8, (index & 0xff) as u8)
}

#[derive(Clone, Debug)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    out: Vec<BTreeMap<NodeId, LinkId>>,
    inc: Vec<BTreeMap<NodeId, LinkId>>,
    by_name: HashMap<String, NodeId>,
    by_sid_bits: HashMap<u32, NodeId>,
}

impl Topology {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.index()].name
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    pub fn resolve(&self, name: &str) -> Result<NodeId, TopoError> {
        self.node_by_name(name).ok_or_else(|| TopoError::UnknownNode(name.to_owned()))
    }

    /// Node owning the given 15 loopback bits.
    pub fn node_by_sid_bits(&self, bits: u32) -> Option<NodeId> {
        self.by_sid_bits.get(&bits).copied()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// Outgoing links of `u`, ordered by destination index.
    pub fn out_links(&self, u: NodeId) -> impl Iterator<Item = &Link> + '_ {
        self.out[u.index()].values().map(|l| &self.links[l.index()])
    }

    /// Incoming links of `v`, ordered by source index.
    pub fn in_links(&self, v: NodeId) -> impl Iterator<Item = &Link> + '_ {
        self.inc[v.index()].values().map(|l| &self.links[l.index()])
    }

    /// The unique link `a -> b`, if any.
    pub fn direct_link(&self, a: NodeId, b: NodeId) -> Option<&Link> {
        self.out[a.index()].get(&b).map(|l| &self.links[l.index()])
    }

    pub fn pe_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| n.role == Role::Pe).map(|n| n.id)
    }

    /// Copy of the topology with exactly `pes` marked as PE and every other
    /// node as CR.
    pub fn with_pes(&self, pes: &[NodeId]) -> Topology {
        let mut t = self.clone();
        for n in &mut t.nodes {
            n.role = Role::Cr;
        }
        for p in pes {
            t.nodes[p.index()].role = Role::Pe;
        }
        t
    }

    /// True if consecutive nodes of `path` are joined by links and no node
    /// repeats.
    pub fn is_simple_path(&self, path: &[NodeId]) -> bool {
        if path.is_empty() || path.iter().any(|n| n.index() >= self.nodes.len()) {
            return false;
        }
        let mut seen = vec![false; self.nodes.len()];
        for n in path {
            if std::mem::replace(&mut seen[n.index()], true) {
                return false;
            }
        }
        path.windows(2).all(|w| self.direct_link(w[0], w[1]).is_some())
    }

    /// Links traversed by `path`, in order. Panics if a hop has no link.
    pub fn path_links<'a>(&'a self, path: &'a [NodeId]) -> impl Iterator<Item = &'a Link> + 'a {
        path.windows(2)
            .map(move |w| self.direct_link(w[0], w[1]).unwrap_or_else(|| panic!("no link {} -> {}", w[0], w[1])))
    }

    pub fn path_cost(&self, path: &[NodeId]) -> u64 {
        self.path_links(path).map(|l| l.cost).sum()
    }

    pub fn path_names(&self, path: &[NodeId]) -> Vec<String> {
        path.iter().map(|n| self.name(*n).to_owned()).collect()
    }
}

/// Input description of one node handed to [`TopologyBuilder`].
#[derive(Clone, Debug)]
pub struct NodeSpec {
    pub name: String,
    pub role: Role,
    pub loopback: Option<Ipv4Addr>,
}

/// Incremental constructor that enforces all topology invariants in
/// [`TopologyBuilder::build`].
#[derive(Debug, Default)]
pub struct TopologyBuilder {
    nodes: Vec<NodeSpec>,
    links: Vec<(usize, usize, f64, u64)>,
    pairs: HashSet<(usize, usize)>,
    names: HashMap<String, usize>,
}

impl TopologyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, spec: NodeSpec) -> Result<NodeId, TopoError> {
        if self.names.contains_key(&spec.name) {
            return Err(TopoError::DuplicateNode(spec.name));
        }
        let idx = self.nodes.len();
        self.names.insert(spec.name.clone(), idx);
        self.nodes.push(spec);
        Ok(NodeId(idx as u32))
    }

    pub fn node(&mut self, name: &str) -> NodeId {
        match self.names.get(name) {
            Some(&i) => NodeId(i as u32),
            None => {
                self.add_node(NodeSpec { name: name.to_owned(), role: Role::Cr, loopback: None }).expect("fresh name")
            }
        }
    }

    pub fn lookup(&self, name: &str) -> Option<NodeId> {
        self.names.get(name).map(|&i| NodeId(i as u32))
    }

    pub fn has_link(&self, src: NodeId, dst: NodeId) -> bool {
        self.pairs.contains(&(src.index(), dst.index()))
    }

    /// Adds the directed link `src -> dst`.
    pub fn add_link(&mut self, src: NodeId, dst: NodeId, capacity: f64, cost: u64) -> Result<(), TopoError> {
        let bad =
            |why| TopoError::BadLink(self.nodes[src.index()].name.clone(), self.nodes[dst.index()].name.clone(), why);
        if src == dst {
            return Err(bad("self-loop"));
        }
        if !(capacity > 0.0 && capacity.is_finite()) {
            return Err(bad("capacity must be positive"));
        }
        if cost == 0 {
            return Err(bad("cost must be at least 1"));
        }
        if self.has_link(src, dst) {
            return Err(bad("duplicate link"));
        }
        self.pairs.insert((src.index(), dst.index()));
        self.links.push((src.index(), dst.index(), capacity, cost));
        Ok(())
    }

    /// Adds both `a -> b` and `b -> a`.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId, capacity: f64, cost: u64) -> Result<(), TopoError> {
        self.add_link(a, b, capacity, cost)?;
        self.add_link(b, a, capacity, cost)
    }

    pub fn build(self) -> Result<Topology, TopoError> {
        let n = self.nodes.len();
        if n > MAX_NODES {
            return Err(TopoError::TooManyNodes(n));
        }
        let mut nodes = Vec::with_capacity(n);
        let mut by_sid_bits: HashMap<u32, NodeId> = HashMap::with_capacity(n);
        let mut by_name = HashMap::with_capacity(n);
        for (i, spec) in self.nodes.into_iter().enumerate() {
            let node = Node {
                id: NodeId(i as u32),
                loopback: spec.loopback.unwrap_or_else(|| auto_loopback(i)),
                name: spec.name,
                role: spec.role,
            };
            let bits = node.sid_bits();
            if let Some(prev) = by_sid_bits.insert(bits, node.id) {
                let prev: &Node = &nodes[prev.index()];
                return Err(TopoError::LoopbackClash(prev.name.clone(), node.name, bits));
            }
            by_name.insert(node.name.clone(), node.id);
            nodes.push(node);
        }
        let mut out = vec![BTreeMap::new(); n];
        let mut inc = vec![BTreeMap::new(); n];
        let links = self
            .links
            .into_iter()
            .enumerate()
            .map(|(i, (s, d, capacity, cost))| {
                let id = LinkId(i as u32);
                out[s].insert(NodeId(d as u32), id);
                inc[d].insert(NodeId(s as u32), id);
                Link { id, src: NodeId(s as u32), dst: NodeId(d as u32), capacity, cost }
            })
            .collect();
        Ok(Topology { nodes, links, out, inc, by_name, by_sid_bits })
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn direct_link_lookup() {
        let t = triangle();
        let [a, b, _] = ids(&t, &["A", "B", "C"])[..] else { unreachable!() };
        assert_eq!(t.direct_link(a, b).map(|l| (l.src, l.dst)), Some((a, b)));

        let p = undirected(&["A", "B", "C"], &[("A", "B"), ("B", "C")], 1.0);
        let [a, _, c] = ids(&p, &["A", "B", "C"])[..] else { unreachable!() };
        assert!(p.direct_link(a, c).is_none());

        let f = fig3();
        let [n3, n5] = ids(&f, &["n3", "n5"])[..] else { unreachable!() };
        assert!(f.direct_link(n3, n5).is_some());
    }

    #[test]
    fn auto_loopbacks_are_index_based() {
        let t = triangle();
        for n in t.nodes() {
            assert_eq!(n.sid_bits(), n.id.0);
        }
        assert_eq!(auto_loopback(300), Ipv4Addr::new(10, 0, 1, 44));
    }

    #[test]
    fn builder_rejects_bad_links() {
        let mut b = TopologyBuilder::new();
        let (x, y) = (b.node("x"), b.node("y"));
        assert!(b.add_link(x, x, 1.0, 1).is_err());
        assert!(b.add_link(x, y, 0.0, 1).is_err());
        assert!(b.add_link(x, y, 1.0, 0).is_err());
        b.add_link(x, y, 1.0, 1).unwrap();
        assert!(matches!(b.add_link(x, y, 1.0, 1), Err(TopoError::BadLink(..))));
    }

    #[test]
    fn loopback_clash_is_rejected() {
        let mut b = TopologyBuilder::new();
        for (name, lo) in [("a", [192, 168, 0, 5]), ("b", [10, 1, 0, 5])] {
            b.add_node(NodeSpec { name: name.into(), role: Role::Cr, loopback: Some(lo.into()) }).unwrap();
        }
        assert!(matches!(b.build(), Err(TopoError::LoopbackClash(_, _, 5))));
    }

    #[test]
    fn too_many_nodes() {
        let mut b = TopologyBuilder::new();
        for i in 0..=MAX_NODES {
            b.node(&i.to_string());
        }
        assert!(matches!(b.build(), Err(TopoError::TooManyNodes(32769))));
    }

    #[test]
    fn simple_path_check() {
        let t = fig3();
        assert!(t.is_simple_path(&ids(&t, &["n1", "n2", "n3", "n5", "n6"])));
        assert!(!t.is_simple_path(&ids(&t, &["n1", "n3"])));
        assert!(!t.is_simple_path(&ids(&t, &["n1", "n2", "n1"])));
        assert_eq!(t.path_cost(&ids(&t, &["n1", "n4", "n5"])), 2);
    }
}
