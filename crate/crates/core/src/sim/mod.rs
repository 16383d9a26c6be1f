//! Per-node forwarding model of SID lists and label stacks.
//!
//! Every ECMP branch is followed, so the outcome set of a segment list is
//! the set of all walks a packet could take under any hashing. A node SID
//! for a remote node forwards on every shortest-path next hop; a direct-link
//! SID takes the direct link if there is one; a SID for the current node is
//! popped. The endpoint label is popped only at the node that owns it.

mod oracle;

use std::collections::BTreeMap;
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

pub use oracle::{brute_force_min_srp, brute_force_min_srp_capped, DEFAULT_SEARCH_CAP};

use crate::mpls::{decode, LabelStack, MplsLabel};
use crate::sr::{star_next_hops, Sid, SidKind, SrPath};
use crate::topo::{NodeId, ShortestPaths, Topology};

pub const DEFAULT_OUTCOME_CAP: usize = 10_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("more than {0} forwarding outcomes")]
    Explosion(usize),
    #[error("brute-force search gave up after {0} candidates")]
    SearchCap(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Instr {
    Sid(Sid),
    Endpoint(u32),
    /// End of an abstract SID list: deliver wherever the packet is.
    End,
    /// A label that names no SID or endpoint of this network.
    Bad,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Pop,
    Fwd,
    Deliver,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub node: NodeId,
    pub action: Action,
    pub label: Option<MplsLabel>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailReason {
    /// Endpoint label seen at a node that does not own it.
    Misrouted,
    NoRoute,
    Loop,
    EmptyStack,
    BadLabel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimOutcome {
    Delivered { egress: NodeId, endpoint: Option<u32>, port: Option<u32>, path: Vec<NodeId>, trace: Vec<TraceEvent> },
    Failed { reason: FailReason, path: Vec<NodeId>, trace: Vec<TraceEvent> },
}

impl SimOutcome {
    pub fn path(&self) -> &[NodeId] {
        match self {
            Self::Delivered { path, .. } | Self::Failed { path, .. } => path,
        }
    }

    pub fn trace(&self) -> &[TraceEvent] {
        match self {
            Self::Delivered { trace, .. } | Self::Failed { trace, .. } => trace,
        }
    }
}

/// Endpoint id to owning node and CE port.
pub type Endpoints = BTreeMap<u32, (NodeId, u32)>;

#[derive(Clone, Debug)]
pub struct SimPacket {
    pub node: NodeId,
    stack: Rc<[(Instr, Option<MplsLabel>)]>,
    top: usize,
    pub hops: usize,
    pub path: Vec<NodeId>,
    pub trace: Vec<TraceEvent>,
}

impl SimPacket {
    /// Abstract SID list; the packet is delivered where the last SID ends.
    pub fn with_sids(ingress: NodeId, sids: &[Sid]) -> Self {
        let mut stack: Vec<_> = sids.iter().map(|&s| (Instr::Sid(s), None)).collect();
        if !stack.is_empty() {
            stack.push((Instr::End, None));
        }
        Self::new(ingress, stack)
    }

    pub fn with_labels(t: &Topology, ingress: NodeId, labels: &LabelStack) -> Self {
        let stack = labels.labels.iter().map(|&l| (label_instr(t, l), Some(l))).collect();
        Self::new(ingress, stack)
    }

    fn new(ingress: NodeId, stack: Vec<(Instr, Option<MplsLabel>)>) -> Self {
        Self { node: ingress, stack: stack.into(), top: 0, hops: 0, path: vec![ingress], trace: Vec::new() }
    }

    pub fn remaining(&self) -> usize {
        self.stack.len() - self.top
    }

    fn event(&mut self, action: Action) {
        let label = self.stack.get(self.top).and_then(|e| e.1);
        self.trace.push(TraceEvent { node: self.node, action, label });
    }

    fn fail(self, reason: FailReason) -> SimOutcome {
        SimOutcome::Failed { reason, path: self.path, trace: self.trace }
    }
}

fn label_instr(t: &Topology, l: MplsLabel) -> Instr {
    let d = decode(l);
    if let Some((_, kind)) = d.class.sid() {
        t.node_by_sid_bits(d.payload).map_or(Instr::Bad, |target| Instr::Sid(Sid { kind, target }))
    } else if d.class.endpoint().is_some() {
        Instr::Endpoint(d.payload)
    } else {
        Instr::Bad
    }
}

pub enum Step {
    Next(Vec<SimPacket>),
    Done(SimOutcome),
}

/// Processes the top of the stack at the packet's current node.
pub fn step(sp: &ShortestPaths<'_>, endpoints: &Endpoints, mut pkt: SimPacket) -> Step {
    let Some(&(instr, _)) = pkt.stack.get(pkt.top) else {
        return Step::Done(pkt.fail(FailReason::EmptyStack));
    };
    let u = pkt.node;
    let hops: Vec<NodeId> = match instr {
        Instr::Bad => return Step::Done(pkt.fail(FailReason::BadLabel)),
        Instr::End => {
            pkt.trace.push(TraceEvent { node: u, action: Action::Deliver, label: None });
            return Step::Done(SimOutcome::Delivered {
                egress: u,
                endpoint: None,
                port: None,
                path: pkt.path,
                trace: pkt.trace,
            });
        }
        Instr::Endpoint(e) => {
            return Step::Done(match endpoints.get(&e) {
                None => pkt.fail(FailReason::BadLabel),
                Some(&(owner, port)) if owner == u => {
                    pkt.event(Action::Deliver);
                    SimOutcome::Delivered {
                        egress: u,
                        endpoint: Some(e),
                        port: Some(port),
                        path: pkt.path,
                        trace: pkt.trace,
                    }
                }
                Some(_) => pkt.fail(FailReason::Misrouted),
            });
        }
        Instr::Sid(s) if s.target == u => {
            pkt.event(Action::Pop);
            pkt.top += 1;
            return Step::Next(vec![pkt]);
        }
        Instr::Sid(Sid { kind: SidKind::Node, target }) => sp.next_hops(u, target).collect(),
        Instr::Sid(Sid { kind: SidKind::DirectLink, target }) => star_next_hops(sp, u, target),
    };
    if hops.is_empty() {
        return Step::Done(pkt.fail(FailReason::NoRoute));
    }
    if pkt.hops + 1 > loop_guard(sp.topology()) {
        return Step::Done(pkt.fail(FailReason::Loop));
    }
    pkt.event(Action::Fwd);
    pkt.hops += 1;
    let next = hops
        .into_iter()
        .map(|v| {
            let mut q = pkt.clone();
            q.node = v;
            q.path.push(v);
            q
        })
        .collect();
    Step::Next(next)
}

pub fn loop_guard(t: &Topology) -> usize {
    4 * t.node_count()
}

/// Every outcome reachable from `pkt`, branches in ascending next-hop order.
pub fn enumerate_paths(
    sp: &ShortestPaths<'_>,
    endpoints: &Endpoints,
    pkt: SimPacket,
    cap: usize,
) -> Result<Vec<SimOutcome>, SimError> {
    let mut out = Vec::new();
    let mut todo = vec![pkt];
    while let Some(p) = todo.pop() {
        match step(sp, endpoints, p) {
            Step::Done(o) => {
                if out.len() == cap {
                    return Err(SimError::Explosion(cap));
                }
                out.push(o);
            }
            Step::Next(next) => todo.extend(next.into_iter().rev()),
        }
    }
    Ok(out)
}

pub fn enumerate_sids(sp: &ShortestPaths<'_>, ingress: NodeId, sids: &[Sid]) -> Result<Vec<SimOutcome>, SimError> {
    enumerate_paths(sp, &Endpoints::new(), SimPacket::with_sids(ingress, sids), DEFAULT_OUTCOME_CAP)
}

pub fn enumerate_labels(
    sp: &ShortestPaths<'_>,
    endpoints: &Endpoints,
    ingress: NodeId,
    stack: &LabelStack,
) -> Result<Vec<SimOutcome>, SimError> {
    enumerate_paths(sp, endpoints, SimPacket::with_labels(sp.topology(), ingress, stack), DEFAULT_OUTCOME_CAP)
}

/// True iff forwarding `srp` from its ingress has exactly one outcome, a
/// delivery along `p`.
pub fn validate(sp: &ShortestPaths<'_>, p: &[NodeId], srp: &SrPath) -> bool {
    if p.first() != Some(&srp.ingress) || p.last() != Some(&srp.egress) {
        return false;
    }
    match enumerate_sids(sp, srp.ingress, &srp.sids).as_deref() {
        Ok([SimOutcome::Delivered { egress, path, .. }]) => *egress == srp.egress && path == p,
        _ => false,
    }
}

#[derive(Serialize)]
struct EventDoc<'a> {
    node: &'a str,
    action: Action,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

/// Trace JSON: `[{"node": "A", "action": "pop", "label": "80005"}, ...]`.
pub fn trace_to_json(t: &Topology, trace: &[TraceEvent]) -> String {
    let docs: Vec<_> = trace
        .iter()
        .map(|e| EventDoc { node: t.name(e.node), action: e.action, label: e.label.map(MplsLabel::hex) })
        .collect();
    serde_json::to_string_pretty(&docs).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpls::{build_stack, DepthLimit, Service};
    use crate::sr::segment_allocation;
    use crate::topo::fixtures::*;
    use crate::topo::TopologyBuilder;

    fn delivered_paths(o: &[SimOutcome]) -> Vec<Vec<NodeId>> {
        o.iter()
            .map(|o| match o {
                SimOutcome::Delivered { path, .. } => path.clone(),
                f => panic!("{f:?}"),
            })
            .collect()
    }

    #[test]
    fn fig3_list_is_unique() {
        let t = fig3();
        let sp = ShortestPaths::new(&t);
        let n = ids(&t, &["n1", "n2", "n3", "n5", "n6"]);
        let out = enumerate_sids(&sp, n[0], &[Sid::node(n[2]), Sid::node(n[3]), Sid::node(n[4])]).unwrap();
        assert_eq!(delivered_paths(&out), vec![n.clone()]);
        let trace = out[0].trace();
        assert_eq!(trace.iter().filter(|e| e.action == Action::Pop).count(), 3);
        assert_eq!(trace.iter().filter(|e| e.action == Action::Fwd).count(), 4);
    }

    #[test]
    fn ecmp_branches() {
        let t = fig3();
        let sp = ShortestPaths::new(&t);
        let n = ids(&t, &["n1", "n6"]);
        let out = enumerate_sids(&sp, n[0], &[Sid::node(n[1])]).unwrap();
        assert!(out.len() >= 2);
        assert_eq!(delivered_paths(&out), sp.all_shortest_paths(n[0], n[1]).unwrap().into_paths());
    }

    #[test]
    fn step_cases() {
        let t = fig3();
        let sp = ShortestPaths::new(&t);
        let e = Endpoints::new();
        let [n1, n2, n4, n5] = ids(&t, &["n1", "n2", "n4", "n5"])[..] else { unreachable!() };
        let Step::Next(v) = step(&sp, &e, SimPacket::with_sids(n1, &[Sid::node(n1)])) else { panic!() };
        assert_eq!((v.len(), v[0].node, v[0].remaining()), (1, n1, 1));
        let Step::Next(v) = step(&sp, &e, SimPacket::with_sids(n1, &[Sid::direct(n2)])) else { panic!() };
        assert_eq!((v.len(), v[0].node), (1, n2));
        let Step::Next(v) = step(&sp, &e, SimPacket::with_sids(n1, &[Sid::node(n5)])) else { panic!() };
        assert_eq!(v.iter().map(|p| p.node).collect::<Vec<_>>(), vec![n4]);
    }

    #[test]
    fn failures() {
        let mut b = TopologyBuilder::new();
        let [a, bb, c] = ["A", "B", "C"].map(|n| b.node(n));
        b.add_link(a, bb, 10.0, 1).unwrap();
        let t = b.build().unwrap();
        let sp = ShortestPaths::new(&t);
        let fail = |o: Vec<SimOutcome>| match &o[..] {
            [SimOutcome::Failed { reason, .. }] => *reason,
            x => panic!("{x:?}"),
        };
        assert_eq!(fail(enumerate_sids(&sp, a, &[]).unwrap()), FailReason::EmptyStack);
        assert_eq!(fail(enumerate_sids(&sp, a, &[Sid::node(c)]).unwrap()), FailReason::NoRoute);
        assert_eq!(fail(enumerate_sids(&sp, a, &[Sid::direct(c)]).unwrap()), FailReason::NoRoute);

        let ep = Endpoints::from([(1, (bb, 4)), (2, (a, 0))]);
        let stack = |l: Vec<u32>| LabelStack { labels: l.into_iter().map(|v| MplsLabel::new(v).unwrap()).collect() };
        let bits = t.node(bb).sid_bits();
        let run = |s| enumerate_paths(&sp, &ep, SimPacket::with_labels(&t, a, &s), 10).unwrap();
        assert_eq!(fail(run(stack(vec![0x80000 | bits, 0x40002]))), FailReason::Misrouted);
        assert_eq!(fail(run(stack(vec![0x80000 | bits, 0x40009]))), FailReason::BadLabel);
        assert_eq!(fail(run(stack(vec![0x80000 | bits]))), FailReason::EmptyStack);
        assert_eq!(fail(run(stack(vec![0xa0000]))), FailReason::BadLabel);
        assert_eq!(fail(run(stack(vec![0x80000 | 0x7fff]))), FailReason::BadLabel);
        match &run(stack(vec![0x80000 | bits, 0x40001]))[..] {
            [SimOutcome::Delivered { egress, endpoint, port, path, .. }] => {
                assert_eq!((*egress, *endpoint, *port, path.clone()), (bb, Some(1), Some(4), vec![a, bb]));
            }
            x => panic!("{x:?}"),
        }
    }

    #[test]
    fn loop_guard_trips() {
        // a malformed list bouncing between two nodes
        let t = triangle();
        let sp = ShortestPaths::new(&t);
        let [a, b] = ids(&t, &["A", "B"])[..] else { unreachable!() };
        let sids: Vec<_> = (0..loop_guard(&t) + 1).map(|i| Sid::node(if i % 2 == 0 { b } else { a })).collect();
        match &enumerate_sids(&sp, a, &sids).unwrap()[..] {
            [SimOutcome::Failed { reason: FailReason::Loop, path, .. }] => assert_eq!(path.len(), loop_guard(&t) + 1),
            x => panic!("{x:?}"),
        }
    }

    #[test]
    fn outcome_cap() {
        let t = fig3();
        let sp = ShortestPaths::new(&t);
        let n = ids(&t, &["n1", "n6"]);
        let pkt = SimPacket::with_sids(n[0], &[Sid::node(n[1])]);
        assert_eq!(enumerate_paths(&sp, &Endpoints::new(), pkt, 1), Err(SimError::Explosion(1)));
    }

    #[test]
    fn validate_cases() {
        let t = fig3();
        let sp = ShortestPaths::new(&t);
        let p = ids(&t, &["n1", "n2", "n3", "n5", "n6"]);
        let srp = segment_allocation(&sp, &p).unwrap();
        assert!(validate(&sp, &p, &srp));
        let short = SrPath { sids: vec![Sid::node(p[4])], ..srp.clone() };
        assert!(!validate(&sp, &p, &short));
        let hop = ids(&t, &["n1", "n2"]);
        assert!(validate(&sp, &hop, &SrPath { ingress: hop[0], egress: hop[1], sids: vec![Sid::direct(hop[1])] }));
    }

    #[test]
    fn labels_follow_sids() {
        let t = fig3();
        let sp = ShortestPaths::new(&t);
        let p = ids(&t, &["n1", "n2", "n3", "n5", "n6"]);
        let srp = segment_allocation(&sp, &p).unwrap();
        let stack = build_stack(Service::Pw, &srp, 11, &t, DepthLimit::default()).unwrap();
        let ep = Endpoints::from([(11, (p[4], 11))]);
        let out = enumerate_labels(&sp, &ep, p[0], &stack).unwrap();
        assert_eq!(delivered_paths(&out), vec![p]);
        let json = trace_to_json(&t, out[0].trace());
        assert!(json.contains("\"deliver\"") && json.contains("\"6000b\""));
    }
}
