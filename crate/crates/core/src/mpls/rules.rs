//! Ingress and egress PE rules of a unidirectional SR path.
//!
//! Rules JSON, one entry per flow:
//!
//! ```json
//! { "rules": [{ "flow_id": 0,
//!   "ingress": {"node": "A", "match_port": 3, "push": ["80005", "40003"], "out_next_hop": "B"},
//!   "egress":  {"node": "D", "match_label": "40003", "pop": true, "out_port": 3} }] }
//! ```

use serde::{Deserialize, Serialize};

use super::{build_stack, encode_endpoint, DepthLimit, LabelStack, MplsError, MplsLabel, Service};
use crate::sr::{star_next_hops, SidKind, SrPath};
use crate::topo::{NodeId, ShortestPaths, TopoError, Topology};

#[derive(Clone, Debug, PartialEq)]
pub struct IngressRule {
    pub node: NodeId,
    pub match_port: u32,
    pub push: LabelStack,
    pub out_next_hop: NodeId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EgressRule {
    pub node: NodeId,
    pub match_label: MplsLabel,
    pub pop: bool,
    pub out_port: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeRules {
    pub ingress: IngressRule,
    pub egress: EgressRule,
}

impl EdgeRules {
    /// Nodes where a rule is installed.
    pub fn nodes(&self) -> [NodeId; 2] {
        [self.ingress.node, self.egress.node]
    }
}

/// The egress CE port doubles as the endpoint id of the inmost label.
pub fn synthesize_edge_rules(
    service: Service,
    srp: &SrPath,
    ingress_port: u32,
    egress_port: u32,
    sp: &ShortestPaths<'_>,
    limit: DepthLimit,
) -> Result<EdgeRules, MplsError> {
    let t = sp.topology();
    let push = build_stack(service, srp, egress_port, t, limit)?;
    Ok(EdgeRules {
        ingress: IngressRule { node: srp.ingress, match_port: ingress_port, push, out_next_hop: first_hop(sp, srp)? },
        egress: EgressRule {
            node: srp.egress,
            match_label: encode_endpoint(service, egress_port)?,
            pop: true,
            out_port: egress_port,
        },
    })
}

fn first_hop(sp: &ShortestPaths<'_>, srp: &SrPath) -> Result<NodeId, MplsError> {
    let sid = srp.sids.iter().find(|s| s.target != srp.ingress).ok_or(MplsError::EmptyPath)?;
    let hops: Vec<_> = match sid.kind {
        SidKind::Node => sp.next_hops(srp.ingress, sid.target).collect(),
        SidKind::DirectLink => star_next_hops(sp, srp.ingress, sid.target),
    };
    match hops[..] {
        [h] => Ok(h),
        _ => Err(MplsError::AmbiguousFirstHop),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    rules: Vec<FlowDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowDoc {
    flow_id: u32,
    ingress: IngressDoc,
    egress: EgressDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IngressDoc {
    node: String,
    match_port: u32,
    push: Vec<String>,
    out_next_hop: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EgressDoc {
    node: String,
    match_label: String,
    pop: bool,
    out_port: u32,
}

pub fn rules_to_json(t: &Topology, rules: &[(u32, EdgeRules)]) -> String {
    let doc = Doc {
        rules: rules
            .iter()
            .map(|(id, r)| FlowDoc {
                flow_id: *id,
                ingress: IngressDoc {
                    node: t.name(r.ingress.node).to_owned(),
                    match_port: r.ingress.match_port,
                    push: r.ingress.push.labels.iter().map(|l| l.hex()).collect(),
                    out_next_hop: t.name(r.ingress.out_next_hop).to_owned(),
                },
                egress: EgressDoc {
                    node: t.name(r.egress.node).to_owned(),
                    match_label: r.egress.match_label.hex(),
                    pop: r.egress.pop,
                    out_port: r.egress.out_port,
                },
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

#[derive(Debug, thiserror::Error)]
pub enum RulesParseError {
    #[error(transparent)]
    Topo(#[from] TopoError),
    #[error(transparent)]
    Label(#[from] MplsError),
    #[error("invalid rules JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn parse_rules(t: &Topology, text: &str) -> Result<Vec<(u32, EdgeRules)>, RulesParseError> {
    let doc: Doc = serde_json::from_str(text)?;
    doc.rules
        .into_iter()
        .map(|f| {
            let labels = f.ingress.push.iter().map(|l| MplsLabel::parse_hex(l)).collect::<Result<_, _>>()?;
            Ok((
                f.flow_id,
                EdgeRules {
                    ingress: IngressRule {
                        node: t.resolve(&f.ingress.node)?,
                        match_port: f.ingress.match_port,
                        push: LabelStack { labels },
                        out_next_hop: t.resolve(&f.ingress.out_next_hop)?,
                    },
                    egress: EgressRule {
                        node: t.resolve(&f.egress.node)?,
                        match_label: MplsLabel::parse_hex(&f.egress.match_label)?,
                        pop: f.egress.pop,
                        out_port: f.egress.out_port,
                    },
                },
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sr::{segment_allocation, Sid};
    use crate::topo::fixtures::*;

    #[test]
    fn fig3_rules() {
        let t = fig3();
        let sp = ShortestPaths::new(&t);
        let p = ids(&t, &["n1", "n2", "n3", "n5", "n6"]);
        let srp = segment_allocation(&sp, &p).unwrap();
        let r = synthesize_edge_rules(Service::IpVll, &srp, 2, 9, &sp, DepthLimit::default()).unwrap();
        assert_eq!(r.nodes(), [p[0], p[4]]);
        assert_eq!(r.ingress.out_next_hop, p[1]);
        assert_eq!(r.ingress.push.labels.len(), 4);
        assert_eq!(r.egress.match_label, *r.ingress.push.labels.last().unwrap());
        assert_eq!(r.egress.out_port, 9);

        let text = rules_to_json(&t, &[(3, r.clone())]);
        assert_eq!(parse_rules(&t, &text).unwrap(), vec![(3, r)]);
    }

    #[test]
    fn ambiguous_first_hop() {
        let t = fig3();
        let sp = ShortestPaths::new(&t);
        let [n1, n6] = ids(&t, &["n1", "n6"])[..] else { unreachable!() };
        let srp = SrPath { ingress: n1, egress: n6, sids: vec![Sid::node(n6)] };
        assert_eq!(
            synthesize_edge_rules(Service::Pw, &srp, 0, 0, &sp, DepthLimit::default()),
            Err(MplsError::AmbiguousFirstHop)
        );
    }
}
