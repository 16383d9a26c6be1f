//! Topology JSON:
//!
//! ```json
//! { "nodes": [{"name": "A", "role": "PE", "loopback": "10.0.0.1"}],
//!   "links": [{"src": "A", "dst": "B", "capacity": 1e10, "cost": 1}] }
//! ```
//!
//! Links are bidirectional unless `"directed": true`.

use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::{NodeSpec, Role, TopoError, Topology, TopologyBuilder};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyDoc {
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    links: Vec<LinkDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    name: String,
    #[serde(default)]
    role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loopback: Option<Ipv4Addr>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    src: String,
    dst: String,
    capacity: f64,
    #[serde(default = "one")]
    cost: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    directed: bool,
}

fn one() -> u64 {
    1
}

pub fn load_json(document: &str) -> Result<Topology, TopoError> {
    let doc: TopologyDoc = serde_json::from_str(document)?;
    let mut b = TopologyBuilder::new();
    for n in doc.nodes {
        b.add_node(NodeSpec { name: n.name, role: n.role, loopback: n.loopback })?;
    }
    for l in doc.links {
        let end = |name: &str| b.lookup(name).ok_or_else(|| TopoError::UnknownNode(name.to_owned()));
        let (s, d) = (end(&l.src)?, end(&l.dst)?);
        if l.directed {
            b.add_link(s, d, l.capacity, l.cost)?;
        } else {
            b.add_edge(s, d, l.capacity, l.cost)?;
        }
    }
    b.build()
}

/// Renders a topology as JSON with one directed entry per link and explicit
/// loopbacks, so that [`load_json`] reproduces it exactly.
pub fn to_json(t: &Topology) -> String {
    let doc = TopologyDoc {
        nodes: t
            .nodes()
            .iter()
            .map(|n| NodeDoc { name: n.name.clone(), role: n.role, loopback: Some(n.loopback) })
            .collect(),
        links: t
            .links()
            .iter()
            .map(|l| LinkDoc {
                src: t.name(l.src).to_owned(),
                dst: t.name(l.dst).to_owned(),
                capacity: l.capacity,
                cost: l.cost,
                directed: true,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}
