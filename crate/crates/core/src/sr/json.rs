//! SR-paths JSON:
//!
//! ```json
//! { "paths": [{ "flow_id": 0, "ingress": "A", "egress": "D",
//!               "sids": [{"kind": "node", "target": "B"}, {"kind": "direct", "target": "D"}] }] }
//! ```

use serde::{Deserialize, Serialize};

use super::{Sid, SidKind, SrPath};
use crate::topo::{TopoError, Topology};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    paths: Vec<PathDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathDoc {
    flow_id: u32,
    ingress: String,
    egress: String,
    sids: Vec<SidDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SidDoc {
    kind: SidKind,
    target: String,
}

/// One flow's segment list as read back from JSON.
#[derive(Clone, Debug, PartialEq)]
pub struct SrPathRecord {
    pub flow_id: u32,
    pub path: SrPath,
}

pub fn sr_paths_to_json(t: &Topology, paths: &[(u32, SrPath)]) -> String {
    let doc = Doc {
        paths: paths
            .iter()
            .map(|(id, p)| PathDoc {
                flow_id: *id,
                ingress: t.name(p.ingress).to_owned(),
                egress: t.name(p.egress).to_owned(),
                sids: p.sids.iter().map(|s| SidDoc { kind: s.kind, target: t.name(s.target).to_owned() }).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn parse_sr_paths(t: &Topology, text: &str) -> Result<Vec<SrPathRecord>, TopoError> {
    let doc: Doc = serde_json::from_str(text)?;
    doc.paths
        .into_iter()
        .map(|p| {
            let sids = p
                .sids
                .iter()
                .map(|s| Ok(Sid { kind: s.kind, target: t.resolve(&s.target)? }))
                .collect::<Result<_, TopoError>>()?;
            Ok(SrPathRecord {
                flow_id: p.flow_id,
                path: SrPath { ingress: t.resolve(&p.ingress)?, egress: t.resolve(&p.egress)?, sids },
            })
        })
        .collect()
}
