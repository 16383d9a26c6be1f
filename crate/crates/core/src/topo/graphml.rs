//! GraphML ingestion in the Topology Zoo dialect.

use std::collections::{HashMap, HashSet};

use super::{NodeId, NodeSpec, Role, TopoError, Topology, TopologyBuilder, DEFAULT_CAPACITY};

#[derive(Clone, Debug)]
pub struct GraphmlOptions {
    /// Capacity for edges without a `capacity` attribute, in b/s.
    pub default_capacity: f64,
}

impl Default for GraphmlOptions {
    fn default() -> Self {
        Self { default_capacity: DEFAULT_CAPACITY }
    }
}

/// Parses a GraphML document into a [`Topology`].
///
/// Nodes are indexed in document order and named by their `label` data,
/// falling back to the GraphML id when the label is missing or already
/// taken. Undirected edges become two links. Parallel edges collapse into
/// one link and self-loops are dropped. Edge data keys named `capacity` and
/// `cost` are honored when present.
pub fn load_graphml(document: &str, opts: &GraphmlOptions) -> Result<Topology, TopoError> {
    let doc = roxmltree::Document::parse(document).map_err(|e| TopoError::Graphml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "graphml" {
        return Err(TopoError::Graphml(format!("root element is <{}>", root.tag_name().name())));
    }

    let mut keys: HashMap<(&str, &str), &str> = HashMap::new();
    for k in root.children().filter(|n| n.has_tag_name("key")) {
        if let (Some(id), Some(name)) = (k.attribute("id"), k.attribute("attr.name")) {
            keys.insert((k.attribute("for").unwrap_or("all"), name), id);
        }
    }
    let key_for = |domain: &str, name: &str| keys.get(&(domain, name)).or_else(|| keys.get(&("all", name))).copied();
    let label_key = key_for("node", "label");
    let cap_key = key_for("edge", "capacity");
    let cost_key = key_for("edge", "cost");

    let graph = root
        .children()
        .find(|n| n.has_tag_name("graph"))
        .ok_or_else(|| TopoError::Graphml("no <graph> element".into()))?;
    let undirected_default = graph.attribute("edgedefault") != Some("directed");

    let data = |el: roxmltree::Node<'_, '_>, key: Option<&str>| -> Option<String> {
        let key = key?;
        el.children()
            .find(|c| c.has_tag_name("data") && c.attribute("key") == Some(key))
            .and_then(|c| c.text())
            .map(|s| s.trim().to_owned())
    };

    let mut b = TopologyBuilder::new();
    let mut by_xml_id: HashMap<&str, NodeId> = HashMap::new();
    let mut taken: HashSet<String> = HashSet::new();
    for n in graph.children().filter(|n| n.has_tag_name("node")) {
        let xml_id = n.attribute("id").ok_or_else(|| TopoError::Graphml("node without id".into()))?;
        let mut name = data(n, label_key).filter(|l| !l.is_empty()).unwrap_or_else(|| xml_id.to_owned());
        if taken.contains(&name) {
            name = format!("{name}#{xml_id}");
        }
        taken.insert(name.clone());
        let id = b.add_node(NodeSpec { name, role: Role::Cr, loopback: None })?;
        if by_xml_id.insert(xml_id, id).is_some() {
            return Err(TopoError::Graphml(format!("duplicate node id {xml_id:?}")));
        }
    }

    for e in graph.children().filter(|n| n.has_tag_name("edge")) {
        let end = |attr| -> Result<NodeId, TopoError> {
            let xml_id = e.attribute(attr).ok_or_else(|| TopoError::Graphml(format!("edge without {attr}")))?;
            by_xml_id
                .get(xml_id)
                .copied()
                .ok_or_else(|| TopoError::Graphml(format!("edge references unknown node {xml_id:?}")))
        };
        let (s, d) = (end("source")?, end("target")?);
        if s == d {
            continue;
        }
        let capacity = match data(e, cap_key) {
            Some(v) => v.parse().map_err(|_| TopoError::Graphml(format!("bad capacity {v:?}")))?,
            None => opts.default_capacity,
        };
        let cost = match data(e, cost_key) {
            Some(v) => v.parse().map_err(|_| TopoError::Graphml(format!("bad cost {v:?}")))?,
            None => 1,
        };
        let undirected = match e.attribute("directed") {
            Some(v) => v != "true",
            None => undirected_default,
        };
        if !b.has_link(s, d) {
            b.add_link(s, d, capacity, cost)?;
        }
        if undirected && !b.has_link(d, s) {
            b.add_link(d, s, capacity, cost)?;
        }
    }
    b.build()
}
