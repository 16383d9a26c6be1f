//! Random traffic demand between provider-edge routers, and its JSON form.
//!
//! Generation draws, in order and from one seeded ChaCha stream: the PE set,
//! the active PE couples, and for each couple and direction a geometric flow
//! count with exponential flow sizes scaled to a fixed per-direction total.
//! The resulting list is shuffled once so that any prefix samples all
//! couples evenly.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topo::{NodeId, TopoError, Topology, DEFAULT_CAPACITY};

#[derive(Debug, Error)]
pub enum DemandError {
    #[error("invalid demand parameters: {0}")]
    Params(String),
    #[error("need at least 2 PE nodes, sampling gave {0}")]
    TooFewPes(usize),
    #[error("invalid demand JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Topo(#[from] TopoError),
    #[error("flow {0}: {1}")]
    BadFlow(u32, &'static str),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandParams {
    /// Share of nodes picked as PE.
    pub pe_fraction: f64,
    /// Share of unordered PE couples that exchange traffic.
    pub active_pair_fraction: f64,
    /// Mean of the geometric flow count per couple and direction.
    pub mean_flows_per_direction: f64,
    /// Total rate per couple and direction, as a share of `link_capacity`.
    pub pair_load_fraction: f64,
    /// Reference link capacity, b/s.
    pub link_capacity: f64,
}

impl Default for DemandParams {
    fn default() -> Self {
        Self {
            pe_fraction: 0.4,
            active_pair_fraction: 0.2,
            mean_flows_per_direction: 3.5,
            pair_load_fraction: 0.1,
            link_capacity: DEFAULT_CAPACITY,
        }
    }
}

impl DemandParams {
    fn check(&self) -> Result<(), DemandError> {
        let frac = |v: f64, name: &str| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(DemandError::Params(format!("{name} = {v} is outside (0, 1]")))
            }
        };
        // zero PEs is reported as TooFewPes by generate
        if self.pe_fraction != 0.0 {
            frac(self.pe_fraction, "pe_fraction")?;
        }
        frac(self.active_pair_fraction, "active_pair_fraction")?;
        frac(self.pair_load_fraction, "pair_load_fraction")?;
        if !(self.mean_flows_per_direction >= 1.0 && self.mean_flows_per_direction.is_finite()) {
            return Err(DemandError::Params("mean_flows_per_direction must be >= 1".into()));
        }
        if !(self.link_capacity > 0.0 && self.link_capacity.is_finite()) {
            return Err(DemandError::Params("link_capacity must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowDemand {
    pub id: u32,
    pub src: NodeId,
    pub dst: NodeId,
    /// b/s
    pub rate: f64,
}

/// Ordered flow list. Order is the allocation order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DemandSet {
    pub flows: Vec<FlowDemand>,
    pub seed: Option<u64>,
    pub params: Option<DemandParams>,
    /// PE nodes chosen by the generator; empty for hand-written demand.
    pub pes: Vec<NodeId>,
}

impl DemandSet {
    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    /// The first `n` flows, keeping provenance.
    pub fn prefix(&self, n: usize) -> DemandSet {
        DemandSet { flows: self.flows[..n.min(self.flows.len())].to_vec(), ..self.clone() }
    }

    pub fn total_rate(&self) -> f64 {
        self.flows.iter().map(|f| f.rate).sum()
    }
}

fn share(fraction: f64, of: usize) -> usize {
    (fraction * of as f64).round() as usize
}

pub fn generate(t: &Topology, params: &DemandParams, seed: u64) -> Result<DemandSet, DemandError> {
    params.check()?;
    let n = t.node_count();
    if n == 0 {
        return Err(DemandError::TooFewPes(0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let pe_count = share(params.pe_fraction, n).min(n);
    if pe_count < 2 {
        return Err(DemandError::TooFewPes(pe_count));
    }
    let mut pes: Vec<NodeId> = index::sample(&mut rng, n, pe_count).into_iter().map(|i| NodeId(i as u32)).collect();
    pes.sort();

    let couples: Vec<(NodeId, NodeId)> =
        pes.iter().enumerate().flat_map(|(i, &a)| pes[i + 1..].iter().map(move |&b| (a, b))).collect();
    let active = share(params.active_pair_fraction, couples.len()).clamp(1, couples.len());
    let mut picked = index::sample(&mut rng, couples.len(), active).into_vec();
    picked.sort_unstable();

    let count =
        Geometric::new(1.0 / params.mean_flows_per_direction).map_err(|e| DemandError::Params(e.to_string()))?;
    let target = params.pair_load_fraction * params.link_capacity;
    let mut flows = Vec::new();
    for &c in &picked {
        let (a, b) = couples[c];
        for (src, dst) in [(a, b), (b, a)] {
            let k = 1 + count.sample(&mut rng) as usize;
            let sizes: Vec<f64> = (0..k).map(|_| draw_exp(&mut rng)).collect();
            let sum: f64 = sizes.iter().sum();
            flows.extend(sizes.into_iter().map(|s| FlowDemand { id: 0, src, dst, rate: s / sum * target }));
        }
    }
    flows.shuffle(&mut rng);
    for (i, f) in flows.iter_mut().enumerate() {
        f.id = i as u32;
    }
    Ok(DemandSet { flows, seed: Some(seed), params: Some(params.clone()), pes })
}

fn draw_exp<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = Exp1.sample(rng);
        if x > 0.0 {
            return x;
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DemandDoc {
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    params: Option<DemandParams>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pes: Vec<String>,
    flows: Vec<FlowDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowDoc {
    id: u32,
    src: String,
    dst: String,
    rate: f64,
}

/// Serializes a demand set; node references are written as names.
pub fn save(t: &Topology, d: &DemandSet) -> String {
    let doc = DemandDoc {
        seed: d.seed,
        params: d.params.clone(),
        pes: d.pes.iter().map(|p| t.name(*p).to_owned()).collect(),
        flows: d
            .flows
            .iter()
            .map(|f| FlowDoc { id: f.id, src: t.name(f.src).to_owned(), dst: t.name(f.dst).to_owned(), rate: f.rate })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn load(t: &Topology, text: &str) -> Result<DemandSet, DemandError> {
    let doc: DemandDoc = serde_json::from_str(text)?;
    let pes = doc.pes.iter().map(|p| t.resolve(p)).collect::<Result<_, _>>()?;
    let mut seen = std::collections::HashSet::new();
    let flows = doc
        .flows
        .into_iter()
        .map(|f| {
            let (src, dst) = (t.resolve(&f.src)?, t.resolve(&f.dst)?);
            if src == dst {
                return Err(DemandError::BadFlow(f.id, "source equals destination"));
            }
            if !(f.rate > 0.0 && f.rate.is_finite()) {
                return Err(DemandError::BadFlow(f.id, "rate must be positive"));
            }
            if !seen.insert(f.id) {
                return Err(DemandError::BadFlow(f.id, "duplicate id"));
            }
            Ok(FlowDemand { id: f.id, src, dst, rate: f.rate })
        })
        .collect::<Result<_, _>>()?;
    Ok(DemandSet { flows, seed: doc.seed, params: doc.params, pes })
}
