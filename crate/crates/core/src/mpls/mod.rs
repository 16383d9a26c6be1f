//! The 20-bit MPLS label space and edge programming.
//!
//! Leading bits select the label class:
//!
//! | prefix  | class                    | payload          |
//! |---------|--------------------------|------------------|
//! | `000`   | hop-by-hop IP VLL        | 17 bits          |
//! | `001`   | hop-by-hop PW            | 17 bits          |
//! | `010`   | SR IP VLL endpoint       | 17-bit endpoint  |
//! | `011`   | SR PW endpoint           | 17-bit endpoint  |
//! | `10000` | SR IP VLL node SID       | 15 loopback bits |
//! | `10001` | SR IP VLL direct-link SID| 15 loopback bits |
//! | `10010` | SR PW node SID           | 15 loopback bits |
//! | `10011` | SR PW direct-link SID    | 15 loopback bits |
//! | `101`   | OAM                      | 17 bits          |
//! | `11x`   | unused                   | 18 bits          |
//!
//! Only the ingress and egress PE of a path are programmed: the ingress
//! pushes the whole stack, the egress pops the endpoint label.

mod rules;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use rules::{
    parse_rules, rules_to_json, synthesize_edge_rules, EdgeRules, EgressRule, IngressRule, RulesParseError,
};

use crate::sr::{Sid, SidKind, SrPath};
use crate::topo::{Topology, NODE_BITS};

pub const LABEL_BITS: u32 = 20;
pub const ENDPOINT_BITS: u32 = 17;
/// Labels available for steering once the endpoint label is pushed.
pub const DEFAULT_STEERING_DEPTH: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum MplsError {
    #[error("label value {0:#x} does not fit in 20 bits")]
    LabelRange(u32),
    #[error("payload {payload:#x} too wide for class {class:?}")]
    PayloadRange { class: LabelClass, payload: u32 },
    #[error("segment list needs {depth} steering labels, limit is {limit}")]
    DepthExceeded { depth: usize, limit: usize },
    #[error("empty segment list")]
    EmptyPath,
    #[error("first hop from the ingress is not unique")]
    AmbiguousFirstHop,
    #[error("bad label {0:?}")]
    BadLabelText(String),
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MplsLabel(u32);

impl MplsLabel {
    pub fn new(value: u32) -> Result<Self, MplsError> {
        if value >> LABEL_BITS == 0 {
            Ok(Self(value))
        } else {
            Err(MplsError::LabelRange(value))
        }
    }

    pub fn value(self) -> u32 {
        self.0
    }

    /// Five lowercase hex digits.
    pub fn hex(self) -> String {
        format!("{:05x}", self.0)
    }

    pub fn parse_hex(s: &str) -> Result<Self, MplsError> {
        let digits = s.strip_prefix("0x").unwrap_or(s);
        let v = u32::from_str_radix(digits, 16).map_err(|_| MplsError::BadLabelText(s.to_owned()))?;
        Self::new(v).map_err(|_| MplsError::BadLabelText(s.to_owned()))
    }
}

impl fmt::Debug for MplsLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:05x}", self.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Service {
    #[default]
    #[serde(rename = "ip-vll")]
    IpVll,
    #[serde(rename = "pw")]
    Pw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LabelClass {
    HopByHopVll,
    HopByHopPw,
    SrVllEndpoint,
    SrPwEndpoint,
    SrVllNodeSid,
    SrVllDirectSid,
    SrPwNodeSid,
    SrPwDirectSid,
    Oam,
    Unused,
}

impl LabelClass {
    pub const ALL: [LabelClass; 10] = [
        Self::HopByHopVll,
        Self::HopByHopPw,
        Self::SrVllEndpoint,
        Self::SrPwEndpoint,
        Self::SrVllNodeSid,
        Self::SrVllDirectSid,
        Self::SrPwNodeSid,
        Self::SrPwDirectSid,
        Self::Oam,
        Self::Unused,
    ];

    /// Prefix value and width in bits.
    pub fn prefix(self) -> (u32, u32) {
        match self {
            Self::HopByHopVll => (0b000, 3),
            Self::HopByHopPw => (0b001, 3),
            Self::SrVllEndpoint => (0b010, 3),
            Self::SrPwEndpoint => (0b011, 3),
            Self::SrVllNodeSid => (0b10000, 5),
            Self::SrVllDirectSid => (0b10001, 5),
            Self::SrPwNodeSid => (0b10010, 5),
            Self::SrPwDirectSid => (0b10011, 5),
            Self::Oam => (0b101, 3),
            Self::Unused => (0b11, 2),
        }
    }

    pub fn payload_bits(self) -> u32 {
        LABEL_BITS - self.prefix().1
    }

    pub fn for_sid(service: Service, kind: SidKind) -> Self {
        match (service, kind) {
            (Service::IpVll, SidKind::Node) => Self::SrVllNodeSid,
            (Service::IpVll, SidKind::DirectLink) => Self::SrVllDirectSid,
            (Service::Pw, SidKind::Node) => Self::SrPwNodeSid,
            (Service::Pw, SidKind::DirectLink) => Self::SrPwDirectSid,
        }
    }

    pub fn for_endpoint(service: Service) -> Self {
        match service {
            Service::IpVll => Self::SrVllEndpoint,
            Service::Pw => Self::SrPwEndpoint,
        }
    }

    /// Service and SID kind of an SR SID class.
    pub fn sid(self) -> Option<(Service, SidKind)> {
        match self {
            Self::SrVllNodeSid => Some((Service::IpVll, SidKind::Node)),
            Self::SrVllDirectSid => Some((Service::IpVll, SidKind::DirectLink)),
            Self::SrPwNodeSid => Some((Service::Pw, SidKind::Node)),
            Self::SrPwDirectSid => Some((Service::Pw, SidKind::DirectLink)),
            _ => None,
        }
    }

    pub fn endpoint(self) -> Option<Service> {
        match self {
            Self::SrVllEndpoint => Some(Service::IpVll),
            Self::SrPwEndpoint => Some(Service::Pw),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub class: LabelClass,
    pub payload: u32,
}

pub fn classify(label: MplsLabel) -> LabelClass {
    let v = label.value();
    match v >> 17 {
        0b000 => LabelClass::HopByHopVll,
        0b001 => LabelClass::HopByHopPw,
        0b010 => LabelClass::SrVllEndpoint,
        0b011 => LabelClass::SrPwEndpoint,
        0b101 => LabelClass::Oam,
        0b110 | 0b111 => LabelClass::Unused,
        _ => match v >> 15 {
            0b10000 => LabelClass::SrVllNodeSid,
            0b10001 => LabelClass::SrVllDirectSid,
            0b10010 => LabelClass::SrPwNodeSid,
            _ => LabelClass::SrPwDirectSid,
        },
    }
}

pub fn decode(label: MplsLabel) -> Decoded {
    let class = classify(label);
    Decoded { class, payload: label.value() & ((1 << class.payload_bits()) - 1) }
}

/// Raw construction of any class.
pub fn encode(class: LabelClass, payload: u32) -> Result<MplsLabel, MplsError> {
    let bits = class.payload_bits();
    if payload >> bits != 0 {
        return Err(MplsError::PayloadRange { class, payload });
    }
    let (prefix, _) = class.prefix();
    MplsLabel::new(prefix << bits | payload)
}

pub fn encode_sid(service: Service, sid: Sid, t: &Topology) -> MplsLabel {
    let bits = t.node(sid.target).sid_bits();
    debug_assert!(bits >> NODE_BITS == 0);
    encode(LabelClass::for_sid(service, sid.kind), bits).expect("loopback bits fit the SID payload")
}

pub fn encode_endpoint(service: Service, endpoint: u32) -> Result<MplsLabel, MplsError> {
    encode(LabelClass::for_endpoint(service), endpoint)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DepthPolicy {
    /// Refuse stacks deeper than the limit.
    #[default]
    Error,
    /// Build them anyway and log a warning.
    Warn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DepthLimit {
    pub max: usize,
    pub policy: DepthPolicy,
}

impl Default for DepthLimit {
    fn default() -> Self {
        Self { max: DEFAULT_STEERING_DEPTH, policy: DepthPolicy::Error }
    }
}

/// Outermost label first; the last label is the endpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelStack {
    pub labels: Vec<MplsLabel>,
}

impl LabelStack {
    /// Labels above the endpoint label.
    pub fn steering_depth(&self) -> usize {
        self.labels.len().saturating_sub(1)
    }
}

pub fn build_stack(
    service: Service,
    srp: &SrPath,
    endpoint: u32,
    t: &Topology,
    limit: DepthLimit,
) -> Result<LabelStack, MplsError> {
    if srp.sids.is_empty() {
        return Err(MplsError::EmptyPath);
    }
    let depth = srp.sids.len();
    if depth > limit.max {
        match limit.policy {
            DepthPolicy::Error => return Err(MplsError::DepthExceeded { depth, limit: limit.max }),
            DepthPolicy::Warn => log::warn!(
                "{} -> {}: {depth} steering labels exceed the limit of {}",
                t.name(srp.ingress),
                t.name(srp.egress),
                limit.max
            ),
        }
    }
    let mut labels: Vec<_> = srp.sids.iter().map(|&s| encode_sid(service, s, t)).collect();
    labels.push(encode_endpoint(service, endpoint)?);
    Ok(LabelStack { labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::{NodeSpec, Role, TopologyBuilder};
    use proptest::prelude::*;
    use std::net::Ipv4Addr;

    /// Label from a string of '0'/'1' digits.
    fn bits(s: &str) -> u32 {
        assert_eq!(s.len(), 20);
        u32::from_str_radix(s, 2).unwrap()
    }

    fn five() -> (Topology, Sid) {
        let mut b = TopologyBuilder::new();
        let n = b
            .add_node(NodeSpec { name: "X".into(), role: Role::Pe, loopback: Some(Ipv4Addr::new(192, 168, 0, 5)) })
            .unwrap();
        (b.build().unwrap(), Sid::node(n))
    }

    #[test]
    fn sid_examples() {
        let (t, sid) = five();
        let dl = Sid { kind: SidKind::DirectLink, ..sid };
        assert_eq!(encode_sid(Service::IpVll, sid, &t).value(), 0x80005);
        assert_eq!(encode_sid(Service::IpVll, dl, &t).value(), 0x88005);
        assert_eq!(encode_sid(Service::Pw, sid, &t).value(), 0x90005);
        assert_eq!(encode_sid(Service::Pw, dl, &t).value(), bits("10011000000000000101"));
    }

    #[test]
    fn endpoint_examples() {
        assert_eq!(encode_endpoint(Service::IpVll, 0).unwrap().value(), 0x40000);
        assert_eq!(encode_endpoint(Service::Pw, 1).unwrap().value(), bits("01100000000000000001"));
        assert!(matches!(encode_endpoint(Service::IpVll, 1 << 17), Err(MplsError::PayloadRange { .. })));
    }

    #[test]
    fn decode_examples() {
        let d = decode(MplsLabel::new(0x80005).unwrap());
        assert_eq!((d.class, d.payload), (LabelClass::SrVllNodeSid, 5));
        let d = decode(MplsLabel::new(0x40000).unwrap());
        assert_eq!((d.class, d.payload), (LabelClass::SrVllEndpoint, 0));
        assert_eq!(classify(MplsLabel::new(0xfffff).unwrap()), LabelClass::Unused);
        assert_eq!(classify(MplsLabel::new(bits("10100000000000000000")).unwrap()), LabelClass::Oam);
        assert!(MplsLabel::new(1 << 20).is_err());
    }

    #[test]
    fn hex_text() {
        let l = MplsLabel::new(0x40007).unwrap();
        assert_eq!(l.hex(), "40007");
        assert_eq!(MplsLabel::parse_hex("40007").unwrap(), l);
        assert_eq!(MplsLabel::parse_hex("0x40007").unwrap(), l);
        assert!(MplsLabel::parse_hex("100000").is_err());
        assert!(MplsLabel::parse_hex("xyz").is_err());
    }

    #[test]
    fn stack_order_and_depth() {
        let (t, sid) = five();
        let srp = SrPath { ingress: sid.target, egress: sid.target, sids: vec![sid] };
        let s = build_stack(Service::IpVll, &srp, 7, &t, DepthLimit::default()).unwrap();
        assert_eq!(s.labels, vec![MplsLabel(0x80005), MplsLabel(0x40007)]);
        assert_eq!(s.steering_depth(), 1);

        let long = SrPath { sids: vec![sid; 6], ..srp.clone() };
        assert_eq!(
            build_stack(Service::IpVll, &long, 7, &t, DepthLimit::default()),
            Err(MplsError::DepthExceeded { depth: 6, limit: 5 })
        );
        let warn = DepthLimit { policy: DepthPolicy::Warn, ..Default::default() };
        assert_eq!(build_stack(Service::IpVll, &long, 7, &t, warn).unwrap().labels.len(), 7);
        let empty = SrPath { sids: vec![], ..srp };
        assert_eq!(build_stack(Service::IpVll, &empty, 7, &t, warn), Err(MplsError::EmptyPath));
    }

    #[test]
    fn classes_partition_label_space() {
        let mut seen = [0u32; 10];
        for v in 0..1u32 << LABEL_BITS {
            let l = MplsLabel(v);
            let hits: Vec<_> = LabelClass::ALL
                .iter()
                .filter(|c| {
                    let (p, w) = c.prefix();
                    v >> (LABEL_BITS - w) == p
                })
                .collect();
            assert_eq!(hits.len(), 1, "{v:#x}");
            assert_eq!(*hits[0], classify(l));
            seen[LabelClass::ALL.iter().position(|c| c == hits[0]).unwrap()] += 1;
        }
        assert!(seen.iter().all(|&n| n > 0));
    }

    proptest! {
        #[test]
        fn raw_round_trip(v in 0u32..1 << LABEL_BITS) {
            let d = decode(MplsLabel(v));
            prop_assert_eq!(encode(d.class, d.payload).unwrap().value(), v);
        }
    }
}
