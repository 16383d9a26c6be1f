//! Minimum segment lists by exhaustive search.

use std::collections::HashMap;

use super::{enumerate_sids, validate, SimError, SimOutcome};
use crate::sr::{Sid, SidKind, SrPath};
use crate::topo::{NodeId, ShortestPaths};

pub const DEFAULT_SEARCH_CAP: usize = 1_000_000;

/// Shortest SID list whose forwarding is exactly `p`, at most `max_len`
/// long; ties go to the lexicographically smallest list (node SIDs before
/// direct-link SIDs, then by target index).
pub fn brute_force_min_srp(sp: &ShortestPaths<'_>, p: &[NodeId], max_len: usize) -> Result<Option<SrPath>, SimError> {
    brute_force_min_srp_capped(sp, p, max_len, DEFAULT_SEARCH_CAP)
}

/// As [`brute_force_min_srp`], giving up after `cap` candidate SIDs.
pub fn brute_force_min_srp_capped(
    sp: &ShortestPaths<'_>,
    p: &[NodeId],
    max_len: usize,
    cap: usize,
) -> Result<Option<SrPath>, SimError> {
    assert!(max_len >= 1);
    if p.len() < 2 {
        return Ok(None);
    }
    let n = sp.topology().node_count() as u32;
    let alphabet: Vec<Sid> = [SidKind::Node, SidKind::DirectLink]
        .into_iter()
        .flat_map(|kind| (0..n).map(move |i| Sid { kind, target: NodeId(i) }))
        .collect();
    let mut s = Search { sp, p, alphabet, segments: HashMap::new(), tried: 0, cap };
    for len in 1..=max_len {
        let mut seq = Vec::with_capacity(len);
        if s.extend(0, len, &mut seq)? {
            let srp = SrPath { ingress: p[0], egress: p[p.len() - 1], sids: seq };
            debug_assert!(validate(sp, p, &srp));
            return Ok(Some(srp));
        }
    }
    Ok(None)
}

struct Search<'a, 't> {
    sp: &'a ShortestPaths<'t>,
    p: &'a [NodeId],
    alphabet: Vec<Sid>,
    /// (position on p, SID) -> position reached, if the SID moves a packet
    /// from there along p and nowhere else.
    segments: HashMap<(usize, Sid), Option<usize>>,
    tried: usize,
    cap: usize,
}

impl Search<'_, '_> {
    /// Depth-first over lists of exactly `left` more SIDs from position `at`.
    /// Forwarding is memoryless and every SID pops at its target, so a list
    /// is valid iff each SID on its own carries the packet along the next
    /// stretch of `p`.
    fn extend(&mut self, at: usize, left: usize, seq: &mut Vec<Sid>) -> Result<bool, SimError> {
        let last = self.p.len() - 1;
        for k in 0..self.alphabet.len() {
            let sid = self.alphabet[k];
            self.tried += 1;
            if self.tried > self.cap {
                return Err(SimError::SearchCap(self.cap));
            }
            let Some(to) = self.segment(at, sid)? else { continue };
            if (left == 1) != (to == last) {
                continue;
            }
            seq.push(sid);
            if left == 1 || self.extend(to, left - 1, seq)? {
                return Ok(true);
            }
            seq.pop();
        }
        Ok(false)
    }

    fn segment(&mut self, at: usize, sid: Sid) -> Result<Option<usize>, SimError> {
        if let Some(&r) = self.segments.get(&(at, sid)) {
            return Ok(r);
        }
        let rest = &self.p[at..];
        let r = match rest[1..].iter().position(|&v| v == sid.target) {
            None => None,
            Some(k) => match enumerate_sids(self.sp, rest[0], &[sid])?.as_slice() {
                [SimOutcome::Delivered { path, .. }] if path[..] == rest[..k + 2] => Some(at + k + 1),
                _ => None,
            },
        };
        self.segments.insert((at, sid), r);
        Ok(r)
    }
}
