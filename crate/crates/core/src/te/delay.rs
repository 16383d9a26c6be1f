//! M/M/1 network delay with unit mean packet length.

use thiserror::Error;

use crate::topo::{Link, LinkId, NodeId, Topology};

#[derive(Debug, Error, PartialEq)]
#[error("link {link:?} carries {load} b/s with capacity {capacity} b/s")]
pub struct Saturated {
    pub link: LinkId,
    pub load: f64,
    pub capacity: f64,
}

/// Per-link allocated rate plus the total admitted rate.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkLoad {
    rates: Vec<f64>,
    admitted: f64,
}

impl LinkLoad {
    pub fn empty(t: &Topology) -> Self {
        Self { rates: vec![0.0; t.link_count()], admitted: 0.0 }
    }

    pub fn get(&self, link: LinkId) -> f64 {
        self.rates[link.index()]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Sum of admitted flow rates (not multiplied by path length).
    pub fn admitted_rate(&self) -> f64 {
        self.admitted
    }

    pub fn add_path(&mut self, t: &Topology, path: &[NodeId], rate: f64) {
        for l in t.path_links(path) {
            self.rates[l.id.index()] += rate;
        }
        self.admitted += rate;
    }

    pub fn remove_path(&mut self, t: &Topology, path: &[NodeId], rate: f64) {
        for l in t.path_links(path) {
            let r = &mut self.rates[l.id.index()];
            *r = (*r - rate).max(0.0);
        }
        self.admitted = (self.admitted - rate).max(0.0);
    }

    /// True if every link is strictly below capacity.
    pub fn within_capacity(&self, t: &Topology) -> bool {
        t.links().iter().all(|l| self.rates[l.id.index()] < l.capacity)
    }
}

/// Mean network crossing time: `(1/G) * sum f/(C-f)` over links, with `G`
/// the admitted rate. Zero when nothing is admitted.
pub fn t_avg(t: &Topology, load: &LinkLoad) -> Result<f64, Saturated> {
    let mut sum = 0.0;
    for l in t.links() {
        let f = load.rates[l.id.index()];
        if f >= l.capacity {
            return Err(Saturated { link: l.id, load: f, capacity: l.capacity });
        }
        sum += f / (l.capacity - f);
    }
    if load.admitted <= 0.0 {
        return Ok(0.0);
    }
    Ok(sum / load.admitted)
}

/// Growth of `f/(C-f)` on `link` when `added` b/s join a current load of
/// `load`; `None` once the link would reach capacity.
pub fn incremental_delay_weight(link: &Link, load: f64, added: f64) -> Option<f64> {
    let c = link.capacity;
    let after = load + added;
    if after >= c {
        return None;
    }
    Some(after / (c - after) - load / (c - load))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topo::TopologyBuilder;

    fn line(caps: &[f64]) -> Topology {
        let mut b = TopologyBuilder::new();
        let ids: Vec<_> = (0..=caps.len()).map(|i| b.node(&format!("x{i}"))).collect();
        for (i, c) in caps.iter().enumerate() {
            b.add_link(ids[i], ids[i + 1], *c, 1).unwrap();
        }
        b.build().unwrap()
    }

    #[test]
    fn closed_forms() {
        let t = line(&[10.0]);
        let mut load = LinkLoad::empty(&t);
        assert_eq!(t_avg(&t, &load), Ok(0.0));
        load.add_path(&t, &[NodeId(0), NodeId(1)], 5.0);
        assert!((t_avg(&t, &load).unwrap() - 0.2).abs() < 1e-15);

        let t2 = line(&[10.0, 10.0]);
        let mut load = LinkLoad::empty(&t2);
        load.add_path(&t2, &[NodeId(0), NodeId(1), NodeId(2)], 5.0);
        assert!((t_avg(&t2, &load).unwrap() - 0.4).abs() < 1e-15);

        load.add_path(&t2, &[NodeId(0), NodeId(1)], 5.0);
        assert!(t_avg(&t2, &load).is_err());
        assert!(!load.within_capacity(&t2));
    }

    #[test]
    fn incremental_weight() {
        let t = line(&[10.0]);
        let l = &t.links()[0];
        assert_eq!(incremental_delay_weight(l, 0.0, 5.0), Some(1.0));
        assert_eq!(incremental_delay_weight(l, 6.0, 5.0), None);
        assert_eq!(incremental_delay_weight(l, 5.0, 5.0), None);
        assert!((incremental_delay_weight(l, 5.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
    }
}
