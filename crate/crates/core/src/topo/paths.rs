use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use super::{Link, NodeId, TopoError, Topology};

/// Default bound on the number of equal-cost paths enumerated at once.
pub const DEFAULT_PATH_CAP: usize = 10_000;

const UNREACHABLE: u64 = u64::MAX;

/// A set of paths sharing source and destination, in lexicographic order of
/// node indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PathSet {
    paths: Vec<Vec<NodeId>>,
}

impl PathSet {
    pub fn new(paths: Vec<Vec<NodeId>>) -> Self {
        Self { paths }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[NodeId]> {
        self.paths.iter().map(Vec::as_slice)
    }

    pub fn first(&self) -> Option<&[NodeId]> {
        self.paths.first().map(Vec::as_slice)
    }

    /// True if the set holds exactly one path and that path is `p`.
    pub fn is_only(&self, p: &[NodeId]) -> bool {
        self.paths.len() == 1 && self.paths[0] == p
    }

    pub fn into_paths(self) -> Vec<Vec<NodeId>> {
        self.paths
    }
}

/// IGP shortest-path view of a topology.
///
/// Distances toward each destination are computed on first use with a
/// reverse Dijkstra and cached; the cache is safe to share between threads.
pub struct ShortestPaths<'t> {
    topo: &'t Topology,
    to_dst: Vec<OnceLock<Vec<u64>>>,
    cap: usize,
}

impl<'t> ShortestPaths<'t> {
    pub fn new(topo: &'t Topology) -> Self {
        Self::with_cap(topo, DEFAULT_PATH_CAP)
    }

    pub fn with_cap(topo: &'t Topology, cap: usize) -> Self {
        let to_dst = (0..topo.node_count()).map(|_| OnceLock::new()).collect();
        Self { topo, to_dst, cap }
    }

    pub fn topology(&self) -> &'t Topology {
        self.topo
    }

    fn table(&self, dst: NodeId) -> &[u64] {
        self.to_dst[dst.index()].get_or_init(|| reverse_dijkstra(self.topo, dst))
    }

    /// IGP distance `src -> dst`, `None` if unreachable.
    pub fn distance(&self, src: NodeId, dst: NodeId) -> Option<u64> {
        let d = self.table(dst)[src.index()];
        (d != UNREACHABLE).then_some(d)
    }

    /// ECMP next hops of `u` toward `dst`, ascending by index. Empty when
    /// `u == dst` or `dst` is unreachable.
    pub fn next_hops(&self, u: NodeId, dst: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let table = self.table(dst);
        let du = table[u.index()];
        self.topo
            .out_links(u)
            .filter(move |l| {
                let dv = table[l.dst.index()];
                du != UNREACHABLE && dv != UNREACHABLE && dv + l.cost == du
            })
            .map(|l| l.dst)
    }

    /// Every minimum-cost path `src -> dst`. Fails if there are more than the
    /// configured cap.
    pub fn all_shortest_paths(&self, src: NodeId, dst: NodeId) -> Result<PathSet, TopoError> {
        let paths = self.enumerate(src, dst, self.cap + 1);
        if paths.len() > self.cap {
            return Err(TopoError::PathExplosion(self.cap));
        }
        Ok(PathSet::new(paths))
    }

    /// The first `limit` shortest paths in lexicographic order.
    pub fn shortest_paths_upto(&self, src: NodeId, dst: NodeId, limit: usize) -> PathSet {
        PathSet::new(self.enumerate(src, dst, limit))
    }

    /// The lexicographically first shortest path, used as a flow's natural
    /// path.
    pub fn natural_path(&self, src: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
        self.enumerate(src, dst, 1).pop()
    }

    fn enumerate(&self, src: NodeId, dst: NodeId, limit: usize) -> Vec<Vec<NodeId>> {
        let mut out = Vec::new();
        if src == dst || self.distance(src, dst).is_none() || limit == 0 {
            return out;
        }
        // Every DAG edge leads to dst, so the walk never dead-ends.
        let mut path = vec![src];
        let mut stack: Vec<Vec<NodeId>> = vec![self.next_hops(src, dst).collect()];
        while let Some(frontier) = stack.last_mut() {
            if frontier.is_empty() {
                stack.pop();
                path.pop();
                continue;
            }
            let v = frontier.remove(0);
            path.push(v);
            if v == dst {
                out.push(path.clone());
                if out.len() >= limit {
                    break;
                }
                path.pop();
            } else {
                stack.push(self.next_hops(v, dst).collect());
            }
        }
        out
    }
}

fn reverse_dijkstra(t: &Topology, dst: NodeId) -> Vec<u64> {
    let mut dist = vec![UNREACHABLE; t.node_count()];
    let mut heap = BinaryHeap::new();
    dist[dst.index()] = 0;
    heap.push(Reverse((0u64, dst)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v.index()] {
            continue;
        }
        for l in t.in_links(v) {
            let nd = d + l.cost;
            if nd < dist[l.src.index()] {
                dist[l.src.index()] = nd;
                heap.push(Reverse((nd, l.src)));
            }
        }
    }
    dist
}

/// Heap entry for the constrained search; `(weight, hops)` ascending.
#[derive(PartialEq)]
struct Entry(f64, u32, NodeId);

impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1)).then(other.2.cmp(&self.2))
    }
}

fn walk_back(pred: &[Option<NodeId>], mut v: NodeId) -> Vec<NodeId> {
    let mut path = vec![v];
    while let Some(u) = pred[v.index()] {
        path.push(u);
        v = u;
    }
    path.reverse();
    path
}

/// Minimum-weight path over the links for which `weight` returns a value.
///
/// Weights must be finite and non-negative; `None` prunes the link. Ties are
/// broken by fewer hops, then by the lexicographically smaller node
/// sequence.
pub fn constrained_shortest_path<F>(t: &Topology, src: NodeId, dst: NodeId, mut weight: F) -> Option<Vec<NodeId>>
where
    F: FnMut(&Link) -> Option<f64>,
{
    // Any extension strictly grows (weight, hops), so the order in which
    // equal keys leave the heap is irrelevant; only a relaxation that ties on
    // both needs the node sequences compared.
    let n = t.node_count();
    let mut key: Vec<Option<(f64, u32)>> = vec![None; n];
    let mut pred: Vec<Option<NodeId>> = vec![None; n];
    let mut done = vec![false; n];
    key[src.index()] = Some((0.0, 0));
    let mut heap = BinaryHeap::from([Entry(0.0, 0, src)]);
    while let Some(Entry(w, h, u)) = heap.pop() {
        if done[u.index()] || key[u.index()] != Some((w, h)) {
            continue;
        }
        done[u.index()] = true;
        if u == dst {
            return Some(walk_back(&pred, dst));
        }
        for l in t.out_links(u) {
            let v = l.dst;
            if done[v.index()] {
                continue;
            }
            let Some(lw) = weight(l) else { continue };
            debug_assert!(lw >= 0.0 && lw.is_finite(), "bad link weight {lw}");
            let cand = (w + lw, h + 1);
            let better = match key[v.index()] {
                None => true,
                Some(old) => match cand.0.total_cmp(&old.0).then(cand.1.cmp(&old.1)) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => {
                        let mine = walk_back(&pred, u);
                        let theirs = walk_back(&pred, pred[v.index()].expect("labelled"));
                        mine < theirs
                    }
                },
            };
            if better {
                key[v.index()] = Some(cand);
                pred[v.index()] = Some(u);
                heap.push(Entry(cand.0, cand.1, v));
            }
        }
    }
    None
}

/// Up to `k` loopless paths in increasing order of weight (Yen), with the
/// same tie-breaking and pruning as [`constrained_shortest_path`].
pub fn k_shortest_paths<F>(t: &Topology, src: NodeId, dst: NodeId, k: usize, weight: F) -> Vec<Vec<NodeId>>
where
    F: Fn(&Link) -> Option<f64>,
{
    let cost = |p: &[NodeId]| -> f64 { t.path_links(p).map(|l| weight(l).unwrap_or(f64::INFINITY)).sum() };
    let mut found: Vec<Vec<NodeId>> = Vec::new();
    if k == 0 {
        return found;
    }
    let Some(first) = constrained_shortest_path(t, src, dst, &weight) else { return found };
    found.push(first);
    let mut cands: Vec<(f64, Vec<NodeId>)> = Vec::new();
    while found.len() < k {
        let last = found.last().expect("nonempty").clone();
        for s in 0..last.len() - 1 {
            let root = &last[..=s];
            let banned: Vec<NodeId> =
                found.iter().filter(|p| p.len() > s + 1 && p[..=s] == *root).map(|p| p[s + 1]).collect();
            let spur = constrained_shortest_path(t, last[s], dst, |l| {
                if (l.src == last[s] && banned.contains(&l.dst)) || root[..s].contains(&l.dst) {
                    None
                } else {
                    weight(l)
                }
            });
            let Some(spur) = spur else { continue };
            let mut p = root[..s].to_vec();
            p.extend(spur);
            if !found.contains(&p) && !cands.iter().any(|(_, c)| *c == p) {
                cands.push((cost(&p), p));
            }
        }
        let Some(best) = (0..cands.len()).min_by(|&x, &y| {
            let ((cx, px), (cy, py)) = (&cands[x], &cands[y]);
            cx.total_cmp(cy).then(px.len().cmp(&py.len())).then_with(|| px.cmp(py))
        }) else {
            break;
        };
        found.push(cands.swap_remove(best).1);
    }
    found
}

/// All simple paths `src -> dst` by depth-first search, in lexicographic
/// order. Exponential; meant for small graphs and for checking the
/// shortest-path routines.
pub fn exhaustive_simple_paths(t: &Topology, src: NodeId, dst: NodeId) -> Vec<Vec<NodeId>> {
    fn go(t: &Topology, dst: NodeId, path: &mut Vec<NodeId>, on: &mut [bool], out: &mut Vec<Vec<NodeId>>) {
        let u = *path.last().unwrap();
        if u == dst {
            out.push(path.clone());
            return;
        }
        for l in t.out_links(u) {
            if !on[l.dst.index()] {
                on[l.dst.index()] = true;
                path.push(l.dst);
                go(t, dst, path, on, out);
                path.pop();
                on[l.dst.index()] = false;
            }
        }
    }
    let mut out = Vec::new();
    if src == dst {
        return out;
    }
    let mut on = vec![false; t.node_count()];
    on[src.index()] = true;
    go(t, dst, &mut vec![src], &mut on, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::TopologyBuilder;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fig3_shortest_paths() {
        let t = fig3();
        let sp = ShortestPaths::new(&t);
        let [n1, n5, n6] = ids(&t, &["n1", "n5", "n6"])[..] else { unreachable!() };
        let p15 = sp.all_shortest_paths(n1, n5).unwrap();
        assert!(p15.is_only(&ids(&t, &["n1", "n4", "n5"])));
        let p16 = sp.all_shortest_paths(n1, n6).unwrap();
        assert_eq!(p16.len(), 2);
        assert_eq!(p16.into_paths(), vec![ids(&t, &["n1", "n2", "n3", "n6"]), ids(&t, &["n1", "n4", "n5", "n6"])]);
    }

    #[test]
    fn one_hop_and_unreachable() {
        let t = triangle();
        let sp = ShortestPaths::new(&t);
        let [a, b, _] = ids(&t, &["A", "B", "C"])[..] else { unreachable!() };
        assert!(sp.all_shortest_paths(a, b).unwrap().is_only(&[a, b]));

        let mut bld = TopologyBuilder::new();
        let (x, y) = (bld.node("x"), bld.node("y"));
        let t2 = bld.build().unwrap();
        assert!(ShortestPaths::new(&t2).all_shortest_paths(x, y).unwrap().is_empty());
        assert_eq!(t2.link_count(), 0);
    }

    #[test]
    fn path_cap_is_a_distinct_error() {
        // chain of diamonds: 2^k equal-cost paths
        let mut names = vec!["s".to_string()];
        let mut edges = Vec::new();
        let mut prev = "s".to_string();
        for i in 0..6 {
            let (a, b, j) = (format!("a{i}"), format!("b{i}"), format!("j{i}"));
            edges.extend([
                (prev.clone(), a.clone()),
                (prev.clone(), b.clone()),
                (a.clone(), j.clone()),
                (b.clone(), j.clone()),
            ]);
            names.extend([a, b, j.clone()]);
            prev = j;
        }
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let edges: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let t = undirected(&names, &edges, 1.0);
        let (s, j) = (t.resolve("s").unwrap(), t.resolve("j5").unwrap());
        assert_eq!(ShortestPaths::new(&t).all_shortest_paths(s, j).unwrap().len(), 64);
        let capped = ShortestPaths::with_cap(&t, 63);
        assert!(matches!(capped.all_shortest_paths(s, j), Err(TopoError::PathExplosion(63))));
        assert_eq!(capped.shortest_paths_upto(s, j, 2).len(), 2);
    }

    #[test]
    fn csp_prunes_and_breaks_ties() {
        let t = triangle();
        let [a, b, c] = ids(&t, &["A", "B", "C"])[..] else { unreachable!() };
        assert_eq!(constrained_shortest_path(&t, a, b, |l| Some(l.cost as f64)), Some(vec![a, b]));
        let pruned = constrained_shortest_path(&t, a, b, |l| (!(l.src == a && l.dst == b)).then_some(1.0));
        assert_eq!(pruned, Some(vec![a, c, b]));
        assert_eq!(constrained_shortest_path(&t, a, b, |_| None), None);

        // equal weight, equal hops: lexicographic
        let sq = undirected(&["s", "x", "y", "d"], &[("s", "y"), ("s", "x"), ("x", "d"), ("y", "d")], 1.0);
        let [s, x, _, d] = ids(&sq, &["s", "x", "y", "d"])[..] else { unreachable!() };
        assert_eq!(constrained_shortest_path(&sq, s, d, |_| Some(1.0)), Some(vec![s, x, d]));
        // equal weight: fewer hops wins
        let zero = constrained_shortest_path(&t, a, b, |l| Some(if l.src == a && l.dst == b { 2.0 } else { 1.0 }));
        assert_eq!(zero, Some(vec![a, b]));
    }

    fn random_topology(n: usize, edges: &[(usize, usize, u64)]) -> Topology {
        let mut b = TopologyBuilder::new();
        let ids: Vec<_> = (0..n).map(|i| b.node(&format!("v{i}"))).collect();
        for &(x, y, c) in edges {
            let (x, y) = (x % n, y % n);
            if x != y && !b.has_link(ids[x], ids[y]) {
                b.add_link(ids[x], ids[y], 1.0, c).unwrap();
            }
        }
        b.build().unwrap()
    }

    proptest! {
        #[test]
        fn ecmp_matches_exhaustive_enumeration(
            n in 2usize..=8,
            edges in prop::collection::vec((0usize..8, 0usize..8, 1u64..=3), 0..20),
            s in 0usize..8, d in 0usize..8,
        ) {
            let t = random_topology(n, &edges);
            let (s, d) = (NodeId((s % n) as u32), NodeId((d % n) as u32));
            prop_assume!(s != d);
            let sp = ShortestPaths::new(&t);
            let got = sp.all_shortest_paths(s, d).unwrap().into_paths();
            let all = exhaustive_simple_paths(&t, s, d);
            let min = all.iter().map(|p| t.path_cost(p)).min();
            prop_assert_eq!(min, sp.distance(s, d));
            let expect: Vec<_> = all.into_iter().filter(|p| Some(t.path_cost(p)) == min).collect();
            prop_assert_eq!(got, expect);
        }

        #[test]
        fn csp_matches_exhaustive_minimum(
            n in 2usize..=8,
            edges in prop::collection::vec((0usize..8, 0usize..8, 1u64..=3), 0..20),
            weights in prop::collection::vec(prop::option::weighted(0.8, 0.0f64..5.0), 64),
            s in 0usize..8, d in 0usize..8,
        ) {
            let t = random_topology(n, &edges);
            let (s, d) = (NodeId((s % n) as u32), NodeId((d % n) as u32));
            prop_assume!(s != d);
            let w = |l: &Link| weights[l.id.index() % weights.len()];
            let got = constrained_shortest_path(&t, s, d, w);
            let key = |p: &Vec<NodeId>| -> Option<(f64, usize)> {
                let mut sum = 0.0;
                for l in t.path_links(p) { sum += w(l)?; }
                Some((sum, p.len()))
            };
            let best = exhaustive_simple_paths(&t, s, d)
                .into_iter()
                .filter_map(|p| key(&p).map(|k| (k, p)))
                .min_by(|(ka, pa), (kb, pb)| ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1)).then(pa.cmp(pb)));
            prop_assert_eq!(got, best.map(|(_, p)| p));
        }
    }

    proptest! {
        #[test]
        fn k_shortest_matches_ranked_enumeration(
            n in 2usize..=7,
            edges in prop::collection::vec((0usize..7, 0usize..7, 1u64..4), 1..14),
            k in 1usize..6,
        ) {
            let mut b = TopologyBuilder::new();
            let v: Vec<_> = (0..n).map(|i| b.node(&format!("v{i}"))).collect();
            for (x, y, c) in edges {
                let (x, y) = (x % n, y % n);
                if x != y && !b.has_link(v[x], v[y]) {
                    b.add_link(v[x], v[y], 10.0, c).unwrap();
                }
            }
            let t = b.build().unwrap();
            let w = |l: &Link| Some(l.cost as f64);
            let got = k_shortest_paths(&t, v[0], v[n - 1], k, w);
            let mut all = exhaustive_simple_paths(&t, v[0], v[n - 1]);
            let key = |p: &Vec<NodeId>| (t.path_cost(p), p.len());
            all.sort_by(|x, y| key(x).cmp(&key(y)).then_with(|| x.cmp(y)));
            prop_assert_eq!(got.len(), all.len().min(k));
            // costs agree rank by rank; ties may pick different members
            for (g, e) in got.iter().zip(&all) {
                prop_assert_eq!(key(g), key(e));
            }
            prop_assert!(got.iter().all(|p| t.is_simple_path(p)));
        }
    }
}
