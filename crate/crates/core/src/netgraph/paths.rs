//! Deterministic loop-free path computation.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{LinkId, NodeId, PhysicalTopology};

/// A simple (loop-free) directed path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
}

impl Path {
    pub fn hops(&self) -> usize {
        self.links.len()
    }

    /// Links excluding the first and last hop (the host access links), used
    /// when judging edge-disjointness of alternatives between the same pair.
    fn interior(&self) -> &[LinkId] {
        if self.links.len() <= 2 {
            &[]
        } else {
            &self.links[1..self.links.len() - 1]
        }
    }

    pub fn shares_link_with(&self, other: &Path) -> bool {
        self.links.iter().any(|l| other.links.contains(l))
    }
}

pub type PathSet = Vec<Path>;

/// Hop distances from every node to `dst`, following link directions.
fn dist_to(topo: &PhysicalTopology, dst: NodeId) -> Vec<usize> {
    let mut dist = vec![usize::MAX; topo.node_count()];
    dist[dst.0] = 0;
    let mut queue = std::collections::VecDeque::from([dst]);
    while let Some(n) = queue.pop_front() {
        for &(prev, _) in topo.neighbors_in(n) {
            if dist[prev.0] == usize::MAX {
                dist[prev.0] = dist[n.0] + 1;
                queue.push_back(prev);
            }
        }
    }
    dist
}

/// Lexicographically-smallest shortest path by hop count, or None when
/// unreachable. Deterministic for a fixed topology.
pub fn shortest_path(topo: &PhysicalTopology, src: NodeId, dst: NodeId) -> Option<Path> {
    if src == dst {
        return Some(Path { nodes: vec![src], links: vec![] });
    }
    let dist = dist_to(topo, dst);
    if dist[src.0] == usize::MAX {
        return None;
    }
    let mut nodes = vec![src];
    let mut links = Vec::new();
    let mut cur = src;
    while cur != dst {
        // Neighbors are sorted by id, so the first one on a shortest route
        // yields the lexicographically-smallest path.
        let (next, link) = *topo
            .neighbors(cur)
            .iter()
            .find(|(n, _)| dist[n.0] != usize::MAX && dist[n.0] + 1 == dist[cur.0])
            .expect("distance table inconsistent");
        nodes.push(next);
        links.push(link);
        cur = next;
    }
    Some(Path { nodes, links })
}

const LENGTH_SLACK: usize = 4;
const MAX_EXPANSIONS: usize = 20_000;

/// Up to `k` loop-free paths from `src` to `dst`, shortest first with a
/// deterministic lexicographic tie-break. Among equal candidates, paths that
/// are edge-disjoint (over interior links) from already chosen ones are
/// preferred; remaining slots are filled in enumeration order.
pub fn k_paths(topo: &PhysicalTopology, src: NodeId, dst: NodeId, k: usize) -> PathSet {
    if k == 0 || src == dst {
        return Vec::new();
    }
    let dist = dist_to(topo, dst);
    if dist[src.0] == usize::MAX {
        return Vec::new();
    }
    let shortest = dist[src.0];

    // Best-first enumeration of simple paths ordered by (bound, node sequence).
    let mut heap: BinaryHeap<Reverse<(usize, Vec<usize>, Vec<LinkId>)>> = BinaryHeap::new();
    heap.push(Reverse((shortest, vec![src.0], Vec::new())));
    let mut candidates: Vec<Path> = Vec::new();
    let want = (k * 4).max(16);
    let mut expansions = 0usize;

    while let Some(Reverse((bound, nodes, links))) = heap.pop() {
        if candidates.len() >= want || expansions > MAX_EXPANSIONS {
            break;
        }
        expansions += 1;
        let end = NodeId(*nodes.last().unwrap());
        if end == dst {
            candidates.push(Path { nodes: nodes.iter().map(|&n| NodeId(n)).collect(), links });
            continue;
        }
        for &(next, link) in topo.neighbors(end) {
            if nodes.contains(&next.0) || dist[next.0] == usize::MAX {
                continue;
            }
            let new_bound = links.len() + 1 + dist[next.0];
            if new_bound > shortest + LENGTH_SLACK {
                continue;
            }
            let mut n2 = nodes.clone();
            n2.push(next.0);
            let mut l2 = links.clone();
            l2.push(link);
            let _ = bound;
            heap.push(Reverse((new_bound, n2, l2)));
        }
    }

    let mut chosen: Vec<Path> = Vec::new();
    for p in &candidates {
        if chosen.len() >= k {
            break;
        }
        let disjoint = chosen
            .iter()
            .all(|c| !p.interior().iter().any(|l| c.interior().contains(l)));
        if disjoint {
            chosen.push(p.clone());
        }
    }
    for p in &candidates {
        if chosen.len() >= k {
            break;
        }
        if !chosen.contains(p) {
            chosen.push(p.clone());
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{build_fat_tree, build_wan, HostResources, WanLink, WanSpec};

    fn fattree4() -> PhysicalTopology {
        build_fat_tree(4, 10e9, 10e9, HostResources::default()).unwrap()
    }

    #[test]
    fn same_edge_switch_single_path() {
        let t = fattree4();
        let a = t.lookup("h0").unwrap();
        let b = t.lookup("h1").unwrap();
        let paths = k_paths(&t, a, b, 3);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].hops(), 2);
    }

    #[test]
    fn cross_pod_four_equal_paths() {
        let t = fattree4();
        let a = t.lookup("h0").unwrap();
        let b = t.lookup("h4").unwrap(); // different pod
        let paths = k_paths(&t, a, b, 4);
        assert_eq!(paths.len(), 4);
        assert!(paths.iter().all(|p| p.hops() == 6));
        // each path crosses a distinct core switch
        let mut cores: Vec<_> = paths
            .iter()
            .map(|p| p.nodes.iter().find(|n| t.node(**n).name.starts_with('c')).unwrap())
            .collect();
        cores.sort();
        cores.dedup();
        assert_eq!(cores.len(), 4);
    }

    #[test]
    fn wan_triangle_two_disjoint_paths() {
        let spec = WanSpec {
            routers: vec!["a".into(), "b".into(), "c".into()],
            links: vec![
                WanLink { a: "a".into(), b: "b".into(), capacity: None },
                WanLink { a: "b".into(), b: "c".into(), capacity: None },
                WanLink { a: "a".into(), b: "c".into(), capacity: None },
            ],
            clusters: vec![("a".into(), 1), ("b".into(), 1)],
        };
        let t = build_wan(&spec, 0.0, HostResources::default()).unwrap();
        let ha = t.lookup("a-h0").unwrap();
        let hb = t.lookup("b-h0").unwrap();
        let paths = k_paths(&t, ha, hb, 2);
        assert_eq!(paths.len(), 2);
        assert!(!paths[0].interior().iter().any(|l| paths[1].interior().contains(l)));
    }

    #[test]
    fn deterministic_output() {
        let t = fattree4();
        let a = t.lookup("h0").unwrap();
        let b = t.lookup("h12").unwrap();
        let p1 = k_paths(&t, a, b, 4);
        let p2 = k_paths(&t, a, b, 4);
        assert_eq!(p1, p2);
        let s1 = shortest_path(&t, a, b).unwrap();
        assert_eq!(s1, k_paths(&t, a, b, 1)[0]);
    }

    #[test]
    fn no_path_yields_empty_set() {
        let mut t = PhysicalTopology::new();
        let a = t.add_node("a", crate::netgraph::NodeKind::Host(HostResources::default()));
        let b = t.add_node("b", crate::netgraph::NodeKind::Host(HostResources::default()));
        assert!(k_paths(&t, a, b, 2).is_empty());
        assert!(shortest_path(&t, a, b).is_none());
    }
}
