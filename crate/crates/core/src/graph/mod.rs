//! Undirected weighted co-authorship networks.
//!
//! Nodes carry an entity key plus whole and fractional document counts;
//! edge weights are positive integers (documents linking two entities).
//! Node indices are dense and stable for the lifetime of a network.

mod metrics;

pub use metrics::*;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub key: String,
    pub fractional_size: f64,
    pub whole_size: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoauthNetwork {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    adjacency: Vec<BTreeMap<usize, u64>>,
    n_edges: usize,
}

impl CoauthNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a network from keyed edges; nodes appear in first-seen order.
    pub fn from_edges<'a, I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, u64)>,
    {
        let mut net = Self::new();
        for (a, b, w) in edges {
            net.add_edge_by_key(a, b, w)?;
        }
        Ok(net)
    }

    pub fn add_node(&mut self, key: &str, fractional_size: f64, whole_size: u64) -> Result<usize> {
        if self.index.contains_key(key) {
            return Err(Error::DuplicateNode(key.to_string()));
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            key: key.to_string(),
            fractional_size,
            whole_size,
        });
        self.index.insert(key.to_string(), id);
        self.adjacency.push(BTreeMap::new());
        Ok(id)
    }

    /// Index of `key`, adding a zero-sized node when absent.
    pub fn ensure_node(&mut self, key: &str) -> usize {
        match self.index.get(key) {
            Some(&i) => i,
            None => self.add_node(key, 0.0, 0).expect("key checked absent"),
        }
    }

    /// Adds `weight` to the edge between `a` and `b`, creating it if needed.
    pub fn add_edge(&mut self, a: usize, b: usize, weight: u64) -> Result<()> {
        let n = self.nodes.len();
        if a >= n || b >= n {
            return Err(Error::InvalidArgument(format!(
                "edge ({a}, {b}) out of range for {n} nodes"
            )));
        }
        if a == b {
            return Err(Error::InvalidArgument(format!(
                "self-loop on `{}`",
                self.nodes[a].key
            )));
        }
        if weight == 0 {
            return Err(Error::InvalidArgument("edge weight must be positive".into()));
        }
        let entry = self.adjacency[a].entry(b).or_insert(0);
        if *entry == 0 {
            self.n_edges += 1;
        }
        *entry += weight;
        *self.adjacency[b].entry(a).or_insert(0) += weight;
        Ok(())
    }

    pub fn add_edge_by_key(&mut self, a: &str, b: &str, weight: u64) -> Result<()> {
        let ia = self.ensure_node(a);
        let ib = self.ensure_node(b);
        self.add_edge(ia, ib, weight)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.n_edges
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut Node {
        &mut self.nodes[i]
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.key.as_str())
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<u64> {
        self.adjacency.get(a)?.get(&b).copied()
    }

    pub fn weight_by_key(&self, a: &str, b: &str) -> Option<u64> {
        self.weight(self.index_of(a)?, self.index_of(b)?)
    }

    /// Neighbors of `i` in ascending index order, with edge weights.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.adjacency[i].iter().map(|(&j, &w)| (j, w))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Sum of incident edge weights.
    pub fn strength(&self, i: usize) -> u64 {
        self.adjacency[i].values().sum()
    }

    /// Edges as `(i, j, weight)` with `i < j`, ordered lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, nbrs)| {
            nbrs.range(i + 1..).map(move |(&j, &w)| (i, j, w))
        })
    }

    pub fn total_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Adjacency lists without weights, for distance-based statistics.
    pub fn skeleton(&self) -> Vec<Vec<usize>> {
        self.adjacency
            .iter()
            .map(|nbrs| nbrs.keys().copied().collect())
            .collect()
    }

    /// Same node keys in the same order and the same weighted edges. Node
    /// sizes are not compared.
    pub fn same_structure(&self, other: &CoauthNetwork) -> bool {
        self.keys().eq(other.keys()) && self.edges().eq(other.edges())
    }

    /// Subnetwork induced on `members`, keeping the parent's node order.
    pub fn induced(&self, members: &[usize]) -> CoauthNetwork {
        let mut sorted: Vec<usize> = members.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let remap: HashMap<usize, usize> = sorted.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let mut sub = CoauthNetwork::new();
        for &old in &sorted {
            let n = &self.nodes[old];
            sub.add_node(&n.key, n.fractional_size, n.whole_size)
                .expect("keys are unique in the parent");
        }
        for &old in &sorted {
            for (j, w) in self.neighbors(old) {
                if j > old {
                    if let Some(&nj) = remap.get(&j) {
                        sub.add_edge(remap[&old], nj, w).expect("valid parent edge");
                    }
                }
            }
        }
        sub
    }

    pub fn without_isolates(&self) -> CoauthNetwork {
        let keep: Vec<usize> = (0..self.node_count()).filter(|&i| self.degree(i) > 0).collect();
        self.induced(&keep)
    }
}

/// Connected components of the unweighted skeleton, largest first (ties by
/// smallest member index). Each component is sorted ascending.
pub fn components(net: &CoauthNetwork) -> Vec<Vec<usize>> {
    let n = net.node_count();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for (w, _) in net.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    // Largest first; equal sizes stay in discovery order.
    out.sort_by_key(|c| std::cmp::Reverse(c.len()));
    out
}

pub fn largest_component(net: &CoauthNetwork) -> CoauthNetwork {
    match components(net).first() {
        Some(comp) => net.induced(comp),
        None => CoauthNetwork::new(),
    }
}

/// The focal node plus its direct neighbors. With `remove_inside`, only the
/// edges incident to the ego survive.
pub fn ego_network(net: &CoauthNetwork, ego: &str, remove_inside: bool) -> Result<CoauthNetwork> {
    let center = net
        .index_of(ego)
        .ok_or_else(|| Error::UnknownNode(ego.to_string()))?;
    let mut members: Vec<usize> = net.neighbors(center).map(|(j, _)| j).collect();
    members.push(center);
    let sub = net.induced(&members);
    if !remove_inside {
        return Ok(sub);
    }
    let sub_center = sub.index_of(ego).expect("ego is a member");
    let mut star = CoauthNetwork::new();
    for node in sub.nodes() {
        star.add_node(&node.key, node.fractional_size, node.whole_size)?;
    }
    for (j, w) in sub.neighbors(sub_center) {
        star.add_edge(sub_center, j, w)?;
    }
    Ok(star)
}

/// Collapses `group` into a single node called `label`. Edges from group
/// members to an outside node are summed; edges inside the group vanish.
/// The new node takes the position of the first group member.
pub fn shrink<S: AsRef<str>>(net: &CoauthNetwork, group: &[S], label: &str) -> Result<CoauthNetwork> {
    if group.is_empty() {
        return Err(Error::InvalidArgument("shrink group is empty".into()));
    }
    let mut members = BTreeSet::new();
    for key in group {
        let key = key.as_ref();
        let i = net
            .index_of(key)
            .ok_or_else(|| Error::UnknownNode(key.to_string()))?;
        members.insert(i);
    }
    if let Some(i) = net.index_of(label) {
        if !members.contains(&i) {
            return Err(Error::DuplicateNode(label.to_string()));
        }
    }
    let first = *members.iter().next().expect("group is nonempty");
    let (frac, whole) = members.iter().fold((0.0, 0u64), |(f, w), &i| {
        (f + net.node(i).fractional_size, w + net.node(i).whole_size)
    });

    let mut out = CoauthNetwork::new();
    let mut remap = vec![usize::MAX; net.node_count()];
    let mut merged = usize::MAX;
    for (i, node) in net.nodes().iter().enumerate() {
        if i == first {
            merged = out.add_node(label, frac, whole)?;
        }
        if members.contains(&i) {
            remap[i] = merged;
        } else {
            remap[i] = out.add_node(&node.key, node.fractional_size, node.whole_size)?;
        }
    }
    for (i, j, w) in net.edges() {
        let (a, b) = (remap[i], remap[j]);
        if a != b {
            out.add_edge(a, b, w)?;
        }
    }
    Ok(out)
}

/// Keeps nodes whose fractional size passes `min_node_fractional` and edges
/// whose weight passes `min_edge_weight` between surviving nodes. `strict`
/// selects `>` over `>=` for both thresholds.
pub fn threshold_filter(
    net: &CoauthNetwork,
    min_node_fractional: f64,
    min_edge_weight: u64,
    strict: bool,
) -> CoauthNetwork {
    let node_ok = |s: f64| if strict { s > min_node_fractional } else { s >= min_node_fractional };
    let edge_ok = |w: u64| if strict { w > min_edge_weight } else { w >= min_edge_weight };
    let keep: Vec<usize> = (0..net.node_count())
        .filter(|&i| node_ok(net.node(i).fractional_size))
        .collect();
    let kept: HashSet<usize> = keep.iter().copied().collect();
    let mut out = CoauthNetwork::new();
    let mut remap = HashMap::new();
    for &i in &keep {
        let n = net.node(i);
        remap.insert(i, out.add_node(&n.key, n.fractional_size, n.whole_size).expect("unique"));
    }
    for (i, j, w) in net.edges() {
        if kept.contains(&i) && kept.contains(&j) && edge_ok(w) {
            out.add_edge(remap[&i], remap[&j], w).expect("valid edge");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> CoauthNetwork {
        CoauthNetwork::from_edges([("a", "b", 1), ("b", "c", 2), ("a", "c", 3)]).unwrap()
    }

    #[test]
    fn rejects_self_loops_and_zero_weights() {
        let mut net = CoauthNetwork::new();
        let a = net.ensure_node("a");
        let b = net.ensure_node("b");
        assert!(net.add_edge(a, a, 1).is_err());
        assert!(net.add_edge(a, b, 0).is_err());
        net.add_edge(a, b, 2).unwrap();
        net.add_edge(b, a, 3).unwrap();
        assert_eq!(net.edge_count(), 1);
        assert_eq!(net.weight(a, b), Some(5));
        assert!(net.add_node("a", 0.0, 0).is_err());
    }

    #[test]
    fn two_triangles_two_components() {
        let net = CoauthNetwork::from_edges([
            ("a", "b", 1), ("b", "c", 1), ("a", "c", 1),
            ("d", "e", 1), ("e", "f", 1), ("d", "f", 1),
        ])
        .unwrap();
        let comps = components(&net);
        assert_eq!(comps.len(), 2);
        assert!(comps.iter().all(|c| c.len() == 3));
        assert!(components(&CoauthNetwork::new()).is_empty());
        assert_eq!(largest_component(&CoauthNetwork::new()).node_count(), 0);
    }

    #[test]
    fn largest_component_with_isolates() {
        // a 183-node ring plus 4 isolates
        let mut net = CoauthNetwork::new();
        for i in 0..187 {
            net.add_node(&format!("n{i}"), 1.0, 1).unwrap();
        }
        for i in 0..183 {
            net.add_edge(i, (i + 1) % 183, 1).unwrap();
        }
        assert_eq!(components(&net).len(), 5);
        assert_eq!(largest_component(&net).node_count(), 183);
    }

    #[test]
    fn ego_star_on_triangle() {
        let star = ego_network(&triangle(), "a", true).unwrap();
        assert_eq!(star.node_count(), 3);
        assert_eq!(star.edge_count(), 2);
        assert_eq!(star.weight_by_key("a", "b"), Some(1));
        assert_eq!(star.weight_by_key("a", "c"), Some(3));
        assert_eq!(star.weight_by_key("b", "c"), None);
        let full = ego_network(&triangle(), "a", false).unwrap();
        assert!(full.same_structure(&triangle()));
        assert!(matches!(ego_network(&triangle(), "zz", true), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn shrink_sums_outside_weights() {
        let net = CoauthNetwork::from_edges([("A", "X", 3), ("B", "X", 4), ("A", "B", 9)]).unwrap();
        let s = shrink(&net, &["A", "B"], "E").unwrap();
        assert_eq!(s.node_count(), 2);
        assert_eq!(s.weight_by_key("E", "X"), Some(7));
        assert_eq!(s.edge_count(), 1);
    }

    #[test]
    fn shrink_singleton_relabels() {
        let s = shrink(&triangle(), &["b"], "B").unwrap();
        assert_eq!(s.keys().collect::<Vec<_>>(), vec!["a", "B", "c"]);
        assert_eq!(s.total_weight(), triangle().total_weight());
    }

    #[test]
    fn shrink_errors() {
        let empty: [&str; 0] = [];
        assert!(shrink(&triangle(), &empty, "E").is_err());
        assert!(shrink(&triangle(), &["q"], "E").is_err());
        assert!(matches!(shrink(&triangle(), &["a"], "b"), Err(Error::DuplicateNode(_))));
    }

    #[test]
    fn threshold_identity_and_empty() {
        let mut net = triangle();
        for i in 0..3 {
            net.node_mut(i).fractional_size = 1.0 + i as f64;
        }
        assert_eq!(threshold_filter(&net, 0.0, 0, false), net);
        assert_eq!(threshold_filter(&net, 10.0, 0, true).node_count(), 0);
        let f = threshold_filter(&net, 1.0, 2, true);
        assert_eq!(f.keys().collect::<Vec<_>>(), vec!["b", "c"]);
        assert_eq!(f.edge_count(), 0, "b-c has weight 2, not > 2");
    }
}
