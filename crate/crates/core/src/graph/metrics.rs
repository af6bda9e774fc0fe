//! Network statistics on the unweighted skeleton: density, degree,
//! betweenness (Brandes dependency accumulation), closeness, clustering.

use std::collections::VecDeque;
use std::ops::{Add, AddAssign, Div, Mul};

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::{components, largest_component, CoauthNetwork};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityVariant {
    /// `2m / (n (n - 1))`
    Simple,
    /// `2m / n²`, the denominator counting the diagonal.
    Loops,
}

pub fn density(net: &CoauthNetwork, variant: DensityVariant) -> Result<f64> {
    let n = net.node_count() as f64;
    let m = net.edge_count() as f64;
    match variant {
        DensityVariant::Simple if net.node_count() >= 2 => Ok(2.0 * m / (n * (n - 1.0))),
        DensityVariant::Loops if net.node_count() >= 1 => Ok(2.0 * m / (n * n)),
        _ => Err(Error::Undefined(format!(
            "{variant:?} density of a network with {} nodes",
            net.node_count()
        ))),
    }
}

pub fn average_degree(net: &CoauthNetwork) -> Result<f64> {
    if net.is_empty() {
        return Err(Error::Undefined("average degree of an empty network".into()));
    }
    Ok(2.0 * net.edge_count() as f64 / net.node_count() as f64)
}

/// Numeric type the betweenness accumulation runs in. `f64` in production;
/// exact rationals in tests.
pub trait PathScalar:
    Clone + Zero + One + Add<Output = Self> + AddAssign + Mul<Output = Self> + Div<Output = Self>
{
}

impl<T> PathScalar for T where
    T: Clone + Zero + One + Add<Output = T> + AddAssign + Mul<Output = T> + Div<Output = T>
{
}

/// Adds the dependencies of `source` on every other node to `acc`.
fn accumulate_source<T: PathScalar>(adj: &[Vec<usize>], source: usize, acc: &mut [T]) {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma: Vec<T> = vec![T::zero(); n];
    let mut dist: Vec<Option<usize>> = vec![None; n];
    sigma[source] = T::one();
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        let dv = dist[v].expect("queued nodes have a distance");
        for &w in &adj[v] {
            if dist[w].is_none() {
                dist[w] = Some(dv + 1);
                queue.push_back(w);
            }
            if dist[w] == Some(dv + 1) {
                let sv = sigma[v].clone();
                sigma[w] += sv;
                preds[w].push(v);
            }
        }
    }
    let mut delta: Vec<T> = vec![T::zero(); n];
    while let Some(w) = order.pop() {
        let coeff = (T::one() + delta[w].clone()) / sigma[w].clone();
        for &v in &preds[w] {
            let add = sigma[v].clone() * coeff.clone();
            delta[v] += add;
        }
        if w != source {
            acc[w] += delta[w].clone();
        }
    }
}

/// Raw betweenness counted over unordered pairs: on a path `a-b-c` the
/// middle node scores 1. Sequential; generic over the scalar type.
pub fn betweenness_raw<T: PathScalar>(net: &CoauthNetwork) -> Vec<T> {
    let adj = net.skeleton();
    let mut acc = vec![T::zero(); adj.len()];
    for s in 0..adj.len() {
        accumulate_source(&adj, s, &mut acc);
    }
    let two = T::one() + T::one();
    acc.into_iter().map(|v| v / two.clone()).collect()
}

const SOURCE_CHUNK: usize = 32;

fn betweenness_raw_parallel(net: &CoauthNetwork) -> Vec<f64> {
    let adj = net.skeleton();
    let n = adj.len();
    let sources: Vec<usize> = (0..n).collect();
    // Sources go in fixed-size chunks, reduced in chunk order.
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            for &s in chunk {
                accumulate_source(&adj, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total.into_iter().map(|v| v / 2.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Betweenness {
    pub raw: Vec<f64>,
    /// `raw / ((n-1)(n-2)/2)`; all zero when `n < 3`.
    pub normalized: Vec<f64>,
}

pub fn betweenness(net: &CoauthNetwork) -> Betweenness {
    let raw = betweenness_raw_parallel(net);
    let n = net.node_count() as f64;
    let pairs = (n - 1.0) * (n - 2.0) / 2.0;
    let normalized = raw
        .iter()
        .map(|&r| if pairs > 0.0 { r / pairs } else { 0.0 })
        .collect();
    Betweenness { raw, normalized }
}

/// Freeman centralization of normalized betweenness:
/// `Σ (c* - c_i) / (n - 1)`, on the largest component.
pub fn betweenness_centralization(net: &CoauthNetwork) -> Result<f64> {
    let giant = largest_component(net);
    let n = giant.node_count();
    if n < 3 {
        return Err(Error::Undefined(format!(
            "betweenness centralization with a largest component of {n} nodes"
        )));
    }
    let b = betweenness(&giant).normalized;
    let max = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(b.iter().map(|c| max - c).sum::<f64>() / (n as f64 - 1.0))
}

/// Per node: number of other nodes reachable, and the sum of hop distances
/// to them.
pub fn distance_sums(net: &CoauthNetwork) -> Vec<(usize, u64)> {
    let adj = net.skeleton();
    (0..adj.len())
        .into_par_iter()
        .map(|s| {
            let mut dist = vec![usize::MAX; adj.len()];
            dist[s] = 0;
            let mut queue = VecDeque::from([s]);
            let (mut reach, mut sum) = (0usize, 0u64);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        reach += 1;
                        sum += dist[w] as u64;
                        queue.push_back(w);
                    }
                }
            }
            (reach, sum)
        })
        .collect()
}

/// Classical closeness within each node's component:
/// `(n_comp - 1) / Σ distances`. `None` for isolates.
pub fn closeness(net: &CoauthNetwork) -> Vec<Option<f64>> {
    distance_sums(net)
        .into_iter()
        .map(|(reach, sum)| (reach > 0).then(|| reach as f64 / sum as f64))
        .collect()
}

/// Per-node triangle counts (triangles through the node) on the skeleton.
pub fn triangles(net: &CoauthNetwork) -> Vec<u64> {
    (0..net.node_count())
        .into_par_iter()
        .map(|v| {
            let nbrs: Vec<usize> = net.neighbors(v).map(|(j, _)| j).collect();
            let mut t = 0;
            for (x, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[x + 1..] {
                    if net.weight(a, b).is_some() {
                        t += 1;
                    }
                }
            }
            t
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Clustering {
    /// Mean local clustering over nodes of degree ≥ 2.
    pub clustering_ws: Option<f64>,
    /// `3 × triangles / connected triples`.
    pub transitivity: Option<f64>,
}

pub fn local_clustering(net: &CoauthNetwork) -> Vec<Option<f64>> {
    triangles(net)
        .into_iter()
        .enumerate()
        .map(|(v, t)| {
            let d = net.degree(v) as u64;
            (d >= 2).then(|| t as f64 / (d * (d - 1) / 2) as f64)
        })
        .collect()
}

pub fn clustering(net: &CoauthNetwork) -> Clustering {
    let tri = triangles(net);
    let local = local_clustering(net);
    let eligible: Vec<f64> = local.iter().flatten().copied().collect();
    let clustering_ws = (!eligible.is_empty()).then(|| eligible.iter().sum::<f64>() / eligible.len() as f64);
    let closed: u64 = tri.iter().sum();
    let triples: u64 = (0..net.node_count())
        .map(|v| {
            let d = net.degree(v) as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum();
    let transitivity = (triples > 0).then(|| closed as f64 / triples as f64);
    Clustering {
        clustering_ws,
        transitivity,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeCentrality {
    pub key: String,
    pub degree: usize,
    pub normalized_degree: f64,
    pub betweenness: f64,
    pub closeness: Option<f64>,
}

/// Network-level parameters in the layout of a classic comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkParameters {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub n_components: usize,
    pub largest_component: usize,
    pub density_simple: Option<f64>,
    pub density_loops: Option<f64>,
    pub average_degree: Option<f64>,
    pub betweenness_centralization: Option<f64>,
    pub clustering_ws: Option<f64>,
    pub transitivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityReport {
    pub network: NetworkParameters,
    pub nodes: Vec<NodeCentrality>,
}

impl CentralityReport {
    /// Nodes ranked by normalized betweenness (ties by key), at most `k`.
    pub fn top_by_betweenness(&self, k: usize) -> Vec<&NodeCentrality> {
        let mut ranked: Vec<&NodeCentrality> = self.nodes.iter().collect();
        ranked.sort_by(|a, b| {
            b.betweenness
                .total_cmp(&a.betweenness)
                .then_with(|| a.key.cmp(&b.key))
        });
        ranked.truncate(k);
        ranked
    }
}

pub fn network_parameters(net: &CoauthNetwork) -> NetworkParameters {
    let comps = components(net);
    let c = clustering(net);
    NetworkParameters {
        n_nodes: net.node_count(),
        n_edges: net.edge_count(),
        n_components: comps.len(),
        largest_component: comps.first().map_or(0, Vec::len),
        density_simple: density(net, DensityVariant::Simple).ok(),
        density_loops: density(net, DensityVariant::Loops).ok(),
        average_degree: average_degree(net).ok(),
        betweenness_centralization: betweenness_centralization(net).ok(),
        clustering_ws: c.clustering_ws,
        transitivity: c.transitivity,
    }
}

pub fn centrality_report(net: &CoauthNetwork) -> CentralityReport {
    let n = net.node_count();
    let b = betweenness(net);
    let close = closeness(net);
    let nodes = (0..n)
        .map(|i| {
            let degree = net.degree(i);
            NodeCentrality {
                key: net.node(i).key.clone(),
                degree,
                normalized_degree: if n >= 2 { degree as f64 / (n - 1) as f64 } else { 0.0 },
                betweenness: b.normalized[i],
                closeness: close[i],
            }
        })
        .collect();
    CentralityReport {
        network: network_parameters(net),
        nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> CoauthNetwork {
        CoauthNetwork::from_edges([("a", "b", 1), ("b", "c", 5)]).unwrap()
    }

    fn star5() -> CoauthNetwork {
        CoauthNetwork::from_edges([("c", "1", 1), ("c", "2", 1), ("c", "3", 1), ("c", "4", 1)]).unwrap()
    }

    fn cycle(n: usize) -> CoauthNetwork {
        let mut net = CoauthNetwork::new();
        for i in 0..n {
            net.ensure_node(&i.to_string());
        }
        for i in 0..n {
            net.add_edge(i, (i + 1) % n, 1).unwrap();
        }
        net
    }

    fn complete(n: usize) -> CoauthNetwork {
        let mut net = CoauthNetwork::new();
        for i in 0..n {
            net.ensure_node(&i.to_string());
        }
        for i in 0..n {
            for j in i + 1..n {
                net.add_edge(i, j, 1).unwrap();
            }
        }
        net
    }

    #[test]
    fn density_variants() {
        assert_eq!(density(&complete(4), DensityVariant::Simple).unwrap(), 1.0);
        assert!(density(&complete(1), DensityVariant::Simple).is_err());
        assert!(density(&CoauthNetwork::new(), DensityVariant::Loops).is_err());
        assert_eq!(density(&complete(1), DensityVariant::Loops).unwrap(), 0.0);
    }

    #[test]
    fn average_degree_cases() {
        assert_eq!(average_degree(&star5()).unwrap(), 1.6);
        assert_eq!(average_degree(&cycle(7)).unwrap(), 2.0);
        assert!(average_degree(&CoauthNetwork::new()).is_err());
    }

    #[test]
    fn path_betweenness() {
        let b = betweenness(&path3());
        assert_eq!(b.raw, vec![0.0, 1.0, 0.0]);
        assert_eq!(b.normalized[1], 1.0);
    }

    #[test]
    fn star_betweenness_and_centralization() {
        let b = betweenness(&star5());
        assert_eq!(b.raw[0], 6.0);
        assert_eq!(b.normalized[0], 1.0);
        assert_eq!(betweenness_centralization(&star5()).unwrap(), 1.0);
    }

    #[test]
    fn cycle_centralization_zero() {
        assert!(betweenness_centralization(&cycle(5)).unwrap().abs() < 1e-12);
        assert!(betweenness_centralization(&complete(2)).is_err());
    }

    #[test]
    fn closeness_path_and_complete() {
        let c = closeness(&path3());
        assert_eq!(c[1], Some(1.0));
        assert_eq!(c[0], Some(2.0 / 3.0));
        assert!(closeness(&complete(6)).iter().all(|&c| c == Some(1.0)));
        let mut iso = path3();
        iso.ensure_node("z");
        assert_eq!(closeness(&iso)[3], None);
    }

    #[test]
    fn clustering_triangle_and_star() {
        let c = clustering(&complete(3));
        assert_eq!(c.clustering_ws, Some(1.0));
        assert_eq!(c.transitivity, Some(1.0));
        let s = clustering(&star5());
        assert_eq!(s.clustering_ws, Some(0.0));
        assert_eq!(s.transitivity, Some(0.0));
        let single_edge = CoauthNetwork::from_edges([("a", "b", 1)]).unwrap();
        assert_eq!(clustering(&single_edge).clustering_ws, None);
    }

    #[test]
    fn report_shape() {
        let r = centrality_report(&star5());
        assert_eq!(r.network.n_nodes, 5);
        assert_eq!(r.network.average_degree, Some(1.6));
        assert_eq!(r.top_by_betweenness(1)[0].key, "c");
        assert_eq!(r.nodes[0].normalized_degree, 1.0);
    }
}
