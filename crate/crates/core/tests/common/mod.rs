//! Generators and brute-force oracles shared by the integration tests. The
//! oracles deliberately avoid the library's algorithms: they enumerate
//! paths, triples and partitions directly.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coauthnet::address::{Affiliation, NormalizedDocument};
use coauthnet::corpus::{DocType, Document};
use coauthnet::graph::CoauthNetwork;

pub type Q = Ratio<i128>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph on nodes `v0..v{n-1}` with weights in `1..=max_w`.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64, max_w: u64) -> CoauthNetwork {
    let mut net = CoauthNetwork::new();
    for i in 0..n {
        net.add_node(&format!("v{i}"), rng.gen_range(0.0..5.0), rng.gen_range(0..10)).unwrap();
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                net.add_edge(i, j, rng.gen_range(1..=max_w)).unwrap();
            }
        }
    }
    net
}

/// Random graph with exactly `m` edges among the first `n - isolates`
/// nodes, which form one connected component; the rest are isolates.
pub fn graph_with_shape(n: usize, m: usize, isolates: usize, seed: u64) -> CoauthNetwork {
    let core = n - isolates;
    assert!(m >= core - 1 && m <= core * (core - 1) / 2);
    let mut r = rng(seed);
    let mut net = CoauthNetwork::new();
    for i in 0..n {
        net.add_node(&format!("C{i:03}"), 1.0, 1).unwrap();
    }
    for i in 1..core {
        let j = r.gen_range(0..i);
        net.add_edge(i, j, 1).unwrap();
    }
    let mut pairs: Vec<(usize, usize)> = (0..core)
        .flat_map(|i| (i + 1..core).map(move |j| (i, j)))
        .filter(|&(i, j)| net.weight(i, j).is_none())
        .collect();
    pairs.shuffle(&mut r);
    for &(i, j) in pairs.iter().take(m - (core - 1)) {
        net.add_edge(i, j, r.gen_range(1..5)).unwrap();
    }
    net
}

/// Four blocks of ten nodes; dense inside, sparse between.
pub fn planted_blocks(seed: u64) -> (CoauthNetwork, Vec<usize>) {
    let mut r = rng(seed);
    let mut net = CoauthNetwork::new();
    let truth: Vec<usize> = (0..40).map(|i| i / 10).collect();
    for i in 0..40 {
        net.add_node(&format!("b{}n{}", i / 10, i % 10), 1.0, 1).unwrap();
    }
    for i in 0..40 {
        for j in i + 1..40 {
            let p = if truth[i] == truth[j] { 0.7 } else { 0.03 };
            if r.gen_bool(p) {
                net.add_edge(i, j, 1).unwrap();
            }
        }
    }
    (net, truth)
}

/// True when two assignments describe the same grouping.
pub fn same_grouping(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// Relabels nodes: node `i` of `net` becomes node `perm[i]` of the result,
/// keeping keys attached to their nodes.
pub fn permute(net: &CoauthNetwork, perm: &[usize]) -> CoauthNetwork {
    let n = net.node_count();
    let mut inv = vec![0; n];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    let mut out = CoauthNetwork::new();
    for &old in &inv {
        let node = net.node(old);
        out.add_node(&node.key, node.fractional_size, node.whole_size).unwrap();
    }
    for (i, j, w) in net.edges() {
        out.add_edge(perm[i], perm[j], w).unwrap();
    }
    out
}

pub fn adjacency(net: &CoauthNetwork) -> Vec<BTreeSet<usize>> {
    (0..net.node_count())
        .map(|i| net.neighbors(i).map(|(j, _)| j).collect())
        .collect()
}

/// Every simple path from `s` to `t` of exactly `len` edges.
fn paths_of_length(adj: &[BTreeSet<usize>], s: usize, t: usize, len: usize) -> Vec<Vec<usize>> {
    fn walk(adj: &[BTreeSet<usize>], t: usize, left: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        if left == 0 {
            if last == t {
                out.push(path.clone());
            }
            return;
        }
        for &next in &adj[last] {
            if !path.contains(&next) {
                path.push(next);
                walk(adj, t, left - 1, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(adj, t, len, &mut vec![s], &mut out);
    out
}

/// Hop distance by plain BFS; `None` when unreachable.
pub fn bfs_distances(adj: &[BTreeSet<usize>], s: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[s] = Some(0);
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if dist[w].is_none() {
                dist[w] = Some(dist[v].unwrap() + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Betweenness over unordered pairs by enumerating every shortest path.
pub fn oracle_betweenness(net: &CoauthNetwork) -> Vec<Q> {
    let adj = adjacency(net);
    let n = adj.len();
    let mut out = vec![Q::from_integer(0); n];
    for s in 0..n {
        let dist = bfs_distances(&adj, s);
        for t in s + 1..n {
            let Some(d) = dist[t] else { continue };
            let paths = paths_of_length(&adj, s, t, d);
            let total = paths.len() as i128;
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&v)).count() as i128;
                out[v] += Q::new(through, total);
            }
        }
    }
    out
}

/// Closeness `(reach) / Σ distances` within each component, from a full
/// distance matrix built by repeated relaxation.
pub fn oracle_closeness(net: &CoauthNetwork) -> Vec<Option<Q>> {
    let n = net.node_count();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for (i, j, _) in net.edges() {
        d[i][j] = 1;
        d[j][i] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            let reach: Vec<usize> = (0..n).filter(|&j| j != i && d[i][j] < inf).map(|j| d[i][j]).collect();
            if reach.is_empty() {
                None
            } else {
                Some(Q::new(reach.len() as i128, reach.iter().sum::<usize>() as i128))
            }
        })
        .collect()
}

/// `(local clustering per node, mean over degree >= 2, transitivity)` by
/// scanning every ordered triple.
pub fn oracle_clustering(net: &CoauthNetwork) -> (Vec<Option<Q>>, Option<Q>, Option<Q>) {
    let adj = adjacency(net);
    let n = adj.len();
    let mut local = vec![None; n];
    let mut closed_total = 0i128;
    let mut triples_total = 0i128;
    for v in 0..n {
        let mut closed = 0i128;
        let mut triples = 0i128;
        for a in 0..n {
            for b in 0..n {
                if a != b && a != v && b != v && adj[v].contains(&a) && adj[v].contains(&b) {
                    triples += 1;
                    if adj[a].contains(&b) {
                        closed += 1;
                    }
                }
            }
        }
        if triples > 0 {
            local[v] = Some(Q::new(closed, triples));
        }
        closed_total += closed;
        triples_total += triples;
    }
    let defined: Vec<Q> = local.iter().flatten().copied().collect();
    let ws = (!defined.is_empty()).then(|| defined.iter().copied().sum::<Q>() / Q::from_integer(defined.len() as i128));
    let trans = (triples_total > 0).then(|| Q::new(closed_total, triples_total));
    (local, ws, trans)
}

/// Modularity straight from `Σ_ij [A_ij - k_i k_j / 2W] δ(c_i, c_j) / 2W`.
pub fn oracle_modularity(net: &CoauthNetwork, assignment: &[usize], weighted: bool) -> f64 {
    let n = net.node_count();
    let w = |i: usize, j: usize| -> f64 {
        match net.weight(i, j) {
            Some(x) if weighted => x as f64,
            Some(_) => 1.0,
            None => 0.0,
        }
    };
    let k: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w(i, j)).sum()).collect();
    let two_w: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if assignment[i] == assignment[j] {
                q += w(i, j) - k[i] * k[j] / two_w;
            }
        }
    }
    q / two_w
}

/// All set partitions of `0..n` as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            if prefix.is_empty() && c > 0 {
                break;
            }
            prefix.push(c);
            let next_max = if prefix.len() == 1 { 0 } else { max.max(c) };
            grow(prefix, n, next_max, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    grow(&mut Vec::new(), n, 0, &mut out);
    out
}

pub fn oracle_best_modularity(net: &CoauthNetwork, weighted: bool) -> f64 {
    all_partitions(net.node_count())
        .iter()
        .map(|p| oracle_modularity(net, p, weighted))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `(binary co-occurrence weights, n × m affiliation-routine counts)` by a
/// document × entity-pair scan over raw labels.
pub fn oracle_cooccurrence(docs: &[Vec<&str>]) -> (BTreeMap<(String, String), u64>, BTreeMap<(String, String), u64>) {
    let entities: BTreeSet<&str> = docs.iter().flatten().copied().collect();
    let entities: Vec<&str> = entities.into_iter().collect();
    let mut binary = BTreeMap::new();
    let mut routine = BTreeMap::new();
    for (x, a) in entities.iter().enumerate() {
        for b in &entities[x + 1..] {
            let mut bin = 0;
            let mut prod = 0;
            for d in docs {
                let ca = d.iter().filter(|e| *e == a).count() as u64;
                let cb = d.iter().filter(|e| *e == b).count() as u64;
                if ca > 0 && cb > 0 {
                    bin += 1;
                }
                prod += ca * cb;
            }
            if bin > 0 {
                binary.insert((a.to_string(), b.to_string()), bin);
                routine.insert((a.to_string(), b.to_string()), prod);
            }
        }
    }
    (binary, routine)
}

/// Pearson's r from the textbook two-pass formula.
pub fn oracle_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// KL divergence in bits from natural logarithms.
pub fn oracle_kl_bits(q: &[f64], p: &[f64]) -> f64 {
    q.iter().zip(p).map(|(qi, pi)| qi * (qi / pi).ln()).sum::<f64>() / std::f64::consts::LN_2
}

pub fn affiliation(org: &str, country: &str, state: Option<&str>) -> Affiliation {
    Affiliation {
        org_key: org.to_string(),
        city: None,
        us_state: state.map(str::to_string),
        country: country.to_string(),
    }
}

pub fn ndoc(id: &str, affs: Vec<Affiliation>) -> NormalizedDocument {
    NormalizedDocument {
        id: id.to_string(),
        citable: true,
        author_count: affs.len() as u32,
        affiliations: affs,
    }
}

/// Documents for one organization with `dom` single-country and `int`
/// two-country items. International items pair it with `partner`.
pub fn org_items(
    prefix: &str,
    org: &str,
    country: &str,
    state: Option<&str>,
    dom: usize,
    int: usize,
    partner: (&str, &str),
) -> Vec<NormalizedDocument> {
    let mut out = Vec::new();
    for k in 0..dom {
        out.push(ndoc(&format!("{prefix}-{org}-d{k}"), vec![affiliation(org, country, state)]));
    }
    for k in 0..int {
        out.push(ndoc(
            &format!("{prefix}-{org}-i{k}"),
            vec![affiliation(org, country, state), affiliation(partner.0, partner.1, None)],
        ));
    }
    out
}

pub fn document(id: &str, doc_type: DocType, addresses: &[&str], authors: u32) -> Document {
    Document {
        id: id.to_string(),
        doc_type,
        language: "ENGLISH".to_string(),
        source_title: "J TEST".to_string(),
        raw_addresses: addresses.iter().map(|s| s.to_string()).collect(),
        author_count: authors,
    }
}

pub const SPAIN_PARTNER: (&str, &str) = ("PARTNER-INST", "SPAIN");

/// Three countries with engineered verdicts. FRANCE has domestic counts
/// (16, 4) against international (10, 10); GERMANY swaps the roles; ITALY
/// has proportional counts. Every international item pairs with one
/// Spanish partner, which leaves SPAIN with a single one-sided profile.
pub fn three_country_fixture() -> Vec<NormalizedDocument> {
    let plan: [(&str, &str, usize, usize); 6] = [
        ("F1", "FRANCE", 16, 10),
        ("F2", "FRANCE", 4, 10),
        ("G1", "GERMANY", 10, 16),
        ("G2", "GERMANY", 10, 4),
        ("I1", "ITALY", 12, 12),
        ("I2", "ITALY", 6, 6),
    ];
    plan.iter()
        .flat_map(|&(org, country, dom, int)| org_items("fx", org, country, None, dom, int, SPAIN_PARTNER))
        .collect()
}

/// US states: MA has two eligible organizations, PR one organization with
/// 74 items of which 62 are international, WY only a small organization.
pub fn state_fixture() -> Vec<NormalizedDocument> {
    let mut docs = Vec::new();
    docs.extend(org_items("st", "MIT", "USA", Some("MA"), 20, 10, SPAIN_PARTNER));
    docs.extend(org_items("st", "HARVARD-UNIV", "USA", Some("MA"), 15, 15, SPAIN_PARTNER));
    docs.extend(org_items("st", "UNIV-PUERTO-RICO", "USA", Some("PR"), 12, 62, SPAIN_PARTNER));
    docs.extend(org_items("st", "UNIV-WYOMING", "USA", Some("WY"), 5, 2, SPAIN_PARTNER));
    docs
}
