//! Modularity and Louvain community detection.
//!
//! Louvain alternates local moving (each node joins the neighboring
//! community with the largest modularity gain) with aggregation of
//! communities into super-nodes, until a level produces no move. Visit
//! order is shuffled from a seed, so a run is reproducible.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::CoauthNetwork;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Relabels communities densely in order of first appearance.
    pub fn from_assignment(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignment: Vec<usize> = raw
            .iter()
            .map(|c| {
                let next = map.len();
                *map.entry(*c).or_insert(next)
            })
            .collect();
        Partition {
            k: map.len(),
            assignment,
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            k: n,
        }
    }

    pub fn whole(n: usize) -> Self {
        Partition {
            assignment: vec![0; n],
            k: usize::from(n > 0),
        }
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Number of communities.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Members of each community, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

fn edge_weight(w: u64, weighted: bool) -> f64 {
    if weighted {
        w as f64
    } else {
        1.0
    }
}

/// `Q = Σ_c [ W_c / W - (S_c / 2W)² ]` where `W` is total edge weight, `W_c`
/// the weight inside community `c` and `S_c` its total strength.
pub fn modularity(net: &CoauthNetwork, partition: &Partition, weighted: bool) -> Result<f64> {
    if partition.len() != net.node_count() {
        return Err(Error::InvalidArgument(format!(
            "partition covers {} nodes, network has {}",
            partition.len(),
            net.node_count()
        )));
    }
    let mut inside = vec![0.0; partition.k()];
    let mut strength = vec![0.0; partition.k()];
    let mut total = 0.0;
    for (i, j, w) in net.edges() {
        let w = edge_weight(w, weighted);
        total += w;
        let (ci, cj) = (partition.community_of(i), partition.community_of(j));
        strength[ci] += w;
        strength[cj] += w;
        if ci == cj {
            inside[ci] += w;
        }
    }
    if total == 0.0 {
        return Err(Error::Undefined("modularity of a network without edges".into()));
    }
    Ok(inside
        .iter()
        .zip(&strength)
        .map(|(wc, sc)| wc / total - (sc / (2.0 * total)).powi(2))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LouvainConfig {
    pub weighted: bool,
    pub resolution: f64,
    pub max_levels: usize,
    /// Alternate the multilevel phase with Kernighan–Lin style node-move
    /// passes on the original network until neither improves Q. `false`
    /// gives plain Louvain.
    pub refine: bool,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        LouvainConfig {
            weighted: true,
            resolution: 1.0,
            max_levels: 64,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LouvainOutcome {
    pub seed: u64,
    pub partition: Partition,
    pub modularity: f64,
    /// Modularity of the flattened partition after each level, starting
    /// with the all-singletons partition.
    pub level_modularities: Vec<f64>,
}

// Gains below this count as ties. A tied node stays put.
const GAIN_EPS: f64 = 1e-10;

struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    strength: Vec<f64>,
}

impl Level {
    fn from_network(net: &CoauthNetwork, weighted: bool) -> Self {
        let n = net.node_count();
        let adj: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| net.neighbors(i).map(|(j, w)| (j, edge_weight(w, weighted))).collect())
            .collect();
        let strength = adj.iter().map(|row| row.iter().map(|&(_, w)| w).sum()).collect();
        Level {
            adj,
            self_loops: vec![0.0; n],
            strength,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Returns the dense community of each node and whether any node moved.
    fn local_moving(&self, rng: &mut ChaCha8Rng, resolution: f64, m2: f64) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.strength.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        let mut link = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut any_move = false;
        loop {
            let mut moved = false;
            for &i in &order {
                let ci = comm[i];
                let ki = self.strength[i];
                for &(j, w) in &self.adj[i] {
                    let c = comm[j];
                    if link[c] == 0.0 {
                        touched.push(c);
                    }
                    link[c] += w;
                }
                tot[ci] -= ki;
                let gain = |c: usize, link: &[f64], tot: &[f64]| link[c] - resolution * tot[c] * ki / m2;
                let mut best = ci;
                let mut best_gain = gain(ci, &link, &tot);
                for &c in &touched {
                    let g = gain(c, &link, &tot);
                    if g > best_gain + GAIN_EPS {
                        best = c;
                        best_gain = g;
                    }
                }
                tot[best] += ki;
                if best != ci {
                    comm[i] = best;
                    moved = true;
                }
                for &c in &touched {
                    link[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            any_move = true;
        }
        let dense = Partition::from_assignment(&comm);
        (dense.assignment, any_move)
    }

    fn aggregate(&self, comm: &[usize], k: usize) -> Level {
        let mut self_loops = vec![0.0; k];
        let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); k];
        for i in 0..self.len() {
            let ci = comm[i];
            self_loops[ci] += self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                let cj = comm[j];
                if ci == cj {
                    // each internal edge is seen from both ends
                    self_loops[ci] += w / 2.0;
                } else {
                    *rows[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        let mut strength = vec![0.0; k];
        for i in 0..self.len() {
            strength[comm[i]] += self.strength[i];
        }
        Level {
            adj: rows.into_iter().map(|r| r.into_iter().collect()).collect(),
            self_loops,
            strength,
        }
    }
}

pub fn louvain_with(net: &CoauthNetwork, seed: u64, config: &LouvainConfig) -> Result<LouvainOutcome> {
    if net.is_empty() {
        return Err(Error::InvalidArgument("Louvain on an empty network".into()));
    }
    let n = net.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = Level::from_network(net, config.weighted);
    let m2: f64 = base.strength.iter().sum();
    let mut membership: Vec<usize> = (0..n).collect();
    let mut level_modularities = vec![modularity(net, &Partition::singletons(n), config.weighted)?];

    for _ in 0..config.max_levels {
        let k = membership.iter().max().map_or(0, |&c| c + 1);
        let mut level = base.aggregate(&membership, k);
        for _ in 0..config.max_levels {
            let (comm, moved) = level.local_moving(&mut rng, config.resolution, m2);
            if !moved {
                break;
            }
            let k = comm.iter().max().map_or(0, |&c| c + 1);
            for m in membership.iter_mut() {
                *m = comm[*m];
            }
            level_modularities.push(modularity(net, &Partition::from_assignment(&membership), config.weighted)?);
            if k == level.len() || k == 1 {
                break;
            }
            level = level.aggregate(&comm, k);
        }
        if !config.refine || !refine_membership(&base, &mut membership, config.resolution, m2) {
            break;
        }
        level_modularities.push(modularity(net, &Partition::from_assignment(&membership), config.weighted)?);
    }
    let partition = Partition::from_assignment(&membership);
    let q = modularity(net, &partition, config.weighted)?;
    Ok(LouvainOutcome {
        seed,
        partition,
        modularity: q,
        level_modularities,
    })
}

/// Kernighan–Lin style refinement. Each pass moves every node exactly once,
/// always taking the best available move (to a neighbouring community or to
/// a new singleton) even when it lowers Q, then keeps the prefix of moves
/// with the highest cumulative gain. Passes repeat while they improve Q, so
/// Q never decreases. Returns whether the partition changed.
fn refine_membership(level: &Level, membership: &mut [usize], resolution: f64, m2: f64) -> bool {
    let n = level.len();
    let mut changed = false;
    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    loop {
        let start = Partition::from_assignment(membership).assignment;
        let mut comm = start.clone();
        let mut tot = vec![0.0; n];
        let mut size = vec![0usize; n];
        for i in 0..n {
            tot[comm[i]] += level.strength[i];
            size[comm[i]] += 1;
        }
        let mut free: Vec<usize> = (0..n).rev().filter(|&c| size[c] == 0).collect();
        let mut locked = vec![false; n];
        let mut moves: Vec<(usize, usize)> = Vec::with_capacity(n);
        let (mut cumulative, mut best, mut best_len) = (0.0, 0.0, 0);

        for _ in 0..n {
            let mut choice: Option<(f64, usize, usize)> = None;
            for i in (0..n).filter(|&i| !locked[i]) {
                let (ci, ki) = (comm[i], level.strength[i]);
                for &(j, w) in &level.adj[i] {
                    let c = comm[j];
                    if link[c] == 0.0 {
                        touched.push(c);
                    }
                    link[c] += w;
                }
                let gain = |c: usize, tot_c: f64| link[c] - resolution * tot_c * ki / m2;
                let stay = gain(ci, tot[ci] - ki);
                let mut consider = |delta: f64, to: usize| {
                    if choice.is_none_or(|(d, _, _)| delta > d + GAIN_EPS) {
                        choice = Some((delta, i, to));
                    }
                };
                for &c in touched.iter().filter(|&&c| c != ci) {
                    consider(gain(c, tot[c]) - stay, c);
                }
                if size[ci] > 1 {
                    if let Some(&empty) = free.last() {
                        consider(-stay, empty);
                    }
                }
                for &c in &touched {
                    link[c] = 0.0;
                }
                touched.clear();
            }
            let Some((delta, i, to)) = choice else { break };
            let from = comm[i];
            let ki = level.strength[i];
            if free.last() == Some(&to) {
                free.pop();
            }
            tot[from] -= ki;
            size[from] -= 1;
            if size[from] == 0 {
                free.push(from);
            }
            tot[to] += ki;
            size[to] += 1;
            comm[i] = to;
            locked[i] = true;
            moves.push((i, to));
            cumulative += 2.0 * delta / m2;
            if cumulative > best + GAIN_EPS {
                best = cumulative;
                best_len = moves.len();
            }
        }
        if best_len == 0 {
            return changed;
        }
        let mut kept = start;
        for &(i, to) in &moves[..best_len] {
            kept[i] = to;
        }
        membership.copy_from_slice(Partition::from_assignment(&kept).assignment());
        changed = true;
    }
}

/// One seeded Louvain run at resolution 1.
pub fn louvain(net: &CoauthNetwork, seed: u64, weighted: bool) -> Result<(Partition, f64)> {
    let out = louvain_with(
        net,
        seed,
        &LouvainConfig {
            weighted,
            ..Default::default()
        },
    )?;
    Ok((out.partition, out.modularity))
}

/// Runs every seed in parallel and keeps the highest modularity; equal
/// modularity goes to the lowest seed.
pub fn louvain_best_of(net: &CoauthNetwork, seeds: &[u64], config: &LouvainConfig) -> Result<LouvainOutcome> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no Louvain seeds given".into()));
    }
    let runs: Vec<LouvainOutcome> = seeds
        .par_iter()
        .map(|&s| louvain_with(net, s, config))
        .collect::<Result<_>>()?;
    Ok(runs
        .into_iter()
        .reduce(|best, run| {
            if run.modularity > best.modularity || (run.modularity == best.modularity && run.seed < best.seed) {
                run
            } else {
                best
            }
        })
        .expect("at least one run"))
}

pub const BRUTE_FORCE_MAX_NODES: usize = 12;

/// Exhaustive search over all set partitions. Ties (within 1e-12) go to
/// fewer communities, then to the lexicographically smallest assignment.
pub fn brute_force_best_partition(net: &CoauthNetwork, weighted: bool) -> Result<(Partition, f64)> {
    let n = net.node_count();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "exhaustive partition search refuses {n} nodes (max {BRUTE_FORCE_MAX_NODES})"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty network".into()));
    }
    let edges: Vec<(usize, usize, f64)> = net.edges().map(|(i, j, w)| (i, j, edge_weight(w, weighted))).collect();
    let total: f64 = edges.iter().map(|e| e.2).sum();
    if total == 0.0 {
        return Err(Error::Undefined("modularity of a network without edges".into()));
    }
    let mut strength = vec![0.0; n];
    for &(i, j, w) in &edges {
        strength[i] += w;
        strength[j] += w;
    }

    let mut rgs = vec![0usize; n];
    let mut prefix_max = vec![0usize; n];
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    let mut inside = vec![0.0; n];
    let mut comm_strength = vec![0.0; n];
    loop {
        let k = prefix_max[n - 1] + 1;
        inside[..k].fill(0.0);
        comm_strength[..k].fill(0.0);
        for i in 0..n {
            comm_strength[rgs[i]] += strength[i];
        }
        for &(i, j, w) in &edges {
            if rgs[i] == rgs[j] {
                inside[rgs[i]] += w;
            }
        }
        let q: f64 = (0..k)
            .map(|c| inside[c] / total - (comm_strength[c] / (2.0 * total)).powi(2))
            .sum();
        let better = match &best {
            None => true,
            Some((bq, bk, _)) => q > bq + 1e-12 || ((q - bq).abs() <= 1e-12 && k < *bk),
        };
        if better {
            best = Some((q, k, rgs.clone()));
        }

        // next restricted growth string
        let mut i = n - 1;
        loop {
            if i == 0 {
                let (q, _, a) = best.expect("at least one partition");
                return Ok((Partition::from_assignment(&a), q));
            }
            let limit = prefix_max[i - 1] + 1;
            if rgs[i] < limit {
                rgs[i] += 1;
                prefix_max[i] = prefix_max[i - 1].max(rgs[i]);
                for t in i + 1..n {
                    rgs[t] = 0;
                    prefix_max[t] = prefix_max[i];
                }
                break;
            }
            i -= 1;
        }
    }
}
