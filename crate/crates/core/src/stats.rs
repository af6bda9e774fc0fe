//! Comparison statistics between two networks or two sets of marginals.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::graph::CoauthNetwork;

/// Two symmetric, zero-diagonal weight matrices over a shared node order.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPair {
    keys: Vec<String>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl MatrixPair {
    /// `a` and `b` are row-major `n × n`.
    pub fn new(keys: Vec<String>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let n = keys.len();
        for (name, m) in [("first", &a), ("second", &b)] {
            if m.len() != n * n {
                return Err(Error::InvalidArgument(format!(
                    "{name} matrix has {} cells, expected {}",
                    m.len(),
                    n * n
                )));
            }
            for i in 0..n {
                if m[i * n + i] != 0.0 {
                    return Err(Error::InvalidArgument(format!("{name} matrix has a nonzero diagonal")));
                }
                for j in i + 1..n {
                    if m[i * n + j] != m[j * n + i] {
                        return Err(Error::InvalidArgument(format!("{name} matrix is not symmetric")));
                    }
                }
            }
        }
        Ok(MatrixPair { keys, a, b })
    }

    /// Aligns two networks on the sorted union of their keys; a node absent
    /// from one network contributes a zero row there.
    pub fn from_networks(a: &CoauthNetwork, b: &CoauthNetwork) -> Self {
        let keys: Vec<String> = a
            .keys()
            .chain(b.keys())
            .map(str::to_owned)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let fill = |net: &CoauthNetwork| {
            let n = keys.len();
            let pos: Vec<usize> = net
                .keys()
                .map(|k| keys.binary_search_by(|x| x.as_str().cmp(k)).expect("key in union"))
                .collect();
            let mut m = vec![0.0; n * n];
            for (i, j, w) in net.edges() {
                let (pi, pj) = (pos[i], pos[j]);
                m[pi * n + pj] = w as f64;
                m[pj * n + pi] = w as f64;
            }
            m
        };
        let (ma, mb) = (fill(a), fill(b));
        MatrixPair { keys, a: ma, b: mb }
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    fn upper(m: &[f64], n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(m[i * n + j]);
            }
        }
        out
    }

    pub fn upper_a(&self) -> Vec<f64> {
        Self::upper(&self.a, self.len())
    }

    pub fn upper_b(&self) -> Vec<f64> {
        Self::upper(&self.b, self.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QapResult {
    pub r: f64,
    pub p: f64,
    pub n_permutations: usize,
    pub seed: u64,
}

fn permutation_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Pearson statistic over the upper triangle with the second matrix read
/// through a node relabeling. Integer-valued matrices are summed exactly, so
/// the statistic does not depend on cell order; other matrices use centered
/// floating-point sums.
enum QapKernel<'a> {
    Counts {
        x: Vec<i128>,
        b: Vec<i128>,
        n: usize,
        sx: i128,
        sy: i128,
        denom: f64,
    },
    Real {
        xc: Vec<f64>,
        b: &'a [f64],
        n: usize,
        norm: f64,
    },
}

const MAX_EXACT: f64 = 2_147_483_648.0;

fn as_counts(v: &[f64]) -> Option<Vec<i128>> {
    v.iter()
        .map(|&c| (c.fract() == 0.0 && c.abs() < MAX_EXACT).then_some(c as i128))
        .collect()
}

impl<'a> QapKernel<'a> {
    fn new(pair: &'a MatrixPair) -> Result<Self> {
        let n = pair.len();
        let x = pair.upper_a();
        let y = pair.upper_b();
        let undefined = || Error::Undefined("QAP correlation with zero variance".into());
        if x.is_empty() {
            return Err(undefined());
        }
        if let (Some(xi), Some(yi), Some(bi)) = (as_counts(&x), as_counts(&y), as_counts(&pair.b)) {
            let m = xi.len() as i128;
            let sx: i128 = xi.iter().sum();
            let sy: i128 = yi.iter().sum();
            let dx = m * xi.iter().map(|v| v * v).sum::<i128>() - sx * sx;
            let dy = m * yi.iter().map(|v| v * v).sum::<i128>() - sy * sy;
            if dx == 0 || dy == 0 {
                return Err(undefined());
            }
            return Ok(QapKernel::Counts {
                x: xi,
                b: bi,
                n,
                sx,
                sy,
                denom: ((dx as f64) * (dy as f64)).sqrt(),
            });
        }
        let (mx, my) = (mean(&x), mean(&y));
        let xc: Vec<f64> = x.iter().map(|v| v - mx).collect();
        let sxx: f64 = xc.iter().map(|v| v * v).sum();
        let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
        if sxx == 0.0 || syy == 0.0 {
            return Err(undefined());
        }
        Ok(QapKernel::Real {
            xc,
            b: &pair.b,
            n,
            norm: (sxx * syy).sqrt(),
        })
    }

    /// A value that orders permutations like r does.
    fn score(&self, perm: &[usize]) -> Score {
        match self {
            QapKernel::Counts { x, b, n, sx, sy, .. } => {
                let mut k = 0;
                let mut sxy: i128 = 0;
                for i in 0..*n {
                    let row = perm[i] * n;
                    for j in i + 1..*n {
                        sxy += x[k] * b[row + perm[j]];
                        k += 1;
                    }
                }
                Score::Exact(x.len() as i128 * sxy - sx * sy)
            }
            QapKernel::Real { xc, b, n, norm } => {
                let mut k = 0;
                let mut s = 0.0;
                for i in 0..*n {
                    let row = perm[i] * n;
                    for j in i + 1..*n {
                        s += xc[k] * b[row + perm[j]];
                        k += 1;
                    }
                }
                Score::Real(s / norm)
            }
        }
    }

    fn r(&self, score: Score) -> f64 {
        match (self, score) {
            (QapKernel::Counts { denom, .. }, Score::Exact(s)) => s as f64 / denom,
            (_, Score::Real(r)) => r,
            (QapKernel::Real { .. }, Score::Exact(_)) => unreachable!("real kernel yields real scores"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Score {
    Exact(i128),
    Real(f64),
}

impl Score {
    fn at_least(self, observed: Score) -> bool {
        match (self, observed) {
            (Score::Exact(a), Score::Exact(b)) => a >= b,
            (Score::Real(a), Score::Real(b)) => a >= b - 1e-12,
            _ => unreachable!("scores from one kernel share a variant"),
        }
    }
}

fn shuffled(n: usize, seed: u64, t: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut permutation_rng(seed, t));
    perm
}

/// QAP correlation: Pearson r over upper-triangle cells, with an add-one
/// permutation p-value. Permutation `t` relabels the nodes of the second
/// matrix with a shuffle drawn from its own stream of the master seed, so
/// the parallel count equals the sequential one.
pub fn qap_correlation(pair: &MatrixPair, n_permutations: usize, seed: u64) -> Result<QapResult> {
    if n_permutations == 0 {
        return Err(Error::InvalidArgument("QAP needs at least one permutation".into()));
    }
    let kernel = QapKernel::new(pair)?;
    let n = pair.len();
    let identity: Vec<usize> = (0..n).collect();
    let observed = kernel.score(&identity);
    let at_least = (0..n_permutations)
        .into_par_iter()
        .filter(|&t| kernel.score(&shuffled(n, seed, t)).at_least(observed))
        .count();
    Ok(QapResult {
        r: kernel.r(observed),
        p: (1 + at_least) as f64 / (1 + n_permutations) as f64,
        n_permutations,
        seed,
    })
}

/// Single-threaded evaluation of [`qap_correlation`].
pub fn qap_correlation_sequential(pair: &MatrixPair, n_permutations: usize, seed: u64) -> Result<QapResult> {
    if n_permutations == 0 {
        return Err(Error::InvalidArgument("QAP needs at least one permutation".into()));
    }
    let kernel = QapKernel::new(pair)?;
    let n = pair.len();
    let identity: Vec<usize> = (0..n).collect();
    let observed = kernel.score(&identity);
    let mut at_least = 0;
    for t in 0..n_permutations {
        if kernel.score(&shuffled(n, seed, t)).at_least(observed) {
            at_least += 1;
        }
    }
    Ok(QapResult {
        r: kernel.r(observed),
        p: (1 + at_least) as f64 / (1 + n_permutations) as f64,
        n_permutations,
        seed,
    })
}

/// `|A ∧ B| / |A ∨ B|` over upper-triangle cells with nonzero weight.
pub fn jaccard_index(pair: &MatrixPair) -> Result<f64> {
    let (mut both, mut either) = (0usize, 0usize);
    for (x, y) in pair.upper_a().into_iter().zip(pair.upper_b()) {
        let (x, y) = (x != 0.0, y != 0.0);
        both += usize::from(x && y);
        either += usize::from(x || y);
    }
    if either == 0 {
        return Err(Error::Undefined("Jaccard index of two empty matrices".into()));
    }
    Ok(both as f64 / either as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZTestResult {
    pub z: f64,
    pub p_two_sided: f64,
    /// The (possibly adjusted) alpha the significance flag refers to.
    pub significant_at: f64,
    pub significant: bool,
}

impl ZTestResult {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.significant_at = alpha;
        self.significant = self.p_two_sided < alpha;
        self
    }
}

/// Pooled two-proportion z-test. Equal proportions give `z = 0` directly,
/// which also covers a pooled proportion of exactly 0 or 1.
pub fn two_proportion_z(x1: f64, n1: f64, x2: f64, n2: f64) -> Result<ZTestResult> {
    for (x, n) in [(x1, n1), (x2, n2)] {
        if !(n > 0.0) || !(0.0..=n).contains(&x) {
            return Err(Error::InvalidArgument(format!(
                "proportion {x}/{n} needs 0 <= x <= n and n > 0"
            )));
        }
    }
    let (p1, p2) = (x1 / n1, x2 / n2);
    let z = if p1 == p2 {
        0.0
    } else {
        let pooled = (x1 + x2) / (n1 + n2);
        let se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
        if se == 0.0 {
            return Err(Error::Undefined("pooled proportion is 0 or 1".into()));
        }
        (p1 - p2) / se
    };
    let normal = Normal::standard();
    let p = (2.0 * normal.sf(z.abs())).min(1.0);
    Ok(ZTestResult {
        z,
        p_two_sided: p,
        significant_at: 0.05,
        significant: p < 0.05,
    })
}

pub fn bonferroni_alpha(alpha: f64, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("Bonferroni needs m >= 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1]")));
    }
    Ok(alpha / m as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareRow {
    pub entity: String,
    pub count_a: f64,
    pub count_b: f64,
    pub share_a: f64,
    pub share_b: f64,
    pub z: f64,
    pub p_two_sided: f64,
    pub significant: bool,
}

/// Per-entity shares on both sides with two-proportion z-scores, sorted by
/// descending z. Significance uses `alpha` Bonferroni-adjusted over the
/// number of entities.
pub fn share_table(
    totals_a: &BTreeMap<String, f64>,
    totals_b: &BTreeMap<String, f64>,
    alpha: f64,
) -> Result<Vec<ShareRow>> {
    let na: f64 = totals_a.values().sum();
    let nb: f64 = totals_b.values().sum();
    if totals_a.is_empty() || totals_b.is_empty() || na <= 0.0 || nb <= 0.0 {
        return Err(Error::InvalidArgument("share table needs two nonempty totals".into()));
    }
    let entities: BTreeSet<&String> = totals_a.keys().chain(totals_b.keys()).collect();
    let adjusted = bonferroni_alpha(alpha, entities.len())?;
    let mut rows = entities
        .into_iter()
        .map(|e| {
            let a = totals_a.get(e).copied().unwrap_or(0.0);
            let b = totals_b.get(e).copied().unwrap_or(0.0);
            let t = two_proportion_z(a, na, b, nb)?.with_alpha(adjusted);
            Ok(ShareRow {
                entity: e.clone(),
                count_a: a,
                count_b: b,
                share_a: a / na,
                share_b: b / nb,
                z: t.z,
                p_two_sided: t.p_two_sided,
                significant: t.significant,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|x, y| y.z.total_cmp(&x.z).then_with(|| x.entity.cmp(&y.entity)));
    Ok(rows)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "correlation needs two equal-length vectors of at least 2 (got {} and {})",
            xs.len(),
            ys.len()
        )));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation with zero variance".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Ranks starting at 1; tied values share the average of their ranks.
pub fn mid_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return pearson(xs, ys);
    }
    pearson(&mid_ranks(xs), &mid_ranks(ys))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub r: Option<f64>,
    pub p: Option<f64>,
    pub n_permutations: usize,
    pub seed: u64,
    pub jaccard: Option<f64>,
    pub n_nodes: usize,
    pub per_entity_z: Vec<ShareRow>,
}

/// QAP, Jaccard and a share table of node strengths (total co-authorship
/// relations per entity) for two networks.
pub fn compare_networks(
    a: &CoauthNetwork,
    b: &CoauthNetwork,
    n_permutations: usize,
    seed: u64,
    alpha: f64,
) -> Result<ComparisonReport> {
    let pair = MatrixPair::from_networks(a, b);
    let qap = qap_correlation(&pair, n_permutations, seed).ok();
    let strengths = |net: &CoauthNetwork| -> BTreeMap<String, f64> {
        (0..net.node_count())
            .map(|i| (net.node(i).key.clone(), net.strength(i) as f64))
            .filter(|(_, s)| *s > 0.0)
            .collect()
    };
    let (sa, sb) = (strengths(a), strengths(b));
    let per_entity_z = if sa.is_empty() || sb.is_empty() {
        Vec::new()
    } else {
        share_table(&sa, &sb, alpha)?
    };
    Ok(ComparisonReport {
        r: qap.map(|q| q.r),
        p: qap.map(|q| q.p),
        n_permutations,
        seed,
        jaccard: jaccard_index(&pair).ok(),
        n_nodes: pair.len(),
        per_entity_z,
    })
}
