//! Document × entity incidence, whole and fractional counting, and the
//! binary-per-document co-occurrence network.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::address::{Affiliation, NormalizedDocument, USA};
use crate::error::{Error, Result};
use crate::graph::CoauthNetwork;

/// Which attribute of an affiliation names the entity being counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityLevel {
    Country,
    /// US addresses with a resolved state only.
    UsState,
    /// `(organization key, country)` pairs.
    Org,
}

impl EntityLevel {
    pub fn entity_of(self, a: &Affiliation) -> Option<String> {
        if !a.is_resolved() {
            return None;
        }
        match self {
            EntityLevel::Country => Some(a.country.clone()),
            EntityLevel::UsState if a.country == USA => a.us_state.clone(),
            EntityLevel::UsState => None,
            EntityLevel::Org => Some(a.org_entity()),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityLevel::Country => "country",
            EntityLevel::UsState => "us_state",
            EntityLevel::Org => "org",
        }
    }
}

impl FromStr for EntityLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "country" => Ok(EntityLevel::Country),
            "us_state" | "state" => Ok(EntityLevel::UsState),
            "org" | "organization" => Ok(EntityLevel::Org),
            other => Err(Error::InvalidArgument(format!(
                "unknown level `{other}` (expected country, us_state or org)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountScheme {
    /// Cells hold the number of addresses of the entity on the document.
    RawCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncidenceMatrix {
    pub docs: Vec<String>,
    pub entities: Vec<String>,
    /// Per document, `(entity index, address count)` sorted by entity index.
    pub rows: Vec<Vec<(usize, u32)>>,
    pub scheme: CountScheme,
}

impl IncidenceMatrix {
    pub fn cell(&self, doc: usize, entity: usize) -> u32 {
        let row = &self.rows[doc];
        row.binary_search_by_key(&entity, |&(e, _)| e)
            .map(|k| row[k].1)
            .unwrap_or(0)
    }

    pub fn row_sum(&self, doc: usize) -> u32 {
        self.rows[doc].iter().map(|&(_, c)| c).sum()
    }

    pub fn entity_index(&self, key: &str) -> Option<usize> {
        self.entities.binary_search_by(|e| e.as_str().cmp(key)).ok()
    }
}

/// Builds the incidence matrix. Documents with no address resolvable by
/// `entity_of` are left out; entities are sorted by key.
pub fn build_incidence<F>(docs: &[NormalizedDocument], entity_of: F) -> IncidenceMatrix
where
    F: Fn(&Affiliation) -> Option<String> + Sync,
{
    let counted: Vec<(String, BTreeMap<String, u32>)> = docs
        .par_iter()
        .filter_map(|doc| {
            let mut row = BTreeMap::new();
            for aff in &doc.affiliations {
                if let Some(key) = entity_of(aff) {
                    *row.entry(key).or_insert(0) += 1;
                }
            }
            (!row.is_empty()).then(|| (doc.id.clone(), row))
        })
        .collect();

    let entities: Vec<String> = counted
        .iter()
        .flat_map(|(_, row)| row.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, usize> = entities.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
    let mut doc_ids = Vec::with_capacity(counted.len());
    let mut rows = Vec::with_capacity(counted.len());
    for (id, row) in &counted {
        doc_ids.push(id.clone());
        rows.push(row.iter().map(|(k, &c)| (index[k.as_str()], c)).collect());
    }
    IncidenceMatrix {
        docs: doc_ids,
        entities,
        rows,
        scheme: CountScheme::RawCounts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityTotal {
    pub entity: String,
    /// Documents mentioning the entity at least once.
    pub whole_count: u64,
    /// Σ over documents of the entity's share of the document's addresses.
    pub fractional_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityTotals {
    pub entries: Vec<EntityTotal>,
}

impl EntityTotals {
    pub fn get(&self, entity: &str) -> Option<&EntityTotal> {
        self.entries.iter().find(|e| e.entity == entity)
    }

    pub fn fractional_sum(&self) -> f64 {
        self.entries.iter().map(|e| e.fractional_count).sum()
    }

    /// CSV with header `entity,whole_count,fractional_count`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["entity", "whole_count", "fractional_count"])?;
        for e in &self.entries {
            w.write_record([
                e.entity.clone(),
                e.whole_count.to_string(),
                e.fractional_count.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn fractional_totals(matrix: &IncidenceMatrix) -> EntityTotals {
    let mut whole = vec![0u64; matrix.entities.len()];
    let mut frac = vec![0f64; matrix.entities.len()];
    for row in &matrix.rows {
        let sum: u32 = row.iter().map(|&(_, c)| c).sum();
        for &(e, c) in row {
            whole[e] += 1;
            frac[e] += c as f64 / sum as f64;
        }
    }
    EntityTotals {
        entries: matrix
            .entities
            .iter()
            .enumerate()
            .map(|(i, entity)| EntityTotal {
                entity: entity.clone(),
                whole_count: whole[i],
                fractional_count: frac[i],
            })
            .collect(),
    }
}

/// Co-occurrence network: every document adds 1 to the edge between each
/// pair of distinct entities on it, whatever their address counts. Node
/// sizes come from [`fractional_totals`].
pub fn build_cooccurrence(matrix: &IncidenceMatrix) -> CoauthNetwork {
    let totals = fractional_totals(matrix);
    let mut net = CoauthNetwork::new();
    for t in &totals.entries {
        net.add_node(&t.entity, t.fractional_count, t.whole_count)
            .expect("entities are unique");
    }
    let pairs: HashMap<(usize, usize), u64> = matrix
        .rows
        .par_iter()
        .fold(HashMap::new, |mut acc, row| {
            for (x, &(a, _)) in row.iter().enumerate() {
                for &(b, _) in &row[x + 1..] {
                    *acc.entry((a, b)).or_insert(0) += 1;
                }
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    let mut sorted: Vec<_> = pairs.into_iter().collect();
    sorted.sort_unstable();
    for ((a, b), w) in sorted {
        net.add_edge(a, b, w).expect("distinct entity indices");
    }
    net
}

/// True when the document's resolved addresses span two or more countries.
pub fn is_international(doc: &NormalizedDocument) -> bool {
    let mut countries = doc
        .affiliations
        .iter()
        .filter(|a| a.is_resolved())
        .map(|a| a.country.as_str());
    match countries.next() {
        Some(first) => countries.any(|c| c != first),
        None => false,
    }
}
