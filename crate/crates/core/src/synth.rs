//! Seeded synthetic corpora with realistic skew: a few countries and
//! organizations account for most addresses, and a configurable share of
//! documents is internationally co-authored.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::address::{NormalizationTable, USA};
use crate::corpus::{DocType, Document};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub n_countries: usize,
    pub n_orgs: usize,
    /// Seeds the assignment of organizations to countries and states.
    pub universe_seed: u64,
    /// Seeds the documents drawn from the universe.
    pub seed: u64,
    /// Probability that a multi-address document reaches across borders.
    pub international_rate: f64,
    /// Share of records that are neither articles, reviews nor letters.
    pub non_citable_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_docs: 1000,
            n_countries: 50,
            n_orgs: 500,
            universe_seed: 1,
            seed: 1,
            international_rate: 0.35,
            non_citable_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOrg {
    pub name: String,
    pub city: String,
    pub country: String,
    pub us_state: Option<String>,
}

impl SynthOrg {
    pub fn address(&self, rng: &mut impl Rng) -> String {
        match &self.us_state {
            Some(st) => format!(
                "{}, Dept {}, {} {} {:05} {}",
                self.name,
                rng.gen_range(1..20),
                self.city,
                st,
                rng.gen_range(1000..99999),
                USA
            ),
            None => format!("{}, Dept {}, {}, {}", self.name, rng.gen_range(1..20), self.city, self.country),
        }
    }
}

/// Organizations and their countries. Every country has at least one
/// organization.
#[derive(Debug, Clone)]
pub struct Universe {
    pub countries: Vec<String>,
    pub orgs: Vec<SynthOrg>,
    org_weights: WeightedIndex<f64>,
    by_country: Vec<(Vec<usize>, WeightedIndex<f64>)>,
    country_of: Vec<usize>,
}

fn zipf_weights(n: usize, exponent: f64) -> Vec<f64> {
    (0..n).map(|i| 1.0 / ((i + 1) as f64).powf(exponent)).collect()
}

impl Universe {
    pub fn new(config: &SynthConfig, table: &NormalizationTable) -> Result<Self> {
        if config.n_countries == 0 || config.n_orgs < config.n_countries {
            return Err(Error::InvalidArgument(format!(
                "need at least one country and one organization per country (got {} countries, {} orgs)",
                config.n_countries, config.n_orgs
            )));
        }
        let mut countries: Vec<String> = vec![USA.to_string()];
        countries.extend(table.countries().filter(|c| *c != USA).map(str::to_string));
        if countries.len() < config.n_countries {
            return Err(Error::InvalidArgument(format!(
                "the normalization table knows only {} countries",
                countries.len()
            )));
        }
        countries.truncate(config.n_countries);
        let states: Vec<String> = table.state_codes().map(str::to_string).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(config.universe_seed);
        let country_pick = WeightedIndex::new(zipf_weights(countries.len(), 1.0)).expect("positive weights");
        let state_pick = WeightedIndex::new(zipf_weights(states.len().max(1), 0.8)).expect("positive weights");
        let mut orgs = Vec::with_capacity(config.n_orgs);
        let mut country_of = Vec::with_capacity(config.n_orgs);
        for i in 0..config.n_orgs {
            let c = if i < countries.len() { i } else { country_pick.sample(&mut rng) };
            let us_state = (countries[c] == USA && !states.is_empty()).then(|| states[state_pick.sample(&mut rng)].clone());
            orgs.push(SynthOrg {
                name: format!("Inst {i:05}"),
                city: format!("City {}", rng.gen_range(0..40)),
                country: countries[c].clone(),
                us_state,
            });
            country_of.push(c);
        }
        let weights = zipf_weights(orgs.len(), 0.8);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); countries.len()];
        for (i, &c) in country_of.iter().enumerate() {
            members[c].push(i);
        }
        let by_country = members
            .into_iter()
            .map(|m| {
                let w = WeightedIndex::new(m.iter().map(|&i| weights[i])).expect("every country has an org");
                (m, w)
            })
            .collect();
        Ok(Universe {
            countries,
            orgs,
            org_weights: WeightedIndex::new(weights).expect("positive weights"),
            by_country,
            country_of,
        })
    }

    fn org_in_country(&self, country: usize, rng: &mut impl Rng) -> usize {
        let (members, w) = &self.by_country[country];
        members[w.sample(rng)]
    }
}

const ADDRESS_COUNT_WEIGHTS: [u32; 6] = [30, 30, 18, 10, 7, 5];

/// Generates `config.n_docs` documents. Equal configs give equal corpora.
pub fn generate(config: &SynthConfig, table: &NormalizationTable) -> Result<Vec<Document>> {
    if !(0.0..=1.0).contains(&config.international_rate) || !(0.0..=1.0).contains(&config.non_citable_rate) {
        return Err(Error::InvalidArgument("rates must lie in [0, 1]".into()));
    }
    let universe = Universe::new(config, table)?;
    Ok(generate_from(&universe, config))
}

pub fn generate_from(universe: &Universe, config: &SynthConfig) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_addr_pick = WeightedIndex::new(ADDRESS_COUNT_WEIGHTS).expect("positive weights");
    let mut docs = Vec::with_capacity(config.n_docs);
    for i in 0..config.n_docs {
        let n_addr = 1 + n_addr_pick.sample(&mut rng);
        let first = universe.org_weights.sample(&mut rng);
        let home = universe.country_of[first];
        let international = n_addr > 1 && rng.gen_bool(config.international_rate);
        let mut orgs = vec![first];
        for k in 1..n_addr {
            let org = if international && (k == 1 || rng.gen_bool(0.5)) {
                let mut o = universe.org_weights.sample(&mut rng);
                if k == 1 {
                    for _ in 0..8 {
                        if universe.country_of[o] != home {
                            break;
                        }
                        o = universe.org_weights.sample(&mut rng);
                    }
                }
                o
            } else if rng.gen_bool(0.3) {
                first
            } else {
                universe.org_in_country(home, &mut rng)
            };
            orgs.push(org);
        }
        let raw_addresses = orgs.iter().map(|&o| universe.orgs[o].address(&mut rng)).collect();
        let doc_type = if rng.gen_bool(config.non_citable_rate) {
            DocType::Other("Meeting Abstract".into())
        } else {
            match rng.gen_range(0..100) {
                0..=3 => DocType::Review,
                4..=5 => DocType::Letter,
                _ => DocType::Article,
            }
        };
        docs.push(Document {
            id: format!("SYN:{}:{i:07}", config.seed),
            doc_type,
            language: "ENGLISH".into(),
            source_title: format!("JOURNAL {}", rng.gen_range(0..500)),
            raw_addresses,
            author_count: (n_addr + rng.gen_range(0..3)) as u32,
        });
    }
    docs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::address::{normalize_documents, UNKNOWN_COUNTRY};

    #[test]
    fn deterministic_and_resolvable() {
        let table = NormalizationTable::builtin();
        let cfg = SynthConfig { n_docs: 300, ..SynthConfig::default() };
        let a = generate(&cfg, &table).unwrap();
        assert_eq!(a, generate(&cfg, &table).unwrap());
        let (norm, diag) = normalize_documents(&a, &table);
        assert_eq!(diag.n_unresolved, 0);
        for d in &norm {
            for aff in &d.affiliations {
                assert_ne!(aff.country, UNKNOWN_COUNTRY);
                if aff.country == USA {
                    assert!(aff.us_state.is_some());
                }
            }
        }
        let other = generate(&SynthConfig { seed: 2, ..cfg }, &table).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn rejects_impossible_universes() {
        let table = NormalizationTable::builtin();
        let cfg = SynthConfig { n_countries: 10, n_orgs: 5, ..SynthConfig::default() };
        assert!(generate(&cfg, &table).is_err());
        let cfg = SynthConfig { n_countries: 10_000, n_orgs: 20_000, ..SynthConfig::default() };
        assert!(generate(&cfg, &table).is_err());
    }
}
