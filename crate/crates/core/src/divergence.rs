//! Domestic versus international organization profiles and the asymmetric
//! Kullback-Leibler predictor test.
//!
//! For one geographic unit (a country, or a US state), every organization
//! with enough citable items contributes its count of domestic and of
//! internationally co-authored documents. Normalizing each column gives two
//! distributions over organizations, `D` and `I`. The divergence
//! `I(dom|int) = KL(D ‖ I)` is the information generated when the
//! international distribution is used to predict the domestic one, and
//! vice versa. The smaller of the two names the better predictor; equal
//! values count as a domestically driven unit.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::address::{NormalizedDocument, USA};
use crate::counting::is_international;
use crate::error::{Error, Result};

/// Organizations need strictly more citable items than this by default.
pub const DEFAULT_MIN_ITEMS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitLevel {
    Country,
    UsState,
}

impl FromStr for UnitLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "country" => Ok(UnitLevel::Country),
            "us_state" | "state" => Ok(UnitLevel::UsState),
            other => Err(Error::InvalidArgument(format!(
                "unknown unit level `{other}` (expected country or us_state)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrgProfile {
    pub org_key: String,
    /// Country name or US state code.
    pub unit: String,
    pub total_items: u64,
    pub domestic_items: u64,
    pub international_items: u64,
}

impl OrgProfile {
    pub fn is_eligible(&self) -> bool {
        self.domestic_items > 0 && self.international_items > 0
    }
}

/// Counts, per `(organization, unit)`, the documents it appears on, split by
/// whether the document spans one country or several. A document counts
/// once per organization however many of its addresses name it. Profiles
/// with `total_items <= min_items` are dropped.
pub fn build_profiles(docs: &[NormalizedDocument], level: UnitLevel, min_items: u64) -> Vec<OrgProfile> {
    tally_profiles(docs, level)
        .into_iter()
        .filter(|p| p.total_items > min_items)
        .collect()
}

fn unit_of(level: UnitLevel, aff: &crate::address::Affiliation) -> Option<&str> {
    if !aff.is_resolved() {
        return None;
    }
    match level {
        UnitLevel::Country => Some(aff.country.as_str()),
        UnitLevel::UsState if aff.country == USA => aff.us_state.as_deref(),
        UnitLevel::UsState => None,
    }
}

fn tally_profiles(docs: &[NormalizedDocument], level: UnitLevel) -> Vec<OrgProfile> {
    let mut tallies: BTreeMap<(String, String), (u64, u64)> = BTreeMap::new();
    for doc in docs {
        let international = is_international(doc);
        let on_doc: BTreeSet<(&str, &str)> = doc
            .affiliations
            .iter()
            .filter_map(|a| unit_of(level, a).map(|u| (u, a.org_key.as_str())))
            .collect();
        for (unit, org) in on_doc {
            let t = tallies.entry((unit.to_string(), org.to_string())).or_default();
            if international {
                t.1 += 1;
            } else {
                t.0 += 1;
            }
        }
    }
    tallies
        .into_iter()
        .map(|((unit, org_key), (dom, int))| OrgProfile {
            org_key,
            unit,
            total_items: dom + int,
            domestic_items: dom,
            international_items: int,
        })
        .collect()
}

fn units_seen(docs: &[NormalizedDocument], level: UnitLevel) -> BTreeSet<String> {
    docs.iter()
        .flat_map(|d| d.affiliations.iter())
        .filter_map(|a| unit_of(level, a).map(str::to_owned))
        .collect()
}

const SUM_TOLERANCE: f64 = 1e-9;

/// `Σ q_i log2(q_i / p_i)` in bits. Both inputs must be strictly positive
/// probability vectors of equal length.
pub fn kl_divergence(q: &[f64], p: &[f64]) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::InvalidArgument(format!(
            "distributions of length {} and {}",
            q.len(),
            p.len()
        )));
    }
    for (name, v) in [("q", q), ("p", p)] {
        if v.is_empty() {
            return Err(Error::InvalidArgument(format!("{name} is empty")));
        }
        if let Some(x) = v.iter().find(|&&x| !(x > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "{name} has a non-positive component {x}"
            )));
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!("{name} sums to {sum}, not 1")));
        }
    }
    Ok(q.iter().zip(p).map(|(qi, pi)| qi * (qi / pi).log2()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    International,
    Domestic,
}

impl Verdict {
    /// International only when it generates strictly less information.
    pub fn from_divergences(i_dom_given_int: f64, i_int_given_dom: f64) -> Self {
        if i_dom_given_int < i_int_given_dom {
            Verdict::International
        } else {
            Verdict::Domestic
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::International => "international",
            Verdict::Domestic => "domestic",
        }
    }

    /// Map color: white where the international distribution predicts
    /// better, blue otherwise.
    pub fn color(self) -> &'static str {
        match self {
            Verdict::International => "white",
            Verdict::Domestic => "blue",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergencePair {
    pub i_dom_given_int_mbits: f64,
    pub i_int_given_dom_mbits: f64,
    pub n_orgs_used: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IneligibleReason {
    /// No organization passed the item threshold.
    NoProfiles,
    /// Fewer than two organizations with both domestic and international
    /// items; a single organization carries no uncertainty.
    TooFewEligibleOrgs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ineligible {
    pub n_profiles: usize,
    pub n_eligible: usize,
    pub reason: IneligibleReason,
}

fn normalize(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Runs the predictor test over one set of profiles. Only organizations with
/// nonzero domestic and nonzero international counts take part, and at
/// least two are needed.
pub fn predictor_test(profiles: &[OrgProfile]) -> std::result::Result<DivergencePair, Ineligible> {
    let eligible: Vec<&OrgProfile> = profiles.iter().filter(|p| p.is_eligible()).collect();
    if eligible.len() < 2 {
        return Err(Ineligible {
            n_profiles: profiles.len(),
            n_eligible: eligible.len(),
            reason: if profiles.is_empty() {
                IneligibleReason::NoProfiles
            } else {
                IneligibleReason::TooFewEligibleOrgs
            },
        });
    }
    let dom = normalize(&eligible.iter().map(|p| p.domestic_items).collect::<Vec<_>>());
    let int = normalize(&eligible.iter().map(|p| p.international_items).collect::<Vec<_>>());
    let dom_given_int = kl_divergence(&dom, &int).expect("eligible counts are positive") * 1000.0;
    let int_given_dom = kl_divergence(&int, &dom).expect("eligible counts are positive") * 1000.0;
    Ok(DivergencePair {
        i_dom_given_int_mbits: dom_given_int,
        i_int_given_dom_mbits: int_given_dom,
        n_orgs_used: eligible.len(),
        verdict: Verdict::from_divergences(dom_given_int, int_given_dom),
    })
}

/// The same test with all units pooled into one distribution.
pub fn aggregate_test(profiles: &[OrgProfile]) -> std::result::Result<DivergencePair, Ineligible> {
    predictor_test(profiles)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitResult {
    pub unit: String,
    pub n_profiles: usize,
    #[serde(flatten)]
    pub pair: DivergencePair,
}

impl UnitResult {
    pub fn color(&self) -> &'static str {
        self.pair.verdict.color()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IneligibleUnit {
    pub unit: String,
    #[serde(flatten)]
    pub detail: Ineligible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub level: UnitLevel,
    pub min_items: u64,
    pub units: Vec<UnitResult>,
    pub n_international_led: usize,
    pub n_domestic_led: usize,
    pub ineligible: Vec<IneligibleUnit>,
    /// Pooled test over every unit's profiles.
    pub aggregate: Option<DivergencePair>,
}

impl Decomposition {
    pub fn verdicts(&self) -> BTreeMap<String, Verdict> {
        self.units.iter().map(|u| (u.unit.clone(), u.pair.verdict)).collect()
    }

    /// `unit,n_orgs_eligible,i_dom_given_int_mbits,i_int_given_dom_mbits,verdict`
    pub fn write_verdict_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["unit", "n_orgs_eligible", "i_dom_given_int_mbits", "i_int_given_dom_mbits", "verdict"])?;
        for u in &self.units {
            w.write_record([
                u.unit.clone(),
                u.pair.n_orgs_used.to_string(),
                format!("{:.3}", u.pair.i_dom_given_int_mbits),
                format!("{:.3}", u.pair.i_int_given_dom_mbits),
                u.pair.verdict.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `unit,n_profiles,n_eligible,reason`
    pub fn write_ineligible_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["unit", "n_profiles", "n_eligible", "reason"])?;
        for u in &self.ineligible {
            let reason = match u.detail.reason {
                IneligibleReason::NoProfiles => "no_profiles",
                IneligibleReason::TooFewEligibleOrgs => "too_few_eligible_orgs",
            };
            w.write_record([
                u.unit.clone(),
                u.detail.n_profiles.to_string(),
                u.detail.n_eligible.to_string(),
                reason.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the predictor test per unit over already-built profiles. Units in
/// `all_units` without any profile are listed as ineligible.
pub fn decompose_profiles(
    profiles: &[OrgProfile],
    all_units: &BTreeSet<String>,
    level: UnitLevel,
    min_items: u64,
) -> Decomposition {
    let mut by_unit: BTreeMap<&str, Vec<OrgProfile>> = all_units.iter().map(|u| (u.as_str(), Vec::new())).collect();
    for p in profiles {
        by_unit.entry(p.unit.as_str()).or_default().push(p.clone());
    }
    let mut units = Vec::new();
    let mut ineligible = Vec::new();
    for (unit, ps) in by_unit {
        match predictor_test(&ps) {
            Ok(pair) => units.push(UnitResult {
                unit: unit.to_string(),
                n_profiles: ps.len(),
                pair,
            }),
            Err(detail) => ineligible.push(IneligibleUnit {
                unit: unit.to_string(),
                detail,
            }),
        }
    }
    let n_international_led = units
        .iter()
        .filter(|u| u.pair.verdict == Verdict::International)
        .count();
    Decomposition {
        level,
        min_items,
        n_domestic_led: units.len() - n_international_led,
        n_international_led,
        units,
        ineligible,
        aggregate: aggregate_test(profiles).ok(),
    }
}

/// Profiles, per-unit verdicts, tallies and the pooled test in one pass.
pub fn decompose(docs: &[NormalizedDocument], level: UnitLevel, min_items: u64) -> Decomposition {
    let profiles = build_profiles(docs, level, min_items);
    decompose_profiles(&profiles, &units_seen(docs, level), level, min_items)
}
