//! Address normalization: raw byline addresses to [`Affiliation`]s.
//!
//! The organization key is the first comma-separated subfield, uppercased
//! with internal whitespace replaced by hyphens. The country is read from
//! the last subfield and canonicalized through a [`NormalizationTable`]; a
//! trailing `"<ST> <zip> USA"` subfield also yields the US state.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::Document;
use crate::error::{Error, Result};

pub const UNKNOWN_COUNTRY: &str = "UNKNOWN";
pub const USA: &str = "USA";

const DEFAULT_TABLE: &str = include_str!("../data/default_table.txt");

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Affiliation {
    pub org_key: String,
    pub city: Option<String>,
    /// Two-letter code, only ever set for USA addresses.
    pub us_state: Option<String>,
    pub country: String,
}

impl Affiliation {
    pub fn is_resolved(&self) -> bool {
        self.country != UNKNOWN_COUNTRY
    }

    /// Entity key for organization-level analyses. The same organization
    /// key under two countries yields two entities.
    pub fn org_entity(&self) -> String {
        format!("{} ({})", self.org_key, self.country)
    }

    /// Renders the affiliation as an address string that parses back to it.
    pub fn render(&self) -> String {
        let mut parts = vec![self.org_key.clone()];
        if let Some(city) = &self.city {
            parts.push(city.clone());
        }
        match (&self.us_state, self.country.as_str()) {
            (Some(state), USA) => parts.push(format!("{state} {USA}")),
            (_, country) => parts.push(country.to_string()),
        }
        parts.join(", ")
    }
}

#[derive(Debug, Clone, Default)]
pub struct NormalizationTable {
    aliases: HashMap<String, String>,
    canonical: BTreeSet<String>,
    overrides: HashMap<(String, String), String>,
    states: BTreeMap<String, String>,
}

fn name_key(s: &str) -> String {
    s.trim()
        .trim_end_matches('.')
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_uppercase()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Countries,
    Overrides,
    States,
}

impl NormalizationTable {
    /// The bundled table: a standard country list, UK constituent countries
    /// folded into UK, common variant spellings, and US state codes.
    pub fn builtin() -> Self {
        Self::from_config_str(DEFAULT_TABLE).expect("bundled normalization table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_config_str(&fs::read_to_string(path)?)
    }

    /// Parses the plain-text table format with `[countries]`, `[overrides]`
    /// and `[states]` sections.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut section = Section::None;
        let mut raw_aliases: Vec<(usize, String, String)> = Vec::new();
        let mut raw_overrides: Vec<(usize, String, String, String)> = Vec::new();
        let mut table = NormalizationTable::default();

        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = match name_key(&line[1..line.len() - 1]).as_str() {
                    "COUNTRIES" => Section::Countries,
                    "OVERRIDES" => Section::Overrides,
                    "STATES" => Section::States,
                    other => {
                        return Err(Error::parse(line_no, format!("unknown section [{other}]")))
                    }
                };
                continue;
            }
            let (lhs, rhs) = match line.split_once('=') {
                Some((l, r)) => (l.trim(), Some(r.trim())),
                None => (line, None),
            };
            match section {
                Section::None => {
                    return Err(Error::parse(line_no, "entry outside of any section"));
                }
                Section::Countries => {
                    let alias = name_key(lhs);
                    let target = name_key(rhs.unwrap_or(lhs));
                    if alias.is_empty() || target.is_empty() {
                        return Err(Error::parse(line_no, "empty country name"));
                    }
                    table.canonical.insert(target.clone());
                    raw_aliases.push((line_no, alias, target));
                }
                Section::Overrides => {
                    let Some(rhs) = rhs else {
                        return Err(Error::parse(line_no, "override needs `ORG, COUNTRY = COUNTRY`"));
                    };
                    let Some((org, country)) = lhs.rsplit_once(',') else {
                        return Err(Error::parse(line_no, "override key needs `ORG, COUNTRY`"));
                    };
                    raw_overrides.push((line_no, org_key_of(org), name_key(country), name_key(rhs)));
                }
                Section::States => {
                    let code = lhs.trim().to_uppercase();
                    if code.len() != 2 || !code.chars().all(|c| c.is_ascii_uppercase()) {
                        return Err(Error::parse(line_no, format!("invalid state code `{lhs}`")));
                    }
                    table
                        .states
                        .insert(code, rhs.unwrap_or_default().to_string());
                }
            }
        }

        // A name used as an alias source is not canonical unless it maps to itself.
        for (_, alias, target) in &raw_aliases {
            if alias != target {
                table.canonical.remove(alias);
            }
        }
        let direct: HashMap<String, String> = raw_aliases
            .iter()
            .map(|(_, a, t)| (a.clone(), t.clone()))
            .collect();
        for (line_no, alias, _) in &raw_aliases {
            let mut current = alias.clone();
            let mut steps = 0;
            while let Some(next) = direct.get(&current) {
                if *next == current {
                    break;
                }
                current = next.clone();
                steps += 1;
                if steps > direct.len() {
                    return Err(Error::parse(*line_no, format!("alias cycle through `{alias}`")));
                }
            }
            table.canonical.insert(current.clone());
            table.aliases.insert(alias.clone(), current);
        }
        for name in table.canonical.clone() {
            table.aliases.insert(name.clone(), name);
        }
        for (line_no, org, country, replacement) in raw_overrides {
            let Some(resolved) = table.canonical_country(&replacement).map(str::to_owned) else {
                return Err(Error::parse(
                    line_no,
                    format!("override target `{replacement}` is not a known country"),
                ));
            };
            let parsed = table
                .canonical_country(&country)
                .map(str::to_owned)
                .unwrap_or(country);
            table.overrides.insert((org, parsed), resolved);
        }
        Ok(table)
    }

    /// Canonical name for a country spelling, if the table knows it.
    pub fn canonical_country(&self, name: &str) -> Option<&str> {
        self.aliases.get(&name_key(name)).map(String::as_str)
    }

    pub fn countries(&self) -> impl Iterator<Item = &str> {
        self.canonical.iter().map(String::as_str)
    }

    pub fn aliases(&self) -> impl Iterator<Item = (&str, &str)> {
        self.aliases.iter().map(|(a, c)| (a.as_str(), c.as_str()))
    }

    pub fn is_state(&self, code: &str) -> bool {
        self.states.contains_key(code)
    }

    pub fn state_codes(&self) -> impl Iterator<Item = &str> {
        self.states.keys().map(String::as_str)
    }

    pub fn add_override(&mut self, org_key: &str, parsed_country: &str, replacement: &str) -> Result<()> {
        let resolved = self
            .canonical_country(replacement)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown country `{replacement}`")))?
            .to_string();
        let parsed = self
            .canonical_country(parsed_country)
            .map(str::to_owned)
            .unwrap_or_else(|| name_key(parsed_country));
        self.overrides.insert((org_key_of(org_key), parsed), resolved);
        Ok(())
    }

    fn override_for(&self, org_key: &str, country: &str) -> Option<&str> {
        self.overrides
            .get(&(org_key.to_string(), country.to_string()))
            .map(String::as_str)
    }
}

fn org_key_of(subfield: &str) -> String {
    subfield
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("-")
        .to_uppercase()
}

fn is_zip(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| c.is_ascii_digit() || c == '-') && token.chars().any(|c| c.is_ascii_digit())
}

fn clean_city(subfield: &str) -> Option<String> {
    let words: Vec<&str> = subfield
        .split_whitespace()
        .filter(|w| !w.chars().any(|c| c.is_ascii_digit()))
        .collect();
    (!words.is_empty()).then(|| words.join(" "))
}

/// Parses one raw address. Unresolvable countries come back as
/// [`UNKNOWN_COUNTRY`]; only an empty address is an error.
pub fn parse_address(raw: &str, table: &NormalizationTable) -> Result<Affiliation> {
    let mut text = raw.trim();
    // Drop a leading bracketed author list.
    if text.starts_with('[') {
        if let Some(end) = text.find(']') {
            text = text[end + 1..].trim();
        }
    }
    let text = text.trim_end_matches('.').trim();
    let fields: Vec<&str> = text
        .split(',')
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .collect();
    let (Some(first), Some(last)) = (fields.first(), fields.last()) else {
        return Err(Error::InvalidArgument(format!("empty address `{raw}`")));
    };
    let org_key = org_key_of(first);
    let penultimate_city = || {
        if fields.len() >= 3 {
            clean_city(fields[fields.len() - 2])
        } else {
            None
        }
    };

    let mut tokens: Vec<&str> = last.split_whitespace().collect();
    let (mut country, mut us_state, mut city, parsed);
    if tokens.last().map(|t| t.eq_ignore_ascii_case(USA)) == Some(true) {
        tokens.pop();
        if tokens.last().is_some_and(|t| is_zip(t)) {
            tokens.pop();
        }
        us_state = None;
        if let Some(code) = tokens.last() {
            let code = code.to_uppercase();
            if code.len() == 2 && table.is_state(&code) {
                us_state = Some(code);
                tokens.pop();
            }
        }
        city = if tokens.is_empty() {
            penultimate_city()
        } else {
            clean_city(&tokens.join(" "))
        };
        country = USA.to_string();
        parsed = country.clone();
    } else {
        us_state = None;
        city = penultimate_city();
        let canonical = table.canonical_country(last);
        country = canonical.unwrap_or(UNKNOWN_COUNTRY).to_string();
        parsed = canonical.map_or_else(|| name_key(last), str::to_owned);
    }
    if fields.len() < 2 && country == UNKNOWN_COUNTRY {
        city = None;
    }
    if let Some(replacement) = table.override_for(&org_key, &parsed) {
        country = replacement.to_string();
        if country != USA {
            us_state = None;
        }
    }
    Ok(Affiliation {
        org_key,
        city,
        us_state,
        country,
    })
}

/// Sorted distinct canonical countries, without [`UNKNOWN_COUNTRY`].
pub fn distinct_countries<'a, I>(affiliations: I) -> Vec<String>
where
    I: IntoIterator<Item = &'a Affiliation>,
{
    affiliations
        .into_iter()
        .filter(|a| a.is_resolved())
        .map(|a| a.country.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// A document with its addresses parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDocument {
    pub id: String,
    pub citable: bool,
    pub author_count: u32,
    /// One entry per raw address, in source order.
    pub affiliations: Vec<Affiliation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnresolvedAddress {
    pub doc_id: String,
    pub raw: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AddressDiagnostics {
    pub n_addresses: usize,
    pub n_unresolved: usize,
    pub unresolved: Vec<UnresolvedAddress>,
}

/// Parses every address of every document. Order is preserved.
pub fn normalize_documents(
    docs: &[Document],
    table: &NormalizationTable,
) -> (Vec<NormalizedDocument>, AddressDiagnostics) {
    let normalized: Vec<(NormalizedDocument, Vec<UnresolvedAddress>)> = docs
        .par_iter()
        .map(|doc| {
            let mut unresolved = Vec::new();
            let affiliations = doc
                .raw_addresses
                .iter()
                .filter_map(|raw| {
                    let parsed = parse_address(raw, table).ok();
                    if !parsed.as_ref().is_some_and(Affiliation::is_resolved) {
                        unresolved.push(UnresolvedAddress {
                            doc_id: doc.id.clone(),
                            raw: raw.clone(),
                        });
                    }
                    parsed
                })
                .collect();
            let nd = NormalizedDocument {
                id: doc.id.clone(),
                citable: doc.is_citable(),
                author_count: doc.author_count,
                affiliations,
            };
            (nd, unresolved)
        })
        .collect();

    let mut diagnostics = AddressDiagnostics::default();
    let mut out = Vec::with_capacity(normalized.len());
    for (nd, unresolved) in normalized {
        diagnostics.n_addresses += nd.affiliations.len();
        diagnostics.n_unresolved += unresolved.len();
        diagnostics.unresolved.extend(unresolved);
        out.push(nd);
    }
    (out, diagnostics)
}
