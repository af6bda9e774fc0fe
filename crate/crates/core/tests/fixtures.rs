mod common;

use std::collections::BTreeSet;

use coauthnet::address::{distinct_countries, normalize_documents, parse_address, NormalizationTable};
use coauthnet::corpus::{corpus_summary, parse_corpus, percent_one_decimal, DocType, InputFormat};
use coauthnet::counting::{build_cooccurrence, build_incidence, fractional_totals, is_international, EntityLevel};
use coauthnet::divergence::{
    aggregate_test, build_profiles, decompose, decompose_profiles, predictor_test, IneligibleReason, UnitLevel,
    Verdict,
};
use coauthnet::graph::{components, ego_network, largest_component, shrink, threshold_filter, CoauthNetwork};

use common::*;

fn tagged_record(id: &str, addresses: &[&str], end: bool) -> String {
    let mut s = format!("PT J\nAU Doe, J\nAU Roe, R\nTI A study of {id}\nSO J TEST\nDT Article\nLA English\n");
    for (i, a) in addresses.iter().enumerate() {
        s.push_str(if i == 0 { "C1 " } else { "   " });
        s.push_str(a);
        s.push('\n');
    }
    s.push_str(&format!("UT {id}\n"));
    if end {
        s.push_str("ER\n\n");
    }
    s
}

#[test]
fn ten_records_with_one_unterminated_give_nine_documents() {
    let mut text = String::new();
    for i in 0..10 {
        text.push_str(&tagged_record(&format!("WOS:{i:03}"), &["Univ A, Amsterdam, Netherlands"], i != 4));
    }
    text.push_str("EF\n");
    let out = parse_corpus(text.as_bytes(), InputFormat::Tagged).unwrap();
    assert_eq!(out.documents.len(), 9);
    assert_eq!(out.diagnostics.len(), 1);
    assert!(out.documents.iter().all(|d| d.id != "WOS:004"));
    assert_eq!(out.documents[0].author_count, 2);
    assert_eq!(out.documents[0].language, "ENGLISH");
}

#[test]
fn miniature_doc_type_mix_keeps_the_citable_share() {
    let counts = [(125_385u64, "Article"), (29_748, "Review"), (2_799, "Letter"), (35_406, "Meeting Abstract")];
    let mut docs = Vec::new();
    for (n, ty) in counts {
        for k in 0..n / 1000 {
            docs.push(document(&format!("{ty}-{k}"), DocType::classify(ty), &["Univ A, Leiden, Netherlands"], 1));
        }
    }
    let flags = vec![false; docs.len()];
    let s = corpus_summary(&docs, &flags).unwrap();
    assert_eq!((s.n_articles, s.n_reviews, s.n_letters, s.n_other), (125, 29, 2, 35));
    assert_eq!(percent_one_decimal(s.n_citable, s.n_records), Some(81.7));
    assert_eq!(percent_one_decimal(157_932, 193_338), Some(81.7));
}

#[test]
fn override_relabels_a_misfiled_address() {
    let mut table = NormalizationTable::builtin();
    table.add_override("HARVARD-UNIV", "CANADA", "USA").unwrap();
    let a = parse_address("Harvard Univ, Sch Med, Vancouver, BC, Canada", &table).unwrap();
    assert_eq!((a.org_key.as_str(), a.country.as_str()), ("HARVARD-UNIV", "USA"));
    let b = parse_address("Ohio State Univ, Columbus, OH 43210 USA", &table).unwrap();
    assert_eq!((b.org_key.as_str(), b.us_state.as_deref(), b.country.as_str()), ("OHIO-STATE-UNIV", Some("OH"), "USA"));
    let c = parse_address("Univ Amsterdam, Kloveniersburgwal 48, Amsterdam, Netherlands", &table).unwrap();
    assert_eq!((c.org_key.as_str(), c.country.as_str()), ("UNIV-AMSTERDAM", "NETHERLANDS"));
}

#[test]
fn alias_spellings_collapse_to_five_countries() {
    let table = NormalizationTable::builtin();
    let raw = [
        "Univ Oxford, Oxford, England",
        "Univ Cambridge, Cambridge, UK",
        "Peking Univ, Beijing, Peoples R China",
        "Fudan Univ, Shanghai, China",
        "Univ Tokyo, Tokyo, Japan",
        "Leiden Univ, Leiden, Netherlands",
        "MIT, Cambridge, MA 02139 USA",
    ];
    let docs = vec![document("X", DocType::Article, &raw, 7)];
    let (norm, diag) = normalize_documents(&docs, &table);
    assert_eq!(diag.n_unresolved, 0);
    assert_eq!(
        distinct_countries(&norm[0].affiliations),
        ["CHINA", "JAPAN", "NETHERLANDS", "UK", "USA"]
    );
}

#[test]
fn hand_tabulated_incidence_and_cooccurrence() {
    let docs = vec![
        ndoc("1", vec![affiliation("A", "USA", None), affiliation("B", "USA", None), affiliation("C", "NETHERLANDS", None)]),
        ndoc("2", vec![affiliation("D", "UK", None)]),
        ndoc("3", vec![affiliation("E", "UK", None), affiliation("F", "NETHERLANDS", None), affiliation("G", "UK", None)]),
    ];
    let m = build_incidence(&docs, |a| EntityLevel::Country.entity_of(a));
    assert_eq!(m.entities, ["NETHERLANDS", "UK", "USA"]);
    let table: Vec<Vec<u32>> = (0..3).map(|d| (0..3).map(|e| m.cell(d, e)).collect()).collect();
    assert_eq!(table, [[1, 0, 2], [0, 1, 0], [1, 2, 0]]);

    let five: Vec<Vec<&str>> = vec![
        vec!["A", "A", "A", "B", "B"],
        vec!["A", "C"],
        vec!["B", "C", "C", "D"],
        vec!["D"],
        vec!["A", "B", "D"],
    ];
    let docs: Vec<_> = five
        .iter()
        .enumerate()
        .map(|(i, d)| ndoc(&i.to_string(), d.iter().map(|c| affiliation("O", c, None)).collect()))
        .collect();
    let net = build_cooccurrence(&build_incidence(&docs, |a| EntityLevel::Country.entity_of(a)));
    let (binary, routine) = oracle_cooccurrence(&five);
    for ((a, b), w) in &binary {
        assert_eq!(net.weight_by_key(a, b), Some(*w));
    }
    assert_eq!(net.edge_count(), binary.len());
    assert_eq!(net.weight_by_key("A", "B"), Some(2));
    assert_eq!(routine[&("A".to_string(), "B".to_string())], 7);
}

#[test]
fn twenty_documents_with_seven_international() {
    let countries = ["USA", "UK", "JAPAN", "KENYA"];
    let docs: Vec<_> = (0..20)
        .map(|i| {
            let home = countries[i % 4];
            let mut affs = vec![affiliation("H", home, None), affiliation("H2", home, None)];
            if i % 3 == 0 {
                affs.push(affiliation("X", countries[(i + 1) % 4], None));
            }
            ndoc(&i.to_string(), affs)
        })
        .collect();
    assert_eq!(docs.iter().filter(|d| is_international(d)).count(), 7);
    let totals = fractional_totals(&build_incidence(&docs, |a| EntityLevel::Country.entity_of(a)));
    assert!((totals.fractional_sum() - 20.0).abs() < 1e-12);
}

#[test]
fn giant_component_shape_fixture() {
    let net = graph_with_shape(187, 2695, 4, 3);
    assert_eq!((net.node_count(), net.edge_count()), (187, 2695));
    let comps = components(&net);
    assert_eq!(comps.len(), 5);
    let giant = largest_component(&net);
    assert_eq!(giant.node_count(), 183);

    let group: Vec<String> = giant.keys().take(28).map(str::to_string).collect();
    assert_eq!(shrink(&giant, &group, "EU-28").unwrap().node_count(), 156);
}

#[test]
fn ego_with_ninety_three_neighbours() {
    let mut net = CoauthNetwork::new();
    let ego = net.add_node("EGO", 10.0, 10).unwrap();
    for i in 0..120 {
        net.add_node(&format!("N{i:03}"), 1.0, 1).unwrap();
    }
    for i in 1..=93 {
        net.add_edge(ego, i, i as u64).unwrap();
        if i > 1 {
            net.add_edge(i - 1, i, 1).unwrap();
        }
    }
    for i in 94..120 {
        net.add_edge(i, i - 50, 2).unwrap();
    }
    let star = ego_network(&net, "EGO", true).unwrap();
    assert_eq!((star.node_count(), star.edge_count()), (94, 93));
    let full = ego_network(&net, "EGO", false).unwrap();
    let members: Vec<usize> = std::iter::once(ego).chain(net.neighbors(ego).map(|(j, _)| j)).collect();
    let oracle = net.induced(&members);
    assert_eq!(full.edge_count(), oracle.edge_count());
    for (i, j, w) in oracle.edges() {
        assert_eq!(full.weight_by_key(&oracle.node(i).key, &oracle.node(j).key), Some(w));
    }
}

#[test]
fn mixed_threshold_fixture() {
    let mut net = CoauthNetwork::new();
    for (k, f) in [("A", 150.0), ("B", 100.0), ("C", 101.0), ("D", 30.0)] {
        net.add_node(k, f, f as u64).unwrap();
    }
    for (a, b, w) in [("A", "B", 500), ("A", "C", 100), ("A", "D", 300), ("B", "C", 101)] {
        net.add_edge_by_key(a, b, w).unwrap();
    }
    let strict = threshold_filter(&net, 100.0, 100, true);
    assert_eq!(strict.keys().collect::<Vec<_>>(), ["A", "C"]);
    assert_eq!(strict.edge_count(), 0);
    let loose = threshold_filter(&net, 100.0, 100, false);
    assert_eq!(loose.keys().collect::<Vec<_>>(), ["A", "B", "C"]);
    assert_eq!(loose.edge_count(), 3);
    assert!(threshold_filter(&net, 0.0, 0, false).same_structure(&net));
    assert!(threshold_filter(&net, 1000.0, 0, true).is_empty());
}

#[test]
fn profile_counting_and_strict_threshold() {
    let mut docs = org_items("p", "ELEVEN", "FRANCE", None, 8, 3, SPAIN_PARTNER);
    docs.extend(org_items("p", "TEN", "FRANCE", None, 6, 4, SPAIN_PARTNER));
    let profiles = build_profiles(&docs, UnitLevel::Country, 10);
    let eleven = profiles.iter().find(|p| p.org_key == "ELEVEN").unwrap();
    assert_eq!((eleven.total_items, eleven.domestic_items, eleven.international_items), (11, 8, 3));
    assert!(profiles.iter().all(|p| p.org_key != "TEN"));
    assert!(build_profiles(&docs, UnitLevel::Country, 0).iter().any(|p| p.org_key == "TEN"));
}

#[test]
fn engineered_three_country_verdicts() {
    let d = decompose(&three_country_fixture(), UnitLevel::Country, 10);
    assert_eq!((d.n_international_led, d.n_domestic_led), (1, 2));
    let by_unit = |u: &str| d.units.iter().find(|r| r.unit == u).unwrap().pair;

    let france = by_unit("FRANCE");
    let want_dom_int = 1000.0 * oracle_kl_bits(&[0.8, 0.2], &[0.5, 0.5]);
    let want_int_dom = 1000.0 * oracle_kl_bits(&[0.5, 0.5], &[0.8, 0.2]);
    assert!((want_dom_int - 278.072).abs() < 1e-3 && (want_int_dom - 321.928).abs() < 1e-3);
    assert!((france.i_dom_given_int_mbits - want_dom_int).abs() < 1e-9);
    assert!((france.i_int_given_dom_mbits - want_int_dom).abs() < 1e-9);
    assert_eq!(france.verdict, Verdict::International);

    let germany = by_unit("GERMANY");
    assert_eq!(germany.i_dom_given_int_mbits, france.i_int_given_dom_mbits);
    assert_eq!(germany.i_int_given_dom_mbits, france.i_dom_given_int_mbits);
    assert_eq!(germany.verdict, Verdict::Domestic);

    let italy = by_unit("ITALY");
    assert_eq!((italy.i_dom_given_int_mbits, italy.i_int_given_dom_mbits), (0.0, 0.0));
    assert_eq!(italy.verdict, Verdict::Domestic);

    assert_eq!(d.ineligible.len(), 1);
    assert_eq!(d.ineligible[0].unit, "SPAIN");
    assert_eq!(d.ineligible[0].detail.reason, IneligibleReason::TooFewEligibleOrgs);
}

#[test]
fn lone_organization_states_are_ineligible() {
    let docs = state_fixture();
    let profiles = build_profiles(&docs, UnitLevel::UsState, 10);
    let pr = profiles.iter().find(|p| p.unit == "PR").unwrap();
    assert_eq!((pr.total_items, pr.international_items), (74, 62));
    assert!(profiles.iter().all(|p| p.unit != "WY"));

    let d = decompose(&docs, UnitLevel::UsState, 10);
    assert_eq!(d.units.iter().map(|u| u.unit.as_str()).collect::<Vec<_>>(), ["MA"]);
    let inel: Vec<(&str, IneligibleReason)> = d.ineligible.iter().map(|u| (u.unit.as_str(), u.detail.reason)).collect();
    assert_eq!(inel, [("PR", IneligibleReason::TooFewEligibleOrgs), ("WY", IneligibleReason::NoProfiles)]);

    let ma = d.units[0].pair;
    let dom = [20.0 / 35.0, 15.0 / 35.0];
    let int = [10.0 / 25.0, 15.0 / 25.0];
    assert!((ma.i_dom_given_int_mbits - 1000.0 * oracle_kl_bits(&dom, &int)).abs() < 1e-9);
    assert!((ma.i_int_given_dom_mbits - 1000.0 * oracle_kl_bits(&int, &dom)).abs() < 1e-9);
}

#[test]
fn restricted_and_unrestricted_runs_differ() {
    let mut docs = three_country_fixture();
    docs.extend(org_items("small", "F3", "FRANCE", None, 1, 6, SPAIN_PARTNER));
    let restricted = decompose(&docs, UnitLevel::Country, 10);
    let unrestricted = decompose(&docs, UnitLevel::Country, 0);
    let fr = |d: &coauthnet::divergence::Decomposition| d.units.iter().find(|u| u.unit == "FRANCE").unwrap().pair;
    assert_eq!(fr(&restricted).n_orgs_used, 2);
    assert_eq!(fr(&unrestricted).n_orgs_used, 3);
    assert_ne!(fr(&restricted).i_dom_given_int_mbits, fr(&unrestricted).i_dom_given_int_mbits);
}

#[test]
fn pooling_one_unit_reproduces_it() {
    let profiles: Vec<_> = build_profiles(&three_country_fixture(), UnitLevel::Country, 10)
        .into_iter()
        .filter(|p| p.unit == "FRANCE")
        .collect();
    assert_eq!(aggregate_test(&profiles).unwrap(), predictor_test(&profiles).unwrap());
    let units: BTreeSet<String> = ["FRANCE".to_string()].into();
    let d = decompose_profiles(&profiles, &units, UnitLevel::Country, 10);
    assert_eq!(d.aggregate.unwrap(), d.units[0].pair);
}

#[test]
fn all_ineligible_units_give_empty_tallies() {
    let docs = org_items("x", "LONE", "PERU", None, 20, 20, SPAIN_PARTNER);
    let d = decompose(&docs, UnitLevel::Country, 10);
    assert!(d.units.is_empty());
    assert_eq!((d.n_international_led, d.n_domestic_led), (0, 0));
    assert_eq!(d.ineligible.iter().map(|u| u.unit.as_str()).collect::<Vec<_>>(), ["PERU", "SPAIN"]);
}
