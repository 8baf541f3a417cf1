//! The hand-worked examples of the method, each run through the public
//! operations with mock providers and checked exactly.

use std::sync::Arc;

use factstory_core::extraction::datapoints::{extract_data_points, extraction_request};
use factstory_core::extraction::validate::{validate_and_refine, validate_extraction, IssueKind, MAX_ITERATIONS};
use factstory_core::model::FactStatus;
use factstory_core::organization::entities::{detect_entities, fill_one, flag_missing, EntityKind, FillTarget};
use factstory_core::organization::factsets::build_fact_sets;
use factstory_core::organization::labels::{label_clusters, ClusterDraft};
use factstory_core::organization::merge::{MergeMember, MergedFactSet};
use factstory_core::providers::{ProviderConfig, Providers};
use factstory_core::storygen::narrative::{fallback_caption, generate_narrative, highlights};
use factstory_testkit::llm::{providers_with, write_llm_fixture, ScriptedLlm};
use factstory_testkit::worked::{self, article, fact, point};
use rust_decimal::Decimal;
use serde_json::json;

fn dec(s: &str) -> Decimal {
    s.parse().unwrap()
}

fn mock_providers(dir: &std::path::Path) -> Providers {
    Providers::from_config(&ProviderConfig::mock(dir)).unwrap()
}

#[test]
fn label_value_unit_from_a_recorded_answer() {
    worked::label_value_unit().unwrap();
}

#[test]
fn two_values_keep_their_years_and_share_a_scale() {
    let content = "From 1999 to 2020, the number of homeschooled students grew from 850,000 to 2.5 million.";
    let a = article("a1", 2021, &[content]);
    let out = extract_data_points(&Providers::offline(), &fact("f1", "a1", 0, content), &a).unwrap().unwrap();
    let got: Vec<(String, Option<String>, String)> =
        out.data_points.iter().map(|p| (p.value.to_string(), p.series_key.clone(), p.unit.clone())).collect();
    assert_eq!(
        got,
        vec![
            ("0.85".to_string(), Some("1999".to_string()), "million".to_string()),
            ("2.5".to_string(), Some("2020".to_string()), "million".to_string()),
        ]
    );
}

#[test]
fn relative_year_resolves_against_publication() {
    let dir = tempfile::tempdir().unwrap();
    let content = "This year 3.7 million children are homeschooled.";
    let a = article("a1", 2024, &[content]);
    write_llm_fixture(
        dir.path(),
        &extraction_request(content, 2024),
        &json!({"data_points": [{"label": "Homeschooled Children", "value": "3.7", "unit": "million", "series_key": "this year"}]}),
    );
    let out = extract_data_points(&mock_providers(dir.path()), &fact("f1", "a1", 0, content), &a).unwrap().unwrap();
    assert_eq!(out.data_points[0].series_key.as_deref(), Some("2024"));
}

#[test]
fn wrong_value_is_corrected_to_the_source() {
    let dir = tempfile::tempdir().unwrap();
    let paragraph = "More than 3.7 million children in U.S. in 2024 are homeschooled.";
    let content = "More than 3.7 million children in U.S. in 2024 are homeschooled";
    let a = article("a1", 2024, &[paragraph]);
    write_llm_fixture(
        dir.path(),
        &extraction_request(content, 2024),
        &json!({"data_points": [{"label": "Homeschooled Children", "value": "3", "unit": "million", "series_key": "2024"}]}),
    );
    let providers = mock_providers(dir.path());
    let extracted = extract_data_points(&providers, &fact("f1", "a1", 0, content), &a).unwrap().unwrap();
    assert_eq!(extracted.data_points[0].value, dec("3"));

    let sources = a.paragraphs.clone();
    let issues = validate_extraction(&providers, std::slice::from_ref(&extracted), &sources).unwrap();
    assert_eq!(issues.len(), 1);
    assert_eq!(issues[0].kind, IssueKind::WrongValue);
    assert!(issues[0].suggested_fix.contains("3.7"), "{}", issues[0].suggested_fix);

    let out = validate_and_refine(&providers, vec![extracted], &sources, 2024, MAX_ITERATIONS).unwrap();
    assert_eq!(out.facts.len(), 1);
    let f = &out.facts[0];
    assert_eq!(f.data_points, vec![point("Homeschooled Children", "3.7", "million", Some("2024"))]);
    assert_eq!(f.content, content);
    assert_eq!(f.status, FactStatus::Refined);
    assert_eq!((out.dropped_unresolved, out.dropped_untraceable), (0, 0));
    assert!(out.issues.last().unwrap().is_empty());
}

#[test]
fn mixed_scales_in_one_fact_are_flagged() {
    let mut f = fact("f1", "a1", 0, "Spending rose from $900 million to $1.2 billion.");
    f.data_points = vec![point("Spending", "900", "$ million", Some("2019")), point("Spending", "1.2", "$ billion", Some("2020"))];
    let issues = validate_extraction(&Providers::offline(), &[f], &["Spending rose from $900 million to $1.2 billion.".into()]).unwrap();
    assert!(issues.iter().any(|i| i.kind == IssueKind::UnitInconsistency));
}

#[test]
fn a_fix_that_never_lands_drops_the_fact() {
    let paragraph = "About 3.7 million children are homeschooled.";
    let mut f = fact("f1", "a1", 0, paragraph);
    f.data_points = vec![point("Homeschooled Children", "3", "million", None)];
    let stubborn = json!({"facts": [{"id": "f1", "content": paragraph, "data_points": [
        {"label": "Homeschooled Children", "value": "3", "unit": "million", "series_key": null}]}]});
    let llm = Arc::new(ScriptedLlm::new().reply_n("refine_facts", stubborn, MAX_ITERATIONS));
    let out = validate_and_refine(&providers_with(llm), vec![f], &[paragraph.into()], 2024, MAX_ITERATIONS).unwrap();
    assert!(out.facts.is_empty());
    assert_eq!(out.dropped_unresolved, 1);
    assert_eq!(out.rounds, MAX_ITERATIONS);
}

#[test]
fn merge_triple() {
    worked::merge_triple().unwrap();
}

#[test]
fn entity_kinds_of_the_parent_sentence() {
    let p = Providers::offline();
    let found = detect_entities(&p, "23.1% of parents in the U.S. cited special needs").unwrap();
    let pairs: Vec<(&str, EntityKind)> = found.iter().map(|e| (e.text.as_str(), e.kind)).collect();
    assert!(pairs.contains(&("U.S.", EntityKind::Gpe)), "{pairs:?}");
    assert!(pairs.contains(&("23.1%", EntityKind::Percent)), "{pairs:?}");
    let other = detect_entities(&p, "15.6% of parents said that the child had a physical or mental problem").unwrap();
    assert!(other.iter().all(|e| e.kind != EntityKind::Gpe));
    assert!(detect_entities(&p, "").is_err());
}

#[test]
fn missing_place_is_filled_from_the_source() {
    worked::us_fill().unwrap();
}

#[test]
fn place_not_in_the_source_stays_unfilled() {
    let p = Providers::offline();
    let a = article("a1", 2024, &["15.6% of parents said that the child had a physical or mental problem."]);
    let mut flags = flag_missing(&[
        ("f1".to_string(), detect_entities(&p, "23.1% of parents in the U.S. cited special needs").unwrap()),
        ("f2".to_string(), detect_entities(&p, &a.paragraphs[0]).unwrap()),
    ]);
    let target = FillTarget { fact_id: "f2", content: &a.paragraphs[0], article: &a, paragraph_index: 0 };
    assert_eq!(fill_one(&p, &mut flags[0], &target).unwrap(), None);
    assert!(!flags[0].resolved);
}

#[test]
fn fact_sets_unify_styles_and_split_conflicts() {
    let p = Providers::offline();
    let mut a = fact("f1", "a1", 0, "3.7 million children were homeschooled in 2024.");
    a.data_points = vec![point("Homeschooled Children", "3.7", "million", Some("2024"))];
    let mut b = fact("f2", "a2", 0, "In 2024, 3,700,000 students homeschooled.");
    b.data_points = vec![point("Homeschooled Students", "3.7", "million", Some("2024"))];
    let sets = build_fact_sets(&p, "c1", &[&a, &b]).unwrap();
    assert_eq!(sets.len(), 1);
    assert_eq!(sets[0].fact_ids, vec!["f1", "f2"]);
    assert!(!sets[0].conflicting);

    let mut c = fact("f3", "a3", 0, "3.1 million children were homeschooled in 2024.");
    c.data_points = vec![point("Homeschooled Children", "3.1", "million", Some("2024"))];
    let sets = build_fact_sets(&p, "c1", &[&a, &c]).unwrap();
    assert_eq!(sets.len(), 2);
    assert!(sets.iter().all(|s| s.conflicting));
}

#[test]
fn caption_falls_back_to_the_template() {
    let merged = MergedFactSet::new(
        "m1".into(),
        "c1",
        vec![MergeMember { fact_set_id: "fs1".into(), data_points: vec![point("Homeschooled Children", "3.7", "million", Some("2024"))] }],
        "More than 3.7 million children are homeschooled.".into(),
    );
    let bad = json!({"title": "Growth", "caption_html": "Many children are homeschooled."});
    let llm = Arc::new(ScriptedLlm::new().reply_n("narrative", bad, 3));
    let n = generate_narrative(&providers_with(llm.clone()), &merged).unwrap();
    assert!(n.fallback);
    assert_eq!(n.caption_html, fallback_caption(&merged.points()));
    assert_eq!(highlights(&n.caption_html), vec![(0, "3.7 million".to_string())]);
    assert_eq!(llm.calls("narrative").len(), 3);
}

#[test]
fn repeated_topics_get_suffixes() {
    let drafts: Vec<ClusterDraft> = (1..=2)
        .map(|i| ClusterDraft { cluster_id: format!("c{i}"), contents: vec![format!("{i}0% of families homeschool.")] })
        .collect();
    let same = json!({"topics": [{"cluster_id": "c1", "topic": "Family Choices"}, {"cluster_id": "c2", "topic": "family choices"}]});
    let llm = Arc::new(ScriptedLlm::new().reply_n("topic_refine", same, 2));
    let labels = label_clusters(&providers_with(llm.clone()), "homeschooling", &drafts).unwrap();
    let topics: Vec<&str> = labels.iter().map(|l| l.topic.as_str()).collect();
    assert_eq!(topics[0], "Family Choices");
    assert_ne!(topics[0].to_lowercase(), topics[1].to_lowercase());
    assert!(topics[1].starts_with("family choices"), "{topics:?}");
    assert_eq!(llm.calls("topic_refine").len(), 2);
}

fn draft(id: &str, relevance: &str) -> factstory_core::storygen::UnitDraft {
    use factstory_core::model::{ChartKind, ChartSpec, NarrativeUnit};
    factstory_core::storygen::UnitDraft {
        unit: NarrativeUnit {
            id: id.into(),
            cluster_id: "c1".into(),
            fact_set_ids: vec![format!("fs-{id}")],
            title: format!("Unit {id}"),
            caption_html: String::new(),
            chart: ChartSpec { kind: ChartKind::Text, x_label: String::new(), y_label: String::new(), series: vec![], annotations: vec![] },
            source_article_ids: vec![],
            order_in_cluster: 0,
        },
        relevance: dec(relevance),
    }
}

#[test]
fn invalid_unit_order_keeps_relevance_order() {
    use factstory_core::storygen::order_units_within_cluster;
    let drafts = [draft("u1", "0.5"), draft("u2", "0.9"), draft("u3", "0.7")];
    let refs: Vec<_> = drafts.iter().collect();
    let bad = json!({"order": ["u1", "u1", "u9"]});
    let llm = Arc::new(ScriptedLlm::new().reply_n("order_units", bad, 2));
    assert_eq!(order_units_within_cluster(&providers_with(llm.clone()), &refs).unwrap(), ["u2", "u3", "u1"]);
    assert_eq!(llm.calls("order_units").len(), 2);

    let good = json!({"order": ["u3", "u1", "u2"]});
    let llm = Arc::new(ScriptedLlm::new().reply("order_units", good));
    assert_eq!(order_units_within_cluster(&providers_with(llm), &refs).unwrap(), ["u3", "u1", "u2"]);
    assert_eq!(order_units_within_cluster(&Providers::offline(), &refs[..1]).unwrap(), ["u1"]);
}
