//! The four hand-worked examples of the method, runnable from any suite.
//! Each returns `Err` with a description of the first mismatch.

use std::sync::Arc;

use chrono::{TimeZone, Utc};
use factstory_core::extraction::datapoints::{extract_data_points, extraction_request};
use factstory_core::extraction::validate::{validate_and_refine, MAX_ITERATIONS};
use factstory_core::model::{Article, DataPoint, Fact, FactStatus, IdSeq};
use factstory_core::organization::entities::{detect_entities, fill_one, flag_missing, FillTarget};
use factstory_core::organization::merge::{merge_fact_sets, ConstraintKind, FactSetView};
use factstory_core::providers::{ProviderConfig, Providers};
use serde_json::json;

use crate::llm::{providers_with, write_llm_fixture, ScriptedLlm};

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

pub fn article(id: &str, year: i32, paragraphs: &[&str]) -> Article {
    Article {
        id: id.into(),
        url: format!("https://example.org/{id}"),
        title: "Homeschooling in numbers".into(),
        snippet: String::new(),
        source_domain: "example.org".into(),
        published_year: year,
        retrieved_at: Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap(),
        paragraphs: paragraphs.iter().map(|s| s.to_string()).collect(),
        favicon_url: String::new(),
        found_by: vec![],
    }
}

pub fn fact(id: &str, article_id: &str, paragraph_index: usize, content: &str) -> Fact {
    Fact {
        id: id.into(),
        article_id: article_id.into(),
        paragraph_index,
        content: content.into(),
        data_points: vec![],
        relevance: Default::default(),
        embedding: vec![],
        status: FactStatus::Extracted,
    }
}

pub fn point(label: &str, value: &str, unit: &str, key: Option<&str>) -> DataPoint {
    DataPoint { label: label.into(), value: value.parse().unwrap(), unit: unit.into(), series_key: key.map(str::to_string) }
}

fn mock(dir: &std::path::Path) -> Result<Providers, String> {
    Providers::from_config(&ProviderConfig::mock(dir)).map_err(|e| e.to_string())
}

/// A recorded model answer becomes label "Homeschooled Children", value 3.7,
/// unit "million".
pub fn label_value_unit() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let content = "The number of homeschoolers in the U.S. is 3.7 million";
    let a = article("a1", 2024, &[content]);
    write_llm_fixture(
        dir.path(),
        &extraction_request(content, 2024),
        &json!({"data_points": [{"label": "Homeschooled Children", "value": "3.7 million", "unit": "children", "series_key": null}]}),
    );
    let out = extract_data_points(&mock(dir.path())?, &fact("f1", "a1", 0, content), &a)
        .map_err(|e| e.to_string())?
        .ok_or("fact dropped")?;
    let want = vec![point("Homeschooled Children", "3.7", "million", None)];
    ensure(out.data_points == want, || format!("got {:?}", out.data_points))
}

/// A recorded extraction of 3 where the text says 3.7 million is flagged
/// and refined to 3.7 with the content unchanged.
pub fn value_correction() -> Result<(), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let content = "More than 3.7 million children in U.S. in 2024 are homeschooled";
    let a = article("a1", 2024, &["More than 3.7 million children in U.S. in 2024 are homeschooled."]);
    write_llm_fixture(
        dir.path(),
        &extraction_request(content, 2024),
        &json!({"data_points": [{"label": "Homeschooled Children", "value": "3", "unit": "million", "series_key": "2024"}]}),
    );
    let providers = mock(dir.path())?;
    let extracted = extract_data_points(&providers, &fact("f1", "a1", 0, content), &a)
        .map_err(|e| e.to_string())?
        .ok_or("fact dropped")?;
    ensure(extracted.data_points[0].value.to_string() == "3", || format!("fixture not used: {:?}", extracted.data_points))?;
    let out = validate_and_refine(&providers, vec![extracted], &a.paragraphs, 2024, MAX_ITERATIONS).map_err(|e| e.to_string())?;
    ensure(out.facts.len() == 1, || format!("{} facts survived", out.facts.len()))?;
    let f = &out.facts[0];
    ensure(f.data_points == vec![point("Homeschooled Children", "3.7", "million", Some("2024"))], || format!("got {:?}", f.data_points))?;
    ensure(f.content == content, || format!("content changed to {:?}", f.content))?;
    ensure(f.status == FactStatus::Refined, || format!("status {:?}", f.status))
}

/// 23.1% and 15.6% reasons merge; a count with a proportion and a short
/// with a long time frame are rejected.
pub fn merge_triple() -> Result<(), String> {
    let view = |id: &str, content: &str, points: Vec<DataPoint>| FactSetView {
        id: id.into(),
        canonical_content: content.into(),
        data_points: points,
    };
    let sets = vec![
        view("fs1", "23.1% of parents cited their child's special needs.", vec![point("Special Needs", "23.1", "%", Some("special needs"))]),
        view("fs2", "15.6% of parents said the child had a physical or mental problem.", vec![point("Health", "15.6", "%", Some("physical or mental problem"))]),
        view("fs3", "Three million children are homeschooled.", vec![point("Homeschooled Children", "3", "million", None)]),
        view("fs4", "20% of students were homeschooled.", vec![point("Homeschooled Students", "20", "%", None)]),
        view("fs5", "Homeschooling rose 25% from 2020 to 2021.", vec![point("Increase", "25", "%", Some("2020–2021"))]),
        view("fs6", "Homeschooling doubled over the past decade.", vec![point("Increase", "100", "%", Some("2014–2024"))]),
    ];
    let proposal = json!({"groups": [
        {"fact_set_ids": ["fs1", "fs2"], "merged_content": "23.1% cited special needs and 15.6% a physical or mental problem."},
        {"fact_set_ids": ["fs3", "fs4"], "merged_content": "Three million children, or 20% of students, are homeschooled."},
        {"fact_set_ids": ["fs5", "fs6"], "merged_content": "Homeschooling rose 25% in a year and doubled over a decade."}
    ]});
    let llm = Arc::new(ScriptedLlm::new().reply("merge_fact_sets", proposal));
    let out = merge_fact_sets(&providers_with(llm), "c1", &sets, &mut IdSeq::new("m")).map_err(|e| e.to_string())?;
    let groups: Vec<Vec<&str>> = out.merged.iter().map(|m| m.fact_set_ids.iter().map(String::as_str).collect()).collect();
    let want: Vec<Vec<&str>> = vec![vec!["fs1", "fs2"], vec!["fs3"], vec!["fs4"], vec!["fs5"], vec!["fs6"]];
    ensure(groups == want, || format!("groups {groups:?}"))?;
    let rejected: Vec<(Vec<String>, Vec<ConstraintKind>)> = out
        .rejected
        .iter()
        .map(|r| (r.fact_set_ids.clone(), r.violations.iter().map(|v| v.kind).collect()))
        .collect();
    let want = vec![
        (vec!["fs3".to_string(), "fs4".to_string()], vec![ConstraintKind::UnitFamily]),
        (vec!["fs5".to_string(), "fs6".to_string()], vec![ConstraintKind::TimeFrame]),
    ];
    ensure(rejected == want, || format!("rejected {rejected:?}"))
}

/// A fact without a place gains "in the U.S." taken from its article.
pub fn us_fill() -> Result<(), String> {
    let p = Providers::offline();
    let a = article(
        "a1",
        2024,
        &[
            "A federal survey of families in the U.S. asked why parents homeschool.",
            "15.6% of parents said that the child had a physical or mental problem.",
        ],
    );
    let with_place = "23.1% of parents in the U.S. cited special needs";
    let without = "15.6% of parents said that the child had a physical or mental problem.";
    let members = vec![
        ("f1".to_string(), detect_entities(&p, with_place).map_err(|e| e.to_string())?),
        ("f2".to_string(), detect_entities(&p, without).map_err(|e| e.to_string())?),
    ];
    let mut flags = flag_missing(&members);
    ensure(flags.len() == 1 && flags[0].fact_id == "f2" && flags[0].reference == "U.S.", || format!("flags {flags:?}"))?;
    let target = FillTarget { fact_id: "f2", content: without, article: &a, paragraph_index: 1 };
    let completed = fill_one(&p, &mut flags[0], &target).map_err(|e| e.to_string())?;
    let want = "15.6% of parents said that the child had a physical or mental problem in the U.S.";
    ensure(completed.as_deref() == Some(want), || format!("completed {completed:?}"))
}
