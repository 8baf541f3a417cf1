//! Validation of extracted facts against their source paragraphs, and the
//! bounded validate/refine loop.

use std::collections::{BTreeMap, BTreeSet};

use rust_decimal::prelude::ToPrimitive;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::datapoints::{guess_label, points_from_doc};
use super::identify::{keep_fact, numbers_verbatim};
use super::quantity::{
    align_scales, format_quantity, normalize_quantity, same_alignment_group, same_magnitude, scan_quantities, unit_family,
    UnitParts,
};
use crate::model::{DataPoint, Fact, FactStatus};
use crate::providers::{ProviderError, Providers, StructuredRequest};
use crate::text;

pub const MAX_ITERATIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    ContentMismatch,
    WrongValue,
    MissingDataPoint,
    UnitInconsistency,
    AmbiguousReference,
}

impl IssueKind {
    fn touches_content(self) -> bool {
        matches!(self, IssueKind::ContentMismatch | IssueKind::AmbiguousReference)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub fact_id: String,
    pub kind: IssueKind,
    pub detail: String,
    pub suggested_fix: String,
    /// Index of the offending data point, when the issue concerns one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_point: Option<usize>,
}

fn source_of<'a>(fact: &Fact, sources: &'a [String]) -> &'a str {
    sources.get(fact.paragraph_index).map(String::as_str).unwrap_or_default()
}

fn fact_json(fact: &Fact, sources: &[String]) -> Value {
    json!({
        "id": fact.id,
        "content": fact.content,
        "paragraph": source_of(fact, sources),
        "data_points": fact.data_points.iter().map(|p| json!({
            "label": p.label,
            "value": p.value.to_string(),
            "unit": p.unit,
            "series_key": p.series_key,
        })).collect::<Vec<_>>(),
    })
}

fn describe(fact: &Fact, sources: &[String]) -> String {
    let mut out = format!(
        "Fact {}\nSource paragraph: {}\nFact content: {}\nData points:",
        fact.id,
        source_of(fact, sources),
        fact.content
    );
    for (i, p) in fact.data_points.iter().enumerate() {
        out.push_str(&format!(
            "\n  [{i}] label={:?} value={} unit={:?} series_key={}",
            p.label,
            p.value,
            p.unit,
            p.series_key.as_deref().unwrap_or("null")
        ));
    }
    out
}

const VALIDATE_PROMPT: &str = "Check extracted data facts against their source paragraphs for \
correctness, consistency and completeness.\n\
- content_mismatch: the fact content misstates the source\n\
- wrong_value: a data point value differs from the number in the text\n\
- missing_data_point: a number in the fact content has no data point\n\
- unit_inconsistency: data points of one fact use different units or scales\n\
- ambiguous_reference: the fact cannot be understood without context it lacks\n\
For each problem give the fact id, the kind, a short detail, a concrete suggested_fix (for values, \
the correct number as written in the text) and the data point index when relevant. Report nothing \
for correct facts.\n\n{facts}\n\nAnswer with JSON {\"issues\": [...]}.";

pub fn validation_request(facts: &[Fact], sources: &[String]) -> StructuredRequest {
    let listing = facts.iter().map(|f| describe(f, sources)).collect::<Vec<_>>().join("\n\n");
    StructuredRequest::new(
        "validate_facts",
        "validation_report",
        VALIDATE_PROMPT.replace("{facts}", &listing),
        json!({"facts": facts.iter().map(|f| fact_json(f, sources)).collect::<Vec<_>>()}),
    )
}

/// Unit mixing is checked deterministically as well as by the model.
pub fn unit_issues(fact: &Fact) -> Option<ValidationIssue> {
    let first = fact.data_points.first()?;
    let family = unit_family(&first.unit);
    if let Some(p) = fact.data_points.iter().find(|p| unit_family(&p.unit) != family && !same_alignment_group(&p.unit, &first.unit)) {
        return Some(ValidationIssue {
            fact_id: fact.id.clone(),
            kind: IssueKind::UnitInconsistency,
            detail: format!("units {:?} and {:?} belong to different families", first.unit, p.unit),
            suggested_fix: "keep only values measured in one unit".into(),
            data_point: None,
        });
    }
    let mut aligned = fact.data_points.clone();
    align_scales(&mut aligned);
    if aligned != fact.data_points {
        let units: BTreeSet<&str> = fact.data_points.iter().map(|p| p.unit.as_str()).collect();
        return Some(ValidationIssue {
            fact_id: fact.id.clone(),
            kind: IssueKind::UnitInconsistency,
            detail: format!("scales {:?} appear inconsistently", units),
            suggested_fix: "normalize all values to the largest scale".into(),
            data_point: None,
        });
    }
    None
}

/// Issues for `facts`: the model's report plus deterministic unit checks.
pub fn validate_extraction(providers: &Providers, facts: &[Fact], sources: &[String]) -> Result<Vec<ValidationIssue>, ProviderError> {
    if facts.is_empty() {
        return Ok(Vec::new());
    }
    let known: BTreeMap<&str, usize> = facts.iter().map(|f| (f.id.as_str(), f.data_points.len())).collect();
    let doc = providers.complete_checked(&validation_request(facts, sources), |doc| {
        for issue in doc["issues"].as_array().into_iter().flatten() {
            let id = issue["fact_id"].as_str().unwrap_or_default();
            let Some(&n) = known.get(id) else {
                return Err(format!("fact_id {id:?} is not one of the listed facts"));
            };
            if let Some(i) = issue.get("data_point").and_then(Value::as_u64) {
                if i as usize >= n {
                    return Err(format!("fact {id} has no data point {i}"));
                }
            }
        }
        Ok(())
    })?;
    let mut issues: Vec<ValidationIssue> = serde_json::from_value(doc["issues"].clone())
        .map_err(|e| ProviderError::ProviderUnavailable(format!("validation report: {e}")))?;
    for f in facts {
        if let Some(u) = unit_issues(f) {
            if !issues.iter().any(|i| i.fact_id == f.id && i.kind == IssueKind::UnitInconsistency) {
                issues.push(u);
            }
        }
    }
    Ok(issues)
}

const REFINE_PROMPT: &str = "Refine extracted data facts so that they resolve the listed issues. \
Make minimal edits that preserve the original context: change only the fields an issue refers to, \
keep every number exactly as written in the source, and leave everything else untouched.\n\n\
{facts}\n\nIssues:\n{issues}\n\n\
Answer with JSON {\"facts\": [{\"id\": \"...\", \"content\": \"...\", \"data_points\": [...]}]} \
containing every listed fact.";

pub fn refine_request(facts: &[Fact], issues: &[ValidationIssue], sources: &[String]) -> StructuredRequest {
    let listing = facts.iter().map(|f| describe(f, sources)).collect::<Vec<_>>().join("\n\n");
    let issue_text = issues
        .iter()
        .map(|i| {
            format!(
                "- {} {:?}{}: {} (suggested fix: {})",
                i.fact_id,
                i.kind,
                i.data_point.map(|d| format!(" [{d}]")).unwrap_or_default(),
                i.detail,
                i.suggested_fix
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    StructuredRequest::new(
        "refine_facts",
        "refined_facts",
        REFINE_PROMPT.replace("{facts}", &listing).replace("{issues}", &issue_text),
        json!({
            "facts": facts.iter().map(|f| fact_json(f, sources)).collect::<Vec<_>>(),
            "issues": issues,
        }),
    )
}

/// Applies the model's refinements to the flagged facts. Only fields named
/// by an issue may change; edits that break the fact's own invariants are
/// discarded.
pub fn refine_extraction(
    providers: &Providers,
    facts: &[Fact],
    issues: &[ValidationIssue],
    sources: &[String],
    published_year: i32,
) -> Result<Vec<Fact>, ProviderError> {
    let flagged_ids: BTreeSet<&str> = issues.iter().map(|i| i.fact_id.as_str()).collect();
    let flagged: Vec<Fact> = facts.iter().filter(|f| flagged_ids.contains(f.id.as_str())).cloned().collect();
    if flagged.is_empty() {
        return Ok(facts.to_vec());
    }
    let doc = providers.complete_checked(&refine_request(&flagged, issues, sources), |doc| {
        match doc["facts"].as_array().into_iter().flatten().filter_map(|f| f["id"].as_str()).find(|id| !flagged_ids.contains(id)) {
            Some(id) => Err(format!("fact {id:?} was not flagged")),
            None => Ok(()),
        }
    })?;
    let mut refined: BTreeMap<String, &Value> = BTreeMap::new();
    for f in doc["facts"].as_array().into_iter().flatten() {
        if let Some(id) = f["id"].as_str() {
            refined.insert(id.to_string(), f);
        }
    }
    Ok(facts
        .iter()
        .map(|fact| {
            let Some(new) = refined.get(&fact.id) else { return fact.clone() };
            let kinds: BTreeSet<IssueKind> = issues.iter().filter(|i| i.fact_id == fact.id).map(|i| i.kind).collect();
            let source = source_of(fact, sources);
            let mut out = fact.clone();
            if kinds.iter().any(|k| k.touches_content()) {
                let content = text::collapse_ws(new["content"].as_str().unwrap_or_default());
                if keep_fact(&content, source) {
                    out.content = content;
                }
            }
            if kinds.iter().any(|k| !k.touches_content()) {
                let points = points_from_doc(new, published_year);
                if !points.is_empty() {
                    out.data_points = points;
                }
            }
            if out != *fact {
                out.status = FactStatus::Refined;
            }
            out
        })
        .collect())
}

/// A data point is traceable when its magnitude equals a number in the
/// source paragraph.
pub fn traceable(point: &DataPoint, source: &str) -> bool {
    let m = super::quantity::magnitude(point.value, &point.unit);
    scan_quantities(source).iter().any(|q| same_magnitude(q.quantity.magnitude(), m))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LoopOutcome {
    pub facts: Vec<Fact>,
    /// Facts still flagged after the last round.
    pub dropped_unresolved: usize,
    /// Facts with a data point not found in the source.
    pub dropped_untraceable: usize,
    pub rounds: usize,
    pub issues: Vec<Vec<ValidationIssue>>,
}

/// Validates up to `max_iterations` times, refining flagged facts between
/// rounds. Facts still flagged in the last round are dropped.
pub fn validate_and_refine(
    providers: &Providers,
    facts: Vec<Fact>,
    sources: &[String],
    published_year: i32,
    max_iterations: usize,
) -> Result<LoopOutcome, ProviderError> {
    let mut out = LoopOutcome { facts, ..Default::default() };
    for round in 1..=max_iterations.max(1) {
        let issues = validate_extraction(providers, &out.facts, sources)?;
        out.rounds = round;
        out.issues.push(issues.clone());
        if issues.is_empty() {
            break;
        }
        if round == max_iterations.max(1) {
            let flagged: BTreeSet<&str> = issues.iter().map(|i| i.fact_id.as_str()).collect();
            let before = out.facts.len();
            out.facts.retain(|f| !flagged.contains(f.id.as_str()));
            out.dropped_unresolved = before - out.facts.len();
            for id in flagged {
                tracing::warn!(fact = id, "fact still flagged after {round} rounds, dropped");
            }
            break;
        }
        out.facts = refine_extraction(providers, &out.facts, &issues, sources, published_year)?;
    }
    for f in out.facts.iter_mut() {
        if f.status == FactStatus::Extracted {
            f.status = FactStatus::Validated;
        }
    }
    let before = out.facts.len();
    out.facts.retain(|f| {
        let ok = f.data_points.iter().all(|p| traceable(p, source_of(f, sources)));
        if !ok {
            tracing::warn!(fact = %f.id, "data point not traceable to source, dropped");
        }
        ok
    });
    out.dropped_untraceable = before - out.facts.len();
    Ok(out)
}

fn log_distance(a: rust_decimal::Decimal, b: rust_decimal::Decimal) -> f64 {
    let (a, b) = (a.abs().to_f64().unwrap_or(0.0), b.abs().to_f64().unwrap_or(0.0));
    if a == 0.0 || b == 0.0 {
        return if a == b { 0.0 } else { f64::INFINITY };
    }
    (a / b).ln().abs()
}

fn issue(fact: &str, kind: IssueKind, detail: String, fix: String, point: Option<usize>) -> Value {
    json!({"fact_id": fact, "kind": kind, "detail": detail, "suggested_fix": fix, "data_point": point})
}

fn payload_fact(v: &Value) -> Option<(String, String, String, Vec<DataPoint>)> {
    let id = v["id"].as_str()?.to_string();
    let content = v["content"].as_str()?.to_string();
    let paragraph = v["paragraph"].as_str().unwrap_or_default().to_string();
    let points = v["data_points"]
        .as_array()?
        .iter()
        .filter_map(|p| {
            Some(DataPoint {
                label: p["label"].as_str()?.to_string(),
                value: p["value"].as_str()?.parse().ok()?,
                unit: p["unit"].as_str().unwrap_or_default().to_string(),
                series_key: p["series_key"].as_str().map(str::to_string),
            })
        })
        .collect();
    Some((id, content, paragraph, points))
}

pub(crate) fn offline_validate(p: &Value) -> Value {
    let mut issues = Vec::new();
    for f in p["facts"].as_array().into_iter().flatten() {
        let Some((id, content, paragraph, points)) = payload_fact(f) else { continue };
        if !numbers_verbatim(&content, &paragraph) {
            let best = text::split_sentences(&paragraph)
                .into_iter()
                .filter(|s| keep_fact(s, &paragraph))
                .max_by(|a, b| text::stem_overlap(a, &content).total_cmp(&text::stem_overlap(b, &content)))
                .unwrap_or_default();
            issues.push(issue(&id, IssueKind::ContentMismatch, "numbers in the fact do not appear in the source".into(), best, None));
            continue;
        }
        let candidates: Vec<_> = scan_quantities(&content).into_iter().filter(|q| !q.is_year).collect();
        let matches = |m| candidates.iter().position(|c| same_magnitude(c.quantity.magnitude(), m));
        let mut used: BTreeSet<usize> = points
            .iter()
            .filter_map(|p| matches(super::quantity::magnitude(p.value, &p.unit)))
            .collect();
        for (i, point) in points.iter().enumerate() {
            let m = super::quantity::magnitude(point.value, &point.unit);
            if matches(m).is_some() {
                continue;
            }
            let best = candidates
                .iter()
                .enumerate()
                .filter(|(j, c)| !used.contains(j) && same_alignment_group(&c.quantity.unit, &point.unit))
                .min_by(|(_, a), (_, b)| log_distance(a.quantity.magnitude(), m).total_cmp(&log_distance(b.quantity.magnitude(), m)));
            let fix = best.map(|(j, c)| {
                used.insert(j);
                c.surface.clone()
            });
            issues.push(issue(
                &id,
                IssueKind::WrongValue,
                format!("value {} does not match the text", format_quantity(point.value, &point.unit)),
                fix.unwrap_or_default(),
                Some(i),
            ));
        }
        if let Some(first) = points.first() {
            for (j, c) in candidates.iter().enumerate() {
                if !used.contains(&j) && same_alignment_group(&c.quantity.unit, &first.unit) {
                    issues.push(issue(&id, IssueKind::MissingDataPoint, format!("{} has no data point", c.surface), c.surface.clone(), None));
                }
            }
        }
    }
    json!({ "issues": issues })
}

fn point_json(p: &DataPoint) -> Value {
    json!({"label": p.label, "value": format_quantity(p.value, &p.unit), "unit": "", "series_key": p.series_key})
}

pub(crate) fn offline_refine(p: &Value) -> Value {
    let issues: Vec<ValidationIssue> = serde_json::from_value(p["issues"].clone()).unwrap_or_default();
    let mut facts = Vec::new();
    for f in p["facts"].as_array().into_iter().flatten() {
        let Some((id, mut content, _, mut points)) = payload_fact(f) else { continue };
        for i in issues.iter().filter(|i| i.fact_id == id) {
            match i.kind {
                IssueKind::ContentMismatch if !i.suggested_fix.is_empty() => content = i.suggested_fix.clone(),
                IssueKind::WrongValue => {
                    if let (Some(d), Ok(q)) = (i.data_point, normalize_quantity(&i.suggested_fix)) {
                        if let Some(point) = points.get_mut(d) {
                            point.value = q.value;
                            point.unit = q.unit;
                        }
                    }
                }
                IssueKind::MissingDataPoint => {
                    if let Some(m) = scan_quantities(&content).into_iter().find(|q| q.surface == i.suggested_fix) {
                        points.push(DataPoint {
                            label: guess_label(&content, m.start, m.end),
                            value: m.quantity.value,
                            unit: m.quantity.unit,
                            series_key: None,
                        });
                    }
                }
                IssueKind::UnitInconsistency => {
                    if let Some(first) = points.first().cloned() {
                        let fam = UnitParts::parse(&first.unit).family();
                        points.retain(|p| unit_family(&p.unit) == fam || same_alignment_group(&p.unit, &first.unit));
                    }
                }
                _ => {}
            }
        }
        align_scales(&mut points);
        facts.push(json!({"id": id, "content": content, "data_points": points.iter().map(point_json).collect::<Vec<_>>()}));
    }
    json!({ "facts": facts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rust_decimal::Decimal;

    fn fact(id: &str, content: &str, points: &[(&str, &str)]) -> Fact {
        Fact {
            id: id.into(),
            article_id: "a1".into(),
            paragraph_index: 0,
            content: content.into(),
            data_points: points
                .iter()
                .map(|(v, u)| DataPoint { label: "X".into(), value: v.parse().unwrap(), unit: u.to_string(), series_key: None })
                .collect(),
            relevance: Decimal::ZERO,
            embedding: Vec::new(),
            status: FactStatus::Extracted,
        }
    }

    #[test]
    fn scale_mixing_is_flagged() {
        let f = fact("f1", "Revenue was $1.2 billion and costs $300 million.", &[("1.2", "$ billion"), ("300", "$ million")]);
        assert_eq!(unit_issues(&f).unwrap().kind, IssueKind::UnitInconsistency);
        let f = fact("f1", "3.7 million and 23%", &[("3.7", "million"), ("23", "%")]);
        assert_eq!(unit_issues(&f).unwrap().kind, IssueKind::UnitInconsistency);
        let f = fact("f1", "0.85 million", &[("0.85", "million"), ("2.5", "million")]);
        assert!(unit_issues(&f).is_none());
    }

    #[test]
    fn offline_validator_suggests_the_text_value() {
        let src = vec!["The number of homeschoolers in the U.S. is 3.7 million.".to_string()];
        let f = fact("t1", "The number of homeschoolers in the U.S. is 3.7 million", &[("3", "million")]);
        let req = validation_request(&[f], &src);
        let doc = offline_validate(&req.payload);
        let issues: Vec<ValidationIssue> = serde_json::from_value(doc["issues"].clone()).unwrap();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, IssueKind::WrongValue);
        assert_eq!(issues[0].suggested_fix, "3.7 million");
    }

    #[test]
    fn traceability_uses_magnitudes() {
        let p = DataPoint { label: "x".into(), value: "0.85".parse().unwrap(), unit: "million".into(), series_key: None };
        assert!(traceable(&p, "grew from 850,000 to 2.5 million"));
        assert!(!traceable(&p, "grew from 800,000 to 2.5 million"));
    }
}
