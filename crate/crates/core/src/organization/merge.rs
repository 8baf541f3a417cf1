//! Merging fact sets into the data behind one narrative unit, with a
//! deterministic guard for unit, time-frame and axis compatibility.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::extraction::quantity::{align_scales, format_quantity, unit_family};
use crate::model::{DataPoint, IdSeq};
use crate::providers::{ProviderError, Providers, StructuredRequest};
use crate::text;

/// Largest number of fact sets the offline proposer puts in one group.
const MAX_GROUP: usize = 4;

/// Spans up to this many years count as short-term.
pub const SHORT_SPAN_YEARS: i32 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeMember {
    pub fact_set_id: String,
    pub data_points: Vec<DataPoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedFactSet {
    pub id: String,
    pub cluster_id: String,
    pub fact_set_ids: Vec<String>,
    pub merged_content: String,
    pub unit_family: String,
    pub time_frame: Option<(i32, i32)>,
    pub members: Vec<MergeMember>,
}

impl MergedFactSet {
    pub fn new(id: String, cluster_id: &str, members: Vec<MergeMember>, merged_content: String) -> Self {
        let points = aligned_points(&members);
        let families: BTreeSet<String> = points.iter().map(|p| unit_family(&p.unit).to_string()).collect();
        let unit_family = match families.len() {
            1 => families.into_iter().next().unwrap(),
            0 => "unitless".to_string(),
            _ => "mixed".to_string(),
        };
        let years: Vec<i32> = points
            .iter()
            .filter_map(|p| p.series_key.as_deref().and_then(parse_time_key))
            .flat_map(|t| [t.start(), t.end()])
            .collect();
        let time_frame = years.iter().min().zip(years.iter().max()).map(|(a, b)| (*a, *b));
        Self {
            id,
            cluster_id: cluster_id.to_string(),
            fact_set_ids: members.iter().map(|m| m.fact_set_id.clone()).collect(),
            merged_content,
            unit_family,
            time_frame,
            members,
        }
    }

    /// Every data point, scale-aligned across members.
    pub fn points(&self) -> Vec<DataPoint> {
        aligned_points(&self.members)
    }
}

fn aligned_points(members: &[MergeMember]) -> Vec<DataPoint> {
    let mut points: Vec<DataPoint> = members.iter().flat_map(|m| m.data_points.iter().cloned()).collect();
    align_scales(&mut points);
    points
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeKey {
    Year(i32),
    Span(i32, i32),
}

impl TimeKey {
    pub fn start(self) -> i32 {
        match self {
            TimeKey::Year(y) | TimeKey::Span(y, _) => y,
        }
    }

    pub fn end(self) -> i32 {
        match self {
            TimeKey::Year(y) | TimeKey::Span(_, y) => y,
        }
    }
}

static SPAN_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{4})\s*(?:[–—\-/]|to)\s*(\d{2}|\d{4})$").unwrap());
static DECADE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{3})0s$").unwrap());

fn plausible_year(y: i32) -> bool {
    (1800..=2100).contains(&y)
}

/// Reads a series key as a year, a year span ("2020–2021", "2019/20") or a
/// decade ("2010s").
pub fn parse_time_key(key: &str) -> Option<TimeKey> {
    let key = key.trim();
    if let Ok(y) = key.parse::<i32>() {
        return plausible_year(y).then_some(TimeKey::Year(y));
    }
    if let Some(c) = SPAN_RE.captures(key) {
        let a: i32 = c[1].parse().ok()?;
        let mut b: i32 = c[2].parse().ok()?;
        if c[2].len() == 2 {
            b += a / 100 * 100;
        }
        return (plausible_year(a) && plausible_year(b) && a <= b).then_some(TimeKey::Span(a, b));
    }
    if let Some(c) = DECADE_RE.captures(key) {
        let a: i32 = c[1].parse::<i32>().ok()? * 10;
        return plausible_year(a).then_some(TimeKey::Span(a, a + 9));
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    Temporal,
    Categorical,
    Absent,
}

pub fn axis_kind(key: Option<&str>) -> AxisKind {
    match key.map(str::trim) {
        None | Some("") => AxisKind::Absent,
        Some(k) if parse_time_key(k).is_some() => AxisKind::Temporal,
        Some(_) => AxisKind::Categorical,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Frame {
    Points,
    Span(i32, i32),
}

fn member_frame(points: &[DataPoint]) -> Option<Frame> {
    let keys: Vec<TimeKey> = points.iter().filter_map(|p| p.series_key.as_deref().and_then(parse_time_key)).collect();
    if keys.is_empty() {
        return None;
    }
    if keys.iter().all(|k| matches!(k, TimeKey::Year(_))) {
        return Some(Frame::Points);
    }
    let start = keys.iter().map(|k| k.start()).min().unwrap();
    let end = keys.iter().map(|k| k.end()).max().unwrap();
    Some(Frame::Span(start, end))
}

fn is_short(start: i32, end: i32) -> bool {
    end - start <= SHORT_SPAN_YEARS
}

/// Two time frames are compatible when both are points in time, or both are
/// overlapping spans of the same granularity.
fn frames_compatible(a: Frame, b: Frame) -> bool {
    match (a, b) {
        (Frame::Points, Frame::Points) => true,
        (Frame::Span(a0, a1), Frame::Span(b0, b1)) => a0 <= b1 && b0 <= a1 && is_short(a0, a1) == is_short(b0, b1),
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    UnitFamily,
    TimeFrame,
    Axis,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::UnitFamily => "unit_family",
            ConstraintKind::TimeFrame => "time_frame",
            ConstraintKind::Axis => "axis",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintViolation {
    pub kind: ConstraintKind,
    pub detail: String,
}

/// Deterministic re-check of a merge. Thematic coherence is left to the
/// model and not checked here.
pub fn check_merge_constraints(candidate: &MergedFactSet) -> Vec<ConstraintViolation> {
    let mut out = Vec::new();
    let points = candidate.points();
    let families: BTreeSet<String> = points.iter().map(|p| unit_family(&p.unit).to_string()).collect();
    if families.len() > 1 {
        out.push(ConstraintViolation {
            kind: ConstraintKind::UnitFamily,
            detail: format!("mixes unit families {}", families.into_iter().collect::<Vec<_>>().join(", ")),
        });
    }
    let frames: Vec<(String, Frame)> = candidate
        .members
        .iter()
        .filter_map(|m| member_frame(&m.data_points).map(|f| (m.fact_set_id.clone(), f)))
        .collect();
    'outer: for (i, (a_id, a)) in frames.iter().enumerate() {
        for (b_id, b) in &frames[i + 1..] {
            if !frames_compatible(*a, *b) {
                out.push(ConstraintViolation {
                    kind: ConstraintKind::TimeFrame,
                    detail: format!("time frames of {a_id} ({a:?}) and {b_id} ({b:?}) are not compatible"),
                });
                break 'outer;
            }
        }
    }
    let axes: BTreeSet<AxisKind> = points.iter().map(|p| axis_kind(p.series_key.as_deref())).collect();
    if axes.len() > 1 {
        out.push(ConstraintViolation {
            kind: ConstraintKind::Axis,
            detail: format!("series keys mix axis kinds {axes:?}"),
        });
    }
    out
}

/// A fact set as seen by the merge step: its canonical text and the data
/// points of its canonical fact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactSetView {
    pub id: String,
    pub canonical_content: String,
    pub data_points: Vec<DataPoint>,
}

const MERGE_PROMPT: &str = "The fact sets below belong to one theme of a data story. Group fact sets \
that should be told together in one narrative unit with one chart. Only group fact sets that:\n\
1. use the same kind of measurement unit (never a count with a proportion, or money with a count);\n\
2. contribute to one cohesive story within the theme;\n\
3. share logically connected time frames (never a short-term change with a long-term pattern);\n\
4. can be drawn on one chart with consistent x and y axes.\n\
Every fact set must appear in exactly one group; a group may hold a single fact set. Write a merged \
content that states all grouped facts in fluent prose.\n\n{sets}\n\n\
Answer with JSON {\"groups\": [{\"fact_set_ids\": [\"...\"], \"merged_content\": \"...\"}]}.";

fn describe_points(points: &[DataPoint]) -> String {
    points
        .iter()
        .map(|p| match &p.series_key {
            Some(k) => format!("{} ({k}) = {}", p.label, format_quantity(p.value, &p.unit)),
            None => format!("{} = {}", p.label, format_quantity(p.value, &p.unit)),
        })
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn merge_request(sets: &[FactSetView]) -> StructuredRequest {
    let listing = sets
        .iter()
        .map(|s| format!("- {}: {} [{}]", s.id, s.canonical_content, describe_points(&s.data_points)))
        .collect::<Vec<_>>()
        .join("\n");
    StructuredRequest::new(
        "merge_fact_sets",
        "merge_proposals",
        MERGE_PROMPT.replace("{sets}", &listing),
        json!({"fact_sets": sets}),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedMerge {
    pub fact_set_ids: Vec<String>,
    pub violations: Vec<ConstraintViolation>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeOutcome {
    pub merged: Vec<MergedFactSet>,
    pub rejected: Vec<RejectedMerge>,
}

fn check_groups(doc: &Value, known: &BTreeSet<&str>) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for g in doc["groups"].as_array().into_iter().flatten() {
        for id in g["fact_set_ids"].as_array().into_iter().flatten().filter_map(Value::as_str) {
            if !known.contains(id) {
                return Err(format!("unknown fact set id {id:?}"));
            }
            if !seen.insert(id.to_string()) {
                return Err(format!("fact set {id} appears in more than one group"));
            }
        }
    }
    Ok(())
}

/// Model-proposed merges, each re-checked; rejected proposals fall back to
/// one merged set per fact set. `ids` numbers the merged sets.
pub fn merge_fact_sets(
    providers: &Providers,
    cluster_id: &str,
    sets: &[FactSetView],
    ids: &mut IdSeq,
) -> Result<MergeOutcome, ProviderError> {
    let position: BTreeMap<&str, usize> = sets.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let groups: Vec<(Vec<usize>, String)> = if sets.len() <= 1 {
        sets.iter().enumerate().map(|(i, s)| (vec![i], s.canonical_content.clone())).collect()
    } else {
        let known: BTreeSet<&str> = position.keys().copied().collect();
        let doc = providers.complete_checked(&merge_request(sets), |d| check_groups(d, &known))?;
        doc["groups"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|g| {
                let members = g["fact_set_ids"]
                    .as_array()
                    .into_iter()
                    .flatten()
                    .filter_map(|id| id.as_str().and_then(|id| position.get(id).copied()))
                    .collect::<Vec<_>>();
                (members, text::collapse_ws(g["merged_content"].as_str().unwrap_or_default()))
            })
            .filter(|(m, _)| !m.is_empty())
            .collect()
    };
    let member = |i: usize| MergeMember { fact_set_id: sets[i].id.clone(), data_points: sets[i].data_points.clone() };
    let mut outcome = MergeOutcome::default();
    let mut built: Vec<(usize, Vec<usize>, String)> = Vec::new();
    let mut covered = BTreeSet::new();
    for (mut members, content) in groups {
        members.sort_unstable();
        covered.extend(members.iter().copied());
        if members.len() > 1 {
            let candidate = MergedFactSet::new(String::new(), cluster_id, members.iter().map(|&i| member(i)).collect(), content.clone());
            let violations = check_merge_constraints(&candidate);
            if !violations.is_empty() {
                tracing::info!(sets = ?candidate.fact_set_ids, ?violations, "merge proposal rejected");
                outcome.rejected.push(RejectedMerge { fact_set_ids: candidate.fact_set_ids, violations });
                for i in members {
                    built.push((i, vec![i], sets[i].canonical_content.clone()));
                }
                continue;
            }
        }
        let content = if content.is_empty() || members.len() == 1 { join_contents(sets, &members) } else { content };
        built.push((members[0], members, content));
    }
    for i in (0..sets.len()).filter(|i| !covered.contains(i)) {
        built.push((i, vec![i], sets[i].canonical_content.clone()));
    }
    built.sort_by_key(|(first, _, _)| *first);
    outcome.merged = built
        .into_iter()
        .map(|(_, members, content)| MergedFactSet::new(ids.next_id(), cluster_id, members.iter().map(|&i| member(i)).collect(), content))
        .collect();
    Ok(outcome)
}

fn join_contents(sets: &[FactSetView], members: &[usize]) -> String {
    members.iter().map(|&i| sets[i].canonical_content.as_str()).collect::<Vec<_>>().join(" ")
}

pub(crate) fn offline_merge(p: &Value) -> Value {
    let sets: Vec<FactSetView> = serde_json::from_value(p["fact_sets"].clone()).unwrap_or_default();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        let stems = text::stems(&s.canonical_content);
        let fits = |g: &Vec<usize>| {
            if g.len() >= MAX_GROUP || !g.iter().any(|&j| !text::stems(&sets[j].canonical_content).is_disjoint(&stems)) {
                return false;
            }
            let members = g
                .iter()
                .chain(std::iter::once(&i))
                .map(|&j| MergeMember { fact_set_id: sets[j].id.clone(), data_points: sets[j].data_points.clone() })
                .collect();
            check_merge_constraints(&MergedFactSet::new(String::new(), "", members, String::new())).is_empty()
        };
        match groups.iter().position(fits) {
            Some(g) => groups[g].push(i),
            None => groups.push(vec![i]),
        }
    }
    let groups: Vec<Value> = groups
        .iter()
        .map(|g| {
            json!({
                "fact_set_ids": g.iter().map(|&i| sets[i].id.clone()).collect::<Vec<_>>(),
                "merged_content": join_contents(&sets, g),
            })
        })
        .collect();
    json!({ "groups": groups })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(value: &str, unit: &str, key: Option<&str>) -> DataPoint {
        DataPoint { label: "x".into(), value: value.parse().unwrap(), unit: unit.into(), series_key: key.map(str::to_string) }
    }

    fn merged(members: Vec<Vec<DataPoint>>) -> MergedFactSet {
        let members = members
            .into_iter()
            .enumerate()
            .map(|(i, data_points)| MergeMember { fact_set_id: format!("fs{}", i + 1), data_points })
            .collect();
        MergedFactSet::new("u1".into(), "c1", members, String::new())
    }

    fn kinds(m: &MergedFactSet) -> Vec<ConstraintKind> {
        check_merge_constraints(m).into_iter().map(|v| v.kind).collect()
    }

    #[test]
    fn percent_points_with_categories_pass() {
        let m = merged(vec![vec![point("23.1", "%", Some("special needs"))], vec![point("15.6", "%", Some("health"))]]);
        assert!(kinds(&m).is_empty());
        assert_eq!(m.unit_family, "percent");
    }

    #[test]
    fn count_and_percent_conflict() {
        let m = merged(vec![vec![point("3", "million", None)], vec![point("20", "%", None)]]);
        assert_eq!(kinds(&m), vec![ConstraintKind::UnitFamily]);
    }

    #[test]
    fn point_years_against_a_decade_span() {
        let m = merged(vec![vec![point("10", "%", Some("2020")), point("12", "%", Some("2021"))], vec![point("30", "%", Some("2010–2020"))]]);
        assert_eq!(kinds(&m), vec![ConstraintKind::TimeFrame]);
        assert_eq!(m.time_frame, Some((2010, 2021)));
    }

    #[test]
    fn span_granularity_must_match() {
        let short = vec![point("25", "%", Some("2020–2021"))];
        let long = vec![point("100", "%", Some("2014–2024"))];
        assert_eq!(kinds(&merged(vec![short.clone(), long])), vec![ConstraintKind::TimeFrame]);
        assert!(kinds(&merged(vec![short, vec![point("5", "%", Some("2021–2022"))]])).is_empty());
    }

    #[test]
    fn mixed_axis_kinds() {
        let m = merged(vec![vec![point("10", "%", Some("2020"))], vec![point("12", "%", Some("boys"))]]);
        assert_eq!(kinds(&m), vec![ConstraintKind::Axis]);
    }

    #[test]
    fn scales_align_before_family_check() {
        let m = merged(vec![vec![point("850000", "", Some("1999"))], vec![point("2.5", "million", Some("2020"))]]);
        assert!(kinds(&m).is_empty());
        assert_eq!(m.points()[0].value.to_string(), "0.85");
    }

    #[test]
    fn time_keys() {
        assert_eq!(parse_time_key("2019/20"), Some(TimeKey::Span(2019, 2020)));
        assert_eq!(parse_time_key("1990s"), Some(TimeKey::Span(1990, 1999)));
        assert_eq!(parse_time_key("2021 to 2023"), Some(TimeKey::Span(2021, 2023)));
        assert_eq!(parse_time_key("boys"), None);
        assert_eq!(parse_time_key("12"), None);
    }
}
