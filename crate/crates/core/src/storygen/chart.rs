//! Chart recommendation with a guard that overrides impossible picks.

use std::collections::BTreeMap;

use rust_decimal::Decimal;
use serde_json::{json, Value};

use crate::extraction::quantity::{format_quantity, UnitParts};
use crate::model::{ChartKind, ChartSpec, DataPoint, SeriesPoint};
use crate::organization::merge::{parse_time_key, MergedFactSet};
use crate::providers::{ProviderError, Providers, StructuredRequest};

/// Tolerance for percentages that should add up to a whole.
const WHOLE_TOLERANCE: Decimal = Decimal::ONE;

fn is_percent(p: &DataPoint) -> bool {
    UnitParts::parse(&p.unit).percent
}

fn temporal_keys(points: &[DataPoint]) -> Option<Vec<i32>> {
    points.iter().map(|p| p.series_key.as_deref().and_then(parse_time_key).map(|k| k.start())).collect()
}

fn line_ok(points: &[DataPoint]) -> bool {
    let Some(mut keys) = temporal_keys(points) else { return false };
    keys.sort_unstable();
    keys.dedup();
    keys.len() >= 2
}

fn pie_ok(points: &[DataPoint]) -> bool {
    points.len() >= 2 && points.iter().all(|p| p.value >= Decimal::ZERO)
}

/// Every label occurs exactly twice, under two different keys.
fn range_ok(points: &[DataPoint]) -> bool {
    if points.len() < 2 {
        return false;
    }
    let mut by_label: BTreeMap<&str, Vec<&DataPoint>> = BTreeMap::new();
    for p in points {
        by_label.entry(p.label.as_str()).or_default().push(p);
    }
    by_label
        .values()
        .all(|ps| ps.len() == 2 && ps[0].series_key.is_some() && ps[1].series_key.is_some() && ps[0].series_key != ps[1].series_key)
}

fn isotype_ok(points: &[DataPoint]) -> bool {
    (1..=3).contains(&points.len())
        && points.iter().all(|p| is_percent(p) && p.value >= Decimal::ZERO && p.value <= Decimal::ONE_HUNDRED)
}

/// Whether `kind` can draw `points`.
pub fn chart_allowed(kind: ChartKind, points: &[DataPoint]) -> bool {
    match kind {
        ChartKind::Line => line_ok(points),
        ChartKind::Pie => pie_ok(points),
        ChartKind::Range => range_ok(points),
        ChartKind::Isotype => isotype_ok(points),
        ChartKind::Bar => points.len() >= 2,
        ChartKind::Text => true,
    }
}

/// The requested kind if drawable, else bar, isotype, text in that order.
pub fn guard_chart(kind: ChartKind, points: &[DataPoint]) -> ChartKind {
    if chart_allowed(kind, points) {
        return kind;
    }
    [ChartKind::Bar, ChartKind::Isotype, ChartKind::Text]
        .into_iter()
        .find(|k| chart_allowed(*k, points))
        .unwrap_or(ChartKind::Text)
}

/// Rule-based pick from the shape of the data.
pub fn heuristic_kind(points: &[DataPoint]) -> ChartKind {
    let all_percent = !points.is_empty() && points.iter().all(is_percent);
    let total: Decimal = points.iter().map(|p| p.value).sum();
    if line_ok(points) {
        ChartKind::Line
    } else if range_ok(points) {
        ChartKind::Range
    } else if points.len() == 1 && isotype_ok(points) {
        ChartKind::Isotype
    } else if all_percent && pie_ok(points) && (total - Decimal::ONE_HUNDRED).abs() <= WHOLE_TOLERANCE {
        ChartKind::Pie
    } else if points.len() >= 2 {
        ChartKind::Bar
    } else {
        ChartKind::Text
    }
}

fn default_labels(points: &[DataPoint]) -> (String, String) {
    let x = if temporal_keys(points).is_some() {
        "Year"
    } else if points.iter().any(|p| p.series_key.is_some()) {
        "Category"
    } else {
        ""
    };
    let y = match points.first() {
        Some(p) if is_percent(p) => "Percent".to_string(),
        Some(p) if !p.unit.is_empty() => p.unit.clone(),
        Some(p) => p.label.clone(),
        None => String::new(),
    };
    (x.to_string(), y)
}

pub fn series(points: &[DataPoint]) -> Vec<SeriesPoint> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| SeriesPoint {
            series_key: p.series_key.clone(),
            label: p.label.clone(),
            value: p.value,
            unit: p.unit.clone(),
            color_index: i,
        })
        .collect()
}

const CHART_PROMPT: &str = "Recommend one chart type for the data below, chosen from bar, pie, line, \
isotype, range (dumbbell) or text. Use line for values over time, pie for parts of a whole, range for \
pairs of values per category, isotype for one to three percentages, bar to compare categories, and text \
when no chart fits. Also give the x and y axis labels.\n\nContent: {content}\n\nData:\n{data}\n\n\
Answer with JSON {\"kind\": \"bar\", \"x_label\": \"...\", \"y_label\": \"...\"}.";

pub fn chart_request(merged: &MergedFactSet, points: &[DataPoint]) -> StructuredRequest {
    let data = points
        .iter()
        .map(|p| {
            let key = p.series_key.as_deref().map(|k| format!(" [{k}]")).unwrap_or_default();
            format!("- {}{key}: {}", p.label, format_quantity(p.value, &p.unit))
        })
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = CHART_PROMPT.replace("{content}", &merged.merged_content).replace("{data}", &data);
    StructuredRequest::new("recommend_chart", "chart_choice", prompt, json!({"points": points}))
}

/// Chart for one merged set; color indices follow data-point order.
pub fn recommend_chart(providers: &Providers, merged: &MergedFactSet) -> Result<ChartSpec, ProviderError> {
    let points = merged.points();
    let doc = providers.complete_structured(&chart_request(merged, &points))?;
    let picked = doc["kind"].as_str().and_then(ChartKind::parse).unwrap_or(ChartKind::Text);
    let kind = guard_chart(picked, &points);
    if kind != picked {
        tracing::info!(unit = %merged.id, %picked, %kind, "chart pick overridden");
    }
    let (dx, dy) = default_labels(&points);
    let label = |key: &str, default: String| {
        doc[key].as_str().map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).unwrap_or(default)
    };
    let mut annotations = Vec::new();
    if kind != picked {
        annotations.push(format!("{picked} was not drawable; shown as {kind}"));
    }
    Ok(ChartSpec {
        kind,
        x_label: label("x_label", dx),
        y_label: label("y_label", dy),
        series: series(&points),
        annotations,
    })
}

pub(crate) fn offline_chart(p: &Value) -> Value {
    let points: Vec<DataPoint> = serde_json::from_value(p["points"].clone()).unwrap_or_default();
    let (x, y) = default_labels(&points);
    json!({"kind": heuristic_kind(&points).as_str(), "x_label": x, "y_label": y})
}
