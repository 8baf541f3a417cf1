//! Structured data points (label, value, unit, series key) for each fact.

use std::sync::LazyLock;

use regex::Regex;
use serde_json::{json, Value};

use super::quantity::{align_scales, normalize_quantity, same_alignment_group, scan_quantities, Quantity, UnitParts};
use crate::model::{Article, DataPoint, Fact, UNKNOWN_YEAR};
use crate::providers::{ProviderError, Providers, StructuredRequest};
use crate::text;

const EXTRACT_PROMPT: &str = "Structure the quantitative data in a fact from an article published in {year}.\n\
For every numeric value in the fact, produce one data point with:\n\
- label: a short description of what is measured (2-4 words)\n\
- value: the number exactly as written in the fact, including any scale word, currency or percent sign\n\
- unit: what is counted or measured, or \"\" when implied by the value\n\
- series_key: the year or category that distinguishes this value from the others in the fact, or null\n\
Capture every value individually, even when a sentence reports a change between two values. \
Resolve relative time expressions such as \"this year\" against the publication year, not today.\n\n\
Fact: {content}\n\nAnswer with JSON {\"data_points\": [{\"label\": \"...\", \"value\": \"...\", \"unit\": \"...\", \"series_key\": null}]}.";

pub fn extraction_request(content: &str, published_year: i32) -> StructuredRequest {
    let year = if published_year == UNKNOWN_YEAR { "an unknown year".to_string() } else { published_year.to_string() };
    let prompt = EXTRACT_PROMPT.replace("{year}", &year).replace("{content}", content);
    StructuredRequest::new(
        "extract_data_points",
        "data_points",
        prompt,
        json!({"content": content, "published_year": published_year}),
    )
}

static RELATIVE_YEAR_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:this|last|next|past|previous|current) year\b|\b(?:past|last) decade\b").unwrap());

/// Resolves "this year", "last year", "past decade"... against the
/// publication year. Returns `None` for anything else, or when the year is
/// unknown.
pub fn resolve_relative_time(expr: &str, published_year: i32) -> Option<String> {
    if published_year == UNKNOWN_YEAR {
        return None;
    }
    let e = expr.trim().to_lowercase();
    let words: Vec<&str> = e.split_whitespace().collect();
    match words.as_slice() {
        [_, "decade"] => Some(format!("{}–{}", published_year - 10, published_year)),
        ["last" | "previous", "year"] => Some((published_year - 1).to_string()),
        ["next", "year"] => Some((published_year + 1).to_string()),
        [_, "year"] => Some(published_year.to_string()),
        _ => None,
    }
}

fn normalize_key(key: Option<&str>, published_year: i32) -> Option<String> {
    let key = text::collapse_ws(key?);
    if key.is_empty() {
        return None;
    }
    Some(resolve_relative_time(&key, published_year).unwrap_or(key))
}

const UNIT_HINTS: &[&str] = &[
    "%", "percent", "per cent", "dollars", "dollar", "usd", "euros", "euro", "yen", "km", "kilometers",
    "kilometres", "miles", "kg", "kilograms", "tons", "tonnes", "hours", "minutes", "seconds", "days", "weeks",
    "months", "years",
];

/// Parses a model-reported value, using the unit hint when the value alone
/// carries no unit ("23.1" + "%"). Hints naming what is counted ("children")
/// are not units.
pub fn parse_point_value(value: &str, unit: &str) -> Option<Quantity> {
    let bare = normalize_quantity(value).ok();
    if bare.as_ref().is_some_and(|q| !q.unit.is_empty() && UnitParts::parse(&q.unit).scale.is_none()) {
        return bare;
    }
    let unit = unit.trim();
    let value = value.trim();
    let joined = if matches!(unit, "$" | "€" | "£" | "¥") {
        Some(format!("{unit}{value}"))
    } else if unit.starts_with('%') {
        Some(format!("{value}%"))
    } else if UNIT_HINTS.contains(&unit.to_lowercase().as_str()) {
        Some(format!("{value} {unit}"))
    } else {
        None
    };
    joined.and_then(|j| normalize_quantity(&j).ok()).or(bare)
}

/// Converts a `data_points` document into points; values that do not parse
/// are skipped. Scales are aligned across the fact.
pub fn points_from_doc(doc: &Value, published_year: i32) -> Vec<DataPoint> {
    let mut points: Vec<DataPoint> = doc
        .get("data_points")
        .and_then(Value::as_array)
        .map(|a| a.as_slice())
        .unwrap_or_default()
        .iter()
        .filter_map(|p| {
            let label = text::collapse_ws(p.get("label")?.as_str()?);
            let value = p.get("value")?.as_str()?;
            let unit = p.get("unit").and_then(Value::as_str).unwrap_or_default();
            let Some(q) = parse_point_value(value, unit) else {
                tracing::warn!(value, "data point value does not parse, skipped");
                return None;
            };
            Some(DataPoint {
                label,
                value: q.value,
                unit: q.unit,
                series_key: normalize_key(p.get("series_key").and_then(Value::as_str), published_year),
            })
        })
        .collect();
    align_scales(&mut points);
    points
}

/// Fills `fact.data_points`. Returns `None` (with a warning) when no value
/// in the fact could be parsed.
pub fn extract_data_points(providers: &Providers, fact: &Fact, article: &Article) -> Result<Option<Fact>, ProviderError> {
    let doc = providers.complete_structured(&extraction_request(&fact.content, article.published_year))?;
    let points = points_from_doc(&doc, article.published_year);
    if points.is_empty() {
        tracing::warn!(content = %fact.content, "no parsable data points, fact dropped");
        return Ok(None);
    }
    Ok(Some(Fact { data_points: points, ..fact.clone() }))
}

fn clean_word(w: &str) -> String {
    w.trim_matches(|c: char| !c.is_alphanumeric()).to_string()
}

/// Verbs and adverbs that often sit next to a number but never name it.
const NOT_LABELS: &[&str] = &[
    "make", "makes", "made", "grew", "grow", "grows", "rose", "rise", "rises", "fell", "fall", "falls", "score",
    "scores", "spend", "spends", "spent", "account", "accounts", "named", "said", "say", "says", "cited", "now",
    "typically", "nearly", "almost", "another", "there", "were", "went", "reached", "hit", "total", "totaled",
    "estimated", "estimate", "saves", "save", "saved",
];

fn is_word(w: &str) -> bool {
    !w.is_empty() && w.chars().all(|c| c.is_alphabetic() || c == '-') && !w.starts_with('-') && !w.ends_with('-')
}

fn is_label_word(w: &str) -> bool {
    let l = w.to_lowercase();
    w.len() >= 3 && is_word(w) && !text::is_stopword(&l) && !NOT_LABELS.contains(&l.as_str())
}

/// Label from the words right after the number, else right before it.
pub(crate) fn guess_label(content: &str, start: usize, end: usize) -> String {
    let after: Vec<String> = content[end..].split_whitespace().take(6).map(clean_word).collect();
    let mut picked: Vec<String> = Vec::new();
    for w in &after {
        if !is_word(w) {
            break;
        }
        if is_label_word(w) {
            picked.push(w.clone());
            if picked.len() == 2 {
                break;
            }
        } else if !picked.is_empty() {
            break;
        }
    }
    if picked.is_empty() {
        let before: Vec<String> = content[..start].split_whitespace().rev().take(6).map(clean_word).collect();
        for w in &before {
            if is_label_word(w) {
                picked.insert(0, w.clone());
                if picked.len() == 2 {
                    break;
                }
            } else if !picked.is_empty() {
                break;
            }
        }
    }
    if picked.is_empty() {
        return "Value".to_string();
    }
    picked.iter().map(|w| text::title_case(&w.to_lowercase())).collect::<Vec<_>>().join(" ")
}

pub(crate) fn offline_data_points(p: &Value) -> Value {
    let content = p.get("content").and_then(Value::as_str).unwrap_or_default();
    let year = p.get("published_year").and_then(Value::as_i64).unwrap_or(0) as i32;
    let scanned = scan_quantities(content);
    let Some(first) = scanned.iter().find(|q| !q.is_year) else {
        return json!({"data_points": []});
    };
    let values: Vec<_> = scanned
        .iter()
        .filter(|q| !q.is_year && same_alignment_group(&q.quantity.unit, &first.quantity.unit))
        .collect();
    let mut years: Vec<(usize, String)> = scanned.iter().filter(|q| q.is_year).map(|q| (q.start, q.surface.clone())).collect();
    for m in RELATIVE_YEAR_RE.find_iter(content) {
        if let Some(y) = resolve_relative_time(m.as_str(), year) {
            years.push((m.start(), y));
        }
    }
    years.sort();
    let keys: Vec<Option<String>> = if years.len() == values.len() && values.len() >= 2 {
        years.iter().map(|(_, y)| Some(y.clone())).collect()
    } else if years.len() == 1 {
        vec![Some(years[0].1.clone()); values.len()]
    } else if years.len() == 2 && values.len() == 1 && !years[0].1.contains('–') {
        let (a, b) = (&years[0].1, &years[1].1);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        vec![Some(format!("{lo}–{hi}"))]
    } else {
        vec![None; values.len()]
    };
    let points: Vec<Value> = values
        .iter()
        .zip(keys)
        .map(|(q, key)| {
            json!({
                "label": guess_label(content, q.start, q.end),
                "value": q.surface,
                "unit": "",
                "series_key": key,
            })
        })
        .collect();
    json!({ "data_points": points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rust_decimal::Decimal;

    fn dec(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn growth_sentence_gives_two_keyed_points_on_one_scale() {
        let doc = offline_data_points(&json!({
            "content": "From 1999 to 2020, the number of homeschooled students grew from 850,000 to 2.5 million.",
            "published_year": 2021,
        }));
        let points = points_from_doc(&doc, 2021);
        let got: Vec<_> = points.iter().map(|p| (p.series_key.clone().unwrap(), p.value, p.unit.clone())).collect();
        assert_eq!(
            got,
            vec![("1999".into(), dec("0.85"), "million".into()), ("2020".into(), dec("2.5"), "million".into())]
        );
    }

    #[test]
    fn relative_year_uses_publication_year() {
        let doc = offline_data_points(&json!({"content": "This year 12% more families chose to homeschool.", "published_year": 2024}));
        let points = points_from_doc(&doc, 2024);
        assert_eq!(points[0].series_key.as_deref(), Some("2024"));
        assert_eq!(resolve_relative_time("last year", 2024).as_deref(), Some("2023"));
        assert_eq!(resolve_relative_time("past decade", 2024).as_deref(), Some("2014–2024"));
        assert_eq!(resolve_relative_time("this year", UNKNOWN_YEAR), None);
    }

    #[test]
    fn unit_hint_is_used_only_when_value_has_no_unit() {
        assert_eq!(parse_point_value("23.1", "%").unwrap().unit, "%");
        assert_eq!(parse_point_value("3.7 million", "children").unwrap().unit, "million");
        assert_eq!(parse_point_value("12", "children").unwrap().unit, "");
        assert!(parse_point_value("many", "").is_none());
        assert_eq!(parse_point_value("2.5 billion", "$").unwrap().unit, "$ billion");
    }

    #[test]
    fn labels_come_from_neighbouring_words() {
        let c = "More than 3.7 million children are homeschooled";
        let q = &scan_quantities(c)[0];
        assert_eq!(guess_label(c, q.start, q.end), "Children");
        let c = "The number of homeschoolers in the U.S. is 3.7 million";
        let q = &scan_quantities(c)[0];
        assert_eq!(guess_label(c, q.start, q.end), "Homeschoolers");
        let c = "Homeschoolers now make up about 6% of all school-age children";
        let q = &scan_quantities(c)[0];
        assert_eq!(guess_label(c, q.start, q.end), "School-age Children");
    }
}
