//! Title and highlighted caption of a narrative unit.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use scraper::{Html, Node};
use serde_json::{json, Value};

use crate::extraction::quantity::{format_quantity, magnitude, normalize_quantity, scan_quantities, unit_family, UnitFamily};
use crate::model::DataPoint;
use crate::organization::merge::{parse_time_key, MergedFactSet};
use crate::providers::{ProviderError, Providers, StructuredRequest};
use crate::text;

pub const MAX_TITLE_WORDS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Narrative {
    pub title: String,
    pub caption_html: String,
    pub fallback: bool,
}

pub fn highlight(index: usize, surface: &str) -> String {
    format!("<span class=\"hl hl-{index}\">{}</span>", escape_text(surface))
}

pub fn escape_text(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn escape_attr(s: &str) -> String {
    escape_text(s).replace('"', "&quot;")
}

fn sanitize_node(node: ego_tree::NodeRef<'_, Node>, out: &mut String) {
    for child in node.children() {
        match child.value() {
            Node::Text(t) => out.push_str(&escape_text(t)),
            Node::Element(e) => match e.name() {
                "script" | "style" | "iframe" | "object" | "template" => {}
                "span" => {
                    match e.attr("class").map(str::trim).filter(|c| !c.is_empty()) {
                        Some(class) => out.push_str(&format!("<span class=\"{}\">", escape_attr(&text::collapse_ws(class)))),
                        None => out.push_str("<span>"),
                    }
                    sanitize_node(child, out);
                    out.push_str("</span>");
                }
                tag @ ("b" | "i") => {
                    out.push_str(&format!("<{tag}>"));
                    sanitize_node(child, out);
                    out.push_str(&format!("</{tag}>"));
                }
                _ => sanitize_node(child, out),
            },
            _ => {}
        }
    }
}

/// Keeps `span` (class attribute only), `b` and `i`; other tags are removed
/// but their text is kept, except for script-like elements which are
/// dropped whole.
pub fn sanitize_caption(html: &str) -> String {
    let doc = Html::parse_fragment(html);
    let mut out = String::new();
    sanitize_node(*doc.root_element(), &mut out);
    text::collapse_ws(&out)
}

static SPAN_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"<span class="hl hl-(\d+)">(.*?)</span>"#).unwrap());
static TAG_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>]*>").unwrap());

fn unescape(s: &str) -> String {
    s.replace("&lt;", "<").replace("&gt;", ">").replace("&quot;", "\"").replace("&amp;", "&")
}

/// Highlight spans of a sanitized caption as (color index, visible text).
pub fn highlights(caption_html: &str) -> Vec<(usize, String)> {
    SPAN_RE
        .captures_iter(caption_html)
        .filter_map(|c| Some((c[1].parse().ok()?, unescape(&TAG_RE.replace_all(&c[2], "")))))
        .collect()
}

fn comparable(a: &UnitFamily, b: &UnitFamily) -> bool {
    let countish = |f: &UnitFamily| matches!(f, UnitFamily::CountScale | UnitFamily::Unitless);
    a == b || (countish(a) && countish(b))
}

/// True when `surface` states the value of `point`, in any style.
pub fn surface_matches(surface: &str, point: &DataPoint) -> bool {
    let whole = normalize_quantity(surface).ok();
    let scanned = scan_quantities(surface).into_iter().find(|m| !m.is_year).map(|m| m.quantity);
    [whole, scanned].into_iter().flatten().any(|q| {
        q.magnitude() == magnitude(point.value, &point.unit) && comparable(&unit_family(&q.unit), &unit_family(&point.unit))
    })
}

/// Every point index highlighted exactly once, with the point's value, and
/// no highlight beyond the points.
pub fn check_caption(caption_html: &str, points: &[DataPoint]) -> Result<(), String> {
    let spans = highlights(caption_html);
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, surface) in &spans {
        *seen.entry(*i).or_default() += 1;
        let Some(p) = points.get(*i) else {
            return Err(format!("highlight hl-{i} has no data point"));
        };
        if !surface_matches(surface, p) {
            return Err(format!(
                "highlight hl-{i} reads {surface:?} but the value is {}",
                format_quantity(p.value, &p.unit)
            ));
        }
    }
    for (i, p) in points.iter().enumerate() {
        match seen.get(&i) {
            None => return Err(format!("value {} (hl-{i}) is not highlighted", format_quantity(p.value, &p.unit))),
            Some(n) if *n > 1 => return Err(format!("hl-{i} is highlighted {n} times")),
            _ => {}
        }
    }
    Ok(())
}

pub fn clamp_title(title: &str) -> String {
    let t = text::collapse_ws(&TAG_RE.replace_all(title, ""));
    t.split(' ').take(MAX_TITLE_WORDS).collect::<Vec<_>>().join(" ")
}

/// "Label (key): value." for every point.
pub fn fallback_caption(points: &[DataPoint]) -> String {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let value = highlight(i, &format_quantity(p.value, &p.unit));
            match &p.series_key {
                Some(k) => format!("{} ({}): {value}.", escape_text(&p.label), escape_text(k)),
                None => format!("{}: {value}.", escape_text(&p.label)),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn fallback_title(merged: &MergedFactSet, points: &[DataPoint]) -> String {
    let label = points.first().map(|p| p.label.clone()).unwrap_or_else(|| "Key Figures".into());
    let keys: Vec<i32> = points.iter().filter_map(|p| p.series_key.as_deref().and_then(parse_time_key)).map(|k| k.start()).collect();
    let title = match (keys.iter().min(), keys.iter().max()) {
        (Some(a), Some(b)) if a != b => format!("{label}, {a} to {b}"),
        _ if points.len() > 1 && merged.fact_set_ids.len() > 1 => format!("{label} and More"),
        _ => label,
    };
    clamp_title(&title)
}

const NARRATIVE_PROMPT: &str = "Write a narrative unit for a data story from the content below. Give a title \
of at most eight words that conveys the core message, and a one or two sentence caption in HTML. In the \
caption wrap every listed value in <span class=\"hl hl-N\">...</span>, where N is the index of the value, \
and highlight each value exactly once. Use only span, b and i tags.\n\nContent: {content}\n\nValues:\n{values}\n\n\
Answer with JSON {\"title\": \"...\", \"caption_html\": \"...\"}.";

pub fn narrative_request(merged: &MergedFactSet, points: &[DataPoint]) -> StructuredRequest {
    let listing = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let key = p.series_key.as_deref().map(|k| format!(" ({k})")).unwrap_or_default();
            format!("{i}: {}{key} = {}", p.label, format_quantity(p.value, &p.unit))
        })
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = NARRATIVE_PROMPT.replace("{content}", &merged.merged_content).replace("{values}", &listing);
    let values: Vec<Value> = points
        .iter()
        .enumerate()
        .map(|(i, p)| json!({"index": i, "label": p.label, "value": p.value, "unit": p.unit, "series_key": p.series_key}))
        .collect();
    StructuredRequest::new("narrative", "narrative", prompt, json!({"content": merged.merged_content, "points": values}))
}

/// Title and caption for one merged set. A caption that still misses or
/// misstates a value after the retries is replaced by the template caption.
pub fn generate_narrative(providers: &Providers, merged: &MergedFactSet) -> Result<Narrative, ProviderError> {
    let points = merged.points();
    let req = narrative_request(merged, &points);
    let check = |d: &Value| check_caption(&sanitize_caption(d["caption_html"].as_str().unwrap_or_default()), &points);
    match providers.complete_checked(&req, check) {
        Ok(doc) => {
            let title = clamp_title(doc["title"].as_str().unwrap_or_default());
            Ok(Narrative {
                title: if title.is_empty() { fallback_title(merged, &points) } else { title },
                caption_html: sanitize_caption(doc["caption_html"].as_str().unwrap_or_default()),
                fallback: false,
            })
        }
        Err(ProviderError::SchemaViolationAfterRetries { last_error, .. }) => {
            tracing::warn!(unit = %merged.id, %last_error, "caption rejected, using the template caption");
            Ok(Narrative { title: fallback_title(merged, &points), caption_html: fallback_caption(&points), fallback: true })
        }
        Err(e) => Err(e),
    }
}

pub(crate) fn offline_narrative(p: &Value) -> Value {
    let content = p["content"].as_str().unwrap_or_default();
    let points: Vec<DataPoint> = p["points"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|v| serde_json::from_value(v.clone()).ok())
        .collect();
    let found = scan_quantities(content);
    let mut used = vec![false; found.len()];
    let mut picks: Vec<(usize, usize)> = Vec::new();
    for (i, pt) in points.iter().enumerate() {
        match found.iter().enumerate().position(|(j, m)| !used[j] && !m.is_year && surface_matches(&m.surface, pt)) {
            Some(j) => {
                used[j] = true;
                picks.push((j, i));
            }
            None => break,
        }
    }
    let caption = if picks.len() == points.len() && !points.is_empty() {
        picks.sort();
        let mut out = String::new();
        let mut at = 0;
        for (j, i) in picks {
            let m = &found[j];
            out.push_str(&escape_text(&content[at..m.start]));
            out.push_str(&highlight(i, &m.surface));
            at = m.end;
        }
        out.push_str(&escape_text(&content[at..]));
        out
    } else {
        fallback_caption(&points)
    };
    let label = points.first().map(|p| p.label.clone()).unwrap_or_else(|| "Key Figures".into());
    let keys: Vec<&str> = points.iter().filter_map(|p| p.series_key.as_deref()).collect();
    let title = match (keys.first(), keys.last()) {
        (Some(a), Some(b)) if a != b && keys.iter().all(|k| parse_time_key(k).is_some()) => format!("{label}, {a} to {b}"),
        _ => label,
    };
    json!({"title": clamp_title(&title), "caption_html": caption})
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(v: &str, unit: &str) -> DataPoint {
        DataPoint { label: "Share".into(), value: v.parse().unwrap(), unit: unit.into(), series_key: None }
    }

    #[test]
    fn sanitizer_whitelist() {
        let dirty = r#"<p onclick="x()">A <span class="hl hl-0" style="color:red">23.1%</span> <script>alert(1)</script><b>bold</b> <a href="http://e">link</a> <img src=x onerror=y> 1 &lt; 2</p>"#;
        assert_eq!(sanitize_caption(dirty), r#"A <span class="hl hl-0">23.1%</span> <b>bold</b> link 1 &lt; 2"#);
        let clean = sanitize_caption(dirty);
        assert_eq!(sanitize_caption(&clean), clean);
    }

    #[test]
    fn caption_checks() {
        let pts = [point("23.1", "%"), point("15.6", "%")];
        let good = format!("{} cited special needs while {} cited health.", highlight(0, "23.1%"), highlight(1, "15.6%"));
        assert!(check_caption(&good, &pts).is_ok());
        let missing = format!("{} cited special needs.", highlight(0, "23.1%"));
        assert!(check_caption(&missing, &pts).unwrap_err().contains("15.6%"));
        let wrong = format!("{} and {}", highlight(0, "23.1%"), highlight(1, "16%"));
        assert!(check_caption(&wrong, &pts).is_err());
        let twice = format!("{} {} {}", highlight(0, "23.1%"), highlight(1, "15.6%"), highlight(1, "15.6%"));
        assert!(check_caption(&twice, &pts).is_err());
    }

    #[test]
    fn styles_of_the_same_value_match() {
        let p = point("3.7", "million");
        assert!(surface_matches("3,700,000", &p));
        assert!(surface_matches("3.7M", &p));
        assert!(surface_matches("3.7 million children", &p));
        assert!(!surface_matches("3.7%", &p));
    }

    #[test]
    fn fallback_has_every_value() {
        let mut pts = vec![point("23.1", "%"), point("15.6", "%")];
        pts[1].series_key = Some("health".into());
        let c = fallback_caption(&pts);
        assert_eq!(c, r#"Share: <span class="hl hl-0">23.1%</span>. Share (health): <span class="hl hl-1">15.6%</span>."#);
        assert!(check_caption(&c, &pts).is_ok());
    }

    #[test]
    fn titles_are_clamped() {
        assert_eq!(clamp_title("one two three four five six seven eight nine"), "one two three four five six seven eight");
    }
}
