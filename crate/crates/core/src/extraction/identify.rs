//! Fact identification: sentence-level quantitative statements pulled out
//! of a retained paragraph.

use rust_decimal::Decimal;
use serde_json::{json, Value};

use super::filter::FilteredParagraph;
use super::quantity::{only_years, scan_quantities};
use crate::model::{Fact, FactStatus};
use crate::providers::{ProviderError, Providers, StructuredRequest};
use crate::text;

const IDENTIFY_PROMPT: &str = "You extract data facts from news text. A data fact is a sentence or \
phrase that states at least one quantitative value about its subject. Quantifiable fact types:\n\
- value: a single measured amount (\"3.7 million children are homeschooled\")\n\
- proportion: a share of a whole (\"23% of parents\")\n\
- difference: a change between two values (\"rose by 10%\", \"from 2 to 3 million\")\n\
- trend: values over several time points\n\
- rank or extreme: an ordinal position, maximum or minimum\n\
- association: a relation between two measured quantities\n\
Do not extract subjective opinions, or statements whose only number is a date or that merely \
categorize without measuring anything. Keep each fact faithful to the text: every number must \
appear exactly as written; surrounding words may be minimally rephrased so the fact stands alone. \
A paragraph may contain several facts.\n\n\
Article: \"{title}\"\nParagraph: {paragraph}\n\n\
Think about which statements carry quantities, then answer with JSON \
{\"facts\": [{\"content\": \"...\", \"fact_type\": \"...\"}]}.";

pub fn identify_request(title: &str, paragraph: &str) -> StructuredRequest {
    let prompt = IDENTIFY_PROMPT.replace("{title}", title).replace("{paragraph}", paragraph);
    StructuredRequest::new("identify_facts", "fact_contents", prompt, json!({"paragraph": paragraph}))
}

/// True when every non-year number in `content` also occurs in `source`.
pub fn numbers_verbatim(content: &str, source: &str) -> bool {
    let src: Vec<Decimal> = scan_quantities(source).iter().map(|q| q.quantity.magnitude()).collect();
    scan_quantities(content)
        .iter()
        .filter(|q| !q.is_year)
        .all(|q| src.iter().any(|m| super::quantity::same_magnitude(*m, q.quantity.magnitude())))
}

/// Deterministic post-filter: a fact needs a numeric token that is not a
/// bare year, and its numbers must come from the paragraph.
pub fn keep_fact(content: &str, paragraph: &str) -> bool {
    let qs = scan_quantities(content);
    !qs.is_empty() && !only_years(content) && numbers_verbatim(content, paragraph)
}

/// Facts of one paragraph, in order, with empty ids and data points.
pub fn identify_facts(providers: &Providers, title: &str, paragraph: &FilteredParagraph) -> Result<Vec<Fact>, ProviderError> {
    let doc = providers.complete_structured(&identify_request(title, &paragraph.text))?;
    let contents = doc.get("facts").and_then(Value::as_array).cloned().unwrap_or_default();
    let mut out = Vec::new();
    for c in contents.iter().filter_map(|f| f.get("content").and_then(Value::as_str)) {
        let content = text::collapse_ws(c);
        if !keep_fact(&content, &paragraph.text) {
            tracing::debug!(content, "candidate fact excluded by post-filter");
            continue;
        }
        if out.iter().any(|f: &Fact| f.content == content) {
            continue;
        }
        out.push(Fact {
            id: String::new(),
            article_id: paragraph.article_id.clone(),
            paragraph_index: paragraph.paragraph_index,
            content,
            data_points: Vec::new(),
            relevance: Decimal::ZERO,
            embedding: Vec::new(),
            status: FactStatus::Extracted,
        });
    }
    Ok(out)
}

const OPINION_MARKERS: &[&str] = &["i think", "i believe", "in my opinion", "we believe", "we feel", "i feel"];

pub(crate) fn offline_identify(p: &Value) -> Value {
    let paragraph = p.get("paragraph").and_then(Value::as_str).unwrap_or_default();
    let facts: Vec<Value> = text::split_sentences(paragraph)
        .into_iter()
        .filter(|s| {
            let lower = s.to_lowercase();
            scan_quantities(s).iter().any(|q| !q.is_year) && !OPINION_MARKERS.iter().any(|m| lower.contains(m))
        })
        .map(|s| json!({"content": s, "fact_type": "value"}))
        .collect();
    json!({ "facts": facts })
}
