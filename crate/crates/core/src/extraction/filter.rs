//! Two-pass paragraph filtering: boilerplate judged against the article
//! title, then relevance to the user's query.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::model::Article;
use crate::providers::{ProviderError, Providers, StructuredRequest};
use crate::text;

/// Paragraphs sent per LLM call.
pub const FILTER_BATCH: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilteredParagraph {
    pub article_id: String,
    pub paragraph_index: usize,
    pub text: String,
    pub title_pass: bool,
    pub query_pass: bool,
}

impl FilteredParagraph {
    pub fn retained(&self) -> bool {
        self.title_pass && self.query_pass
    }
}

const BOILERPLATE_PROMPT: &str = "The numbered paragraphs below were scraped from a web page titled \"{title}\".\n\
Decide which paragraphs belong to the body of the article. Drop navigation and menu items, headers, \
footers, advertisements, cookie or subscription notices, share buttons, author bios and reference lists.\n\n\
{paragraphs}\n\nAnswer with JSON {\"keep\": [indices of body paragraphs]}.";

const RELEVANCE_PROMPT: &str = "A user is researching the question: \"{query}\".\n\
The numbered paragraphs below come from the article \"{title}\". Keep only the paragraphs that are \
relevant to the question and could contain facts worth reporting about it.\n\n\
{paragraphs}\n\nAnswer with JSON {\"keep\": [indices of relevant paragraphs]}.";

fn numbered(batch: &[(usize, &str)]) -> String {
    batch.iter().map(|(i, t)| format!("[{i}] {t}")).collect::<Vec<_>>().join("\n")
}

fn payload(batch: &[(usize, &str)], title: &str, query: &str) -> Value {
    json!({
        "title": title,
        "query": query,
        "paragraphs": batch.iter().map(|(i, t)| json!({"index": i, "text": t})).collect::<Vec<_>>(),
    })
}

pub fn boilerplate_request(title: &str, batch: &[(usize, &str)]) -> StructuredRequest {
    let prompt = BOILERPLATE_PROMPT.replace("{title}", title).replace("{paragraphs}", &numbered(batch));
    StructuredRequest::new("filter_boilerplate", "paragraph_selection", prompt, payload(batch, title, ""))
}

pub fn relevance_request(query: &str, title: &str, batch: &[(usize, &str)]) -> StructuredRequest {
    let prompt = RELEVANCE_PROMPT
        .replace("{query}", query)
        .replace("{title}", title)
        .replace("{paragraphs}", &numbered(batch));
    StructuredRequest::new("filter_relevance", "paragraph_selection", prompt, payload(batch, title, query))
}

fn run_pass<F>(providers: &Providers, items: &[(usize, &str)], make: F) -> Result<BTreeSet<usize>, ProviderError>
where
    F: Fn(&[(usize, &str)]) -> StructuredRequest + Sync,
{
    let batches: Vec<&[(usize, &str)]> = items.chunks(FILTER_BATCH).collect();
    let kept: Vec<BTreeSet<usize>> = batches
        .par_iter()
        .map(|batch| {
            let allowed: BTreeSet<usize> = batch.iter().map(|(i, _)| *i).collect();
            let doc = providers.complete_checked(&make(batch), |doc| {
                match selection(doc).into_iter().find(|i| !allowed.contains(i)) {
                    Some(bad) => Err(format!("index {bad} is not one of the listed paragraphs")),
                    None => Ok(()),
                }
            })?;
            Ok(selection(&doc))
        })
        .collect::<Result<_, ProviderError>>()?;
    Ok(kept.into_iter().flatten().collect())
}

fn selection(doc: &Value) -> BTreeSet<usize> {
    doc.get("keep")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_u64).map(|i| i as usize).collect())
        .unwrap_or_default()
}

/// Flags every paragraph of `article`; callers keep the
/// [`FilteredParagraph::retained`] ones. Paragraphs dropped by the first
/// pass are not sent to the second.
pub fn filter_paragraphs(
    providers: &Providers,
    article: &Article,
    query: &str,
) -> Result<Vec<FilteredParagraph>, ProviderError> {
    let items: Vec<(usize, &str)> = article.paragraphs.iter().map(String::as_str).enumerate().collect();
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let pass1 = run_pass(providers, &items, |b| boilerplate_request(&article.title, b))?;
    let survivors: Vec<(usize, &str)> = items.iter().copied().filter(|(i, _)| pass1.contains(i)).collect();
    let pass2 = if survivors.is_empty() {
        BTreeSet::new()
    } else {
        run_pass(providers, &survivors, |b| relevance_request(query, &article.title, b))?
    };
    Ok(items
        .iter()
        .map(|&(i, t)| FilteredParagraph {
            article_id: article.id.clone(),
            paragraph_index: i,
            text: t.to_string(),
            title_pass: pass1.contains(&i),
            query_pass: pass1.contains(&i) && pass2.contains(&i),
        })
        .collect())
}

const BOILERPLATE_MARKERS: &[&str] = &[
    "cookie", "subscribe", "newsletter", "advertisement", "sponsored", "sign up", "all rights reserved",
    "privacy policy", "terms of use", "click here", "read more", "share this", "follow us", "©", "copyright",
    "related articles", "log in", "skip to", "image credit", "photo credit", "references", "sources:",
];

fn paragraphs_of(p: &Value) -> Vec<(u64, String)> {
    p.get("paragraphs")
        .and_then(Value::as_array)
        .map(|a| {
            a.iter()
                .filter_map(|x| Some((x.get("index")?.as_u64()?, x.get("text")?.as_str()?.to_string())))
                .collect()
        })
        .unwrap_or_default()
}

pub(crate) fn offline_boilerplate(p: &Value) -> Value {
    let title = p.get("title").and_then(Value::as_str).unwrap_or_default();
    let keep: Vec<u64> = paragraphs_of(p)
        .into_iter()
        .filter(|(_, t)| {
            let lower = t.to_lowercase();
            text::word_count(t) >= 6
                && !BOILERPLATE_MARKERS.iter().any(|m| lower.contains(m))
                && text::collapse_ws(t) != text::collapse_ws(title)
        })
        .map(|(i, _)| i)
        .collect();
    json!({ "keep": keep })
}

pub(crate) fn offline_relevance(p: &Value) -> Value {
    let query = p.get("query").and_then(Value::as_str).unwrap_or_default();
    let topic = text::stems(query);
    let keep: Vec<u64> = paragraphs_of(p)
        .into_iter()
        .filter(|(_, t)| !text::stems(t).is_disjoint(&topic))
        .map(|(i, _)| i)
        .collect();
    json!({ "keep": keep })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offline_rules() {
        let p = json!({"title": "Homeschooling Statistics", "query": "Is homeschooling preferred by people?", "paragraphs": [
            {"index": 0, "text": "Homeschooling Statistics"},
            {"index": 1, "text": "About 3.7 million children were homeschooled during the 2021 school year."},
            {"index": 2, "text": "Subscribe to our newsletter for weekly updates on education news."},
            {"index": 3, "text": "This site uses cookies to improve your browsing experience on every page."},
        ]});
        assert_eq!(offline_boilerplate(&p), json!({"keep": [1]}));
        assert_eq!(offline_relevance(&p), json!({"keep": [0, 1]}));
    }
}
