//! Topic and summary for every cluster: an initial topic, a summary, then
//! one joint pass that makes the topics short and distinct.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::providers::{ProviderError, Providers, StructuredRequest};
use crate::text;

pub const MAX_TOPIC_WORDS: usize = 4;

/// Member fact contents of one cluster, most relevant first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterDraft {
    pub cluster_id: String,
    pub contents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLabel {
    pub cluster_id: String,
    pub topic: String,
    pub summary: String,
}

const TOPIC_PROMPT: &str = "These quantitative facts were grouped together while researching the query \
\"{query}\". Name the theme they share in a short topic of at most four words. Do not repeat the query \
itself.\n\n{facts}\n\nAnswer with JSON {\"topic\": \"...\"}.";

const SUMMARY_PROMPT: &str = "Write a two or three sentence summary of the theme \"{topic}\" using only the \
facts below. Mention the most important numbers.\n\n{facts}\n\nAnswer with JSON {\"summary\": \"...\"}.";

const REFINE_PROMPT: &str = "Below are the themes of one data story, each with a draft topic and a summary. \
Rewrite the topics so that every topic has at most four words, clearly reflects its summary, and differs \
from every other topic.{avoid}\n\n{themes}\n\n\
Answer with JSON {\"topics\": [{\"cluster_id\": \"...\", \"topic\": \"...\"}]}, one entry per theme.";

fn bullet_list(items: &[String]) -> String {
    items.iter().map(|c| format!("- {c}")).collect::<Vec<_>>().join("\n")
}

pub fn topic_request(query: &str, draft: &ClusterDraft) -> StructuredRequest {
    let prompt = TOPIC_PROMPT.replace("{query}", query).replace("{facts}", &bullet_list(&draft.contents));
    StructuredRequest::new("topic_initial", "cluster_topic", prompt, json!({"query": query, "contents": draft.contents}))
}

pub fn summary_request(topic: &str, draft: &ClusterDraft) -> StructuredRequest {
    let prompt = SUMMARY_PROMPT.replace("{topic}", topic).replace("{facts}", &bullet_list(&draft.contents));
    StructuredRequest::new("cluster_summary", "cluster_summary", prompt, json!({"topic": topic, "contents": draft.contents}))
}

pub fn refine_request(labels: &[ClusterLabel], duplicates: &[String]) -> StructuredRequest {
    let themes = labels
        .iter()
        .map(|l| format!("- {}: topic \"{}\"; summary: {}", l.cluster_id, l.topic, l.summary))
        .collect::<Vec<_>>()
        .join("\n");
    let avoid = if duplicates.is_empty() {
        String::new()
    } else {
        format!(" A previous attempt produced these repeated topics: {}.", duplicates.join(", "))
    };
    let prompt = REFINE_PROMPT.replace("{avoid}", &avoid).replace("{themes}", &themes);
    StructuredRequest::new("topic_refine", "topic_refinement", prompt, json!({"clusters": labels, "duplicates": duplicates}))
}

/// At most [`MAX_TOPIC_WORDS`] words, whitespace collapsed.
pub fn clamp_topic(topic: &str, max_words: usize) -> String {
    let t = text::collapse_ws(topic.trim_matches(|c: char| c == '"' || c.is_whitespace()));
    t.split(' ').take(max_words).collect::<Vec<_>>().join(" ")
}

fn topic_key(t: &str) -> String {
    t.to_lowercase()
}

/// Topics that occur more than once, compared case-insensitively.
pub fn duplicate_topics(topics: &[String]) -> Vec<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in topics {
        *counts.entry(topic_key(t)).or_default() += 1;
    }
    let mut seen = BTreeSet::new();
    topics
        .iter()
        .filter(|t| counts[&topic_key(t)] > 1 && seen.insert(topic_key(t)))
        .cloned()
        .collect()
}

/// Later repeats of a topic become "<first three words> (2)", "(3)"...
pub fn disambiguate(topics: &mut [String]) {
    let mut used: BTreeSet<String> = BTreeSet::new();
    for topic in topics.iter_mut() {
        if used.insert(topic_key(topic)) {
            continue;
        }
        let base = clamp_topic(topic, MAX_TOPIC_WORDS - 1);
        let mut n = 2;
        let mut candidate = format!("{base} ({n})");
        while used.contains(&topic_key(&candidate)) {
            n += 1;
            candidate = format!("{base} ({n})");
        }
        used.insert(topic_key(&candidate));
        *topic = candidate;
    }
}

fn check_refinement(doc: &Value, ids: &BTreeSet<&str>) -> Result<(), String> {
    let got: Vec<&str> = doc["topics"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|t| t["cluster_id"].as_str())
        .collect();
    let unique: BTreeSet<&str> = got.iter().copied().collect();
    if unique.len() != got.len() || &unique != ids {
        return Err(format!("expected exactly one topic for each of {ids:?}, got {got:?}"));
    }
    Ok(())
}

fn refine_once(providers: &Providers, labels: &[ClusterLabel], duplicates: &[String]) -> Result<Vec<String>, ProviderError> {
    let ids: BTreeSet<&str> = labels.iter().map(|l| l.cluster_id.as_str()).collect();
    let doc = providers.complete_checked(&refine_request(labels, duplicates), |d| check_refinement(d, &ids))?;
    let by_id: BTreeMap<&str, &str> = doc["topics"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|t| Some((t["cluster_id"].as_str()?, t["topic"].as_str()?)))
        .collect();
    Ok(labels
        .iter()
        .map(|l| {
            let t = clamp_topic(by_id.get(l.cluster_id.as_str()).copied().unwrap_or_default(), MAX_TOPIC_WORDS);
            if t.is_empty() { l.topic.clone() } else { t }
        })
        .collect())
}

/// Labels every cluster. Per-cluster calls run concurrently; the final pass
/// sees all clusters at once.
pub fn label_clusters(providers: &Providers, query: &str, drafts: &[ClusterDraft]) -> Result<Vec<ClusterLabel>, ProviderError> {
    let mut labels: Vec<ClusterLabel> = drafts
        .par_iter()
        .map(|d| {
            let topic = providers.complete_structured(&topic_request(query, d))?;
            let topic = clamp_topic(topic["topic"].as_str().unwrap_or_default(), MAX_TOPIC_WORDS);
            let summary = providers.complete_structured(&summary_request(&topic, d))?;
            Ok(ClusterLabel {
                cluster_id: d.cluster_id.clone(),
                topic,
                summary: text::collapse_ws(summary["summary"].as_str().unwrap_or_default()),
            })
        })
        .collect::<Result<_, ProviderError>>()?;
    if labels.len() > 1 {
        let mut topics = refine_once(providers, &labels, &[])?;
        let dups = duplicate_topics(&topics);
        if !dups.is_empty() {
            tracing::info!(?dups, "refined topics repeat, asking once more");
            topics = refine_once(providers, &labels, &dups)?;
            disambiguate(&mut topics);
        }
        for (l, t) in labels.iter_mut().zip(topics) {
            l.topic = t;
        }
    }
    Ok(labels)
}

pub(crate) fn offline_topic(p: &Value) -> Value {
    let query = text::stems(p["query"].as_str().unwrap_or_default());
    let mut counts: Vec<(String, usize, usize)> = Vec::new();
    let contents = p["contents"].as_array().map(Vec::as_slice).unwrap_or_default();
    for (pos, word) in contents.iter().filter_map(Value::as_str).flat_map(text::content_words).enumerate() {
        let s = text::stem(&word);
        if query.contains(&s) {
            continue;
        }
        match counts.iter_mut().find(|(w, _, _)| text::stem(w) == s) {
            Some(c) => c.1 += 1,
            None => counts.push((word, 1, pos)),
        }
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    let topic = counts.iter().take(2).map(|(w, _, _)| text::title_case(w)).collect::<Vec<_>>().join(" ");
    json!({ "topic": if topic.is_empty() { "Key Figures".to_string() } else { topic } })
}

pub(crate) fn offline_summary(p: &Value) -> Value {
    let contents: Vec<&str> = p["contents"].as_array().into_iter().flatten().filter_map(Value::as_str).collect();
    let topic = p["topic"].as_str().unwrap_or_default().to_lowercase();
    let lead = contents.first().copied().unwrap_or_default();
    let summary = match contents.len() {
        0 => format!("No facts about {topic}."),
        1 => format!("One fact covers {topic}: {lead}"),
        n => format!("{n} facts cover {topic}. The most relevant: {lead}"),
    };
    json!({ "summary": summary })
}

pub(crate) fn offline_refine(p: &Value) -> Value {
    let topics: Vec<Value> = p["clusters"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|c| json!({"cluster_id": c["cluster_id"], "topic": clamp_topic(c["topic"].as_str().unwrap_or_default(), MAX_TOPIC_WORDS)}))
        .collect();
    json!({ "topics": topics })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeats_get_numbered_suffixes() {
        let mut t = vec!["Growth Trends".to_string(), "growth trends".into(), "Reasons".into(), "Growth Trends".into()];
        disambiguate(&mut t);
        assert_eq!(t, vec!["Growth Trends", "growth trends (2)", "Reasons", "Growth Trends (3)"]);
        let mut long = vec!["Very Long Topic Name".to_string(), "Very Long Topic Name".into()];
        disambiguate(&mut long);
        assert_eq!(long[1], "Very Long Topic (2)");
        assert!(long.iter().all(|t| t.split(' ').count() <= MAX_TOPIC_WORDS));
    }

    #[test]
    fn clamp_and_duplicates() {
        assert_eq!(clamp_topic("  \"One two  three four five\" ", 4), "One two three four");
        assert_eq!(duplicate_topics(&["A".into(), "b".into(), "a".into()]), vec!["A".to_string()]);
    }

    #[test]
    fn offline_topic_skips_query_words() {
        let doc = offline_topic(&json!({
            "query": "homeschooling",
            "contents": ["Homeschooled children grew 25% as parents cited safety", "Parents cited safety in 80% of cases"],
        }));
        assert_eq!(doc["topic"], "Parents Cited");
    }
}
