//! Structural checks over a finished story, written against the wire model
//! only. Each returns human-readable problems; empty means the rule holds.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use factstory_core::extraction::quantity::normalize_quantity;
use factstory_core::model::{to_f64, DataPoint, StoryDocument};
use factstory_core::organization::merge::check_merge_constraints;
use factstory_core::validation::unit_merged_set;
use regex::Regex;

static NUMBER_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)[$€£¥]?\d[\d,]*(?:\.\d+)?(?:\s?(?:thousand|million|billion|trillion)\b|(?:bn|mn|[kmbt])\b)?\s?%?").unwrap()
});

/// Every numeric token in `text`, as value × scale.
pub fn token_magnitudes(text: &str) -> Vec<f64> {
    NUMBER_RE
        .find_iter(text)
        .filter_map(|m| {
            let token = m.as_str().trim().trim_end_matches(',');
            normalize_quantity(token).ok().map(|q| to_f64(q.magnitude()))
        })
        .collect()
}

fn point_magnitude(p: &DataPoint) -> Option<f64> {
    let scale = p
        .unit
        .split_whitespace()
        .find_map(|w| match w {
            "thousand" => Some(1e3),
            "million" => Some(1e6),
            "billion" => Some(1e9),
            "trillion" => Some(1e12),
            _ => None,
        })
        .unwrap_or(1.0);
    Some(to_f64(p.value) * scale)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

pub fn partition_problems(doc: &StoryDocument) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen_facts = BTreeSet::new();
    for c in &doc.clusters {
        let listed: Vec<&str> = c.fact_ids.iter().map(String::as_str).collect();
        let embedded: Vec<&str> = c.facts.iter().map(|f| f.id.as_str()).collect();
        if listed != embedded {
            out.push(format!("{}: fact_ids {listed:?} differ from embedded facts {embedded:?}", c.id));
        }
        for id in &listed {
            if !seen_facts.insert(id.to_string()) {
                out.push(format!("fact {id} belongs to more than one cluster"));
            }
        }
        let mut in_sets = BTreeSet::new();
        for s in &c.fact_sets {
            if s.cluster_id != c.id {
                out.push(format!("{} names cluster {} but sits in {}", s.id, s.cluster_id, c.id));
            }
            for f in &s.fact_ids {
                if !in_sets.insert(f.as_str()) {
                    out.push(format!("fact {f} is in two fact sets of {}", c.id));
                }
            }
        }
        if in_sets != listed.iter().copied().collect::<BTreeSet<_>>() {
            out.push(format!("{}: fact sets do not cover exactly the cluster's facts", c.id));
        }
        let set_ids: BTreeSet<&str> = c.fact_sets.iter().map(|s| s.id.as_str()).collect();
        let mut in_units = BTreeSet::new();
        for u in doc.units.iter().filter(|u| u.cluster_id == c.id) {
            for s in &u.fact_set_ids {
                if !in_units.insert(s.as_str()) {
                    out.push(format!("fact set {s} is in two units"));
                }
            }
        }
        if in_units != set_ids {
            out.push(format!("{}: units cover {in_units:?}, fact sets are {set_ids:?}", c.id));
        }
    }
    if seen_facts.len() != doc.stats.total_facts {
        out.push(format!("stats.total_facts {} but {} facts", doc.stats.total_facts, seen_facts.len()));
    }
    let cluster_ids: BTreeSet<&str> = doc.clusters.iter().map(|c| c.id.as_str()).collect();
    for u in &doc.units {
        if !cluster_ids.contains(u.cluster_id.as_str()) {
            out.push(format!("unit {} names unknown cluster {}", u.id, u.cluster_id));
        }
    }
    out
}

pub fn traceability_problems(doc: &StoryDocument) -> Vec<String> {
    let paragraphs: BTreeMap<&str, &Vec<String>> = doc.articles.iter().map(|a| (a.id.as_str(), &a.paragraphs)).collect();
    let mut out = Vec::new();
    for f in doc.clusters.iter().flat_map(|c| &c.facts) {
        let Some(source) = paragraphs.get(f.article_id.as_str()).and_then(|p| p.get(f.paragraph_index)) else {
            out.push(format!("{}: source paragraph {}#{} missing", f.id, f.article_id, f.paragraph_index));
            continue;
        };
        let tokens = token_magnitudes(source);
        for p in &f.data_points {
            match point_magnitude(p) {
                Some(m) if tokens.iter().any(|t| close(*t, m)) => {}
                _ => out.push(format!("{}: {} {} not found in {source:?}", f.id, p.value, p.unit)),
            }
        }
    }
    out
}

pub fn merge_problems(doc: &StoryDocument) -> Vec<String> {
    (0..doc.units.len())
        .flat_map(|i| match unit_merged_set(doc, i) {
            None => vec![format!("unit {} does not resolve to its fact sets", doc.units[i].id)],
            Some(m) => check_merge_constraints(&m).into_iter().map(|v| format!("unit {}: {} {}", m.id, v.kind, v.detail)).collect(),
        })
        .collect()
}

pub fn ordering_problems(doc: &StoryDocument) -> Vec<String> {
    doc.clusters
        .windows(2)
        .filter(|w| w[0].relevance < w[1].relevance)
        .map(|w| format!("{} ({}) before {} ({})", w[0].id, w[0].relevance, w[1].id, w[1].relevance))
        .collect()
}

pub fn link_problems(doc: &StoryDocument) -> Vec<String> {
    let sources: BTreeMap<&str, BTreeSet<&str>> = doc
        .clusters
        .iter()
        .map(|c| (c.id.as_str(), c.facts.iter().map(|f| f.article_id.as_str()).collect()))
        .collect();
    let mut expected = BTreeMap::new();
    let ids: Vec<&str> = doc.clusters.iter().map(|c| c.id.as_str()).collect();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            let shared = sources[a].intersection(&sources[b]).count();
            if shared > 0 {
                expected.insert(BTreeSet::from([*a, *b]), shared);
            }
        }
    }
    let mut out = Vec::new();
    let mut actual = BTreeMap::new();
    for l in &doc.links {
        let pair = BTreeSet::from([l.cluster_a.as_str(), l.cluster_b.as_str()]);
        if l.weight != l.shared_article_ids.len() {
            out.push(format!("link {pair:?}: weight {} but {} shared ids", l.weight, l.shared_article_ids.len()));
        }
        actual.insert(pair, l.weight);
    }
    if actual != expected {
        out.push(format!("links {actual:?} differ from recomputed {expected:?}"));
    }
    out
}

/// All of the above.
pub fn all_problems(doc: &StoryDocument) -> Vec<String> {
    [partition_problems(doc), traceability_problems(doc), merge_problems(doc), ordering_problems(doc), link_problems(doc)].concat()
}
