//! Invariant checks over a finished Story Document. Violations are data:
//! each names where it was found, which rule failed and the offending value.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::extraction::quantity::has_numeric_token;
use crate::extraction::validate::traceable;
use crate::model::{decimal_close, id_order, DataPoint, Fact, StoryDocument, SummaryStats, DEFAULT_VISIBLE_CLUSTERS};
use crate::organization::merge::{check_merge_constraints, MergeMember, MergedFactSet};
use crate::organization::relevance::{by_relevance, mean_relevance};
use crate::organization::fact_set_view;
use crate::retrieval::normalize_url;
use crate::storygen::chart::chart_allowed;
use crate::storygen::narrative::{check_caption, highlights, sanitize_caption, MAX_TITLE_WORDS};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub rule: String,
    pub value: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.path, self.rule, self.value)
    }
}

struct Report(Vec<Violation>);

impl Report {
    fn add(&mut self, path: impl Into<String>, rule: &str, value: impl fmt::Display) {
        self.0.push(Violation { path: path.into(), rule: rule.to_string(), value: value.to_string() });
    }

    fn check(&mut self, ok: bool, path: impl Into<String>, rule: &str, value: impl fmt::Display) {
        if !ok {
            self.add(path, rule, value);
        }
    }
}

fn ids<'a>(it: impl IntoIterator<Item = &'a String>) -> String {
    it.into_iter().map(String::as_str).collect::<Vec<_>>().join(",")
}

/// Stats recomputed from the clusters, in document order.
pub fn recompute_stats(doc: &StoryDocument) -> SummaryStats {
    let shown = &doc.clusters[..doc.clusters.len().min(DEFAULT_VISIBLE_CLUSTERS)];
    SummaryStats {
        total_articles: doc.articles.len(),
        total_facts: doc.clusters.iter().map(|c| c.facts.len()).sum(),
        total_clusters: doc.clusters.len(),
        shown_clusters_default: shown.len(),
        shown_facts_default: shown.iter().map(|c| c.facts.len()).sum(),
        contributing_articles_default: shown
            .iter()
            .flat_map(|c| c.facts.iter().map(|f| f.article_id.as_str()))
            .collect::<BTreeSet<_>>()
            .len(),
    }
}

/// The merged fact set a unit was built from: the canonical fact of each
/// of its fact sets, in unit order.
pub fn unit_merged_set(doc: &StoryDocument, unit_index: usize) -> Option<MergedFactSet> {
    let unit = doc.units.get(unit_index)?;
    let cluster = doc.clusters.iter().find(|c| c.id == unit.cluster_id)?;
    let members = unit
        .fact_set_ids
        .iter()
        .map(|id| {
            let set = cluster.fact_sets.iter().find(|s| &s.id == id)?;
            let view = fact_set_view(set, &cluster.facts);
            Some(MergeMember { fact_set_id: view.id, data_points: view.data_points })
        })
        .collect::<Option<Vec<_>>>()?;
    Some(MergedFactSet::new(unit.id.clone(), &unit.cluster_id, members, String::new()))
}

/// Checks every document invariant. An empty result means the document is
/// well-formed.
pub fn validate_story_document(doc: &StoryDocument) -> Vec<Violation> {
    let mut r = Report(Vec::new());
    r.check(!doc.story_id.trim().is_empty(), "story_id", "non-empty", "\"\"");
    r.check(!doc.query.trim().is_empty(), "query", "non-empty", "\"\"");

    let mut article_ids = BTreeSet::new();
    let mut urls: BTreeMap<String, String> = BTreeMap::new();
    for (i, a) in doc.articles.iter().enumerate() {
        let path = format!("articles[{i}]");
        r.check(article_ids.insert(a.id.as_str()), format!("{path}.id"), "duplicate id", &a.id);
        r.check(!a.url.trim().is_empty(), format!("{path}.url"), "non-empty", "\"\"");
        if let Some(prev) = urls.insert(normalize_url(&a.url), a.id.clone()) {
            r.add(format!("{path}.url"), "duplicate url", format!("{} duplicates {prev}", a.url));
        }
    }

    let mut cluster_ids = BTreeSet::new();
    let mut fact_owner: BTreeMap<&str, &str> = BTreeMap::new();
    let mut fact_by_id: BTreeMap<&str, &Fact> = BTreeMap::new();
    let mut set_owner: BTreeMap<&str, &str> = BTreeMap::new();
    for (ci, c) in doc.clusters.iter().enumerate() {
        let path = format!("clusters[{ci}]");
        r.check(cluster_ids.insert(c.id.as_str()), format!("{path}.id"), "duplicate id", &c.id);
        r.check(!c.fact_ids.is_empty(), format!("{path}.fact_ids"), "non-empty", "[]");
        let listed: Vec<&String> = c.facts.iter().map(|f| &f.id).collect();
        r.check(
            c.fact_ids.iter().collect::<Vec<_>>() == listed,
            format!("{path}.facts"),
            "cluster facts match fact_ids",
            ids(listed.iter().copied()),
        );
        for (fi, f) in c.facts.iter().enumerate() {
            let fpath = format!("{path}.facts[{fi}]");
            if let Some(prev) = fact_owner.insert(&f.id, &c.id) {
                r.add(format!("{fpath}.id"), "fact partition", format!("{} also in {prev}", f.id));
            }
            fact_by_id.insert(&f.id, f);
            r.check(article_ids.contains(f.article_id.as_str()), format!("{fpath}.article_id"), "unresolved reference", &f.article_id);
            r.check(has_numeric_token(&f.content), format!("{fpath}.content"), "numeric content", &f.content);
            r.check(!f.data_points.is_empty(), format!("{fpath}.data_points"), "non-empty", "[]");
            r.check(
                f.relevance >= -Decimal::ONE && f.relevance <= Decimal::ONE,
                format!("{fpath}.relevance"),
                "relevance range",
                f.relevance,
            );
        }
        if c.facts.is_empty() {
            continue;
        }
        let rels: Vec<Decimal> = c.facts.iter().map(|f| f.relevance).collect();
        let mean = mean_relevance(&rels);
        r.check(decimal_close(mean, c.relevance), format!("{path}.relevance"), "cluster relevance", format!("{} != mean {mean}", c.relevance));
        let refs: Vec<&Fact> = c.facts.iter().collect();
        let sorted = by_relevance(&refs);
        r.check(
            c.representative_fact_id == sorted[0].id,
            format!("{path}.representative_fact_id"),
            "representative",
            &c.representative_fact_id,
        );
        let expected_top: Vec<&String> = sorted.iter().take(3).map(|f| &f.id).collect();
        r.check(
            c.top_fact_ids.iter().collect::<Vec<_>>() == expected_top,
            format!("{path}.top_fact_ids"),
            "top facts",
            ids(&c.top_fact_ids),
        );
        let mut covered: Vec<&str> = Vec::new();
        for (si, s) in c.fact_sets.iter().enumerate() {
            let spath = format!("{path}.fact_sets[{si}]");
            if set_owner.insert(&s.id, &c.id).is_some() {
                r.add(format!("{spath}.id"), "duplicate id", &s.id);
            }
            r.check(s.cluster_id == c.id, format!("{spath}.cluster_id"), "fact set cluster", &s.cluster_id);
            r.check(!s.fact_ids.is_empty(), format!("{spath}.fact_ids"), "non-empty", "[]");
            for id in &s.fact_ids {
                r.check(c.fact_ids.contains(id), format!("{spath}.fact_ids"), "unresolved reference", id);
                covered.push(id);
            }
        }
        let mut covered_sorted = covered.clone();
        covered_sorted.sort_by(|a, b| id_order(a, b));
        let mut members: Vec<&str> = c.fact_ids.iter().map(String::as_str).collect();
        members.sort_by(|a, b| id_order(a, b));
        r.check(covered_sorted == members, format!("{path}.fact_sets"), "fact set partition", covered.join(","));
    }
    for (i, w) in doc.clusters.windows(2).enumerate() {
        r.check(
            w[0].relevance >= w[1].relevance,
            format!("clusters[{}]", i + 1),
            "cluster ordering",
            format!("{} after {}", w[1].relevance, w[0].relevance),
        );
    }

    let mut unit_ids = BTreeSet::new();
    let mut set_unit: BTreeMap<&str, &str> = BTreeMap::new();
    let cluster_pos: BTreeMap<&str, usize> = doc.clusters.iter().enumerate().map(|(i, c)| (c.id.as_str(), i)).collect();
    let mut last: Option<(usize, usize)> = None;
    for (ui, u) in doc.units.iter().enumerate() {
        let path = format!("units[{ui}]");
        r.check(unit_ids.insert(u.id.as_str()), format!("{path}.id"), "duplicate id", &u.id);
        let Some(&cpos) = cluster_pos.get(u.cluster_id.as_str()) else {
            r.add(format!("{path}.cluster_id"), "unresolved reference", &u.cluster_id);
            continue;
        };
        let expected = match last {
            Some((lc, lo)) if lc == cpos => lo + 1,
            Some((lc, _)) if lc > cpos => usize::MAX,
            _ => 0,
        };
        r.check(u.order_in_cluster == expected, format!("{path}.order_in_cluster"), "unit ordering", u.order_in_cluster);
        last = Some((cpos, u.order_in_cluster));
        r.check(!u.fact_set_ids.is_empty(), format!("{path}.fact_set_ids"), "non-empty", "[]");
        let mut sources = BTreeSet::new();
        let mut resolved = true;
        for id in &u.fact_set_ids {
            match set_owner.get(id.as_str()) {
                Some(owner) if *owner == u.cluster_id => {
                    if let Some(prev) = set_unit.insert(id, &u.id) {
                        r.add(format!("{path}.fact_set_ids"), "merged set partition", format!("{id} also in {prev}"));
                    }
                    let set = doc.clusters[cpos].fact_sets.iter().find(|s| &s.id == id).unwrap();
                    for fid in &set.fact_ids {
                        if let Some(f) = fact_by_id.get(fid.as_str()) {
                            sources.insert(f.article_id.clone());
                        }
                    }
                }
                Some(owner) => {
                    r.add(format!("{path}.fact_set_ids"), "fact set cluster", format!("{id} belongs to {owner}"));
                    resolved = false;
                }
                None => {
                    r.add(format!("{path}.fact_set_ids"), "unresolved reference", id);
                    resolved = false;
                }
            }
        }
        let mut listed = u.source_article_ids.clone();
        listed.sort_by(|a, b| id_order(a, b));
        let mut expected_sources: Vec<String> = sources.into_iter().collect();
        expected_sources.sort_by(|a, b| id_order(a, b));
        if resolved {
            r.check(listed == expected_sources, format!("{path}.source_article_ids"), "source articles", ids(&u.source_article_ids));
        }
        r.check(text_words(&u.title) <= MAX_TITLE_WORDS, format!("{path}.title"), "title length", &u.title);
        r.check(sanitize_caption(&u.caption_html) == u.caption_html, format!("{path}.caption_html"), "caption sanitized", &u.caption_html);
        let colors: BTreeSet<usize> = u.chart.series.iter().map(|s| s.color_index).collect();
        r.check(colors.len() == u.chart.series.len(), format!("{path}.chart.series"), "distinct colors", colors.len());
        let mut caption_colors: Vec<usize> = highlights(&u.caption_html).into_iter().map(|(i, _)| i).collect();
        caption_colors.sort_unstable();
        let mut chart_colors: Vec<usize> = u.chart.series.iter().map(|s| s.color_index).collect();
        chart_colors.sort_unstable();
        r.check(caption_colors == chart_colors, format!("{path}.caption_html"), "highlight colors", format!("{caption_colors:?} vs {chart_colors:?}"));
        let points: Vec<DataPoint> = u
            .chart
            .series
            .iter()
            .map(|s| DataPoint { label: s.label.clone(), value: s.value, unit: s.unit.clone(), series_key: s.series_key.clone() })
            .collect();
        r.check(chart_allowed(u.chart.kind, &points), format!("{path}.chart.kind"), "chart guard", u.chart.kind);
        if resolved {
            if let Some(merged) = unit_merged_set(doc, ui) {
                let expected_points = merged.points();
                r.check(expected_points == points, format!("{path}.chart.series"), "series match data points", points.len());
                if let Err(e) = check_caption(&u.caption_html, &expected_points) {
                    r.add(format!("{path}.caption_html"), "caption highlight", e);
                }
                for v in check_merge_constraints(&merged) {
                    r.add(format!("{path}.fact_set_ids"), "merge constraints", format!("{}: {}", v.kind, v.detail));
                }
            }
        }
    }
    for (sid, cid) in &set_owner {
        r.check(set_unit.contains_key(sid), format!("clusters[{}].fact_sets", cluster_pos[cid]), "merged set partition", format!("{sid} is in no unit"));
    }

    let mut seen_pairs = BTreeSet::new();
    for (li, l) in doc.links.iter().enumerate() {
        let path = format!("links[{li}]");
        let (Some(a), Some(b)) = (doc.clusters.iter().find(|c| c.id == l.cluster_a), doc.clusters.iter().find(|c| c.id == l.cluster_b)) else {
            r.add(path, "unresolved reference", format!("{}-{}", l.cluster_a, l.cluster_b));
            continue;
        };
        r.check(a.id != b.id, &path, "self link", &a.id);
        let key = if id_order(&a.id, &b.id).is_le() { (a.id.clone(), b.id.clone()) } else { (b.id.clone(), a.id.clone()) };
        r.check(seen_pairs.insert(key), &path, "duplicate link", format!("{}-{}", a.id, b.id));
        let shared = shared_articles(a, b);
        let mut listed = l.shared_article_ids.clone();
        listed.sort_by(|x, y| id_order(x, y));
        r.check(listed == shared, format!("{path}.shared_article_ids"), "link intersection", ids(&l.shared_article_ids));
        r.check(l.weight == l.shared_article_ids.len() && l.weight >= 1, format!("{path}.weight"), "link weight", l.weight);
    }
    for (i, a) in doc.clusters.iter().enumerate() {
        for b in &doc.clusters[i + 1..] {
            let key = if id_order(&a.id, &b.id).is_le() { (a.id.clone(), b.id.clone()) } else { (b.id.clone(), a.id.clone()) };
            if !shared_articles(a, b).is_empty() && !seen_pairs.contains(&key) {
                r.add("links", "missing link", format!("{}-{}", a.id, b.id));
            }
        }
    }

    let stats = recompute_stats(doc);
    r.check(doc.stats == stats, "stats", "summary stats", format!("{:?} != recomputed {stats:?}", doc.stats));
    r.0
}

fn text_words(s: &str) -> usize {
    s.split_whitespace().count()
}

fn shared_articles(a: &crate::model::Cluster, b: &crate::model::Cluster) -> Vec<String> {
    let sa: BTreeSet<&str> = a.facts.iter().map(|f| f.article_id.as_str()).collect();
    let sb: BTreeSet<&str> = b.facts.iter().map(|f| f.article_id.as_str()).collect();
    let mut shared: Vec<String> = sa.intersection(&sb).map(|s| s.to_string()).collect();
    shared.sort_by(|x, y| id_order(x, y));
    shared
}

/// Data points whose value does not occur in the fact's source paragraph.
pub fn untraceable_points(doc: &StoryDocument) -> Vec<Violation> {
    let mut r = Report(Vec::new());
    for (ci, c) in doc.clusters.iter().enumerate() {
        for (fi, f) in c.facts.iter().enumerate() {
            let source = doc.article(&f.article_id).and_then(|a| a.paragraphs.get(f.paragraph_index));
            for (pi, p) in f.data_points.iter().enumerate() {
                if !source.is_some_and(|s| traceable(p, s)) {
                    r.add(format!("clusters[{ci}].facts[{fi}].data_points[{pi}]"), "traceability", p.value);
                }
            }
        }
    }
    r.0
}
