//! Thematic organization of validated facts: relevance scores, mixture-model
//! clusters, topic labels, fact sets, merged fact sets and filled-in context.

pub mod entities;
pub mod factsets;
pub mod gmm;
pub mod labels;
pub mod merge;
pub mod relevance;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{id_order, real, Article, Cluster, Fact, FactSet, FactStatus, IdSeq};
use crate::providers::{ProviderError, Providers};
pub use entities::{Entity, EntityFlag, EntityKind};
pub use gmm::{assign_clusters, fit_gmm, GmmModel};
pub use merge::{check_merge_constraints, ConstraintViolation, MergedFactSet};

/// Upper bound on facts passed to clustering; the most relevant are kept.
pub const MAX_FACTS: usize = 300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrganizationError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone)]
pub struct OrganizeOptions {
    pub seed: u64,
    pub k_max: usize,
    pub max_facts: usize,
}

impl Default for OrganizeOptions {
    fn default() -> Self {
        Self { seed: 42, k_max: gmm::K_MAX, max_facts: MAX_FACTS }
    }
}

/// Per-cluster record of what clustering and merging decided.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ClusterTrace {
    pub cluster_id: String,
    pub fact_ids: Vec<String>,
    pub responsibilities: Vec<Vec<f64>>,
    pub merge_proposals_rejected: Vec<merge::RejectedMerge>,
    pub entity_flags: Vec<EntityFlag>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OrganizationTrace {
    pub bic: Vec<gmm::BicRow>,
    pub chosen_k: usize,
    pub dropped_over_cap: usize,
    pub clusters: Vec<ClusterTrace>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Organization {
    /// In order of first member fact; ids `c1..`.
    pub clusters: Vec<Cluster>,
    pub merged: Vec<MergedFactSet>,
    pub trace: OrganizationTrace,
}

/// Sets `relevance` and `embedding` on every fact.
pub fn score_facts(providers: &Providers, facts: &mut [Fact], query: &str) -> Result<(), OrganizationError> {
    if facts.is_empty() {
        return Ok(());
    }
    let mut texts: Vec<String> = facts.iter().map(|f| f.content.clone()).collect();
    texts.push(query.to_string());
    let mut vectors = providers.embedder.embed_texts(&texts)?;
    let q = vectors.pop().ok_or_else(|| OrganizationError::DegenerateInput("embedder returned nothing".into()))?;
    if vectors.len() != facts.len() {
        return Err(OrganizationError::DegenerateInput("embedder returned the wrong number of vectors".into()));
    }
    for (f, v) in facts.iter_mut().zip(vectors) {
        f.relevance = real(relevance::compute_relevance(&v, &q)?);
        f.embedding = v;
    }
    Ok(())
}

/// Keeps the `max` most relevant facts (ties to the lower id), preserving id
/// order. Returns how many were dropped.
pub fn cap_facts(facts: &mut Vec<Fact>, max: usize) -> usize {
    if facts.len() <= max {
        return 0;
    }
    let refs: Vec<&Fact> = facts.iter().collect();
    let keep: std::collections::BTreeSet<String> =
        relevance::by_relevance(&refs).into_iter().take(max).map(|f| f.id.clone()).collect();
    let before = facts.len();
    facts.retain(|f| keep.contains(&f.id));
    before - facts.len()
}

struct ClusterWork {
    cluster: Cluster,
    merged: Vec<MergedFactSet>,
    trace: ClusterTrace,
}

/// Runs the whole organization stage. Facts must carry final ids; they are
/// scored here. Clusters are returned in order of first member fact.
pub fn organize(
    providers: &Providers,
    query: &str,
    mut facts: Vec<Fact>,
    articles: &[Article],
    opts: &OrganizeOptions,
) -> Result<Organization, OrganizationError> {
    let mut trace = OrganizationTrace::default();
    if facts.is_empty() {
        return Ok(Organization::default());
    }
    score_facts(providers, &mut facts, query)?;
    trace.dropped_over_cap = cap_facts(&mut facts, opts.max_facts);
    facts.sort_by(|a, b| id_order(&a.id, &b.id));

    let vectors: Vec<Vec<f64>> = facts.iter().map(|f| f.embedding.clone()).collect();
    let fit = gmm::fit_gmm(&vectors, opts.k_max, opts.seed)?;
    let assignment = gmm::assign_clusters(&fit.model, &vectors);
    trace.bic = fit.table.clone();
    trace.chosen_k = fit.model.k;

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); assignment.cluster_count()];
    for (i, &label) in assignment.labels.iter().enumerate() {
        members[label].push(i);
    }
    members.retain(|m| !m.is_empty());
    members.sort_by_key(|m| m[0]);

    let mut cluster_ids = IdSeq::new("c");
    let mut work: Vec<ClusterWork> = members
        .iter()
        .map(|idx| {
            let cluster_facts: Vec<Fact> = idx.iter().map(|&i| facts[i].clone()).collect();
            let refs: Vec<&Fact> = cluster_facts.iter().collect();
            let (rep, top) = relevance::select_representatives(&refs).expect("non-empty cluster");
            let rels: Vec<_> = cluster_facts.iter().map(|f| f.relevance).collect();
            let id = cluster_ids.next_id();
            ClusterWork {
                trace: ClusterTrace {
                    cluster_id: id.clone(),
                    fact_ids: cluster_facts.iter().map(|f| f.id.clone()).collect(),
                    responsibilities: idx.iter().map(|&i| assignment.responsibilities[i].clone()).collect(),
                    ..Default::default()
                },
                cluster: Cluster {
                    id,
                    topic: String::new(),
                    summary: String::new(),
                    fact_ids: cluster_facts.iter().map(|f| f.id.clone()).collect(),
                    relevance: relevance::mean_relevance(&rels),
                    representative_fact_id: rep,
                    top_fact_ids: top,
                    facts: cluster_facts,
                    fact_sets: Vec::new(),
                },
                merged: Vec::new(),
            }
        })
        .collect();

    let drafts: Vec<labels::ClusterDraft> = work
        .iter()
        .map(|w| {
            let refs: Vec<&Fact> = w.cluster.facts.iter().collect();
            labels::ClusterDraft {
                cluster_id: w.cluster.id.clone(),
                contents: relevance::by_relevance(&refs).iter().map(|f| f.content.clone()).collect(),
            }
        })
        .collect();
    for (w, l) in work.iter_mut().zip(labels::label_clusters(providers, query, &drafts)?) {
        w.cluster.topic = l.topic;
        w.cluster.summary = l.summary;
    }

    work.par_iter_mut().try_for_each(|w| -> Result<(), OrganizationError> {
        let refs: Vec<&Fact> = w.cluster.facts.iter().collect();
        w.cluster.fact_sets = factsets::build_fact_sets(providers, &w.cluster.id, &refs)?;
        Ok(())
    })?;
    let mut fs_ids = IdSeq::new("fs");
    for w in work.iter_mut() {
        for s in w.cluster.fact_sets.iter_mut() {
            s.id = fs_ids.next_id();
        }
    }

    let article_by_id: BTreeMap<&str, &Article> = articles.iter().map(|a| (a.id.as_str(), a)).collect();
    work.par_iter_mut().try_for_each(|w| -> Result<(), OrganizationError> {
        let views: Vec<merge::FactSetView> = w
            .cluster
            .fact_sets
            .iter()
            .map(|s| fact_set_view(s, &w.cluster.facts))
            .collect();
        let outcome = merge::merge_fact_sets(providers, &w.cluster.id, &views, &mut IdSeq::new("u"))?;
        w.trace.merge_proposals_rejected = outcome.rejected;
        w.merged = outcome.merged;
        let mut rewrites = Vec::new();
        for m in &w.merged {
            let (flags, changed) = fill_merged(providers, m, &mut w.cluster, &article_by_id)?;
            w.trace.entity_flags.extend(flags);
            rewrites.extend(changed);
        }
        for m in w.merged.iter_mut() {
            for (old, new) in &rewrites {
                m.merged_content = m.merged_content.replace(old.as_str(), new);
            }
        }
        Ok(())
    })?;

    let mut unit_ids = IdSeq::new("u");
    let mut out = Organization { trace, ..Default::default() };
    for mut w in work {
        for m in w.merged.iter_mut() {
            m.id = unit_ids.next_id();
        }
        out.merged.extend(w.merged);
        out.trace.clusters.push(w.trace);
        out.clusters.push(w.cluster);
    }
    Ok(out)
}

/// The canonical fact's data points stand for the whole set.
pub fn fact_set_view(set: &FactSet, facts: &[Fact]) -> merge::FactSetView {
    let canonical = facts
        .iter()
        .find(|f| f.content == set.canonical_content && set.fact_ids.contains(&f.id))
        .or_else(|| facts.iter().find(|f| f.id == set.fact_ids[0]));
    merge::FactSetView {
        id: set.id.clone(),
        canonical_content: set.canonical_content.clone(),
        data_points: canonical.map(|f| f.data_points.clone()).unwrap_or_default(),
    }
}

/// Detects entities in every member fact of `merged`, fills what is missing
/// and rewrites the affected facts and fact sets. Returns the flags and the
/// (old, new) content pairs.
/// (old content, new content) of a rewritten fact.
type Rewrite = (String, String);

fn fill_merged(
    providers: &Providers,
    merged: &MergedFactSet,
    cluster: &mut Cluster,
    articles: &BTreeMap<&str, &Article>,
) -> Result<(Vec<EntityFlag>, Vec<Rewrite>), OrganizationError> {
    let member_ids: Vec<String> = cluster
        .fact_sets
        .iter()
        .filter(|s| merged.fact_set_ids.contains(&s.id))
        .flat_map(|s| s.fact_ids.clone())
        .collect();
    if member_ids.len() < 2 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut found = Vec::new();
    for id in &member_ids {
        let f = cluster.facts.iter().find(|f| &f.id == id).expect("member fact");
        found.push((id.clone(), entities::detect_entities(providers, &f.content)?));
    }
    let mut flags = entities::flag_missing(&found);
    let mut rewrites = Vec::new();
    for flag in flags.iter_mut() {
        let Some(pos) = cluster.facts.iter().position(|f| f.id == flag.fact_id) else { continue };
        let fact = cluster.facts[pos].clone();
        let Some(article) = articles.get(fact.article_id.as_str()) else { continue };
        let target = entities::FillTarget {
            fact_id: &fact.id,
            content: &fact.content,
            article,
            paragraph_index: fact.paragraph_index,
        };
        if let Some(completed) = entities::fill_one(providers, flag, &target)? {
            for s in cluster.fact_sets.iter_mut() {
                if s.canonical_content == fact.content {
                    s.canonical_content = completed.clone();
                }
            }
            rewrites.push((fact.content.clone(), completed.clone()));
            let f = &mut cluster.facts[pos];
            f.content = completed;
            f.status = FactStatus::Refined;
        }
    }
    Ok((flags, rewrites))
}
