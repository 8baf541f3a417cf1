//! Domain types shared by every stage of the pipeline, and the Story
//! Document that is handed to the frontend.
//!
//! All types are plain immutable values once built. Every real number that
//! ends up on the wire is a [`Decimal`], serialized as a string.

use std::cmp::Ordering;
use std::fmt;

use chrono::{DateTime, Utc};
use rust_decimal::prelude::{FromPrimitive, ToPrimitive};
pub use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

/// Number of significant digits kept for reals that originate as floats
/// (cosine relevances and similar).
pub const SIGNIFICANT_DIGITS: u32 = 6;

/// Tolerance used for every decimal comparison in invariant checks.
pub const DECIMAL_TOLERANCE: f64 = 1e-9;

/// Default number of clusters visible in the overview.
pub const DEFAULT_VISIBLE_CLUSTERS: usize = 6;

/// Sentinel for an unknown publication year.
pub const UNKNOWN_YEAR: i32 = 0;

/// Quantize a float to the canonical wire precision.
pub fn real(x: f64) -> Decimal {
    if !x.is_finite() {
        return Decimal::ZERO;
    }
    let d = Decimal::from_f64(x).unwrap_or(Decimal::ZERO);
    d.round_sf(SIGNIFICANT_DIGITS).unwrap_or(d).normalize()
}

pub fn to_f64(d: Decimal) -> f64 {
    d.to_f64().unwrap_or(f64::NAN)
}

pub fn decimal_close(a: Decimal, b: Decimal) -> bool {
    (a - b).abs() <= Decimal::from_f64(DECIMAL_TOLERANCE).unwrap()
}

/// Sort key for the sequential ids ("a1", "f17", "c3"...): prefix, then the
/// numeric suffix, so that "f2" sorts before "f10".
pub fn id_order(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let cut = s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        (&s[..cut], s[cut..].parse().ok())
    }
    let (pa, na) = split(a);
    let (pb, nb) = split(b);
    pa.cmp(pb).then(na.cmp(&nb)).then(a.cmp(b))
}

/// Sequential id generator for one id prefix.
#[derive(Debug, Clone)]
pub struct IdSeq {
    prefix: &'static str,
    next: u64,
}

impl IdSeq {
    pub fn new(prefix: &'static str) -> Self {
        Self { prefix, next: 1 }
    }

    pub fn next_id(&mut self) -> String {
        let id = format!("{}{}", self.prefix, self.next);
        self.next += 1;
        id
    }
}

pub fn favicon_for(domain: &str) -> String {
    format!("https://{domain}/favicon.ico")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub url: String,
    pub title: String,
    pub snippet: String,
    pub source_domain: String,
    /// `0` when unknown; rendered as "undated".
    pub published_year: i32,
    pub retrieved_at: DateTime<Utc>,
    pub paragraphs: Vec<String>,
    pub favicon_url: String,
    /// Queries whose results contained this article.
    #[serde(default)]
    pub found_by: Vec<String>,
}

impl Article {
    pub fn year_label(&self) -> String {
        if self.published_year == UNKNOWN_YEAR {
            "undated".to_string()
        } else {
            self.published_year.to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataPoint {
    pub label: String,
    pub value: Decimal,
    /// Canonical unit, see [`crate::extraction::quantity`].
    pub unit: String,
    #[serde(default)]
    pub series_key: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactStatus {
    Extracted,
    Validated,
    Refined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub id: String,
    pub article_id: String,
    pub paragraph_index: usize,
    pub content: String,
    pub data_points: Vec<DataPoint>,
    pub relevance: Decimal,
    /// In-memory only; the wire format omits embeddings.
    #[serde(skip)]
    pub embedding: Vec<f64>,
    pub status: FactStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactSet {
    pub id: String,
    pub cluster_id: String,
    pub fact_ids: Vec<String>,
    pub canonical_content: String,
    /// Same claim as another set in the cluster but with a different value.
    #[serde(default)]
    pub conflicting: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: String,
    pub topic: String,
    pub summary: String,
    pub fact_ids: Vec<String>,
    pub relevance: Decimal,
    pub representative_fact_id: String,
    pub top_fact_ids: Vec<String>,
    /// Member facts, in `fact_ids` order.
    pub facts: Vec<Fact>,
    pub fact_sets: Vec<FactSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    Bar,
    Pie,
    Line,
    Isotype,
    Range,
    Text,
}

impl ChartKind {
    pub const ALL: [ChartKind; 6] = [
        ChartKind::Bar,
        ChartKind::Pie,
        ChartKind::Line,
        ChartKind::Isotype,
        ChartKind::Range,
        ChartKind::Text,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChartKind::Bar => "bar",
            ChartKind::Pie => "pie",
            ChartKind::Line => "line",
            ChartKind::Isotype => "isotype",
            ChartKind::Range => "range",
            ChartKind::Text => "text",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL.into_iter().find(|k| k.as_str() == s).or(match s.as_str() {
            "dumbbell" | "range/dumbbell" => Some(ChartKind::Range),
            _ => None,
        })
    }
}

impl fmt::Display for ChartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesPoint {
    #[serde(default)]
    pub series_key: Option<String>,
    pub label: String,
    pub value: Decimal,
    pub unit: String,
    pub color_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub kind: ChartKind,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<SeriesPoint>,
    #[serde(default)]
    pub annotations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarrativeUnit {
    pub id: String,
    pub cluster_id: String,
    pub fact_set_ids: Vec<String>,
    pub title: String,
    pub caption_html: String,
    pub chart: ChartSpec,
    pub source_article_ids: Vec<String>,
    pub order_in_cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLink {
    pub cluster_a: String,
    pub cluster_b: String,
    pub shared_article_ids: Vec<String>,
    pub weight: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub total_articles: usize,
    pub total_facts: usize,
    pub total_clusters: usize,
    pub shown_clusters_default: usize,
    pub shown_facts_default: usize,
    pub contributing_articles_default: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryDocument {
    pub story_id: String,
    pub query: String,
    pub expanded_queries: Vec<String>,
    pub articles: Vec<Article>,
    pub clusters: Vec<Cluster>,
    pub units: Vec<NarrativeUnit>,
    pub links: Vec<ClusterLink>,
    pub stats: SummaryStats,
    pub created_at: DateTime<Utc>,
}

impl StoryDocument {
    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.clusters.iter().flat_map(|c| c.facts.iter())
    }

    pub fn fact_sets(&self) -> impl Iterator<Item = &FactSet> {
        self.clusters.iter().flat_map(|c| c.fact_sets.iter())
    }

    pub fn article(&self, id: &str) -> Option<&Article> {
        self.articles.iter().find(|a| a.id == id)
    }
}
