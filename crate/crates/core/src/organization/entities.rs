//! Named entities in fact contents, and filling in context (place, time,
//! source) that one fact of a merged set states and another leaves out.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::OrganizationError;
use crate::extraction::quantity::{scan_quantities, UnitParts};
use crate::model::Article;
use crate::providers::{Providers, StructuredRequest};
use crate::text;

/// Attempts per missing entity before the fact is left unchanged.
pub const MAX_FILL_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityKind {
    Gpe,
    Date,
    Org,
    Person,
    Percent,
    Money,
    Quantity,
    Cardinal,
    Other,
}

impl EntityKind {
    pub fn parse(s: &str) -> Self {
        match s.trim().to_ascii_uppercase().as_str() {
            "GPE" | "LOC" | "LOCATION" => EntityKind::Gpe,
            "DATE" | "TIME" => EntityKind::Date,
            "ORG" | "ORGANIZATION" => EntityKind::Org,
            "PERSON" | "PER" => EntityKind::Person,
            "PERCENT" => EntityKind::Percent,
            "MONEY" => EntityKind::Money,
            "QUANTITY" => EntityKind::Quantity,
            "CARDINAL" => EntityKind::Cardinal,
            _ => EntityKind::Other,
        }
    }

    /// Kinds that give a fact its context and can be filled from the source.
    pub fn is_contextual(self) -> bool {
        matches!(self, EntityKind::Gpe | EntityKind::Date | EntityKind::Org | EntityKind::Person)
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(Value::as_str).unwrap_or("OTHER"))
    }
}

/// `span` is a character range into the analyzed text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub text: String,
    pub kind: EntityKind,
    pub span: (usize, usize),
}

const COUNTRIES: &[&str] = &[
    "United States of America", "United States", "United Kingdom", "U.S.A.", "U.S.", "U.K.", "USA", "US", "UK",
    "America", "Canada", "Mexico", "Brazil", "Argentina", "Chile", "Colombia", "Peru", "Germany", "France", "Italy",
    "Spain", "Portugal", "Netherlands", "Belgium", "Switzerland", "Austria", "Sweden", "Norway", "Denmark", "Finland",
    "Poland", "Ireland", "Greece", "Turkey", "Russia", "Ukraine", "China", "Japan", "India", "Pakistan", "Bangladesh",
    "Indonesia", "Philippines", "Vietnam", "Thailand", "Malaysia", "Singapore", "South Korea", "Korea", "Australia",
    "New Zealand", "Nigeria", "Kenya", "South Africa", "Egypt", "Israel", "Saudi Arabia", "Iran", "Europe", "Asia",
    "Africa", "England", "Scotland", "Wales",
];

const US_STATES: &[&str] = &[
    "Alabama", "Alaska", "Arizona", "Arkansas", "California", "Colorado", "Connecticut", "Delaware", "Florida",
    "Georgia", "Hawaii", "Idaho", "Illinois", "Indiana", "Iowa", "Kansas", "Kentucky", "Louisiana", "Maine",
    "Maryland", "Massachusetts", "Michigan", "Minnesota", "Mississippi", "Missouri", "Montana", "Nebraska", "Nevada",
    "New Hampshire", "New Jersey", "New Mexico", "New York", "North Carolina", "North Dakota", "Ohio", "Oklahoma",
    "Oregon", "Pennsylvania", "Rhode Island", "South Carolina", "South Dakota", "Tennessee", "Texas", "Utah",
    "Vermont", "Virginia", "Washington", "West Virginia", "Wisconsin", "Wyoming",
];

const CITIES: &[&str] = &[
    "New York City", "Los Angeles", "Chicago", "Houston", "Phoenix", "Philadelphia", "San Francisco", "Seattle",
    "Boston", "Miami", "Atlanta", "Dallas", "London", "Paris", "Berlin", "Tokyo", "Beijing", "Shanghai", "Toronto",
    "Sydney", "Mumbai", "Delhi",
];

const ORG_WORDS: &[&str] = &[
    "University", "Institute", "Department", "Association", "Council", "Center", "Centre", "Bureau", "Agency",
    "Foundation", "Corporation", "Company", "Inc", "Inc.", "Ltd", "Organization", "Organisation", "Board", "Ministry",
    "Office", "Commission", "Society", "Academy", "College", "Group", "Fund", "Bank", "Service", "Network",
];

/// Capitalised tokens that look like acronyms but are not organisations.
const ACRONYM_EXCLUDE: &[&str] = &[
    "US", "USA", "UK", "AM", "PM", "CEO", "GDP", "TV", "OK", "AI", "ID", "FAQ", "PDF", "II", "III", "IV", "COVID",
];

const HONORIFICS: &[&str] = &["Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "Professor", "Sen.", "Rep.", "Gov."];

static GPE_RE: LazyLock<Regex> = LazyLock::new(|| {
    let mut names: Vec<&str> = COUNTRIES.iter().chain(US_STATES).chain(CITIES).copied().collect();
    names.sort_by_key(|n| std::cmp::Reverse(n.len()));
    let alts = names.iter().map(|n| regex::escape(n)).collect::<Vec<_>>().join("|");
    Regex::new(&format!(r"(?:^|[^\w.])({alts})(?:[^\w]|$)")).unwrap()
});

static DATE_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(?:(?:January|February|March|April|May|June|July|August|September|October|November|December)(?:\s+\d{1,2})?(?:,?\s+\d{4})?|(?:the\s+)?(?:1[89]|20)\d0s|(?:this|last|next|past|previous|current)\s+(?:year|decade|month)|the\s+(?:past|last)\s+(?:year|decade|\d+\s+years)|(?:1[89]\d\d|20\d\d)\s*[–\-/]\s*(?:\d\d\d\d|\d\d)\b|(?:in|since|by|during|from)\s+(?:1[89]\d\d|20\d\d))\b",
    )
    .unwrap()
});

static ACRONYM_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b[A-Z][A-Z&]{1,6}\b").unwrap());

static CAP_WORD_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Z][\w&'.-]*").unwrap());

static PERSON_RE: LazyLock<Regex> = LazyLock::new(|| {
    let hon = HONORIFICS.iter().map(|h| regex::escape(h)).collect::<Vec<_>>().join("|");
    Regex::new(&format!(r"\b(?:{hon})\s+([A-Z][a-z]+(?:\s+[A-Z][a-z]+)?)")).unwrap()
});

fn char_span(text: &str, start: usize, end: usize) -> (usize, usize) {
    let s = text[..start].chars().count();
    (s, s + text[start..end].chars().count())
}

struct Collector<'a> {
    text: &'a str,
    taken: Vec<(usize, usize)>,
    found: Vec<(usize, usize, EntityKind)>,
}

impl Collector<'_> {
    fn add(&mut self, start: usize, end: usize, kind: EntityKind) {
        if start >= end || self.taken.iter().any(|&(s, e)| start < e && s < end) {
            return;
        }
        self.taken.push((start, end));
        self.found.push((start, end, kind));
    }

    fn finish(mut self) -> Vec<Entity> {
        self.found.sort();
        self.found
            .into_iter()
            .map(|(s, e, kind)| Entity { text: self.text[s..e].to_string(), kind, span: char_span(self.text, s, e) })
            .collect()
    }
}

/// Extends an institution word over the capitalised words around it
/// ("National Center for Education Statistics").
fn org_spans(text: &str) -> Vec<(usize, usize)> {
    let words: Vec<(usize, usize, &str)> =
        CAP_WORD_RE.find_iter(text).map(|m| (m.start(), m.end(), m.as_str())).collect();
    let joinable = |a: usize, b: usize| {
        let gap = text[a..b].trim();
        gap.is_empty() || matches!(gap, "of" | "for" | "and" | "of the" | "for the" | "&")
    };
    let mut out = Vec::new();
    for (i, &(_, _, w)) in words.iter().enumerate() {
        if !ORG_WORDS.contains(&w.trim_end_matches([',', '.', '\''])) && !ORG_WORDS.contains(&w) {
            continue;
        }
        let mut lo = i;
        while lo > 0 && joinable(words[lo - 1].1, words[lo].0) && !is_sentence_start(text, words[lo - 1].0) {
            lo -= 1;
        }
        if lo > 0 && joinable(words[lo - 1].1, words[lo].0) && !text::is_stopword(&words[lo - 1].2.to_lowercase()) {
            lo -= 1;
        }
        let mut hi = i;
        while hi + 1 < words.len() && joinable(words[hi].1, words[hi + 1].0) {
            hi += 1;
        }
        if hi == lo {
            continue;
        }
        let end = words[hi].1;
        let end = end - text[..end].len() + text[..end].trim_end_matches([',', '.']).len();
        out.push((words[lo].0, end));
    }
    out
}

fn is_sentence_start(text: &str, at: usize) -> bool {
    let before = text[..at].trim_end();
    before.is_empty() || before.ends_with(['.', '!', '?'])
}

/// Rule-based entity recognition over a fixed gazetteer plus the quantity
/// scanner.
pub fn gazetteer_entities(text: &str) -> Vec<Entity> {
    let mut c = Collector { text, taken: Vec::new(), found: Vec::new() };
    for m in DATE_RE.find_iter(text) {
        let s = m.as_str();
        let lead = ["in ", "since ", "by ", "during ", "from "]
            .iter()
            .find(|p| s.len() > p.len() && s[..p.len()].eq_ignore_ascii_case(p))
            .map_or(0, |p| p.len());
        c.add(m.start() + lead, m.end(), EntityKind::Date);
    }
    for q in scan_quantities(text) {
        let kind = if q.is_year {
            EntityKind::Date
        } else {
            let parts = UnitParts::parse(&q.quantity.unit);
            if parts.percent {
                EntityKind::Percent
            } else if parts.currency.is_some() {
                EntityKind::Money
            } else if parts.measure.is_some() {
                EntityKind::Quantity
            } else {
                EntityKind::Cardinal
            }
        };
        c.add(q.start, q.end, kind);
    }
    for caps in PERSON_RE.captures_iter(text) {
        let m = caps.get(1).unwrap();
        c.add(m.start(), m.end(), EntityKind::Person);
    }
    for (s, e) in org_spans(text) {
        c.add(s, e, EntityKind::Org);
    }
    for caps in GPE_RE.captures_iter(text) {
        let m = caps.get(1).unwrap();
        c.add(m.start(), m.end(), EntityKind::Gpe);
    }
    for m in ACRONYM_RE.find_iter(text) {
        if !ACRONYM_EXCLUDE.contains(&m.as_str()) {
            c.add(m.start(), m.end(), EntityKind::Org);
        }
    }
    c.finish()
}

const ENTITY_PROMPT: &str = "List the named entities in the text below. Use the kinds GPE (countries, \
states, cities), DATE, ORG, PERSON, PERCENT, MONEY, QUANTITY, CARDINAL or OTHER. Copy each entity text \
exactly as it appears.\n\nText: {text}\n\nAnswer with JSON {\"entities\": [{\"text\": \"...\", \"kind\": \"GPE\"}]}.";

pub fn entity_request(text: &str) -> StructuredRequest {
    StructuredRequest::new("detect_entities", "entities", ENTITY_PROMPT.replace("{text}", text), json!({"text": text}))
}

/// Entities of `text`. Reported entities that do not occur in the text are
/// dropped; spans point at the first occurrence after the previous entity.
pub fn detect_entities(providers: &Providers, text: &str) -> Result<Vec<Entity>, OrganizationError> {
    if text.trim().is_empty() {
        return Err(OrganizationError::DegenerateInput("entity detection needs non-empty text".into()));
    }
    let doc = providers.complete_structured(&entity_request(text))?;
    let mut cursor = 0;
    let mut out = Vec::new();
    for e in doc["entities"].as_array().into_iter().flatten() {
        let Some(surface) = e["text"].as_str().map(str::trim).filter(|s| !s.is_empty()) else { continue };
        let kind = EntityKind::parse(e["kind"].as_str().unwrap_or_default());
        let at = text[cursor..].find(surface).map(|i| i + cursor).or_else(|| text.find(surface));
        let Some(at) = at else {
            tracing::debug!(surface, "entity not found in text, dropped");
            continue;
        };
        cursor = at + surface.len();
        out.push(Entity { text: surface.to_string(), kind, span: char_span(text, at, at + surface.len()) });
    }
    Ok(out)
}

pub(crate) fn offline_entities(p: &Value) -> Value {
    let entities: Vec<Value> = gazetteer_entities(p["text"].as_str().unwrap_or_default())
        .into_iter()
        .map(|e| json!({"text": e.text, "kind": e.kind}))
        .collect();
    json!({ "entities": entities })
}

/// A member fact missing a kind of context another member states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityFlag {
    pub fact_id: String,
    pub kind: EntityKind,
    pub reference: String,
    pub resolved: bool,
    #[serde(default)]
    pub value: Option<String>,
    #[serde(default)]
    pub attempts: usize,
    #[serde(default)]
    pub feedback: Vec<String>,
}

/// The fact content before and after a fill, plus where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillTarget<'a> {
    pub fact_id: &'a str,
    pub content: &'a str,
    pub article: &'a Article,
    pub paragraph_index: usize,
}

/// Contextual kinds present in some members and absent in others, one flag
/// per (deficient fact, kind) with the first value seen as reference.
pub fn flag_missing(members: &[(String, Vec<Entity>)]) -> Vec<EntityFlag> {
    let kinds_of = |es: &[Entity]| -> BTreeSet<EntityKind> { es.iter().map(|e| e.kind).filter(|k| k.is_contextual()).collect() };
    let all: BTreeSet<EntityKind> = members.iter().flat_map(|(_, es)| kinds_of(es)).collect();
    let mut flags = Vec::new();
    for kind in all {
        let Some(reference) = members.iter().flat_map(|(_, es)| es).find(|e| e.kind == kind).map(|e| e.text.clone()) else {
            continue;
        };
        for (fact_id, es) in members {
            if !kinds_of(es).contains(&kind) {
                flags.push(EntityFlag {
                    fact_id: fact_id.clone(),
                    kind,
                    reference: reference.clone(),
                    resolved: false,
                    value: None,
                    attempts: 0,
                    feedback: Vec::new(),
                });
            }
        }
    }
    flags
}

const FILL_PROMPT: &str = "A fact taken from the article below does not state its {kind_name}, while a \
related fact states \"{reference}\". Using only the article text, decide whether the article gives the \
{kind_name} for this fact. If it does, return the value and a short phrase that can be appended to the fact \
(for example \"in the U.S.\").\n\nFact: {content}\n\nParagraph: {paragraph}\n\nArticle ({title}):\n{article}\n{feedback}\n\
Answer with JSON {\"found\": true, \"value\": \"...\", \"phrase\": \"...\"}.";

const FILL_CHECK_PROMPT: &str = "A fact was completed with missing context from its source. Check that the \
completed fact is supported by the source paragraph and article, keeps every number of the original fact, \
and does not change its meaning.\n\nOriginal: {content}\nCompleted: {completed}\nAdded value: {value}\n\n\
Paragraph: {paragraph}\n\nAnswer with JSON {\"ok\": true, \"detail\": \"...\"}.";

fn kind_name(kind: EntityKind) -> &'static str {
    match kind {
        EntityKind::Gpe => "location",
        EntityKind::Date => "time",
        EntityKind::Org => "source organization",
        EntityKind::Person => "source person",
        _ => "context",
    }
}

fn article_text(a: &Article) -> String {
    a.paragraphs.join("\n\n")
}

pub fn fill_request(flag: &EntityFlag, target: &FillTarget<'_>, feedback: &[String]) -> StructuredRequest {
    let paragraph = target.article.paragraphs.get(target.paragraph_index).cloned().unwrap_or_default();
    let article = article_text(target.article);
    let fb = if feedback.is_empty() { String::new() } else { format!("\nEarlier answers were rejected: {}\n", feedback.join("; ")) };
    let prompt = FILL_PROMPT
        .replace("{kind_name}", kind_name(flag.kind))
        .replace("{reference}", &flag.reference)
        .replace("{content}", target.content)
        .replace("{paragraph}", &paragraph)
        .replace("{title}", &target.article.title)
        .replace("{article}", &article)
        .replace("{feedback}", &fb);
    StructuredRequest::new(
        "fill_entity",
        "entity_fill",
        prompt,
        json!({
            "kind": flag.kind,
            "reference": flag.reference,
            "content": target.content,
            "paragraph": paragraph,
            "article_text": article,
            "feedback": feedback,
        }),
    )
}

pub fn fill_check_request(target: &FillTarget<'_>, completed: &str, value: &str) -> StructuredRequest {
    let paragraph = target.article.paragraphs.get(target.paragraph_index).cloned().unwrap_or_default();
    let prompt = FILL_CHECK_PROMPT
        .replace("{content}", target.content)
        .replace("{completed}", completed)
        .replace("{value}", value)
        .replace("{paragraph}", &paragraph);
    StructuredRequest::new(
        "validate_entity_fill",
        "fill_validation",
        prompt,
        json!({
            "content": target.content,
            "completed": completed,
            "value": value,
            "paragraph": paragraph,
            "article_text": article_text(target.article),
        }),
    )
}

fn is_us(v: &str) -> bool {
    matches!(v.trim(), "U.S." | "US" | "USA" | "U.S.A." | "United States" | "United States of America")
}

/// Phrase appended to a fact for a filled value.
pub fn default_phrase(kind: EntityKind, value: &str) -> String {
    match kind {
        EntityKind::Gpe if is_us(value) => "in the U.S.".to_string(),
        EntityKind::Gpe if value.starts_with("United ") => format!("in the {value}"),
        EntityKind::Gpe | EntityKind::Date => format!("in {value}"),
        _ => format!("according to {value}"),
    }
}

/// Inserts `phrase` before the fact's closing punctuation.
pub fn append_phrase(content: &str, phrase: &str) -> String {
    let body = content.trim_end();
    let cut = body.trim_end_matches(['.', '!', '?', ';', ':']).len();
    let (head, tail) = body.split_at(cut);
    let tail = if tail.is_empty() { "." } else { tail };
    let phrase = phrase.trim().trim_end_matches('.');
    if head.ends_with(phrase) {
        return body.to_string();
    }
    format!("{head} {phrase}{tail}")
}

fn numbers_kept(before: &str, after: &str) -> bool {
    scan_quantities(before).iter().all(|q| after.contains(&q.surface))
}

/// Resolves one flag. Returns the completed content when a fill is found
/// and accepted; the flag records attempts and rejection reasons.
pub fn fill_one(providers: &Providers, flag: &mut EntityFlag, target: &FillTarget<'_>) -> Result<Option<String>, OrganizationError> {
    let source = article_text(target.article).to_lowercase();
    while flag.attempts < MAX_FILL_ATTEMPTS {
        flag.attempts += 1;
        let doc = providers.complete_structured(&fill_request(flag, target, &flag.feedback))?;
        if !doc["found"].as_bool().unwrap_or(false) {
            tracing::info!(fact = target.fact_id, kind = %flag.kind, "source does not state the missing entity");
            return Ok(None);
        }
        let value = text::collapse_ws(doc["value"].as_str().unwrap_or_default());
        if value.is_empty() || !source.contains(&value.to_lowercase()) {
            flag.feedback.push(format!("value {value:?} does not appear in the article"));
            continue;
        }
        let phrase = doc["phrase"]
            .as_str()
            .map(text::collapse_ws)
            .filter(|p| p.contains(&value))
            .unwrap_or_else(|| default_phrase(flag.kind, &value));
        let completed = append_phrase(target.content, &phrase);
        if !numbers_kept(target.content, &completed) {
            flag.feedback.push("the completed fact lost a number of the original".into());
            continue;
        }
        let check = providers.complete_structured(&fill_check_request(target, &completed, &value))?;
        if check["ok"].as_bool().unwrap_or(false) {
            flag.resolved = true;
            flag.value = Some(value);
            return Ok(Some(completed));
        }
        flag.feedback.push(check["detail"].as_str().unwrap_or("rejected by validation").to_string());
    }
    tracing::info!(fact = target.fact_id, kind = %flag.kind, "missing entity left unresolved");
    Ok(None)
}

fn same_entity(a: &str, b: &str) -> bool {
    a.eq_ignore_ascii_case(b) || (is_us(a) && is_us(b))
}

pub(crate) fn offline_fill(p: &Value) -> Value {
    let kind = serde_json::from_value::<EntityKind>(p["kind"].clone()).unwrap_or(EntityKind::Other);
    let reference = p["reference"].as_str().unwrap_or_default();
    let scope = if kind == EntityKind::Date { &p["paragraph"] } else { &p["article_text"] };
    let rejected: Vec<&str> = p["feedback"].as_array().into_iter().flatten().filter_map(Value::as_str).collect();
    let candidates: Vec<Entity> = gazetteer_entities(scope.as_str().unwrap_or_default())
        .into_iter()
        .filter(|e| e.kind == kind && !rejected.iter().any(|r| r.contains(&format!("{:?}", e.text))))
        .collect();
    let pick = candidates.iter().find(|e| same_entity(&e.text, reference)).or(candidates.first());
    match pick {
        Some(e) => json!({"found": true, "value": e.text, "phrase": default_phrase(kind, &e.text)}),
        None => json!({"found": false}),
    }
}

pub(crate) fn offline_fill_check(p: &Value) -> Value {
    let value = p["value"].as_str().unwrap_or_default();
    let source = p["article_text"].as_str().unwrap_or_default();
    let ok = !value.is_empty()
        && source.to_lowercase().contains(&value.to_lowercase())
        && numbers_kept(p["content"].as_str().unwrap_or_default(), p["completed"].as_str().unwrap_or_default());
    json!({"ok": ok, "detail": if ok { "supported by the source" } else { "value not supported by the source" }})
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<(String, EntityKind)> {
        gazetteer_entities(text).into_iter().map(|e| (e.text, e.kind)).collect()
    }

    #[test]
    fn percent_and_place() {
        let got = kinds("23.1% of parents in the U.S. cited special needs");
        assert!(got.contains(&("U.S.".into(), EntityKind::Gpe)));
        assert!(got.contains(&("23.1%".into(), EntityKind::Percent)));
        let none = kinds("15.6% of parents said that the child had a physical or mental problem");
        assert!(none.iter().all(|(_, k)| *k != EntityKind::Gpe));
    }

    #[test]
    fn dates_orgs_people_money() {
        let got = kinds("According to the National Center for Education Statistics, spending hit $2.5 billion in 2019, Dr. Jane Smith said.");
        assert!(got.contains(&("National Center for Education Statistics".into(), EntityKind::Org)), "{got:?}");
        assert!(got.contains(&("$2.5 billion".into(), EntityKind::Money)));
        assert!(got.contains(&("2019".into(), EntityKind::Date)));
        assert!(got.contains(&("Jane Smith".into(), EntityKind::Person)));
        let got = kinds("Enrollment rose in the 2010s across Texas, the NHERI reported.");
        assert!(got.contains(&("the 2010s".into(), EntityKind::Date)));
        assert!(got.contains(&("Texas".into(), EntityKind::Gpe)));
        assert!(got.contains(&("NHERI".into(), EntityKind::Org)));
    }

    #[test]
    fn spans_are_character_offsets() {
        let t = "Über 5% in Japan";
        let e = gazetteer_entities(t).into_iter().find(|e| e.kind == EntityKind::Gpe).unwrap();
        let chars: Vec<char> = t.chars().collect();
        assert_eq!(chars[e.span.0..e.span.1].iter().collect::<String>(), "Japan");
    }

    #[test]
    fn phrases() {
        assert_eq!(append_phrase("15.6% of parents cited health.", "in the U.S."), "15.6% of parents cited health in the U.S.");
        assert_eq!(append_phrase("15.6% of parents cited health", "in 2019"), "15.6% of parents cited health in 2019.");
        assert_eq!(default_phrase(EntityKind::Gpe, "US"), "in the U.S.");
        assert_eq!(default_phrase(EntityKind::Gpe, "United Kingdom"), "in the United Kingdom");
        assert_eq!(default_phrase(EntityKind::Org, "NCES"), "according to NCES");
    }

    #[test]
    fn flags_only_contextual_kinds() {
        let a = gazetteer_entities("23.1% of parents in the U.S. cited special needs");
        let b = gazetteer_entities("15.6% of parents said the child had a physical problem");
        let flags = flag_missing(&[("f1".into(), a.clone()), ("f2".into(), b)]);
        assert_eq!(flags.len(), 1);
        assert_eq!((flags[0].fact_id.as_str(), flags[0].kind, flags[0].reference.as_str()), ("f2", EntityKind::Gpe, "U.S."));
        assert!(flag_missing(&[("f1".into(), a.clone()), ("f2".into(), a)]).is_empty());
    }
}
