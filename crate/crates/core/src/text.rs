//! Small text helpers shared by the rule-based stages: tokens, stopwords,
//! crude stems and sentence splitting.

use std::collections::BTreeSet;

const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could", "did", "do",
    "does", "doing", "down", "during", "each", "few", "for", "from", "further", "had", "has", "have", "having", "he",
    "her", "here", "hers", "him", "his", "how", "i", "if", "in", "into", "is", "it", "its", "just", "more", "most",
    "my", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "out", "over", "own",
    "per", "same", "she", "should", "so", "some", "such", "than", "that", "the", "their", "them", "then", "there",
    "these", "they", "this", "those", "through", "to", "too", "under", "until", "up", "very", "was", "we", "were",
    "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your", "according",
    "said", "says", "say", "percent", "million", "billion", "thousand", "trillion", "year", "years", "number",
    "people", "data", "statistics", "new", "one", "two", "three", "many", "much", "around", "nearly", "almost",
    "roughly", "approximately", "least", "since", "among", "within", "like", "compared", "whether", "u", "s",
];

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.contains(&word)
}

/// Lowercase alphanumeric runs.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Lowercase alphabetic tokens of length ≥ 3 that are not stopwords.
pub fn content_words(text: &str) -> Vec<String> {
    tokens(text)
        .into_iter()
        .filter(|t| t.len() >= 3 && t.chars().all(char::is_alphabetic) && !is_stopword(t))
        .collect()
}

/// Crude stem: strips a few inflectional suffixes, then keeps at most six
/// characters. Good enough to match "homeschooled" with "homeschooling".
pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    let mut s = w.as_str();
    for suffix in ["ing", "ed", "es", "s", "ers", "er"] {
        if s.len() > suffix.len() + 3 {
            if let Some(rest) = s.strip_suffix(suffix) {
                s = rest;
                break;
            }
        }
    }
    s.chars().take(6).collect()
}

pub fn stems(text: &str) -> BTreeSet<String> {
    content_words(text).iter().map(|w| stem(w)).collect()
}

pub fn title_case(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn collapse_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_abbreviation(word: &str) -> bool {
    const ABBR: &[&str] = &["mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "vs.", "etc.", "inc.", "jr.", "sr.", "no.", "approx."];
    let w = word.trim_start_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
    ABBR.contains(&w.as_str()) || w.trim_end_matches('.').contains('.') || (w.len() == 2 && w.ends_with('.'))
}

/// Splits running text into sentences on `.`, `!` or `?` followed by
/// whitespace and a capital letter, digit or quote. Abbreviations such as
/// "U.S." and "Dr." do not end a sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (i, &(pos, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && matches!(chars[j].1, '"' | '\'' | '”' | '’' | ')') {
            j += 1;
        }
        if j >= chars.len() || !chars[j].1.is_whitespace() {
            continue;
        }
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        if k >= chars.len() {
            continue;
        }
        let next = chars[k].1;
        if !(next.is_uppercase() || next.is_ascii_digit() || matches!(next, '"' | '“' | '$' | '€' | '£')) {
            continue;
        }
        let word_start = text[..=pos].rfind(char::is_whitespace).map_or(0, |p| p + 1);
        if c == '.' && is_abbreviation(&text[word_start..=pos]) {
            continue;
        }
        let end = chars[j - 1].0 + chars[j - 1].1.len_utf8();
        let s = text[start..end].trim();
        if !s.is_empty() {
            out.push(s.to_string());
        }
        start = chars[k].0;
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        out.push(rest.to_string());
    }
    out
}

/// Jaccard similarity of stem sets.
pub fn stem_overlap(a: &str, b: &str) -> f64 {
    let (sa, sb) = (stems(a), stems(b));
    if sa.is_empty() && sb.is_empty() {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / sa.union(&sb).count() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentences_respect_abbreviations_and_decimals() {
        let s = split_sentences("Homeschooling grew 3.5% in the U.S. in 2023. In 2024, 3.7 million children were homeschooled! Dr. Smith agrees.");
        assert_eq!(
            s,
            vec![
                "Homeschooling grew 3.5% in the U.S. in 2023.",
                "In 2024, 3.7 million children were homeschooled!",
                "Dr. Smith agrees."
            ]
        );
    }

    #[test]
    fn stems_match_inflections() {
        assert_eq!(stem("homeschooled"), stem("homeschooling"));
        assert_eq!(stem("parents"), "parent");
        assert!(stems("The parents of children").contains("childr"));
    }
}
