//! Deterministic, locale-fixed parsing of numeric quantities.
//!
//! News text writes the same number many ways ("3,700,000", "3.7 million",
//! "3.7M"). Everything downstream compares quantities through the canonical
//! `(value, unit)` form produced here: scale words are kept as the unit,
//! large plain numbers are folded into the nearest scale word, and currency
//! symbols are kept in the unit so money never compares equal to a count.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use rust_decimal::Decimal;
use thiserror::Error;

use crate::model::DataPoint;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuantityError {
    #[error("not a quantity: {0:?}")]
    NotAQuantity(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quantity {
    pub value: Decimal,
    pub unit: String,
}

impl Quantity {
    pub fn magnitude(&self) -> Decimal {
        magnitude(self.value, &self.unit)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_quantity(self.value, &self.unit))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scale {
    Thousand,
    Million,
    Billion,
    Trillion,
}

impl Scale {
    pub const ALL: [Scale; 4] = [Scale::Thousand, Scale::Million, Scale::Billion, Scale::Trillion];

    pub fn word(self) -> &'static str {
        match self {
            Scale::Thousand => "thousand",
            Scale::Million => "million",
            Scale::Billion => "billion",
            Scale::Trillion => "trillion",
        }
    }

    pub fn factor(self) -> Decimal {
        match self {
            Scale::Thousand => Decimal::from(1_000u64),
            Scale::Million => Decimal::from(1_000_000u64),
            Scale::Billion => Decimal::from(1_000_000_000u64),
            Scale::Trillion => Decimal::from(1_000_000_000_000u64),
        }
    }

    fn from_word(w: &str) -> Option<Scale> {
        Scale::ALL.into_iter().find(|s| s.word().eq_ignore_ascii_case(w))
    }

    /// Suffix letters written directly after the digits ("3.7M", "$5bn").
    fn from_attached_suffix(s: &str) -> Option<Scale> {
        match s {
            "k" | "K" => Some(Scale::Thousand),
            "m" | "M" | "mn" | "MM" => Some(Scale::Million),
            "b" | "B" | "bn" | "BN" => Some(Scale::Billion),
            "t" | "T" | "tn" => Some(Scale::Trillion),
            _ => None,
        }
    }

    /// Suffix letters allowed after a space ("3.7 M"). Lowercase single
    /// letters are left alone there since they usually denote measures.
    fn from_spaced_suffix(s: &str) -> Option<Scale> {
        match s {
            "K" => Some(Scale::Thousand),
            "M" | "mn" | "MM" => Some(Scale::Million),
            "B" | "bn" | "BN" => Some(Scale::Billion),
            "T" | "tn" => Some(Scale::Trillion),
            _ => None,
        }
    }
}

/// Structured view of a canonical unit string such as `"$ billion"`,
/// `"million km"`, `"%"` or `""`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UnitParts {
    pub currency: Option<String>,
    pub scale: Option<Scale>,
    pub measure: Option<String>,
    pub percent: bool,
}

impl UnitParts {
    pub fn parse(unit: &str) -> UnitParts {
        let unit = unit.trim();
        if unit == "%" {
            return UnitParts { percent: true, ..Default::default() };
        }
        let mut parts = UnitParts::default();
        let mut words: Vec<&str> = unit.split_whitespace().collect();
        if let Some(first) = words.first() {
            if CURRENCY_SYMBOLS.contains(first) {
                parts.currency = Some(first.to_string());
                words.remove(0);
            }
        }
        if let Some(first) = words.first() {
            if let Some(s) = Scale::from_word(first) {
                parts.scale = Some(s);
                words.remove(0);
            }
        }
        if !words.is_empty() {
            parts.measure = Some(words.join(" "));
        }
        parts
    }

    pub fn render(&self) -> String {
        if self.percent {
            return "%".to_string();
        }
        let mut out: Vec<&str> = Vec::new();
        if let Some(c) = &self.currency {
            out.push(c);
        }
        if let Some(s) = self.scale {
            out.push(s.word());
        }
        if let Some(m) = &self.measure {
            out.push(m);
        }
        out.join(" ")
    }

    pub fn family(&self) -> UnitFamily {
        if self.percent {
            UnitFamily::Percent
        } else if let Some(c) = &self.currency {
            UnitFamily::Currency(c.clone())
        } else if let Some(m) = &self.measure {
            UnitFamily::Measure(m.clone())
        } else if self.scale.is_some() {
            UnitFamily::CountScale
        } else {
            UnitFamily::Unitless
        }
    }

    fn alignment_group(&self) -> (Option<String>, Option<String>, bool) {
        (self.currency.clone(), self.measure.clone(), self.percent)
    }
}

/// Families that may share an axis. Cross-family comparisons and merges are
/// never allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnitFamily {
    CountScale,
    Percent,
    Currency(String),
    Measure(String),
    Unitless,
}

impl fmt::Display for UnitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitFamily::CountScale => f.write_str("count"),
            UnitFamily::Percent => f.write_str("percent"),
            UnitFamily::Currency(c) => write!(f, "currency:{c}"),
            UnitFamily::Measure(m) => write!(f, "measure:{m}"),
            UnitFamily::Unitless => f.write_str("unitless"),
        }
    }
}

pub fn unit_family(unit: &str) -> UnitFamily {
    UnitParts::parse(unit).family()
}

pub fn scale_factor(unit: &str) -> Decimal {
    UnitParts::parse(unit).scale.map_or(Decimal::ONE, Scale::factor)
}

pub fn magnitude(value: Decimal, unit: &str) -> Decimal {
    value * scale_factor(unit)
}

/// True when two units differ at most in their scale word, so their values
/// can be rescaled onto one axis ("" and "million", "$" and "$ billion").
pub fn same_alignment_group(a: &str, b: &str) -> bool {
    UnitParts::parse(a).alignment_group() == UnitParts::parse(b).alignment_group()
}

/// Relative comparison of two magnitudes at 1e-9.
pub fn same_magnitude(a: Decimal, b: Decimal) -> bool {
    let diff = (a - b).abs();
    let scale = a.abs().max(b.abs()).max(Decimal::ONE);
    diff <= scale * Decimal::new(1, 9)
}

const CURRENCY_SYMBOLS: [&str; 4] = ["$", "€", "£", "¥"];

fn currency_word(w: &str) -> Option<&'static str> {
    match w.to_ascii_lowercase().as_str() {
        "dollar" | "dollars" | "usd" | "us dollars" | "u.s. dollars" => Some("$"),
        "euro" | "euros" | "eur" => Some("€"),
        "gbp" | "pounds sterling" | "sterling" => Some("£"),
        "yen" | "jpy" => Some("¥"),
        _ => None,
    }
}

fn strip_currency_prefix(s: &str) -> Option<(&'static str, &str)> {
    for (prefix, sym) in [("US$", "$"), ("$", "$"), ("€", "€"), ("£", "£"), ("¥", "¥")] {
        if let Some(rest) = s.strip_prefix(prefix) {
            return Some((sym, rest));
        }
    }
    None
}

fn strip_sign(s: &str) -> Option<(bool, &str)> {
    let mut chars = s.chars();
    match chars.next() {
        Some('-') | Some('−') => Some((true, chars.as_str())),
        Some('+') => Some((false, chars.as_str())),
        _ => None,
    }
}

/// Splits off the leading numeral: digits with optional comma groups of three
/// and an optional fractional part. Returns the numeral without separators.
fn take_numeral(s: &str) -> Option<(String, &str)> {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i == 0 {
        return None;
    }
    let mut digits = s[..i].to_string();
    let mut grouped = false;
    while i < bytes.len() && bytes[i] == b',' {
        let group = &bytes[i + 1..];
        let n = group.iter().take_while(|b| b.is_ascii_digit()).count();
        if n == 0 {
            break;
        }
        if n != 3 {
            return None;
        }
        grouped = true;
        digits.push_str(&s[i + 1..i + 4]);
        i += 4;
    }
    if grouped && s[..s.find(',').unwrap()].len() > 3 {
        return None;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        let n = bytes[i + 1..].iter().take_while(|b| b.is_ascii_digit()).count();
        if n > 0 {
            digits.push_str(&s[i..i + 1 + n]);
            i += 1 + n;
        }
    }
    let rest = &s[i..];
    let mut tail = rest.chars();
    if let (Some(',' | '.'), Some(d)) = (tail.next(), tail.next()) {
        if d.is_ascii_digit() {
            return None;
        }
    }
    Some((digits, rest))
}

fn take_scale(rest: &str) -> (Option<Scale>, &str) {
    let alpha_len = rest.chars().take_while(|c| c.is_ascii_alphabetic()).count();
    if alpha_len > 0 {
        let word = &rest[..alpha_len];
        if let Some(s) = Scale::from_attached_suffix(word).or_else(|| Scale::from_word(word)) {
            return (Some(s), &rest[alpha_len..]);
        }
        return (None, rest);
    }
    let trimmed = rest.trim_start();
    if trimmed.len() == rest.len() {
        return (None, rest);
    }
    let alpha_len = trimmed.chars().take_while(|c| c.is_ascii_alphabetic()).count();
    let word = &trimmed[..alpha_len];
    match Scale::from_word(word).or_else(|| Scale::from_spaced_suffix(word)) {
        Some(s) => (Some(s), &trimmed[alpha_len..]),
        None => (None, rest),
    }
}

static MEASURE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[A-Za-z][A-Za-z0-9/²³\-]*(?: [A-Za-z][A-Za-z0-9/²³\-]*){0,2}$").unwrap());

enum Tail {
    None,
    Percent,
    Currency(&'static str),
    Measure(String),
}

fn classify_tail(tail: &str) -> Option<Tail> {
    let tail = tail.trim().trim_end_matches('.');
    if tail.is_empty() {
        return Some(Tail::None);
    }
    let lower = tail.to_ascii_lowercase();
    if matches!(lower.as_str(), "%" | "percent" | "per cent" | "pct") {
        return Some(Tail::Percent);
    }
    if let Some(sym) = currency_word(&lower) {
        return Some(Tail::Currency(sym));
    }
    if MEASURE_RE.is_match(tail) {
        return Some(Tail::Measure(lower));
    }
    None
}

/// Parse one numeric token into its canonical `(value, unit)` form.
///
/// Grammar: optional sign, optional currency symbol, digits with optional
/// comma thousands separators and decimal part, optional scale suffix (K, M,
/// B, T, thousand, million, billion, trillion), optional `%`, currency word or
/// measure word.
pub fn normalize_quantity(token: &str) -> Result<Quantity, QuantityError> {
    let not_a_quantity = || QuantityError::NotAQuantity(token.to_string());
    let mut s = token.trim();
    let mut negative = false;
    let mut currency: Option<&'static str> = None;
    let mut seen_sign = false;
    loop {
        if !seen_sign {
            if let Some((neg, rest)) = strip_sign(s) {
                negative = neg;
                seen_sign = true;
                s = rest.trim_start();
                continue;
            }
        }
        if currency.is_none() {
            if let Some((sym, rest)) = strip_currency_prefix(s) {
                currency = Some(sym);
                s = rest.trim_start();
                continue;
            }
        }
        break;
    }
    let (digits, rest) = take_numeral(s).ok_or_else(not_a_quantity)?;
    let (scale, rest) = take_scale(rest);
    let tail = classify_tail(rest).ok_or_else(not_a_quantity)?;

    let mut value = Decimal::from_str(&digits).map_err(|_| not_a_quantity())?;
    if negative {
        value = -value;
    }

    let mut parts = UnitParts { scale, ..Default::default() };
    match tail {
        Tail::None => {}
        Tail::Percent => {
            if currency.is_some() || scale.is_some() {
                return Err(not_a_quantity());
            }
            parts.percent = true;
        }
        Tail::Currency(sym) => {
            if currency.is_some_and(|c| c != sym) {
                return Err(not_a_quantity());
            }
            currency = Some(sym);
        }
        Tail::Measure(m) => {
            if currency.is_some() {
                return Err(not_a_quantity());
            }
            parts.measure = Some(m);
        }
    }
    parts.currency = currency.map(str::to_string);

    if parts.scale.is_none() && !parts.percent {
        if let Some(s) = large_number_scale(value) {
            value /= s.factor();
            parts.scale = Some(s);
        }
    }
    if value.is_zero() {
        value = Decimal::ZERO;
    }
    Ok(Quantity { value: value.normalize(), unit: parts.render() })
}

/// Scale word for plain numbers of magnitude at least one million.
fn large_number_scale(value: Decimal) -> Option<Scale> {
    let abs = value.abs();
    [Scale::Trillion, Scale::Billion, Scale::Million]
        .into_iter()
        .find(|s| abs >= s.factor())
}

/// Express `value` (in `unit`) at `target` scale instead of its own.
pub fn rescale(value: Decimal, unit: &str, target: Option<Scale>) -> (Decimal, String) {
    let mut parts = UnitParts::parse(unit);
    let m = magnitude(value, unit);
    let v = match target {
        Some(s) => m / s.factor(),
        None => m,
    };
    parts.scale = target;
    (v.normalize(), parts.render())
}

/// Bring every point that shares a currency/measure group onto the largest
/// scale word used in that group, e.g. "850,000" next to "2.5 million" becomes
/// 0.85 million.
pub fn align_scales(points: &mut [DataPoint]) {
    let parts: Vec<UnitParts> = points.iter().map(|p| UnitParts::parse(&p.unit)).collect();
    for i in 0..points.len() {
        let group = parts[i].alignment_group();
        if group.2 {
            continue;
        }
        let target = parts
            .iter()
            .filter(|p| p.alignment_group() == group)
            .filter_map(|p| p.scale)
            .max();
        if target.is_some() && parts[i].scale != target {
            let (v, u) = rescale(points[i].value, &points[i].unit, target);
            points[i].value = v;
            points[i].unit = u;
        }
    }
}

fn group_thousands(int_part: &str) -> String {
    let (sign, digits) = match int_part.strip_prefix('-') {
        Some(d) => ("-", d),
        None => ("", int_part),
    };
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    format!("{sign}{out}")
}

/// Human-readable rendering: "23.1%", "3.7 million", "$2.5 billion", "850,000".
pub fn format_quantity(value: Decimal, unit: &str) -> String {
    let parts = UnitParts::parse(unit);
    let text = value.normalize().to_string();
    let number = match text.split_once('.') {
        Some((int, frac)) => format!("{}.{frac}", group_thousands(int)),
        None => group_thousands(&text),
    };
    if parts.percent {
        return format!("{number}%");
    }
    let mut out = String::new();
    if let Some(c) = &parts.currency {
        out.push_str(c);
    }
    out.push_str(&number);
    if let Some(s) = parts.scale {
        out.push(' ');
        out.push_str(s.word());
    }
    if let Some(m) = &parts.measure {
        out.push(' ');
        out.push_str(m);
    }
    out
}

/// One quantity found in running text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantityMatch {
    /// Byte range in the scanned text.
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub quantity: Quantity,
    /// A bare four digit year (1800-2100) with no unit.
    pub is_year: bool,
}

static NUMBER_START_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:US\$|[$€£¥])?\s?[+\-−]?\d[\d,]*(?:\.\d+)?").unwrap()
});

static NUMBER_WORD_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|fifteen|twenty|thirty|forty|fifty|sixty|seventy|eighty|ninety|a hundred|hundred)\s+(thousand|million|billion|trillion)\b",
    )
    .unwrap()
});

static TAIL_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^(?:(?:[kmbt]|bn|mn|tn)\b|\s?(?:thousand|million|billion|trillion)\b|\s(?:K|M|B|bn|mn)\b)?(?:\s?%|\s(?:percent|per cent|dollars?|usd|euros?|yen|km|kilometers|kilometres|miles|kg|kilograms|tons|tonnes|hours|minutes|seconds|days|weeks|months|years)\b)?",
    )
    .unwrap()
});

fn number_word_value(w: &str) -> u32 {
    match w.to_ascii_lowercase().as_str() {
        "one" => 1,
        "two" => 2,
        "three" => 3,
        "four" => 4,
        "five" => 5,
        "six" => 6,
        "seven" => 7,
        "eight" => 8,
        "nine" => 9,
        "ten" => 10,
        "eleven" => 11,
        "twelve" => 12,
        "fifteen" => 15,
        "twenty" => 20,
        "thirty" => 30,
        "forty" => 40,
        "fifty" => 50,
        "sixty" => 60,
        "seventy" => 70,
        "eighty" => 80,
        "ninety" => 90,
        _ => 100,
    }
}

/// Find every quantity in `text`, in order of appearance.
pub fn scan_quantities(text: &str) -> Vec<QuantityMatch> {
    let mut found = Vec::new();
    for m in NUMBER_START_RE.find_iter(text) {
        let raw = m.as_str();
        let mut start = m.start() + (raw.len() - raw.trim_start().len());
        let lead = &text[start..m.end()];
        let first_digit = start + lead.find(|c: char| c.is_ascii_digit()).unwrap();
        // A sign glued to a preceding character is a range dash ("2010-2020").
        if let Some(p) = lead.find(['-', '+', '−']).map(|p| start + p) {
            let before = text[..start].chars().next_back();
            if p == start && before.is_some_and(|c| !c.is_whitespace() && c != '(') {
                start = p + text[p..].chars().next().unwrap().len_utf8();
            }
        }
        let surface_start = start;
        let before = text[..start].chars().next_back();
        if before.is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '.' || c == ',') {
            continue;
        }
        // Short second half of a year span ("2019–20", "2019/20").
        if matches!(before, Some('-' | '–' | '—' | '/'))
            && text[..start].chars().rev().nth(1).is_some_and(|c| c.is_ascii_digit())
            && text[start..m.end()].trim_end_matches([',', '.']).len() <= 2
        {
            continue;
        }
        if before == Some('-') {
            let before2 = text[..start - 1].chars().next_back();
            if before2.is_some_and(|c| c.is_alphabetic()) {
                continue;
            }
        }
        let mut end = m.end();
        // Trailing comma or period belongs to the sentence, not the number.
        while end > first_digit && matches!(text.as_bytes()[end - 1], b',' | b'.') {
            end -= 1;
        }
        let after = &text[end..];
        let tail_len = TAIL_RE.find(after).map_or(0, |t| t.end());
        let full_end = end + tail_len;
        let next = text[full_end..].chars().next();
        if tail_len == 0 && next.is_some_and(|c| c.is_alphabetic()) {
            continue;
        }
        let mut candidate_end = full_end;
        let mut parsed = None;
        while candidate_end >= end {
            let surface = text[surface_start..candidate_end].trim();
            if let Ok(q) = normalize_quantity(surface) {
                parsed = Some((surface.to_string(), q, candidate_end));
                break;
            }
            if candidate_end == end {
                break;
            }
            candidate_end = end;
        }
        let Some((surface, quantity, qend)) = parsed else { continue };
        let digits_only = surface.chars().all(|c| c.is_ascii_digit());
        let is_year = digits_only
            && surface.len() == 4
            && (1800..=2100).contains(&surface.parse::<u32>().unwrap_or(0));
        let lead_ws = text[surface_start..qend].len() - text[surface_start..qend].trim_start().len();
        found.push(QuantityMatch {
            start: surface_start + lead_ws,
            end: qend,
            surface,
            quantity,
            is_year,
        });
    }
    for m in NUMBER_WORD_RE.captures_iter(text) {
        let whole = m.get(0).unwrap();
        let n = number_word_value(&m[1]);
        let q = normalize_quantity(&format!("{n} {}", &m[2])).expect("number word grammar");
        found.push(QuantityMatch {
            start: whole.start(),
            end: whole.end(),
            surface: whole.as_str().to_string(),
            quantity: q,
            is_year: false,
        });
    }
    found.sort_by_key(|q| q.start);
    found
}

/// True when `text` has at least one numeric token.
pub fn has_numeric_token(text: &str) -> bool {
    !scan_quantities(text).is_empty()
}

/// True when every numeric token of `text` is a bare year.
pub fn only_years(text: &str) -> bool {
    let qs = scan_quantities(text);
    !qs.is_empty() && qs.iter().all(|q| q.is_year)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> (String, String) {
        let q = normalize_quantity(s).unwrap();
        (q.value.to_string(), q.unit)
    }

    fn pair(v: &str, u: &str) -> (String, String) {
        (v.to_string(), u.to_string())
    }

    #[test]
    fn style_variants_agree() {
        assert_eq!(q("3.7 million"), pair("3.7", "million"));
        assert_eq!(q("3.7M"), pair("3.7", "million"));
        assert_eq!(q("3,700,000"), pair("3.7", "million"));
        assert_eq!(q("3,000,000"), pair("3", "million"));
        assert_eq!(q("23.1%"), pair("23.1", "%"));
        assert_eq!(q("0"), pair("0", ""));
        assert_eq!(q("850,000"), pair("850000", ""));
    }

    #[test]
    fn currency_is_kept_in_unit() {
        assert_eq!(q("$2.5 billion"), pair("2.5", "$ billion"));
        assert_eq!(q("2.5 billion dollars"), pair("2.5", "$ billion"));
        assert_eq!(q("$500"), pair("500", "$"));
        assert_eq!(q("$3,000,000"), pair("3", "$ million"));
        assert_eq!(q("€4bn"), pair("4", "€ billion"));
    }

    #[test]
    fn rejects_non_quantities() {
        for bad in ["", "abc", "37,00", "1,2345", "3.7 million %", "$5 km", "12.3.4"] {
            assert!(normalize_quantity(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn signs_and_measures() {
        assert_eq!(q("-3.7M"), pair("-3.7", "million"));
        assert_eq!(q("12 km"), pair("12", "km"));
        assert_eq!(q("-0"), pair("0", ""));
        assert_eq!(q("45 percent"), pair("45", "%"));
    }

    #[test]
    fn alignment_uses_largest_scale() {
        let mut pts = vec![
            DataPoint { label: "a".into(), value: Decimal::from(850_000), unit: "".into(), series_key: None },
            DataPoint { label: "b".into(), value: Decimal::new(25, 1), unit: "million".into(), series_key: None },
        ];
        align_scales(&mut pts);
        assert_eq!(pts[0].value.to_string(), "0.85");
        assert_eq!(pts[0].unit, "million");
        assert_eq!(pts[1].unit, "million");
    }

    #[test]
    fn formatting() {
        assert_eq!(format_quantity(Decimal::new(231, 1), "%"), "23.1%");
        assert_eq!(format_quantity(Decimal::from(850000), ""), "850,000");
        assert_eq!(format_quantity(Decimal::new(25, 1), "$ billion"), "$2.5 billion");
        assert_eq!(format_quantity(Decimal::new(37, 1), "million"), "3.7 million");
    }

    #[test]
    fn scanner_finds_tokens_and_years() {
        let t = "From 1999 to 2020, the number of homeschooled students in the U.S. increased from 850,000 students to 2.5 million students.";
        let found = scan_quantities(t);
        let surf: Vec<_> = found.iter().map(|m| m.surface.as_str()).collect();
        assert_eq!(surf, vec!["1999", "2020", "850,000", "2.5 million"]);
        assert!(found[0].is_year && found[1].is_year && !found[2].is_year);
    }

    #[test]
    fn scanner_skips_identifiers_and_spans() {
        let found = scan_quantities("COVID-19 cases rose 25% between 2020-2021 in 5G areas.");
        let surf: Vec<_> = found.iter().map(|m| m.surface.as_str()).collect();
        assert_eq!(surf, vec!["25%", "2020", "2021"]);
        let found = scan_quantities("Between the 2019–20 and 2020/21 school years it rose from 5.4% to 11.1%.");
        let surf: Vec<_> = found.iter().map(|m| m.surface.as_str()).collect();
        assert_eq!(surf, vec!["2019", "2020", "5.4%", "11.1%"]);
    }

    #[test]
    fn scanner_reads_number_words_and_money() {
        let found = scan_quantities("Three million children; revenue hit $2.5 billion, up 3.7M.");
        let surf: Vec<_> = found.iter().map(|m| (m.surface.as_str(), m.quantity.unit.as_str())).collect();
        assert_eq!(
            surf,
            vec![("Three million", "million"), ("$2.5 billion", "$ billion"), ("3.7M", "million")]
        );
    }

    #[test]
    fn year_only_detection() {
        assert!(only_years("Joshua and Samuel are two popular names for boys in 2004"));
        assert!(!only_years("More than 3.7 million children in U.S. in 2024 are homeschooled"));
        assert!(!only_years("No numbers here"));
    }
}
