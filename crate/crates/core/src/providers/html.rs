//! Article text from HTML: visible text blocks in document order, plus the
//! title and publication year when the page declares them.

use std::sync::LazyLock;

use regex::Regex;
use scraper::{ElementRef, Html, Node, Selector};

use super::{FetchedPage, PageMetadata};

const BLOCK_TAGS: &[&str] = &[
    "p", "h1", "h2", "h3", "h4", "h5", "h6", "li", "blockquote", "pre", "figcaption", "td", "th", "dd",
    "dt", "div", "section", "article", "header", "footer", "aside", "nav", "main", "table", "ul", "ol",
    "figure", "form",
];

const SKIPPED_TAGS: &[&str] = &["script", "style", "noscript", "template", "svg", "head", "iframe"];

static YEAR_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(19[5-9]\d|20\d\d)\b").unwrap());

fn is_block(el: &ElementRef) -> bool {
    BLOCK_TAGS.contains(&el.value().name())
}

fn has_block_descendant(el: &ElementRef) -> bool {
    el.descendants()
        .skip(1)
        .filter_map(ElementRef::wrap)
        .any(|e| is_block(&e) && !SKIPPED_TAGS.contains(&e.value().name()))
}

fn collapse(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn visible_text(el: ElementRef) -> String {
    let mut out = String::new();
    for node in el.descendants() {
        if let Node::Text(t) = node.value() {
            let hidden = node
                .ancestors()
                .filter_map(ElementRef::wrap)
                .any(|a| SKIPPED_TAGS.contains(&a.value().name()));
            if !hidden {
                out.push_str(t);
                out.push(' ');
            }
        }
    }
    collapse(&out)
}

fn collect_blocks(el: ElementRef, out: &mut Vec<String>) {
    for child in el.children().filter_map(ElementRef::wrap) {
        let name = child.value().name();
        if SKIPPED_TAGS.contains(&name) {
            continue;
        }
        if is_block(&child) && !has_block_descendant(&child) {
            let text = visible_text(child);
            if !text.is_empty() {
                out.push(text);
            }
        } else {
            collect_blocks(child, out);
        }
    }
}

fn meta_content(doc: &Html, selector: &str) -> Option<String> {
    let sel = Selector::parse(selector).ok()?;
    doc.select(&sel)
        .filter_map(|e| e.value().attr("content").or_else(|| e.value().attr("datetime")))
        .map(str::to_string)
        .find(|s| !s.trim().is_empty())
}

pub fn host_of(url: &str) -> String {
    url::Url::parse(url)
        .ok()
        .and_then(|u| u.host_str().map(|h| h.trim_start_matches("www.").to_string()))
        .unwrap_or_default()
}

/// Parse a fetched HTML page. Boilerplate is kept; filtering it is the
/// extraction stage's job.
pub fn parse_page(html: &str, url: &str) -> FetchedPage {
    let doc = Html::parse_document(html);
    let title = meta_content(&doc, r#"meta[property="og:title"]"#)
        .or_else(|| {
            let sel = Selector::parse("title").unwrap();
            doc.select(&sel).next().map(|e| collapse(&e.text().collect::<String>())).filter(|t| !t.is_empty())
        })
        .or_else(|| {
            let sel = Selector::parse("h1").unwrap();
            doc.select(&sel).next().map(visible_text)
        })
        .unwrap_or_default();
    let published_year = [
        r#"meta[property="article:published_time"]"#,
        r#"meta[name="date"]"#,
        r#"meta[name="pubdate"]"#,
        r#"meta[itemprop="datePublished"]"#,
        "time[datetime]",
    ]
    .iter()
    .filter_map(|s| meta_content(&doc, s))
    .find_map(|v| YEAR_RE.captures(&v).and_then(|c| c[1].parse().ok()));

    let mut paragraphs = Vec::new();
    let body_sel = Selector::parse("body").unwrap();
    if let Some(body) = doc.select(&body_sel).next() {
        collect_blocks(body, &mut paragraphs);
    }
    FetchedPage {
        paragraphs,
        metadata: PageMetadata { title: collapse(&title), published_year, source_domain: host_of(url) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_in_source_order() {
        let html = r#"<html><head><title>Homeschool boom</title>
            <meta property="article:published_time" content="2024-03-05T10:00:00Z"></head>
            <body><nav><ul><li>Home</li><li>News</li></ul></nav>
            <article><h1>Homeschool boom</h1><p>First   para.</p><div><p>Second <b>bold</b> para.</p></div>
            <script>var x = 1;</script><p>Third.</p></article><footer>© 2024</footer></body></html>"#;
        let page = parse_page(html, "https://www.example.com/a");
        assert_eq!(
            page.paragraphs,
            vec!["Home", "News", "Homeschool boom", "First para.", "Second bold para.", "Third.", "© 2024"]
        );
        assert_eq!(page.metadata.title, "Homeschool boom");
        assert_eq!(page.metadata.published_year, Some(2024));
        assert_eq!(page.metadata.source_domain, "example.com");
    }

    #[test]
    fn empty_body_has_no_paragraphs() {
        let page = parse_page("<html><head><title>t</title></head><body></body></html>", "https://x.org/");
        assert!(page.paragraphs.is_empty());
        assert_eq!(page.metadata.title, "t");
        assert_eq!(page.metadata.published_year, None);
    }
}
