//! Resource-reference extraction.
//!
//! The static pass scans homepage HTML for elements that cause the
//! browser to fetch something, without executing scripts or parsing
//! CSS. Requests made at runtime (XHR, fetch) are invisible to that
//! pass and arrive through [`ingest_fetch_log`] instead.
//!
//! The tokenizer is deliberately permissive: real homepages ship
//! malformed markup, and a parse problem in one element must never
//! cost the references in the rest of the document.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::urls::{classify_scope, normalize_url, AbsoluteUrl, Scope};
use crate::SuffixRules;

/// What kind of resource a reference loads.
///
/// `Xhr` and `Fetch` only ever originate from dynamic-log ingestion;
/// static extraction cannot observe them.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum ResourceCategory {
    Image,
    Script,
    Stylesheet,
    Font,
    Xhr,
    Fetch,
    Media,
    Document,
    Other,
}

impl ResourceCategory {
    pub const ALL: [ResourceCategory; 9] = [
        ResourceCategory::Image,
        ResourceCategory::Script,
        ResourceCategory::Stylesheet,
        ResourceCategory::Font,
        ResourceCategory::Xhr,
        ResourceCategory::Fetch,
        ResourceCategory::Media,
        ResourceCategory::Document,
        ResourceCategory::Other,
    ];

    /// Presentation name, matching the published taxonomy.
    pub fn label(self) -> &'static str {
        match self {
            ResourceCategory::Image => "Image",
            ResourceCategory::Script => "Script",
            ResourceCategory::Stylesheet => "Stylesheet",
            ResourceCategory::Font => "Font",
            ResourceCategory::Xhr => "XMLHttpRequest",
            ResourceCategory::Fetch => "Fetch",
            ResourceCategory::Media => "Media",
            ResourceCategory::Document => "Document",
            ResourceCategory::Other => "Other",
        }
    }
}

impl std::fmt::Display for ResourceCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionOrigin {
    StaticHtml,
    DynamicLog,
}

/// One extracted reference: the page it came from, the URL it points
/// at, and how it was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceRef {
    pub origin_page: AbsoluteUrl,
    pub url: AbsoluteUrl,
    pub category: ResourceCategory,
    pub scope: Scope,
    pub extraction_origin: ExtractionOrigin,
    /// Pre-normalization text, kept verbatim for typo triage.
    pub raw_text: String,
}

/// A raw reference that failed URL normalization. Excluded from the
/// probe set but kept so triage can still inspect the text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRef {
    pub raw_text: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExtractionResult {
    /// Deduplicated by (url, category); document order, first
    /// occurrence wins.
    pub refs: Vec<ResourceRef>,
    pub rejects: Vec<RejectedRef>,
}

/// Static extraction pass over one homepage body.
///
/// Element to category: `img` and `picture > source` (src and srcset
/// entries) are Image; `script[src]` is Script; `link` is Stylesheet
/// when rel contains `stylesheet`, Font when rel contains `preload`
/// with `as=font`, Other for any other href; `audio`/`video` and
/// their `source` children are Media; `iframe`/`frame` are Document;
/// anchors and every other element carrying a fetchable URL attribute
/// are Other.
///
/// Best effort by construction: comments and script/style bodies are
/// skipped, broken markup in one element never aborts the rest, and a
/// page yielding zero refs is a valid result.
pub fn extract_refs(html: &str, origin: &AbsoluteUrl, rules: &SuffixRules) -> ExtractionResult {
    let mut out = ExtractionResult::default();
    let mut seen: HashSet<(String, ResourceCategory)> = HashSet::new();
    let mut seen_rejects: HashSet<String> = HashSet::new();

    for candidate in scan_candidates(html) {
        let raw = candidate.raw.trim();
        if raw.is_empty() {
            continue;
        }
        match normalize_url(raw, origin) {
            Ok(url) => {
                if seen.insert((url.as_str().to_string(), candidate.category)) {
                    let scope = classify_scope(&url, origin, rules);
                    out.refs.push(ResourceRef {
                        origin_page: origin.clone(),
                        url,
                        category: candidate.category,
                        scope,
                        extraction_origin: ExtractionOrigin::StaticHtml,
                        raw_text: raw.to_string(),
                    });
                }
            }
            Err(err) => {
                if seen_rejects.insert(raw.to_string()) {
                    out.rejects.push(RejectedRef {
                        raw_text: raw.to_string(),
                        reason: err.to_string(),
                    });
                }
            }
        }
    }
    out
}

struct Candidate {
    raw: String,
    category: ResourceCategory,
}

/// Containers whose `source` children change category.
#[derive(Clone, Copy, PartialEq)]
enum Container {
    Picture,
    Audio,
    Video,
}

fn scan_candidates(html: &str) -> Vec<Candidate> {
    let bytes = html.as_bytes();
    let mut out = Vec::new();
    let mut containers: Vec<Container> = Vec::new();
    let mut i = 0;

    while let Some(off) = find(bytes, i, b"<") {
        i = off + 1;
        if bytes[off..].starts_with(b"<!--") {
            i = find(bytes, off + 4, b"-->").map_or(bytes.len(), |p| p + 3);
            continue;
        }
        if bytes[off..].starts_with(b"<!") || bytes[off..].starts_with(b"<?") {
            i = find(bytes, off + 2, b">").map_or(bytes.len(), |p| p + 1);
            continue;
        }
        if bytes[off..].starts_with(b"</") {
            let (name, after) = read_name(html, off + 2);
            match name.as_str() {
                "picture" => pop_container(&mut containers, Container::Picture),
                "audio" => pop_container(&mut containers, Container::Audio),
                "video" => pop_container(&mut containers, Container::Video),
                _ => {}
            }
            i = find(bytes, after, b">").map_or(bytes.len(), |p| p + 1);
            continue;
        }
        let (name, after) = read_name(html, off + 1);
        if name.is_empty() {
            continue;
        }
        let (attrs, tag_end, self_closed) = read_attrs(html, after);
        i = tag_end;

        emit_tag(&name, &attrs, &containers, &mut out);

        match name.as_str() {
            "picture" if !self_closed => containers.push(Container::Picture),
            "audio" if !self_closed => containers.push(Container::Audio),
            "video" if !self_closed => containers.push(Container::Video),
            // RAWTEXT elements: their bodies are not markup.
            "script" | "style" => {
                let close: &[u8] = if name == "script" {
                    b"</script"
                } else {
                    b"</style"
                };
                i = find_ci(bytes, i, close).unwrap_or(bytes.len());
            }
            _ => {}
        }
    }
    out
}

fn emit_tag(
    name: &str,
    attrs: &[(String, String)],
    containers: &[Container],
    out: &mut Vec<Candidate>,
) {
    let attr = |key: &str| -> Option<&str> {
        attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    };
    let mut push = |raw: &str, category| {
        out.push(Candidate {
            raw: raw.to_string(),
            category,
        })
    };

    match name {
        "img" => {
            if let Some(src) = attr("src") {
                push(src, ResourceCategory::Image);
            }
            if let Some(srcset) = attr("srcset") {
                for url in srcset_urls(srcset) {
                    push(url, ResourceCategory::Image);
                }
            }
        }
        "source" => {
            let category = match containers.last() {
                Some(Container::Picture) => ResourceCategory::Image,
                Some(Container::Audio) | Some(Container::Video) => ResourceCategory::Media,
                None => ResourceCategory::Other,
            };
            if let Some(src) = attr("src") {
                push(src, category);
            }
            if let Some(srcset) = attr("srcset") {
                for url in srcset_urls(srcset) {
                    push(url, category);
                }
            }
        }
        "script" => {
            if let Some(src) = attr("src") {
                push(src, ResourceCategory::Script);
            }
        }
        "link" => {
            if let Some(href) = attr("href") {
                let rel = attr("rel").unwrap_or("");
                let rel_has = |token: &str| {
                    rel.split_ascii_whitespace()
                        .any(|t| t.eq_ignore_ascii_case(token))
                };
                let category = if rel_has("stylesheet") {
                    ResourceCategory::Stylesheet
                } else if rel_has("preload")
                    && attr("as").is_some_and(|a| a.eq_ignore_ascii_case("font"))
                {
                    ResourceCategory::Font
                } else {
                    ResourceCategory::Other
                };
                push(href, category);
            }
        }
        "audio" | "video" => {
            if let Some(src) = attr("src") {
                push(src, ResourceCategory::Media);
            }
            if name == "video" {
                if let Some(poster) = attr("poster") {
                    push(poster, ResourceCategory::Media);
                }
            }
        }
        "iframe" | "frame" => {
            if let Some(src) = attr("src") {
                push(src, ResourceCategory::Document);
            }
        }
        "a" | "area" => {
            if let Some(href) = attr("href") {
                push(href, ResourceCategory::Other);
            }
        }
        "embed" | "track" | "input" => {
            if let Some(src) = attr("src") {
                push(src, ResourceCategory::Other);
            }
        }
        "object" => {
            if let Some(data) = attr("data") {
                push(data, ResourceCategory::Other);
            }
        }
        _ => {}
    }
}

fn pop_container(stack: &mut Vec<Container>, which: Container) {
    if let Some(pos) = stack.iter().rposition(|c| *c == which) {
        stack.truncate(pos);
    }
}

fn find(haystack: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    if from >= haystack.len() {
        return None;
    }
    haystack[from..]
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|p| p + from)
}

fn find_ci(haystack: &[u8], from: usize, needle: &[u8]) -> Option<usize> {
    if from >= haystack.len() {
        return None;
    }
    haystack[from..]
        .windows(needle.len())
        .position(|w| w.eq_ignore_ascii_case(needle))
        .map(|p| p + from)
}

/// Tag or attribute name: ASCII letters, digits, `-`, `_`, `:`.
/// Returned lowercased with the index just past it.
fn read_name(html: &str, from: usize) -> (String, usize) {
    let bytes = html.as_bytes();
    let mut end = from;
    while end < bytes.len()
        && (bytes[end].is_ascii_alphanumeric() || matches!(bytes[end], b'-' | b'_' | b':'))
    {
        end += 1;
    }
    (html[from..end].to_ascii_lowercase(), end)
}

/// Parse attributes until `>`; returns (attrs, index past `>`,
/// self-closed). Duplicate attribute names keep the first value.
fn read_attrs(html: &str, from: usize) -> (Vec<(String, String)>, usize, bool) {
    let bytes = html.as_bytes();
    let mut attrs = Vec::new();
    let mut i = from;
    let mut self_closed = false;

    loop {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= bytes.len() {
            return (attrs, i, self_closed);
        }
        match bytes[i] {
            b'>' => return (attrs, i + 1, self_closed),
            b'/' => {
                self_closed = true;
                i += 1;
                continue;
            }
            _ => {}
        }
        let (name, after) = read_name(html, i);
        if name.is_empty() {
            // Junk byte; skip it rather than abort the tag.
            i += 1;
            continue;
        }
        i = after;
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let mut value = String::new();
        if i < bytes.len() && bytes[i] == b'=' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'"' || bytes[i] == b'\'') {
                let quote = bytes[i];
                let start = i + 1;
                let end = find(bytes, start, &[quote]).unwrap_or(bytes.len());
                value = decode_entities(&html[start..end]);
                i = (end + 1).min(bytes.len());
            } else {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' {
                    i += 1;
                }
                value = decode_entities(&html[start..i]);
            }
        }
        if !attrs.iter().any(|(k, _)| *k == name) {
            attrs.push((name, value));
        }
    }
}

/// Minimal entity decoding: the five named entities plus numeric
/// references. Anything unrecognized passes through verbatim.
fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let semi = match rest.find(';') {
            Some(p) if p <= 12 => p,
            _ => {
                out.push('&');
                rest = &rest[1..];
                continue;
            }
        };
        let entity = &rest[1..semi];
        let decoded = match entity {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            _ => entity
                .strip_prefix('#')
                .and_then(|num| {
                    if let Some(hex) = num.strip_prefix('x').or_else(|| num.strip_prefix('X')) {
                        u32::from_str_radix(hex, 16).ok()
                    } else {
                        num.parse().ok()
                    }
                })
                .and_then(char::from_u32),
        };
        match decoded {
            Some(c) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// URLs from a srcset value: comma-separated candidates, each a URL
/// followed by an optional descriptor.
fn srcset_urls(srcset: &str) -> Vec<&str> {
    srcset
        .split(',')
        .filter_map(|part| part.split_ascii_whitespace().next())
        .filter(|u| !u.is_empty())
        .collect()
}

/// One line of a dynamic fetch log: JSON object {page, url, initiator}.
#[derive(Debug, Deserialize)]
struct FetchLogRecord {
    page: Option<String>,
    url: Option<String>,
    initiator: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct FetchLogIngest {
    pub refs: Vec<ResourceRef>,
    /// Records skipped for missing/invalid fields. Skipping never
    /// aborts the rest of the log.
    pub malformed: usize,
}

/// Ingest runtime-request log lines for one origin page.
///
/// A record belongs to the origin when its `page` field shares the
/// origin's registrable domain, or is absent. Records for other pages
/// are ignored without counting as malformed. Output categories are
/// Xhr and Fetch only, deduplicated by (url, category).
pub fn ingest_fetch_log<'a, I>(lines: I, origin: &AbsoluteUrl, rules: &SuffixRules) -> FetchLogIngest
where
    I: IntoIterator<Item = &'a str>,
{
    let origin_domain = origin.registrable_domain(rules);
    let mut out = FetchLogIngest::default();
    let mut seen: HashSet<(String, ResourceCategory)> = HashSet::new();

    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let record: FetchLogRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(_) => {
                out.malformed += 1;
                continue;
            }
        };
        if let Some(page) = &record.page {
            match AbsoluteUrl::parse(page) {
                Ok(page_url) => {
                    if page_url.registrable_domain(rules) != origin_domain {
                        continue;
                    }
                }
                Err(_) => {
                    out.malformed += 1;
                    continue;
                }
            }
        }
        let category = match record.initiator.as_deref().map(str::to_ascii_lowercase) {
            Some(ref s) if s == "xhr" => ResourceCategory::Xhr,
            Some(ref s) if s == "fetch" => ResourceCategory::Fetch,
            _ => {
                out.malformed += 1;
                continue;
            }
        };
        let Some(raw) = record.url.as_deref() else {
            out.malformed += 1;
            continue;
        };
        let url = match normalize_url(raw, origin) {
            Ok(u) => u,
            Err(_) => {
                out.malformed += 1;
                continue;
            }
        };
        if seen.insert((url.as_str().to_string(), category)) {
            let scope = classify_scope(&url, origin, rules);
            out.refs.push(ResourceRef {
                origin_page: origin.clone(),
                url,
                category,
                scope,
                extraction_origin: ExtractionOrigin::DynamicLog,
                raw_text: raw.trim().to_string(),
            });
        }
    }
    out
}

/// Category from a Content-Type header value, parameters ignored.
///
/// Used as a cross-check against the element-derived category; the
/// element category always wins and a disagreement is only flagged.
pub fn category_from_content_type(content_type: &str) -> ResourceCategory {
    let media_type = content_type
        .split(';')
        .next()
        .unwrap_or("")
        .trim()
        .to_ascii_lowercase();
    if media_type.starts_with("image/") {
        ResourceCategory::Image
    } else if matches!(
        media_type.as_str(),
        "text/javascript" | "application/javascript" | "application/x-javascript"
    ) {
        ResourceCategory::Script
    } else if media_type == "text/css" {
        ResourceCategory::Stylesheet
    } else if media_type.starts_with("font/") || media_type.starts_with("application/font-") {
        ResourceCategory::Font
    } else if media_type.starts_with("audio/") || media_type.starts_with("video/") {
        ResourceCategory::Media
    } else if media_type == "text/html" {
        ResourceCategory::Document
    } else {
        ResourceCategory::Other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> AbsoluteUrl {
        AbsoluteUrl::parse("https://site.com/").unwrap()
    }

    fn extract(html: &str) -> ExtractionResult {
        extract_refs(html, &origin(), &SuffixRules::bundled())
    }

    #[test]
    fn img_absolute_external() {
        let r = extract(r#"<img src="https://x.com/a.png">"#);
        assert_eq!(r.refs.len(), 1);
        assert_eq!(r.refs[0].category, ResourceCategory::Image);
        assert_eq!(r.refs[0].scope, Scope::External);
        assert_eq!(r.refs[0].raw_text, "https://x.com/a.png");
    }

    #[test]
    fn script_relative_internal() {
        let r = extract(r#"<script src="/j/app.js"></script>"#);
        assert_eq!(r.refs.len(), 1);
        assert_eq!(r.refs[0].url.as_str(), "https://site.com/j/app.js");
        assert_eq!(r.refs[0].category, ResourceCategory::Script);
        assert_eq!(r.refs[0].scope, Scope::Internal);
    }

    #[test]
    fn duplicate_url_same_category_deduped() {
        let r = extract(r#"<img src="/a.png"><img src="/a.png">"#);
        assert_eq!(r.refs.len(), 1);
    }

    #[test]
    fn same_url_different_category_kept() {
        let r = extract(r#"<img src="/x"><a href="/x">x</a>"#);
        assert_eq!(r.refs.len(), 2);
    }

    #[test]
    fn link_rel_variants() {
        let r = extract(concat!(
            r#"<link rel="stylesheet" href="/s.css">"#,
            r#"<link rel="preload" as="font" href="/f.woff2">"#,
            r#"<link rel="preload" as="style" href="/p.css">"#,
            r#"<link rel="icon" href="/i.ico">"#,
        ));
        let cats: Vec<_> = r.refs.iter().map(|x| x.category).collect();
        assert_eq!(
            cats,
            vec![
                ResourceCategory::Stylesheet,
                ResourceCategory::Font,
                ResourceCategory::Other,
                ResourceCategory::Other,
            ]
        );
    }

    #[test]
    fn source_category_follows_container() {
        let r = extract(concat!(
            r#"<picture><source srcset="/p1.webp 1x, /p2.webp 2x"></picture>"#,
            r#"<video><source src="/v.mp4"></video>"#,
            r#"<audio><source src="/a.ogg"></audio>"#,
            r#"<source src="/stray.bin">"#,
        ));
        let cats: Vec<_> = r
            .refs
            .iter()
            .map(|x| (x.url.path().to_string(), x.category))
            .collect();
        assert_eq!(
            cats,
            vec![
                ("/p1.webp".into(), ResourceCategory::Image),
                ("/p2.webp".into(), ResourceCategory::Image),
                ("/v.mp4".into(), ResourceCategory::Media),
                ("/a.ogg".into(), ResourceCategory::Media),
                ("/stray.bin".into(), ResourceCategory::Other),
            ]
        );
    }

    #[test]
    fn iframe_and_anchor() {
        let r = extract(r#"<iframe src="https://ads.example.net/f"></iframe><a href="/about">x</a>"#);
        assert_eq!(r.refs[0].category, ResourceCategory::Document);
        assert_eq!(r.refs[1].category, ResourceCategory::Other);
    }

    #[test]
    fn comments_and_script_bodies_skipped() {
        let r = extract(concat!(
            r#"<!-- <img src="/ghost.png"> -->"#,
            r#"<script>var markup = "<img src=/inline.png>";</script>"#,
            r#"<img src="/real.png">"#,
        ));
        assert_eq!(r.refs.len(), 1);
        assert_eq!(r.refs[0].url.path(), "/real.png");
    }

    #[test]
    fn broken_element_does_not_abort_rest() {
        let r = extract(concat!(
            r#"<img src="https://exa mple.com/x.png">"#,
            r#"<a href="javascript:void(0)">x</a>"#,
            r#"<img src="/ok.png">"#,
        ));
        assert_eq!(r.refs.len(), 1);
        assert_eq!(r.refs[0].url.path(), "/ok.png");
        assert_eq!(r.rejects.len(), 2);
    }

    #[test]
    fn entities_decoded_in_attribute_values() {
        let r = extract(r#"<a href="/a?x=1&amp;y=2">x</a>"#);
        assert_eq!(r.refs[0].url.query(), Some("x=1&y=2"));
    }

    #[test]
    fn unquoted_and_single_quoted_attributes() {
        let r = extract(r#"<img src=/u.png alt=x><img src='/q.png'>"#);
        let paths: Vec<_> = r.refs.iter().map(|x| x.url.path()).collect();
        assert_eq!(paths, vec!["/u.png", "/q.png"]);
    }

    #[test]
    fn extraction_is_deterministic() {
        let html = r#"<img src="/a.png"><script src="/b.js"></script><a href="/c">c</a>"#;
        let a = extract(html);
        let b = extract(html);
        assert_eq!(a.refs, b.refs);
    }

    #[test]
    fn static_pass_never_emits_runtime_categories() {
        let html = r#"<img src="/a.png"><a href="/xhr">x</a><link rel="x" href="/fetch">"#;
        for r in extract(html).refs {
            assert!(!matches!(
                r.category,
                ResourceCategory::Xhr | ResourceCategory::Fetch
            ));
        }
    }

    #[test]
    fn fetch_log_ingestion() {
        let lines = vec![
            r#"{"page":"https://site.com/","url":"https://api.ex.com/v1","initiator":"xhr"}"#,
            r#"{"page":"https://www.site.com/","url":"https://cdn.ex.com/cfg.json","initiator":"fetch"}"#,
            r#"{"page":"https://other.org/","url":"https://api.ex.com/v2","initiator":"xhr"}"#,
            r#"{"page":"https://site.com/","initiator":"xhr"}"#,
            r#"{"page":"https://site.com/","url":"https://api.ex.com/v3","initiator":"beacon"}"#,
            "not json at all",
        ];
        let got = ingest_fetch_log(lines, &origin(), &SuffixRules::bundled());
        assert_eq!(got.refs.len(), 2);
        assert_eq!(got.refs[0].category, ResourceCategory::Xhr);
        assert_eq!(got.refs[0].extraction_origin, ExtractionOrigin::DynamicLog);
        assert_eq!(got.refs[1].category, ResourceCategory::Fetch);
        assert_eq!(got.malformed, 3);
    }

    #[test]
    fn fetch_log_dedups_within_itself() {
        let lines = vec![
            r#"{"url":"https://api.ex.com/v1","initiator":"xhr"}"#,
            r#"{"url":"https://api.ex.com/v1","initiator":"xhr"}"#,
            r#"{"url":"https://api.ex.com/v1","initiator":"fetch"}"#,
        ];
        let got = ingest_fetch_log(lines, &origin(), &SuffixRules::bundled());
        assert_eq!(got.refs.len(), 2);
    }

    #[test]
    fn content_type_mapping() {
        use ResourceCategory::*;
        let cases = [
            ("image/webp; charset=binary", Image),
            ("text/css", Stylesheet),
            ("", Other),
            ("text/javascript", Script),
            ("application/x-javascript", Script),
            ("font/woff2", Font),
            ("application/font-woff", Font),
            ("AUDIO/mpeg", Media),
            ("video/mp4", Media),
            ("text/html; charset=utf-8", Document),
            ("application/json", Other),
        ];
        for (ct, want) in cases {
            assert_eq!(category_from_content_type(ct), want, "{ct:?}");
        }
    }
}
