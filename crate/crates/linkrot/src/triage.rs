//! Hijackability triage of broken links.
//!
//! A broken link is an opportunity report: who could take over the
//! thing this page still trusts? The causes come in a strict
//! precedence order, so every broken result maps to exactly one
//! cause, with `Unclassified` as the only fallback.
//!
//! DNS sits behind [`DnsLookup`] so the whole chain is testable
//! without touching live resolvers; [`StubResolver`] reads a fixture
//! file, [`SystemResolver`] asks the OS.

use std::collections::HashMap;
use std::net::ToSocketAddrs;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::ResourceRef;
use crate::probe::{ProbeKind, ProbeResult};
use crate::suffix::SuffixRules;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriageCause {
    /// Registrable domain no longer resolves: a candidate for
    /// re-registration by anyone.
    ExpiredDomainCandidate,
    /// Host resolves through a CNAME whose target's registrable
    /// domain is gone: the classic dangling-record takeover.
    DanglingSubdomainCandidate,
    /// 404/410 on a versioned or CDN-shaped path: a dependency whose
    /// distribution point went away.
    LibraryGoneCandidate,
    /// The reference text itself is mistyped.
    MalformedUrlTypo,
    ServerError,
    ClientError,
    /// Network-level failure on a host that does resolve.
    NetworkTransient,
    Unclassified,
}

impl std::fmt::Display for TriageCause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            TriageCause::ExpiredDomainCandidate => "expired-domain-candidate",
            TriageCause::DanglingSubdomainCandidate => "dangling-subdomain-candidate",
            TriageCause::LibraryGoneCandidate => "library-gone-candidate",
            TriageCause::MalformedUrlTypo => "malformed-url-typo",
            TriageCause::ServerError => "server-error",
            TriageCause::ClientError => "client-error",
            TriageCause::NetworkTransient => "network-transient",
            TriageCause::Unclassified => "unclassified",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypoSignalKind {
    /// Empty label: doubled, leading, or trailing dot in the host.
    BadDot,
    /// Host label gluing a public suffix straight onto path-like
    /// text: a forgotten `/` after the domain.
    MissingSeparator,
    /// A host label that is really a resource extension.
    SuspiciousHostToken,
}

/// One typo indication, with the byte range of the evidence inside
/// the raw reference text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypoSignal {
    pub kind: TypoSignalKind,
    pub start: usize,
    pub end: usize,
}

impl TypoSignal {
    fn new(kind: TypoSignalKind, start: usize, end: usize) -> Self {
        Self { kind, start, end }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DnsState {
    Resolves,
    NxDomain,
    CnameToNxDomain,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriageVerdict {
    pub reference: ResourceRef,
    pub cause: TriageCause,
    pub signals: Vec<TypoSignal>,
    pub dns_state: DnsState,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TriageError {
    /// Asked to triage a result that is not broken; caller bug.
    #[error("result for {0} is not broken")]
    NotBroken(String),
}

/// Typo heuristics over the raw (pre-normalization) reference text.
///
/// Only the host portion is inspected, and only when the text carries
/// one (absolute or scheme-relative form); a relative path has no
/// host to judge. Transposed letters are not detectable without
/// knowing the intended string, so nothing here attempts it.
pub fn detect_typos(raw: &str, rules: &SuffixRules) -> Vec<TypoSignal> {
    let Some((start, end)) = host_span(raw) else {
        return Vec::new();
    };
    let host = &raw[start..end];
    if host.starts_with('[') || host.parse::<std::net::IpAddr>().is_ok() {
        return Vec::new();
    }
    let mut signals = Vec::new();

    if host.starts_with('.') {
        signals.push(TypoSignal::new(TypoSignalKind::BadDot, start, start + 1));
    }
    if host.len() > 1 && host.ends_with('.') {
        signals.push(TypoSignal::new(TypoSignalKind::BadDot, end - 1, end));
    }
    let bytes = host.as_bytes();
    for i in 0..bytes.len().saturating_sub(1) {
        if bytes[i] == b'.' && bytes[i + 1] == b'.' {
            signals.push(TypoSignal::new(
                TypoSignalKind::BadDot,
                start + i,
                start + i + 2,
            ));
        }
    }

    let mut label_start = start;
    for label in host.split('.') {
        let label_end = label_start + label.len();
        let lower = label.to_ascii_lowercase();
        if RESOURCE_EXTENSIONS.contains(&lower.as_str()) {
            signals.push(TypoSignal::new(
                TypoSignalKind::SuspiciousHostToken,
                label_start,
                label_end,
            ));
        }
        label_start = label_end + 1;
    }

    if let Some(last) = host.rsplit('.').next() {
        let last_start = end - last.len();
        let lower = last.to_ascii_lowercase();
        // A label that is itself a listed suffix is fine; one that
        // starts with a listed suffix and keeps going spells a
        // forgotten separator ("example.comassets/..."). Two-letter
        // heads are skipped: too many real TLDs extend them.
        if !rules.is_single_label_suffix(&lower) {
            for split in (3..lower.len()).rev() {
                if !lower.is_char_boundary(split) {
                    continue;
                }
                let (head, tail) = lower.split_at(split);
                if rules.is_single_label_suffix(head)
                    && !tail.is_empty()
                    && tail.chars().all(|c| c.is_ascii_alphanumeric())
                {
                    signals.push(TypoSignal::new(
                        TypoSignalKind::MissingSeparator,
                        last_start,
                        end,
                    ));
                    break;
                }
            }
        }
    }

    signals
}

const RESOURCE_EXTENSIONS: [&str; 16] = [
    "js", "mjs", "css", "png", "jpg", "jpeg", "gif", "svg", "webp", "ico", "woff", "woff2",
    "ttf", "otf", "mp3", "mp4",
];

/// Byte span of the host portion in a raw URL-like string, tolerant
/// of malformed input. None when the text has no authority component.
fn host_span(raw: &str) -> Option<(usize, usize)> {
    let after_scheme = if let Some(pos) = raw.find("://") {
        pos + 3
    } else if raw.starts_with("//") {
        2
    } else {
        return None;
    };
    let tail = &raw[after_scheme..];
    let authority_len = tail.find(['/', '?', '#']).unwrap_or(tail.len());
    let mut start = after_scheme;
    let mut end = after_scheme + authority_len;
    if start == end {
        return None;
    }
    let authority = &raw[start..end];
    if let Some(at) = authority.rfind('@') {
        start += at + 1;
    }
    let host_with_port = &raw[start..end];
    if host_with_port.starts_with('[') {
        // Bracketed IPv6: keep up to the closing bracket.
        if let Some(close) = host_with_port.find(']') {
            end = start + close + 1;
        }
    } else if let Some(colon) = host_with_port.rfind(':') {
        if host_with_port[colon + 1..].chars().all(|c| c.is_ascii_digit()) {
            end = start + colon;
        }
    }
    (start < end).then_some((start, end))
}

/// Resolver answer for one name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DnsAnswer {
    /// Address records exist.
    Records,
    /// Alias to another name.
    Cname(String),
    /// The name does not exist.
    NxDomain,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("dns lookup failed: {0}")]
pub struct DnsLookupError(pub String);

pub trait DnsLookup {
    fn lookup(&self, host: &str) -> Result<DnsAnswer, DnsLookupError>;
}

/// Fixture-backed resolver. One record per line: `host A`,
/// `host CNAME target`, or `host NXDOMAIN`; `#` starts a comment.
/// Hosts not listed do not exist, which keeps fixtures down to the
/// names they actually care about.
#[derive(Debug, Clone, Default)]
pub struct StubResolver {
    records: HashMap<String, DnsAnswer>,
}

impl StubResolver {
    pub fn from_text(text: &str) -> Result<Self, DnsLookupError> {
        let mut records = HashMap::new();
        for (number, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_ascii_whitespace();
            let host = parts.next().unwrap_or("").to_ascii_lowercase();
            let kind = parts.next().unwrap_or("").to_ascii_uppercase();
            let answer = match kind.as_str() {
                "A" | "AAAA" => DnsAnswer::Records,
                "NXDOMAIN" => DnsAnswer::NxDomain,
                "CNAME" => match parts.next() {
                    Some(target) => DnsAnswer::Cname(target.to_ascii_lowercase()),
                    None => {
                        return Err(DnsLookupError(format!(
                            "line {}: CNAME without target",
                            number + 1
                        )))
                    }
                },
                other => {
                    return Err(DnsLookupError(format!(
                        "line {}: unknown record kind {:?}",
                        number + 1,
                        other
                    )))
                }
            };
            records.insert(host, answer);
        }
        Ok(Self { records })
    }

    pub fn insert(&mut self, host: &str, answer: DnsAnswer) {
        self.records.insert(host.to_ascii_lowercase(), answer);
    }
}

impl DnsLookup for StubResolver {
    fn lookup(&self, host: &str) -> Result<DnsAnswer, DnsLookupError> {
        Ok(self
            .records
            .get(&host.to_ascii_lowercase())
            .cloned()
            .unwrap_or(DnsAnswer::NxDomain))
    }
}

/// OS resolver. Blocking getaddrinfo gives no CNAME visibility, so
/// this resolver can never produce a `Cname` answer; the dangling
/// subdomain state is only reachable with a resolver that exposes
/// aliases (such as a stub fixture).
#[derive(Debug, Clone, Copy, Default)]
pub struct SystemResolver;

impl DnsLookup for SystemResolver {
    fn lookup(&self, host: &str) -> Result<DnsAnswer, DnsLookupError> {
        match (host, 0u16).to_socket_addrs() {
            Ok(mut addrs) => {
                if addrs.next().is_some() {
                    Ok(DnsAnswer::Records)
                } else {
                    Ok(DnsAnswer::NxDomain)
                }
            }
            Err(e) => {
                let message = e.to_string();
                // getaddrinfo reports nonexistence as an error; other
                // failures (resolver outage) must stay Unknown.
                let name_error = message.contains("Name or service not known")
                    || message.contains("No address associated")
                    || message.contains("nodename nor servname")
                    || message.contains("name does not resolve");
                if name_error {
                    Ok(DnsAnswer::NxDomain)
                } else {
                    Err(DnsLookupError(message))
                }
            }
        }
    }
}

const MAX_CNAME_HOPS: usize = 8;

/// DNS health of a host for triage.
///
/// NxDomain: the registrable domain itself is gone (re-registrable).
/// CnameToNxDomain: the host aliases to a name whose registrable
/// domain is gone (claimable). Resolves: everything else that
/// answers, including a record-less subdomain under a live domain,
/// which nobody can register. Unknown: the resolver failed.
pub fn resolve_dns_state(
    host: &str,
    rules: &SuffixRules,
    resolver: &dyn DnsLookup,
) -> DnsState {
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    if host.is_empty() {
        return DnsState::Unknown;
    }
    let registrable = rules.registrable_domain(&host);
    match resolver.lookup(registrable.as_str()) {
        Err(_) => return DnsState::Unknown,
        Ok(DnsAnswer::NxDomain) => return DnsState::NxDomain,
        Ok(_) => {}
    }

    let mut current = host;
    let mut followed_cname = false;
    for _ in 0..=MAX_CNAME_HOPS {
        match resolver.lookup(&current) {
            Err(_) => return DnsState::Unknown,
            Ok(DnsAnswer::Records) => return DnsState::Resolves,
            Ok(DnsAnswer::NxDomain) => {
                if !followed_cname {
                    return DnsState::Resolves;
                }
                let target_domain = rules.registrable_domain(&current);
                return match resolver.lookup(target_domain.as_str()) {
                    Err(_) => DnsState::Unknown,
                    Ok(DnsAnswer::NxDomain) => DnsState::CnameToNxDomain,
                    Ok(_) => DnsState::Resolves,
                };
            }
            Ok(DnsAnswer::Cname(target)) => {
                followed_cname = true;
                current = target.trim_end_matches('.').to_ascii_lowercase();
            }
        }
    }
    // Alias loop or an absurdly long chain.
    DnsState::Unknown
}

/// Version-like path segment: `v2`, `1.2.3`, `3.6.0-beta.1`.
/// A bare number is not enough: `/2024/` is a date, not a release.
fn is_version_segment(segment: &str) -> bool {
    let (core, _suffix) = match segment.split_once('-') {
        Some((c, s)) if !s.is_empty() => (c, Some(s)),
        _ => (segment, None),
    };
    if let Some(rest) = core.strip_prefix('v').or_else(|| core.strip_prefix('V')) {
        !rest.is_empty()
            && rest
                .split('.')
                .all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()))
    } else {
        core.contains('.')
            && core
                .split('.')
                .all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()))
    }
}

const CDN_PATH_MARKERS: [&str; 8] = [
    "/ajax/libs/",
    "/npm/",
    "/gh/",
    "/libs/",
    "/dist/",
    "/package/",
    "/packages/",
    "/releases/",
];

/// Does this path look like a packaged library distribution point?
fn library_shaped_path(path: &str) -> bool {
    if path
        .split('/')
        .any(|segment| !segment.is_empty() && is_version_segment(segment))
    {
        return true;
    }
    let lower = path.to_ascii_lowercase();
    CDN_PATH_MARKERS.iter().any(|m| lower.contains(m))
}

/// Classify one broken result. Precedence, first match wins:
/// typo signals, expired domain, dangling subdomain, gone library
/// (404/410 on a library-shaped path), other client error, server
/// error, network failure on a resolving host, unclassified.
pub fn triage_broken(
    result: &ProbeResult,
    dns_state: DnsState,
    signals: Vec<TypoSignal>,
) -> Result<TriageVerdict, TriageError> {
    if !result.broken {
        return Err(TriageError::NotBroken(
            result.reference.url.as_str().to_string(),
        ));
    }
    let kind = result.outcome.kind;
    let cause = if !signals.is_empty() {
        TriageCause::MalformedUrlTypo
    } else if dns_state == DnsState::NxDomain {
        TriageCause::ExpiredDomainCandidate
    } else if dns_state == DnsState::CnameToNxDomain {
        TriageCause::DanglingSubdomainCandidate
    } else if matches!(kind, ProbeKind::HttpResponse(404 | 410))
        && library_shaped_path(result.reference.url.path())
    {
        TriageCause::LibraryGoneCandidate
    } else if matches!(kind, ProbeKind::HttpResponse(s) if (400..=499).contains(&s)) {
        TriageCause::ClientError
    } else if matches!(kind, ProbeKind::HttpResponse(s) if (500..=599).contains(&s)) {
        TriageCause::ServerError
    } else if matches!(
        kind,
        ProbeKind::Timeout | ProbeKind::ConnectFailure | ProbeKind::TlsFailure
    ) && dns_state == DnsState::Resolves
    {
        TriageCause::NetworkTransient
    } else {
        TriageCause::Unclassified
    };
    Ok(TriageVerdict {
        reference: result.reference.clone(),
        cause,
        signals,
        dns_state,
    })
}
