//! HTTP probing with bounded concurrency and per-host politeness.
//!
//! Each unique URL gets exactly one GET per attempt: redirects are
//! never followed (a 301 or 302 is itself the recorded status, and the
//! allow set below is only coherent over first-hop statuses), the body
//! is discarded after the headers, and network-level failures are kept
//! apart by where the attempt died: name resolution, TCP connect, TLS
//! handshake, or the overall deadline.
//!
//! The broken-link rule: an HTTP status outside {200, 301, 302, 304}
//! is broken, and every network-level failure is broken. An NXDOMAIN
//! reference is the central hijack case, so a rule stated over status
//! codes alone would misclassify exactly the links that matter.

use std::collections::HashMap;
use std::net::{IpAddr, SocketAddr};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::io::{AsyncRead, AsyncReadExt, AsyncWrite, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio::sync::Semaphore;

use crate::extract::{category_from_content_type, ResourceCategory, ResourceRef};
use crate::urls::AbsoluteUrl;

/// How a probe ended. Exactly one status exists iff the server
/// answered at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    HttpResponse(u16),
    DnsFailure,
    ConnectFailure,
    TlsFailure,
    Timeout,
}

impl ProbeKind {
    pub fn is_network_error(self) -> bool {
        !matches!(self, ProbeKind::HttpResponse(_))
    }

    /// Flat representation for persistence: kind tag plus optional
    /// status.
    pub fn split(self) -> (OutcomeKind, Option<u16>) {
        match self {
            ProbeKind::HttpResponse(s) => (OutcomeKind::HttpResponse, Some(s)),
            ProbeKind::DnsFailure => (OutcomeKind::DnsFailure, None),
            ProbeKind::ConnectFailure => (OutcomeKind::ConnectFailure, None),
            ProbeKind::TlsFailure => (OutcomeKind::TlsFailure, None),
            ProbeKind::Timeout => (OutcomeKind::Timeout, None),
        }
    }

    pub fn from_parts(kind: OutcomeKind, status: Option<u16>) -> Option<ProbeKind> {
        match (kind, status) {
            (OutcomeKind::HttpResponse, Some(s)) => Some(ProbeKind::HttpResponse(s)),
            (OutcomeKind::DnsFailure, None) => Some(ProbeKind::DnsFailure),
            (OutcomeKind::ConnectFailure, None) => Some(ProbeKind::ConnectFailure),
            (OutcomeKind::TlsFailure, None) => Some(ProbeKind::TlsFailure),
            (OutcomeKind::Timeout, None) => Some(ProbeKind::Timeout),
            _ => None,
        }
    }
}

/// Kind tag as persisted in scan records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    HttpResponse,
    DnsFailure,
    ConnectFailure,
    TlsFailure,
    Timeout,
}

impl std::fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            OutcomeKind::HttpResponse => "http response",
            OutcomeKind::DnsFailure => "dns failure",
            OutcomeKind::ConnectFailure => "connect failure",
            OutcomeKind::TlsFailure => "tls failure",
            OutcomeKind::Timeout => "timeout",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub url: AbsoluteUrl,
    pub kind: ProbeKind,
    /// Content-Type header value, present only with an HTTP response
    /// that carried one.
    pub content_type: Option<String>,
    /// Wall-clock duration of the final attempt.
    pub latency_ms: u64,
    pub fetched_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub reference: ResourceRef,
    pub outcome: ProbeOutcome,
    pub broken: bool,
    /// Category implied by the Content-Type header, as a cross-check.
    /// The element-derived category wins; disagreement only sets
    /// `category_mismatch`.
    pub header_category: Option<ResourceCategory>,
    pub category_mismatch: bool,
}

/// The allow set. First-hop redirects count as alive.
pub fn classify_broken(outcome: &ProbeOutcome) -> bool {
    match outcome.kind {
        ProbeKind::HttpResponse(status) => !matches!(status, 200 | 301 | 302 | 304),
        _ => true,
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{message}")]
pub struct ConfigError {
    pub message: String,
}

fn config_err(message: impl Into<String>) -> ConfigError {
    ConfigError {
        message: message.into(),
    }
}

/// Crawl parameters. The defaults are deliberate and recorded in the
/// run manifest: 64 in-flight requests overall, 2 per host, a 15 s
/// deadline per probe, and one retry on network errors only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub concurrency: usize,
    pub per_host_limit: usize,
    pub timeout_secs: f64,
    pub user_agent: String,
    /// Re-attempts on network-error kinds. HTTP statuses are the
    /// measurement and are never retried.
    pub retries: u32,
    /// Static name resolution, curl-style: exact host, or `*.suffix`
    /// matching the suffix and everything under it. Used to pin scan
    /// targets to a fixture or a known address.
    #[serde(default, skip_serializing_if = "HashMap::is_empty")]
    pub host_overrides: HashMap<String, SocketAddr>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            concurrency: 64,
            per_host_limit: 2,
            timeout_secs: 15.0,
            user_agent: format!(
                "linkrot/{} (broken-link audit; set --user-agent to add operator contact)",
                env!("CARGO_PKG_VERSION")
            ),
            retries: 1,
            host_overrides: HashMap::new(),
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.concurrency == 0 {
            return Err(config_err("concurrency must be at least 1"));
        }
        if self.per_host_limit == 0 {
            return Err(config_err("per-host limit must be at least 1"));
        }
        if self.per_host_limit > self.concurrency {
            return Err(config_err(format!(
                "per-host limit {} exceeds concurrency {}",
                self.per_host_limit, self.concurrency
            )));
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(config_err("timeout must be positive"));
        }
        if self.user_agent.trim().is_empty() {
            return Err(config_err("user agent must be non-empty"));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    fn override_for(&self, host: &str) -> Option<SocketAddr> {
        if let Some(addr) = self.host_overrides.get(host) {
            return Some(*addr);
        }
        for (pattern, addr) in &self.host_overrides {
            if let Some(suffix) = pattern.strip_prefix("*.") {
                if host == suffix || host.ends_with(&format!(".{suffix}")) {
                    return Some(*addr);
                }
            }
        }
        None
    }
}

#[derive(Debug)]
enum Fail {
    Dns,
    Connect,
    Tls,
}

/// One probe: GET, no redirect following, body discarded, overall
/// deadline `config.timeout()`, network errors retried up to
/// `config.retries` times. A server that answers with something other
/// than HTTP counts as a connect failure.
pub async fn probe(url: &AbsoluteUrl, config: &ScanConfig) -> ProbeOutcome {
    let mut attempt = 0u32;
    loop {
        let started = Instant::now();
        let (kind, content_type) =
            match tokio::time::timeout(config.timeout(), attempt_once(url, config)).await {
                Err(_) => (ProbeKind::Timeout, None),
                Ok(Ok((status, content_type))) => (ProbeKind::HttpResponse(status), content_type),
                Ok(Err(Fail::Dns)) => (ProbeKind::DnsFailure, None),
                Ok(Err(Fail::Connect)) => (ProbeKind::ConnectFailure, None),
                Ok(Err(Fail::Tls)) => (ProbeKind::TlsFailure, None),
            };
        if kind.is_network_error() && attempt < config.retries {
            attempt += 1;
            continue;
        }
        return ProbeOutcome {
            url: url.clone(),
            kind,
            content_type,
            latency_ms: started.elapsed().as_millis() as u64,
            fetched_at: Utc::now(),
        };
    }
}

async fn attempt_once(
    url: &AbsoluteUrl,
    config: &ScanConfig,
) -> Result<(u16, Option<String>), Fail> {
    let addr = resolve_target(url, config).await?;
    let stream = TcpStream::connect(addr).await.map_err(|_| Fail::Connect)?;
    if url.is_https() {
        let name = rustls::pki_types::ServerName::try_from(bare_host(url.host()).to_string())
            .map_err(|_| Fail::Tls)?;
        let mut tls = tls_connector()
            .connect(name, stream)
            .await
            .map_err(|_| Fail::Tls)?;
        http_exchange(&mut tls, url, config).await
    } else {
        let mut stream = stream;
        http_exchange(&mut stream, url, config).await
    }
}

/// IPv6 URL hosts keep their brackets; strip them for the socket and
/// TLS layers.
fn bare_host(host: &str) -> &str {
    host.strip_prefix('[')
        .and_then(|h| h.strip_suffix(']'))
        .unwrap_or(host)
}

async fn resolve_target(url: &AbsoluteUrl, config: &ScanConfig) -> Result<SocketAddr, Fail> {
    if let Some(addr) = config.override_for(url.host()) {
        return Ok(addr);
    }
    let host = bare_host(url.host());
    let port = url.port_or_default();
    if let Ok(ip) = host.parse::<IpAddr>() {
        return Ok(SocketAddr::new(ip, port));
    }
    tokio::net::lookup_host((host, port))
        .await
        .map_err(|_| Fail::Dns)?
        .next()
        .ok_or(Fail::Dns)
}

fn tls_connector() -> tokio_rustls::TlsConnector {
    static CONFIG: OnceLock<Arc<rustls::ClientConfig>> = OnceLock::new();
    let config = CONFIG.get_or_init(|| {
        let mut roots = rustls::RootCertStore::empty();
        roots.extend(webpki_roots::TLS_SERVER_ROOTS.iter().cloned());
        Arc::new(
            rustls::ClientConfig::builder()
                .with_root_certificates(roots)
                .with_no_client_auth(),
        )
    });
    tokio_rustls::TlsConnector::from(config.clone())
}

const MAX_HEAD_BYTES: usize = 64 * 1024;

async fn http_exchange<S>(
    stream: &mut S,
    url: &AbsoluteUrl,
    config: &ScanConfig,
) -> Result<(u16, Option<String>), Fail>
where
    S: AsyncRead + AsyncWrite + Unpin,
{
    send_get(stream, url, config).await?;
    let mut head = Vec::with_capacity(2048);
    let mut chunk = [0u8; 2048];
    loop {
        let n = stream.read(&mut chunk).await.map_err(|_| Fail::Connect)?;
        if n == 0 {
            break;
        }
        head.extend_from_slice(&chunk[..n]);
        if head_complete(&head) || head.len() > MAX_HEAD_BYTES {
            break;
        }
    }
    parse_head(&head)
}

fn head_complete(buf: &[u8]) -> bool {
    buf.windows(4).any(|w| w == b"\r\n\r\n") || buf.windows(2).any(|w| w == b"\n\n")
}

struct Head {
    status: u16,
    content_type: Option<String>,
    location: Option<String>,
    chunked: bool,
}

fn parse_head_at(buf: &[u8]) -> Result<(Head, usize), Fail> {
    let mut headers = [httparse::EMPTY_HEADER; 100];
    let mut response = httparse::Response::new(&mut headers);
    let body_offset = match response.parse(buf) {
        Ok(httparse::Status::Complete(offset)) => offset,
        // Headers larger than our cap, truncated garbage, or a server
        // that does not speak HTTP at all.
        _ => return Err(Fail::Connect),
    };
    let status = response.code.filter(|c| (100..=599).contains(c)).ok_or(Fail::Connect)?;
    let header = |name: &str| {
        headers
            .iter()
            .take_while(|h| !h.name.is_empty())
            .find(|h| h.name.eq_ignore_ascii_case(name))
            .map(|h| String::from_utf8_lossy(h.value).trim().to_string())
    };
    let chunked = header("transfer-encoding")
        .is_some_and(|v| v.to_ascii_lowercase().contains("chunked"));
    Ok((
        Head {
            status,
            content_type: header("content-type"),
            location: header("location"),
            chunked,
        },
        body_offset,
    ))
}

fn parse_head(buf: &[u8]) -> Result<(u16, Option<String>), Fail> {
    parse_head_at(buf).map(|(head, _)| (head.status, head.content_type))
}

fn host_key(url: &AbsoluteUrl) -> String {
    format!("{}:{}", url.host(), url.port_or_default())
}

fn build_result(reference: ResourceRef, outcome: ProbeOutcome) -> ProbeResult {
    let broken = classify_broken(&outcome);
    let header_category = outcome
        .content_type
        .as_deref()
        .map(category_from_content_type);
    let category_mismatch = header_category.is_some_and(|c| c != reference.category);
    ProbeResult {
        reference,
        outcome,
        broken,
        header_category,
        category_mismatch,
    }
}

/// Probe a batch of refs: one result per ref in input order, each
/// distinct URL fetched once and its outcome shared across refs.
/// Global in-flight probes stay at or under `config.concurrency`;
/// in-flight probes per host:port stay at or under
/// `config.per_host_limit`.
pub async fn probe_all(refs: &[ResourceRef], config: &ScanConfig) -> Vec<ProbeResult> {
    let mut unique: Vec<&AbsoluteUrl> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for r in refs {
        if !index.contains_key(r.url.as_str()) {
            index.insert(r.url.as_str(), unique.len());
            unique.push(&r.url);
        }
    }

    let mut host_limits: HashMap<String, Arc<Semaphore>> = HashMap::new();
    for url in &unique {
        host_limits
            .entry(host_key(url))
            .or_insert_with(|| Arc::new(Semaphore::new(config.per_host_limit)));
    }

    let outcomes: Vec<ProbeOutcome> = stream::iter(unique.iter().map(|url| {
        let limit = host_limits[&host_key(url)].clone();
        async move {
            let _slot = limit.acquire_owned().await.expect("semaphore never closed");
            probe(url, config).await
        }
    }))
    .buffered(config.concurrency)
    .collect()
    .await;

    refs.iter()
        .map(|r| build_result(r.clone(), outcomes[index[r.url.as_str()]].clone()))
        .collect()
}

/// A fetched page: the homepage fetch is the one place redirects are
/// followed, because a site's front door routinely hops from apex to
/// `www` or from http to https before the real document appears.
/// Reference probes stay strictly first-hop.
#[derive(Debug, Clone, PartialEq)]
pub struct PageFetch {
    /// URL the final response came from, after redirects.
    pub final_url: AbsoluteUrl,
    pub status: u16,
    pub content_type: Option<String>,
    pub body: String,
    pub redirects: usize,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PageFetchError {
    #[error("{kind} fetching {url}")]
    Network { url: String, kind: OutcomeKind },
    #[error("more than {MAX_PAGE_REDIRECTS} redirects, stopped at {0}")]
    TooManyRedirects(String),
    #[error("{0} redirected without a location header")]
    RedirectWithoutLocation(String),
    #[error("unusable redirect target {0:?}")]
    BadRedirectTarget(String),
}

pub const MAX_PAGE_REDIRECTS: usize = 5;
const MAX_PAGE_BYTES: usize = 4 * 1024 * 1024;

/// GET a page, following up to [`MAX_PAGE_REDIRECTS`] redirects, with
/// `config.retries` extra attempts on network failures per hop. Any
/// final HTTP status is a successful fetch; the caller decides what a
/// 404 homepage means.
pub async fn fetch_page(url: &AbsoluteUrl, config: &ScanConfig) -> Result<PageFetch, PageFetchError> {
    let mut current = url.clone();
    for hop in 0..=MAX_PAGE_REDIRECTS {
        let answer = fetch_attempts(&current, config).await?;
        if matches!(answer.head.status, 301 | 302 | 303 | 307 | 308) {
            let Some(location) = answer.head.location else {
                return Err(PageFetchError::RedirectWithoutLocation(
                    current.as_str().to_string(),
                ));
            };
            current = crate::urls::normalize_url(&location, &current)
                .map_err(|_| PageFetchError::BadRedirectTarget(location))?;
            continue;
        }
        return Ok(PageFetch {
            final_url: current,
            status: answer.head.status,
            content_type: answer.head.content_type,
            body: String::from_utf8_lossy(&answer.body).into_owned(),
            redirects: hop,
        });
    }
    Err(PageFetchError::TooManyRedirects(current.as_str().to_string()))
}

struct PageAnswer {
    head: Head,
    body: Vec<u8>,
}

async fn fetch_attempts(url: &AbsoluteUrl, config: &ScanConfig) -> Result<PageAnswer, PageFetchError> {
    let mut attempt = 0u32;
    loop {
        let kind = match tokio::time::timeout(config.timeout(), page_attempt(url, config)).await {
            Ok(Ok(answer)) => return Ok(answer),
            Err(_) => OutcomeKind::Timeout,
            Ok(Err(Fail::Dns)) => OutcomeKind::DnsFailure,
            Ok(Err(Fail::Connect)) => OutcomeKind::ConnectFailure,
            Ok(Err(Fail::Tls)) => OutcomeKind::TlsFailure,
        };
        if attempt < config.retries {
            attempt += 1;
            continue;
        }
        return Err(PageFetchError::Network {
            url: url.as_str().to_string(),
            kind,
        });
    }
}

async fn page_attempt(url: &AbsoluteUrl, config: &ScanConfig) -> Result<PageAnswer, Fail> {
    let addr = resolve_target(url, config).await?;
    let stream = TcpStream::connect(addr).await.map_err(|_| Fail::Connect)?;
    if url.is_https() {
        let name = rustls::pki_types::ServerName::try_from(bare_host(url.host()).to_string())
            .map_err(|_| Fail::Tls)?;
        let mut tls = tls_connector()
            .connect(name, stream)
            .await
            .map_err(|_| Fail::Tls)?;
        page_exchange(&mut tls, url, config).await
    } else {
        let mut stream = stream;
        page_exchange(&mut stream, url, config).await
    }
}

async fn page_exchange<S>(
    stream: &mut S,
    url: &AbsoluteUrl,
    config: &ScanConfig,
) -> Result<PageAnswer, Fail>
where
    S: AsyncRead + AsyncWrite + Unpin,
{
    send_get(stream, url, config).await?;
    let mut buf = Vec::with_capacity(8192);
    let mut chunk = [0u8; 8192];
    loop {
        let n = stream.read(&mut chunk).await.map_err(|_| Fail::Connect)?;
        if n == 0 {
            break;
        }
        buf.extend_from_slice(&chunk[..n]);
        if buf.len() >= MAX_PAGE_BYTES {
            buf.truncate(MAX_PAGE_BYTES);
            break;
        }
    }
    let (head, body_offset) = parse_head_at(&buf)?;
    let raw_body = &buf[body_offset..];
    let body = if head.chunked {
        decode_chunked(raw_body)
    } else {
        raw_body.to_vec()
    };
    Ok(PageAnswer { head, body })
}

async fn send_get<S>(stream: &mut S, url: &AbsoluteUrl, config: &ScanConfig) -> Result<(), Fail>
where
    S: AsyncRead + AsyncWrite + Unpin,
{
    let host_header = match url.port() {
        Some(port) => format!("{}:{}", url.host(), port),
        None => url.host().to_string(),
    };
    let request = format!(
        "GET {} HTTP/1.1\r\nHost: {}\r\nUser-Agent: {}\r\nAccept: */*\r\nConnection: close\r\n\r\n",
        url.request_target(),
        host_header,
        config.user_agent
    );
    stream
        .write_all(request.as_bytes())
        .await
        .map_err(|_| Fail::Connect)
}

/// Undo chunked transfer encoding: hex-size line, data, CRLF,
/// repeated; a zero-size chunk ends the body. Truncated or malformed
/// framing yields whatever decoded cleanly.
fn decode_chunked(mut data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len());
    while let Some(line_end) = data.windows(2).position(|w| w == b"\r\n") {
        let size_text = String::from_utf8_lossy(&data[..line_end]);
        let size_token = size_text.split(';').next().unwrap_or("").trim();
        let Ok(size) = usize::from_str_radix(size_token, 16) else {
            break;
        };
        data = &data[line_end + 2..];
        if size == 0 {
            break;
        }
        let take = size.min(data.len());
        out.extend_from_slice(&data[..take]);
        if take < size {
            break;
        }
        data = &data[take..];
        if data.starts_with(b"\r\n") {
            data = &data[2..];
        }
    }
    out
}
