//! URL normalization and internal/external scope classification.
//!
//! Every reference handled by the engine is normalized into an
//! [`AbsoluteUrl`]: http(s) only, lowercase host, fragment stripped,
//! query kept. Scope is decided by registrable-domain inequality, so
//! subdomain assets of the origin count as internal.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::suffix::{RegistrableDomain, SuffixRules};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum UrlError {
    /// Malformed input. Recorded, not fatal: the raw text stays available
    /// for typo triage.
    #[error("unparsable url {raw:?}: {reason}")]
    Unparsable { raw: String, reason: String },
    #[error("unsupported scheme {scheme:?} in {raw:?}")]
    UnsupportedScheme { scheme: String, raw: String },
}

/// A normalized absolute http(s) URL.
///
/// Construction guarantees a non-empty lowercase host, an http or https
/// scheme, and no fragment. Serializing and re-parsing an `AbsoluteUrl`
/// is a fixed point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbsoluteUrl(url::Url);

impl AbsoluteUrl {
    /// Parse an absolute URL with no base. Same normalization as
    /// [`normalize_url`].
    pub fn parse(raw: &str) -> Result<Self, UrlError> {
        let trimmed = raw.trim();
        let parsed = url::Url::parse(trimmed).map_err(|e| UrlError::Unparsable {
            raw: raw.to_string(),
            reason: e.to_string(),
        })?;
        Self::from_parsed(parsed, raw)
    }

    fn from_parsed(mut parsed: url::Url, raw: &str) -> Result<Self, UrlError> {
        match parsed.scheme() {
            "http" | "https" => {}
            other => {
                return Err(UrlError::UnsupportedScheme {
                    scheme: other.to_string(),
                    raw: raw.to_string(),
                })
            }
        }
        if parsed.host_str().is_none_or(str::is_empty) {
            return Err(UrlError::Unparsable {
                raw: raw.to_string(),
                reason: "missing host".to_string(),
            });
        }
        parsed.set_fragment(None);
        Ok(Self(parsed))
    }

    pub fn scheme(&self) -> &str {
        self.0.scheme()
    }

    /// Lowercase host, never empty. IPv6 hosts keep their brackets.
    pub fn host(&self) -> &str {
        self.0.host_str().expect("AbsoluteUrl always has a host")
    }

    /// Explicit port, if any. Default ports are dropped at parse time.
    pub fn port(&self) -> Option<u16> {
        self.0.port()
    }

    /// Port to dial: the explicit port or the scheme default.
    pub fn port_or_default(&self) -> u16 {
        self.0.port_or_known_default().unwrap_or(80)
    }

    pub fn path(&self) -> &str {
        self.0.path()
    }

    pub fn query(&self) -> Option<&str> {
        self.0.query()
    }

    /// Path plus query, as sent on the request line.
    pub fn request_target(&self) -> String {
        match self.0.query() {
            Some(q) => format!("{}?{}", self.0.path(), q),
            None => self.0.path().to_string(),
        }
    }

    pub fn is_https(&self) -> bool {
        self.0.scheme() == "https"
    }

    pub fn as_str(&self) -> &str {
        self.0.as_str()
    }

    pub fn registrable_domain(&self, rules: &SuffixRules) -> RegistrableDomain {
        rules.registrable_domain(self.host())
    }
}

impl std::fmt::Display for AbsoluteUrl {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.0.as_str())
    }
}

impl Serialize for AbsoluteUrl {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for AbsoluteUrl {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        AbsoluteUrl::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Whether a reference points at its own site or a third party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Internal,
    External,
}

impl std::fmt::Display for Scope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scope::Internal => "internal",
            Scope::External => "external",
        })
    }
}

/// Resolve `raw` against `base` and normalize.
///
/// Relative references resolve against the base, scheme-relative ones
/// inherit the base scheme, the fragment is dropped and the host is
/// lowercased. Path case is preserved. Normalizing the output again is
/// the identity.
pub fn normalize_url(raw: &str, base: &AbsoluteUrl) -> Result<AbsoluteUrl, UrlError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(UrlError::Unparsable {
            raw: raw.to_string(),
            reason: "empty after trimming".to_string(),
        });
    }
    // Reject explicit non-http(s) schemes before join() so that
    // `javascript:`/`data:` report UnsupportedScheme, not a join error.
    if let Some(scheme) = leading_scheme(trimmed) {
        if !scheme.eq_ignore_ascii_case("http") && !scheme.eq_ignore_ascii_case("https") {
            return Err(UrlError::UnsupportedScheme {
                scheme: scheme.to_ascii_lowercase(),
                raw: raw.to_string(),
            });
        }
    }
    let joined = base.0.join(trimmed).map_err(|e| UrlError::Unparsable {
        raw: raw.to_string(),
        reason: e.to_string(),
    })?;
    AbsoluteUrl::from_parsed(joined, raw)
}

/// The scheme prefix of `s`, when syntactically present (`scheme:` with an
/// alpha first character, before any `/?#`).
fn leading_scheme(s: &str) -> Option<&str> {
    let colon = s.find(':')?;
    let candidate = &s[..colon];
    if candidate.is_empty() {
        return None;
    }
    let mut chars = candidate.chars();
    if !chars.next().is_some_and(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    if !candidate
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
    {
        return None;
    }
    // A slash, query or fragment before the colon means the colon belongs
    // to the path, not a scheme.
    if s[..colon].contains(['/', '?', '#']) {
        return None;
    }
    Some(candidate)
}

/// External iff the resource's registrable domain differs from the
/// origin's. Subdomains of the origin's registrable domain are internal.
pub fn classify_scope(resource: &AbsoluteUrl, origin: &AbsoluteUrl, rules: &SuffixRules) -> Scope {
    if resource.registrable_domain(rules) == origin.registrable_domain(rules) {
        Scope::Internal
    } else {
        Scope::External
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(s: &str) -> AbsoluteUrl {
        AbsoluteUrl::parse(s).unwrap()
    }

    #[test]
    fn scheme_relative_inherits_base_scheme() {
        let b = base("https://site.com/");
        let u = normalize_url("//cdn.ex.com/a.js", &b).unwrap();
        assert_eq!(u.as_str(), "https://cdn.ex.com/a.js");
    }

    #[test]
    fn path_resolves_against_base() {
        let b = base("https://site.com/");
        let u = normalize_url("/img/logo.png", &b).unwrap();
        assert_eq!(u.as_str(), "https://site.com/img/logo.png");
    }

    #[test]
    fn host_lowercased_path_case_kept_fragment_dropped() {
        let b = base("https://any.example/");
        let u = normalize_url("HTTPS://CDN.EX.COM/A.js#frag", &b).unwrap();
        assert_eq!(u.as_str(), "https://cdn.ex.com/A.js");
        assert_eq!(u.host(), "cdn.ex.com");
        assert_eq!(u.query(), None);
    }

    #[test]
    fn query_kept() {
        let b = base("https://site.com/");
        let u = normalize_url("/a.js?v=3&x=1#frag", &b).unwrap();
        assert_eq!(u.as_str(), "https://site.com/a.js?v=3&x=1");
        assert_eq!(u.request_target(), "/a.js?v=3&x=1");
    }

    #[test]
    fn unsupported_schemes_rejected() {
        let b = base("https://site.com/");
        for raw in ["javascript:void(0)", "data:image/png;base64,AAAA", "mailto:x@y.z"] {
            match normalize_url(raw, &b) {
                Err(UrlError::UnsupportedScheme { .. }) => {}
                other => panic!("expected UnsupportedScheme for {raw}, got {other:?}"),
            }
        }
    }

    #[test]
    fn empty_and_garbage_are_unparsable() {
        let b = base("https://site.com/");
        assert!(matches!(
            normalize_url("   ", &b),
            Err(UrlError::Unparsable { .. })
        ));
        assert!(matches!(
            normalize_url("http://exa mple.com/x", &b),
            Err(UrlError::Unparsable { .. })
        ));
    }

    #[test]
    fn normalize_is_idempotent() {
        let b = base("https://site.com/dir/page.html");
        for raw in [
            "../a/b.css?q=1",
            "//CDN.Ex.com/lib.js",
            "HTTP://Other.ORG:8080/x#y",
        ] {
            let once = normalize_url(raw, &b).unwrap();
            let twice = normalize_url(once.as_str(), &b).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn default_port_dropped_explicit_port_kept() {
        let b = base("https://site.com/");
        assert_eq!(
            normalize_url("https://x.com:443/a", &b).unwrap().port(),
            None
        );
        let explicit = normalize_url("https://x.com:8443/a", &b).unwrap();
        assert_eq!(explicit.port(), Some(8443));
        assert_eq!(explicit.port_or_default(), 8443);
        assert_eq!(b.port_or_default(), 443);
    }

    #[test]
    fn scope_by_registrable_domain() {
        let rules = SuffixRules::bundled();
        let origin = base("https://site.com/");
        let internal = base("https://cdn.site.com/a.js");
        let external = base("https://fonts.example.org/f.woff2");
        assert_eq!(classify_scope(&internal, &origin, &rules), Scope::Internal);
        assert_eq!(classify_scope(&external, &origin, &rules), Scope::External);
        assert_eq!(classify_scope(&origin, &origin, &rules), Scope::Internal);
    }

    #[test]
    fn scope_ignores_host_case_in_raw_inputs() {
        let rules = SuffixRules::bundled();
        let origin = base("https://SITE.com/");
        let upper = base("https://CDN.SITE.COM/a.js");
        let lower = base("https://cdn.site.com/a.js");
        assert_eq!(
            classify_scope(&upper, &origin, &rules),
            classify_scope(&lower, &origin, &rules)
        );
    }
}
