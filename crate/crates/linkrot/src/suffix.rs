//! Public-suffix rules and registrable-domain (eTLD+1) derivation.
//!
//! A compact rule set is compiled into the binary; deployments with
//! unusual namespaces can extend it with an override file (one rule per
//! line, `#` comments, same syntax as the bundled set).

use std::collections::HashMap;
use std::net::IpAddr;

/// The eTLD+1 portion of a hostname, or the literal host for IP
/// addresses and hosts that are themselves a public suffix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegistrableDomain(String);

impl RegistrableDomain {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl std::fmt::Display for RegistrableDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for RegistrableDomain {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RuleKind {
    Plain,
    Wildcard,
    Exception,
}

/// Parsed suffix rules, keyed by the rule's literal label sequence.
#[derive(Debug, Clone)]
pub struct SuffixRules {
    rules: HashMap<String, RuleKind>,
}

static BUNDLED: &str = include_str!("../assets/public_suffixes.txt");

impl SuffixRules {
    /// The rule set compiled into the binary.
    pub fn bundled() -> Self {
        let mut rules = Self {
            rules: HashMap::new(),
        };
        rules.extend_from_text(BUNDLED);
        rules
    }

    /// An empty rule set; every host falls back to the last-two-labels rule.
    pub fn empty() -> Self {
        Self {
            rules: HashMap::new(),
        }
    }

    /// Add rules from override-file text. Later rules never remove earlier
    /// ones; an exception and a wildcard for the same name can coexist.
    pub fn extend_from_text(&mut self, text: &str) {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kind, name) = if let Some(rest) = line.strip_prefix('!') {
                (RuleKind::Exception, rest)
            } else if let Some(rest) = line.strip_prefix("*.") {
                (RuleKind::Wildcard, rest)
            } else {
                (RuleKind::Plain, line)
            };
            let name = name.trim_matches('.').to_ascii_lowercase();
            if name.is_empty() {
                continue;
            }
            self.rules.insert(
                match kind {
                    RuleKind::Exception => format!("!{name}"),
                    RuleKind::Wildcard => format!("*.{name}"),
                    RuleKind::Plain => name,
                },
                kind,
            );
        }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// True when `label` alone is a plain single-label rule (`com`, `net`, ...).
    /// Used by typo triage to spot a suffix glued to a path.
    pub fn is_single_label_suffix(&self, label: &str) -> bool {
        let label = label.to_ascii_lowercase();
        !label.contains('.') && matches!(self.rules.get(&label), Some(RuleKind::Plain))
    }

    /// Number of labels in the public suffix of `labels` (already lowercased).
    fn suffix_label_count(&self, labels: &[&str]) -> usize {
        let n = labels.len();
        let mut best = 1; // implicit root wildcard: the last label is a suffix
        // Longest match wins; an exception rule shortens the suffix by one.
        for take in 1..=n {
            let tail = labels[n - take..].join(".");
            if self.rules.contains_key(&format!("!{tail}")) {
                best = best.max(take - 1);
            } else if self.rules.contains_key(&tail) {
                best = best.max(take);
            } else if take >= 2 {
                let wildcard = format!("*.{}", labels[n - take + 1..].join("."));
                if self.rules.contains_key(&wildcard) {
                    best = best.max(take);
                }
            }
        }
        best
    }

    /// Derive the registrable domain for `host`.
    ///
    /// IP literals (IPv4, or bracketed/plain IPv6) come back verbatim, as
    /// does a host that is itself a public suffix. The result is always a
    /// dot-boundary suffix of the input (compared case-insensitively).
    pub fn registrable_domain(&self, host: &str) -> RegistrableDomain {
        let trimmed = host.trim().trim_end_matches('.');
        if trimmed.is_empty() {
            return RegistrableDomain(host.to_string());
        }
        let bare = trimmed.trim_start_matches('[').trim_end_matches(']');
        if bare.parse::<IpAddr>().is_ok() {
            return RegistrableDomain(trimmed.to_string());
        }

        let lower = trimmed.to_ascii_lowercase();
        let labels: Vec<&str> = lower.split('.').collect();
        if labels.iter().any(|l| l.is_empty()) {
            // Malformed host (empty label); hand it back rather than guess.
            return RegistrableDomain(lower);
        }
        let suffix_len = self.suffix_label_count(&labels);
        let keep = (suffix_len + 1).min(labels.len());
        RegistrableDomain(labels[labels.len() - keep..].join("."))
    }
}

impl Default for SuffixRules {
    fn default() -> Self {
        Self::bundled()
    }
}

/// Registrable domain under the bundled rule set.
pub fn registrable_domain(host: &str) -> RegistrableDomain {
    SuffixRules::bundled().registrable_domain(host)
}
