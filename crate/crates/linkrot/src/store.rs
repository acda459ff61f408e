//! Site-list ingestion, durable result storage, and per-homepage
//! aggregation.
//!
//! Results land in an append-only line-delimited JSON file: one
//! self-contained record per probed reference. A crash loses at most
//! the line being written, and a restarted scan skips domains that a
//! companion page file already marks as visited. Profiles are rebuilt
//! from the records alone, so the file is the single source of truth.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{ExtractionOrigin, ResourceCategory};
use crate::probe::{OutcomeKind, ProbeResult};
use crate::triage::{DnsState, TriageCause, TriageVerdict, TypoSignal};
use crate::urls::Scope;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("site list has no {0} column")]
    MissingColumn(&'static str),
    #[error("site list contains no usable rows")]
    EmptyFile,
    #[error("requested {requested} broken results but only {available} available")]
    NotEnoughBroken { requested: usize, available: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteEntry {
    pub rank: u32,
    pub domain: String,
}

/// Parsed site list plus how many rows were dropped on the floor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteList {
    pub entries: Vec<SiteEntry>,
    pub skipped: usize,
}

/// Read a ranked domain list in Majestic-Million CSV shape.
///
/// A `Domain` column (any case) is required. Rank comes from a
/// `GlobalRank` column when present, else from the first column, else
/// from row order when the first column is the domain itself. Rows
/// with an empty domain, a scheme or path in the domain, or an
/// unparsable rank are skipped and counted. Duplicate domains keep
/// their best rank. The result is the first `top_n` entries in rank
/// order.
pub fn load_site_list(path: &Path, top_n: usize) -> Result<SiteList, StoreError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let headers = match reader.headers() {
        Ok(h) if !h.is_empty() => h.clone(),
        _ => return Err(StoreError::EmptyFile),
    };
    let domain_col = headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case("domain"))
        .ok_or(StoreError::MissingColumn("Domain"))?;
    let rank_col = headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case("globalrank"))
        .or(if domain_col != 0 { Some(0) } else { None });

    let mut best: HashMap<String, u32> = HashMap::new();
    let mut skipped = 0usize;
    for (row_index, row) in reader.records().enumerate() {
        let Ok(row) = row else {
            skipped += 1;
            continue;
        };
        let Some(domain) = row.get(domain_col).map(str::trim) else {
            skipped += 1;
            continue;
        };
        let domain = domain.trim_end_matches('.').to_ascii_lowercase();
        if domain.is_empty()
            || domain.contains("://")
            || domain.contains('/')
            || domain.contains(char::is_whitespace)
        {
            skipped += 1;
            continue;
        }
        let rank = match rank_col {
            Some(col) => match row.get(col).map(str::trim).and_then(|r| r.parse().ok()) {
                Some(rank) => rank,
                None => {
                    skipped += 1;
                    continue;
                }
            },
            None => row_index as u32 + 1,
        };
        best.entry(domain)
            .and_modify(|r| *r = (*r).min(rank))
            .or_insert(rank);
    }
    if best.is_empty() {
        return Err(StoreError::EmptyFile);
    }
    let mut entries: Vec<SiteEntry> = best
        .into_iter()
        .map(|(domain, rank)| SiteEntry { rank, domain })
        .collect();
    entries.sort_unstable_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.domain.cmp(&b.domain)));
    entries.truncate(top_n);
    Ok(SiteList { entries, skipped })
}

/// One persisted probe, flat enough to grep and stable enough to
/// rebuild every downstream aggregate from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub domain: String,
    pub page_url: String,
    pub url: String,
    pub raw_text: String,
    pub category: ResourceCategory,
    pub scope: Scope,
    pub extraction_origin: ExtractionOrigin,
    pub outcome_kind: OutcomeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_type: Option<String>,
    pub latency_ms: u64,
    pub fetched_at: DateTime<Utc>,
    pub broken: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triage_cause: Option<TriageCause>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub typo_signals: Vec<TypoSignal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dns_state: Option<DnsState>,
}

impl ScanRecord {
    /// Project a probe result into its persisted form. `domain` is the
    /// site-list key the page was scanned under, not re-derived from
    /// the URL, so aggregation matches the scan plan.
    pub fn from_probe(result: &ProbeResult, domain: &str) -> Self {
        let (outcome_kind, status) = result.outcome.kind.split();
        Self {
            domain: domain.to_string(),
            page_url: result.reference.origin_page.as_str().to_string(),
            url: result.reference.url.as_str().to_string(),
            raw_text: result.reference.raw_text.clone(),
            category: result.reference.category,
            scope: result.reference.scope,
            extraction_origin: result.reference.extraction_origin,
            outcome_kind,
            status,
            content_type: result.outcome.content_type.clone(),
            latency_ms: result.outcome.latency_ms,
            fetched_at: result.outcome.fetched_at,
            broken: result.broken,
            triage_cause: None,
            typo_signals: Vec::new(),
            dns_state: None,
        }
    }

    pub fn with_triage(mut self, verdict: &TriageVerdict) -> Self {
        self.triage_cause = Some(verdict.cause);
        self.typo_signals = verdict.signals.clone();
        self.dns_state = Some(verdict.dns_state);
        self
    }
}

/// Per-homepage visit outcome, one line per attempted domain. This is
/// what makes zero-reference pages visible to the statistics and lets
/// a resumed run skip domains it already visited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRecord {
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_url: Option<String>,
    pub fetched: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub total_refs: u64,
    pub fetched_at: DateTime<Utc>,
}

fn append_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<usize, StoreError> {
    // Opened even for zero items: an empty append still leaves a
    // readable file behind.
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut writer = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(std::io::Error::other)?;
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(items.len())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(Vec<T>, usize), StoreError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut items = Vec::new();
    let mut malformed = 0usize;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(item) => items.push(item),
            Err(_) => malformed += 1,
        }
    }
    Ok((items, malformed))
}

pub fn append_results(path: &Path, records: &[ScanRecord]) -> Result<usize, StoreError> {
    append_jsonl(path, records)
}

/// Read a results file; the second value counts unparsable lines
/// (at most one from a crash mid-write, more means corruption).
pub fn read_results(path: &Path) -> Result<(Vec<ScanRecord>, usize), StoreError> {
    read_jsonl(path)
}

pub fn append_pages(path: &Path, pages: &[PageRecord]) -> Result<usize, StoreError> {
    append_jsonl(path, pages)
}

pub fn read_pages(path: &Path) -> Result<(Vec<PageRecord>, usize), StoreError> {
    read_jsonl(path)
}

/// Conventional location of the page sidecar next to a results file.
pub fn pages_path(results_path: &Path) -> std::path::PathBuf {
    let mut name = results_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".to_string());
    name.push_str(".pages.jsonl");
    results_path.with_file_name(name)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomepageProfile {
    pub domain: String,
    pub total_refs: u64,
    pub internal_count: u64,
    pub external_count: u64,
    pub per_category: BTreeMap<ResourceCategory, u64>,
    pub broken_count: u64,
    pub broken_per_category: BTreeMap<ResourceCategory, u64>,
    pub has_broken: bool,
    #[serde(default)]
    pub external_per_category: BTreeMap<ResourceCategory, u64>,
    #[serde(default)]
    pub broken_external_per_category: BTreeMap<ResourceCategory, u64>,
}

impl HomepageProfile {
    pub fn empty(domain: &str) -> Self {
        Self {
            domain: domain.to_string(),
            ..Self::default()
        }
    }

    pub fn broken_external_count(&self) -> u64 {
        self.broken_external_per_category.values().sum()
    }

    /// Check every count identity; Err names the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let sum: u64 = self.per_category.values().sum();
        if self.internal_count + self.external_count != self.total_refs {
            return Err(format!(
                "{}: internal {} + external {} != total {}",
                self.domain, self.internal_count, self.external_count, self.total_refs
            ));
        }
        if sum != self.total_refs {
            return Err(format!(
                "{}: per-category sum {} != total {}",
                self.domain, sum, self.total_refs
            ));
        }
        if self.broken_count > self.total_refs {
            return Err(format!(
                "{}: broken {} > total {}",
                self.domain, self.broken_count, self.total_refs
            ));
        }
        if self.has_broken != (self.broken_count >= 1) {
            return Err(format!("{}: has_broken flag mismatch", self.domain));
        }
        let ext_sum: u64 = self.external_per_category.values().sum();
        if ext_sum != self.external_count {
            return Err(format!(
                "{}: external per-category sum {} != external {}",
                self.domain, ext_sum, self.external_count
            ));
        }
        for (category, &count) in &self.broken_per_category {
            let total = self.per_category.get(category).copied().unwrap_or(0);
            if count > total {
                return Err(format!(
                    "{}: broken {count} > {total} refs for {category}",
                    self.domain
                ));
            }
        }
        for (category, &count) in &self.broken_external_per_category {
            let ext = self.external_per_category.get(category).copied().unwrap_or(0);
            if count > ext {
                return Err(format!(
                    "{}: broken external {count} > {ext} external refs for {category}",
                    self.domain
                ));
            }
        }
        Ok(())
    }

    fn absorb(&mut self, record: &ScanRecord) {
        self.total_refs += 1;
        match record.scope {
            Scope::Internal => self.internal_count += 1,
            Scope::External => self.external_count += 1,
        }
        *self.per_category.entry(record.category).or_insert(0) += 1;
        if record.scope == Scope::External {
            *self.external_per_category.entry(record.category).or_insert(0) += 1;
        }
        if record.broken {
            self.broken_count += 1;
            self.has_broken = true;
            *self.broken_per_category.entry(record.category).or_insert(0) += 1;
            if record.scope == Scope::External {
                *self
                    .broken_external_per_category
                    .entry(record.category)
                    .or_insert(0) += 1;
            }
        }
    }
}

/// One profile per distinct domain, ordered by domain. Pure counting,
/// so record order never changes the result.
pub fn build_profiles(records: &[ScanRecord]) -> Vec<HomepageProfile> {
    build_profiles_with_pages(records, &[])
}

/// Like [`build_profiles`] but seeds a zero profile for every
/// successfully fetched page, so homepages with no references at all
/// still appear (they are real data points for the count model).
pub fn build_profiles_with_pages(
    records: &[ScanRecord],
    pages: &[PageRecord],
) -> Vec<HomepageProfile> {
    let mut profiles: BTreeMap<String, HomepageProfile> = BTreeMap::new();
    for page in pages {
        if page.fetched {
            profiles
                .entry(page.domain.clone())
                .or_insert_with(|| HomepageProfile::empty(&page.domain));
        }
    }
    for record in records {
        profiles
            .entry(record.domain.clone())
            .or_insert_with(|| HomepageProfile::empty(&record.domain))
            .absorb(record);
    }
    profiles.into_values().collect()
}

/// Domains a results file already covers, for resumable scans.
pub fn visited_domains(pages: &[PageRecord]) -> BTreeSet<String> {
    pages.iter().map(|p| p.domain.clone()).collect()
}

pub trait BrokenItem {
    fn is_broken(&self) -> bool;
}

impl BrokenItem for ScanRecord {
    fn is_broken(&self) -> bool {
        self.broken
    }
}

impl BrokenItem for ProbeResult {
    fn is_broken(&self) -> bool {
        self.broken
    }
}

/// Uniform sample of broken results without replacement, reproducible
/// from the seed, returned in original order.
pub fn sample_for_review<T: BrokenItem + Clone>(
    items: &[T],
    n: usize,
    seed: u64,
) -> Result<Vec<T>, StoreError> {
    let broken: Vec<usize> = items
        .iter()
        .enumerate()
        .filter(|(_, item)| item.is_broken())
        .map(|(index, _)| index)
        .collect();
    if broken.len() < n {
        return Err(StoreError::NotEnoughBroken {
            requested: n,
            available: broken.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, broken.len(), n)
        .into_iter()
        .map(|i| broken[i])
        .collect();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| items[i].clone()).collect())
}
