//! Scan orchestration: site list in, results file out.
//!
//! One site at a time: fetch the homepage (the only fetch that follows
//! redirects), extract references, probe them in parallel under the
//! politeness limits, triage whatever broke, then append the records
//! and a page entry before moving on. Appending per site means an
//! interrupted run loses at most the site in flight, and `resume`
//! picks up after the last completed one.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{extract_refs, ingest_fetch_log, ResourceRef};
use crate::probe::{fetch_page, probe_all, PageFetch, ScanConfig};
use crate::store::{
    append_pages, append_results, pages_path, read_pages, visited_domains, PageRecord,
    ScanRecord, SiteEntry, StoreError,
};
use crate::suffix::SuffixRules;
use crate::triage::{detect_typos, resolve_dns_state, triage_broken, DnsLookup, DnsState};
use crate::urls::AbsoluteUrl;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("manifest: {0}")]
    Manifest(String),
}

/// Everything a scan run needs, assembled by the caller.
pub struct ScanPlan {
    pub sites: Vec<SiteEntry>,
    pub config: ScanConfig,
    pub site_list_path: String,
    pub top_n: usize,
    pub out_path: PathBuf,
    pub resume: bool,
    /// Runtime-request log lines (already read), attributed to sites
    /// by registrable domain.
    pub fetch_log: Vec<String>,
    /// Resolver used during triage; a live scan passes the system
    /// resolver, tests a stub.
    pub resolver: Arc<dyn DnsLookup + Send + Sync>,
    pub rules: Arc<SuffixRules>,
    pub tool_version: String,
}

/// Reproducibility envelope written next to the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ScanConfig,
    pub site_list_path: String,
    pub top_n: usize,
    pub output_path: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub tool_version: String,
    pub pages_attempted: u64,
    pub pages_succeeded: u64,
    pub pages_failed: u64,
    pub pages_skipped_resume: u64,
}

pub fn manifest_path(results_path: &Path) -> PathBuf {
    let mut name = results_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".to_string());
    name.push_str(".manifest.json");
    results_path.with_file_name(name)
}

/// Run the scan described by the plan. Per-site failures are data
/// (recorded in the page file), not errors; the Err path is reserved
/// for storage problems.
pub async fn run_scan(plan: &ScanPlan) -> Result<RunManifest, PipelineError> {
    let started_at = Utc::now();
    let pages_file = pages_path(&plan.out_path);
    std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&plan.out_path)
        .map_err(StoreError::Io)?;
    let already_visited: BTreeSet<String> = if plan.resume && pages_file.exists() {
        let (pages, _) = read_pages(&pages_file)?;
        visited_domains(&pages)
    } else {
        BTreeSet::new()
    };

    let mut succeeded = 0u64;
    let mut failed = 0u64;
    let mut skipped = 0u64;
    for site in &plan.sites {
        if already_visited.contains(&site.domain) {
            skipped += 1;
            continue;
        }
        match scan_site(site, plan).await {
            SiteOutcome::Fetched { page, records } => {
                append_results(&plan.out_path, &records)?;
                append_pages(
                    &pages_file,
                    &[PageRecord {
                        domain: site.domain.clone(),
                        page_url: Some(page.final_url.as_str().to_string()),
                        fetched: true,
                        error: None,
                        total_refs: records.len() as u64,
                        fetched_at: Utc::now(),
                    }],
                )?;
                succeeded += 1;
            }
            SiteOutcome::Failed { error } => {
                append_pages(
                    &pages_file,
                    &[PageRecord {
                        domain: site.domain.clone(),
                        page_url: None,
                        fetched: false,
                        error: Some(error),
                        total_refs: 0,
                        fetched_at: Utc::now(),
                    }],
                )?;
                failed += 1;
            }
        }
    }

    let manifest = RunManifest {
        config: plan.config.clone(),
        site_list_path: plan.site_list_path.clone(),
        top_n: plan.top_n,
        output_path: plan.out_path.to_string_lossy().into_owned(),
        started_at,
        finished_at: Utc::now(),
        tool_version: plan.tool_version.clone(),
        pages_attempted: succeeded + failed,
        pages_succeeded: succeeded,
        pages_failed: failed,
        pages_skipped_resume: skipped,
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| PipelineError::Manifest(e.to_string()))?;
    std::fs::write(manifest_path(&plan.out_path), text + "\n")
        .map_err(|e| PipelineError::Manifest(e.to_string()))?;
    Ok(manifest)
}

enum SiteOutcome {
    Fetched { page: PageFetch, records: Vec<ScanRecord> },
    Failed { error: String },
}

async fn scan_site(site: &SiteEntry, plan: &ScanPlan) -> SiteOutcome {
    let page = match fetch_homepage(&site.domain, &plan.config).await {
        Ok(page) => page,
        Err(error) => return SiteOutcome::Failed { error },
    };
    if !(200..=299).contains(&page.status) {
        return SiteOutcome::Failed {
            error: format!("homepage answered {}", page.status),
        };
    }

    let refs = collect_refs(&page, plan);
    let results = probe_all(&refs, &plan.config).await;

    let mut dns_cache: HashMap<String, DnsState> = HashMap::new();
    let mut records = Vec::with_capacity(results.len());
    for result in &results {
        let mut record = ScanRecord::from_probe(result, &site.domain);
        if result.broken {
            let host = result.reference.url.host().to_string();
            let dns_state = match dns_cache.get(&host) {
                Some(&state) => state,
                None => {
                    let state = lookup_state(&host, plan).await;
                    dns_cache.insert(host, state);
                    state
                }
            };
            let signals = detect_typos(&result.reference.raw_text, &plan.rules);
            if let Ok(verdict) = triage_broken(result, dns_state, signals) {
                record = record.with_triage(&verdict);
            }
        }
        records.push(record);
    }
    SiteOutcome::Fetched { page, records }
}

/// Try https first; a TLS, connect, or timeout failure retries the
/// site over plain http before giving up. DNS failures skip the
/// fallback, the name will not resolve any better without TLS.
async fn fetch_homepage(domain: &str, config: &ScanConfig) -> Result<PageFetch, String> {
    let https = AbsoluteUrl::parse(&format!("https://{domain}/"))
        .map_err(|e| format!("bad domain: {e}"))?;
    use crate::probe::{OutcomeKind, PageFetchError};
    match fetch_page(&https, config).await {
        Ok(page) => Ok(page),
        Err(PageFetchError::Network { kind, .. })
            if !matches!(kind, OutcomeKind::DnsFailure) =>
        {
            let http = AbsoluteUrl::parse(&format!("http://{domain}/"))
                .map_err(|e| format!("bad domain: {e}"))?;
            fetch_page(&http, config).await.map_err(|e| e.to_string())
        }
        Err(e) => Err(e.to_string()),
    }
}

/// Static references from the homepage body plus any runtime-log
/// entries for the same registrable domain, dedup'd across the two
/// passes by (url, category) with the static pass winning.
fn collect_refs(page: &PageFetch, plan: &ScanPlan) -> Vec<ResourceRef> {
    let extraction = extract_refs(&page.body, &page.final_url, &plan.rules);
    let mut refs = extraction.refs;
    if !plan.fetch_log.is_empty() {
        let dynamic = ingest_fetch_log(
            plan.fetch_log.iter().map(String::as_str),
            &page.final_url,
            &plan.rules,
        );
        let mut seen: BTreeSet<(String, crate::extract::ResourceCategory)> = refs
            .iter()
            .map(|r| (r.url.as_str().to_string(), r.category))
            .collect();
        for reference in dynamic.refs {
            if seen.insert((reference.url.as_str().to_string(), reference.category)) {
                refs.push(reference);
            }
        }
    }
    refs
}

async fn lookup_state(host: &str, plan: &ScanPlan) -> DnsState {
    let resolver = plan.resolver.clone();
    let rules = plan.rules.clone();
    let host = host.to_string();
    tokio::task::spawn_blocking(move || resolve_dns_state(&host, &rules, resolver.as_ref()))
        .await
        .unwrap_or(DnsState::Unknown)
}
