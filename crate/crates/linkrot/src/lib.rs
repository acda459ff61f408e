//! Broken-link audit engine for homepages.
//!
//! The pipeline: ingest a ranked site list, fetch each homepage,
//! extract every external resource reference, probe each referenced
//! URL once over HTTP, classify broken answers, triage them for
//! hijackability, and fit a gamma model to per-page external
//! dependency counts so that outlier pages stand out formally.

pub mod extract;
pub mod gamma;
pub mod pipeline;
pub mod probe;
pub mod report;
pub mod store;
pub mod suffix;
pub mod triage;
pub mod urls;

pub use extract::{
    category_from_content_type, extract_refs, ingest_fetch_log, ExtractionOrigin,
    ExtractionResult, FetchLogIngest, RejectedRef, ResourceCategory, ResourceRef,
};
pub use gamma::{
    detect_anomalies, digamma, fit_gamma, gamma_cdf, gamma_pdf, ks_statistic, tail_probability,
    AnomalyVerdict, GammaError, GammaModel, ModelFile, TailProbability, TailSide,
};
pub use pipeline::{manifest_path, run_scan, PipelineError, RunManifest, ScanPlan};
pub use probe::{
    classify_broken, fetch_page, probe, probe_all, ConfigError, OutcomeKind, PageFetch,
    PageFetchError, ProbeKind, ProbeOutcome, ProbeResult, ScanConfig,
};
pub use report::{
    histogram, histogram_csv, render, summarize, CategoryRow, CountSeries, Histogram,
    HistogramBin, RenderFormat, ReportError, SummaryStats,
};
pub use store::{
    append_pages, append_results, build_profiles, build_profiles_with_pages, load_site_list,
    pages_path, read_pages, read_results, sample_for_review, visited_domains, HomepageProfile,
    PageRecord, ScanRecord, SiteEntry, SiteList, StoreError,
};
pub use suffix::{registrable_domain, RegistrableDomain, SuffixRules};
pub use triage::{
    detect_typos, resolve_dns_state, triage_broken, DnsAnswer, DnsLookup, DnsLookupError,
    DnsState, StubResolver, SystemResolver, TriageCause, TriageError, TriageVerdict, TypoSignal,
    TypoSignalKind,
};
pub use urls::{classify_scope, normalize_url, AbsoluteUrl, Scope, UrlError};

/// The guide's chapters and the README compile as doctests, so a
/// snippet that drifts from the API fails the build.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/urls-and-scope.md")]
    mod urls_and_scope {}
    #[doc = include_str!("../../../book/src/extraction.md")]
    mod extraction {}
    #[doc = include_str!("../../../book/src/probing.md")]
    mod probing {}
    #[doc = include_str!("../../../book/src/triage.md")]
    mod triage {}
    #[doc = include_str!("../../../book/src/gamma-model.md")]
    mod gamma_model {}
    #[doc = include_str!("../../../book/src/anomaly-detection.md")]
    mod anomaly_detection {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
