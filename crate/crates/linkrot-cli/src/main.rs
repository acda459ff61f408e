//! Command line for the audit engine. Subcommands compose the library
//! pieces: scan produces the results file everything else consumes.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use linkrot::{
    build_profiles_with_pages, detect_anomalies, detect_typos, fit_gamma, histogram,
    histogram_csv, pages_path, read_pages, read_results, render, resolve_dns_state, run_scan,
    sample_for_review, summarize, triage_broken, AbsoluteUrl, CountSeries, DnsLookup, DnsState,
    HomepageProfile, ModelFile, OutcomeKind, PageRecord, ProbeKind, ProbeOutcome, ProbeResult,
    RenderFormat, ResourceRef, ScanConfig, ScanPlan, ScanRecord, StubResolver, SuffixRules,
    SystemResolver,
};

#[derive(Parser)]
#[command(
    name = "linkrot",
    version,
    about = "Audit homepages for broken external resource references",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch homepages, probe every extracted reference, triage the broken ones
    Scan(ScanArgs),
    /// Fit a gamma model to per-page dependency counts
    Fit(FitArgs),
    /// Flag pages whose dependency count is extreme under a fitted model
    Detect(DetectArgs),
    /// Summarize a results file as markdown, CSV, or JSON
    Report(ReportArgs),
    /// Draw a seeded random sample of broken links for manual review
    Sample(SampleArgs),
    /// Recompute triage verdicts over an existing results file
    Triage(TriageArgs),
}

#[derive(Args)]
struct ScanArgs {
    /// Ranked site list CSV; requires a Domain column, rank comes from
    /// a GlobalRank column or row order
    #[arg(long)]
    input: PathBuf,
    /// Results file (JSON lines, appended per site)
    #[arg(long)]
    out: PathBuf,
    /// How many top-ranked sites to scan
    #[arg(long, default_value_t = 1000)]
    top: usize,
    /// Probes in flight across all hosts
    #[arg(long, default_value_t = 64)]
    concurrency: usize,
    /// Probes in flight against any single host
    #[arg(long = "per-host", default_value_t = 2)]
    per_host: usize,
    /// Per-attempt timeout in seconds
    #[arg(long, default_value_t = 15.0)]
    timeout: f64,
    /// Extra attempts after a network failure; HTTP answers are never retried
    #[arg(long, default_value_t = 1)]
    retries: u32,
    /// User-Agent header sent with every request
    #[arg(long, default_value_t = ScanConfig::default().user_agent)]
    user_agent: String,
    /// Skip domains already recorded in the output of an earlier run
    #[arg(long)]
    resume: bool,
    /// Runtime request log (JSON lines {page, url, initiator}) merged
    /// into the extracted reference set
    #[arg(long)]
    fetch_log: Option<PathBuf>,
    /// Pin a host to an address: HOST=IP:PORT, or *.SUFFIX=IP:PORT for
    /// a whole subtree (repeatable)
    #[arg(long = "resolve", value_name = "HOST=ADDR")]
    resolve: Vec<String>,
    /// Stub DNS zone file used for triage lookups instead of the
    /// system resolver (lines: HOST A|AAAA, HOST CNAME TARGET, HOST NXDOMAIN)
    #[arg(long)]
    resolver_stub: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Results file or profiles file (JSON lines)
    #[arg(long)]
    input: PathBuf,
    /// Where to write the fitted model (JSON)
    #[arg(long)]
    out: PathBuf,
    /// Which per-page count to fit
    #[arg(long, default_value = "external")]
    series: CountSeries,
    /// Drop counts below this floor before fitting; zero counts are
    /// always dropped (the model's support is positive)
    #[arg(long = "truncate-below")]
    truncate_below: Option<f64>,
    /// Detection threshold recorded in the model file
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
}

#[derive(Args)]
struct DetectArgs {
    /// Results file or profiles file (JSON lines)
    #[arg(long)]
    input: PathBuf,
    /// Fitted model JSON produced by `fit`
    #[arg(long)]
    model: PathBuf,
    /// Flag pages whose two-sided tail probability falls below this;
    /// defaults to the threshold recorded in the model file
    #[arg(long)]
    alpha: Option<f64>,
    /// Print every page, not just the flagged ones
    #[arg(long)]
    all: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Results file or profiles file (JSON lines)
    #[arg(long)]
    input: PathBuf,
    /// Output format: markdown-table, comma-separated, or json
    #[arg(long, default_value = "markdown-table")]
    format: RenderFormat,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a dependency-count histogram CSV to this path
    #[arg(long)]
    histogram: Option<PathBuf>,
    /// Histogram bin width
    #[arg(long = "bin-width", default_value_t = 10.0)]
    bin_width: f64,
    /// Which per-page count the histogram bins
    #[arg(long, default_value = "external")]
    series: CountSeries,
    /// Fitted model JSON; adds expected per-bin counts to the histogram
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Results file (JSON lines)
    #[arg(long)]
    input: PathBuf,
    /// Sample size
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Seed for the sampling RNG; same seed, same sample
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the sample here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TriageArgs {
    /// Results file (JSON lines)
    #[arg(long)]
    input: PathBuf,
    /// Write re-triaged records here; without it only the cause
    /// summary is printed
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stub DNS zone file used instead of the system resolver
    #[arg(long)]
    resolver_stub: Option<PathBuf>,
}

/// Usage exits 2, runtime exits 1. Bad flags and invalid
/// configuration are usage; everything that goes wrong while doing the
/// work is runtime.
enum Failure {
    Usage(String),
    Runtime(String),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn runtime(err: impl std::fmt::Display) -> Failure {
    Failure::Runtime(err.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Scan(args) => cmd_scan(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Report(args) => cmd_report(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Triage(args) => cmd_triage(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn cmd_scan(args: ScanArgs) -> Result<(), Failure> {
    if args.top == 0 {
        return Err(usage("--top must be at least 1"));
    }
    let mut config = ScanConfig {
        concurrency: args.concurrency,
        per_host_limit: args.per_host,
        timeout_secs: args.timeout,
        user_agent: args.user_agent,
        retries: args.retries,
        host_overrides: HashMap::new(),
    };
    for pair in &args.resolve {
        let (host, addr) = pair
            .split_once('=')
            .ok_or_else(|| usage(format!("--resolve {pair:?}: expected HOST=IP:PORT")))?;
        let addr: SocketAddr = addr
            .parse()
            .map_err(|e| usage(format!("--resolve {pair:?}: bad address: {e}")))?;
        config.host_overrides.insert(host.to_string(), addr);
    }
    config.validate().map_err(|e| usage(e.message))?;

    let sites = linkrot::load_site_list(&args.input, args.top).map_err(runtime)?;
    if sites.skipped > 0 {
        eprintln!("site list: skipped {} unusable rows", sites.skipped);
    }
    let fetch_log = match &args.fetch_log {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| runtime(format!("{}: {e}", path.display())))?
            .lines()
            .map(str::to_string)
            .collect(),
        None => Vec::new(),
    };
    let resolver = build_resolver(args.resolver_stub.as_deref())?;

    let plan = ScanPlan {
        sites: sites.entries,
        config,
        site_list_path: args.input.to_string_lossy().into_owned(),
        top_n: args.top,
        out_path: args.out.clone(),
        resume: args.resume,
        fetch_log,
        resolver,
        rules: Arc::new(SuffixRules::bundled()),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let runtime_handle = tokio::runtime::Runtime::new().map_err(runtime)?;
    let manifest = runtime_handle.block_on(run_scan(&plan)).map_err(runtime)?;

    println!(
        "scanned {} pages: {} fetched, {} failed, {} skipped via resume",
        manifest.pages_attempted,
        manifest.pages_succeeded,
        manifest.pages_failed,
        manifest.pages_skipped_resume
    );
    println!("results:  {}", args.out.display());
    println!("pages:    {}", pages_path(&args.out).display());
    println!("manifest: {}", linkrot::manifest_path(&args.out).display());
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<(), Failure> {
    check_alpha(args.alpha)?;
    if let Some(floor) = args.truncate_below {
        if !(floor.is_finite() && floor >= 0.0) {
            return Err(usage("--truncate-below must be a non-negative number"));
        }
    }
    let profiles = load_profiles(&args.input)?;
    let counts = series_counts(&profiles, args.series, args.truncate_below);
    let model = fit_gamma(&counts).map_err(runtime)?;
    let file = ModelFile::new(&model, args.alpha, args.truncate_below);
    let text = serde_json::to_string_pretty(&file).map_err(runtime)?;
    std::fs::write(&args.out, text + "\n")
        .map_err(|e| runtime(format!("{}: {e}", args.out.display())))?;

    println!(
        "fitted gamma over {} of {} pages (series: {})",
        model.n,
        profiles.len(),
        series_name(args.series)
    );
    println!("k     = {:.6}", model.shape);
    println!("theta = {:.6}", model.scale);
    println!("KS    = {:.6}", model.ks_statistic);
    println!("model: {}", args.out.display());
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> Result<(), Failure> {
    let file = load_model(&args.model)?;
    let alpha = args.alpha.unwrap_or(file.alpha_default);
    check_alpha(alpha)?;
    let profiles = load_profiles(&args.input)?;
    let verdicts = detect_anomalies(&profiles, &file.model(), alpha);
    let flagged = verdicts.iter().filter(|v| v.flagged).count();

    println!("domain\tobserved\ttail_probability\tside\tflagged");
    for verdict in &verdicts {
        if !(verdict.flagged || args.all) {
            continue;
        }
        println!(
            "{}\t{}\t{:e}\t{}\t{}",
            verdict.domain,
            verdict.observed,
            verdict.tail_prob,
            verdict.side,
            if verdict.flagged { "yes" } else { "no" }
        );
    }
    eprintln!("{flagged} of {} pages flagged at alpha {alpha}", verdicts.len());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let profiles = load_profiles(&args.input)?;
    let stats = summarize(&profiles);
    let text = render(&stats, args.format).map_err(runtime)?;
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| runtime(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }

    if let Some(path) = &args.histogram {
        if !(args.bin_width.is_finite() && args.bin_width > 0.0) {
            return Err(usage("--bin-width must be a positive number"));
        }
        let overlay = match &args.model {
            Some(model_path) => Some(load_model(model_path)?.model()),
            None => None,
        };
        let hist = histogram(&profiles, args.series, args.bin_width, overlay);
        std::fs::write(path, histogram_csv(&hist))
            .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        eprintln!("histogram: {}", path.display());
    }
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> Result<(), Failure> {
    let (records, malformed) = read_results(&args.input).map_err(runtime)?;
    warn_malformed(malformed);
    let picked = sample_for_review(&records, args.n, args.seed).map_err(runtime)?;
    let mut out = String::new();
    for record in &picked {
        out.push_str(&serde_json::to_string(record).map_err(runtime)?);
        out.push('\n');
    }
    match &args.out {
        Some(path) => std::fs::write(path, out)
            .map_err(|e| runtime(format!("{}: {e}", path.display())))?,
        None => print!("{out}"),
    }
    Ok(())
}

fn cmd_triage(args: TriageArgs) -> Result<(), Failure> {
    let (records, malformed) = read_results(&args.input).map_err(runtime)?;
    warn_malformed(malformed);
    let resolver = build_resolver(args.resolver_stub.as_deref())?;
    let rules = SuffixRules::bundled();

    let mut dns_cache: HashMap<String, DnsState> = HashMap::new();
    let mut causes: BTreeMap<String, u64> = BTreeMap::new();
    let mut retriaged = Vec::with_capacity(records.len());
    let mut broken = 0u64;
    let mut unrebuildable = 0u64;
    for record in records {
        if !record.broken {
            retriaged.push(record);
            continue;
        }
        broken += 1;
        let Some(result) = rebuild_probe_result(&record) else {
            unrebuildable += 1;
            retriaged.push(record);
            continue;
        };
        let host = result.reference.url.host().to_string();
        let state = match dns_cache.get(&host) {
            Some(&state) => state,
            None => {
                let state = resolve_dns_state(&host, &rules, resolver.as_ref());
                dns_cache.insert(host, state);
                state
            }
        };
        let signals = detect_typos(&result.reference.raw_text, &rules);
        match triage_broken(&result, state, signals) {
            Ok(verdict) => {
                *causes.entry(verdict.cause.to_string()).or_default() += 1;
                retriaged.push(record.with_triage(&verdict));
            }
            Err(_) => {
                unrebuildable += 1;
                retriaged.push(record);
            }
        }
    }

    println!("{} records, {} broken", retriaged.len(), broken);
    let mut rows: Vec<(&String, &u64)> = causes.iter().collect();
    rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    for (cause, count) in rows {
        println!("{cause}\t{count}");
    }
    if unrebuildable > 0 {
        eprintln!("{unrebuildable} broken records kept their old verdicts (could not re-triage)");
    }

    if let Some(path) = &args.out {
        let mut out = String::new();
        for record in &retriaged {
            out.push_str(&serde_json::to_string(record).map_err(runtime)?);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        eprintln!("re-triaged results: {}", path.display());
    }
    Ok(())
}

fn build_resolver(stub: Option<&Path>) -> Result<Arc<dyn DnsLookup + Send + Sync>, Failure> {
    match stub {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            let resolver = StubResolver::from_text(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            Ok(Arc::new(resolver))
        }
        None => Ok(Arc::new(SystemResolver)),
    }
}

fn check_alpha(alpha: f64) -> Result<(), Failure> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(usage("--alpha must be between 0 and 0.5 exclusive"))
    }
}

fn warn_malformed(malformed: usize) {
    if malformed > 0 {
        eprintln!("skipped {malformed} malformed lines");
    }
}

/// Accepts either raw results or pre-built profiles, telling them
/// apart by shape: profile lines carry a per_category object.
fn load_profiles(path: &Path) -> Result<Vec<HomepageProfile>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let first = text.lines().find(|line| !line.trim().is_empty());
    let is_profiles = first
        .and_then(|line| serde_json::from_str::<serde_json::Value>(line).ok())
        .is_some_and(|value| value.get("per_category").is_some());

    if is_profiles {
        let mut profiles = Vec::new();
        let mut malformed = 0usize;
        for line in text.lines().filter(|line| !line.trim().is_empty()) {
            match serde_json::from_str::<HomepageProfile>(line) {
                Ok(profile) => profiles.push(profile),
                Err(_) => malformed += 1,
            }
        }
        warn_malformed(malformed);
        Ok(profiles)
    } else {
        let (records, malformed) = read_results(path).map_err(runtime)?;
        warn_malformed(malformed);
        let pages = load_sidecar_pages(path)?;
        Ok(build_profiles_with_pages(&records, &pages))
    }
}

fn load_sidecar_pages(results_path: &Path) -> Result<Vec<PageRecord>, Failure> {
    let sidecar = pages_path(results_path);
    if !sidecar.exists() {
        return Ok(Vec::new());
    }
    let (pages, malformed) = read_pages(&sidecar).map_err(runtime)?;
    warn_malformed(malformed);
    Ok(pages)
}

fn load_model(path: &Path) -> Result<ModelFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn series_counts(
    profiles: &[HomepageProfile],
    series: CountSeries,
    truncate_below: Option<f64>,
) -> Vec<f64> {
    let floor = truncate_below.unwrap_or(0.0);
    profiles
        .iter()
        .map(|p| series.value_of(p) as f64)
        .filter(|&count| count > 0.0 && count >= floor)
        .collect()
}

fn series_name(series: CountSeries) -> &'static str {
    match series {
        CountSeries::External => "external",
        CountSeries::Total => "total",
    }
}

/// Stored records carry everything a probe result held, so triage can
/// be recomputed without touching the network targets again.
fn rebuild_probe_result(record: &ScanRecord) -> Option<ProbeResult> {
    let origin_page = AbsoluteUrl::parse(&record.page_url).ok()?;
    let url = AbsoluteUrl::parse(&record.url).ok()?;
    let kind = match record.outcome_kind {
        OutcomeKind::HttpResponse => ProbeKind::HttpResponse(record.status?),
        OutcomeKind::DnsFailure => ProbeKind::DnsFailure,
        OutcomeKind::ConnectFailure => ProbeKind::ConnectFailure,
        OutcomeKind::TlsFailure => ProbeKind::TlsFailure,
        OutcomeKind::Timeout => ProbeKind::Timeout,
    };
    Some(ProbeResult {
        reference: ResourceRef {
            origin_page,
            url: url.clone(),
            category: record.category,
            scope: record.scope,
            extraction_origin: record.extraction_origin,
            raw_text: record.raw_text.clone(),
        },
        outcome: ProbeOutcome {
            url,
            kind,
            content_type: record.content_type.clone(),
            latency_ms: record.latency_ms,
            fetched_at: record.fetched_at,
        },
        broken: record.broken,
        header_category: None,
        category_mismatch: false,
    })
}
