//! Summary statistics and report rendering.
//!
//! Everything here is pure aggregation over [`HomepageProfile`]s:
//! prevalence of pages with broken links, external-reference type
//! breakdowns, the broken counterpart, and histogram data with an
//! optional fitted-curve overlay. Percentages are kept full-precision
//! in the structs and rounded to one decimal only at render time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::ResourceCategory;
use crate::gamma::GammaModel;
use crate::store::HomepageProfile;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("unknown format {0:?} (expected markdown-table, comma-separated, or json)")]
    UnknownFormat(String),
    #[error("report serialization failed: {0}")]
    Serialize(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: ResourceCategory,
    pub count: u64,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    /// True when no profiles were summarized; every number is zero.
    pub empty: bool,
    pub pages_scanned: u64,
    pub pages_with_broken: u64,
    pub pct_pages_with_broken: f64,
    pub total_refs: u64,
    pub internal_refs: u64,
    pub total_external_refs: u64,
    pub broken_external_refs: u64,
    /// Broken external references as a share of external references.
    pub pct_broken: f64,
    /// External references by type, descending by count.
    pub category_breakdown: Vec<CategoryRow>,
    /// Broken external references by type, descending by count.
    pub broken_category_breakdown: Vec<CategoryRow>,
    pub mean_deps_per_page: f64,
    pub pct_internal: f64,
    pub pct_external: f64,
}

impl SummaryStats {
    fn zeroed() -> Self {
        Self {
            empty: true,
            pages_scanned: 0,
            pages_with_broken: 0,
            pct_pages_with_broken: 0.0,
            total_refs: 0,
            internal_refs: 0,
            total_external_refs: 0,
            broken_external_refs: 0,
            pct_broken: 0.0,
            category_breakdown: Vec::new(),
            broken_category_breakdown: Vec::new(),
            mean_deps_per_page: 0.0,
            pct_internal: 0.0,
            pct_external: 0.0,
        }
    }
}

fn pct(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

fn breakdown(counts: &[(ResourceCategory, u64)], total: u64) -> Vec<CategoryRow> {
    let mut rows: Vec<CategoryRow> = counts
        .iter()
        .filter(|(_, count)| *count > 0)
        .map(|&(category, count)| CategoryRow {
            category,
            count,
            percentage: pct(count, total),
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.category.cmp(&b.category)));
    rows
}

/// Aggregate profiles into the headline numbers.
///
/// Type breakdowns cover external references only; prevalence is the
/// share of scanned pages carrying at least one broken reference of
/// any scope; `mean_deps_per_page` averages all references per page.
pub fn summarize(profiles: &[HomepageProfile]) -> SummaryStats {
    if profiles.is_empty() {
        return SummaryStats::zeroed();
    }
    let pages_scanned = profiles.len() as u64;
    let mut pages_with_broken = 0u64;
    let mut total_refs = 0u64;
    let mut internal_refs = 0u64;
    let mut external_refs = 0u64;
    let mut broken_external = 0u64;
    let mut external_by_cat = std::collections::BTreeMap::new();
    let mut broken_by_cat = std::collections::BTreeMap::new();
    for profile in profiles {
        if profile.has_broken {
            pages_with_broken += 1;
        }
        total_refs += profile.total_refs;
        internal_refs += profile.internal_count;
        external_refs += profile.external_count;
        for (&category, &count) in &profile.external_per_category {
            *external_by_cat.entry(category).or_insert(0u64) += count;
        }
        for (&category, &count) in &profile.broken_external_per_category {
            *broken_by_cat.entry(category).or_insert(0u64) += count;
            broken_external += count;
        }
    }
    let external_counts: Vec<_> = external_by_cat.into_iter().collect();
    let broken_counts: Vec<_> = broken_by_cat.into_iter().collect();
    SummaryStats {
        empty: false,
        pages_scanned,
        pages_with_broken,
        pct_pages_with_broken: pct(pages_with_broken, pages_scanned),
        total_refs,
        internal_refs,
        total_external_refs: external_refs,
        broken_external_refs: broken_external,
        pct_broken: pct(broken_external, external_refs),
        category_breakdown: breakdown(&external_counts, external_refs),
        broken_category_breakdown: breakdown(&broken_counts, broken_external),
        mean_deps_per_page: total_refs as f64 / pages_scanned as f64,
        pct_internal: pct(internal_refs, total_refs),
        pct_external: pct(external_refs, total_refs),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RenderFormat {
    MarkdownTable,
    CommaSeparated,
    Json,
}

impl std::str::FromStr for RenderFormat {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "markdown-table" | "markdown" => Ok(Self::MarkdownTable),
            "comma-separated" | "csv" => Ok(Self::CommaSeparated),
            "json" => Ok(Self::Json),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

/// Space-group digits in threes: 2536692 → "2 536 692".
fn group_digits(n: u64) -> String {
    let digits = n.to_string();
    let mut grouped = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            grouped.push(' ');
        }
        grouped.push(c);
    }
    grouped
}

fn markdown_table(title: &str, rows: &[CategoryRow], out: &mut String) {
    out.push_str(&format!("## {title}\n\n"));
    if rows.is_empty() {
        out.push_str("(no data)\n\n");
        return;
    }
    out.push_str("| Type | Number | Percentage |\n|---|---:|---:|\n");
    for row in rows {
        out.push_str(&format!(
            "| {} | {} | {:.1}% |\n",
            row.category.label(),
            group_digits(row.count),
            row.percentage
        ));
    }
    out.push('\n');
}

/// Deterministic text output for a summary.
pub fn render(stats: &SummaryStats, format: RenderFormat) -> Result<String, ReportError> {
    match format {
        RenderFormat::Json => serde_json::to_string_pretty(stats)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| ReportError::Serialize(e.to_string())),
        RenderFormat::CommaSeparated => {
            let mut out = String::from("table,type,count,percentage\n");
            for row in &stats.category_breakdown {
                out.push_str(&format!(
                    "external,{},{},{:.1}\n",
                    row.category.label(),
                    row.count,
                    row.percentage
                ));
            }
            for row in &stats.broken_category_breakdown {
                out.push_str(&format!(
                    "broken_external,{},{},{:.1}\n",
                    row.category.label(),
                    row.count,
                    row.percentage
                ));
            }
            Ok(out)
        }
        RenderFormat::MarkdownTable => {
            let mut out = String::from("# Link audit summary\n\n");
            if stats.empty {
                out.push_str("No pages scanned.\n");
                return Ok(out);
            }
            out.push_str(&format!(
                "Pages scanned: {}\n\nPages with at least one broken link: {} ({:.1}%)\n\n",
                group_digits(stats.pages_scanned),
                group_digits(stats.pages_with_broken),
                stats.pct_pages_with_broken
            ));
            out.push_str(&format!(
                "References: {} total, mean {:.1} per page ({:.1}% internal, {:.1}% external)\n\n",
                group_digits(stats.total_refs),
                stats.mean_deps_per_page,
                stats.pct_internal,
                stats.pct_external
            ));
            out.push_str(&format!(
                "External references: {}, of which {} broken ({:.2}%)\n\n",
                group_digits(stats.total_external_refs),
                group_digits(stats.broken_external_refs),
                stats.pct_broken
            ));
            markdown_table("External references by type", &stats.category_breakdown, &mut out);
            markdown_table(
                "Broken external references by type",
                &stats.broken_category_breakdown,
                &mut out,
            );
            Ok(out)
        }
    }
}

/// Which per-page count a histogram or fit runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountSeries {
    External,
    Total,
}

impl CountSeries {
    pub fn value_of(self, profile: &HomepageProfile) -> u64 {
        match self {
            CountSeries::External => profile.external_count,
            CountSeries::Total => profile.total_refs,
        }
    }
}

impl std::str::FromStr for CountSeries {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "external" => Ok(Self::External),
            "total" => Ok(Self::Total),
            other => Err(format!("unknown series {other:?} (expected external or total)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub count: u64,
    /// Model-implied count n·(F(upper) − F(lower)) when an overlay is
    /// present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub bins: Vec<HistogramBin>,
    pub overlay: Option<GammaModel>,
}

/// Contiguous fixed-width bins from zero through the maximum observed
/// value; each profile lands in exactly one bin.
pub fn histogram(
    profiles: &[HomepageProfile],
    series: CountSeries,
    bin_width: f64,
    overlay: Option<GammaModel>,
) -> Histogram {
    assert!(bin_width > 0.0, "bin width must be positive");
    let mut counts: Vec<u64> = Vec::new();
    for profile in profiles {
        let value = series.value_of(profile) as f64;
        let index = (value / bin_width).floor() as usize;
        if counts.len() <= index {
            counts.resize(index + 1, 0);
        }
        counts[index] += 1;
    }
    let n = profiles.len() as f64;
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let lower = i as f64 * bin_width;
            let expected = overlay.as_ref().map(|model| {
                let lo = model.cdf(lower).unwrap_or(0.0);
                let hi = model.cdf(lower + bin_width).unwrap_or(1.0);
                n * (hi - lo)
            });
            HistogramBin { lower, count, expected }
        })
        .collect();
    Histogram { bin_width, bins, overlay }
}

/// Histogram as comma-separated plot data.
pub fn histogram_csv(histogram: &Histogram) -> String {
    let mut out = String::from("bin_lower,count,expected_count\n");
    for bin in &histogram.bins {
        match bin.expected {
            Some(expected) => {
                out.push_str(&format!("{},{},{:.6}\n", bin.lower, bin.count, expected))
            }
            None => out.push_str(&format!("{},{},\n", bin.lower, bin.count)),
        }
    }
    out
}
