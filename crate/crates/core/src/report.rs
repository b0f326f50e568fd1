//! The shareable per-portal report, its canonical JSON form, and
//! within-segment comparison between portals.
//!
//! The report deliberately carries no traffic totals. Visit and view counts
//! go to [`Diagnostics`], which is meant to stay with the portal that
//! produced it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::catalog::{AgeSummary, Diversity, GapFlag, GapReport, Richness};
use crate::error::{Error, Result};
use crate::position::PositionProfile;
use crate::segmentation::{segment, DemandTrend, DynamicsClass, Quadrant, SegmentLabel, Size};
use crate::structure::OrganizationProfile;
use crate::usage::{AnalysisPeriod, DemandCounts, NavigationSummary, Recency};

pub const SCHEMA_VERSION: &str = "portal-report/1";
pub const TOOL_NAME: &str = "portal-metrics";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const SCHEMA_TEXT: &str = include_str!("../schema/portal-report.schema.json");

/// Every parameter and algorithm choice that affects a metric value.
///
/// Two reports are comparable only when their methodologies are equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Methodology {
    pub session_timeout_seconds: i64,
    pub bucket_seconds: i64,
    pub gap_threshold: f64,
    pub growth_threshold: f64,
    pub bridge_min_score: f64,
    pub bridge_min_communities: usize,
    pub authority_percentile: f64,
    pub hub_percentile: f64,
    /// Conversion constant for unreachable pairs; `None` means the node count.
    pub distance_k: Option<u32>,
    pub linearity_band_low: f64,
    pub linearity_band_high: f64,
    pub community_algorithm: String,
    pub community_seed: u64,
    pub navigability_definition: String,
    pub linearity_definition: String,
    pub diversity_log_base: String,
    pub size_rule: String,
    pub dynamics_rule: String,
    pub visitor_identification: String,
    pub views_rule: String,
    pub bot_signatures_sha256: String,
}

impl Default for Methodology {
    fn default() -> Self {
        Self {
            session_timeout_seconds: crate::usage::DEFAULT_SESSION_TIMEOUT_SECS,
            bucket_seconds: 86_400,
            gap_threshold: 0.10,
            growth_threshold: crate::segmentation::DEFAULT_GROWTH_THRESHOLD,
            bridge_min_score: 0.5,
            bridge_min_communities: 2,
            authority_percentile: 0.75,
            hub_percentile: 0.75,
            distance_k: None,
            linearity_band_low: 0.2,
            linearity_band_high: 0.8,
            community_algorithm: crate::position::LABEL_PROPAGATION.to_string(),
            community_seed: 0,
            navigability_definition: "botafogo-compactness".into(),
            linearity_definition: "botafogo-stratum".into(),
            diversity_log_base: "e".into(),
            size_rule: "ratio >= network median is large".into(),
            dynamics_rule: "ols slope over mean bucket count".into(),
            visitor_identification: "auth user when present, else sha256(client address, user agent)".into(),
            views_rule: "2xx and 3xx responses".into(),
            bot_signatures_sha256: String::new(),
        }
    }
}

impl Methodology {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        if self.session_timeout_seconds <= 0 {
            return Err(Error::Config("session timeout must be positive".into()));
        }
        if self.bucket_seconds <= 0 {
            return Err(Error::Config("bucket length must be positive".into()));
        }
        if !(self.growth_threshold > 0.0) {
            return Err(Error::Config("growth threshold must be positive".into()));
        }
        unit("gap threshold", self.gap_threshold)?;
        unit("bridge score threshold", self.bridge_min_score)?;
        unit("authority percentile", self.authority_percentile)?;
        unit("hub percentile", self.hub_percentile)?;
        unit("linearity band low", self.linearity_band_low)?;
        unit("linearity band high", self.linearity_band_high)?;
        if self.linearity_band_low > self.linearity_band_high {
            return Err(Error::Config("linearity band low exceeds high".into()));
        }
        if matches!(self.distance_k, Some(k) if k < 2) {
            return Err(Error::Config("distance k must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub label: String,
    pub offer_share: f64,
    pub accessed_share: f64,
    pub gap: f64,
    pub flag: GapFlag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvisionSection {
    pub diversity_offered: Option<f64>,
    pub evenness_offered: Option<f64>,
    pub diversity_accessed_view_weighted: Option<f64>,
    pub evenness_accessed_view_weighted: Option<f64>,
    pub diversity_accessed_user_weighted: Option<f64>,
    pub evenness_accessed_user_weighted: Option<f64>,
    pub richness: f64,
    pub unknown_topics: Vec<String>,
    pub average_age_days: Option<f64>,
    pub average_age_by_topic: BTreeMap<String, f64>,
    pub gap_flags: Vec<GapEntry>,
}

/// Navigation behavior reduced to ratios; session counts stay local.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavigationShares {
    pub complexity_mean: Option<f64>,
    pub complexity_median: Option<f64>,
    pub linearity_mean: Option<f64>,
    pub linearity_median: Option<f64>,
    pub share_above_band: Option<f64>,
    pub share_below_band: Option<f64>,
}

impl From<&NavigationSummary> for NavigationShares {
    fn from(s: &NavigationSummary) -> Self {
        Self {
            complexity_mean: s.complexity_mean,
            complexity_median: s.complexity_median,
            linearity_mean: s.linearity_mean,
            linearity_median: s.linearity_median,
            share_above_band: s.share_above_band,
            share_below_band: s.share_below_band,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrganizationSection {
    pub pages: usize,
    pub depth: Option<f64>,
    pub unreachable_pages: usize,
    pub density: Option<f64>,
    pub navigability: Option<f64>,
    pub linearity: Option<f64>,
    pub distance_k: u32,
    pub navigation: Option<NavigationShares>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationInputs {
    pub relative_slope: Option<f64>,
    pub declining: bool,
    pub relative_size: Option<f64>,
    pub size_single_portal: bool,
    /// Mean days between returns of the same visitor.
    pub recency_days: Option<f64>,
    /// Page views per visit.
    pub activity_level: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool: String,
    pub tool_version: String,
    pub methodology: Methodology,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortalReport {
    pub schema_version: String,
    pub portal_id: String,
    pub period: AnalysisPeriod,
    pub provision: Option<ProvisionSection>,
    pub organization: Option<OrganizationSection>,
    pub position: Option<PositionProfile>,
    pub segmentation_inputs: Option<SegmentationInputs>,
    pub segment: Option<SegmentLabel>,
    pub metadata: ReportMetadata,
}

/// Catalog-side results feeding the provision section.
#[derive(Debug, Clone, Default)]
pub struct ProvisionOutputs {
    pub offered: Option<Diversity>,
    pub accessed_by_views: Option<Diversity>,
    pub accessed_by_users: Option<Diversity>,
    pub richness: Option<Richness>,
    pub age: Option<AgeSummary>,
    pub gaps: Option<GapReport>,
}

/// Whatever the individual modules produced for one portal.
#[derive(Debug, Clone, Default)]
pub struct ModuleOutputs {
    pub provision: Option<ProvisionOutputs>,
    pub organization: Option<OrganizationProfile>,
    pub navigation: Option<NavigationSummary>,
    pub position: Option<PositionProfile>,
    pub trend: Option<DemandTrend>,
    pub dynamics: Option<DynamicsClass>,
    pub relative_size: Option<f64>,
    pub size: Option<Size>,
    pub size_single_portal: bool,
    pub recency: Option<Recency>,
    pub activity_level: Option<f64>,
}

impl ModuleOutputs {
    fn is_empty(&self) -> bool {
        self.provision.is_none()
            && self.organization.is_none()
            && self.navigation.is_none()
            && self.position.is_none()
            && self.trend.is_none()
            && self.relative_size.is_none()
            && self.recency.is_none()
            && self.activity_level.is_none()
    }
}

/// Builds the shareable report, flagging every missing or degenerate part.
pub fn assemble_report(
    portal_id: &str,
    period: AnalysisPeriod,
    methodology: &Methodology,
    outputs: &ModuleOutputs,
) -> Result<PortalReport> {
    if outputs.is_empty() {
        return Err(Error::Domain(format!("no module produced output for portal `{portal_id}`")));
    }
    let mut flags = Vec::new();

    let provision = match &outputs.provision {
        None => {
            flags.push("provision: absent".to_string());
            None
        }
        Some(p) => {
            if p.offered.is_none() {
                flags.push("provision.diversity_offered: no content".into());
            }
            if p.accessed_by_views.is_none() {
                flags.push("provision.diversity_accessed: no joinable views".into());
            }
            if p.age.is_none() {
                flags.push("provision.average_age: no content".into());
            }
            if p.richness.is_none() {
                flags.push("provision.richness: no taxonomy".into());
            }
            Some(ProvisionSection {
                diversity_offered: p.offered.map(|d| d.entropy),
                evenness_offered: p.offered.map(|d| d.evenness),
                diversity_accessed_view_weighted: p.accessed_by_views.map(|d| d.entropy),
                evenness_accessed_view_weighted: p.accessed_by_views.map(|d| d.evenness),
                diversity_accessed_user_weighted: p.accessed_by_users.map(|d| d.entropy),
                evenness_accessed_user_weighted: p.accessed_by_users.map(|d| d.evenness),
                richness: p.richness.as_ref().map_or(0.0, |r| r.ratio),
                unknown_topics: p.richness.as_ref().map(|r| r.unknown_topics.clone()).unwrap_or_default(),
                average_age_days: p.age.as_ref().map(|a| a.mean_days),
                average_age_by_topic: p.age.as_ref().map(|a| a.by_topic.clone()).unwrap_or_default(),
                gap_flags: p
                    .gaps
                    .iter()
                    .flat_map(|g| g.topics.iter())
                    .filter_map(|t| {
                        t.flag.map(|flag| GapEntry {
                            label: t.label.clone(),
                            offer_share: t.offer_share,
                            accessed_share: t.demand_share,
                            gap: t.gap,
                            flag,
                        })
                    })
                    .collect(),
            })
        }
    };

    let organization = match &outputs.organization {
        None => {
            flags.push("organization: absent".to_string());
            None
        }
        Some(o) => {
            for d in &o.degeneracy {
                flags.push(format!("organization: degenerate graph ({d:?})"));
            }
            if o.unreachable_pages > 0 {
                flags.push(format!("organization.depth: {} pages unreachable from homepage", o.unreachable_pages));
            }
            Some(OrganizationSection {
                pages: o.pages,
                depth: o.depth,
                unreachable_pages: o.unreachable_pages,
                density: o.density,
                navigability: o.navigability,
                linearity: o.linearity,
                distance_k: o.distance_k,
                navigation: outputs.navigation.as_ref().map(NavigationShares::from),
            })
        }
    };
    if outputs.navigation.as_ref().is_some_and(|n| n.measured == 0) {
        flags.push("organization.navigation: no session with two distinct pages".into());
    }

    let position = outputs.position.clone();
    match &position {
        None => flags.push("position: absent".into()),
        Some(p) if p.isolated => flags.push("position.bridging: isolated site".into()),
        _ => {}
    }

    let segmentation_inputs = if outputs.trend.is_some()
        || outputs.relative_size.is_some()
        || outputs.recency.is_some()
        || outputs.activity_level.is_some()
    {
        let relative_slope = outputs.trend.and_then(|t| t.relative_slope);
        if outputs.trend.is_some() && relative_slope.is_none() {
            flags.push("segmentation.dynamics: indeterminate (no demand)".into());
        }
        let recency_days = outputs.recency.and_then(|r| r.mean_gap_days());
        if outputs.recency.is_some() && recency_days.is_none() {
            flags.push("segmentation.recency: no visitor with two visits".into());
        }
        if outputs.size_single_portal {
            flags.push("segmentation.size: single-portal network".into());
        }
        Some(SegmentationInputs {
            relative_slope,
            declining: outputs.dynamics.is_some_and(|d| d.declining),
            relative_size: outputs.relative_size,
            size_single_portal: outputs.size_single_portal,
            recency_days,
            activity_level: outputs.activity_level,
        })
    } else {
        flags.push("segmentation: absent".into());
        None
    };

    let segment = match (outputs.dynamics.and_then(|d| d.dynamics), outputs.size) {
        (Some(d), Some(s)) => segment(Some(d), s),
        _ => {
            flags.push("segment: unsegmented".into());
            None
        }
    };

    let report = PortalReport {
        schema_version: SCHEMA_VERSION.to_string(),
        portal_id: portal_id.to_string(),
        period,
        provision,
        organization,
        position,
        segmentation_inputs,
        segment,
        metadata: ReportMetadata {
            tool: TOOL_NAME.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            methodology: methodology.clone(),
            flags,
        },
    };
    let doc = serde_json::to_value(&report)?;
    let mut violations = validate_value(&doc);
    violations.extend(sensitivity_violations(&doc));
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(report)
}

/// The published JSON Schema of [`PortalReport`].
pub fn schema() -> &'static Value {
    static SCHEMA: OnceLock<Value> = OnceLock::new();
    SCHEMA.get_or_init(|| serde_json::from_str(SCHEMA_TEXT).expect("bundled schema is valid json"))
}

pub fn schema_text() -> &'static str {
    SCHEMA_TEXT
}

fn validator() -> &'static jsonschema::Validator {
    static VALIDATOR: OnceLock<jsonschema::Validator> = OnceLock::new();
    VALIDATOR.get_or_init(|| jsonschema::validator_for(schema()).expect("bundled schema compiles"))
}

/// Schema violations of a JSON document, one message per violation.
pub fn validate_value(doc: &Value) -> Vec<String> {
    validator()
        .iter_errors(doc)
        .map(|e| {
            let path = e.instance_path().to_string();
            format!("{}: {e}", if path.is_empty() { "/" } else { &path })
        })
        .collect()
}

/// Key fragments that would reveal traffic volume in a shared document.
pub const SENSITIVE_KEY_FRAGMENTS: &[&str] =
    &["visit", "session", "hits", "page_view", "pageview", "demand", "traffic"];

/// Keys of measured data that name traffic quantities.
///
/// `metadata.methodology` is skipped: it holds parameters such as the
/// session timeout, not observations.
pub fn sensitivity_violations(doc: &Value) -> Vec<String> {
    fn walk(v: &Value, path: &str, out: &mut Vec<String>) {
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    let here = format!("{path}/{k}");
                    if here == "/metadata/methodology" {
                        continue;
                    }
                    let lower = k.to_ascii_lowercase();
                    if SENSITIVE_KEY_FRAGMENTS.iter().any(|f| lower.contains(f)) {
                        out.push(format!("{here}: traffic-revealing field in shareable report"));
                    }
                    walk(child, &here, out);
                }
            }
            Value::Array(items) => {
                for (i, item) in items.iter().enumerate() {
                    walk(item, &format!("{path}/{i}"), out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(doc, "", &mut out);
    out
}

/// Rebuilds every object with keys in byte order.
fn canonicalize(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Map::new();
            for (k, v) in entries {
                out.insert(k, canonicalize(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

/// Serializes any value as canonical JSON: sorted keys, two-space
/// indentation, trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = canonicalize(serde_json::to_value(value)?);
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    Ok(text)
}

pub fn serialize_report(report: &PortalReport) -> Result<String> {
    to_canonical_json(report)
}

/// Parses and schema-checks a report document.
pub fn deserialize_report(bytes: &[u8]) -> Result<PortalReport> {
    let doc: Value = serde_json::from_slice(bytes)?;
    let mut violations = validate_value(&doc);
    violations.extend(sensitivity_violations(&doc));
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(serde_json::from_value(doc)?)
}

/// Local-only companion of a report holding traffic figures and ingestion
/// tallies. Never meant for sharing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub portal_id: String,
    pub log_lines: usize,
    pub malformed_log_lines: usize,
    pub bot_entries: usize,
    pub human_entries: usize,
    pub non_view_entries: usize,
    pub sessions: usize,
    pub page_views: usize,
    pub demand: Option<DemandCounts>,
    pub recency: Option<Recency>,
    pub navigation: Option<NavigationSummary>,
    pub uncatalogued_views: u64,
    pub catalog_records: usize,
    pub catalog_duplicates: usize,
    pub catalog_row_errors: Vec<String>,
    pub site_self_loops: usize,
    pub site_parallel_edges: usize,
    pub link_intra_site: usize,
    pub link_unmapped_urls: usize,
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Area {
    Provision,
    Organization,
    Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
    /// Values near the middle of `[0, 1]` are best.
    MidIsBetter,
}

struct MetricDef {
    name: &'static str,
    area: Area,
    direction: Direction,
    unit_interval: bool,
    get: fn(&PortalReport) -> Option<f64>,
}

const METRICS: &[MetricDef] = &[
    MetricDef {
        name: "diversity_offered",
        area: Area::Provision,
        direction: Direction::HigherIsBetter,
        unit_interval: false,
        get: |r| r.provision.as_ref()?.diversity_offered,
    },
    MetricDef {
        name: "evenness_offered",
        area: Area::Provision,
        direction: Direction::HigherIsBetter,
        unit_interval: true,
        get: |r| r.provision.as_ref()?.evenness_offered,
    },
    MetricDef {
        name: "richness",
        area: Area::Provision,
        direction: Direction::HigherIsBetter,
        unit_interval: true,
        get: |r| r.provision.as_ref().map(|p| p.richness),
    },
    MetricDef {
        name: "average_age_days",
        area: Area::Provision,
        direction: Direction::LowerIsBetter,
        unit_interval: false,
        get: |r| r.provision.as_ref()?.average_age_days,
    },
    MetricDef {
        name: "depth",
        area: Area::Organization,
        direction: Direction::LowerIsBetter,
        unit_interval: false,
        get: |r| r.organization.as_ref()?.depth,
    },
    MetricDef {
        name: "density",
        area: Area::Organization,
        direction: Direction::HigherIsBetter,
        unit_interval: true,
        get: |r| r.organization.as_ref()?.density,
    },
    MetricDef {
        name: "navigability",
        area: Area::Organization,
        direction: Direction::HigherIsBetter,
        unit_interval: true,
        get: |r| r.organization.as_ref()?.navigability,
    },
    MetricDef {
        name: "linearity",
        area: Area::Organization,
        direction: Direction::MidIsBetter,
        unit_interval: true,
        get: |r| r.organization.as_ref()?.linearity,
    },
    MetricDef {
        name: "navigation_complexity",
        area: Area::Organization,
        direction: Direction::HigherIsBetter,
        unit_interval: true,
        get: |r| r.organization.as_ref()?.navigation.as_ref()?.complexity_mean,
    },
    MetricDef {
        name: "authoritativeness",
        area: Area::Position,
        direction: Direction::HigherIsBetter,
        unit_interval: false,
        get: |r| r.position.as_ref().map(|p| p.in_degree as f64),
    },
    MetricDef {
        name: "hubness",
        area: Area::Position,
        direction: Direction::HigherIsBetter,
        unit_interval: false,
        get: |r| r.position.as_ref().map(|p| p.out_degree as f64),
    },
    MetricDef {
        name: "bridge_score",
        area: Area::Position,
        direction: Direction::HigherIsBetter,
        unit_interval: true,
        get: |r| r.position.as_ref()?.bridge_score,
    },
];

impl MetricDef {
    fn score(&self, v: f64) -> f64 {
        match self.direction {
            Direction::HigherIsBetter => v,
            Direction::LowerIsBetter => -v,
            Direction::MidIsBetter => -(v - 0.5).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub portal_id: String,
    pub value: f64,
    /// 1 is best; equal values share a rank.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRanking {
    pub metric: String,
    pub area: Area,
    pub direction: Direction,
    pub ranking: Vec<RankEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDelta {
    pub portal_a: String,
    pub portal_b: String,
    pub metric: String,
    /// Value of `portal_a` minus value of `portal_b`.
    pub delta: f64,
}

/// Suggests that `portal_id` learn from the segment leader on one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningPointer {
    pub portal_id: String,
    pub learn_from: String,
    pub metric: String,
    pub area: Area,
    pub value: f64,
    pub leader_value: f64,
    /// Shortfall against the leader, relative for unbounded metrics.
    pub shortfall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentComparison {
    pub quadrant: Quadrant,
    pub name: String,
    pub portals: Vec<String>,
    pub rankings: Vec<MetricRanking>,
    pub deltas: Vec<PairDelta>,
    pub pointers: Vec<LearningPointer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkComparison {
    pub margin: f64,
    pub methodology: Methodology,
    pub segments: Vec<SegmentComparison>,
    /// Portals left out because they have no segment.
    pub unsegmented: Vec<String>,
}

pub const DEFAULT_COMPARISON_MARGIN: f64 = 0.05;

/// Ranks portals against their segment peers and emits learning pointers.
///
/// Refuses outright when methodologies differ, or when two portals of the
/// same segment cover disjoint periods or use different bucket lengths.
pub fn compare_within_segment(reports: &[PortalReport], margin: f64) -> Result<NetworkComparison> {
    if reports.len() < 2 {
        return Err(Error::ComparisonRefused("need at least two reports".into()));
    }
    if !(margin >= 0.0) {
        return Err(Error::Config(format!("comparison margin must be non-negative, got {margin}")));
    }
    let reference = &reports[0].metadata.methodology;
    for r in &reports[1..] {
        if &r.metadata.methodology != reference {
            return Err(Error::ComparisonRefused(format!(
                "`{}` and `{}` were computed with different methodology ({})",
                reports[0].portal_id,
                r.portal_id,
                methodology_diff(reference, &r.metadata.methodology).join(", ")
            )));
        }
    }
    let mut ids: Vec<&str> = reports.iter().map(|r| r.portal_id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::ComparisonRefused(format!("portal `{}` appears twice", w[0])));
    }

    let mut by_segment: BTreeMap<Quadrant, Vec<&PortalReport>> = BTreeMap::new();
    let mut unsegmented = Vec::new();
    for r in reports {
        match &r.segment {
            Some(s) => by_segment.entry(s.quadrant).or_default().push(r),
            None => unsegmented.push(r.portal_id.clone()),
        }
    }
    unsegmented.sort();

    let mut segments = Vec::new();
    for (quadrant, mut members) in by_segment {
        if members.len() < 2 {
            continue;
        }
        members.sort_by(|a, b| a.portal_id.cmp(&b.portal_id));
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                if a.period.bucket_seconds != b.period.bucket_seconds || !a.period.overlaps(&b.period) {
                    return Err(Error::ComparisonRefused(format!(
                        "`{}` and `{}` cover incompatible periods",
                        a.portal_id, b.portal_id
                    )));
                }
            }
        }
        segments.push(compare_segment(quadrant, &members, margin));
    }
    Ok(NetworkComparison { margin, methodology: reference.clone(), segments, unsegmented })
}

fn compare_segment(quadrant: Quadrant, members: &[&PortalReport], margin: f64) -> SegmentComparison {
    let mut rankings = Vec::new();
    let mut deltas = Vec::new();
    let mut pointers = Vec::new();
    for m in METRICS {
        let mut values: Vec<(&str, f64)> = members
            .iter()
            .filter_map(|r| (m.get)(r).map(|v| (r.portal_id.as_str(), v)))
            .collect();
        if values.len() < 2 {
            continue;
        }
        for (i, (a, va)) in values.iter().enumerate() {
            for (b, vb) in &values[i + 1..] {
                deltas.push(PairDelta {
                    portal_a: a.to_string(),
                    portal_b: b.to_string(),
                    metric: m.name.to_string(),
                    delta: va - vb,
                });
            }
        }
        values.sort_by(|x, y| m.score(y.1).total_cmp(&m.score(x.1)).then_with(|| x.0.cmp(y.0)));
        let mut ranking = Vec::with_capacity(values.len());
        for (i, &(p, v)) in values.iter().enumerate() {
            let rank = match ranking.last() {
                Some(RankEntry { value, rank, .. }) if m.score(*value) == m.score(v) => *rank,
                _ => i + 1,
            };
            ranking.push(RankEntry { portal_id: p.to_string(), value: v, rank });
        }
        let (leader, best) = values[0];
        let scale = if m.unit_interval || best == 0.0 { 1.0 } else { best.abs() };
        for &(p, v) in &values[1..] {
            let shortfall = (m.score(best) - m.score(v)) / scale;
            if shortfall > margin {
                pointers.push(LearningPointer {
                    portal_id: p.to_string(),
                    learn_from: leader.to_string(),
                    metric: m.name.to_string(),
                    area: m.area,
                    value: v,
                    leader_value: best,
                    shortfall,
                });
            }
        }
        rankings.push(MetricRanking {
            metric: m.name.to_string(),
            area: m.area,
            direction: m.direction,
            ranking,
        });
    }
    SegmentComparison {
        quadrant,
        name: quadrant.name().to_string(),
        portals: members.iter().map(|r| r.portal_id.clone()).collect(),
        rankings,
        deltas,
        pointers,
    }
}

fn methodology_diff(a: &Methodology, b: &Methodology) -> Vec<String> {
    let (Ok(Value::Object(a)), Ok(Value::Object(b))) = (serde_json::to_value(a), serde_json::to_value(b)) else {
        return vec!["unserializable methodology".into()];
    };
    let mut keys: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    keys.sort();
    keys.into_iter()
        .map(|k| format!("{k}: {} vs {}", a[k], b.get(k).unwrap_or(&Value::Null)))
        .collect()
}

impl NetworkComparison {
    /// Plain-text summary: one table per segment plus the learning pointers.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        if self.segments.is_empty() {
            out.push_str("no segment holds two or more comparable portals\n");
        }
        for seg in &self.segments {
            let _ = writeln!(out, "{}", seg.quadrant);
            let width = seg.portals.iter().map(String::len).max().unwrap_or(6).max(8);
            let _ = write!(out, "{:<24}", "metric");
            for p in &seg.portals {
                let _ = write!(out, " {p:>width$}");
            }
            out.push('\n');
            for r in &seg.rankings {
                let _ = write!(out, "{:<24}", r.metric);
                for p in &seg.portals {
                    match r.ranking.iter().find(|e| &e.portal_id == p) {
                        Some(e) => {
                            let cell = format!("{:.4} #{}", e.value, e.rank);
                            let _ = write!(out, " {cell:>width$}");
                        }
                        None => {
                            let _ = write!(out, " {:>width$}", "-");
                        }
                    }
                }
                out.push('\n');
            }
            for p in &seg.pointers {
                let _ = writeln!(
                    out,
                    "  {} could learn from {} on {} ({:?}): {:.4} vs {:.4}",
                    p.portal_id, p.learn_from, p.metric, p.area, p.value, p.leader_value
                );
            }
            out.push('\n');
        }
        if !self.unsegmented.is_empty() {
            let _ = writeln!(out, "unsegmented: {}", self.unsegmented.join(", "));
        }
        out
    }
}
