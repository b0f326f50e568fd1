//! End-to-end runs: parsed inputs in, reports and local diagnostics out.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::catalog::{
    average_age, demand_offer_gap, offer_distribution, richness, shannon_diversity, Axis, ContentRecord,
    TopicTaxonomy,
};
use crate::error::{Error, Result};
use crate::position::{detect_communities, position_profile, CommunityAssignment, CrossSiteGraph, PositionThresholds};
use crate::report::{assemble_report, Diagnostics, Methodology, ModuleOutputs, PortalReport, ProvisionOutputs};
use crate::segmentation::{demand_trend, dynamics_class, relative_size, size_class, SizeClasses};
use crate::structure::{organization_profile, SiteGraph};
use crate::usage::{
    accessed_distribution, activity_level, filter_agents, navigation_summary, overall_demand, recency, sessionize,
    AnalysisPeriod, BotSignatures, LinearityBand, LogParse, PathJoin, Session,
};

/// Inputs shared by every portal of the network.
#[derive(Debug, Clone, Default)]
pub struct NetworkInputs {
    /// Catalog records of all portals.
    pub catalog: Option<Vec<ContentRecord>>,
    pub taxonomy: Option<TopicTaxonomy>,
    pub cross_site: Option<CrossSiteGraph>,
}

#[derive(Debug, Clone, Default)]
pub struct PortalInputs {
    pub portal_id: String,
    /// Node of the portal in the cross-site graph; defaults to `portal_id`.
    pub site_id: Option<String>,
    pub site_graph: Option<SiteGraph>,
    pub log: Option<LogParse>,
    pub join: Option<PathJoin>,
}

#[derive(Debug, Clone)]
pub struct RunSettings {
    pub methodology: Methodology,
    pub bots: BotSignatures,
    pub axis: Axis,
    /// Date ages are measured against; defaults to the latest date seen.
    pub reference: Option<NaiveDate>,
    /// Defaults to whole days spanning every log.
    pub period: Option<AnalysisPeriod>,
}

impl Default for RunSettings {
    fn default() -> Self {
        let bots = BotSignatures::default();
        let methodology = Methodology {
            bot_signatures_sha256: signatures_digest(&bots),
            ..Methodology::default()
        };
        Self { methodology, bots, axis: Axis::Topic, reference: None, period: None }
    }
}

impl RunSettings {
    pub fn with_bots(mut self, bots: BotSignatures) -> Self {
        self.methodology.bot_signatures_sha256 = signatures_digest(&bots);
        self.bots = bots;
        self
    }

    fn thresholds(&self) -> PositionThresholds {
        let m = &self.methodology;
        PositionThresholds {
            bridge_min_score: m.bridge_min_score,
            bridge_min_communities: m.bridge_min_communities,
            authority_percentile: m.authority_percentile,
            hub_percentile: m.hub_percentile,
        }
    }
}

pub fn signatures_digest(bots: &BotSignatures) -> String {
    let mut h = Sha256::new();
    for t in bots.tokens() {
        h.update(t.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone)]
pub struct PortalOutcome {
    pub report: PortalReport,
    pub diagnostics: Diagnostics,
}

/// Network-wide values every portal run needs.
#[derive(Debug, Clone)]
pub struct NetworkContext {
    pub period: AnalysisPeriod,
    pub reference: Option<NaiveDate>,
    pub relative_sizes: BTreeMap<String, f64>,
    pub sizes: Option<SizeClasses>,
    pub communities: Option<CommunityAssignment>,
}

fn log_dates(portals: &[PortalInputs], bots: &BotSignatures) -> Option<(NaiveDate, NaiveDate)> {
    portals
        .iter()
        .filter_map(|p| p.log.as_ref())
        .flat_map(|l| l.entries.iter())
        .filter(|e| e.is_view() && !bots.matches(e))
        .map(|e| e.timestamp.date_naive())
        .fold(None, |acc, d| match acc {
            None => Some((d, d)),
            Some((lo, hi)) => Some((d.min(lo), d.max(hi))),
        })
}

pub fn network_context(
    network: &NetworkInputs,
    portals: &[PortalInputs],
    settings: &RunSettings,
) -> Result<NetworkContext> {
    settings.methodology.validate()?;
    let dates = log_dates(portals, &settings.bots);
    let period = match settings.period {
        Some(p) => p,
        None => {
            let (first, last) = dates.ok_or_else(|| {
                Error::Config("no analysis period given and no log entries to derive one from".into())
            })?;
            let p = AnalysisPeriod::days(first, last)?;
            AnalysisPeriod::new(p.start, p.end, Duration::seconds(settings.methodology.bucket_seconds))?
        }
    };
    if period.bucket_seconds != settings.methodology.bucket_seconds {
        return Err(Error::Config(format!(
            "period buckets of {}s disagree with methodology buckets of {}s",
            period.bucket_seconds, settings.methodology.bucket_seconds
        )));
    }
    let catalog_latest = network.catalog.iter().flatten().map(|r| r.published).max();
    let reference = settings
        .reference
        .or_else(|| catalog_latest.into_iter().chain(dates.map(|d| d.1)).max());

    let (relative_sizes, sizes) = match &network.catalog {
        Some(records) if !records.is_empty() => {
            let ratios = relative_size(records)?;
            let classes = size_class(&ratios);
            (ratios, Some(classes))
        }
        _ => (BTreeMap::new(), None),
    };
    let communities = network
        .cross_site
        .as_ref()
        .map(|g| detect_communities(g, settings.methodology.community_seed));
    Ok(NetworkContext { period, reference, relative_sizes, sizes, communities })
}

/// Runs every portal; portals are independent and processed in parallel.
pub fn analyze_network(
    network: &NetworkInputs,
    portals: &[PortalInputs],
    settings: &RunSettings,
) -> Result<Vec<PortalOutcome>> {
    let ctx = network_context(network, portals, settings)?;
    portals.par_iter().map(|p| analyze_portal(network, p, settings, &ctx)).collect()
}

struct UsageOutputs {
    sessions: Vec<Session>,
    diagnostics: Diagnostics,
}

fn usage_sessions(log: &LogParse, settings: &RunSettings, period: &AnalysisPeriod) -> UsageOutputs {
    let split = filter_agents(log.entries.clone(), &settings.bots);
    let human_entries = split.humans.len();
    let views: Vec<_> = split
        .humans
        .into_iter()
        .filter(|e| e.is_view() && period.contains(e.timestamp))
        .collect();
    let sessions = sessionize(&views, Duration::seconds(settings.methodology.session_timeout_seconds));
    UsageOutputs {
        diagnostics: Diagnostics {
            log_lines: log.lines,
            malformed_log_lines: log.malformed,
            bot_entries: split.bots.len(),
            human_entries,
            non_view_entries: human_entries - views.len(),
            sessions: sessions.len(),
            page_views: views.len(),
            ..Diagnostics::default()
        },
        sessions,
    }
}

pub fn analyze_portal(
    network: &NetworkInputs,
    portal: &PortalInputs,
    settings: &RunSettings,
    ctx: &NetworkContext,
) -> Result<PortalOutcome> {
    let m = &settings.methodology;
    let period = ctx.period;
    let mut outputs = ModuleOutputs::default();

    let usage = portal.log.as_ref().map(|l| usage_sessions(l, settings, &period));
    let mut diagnostics = usage.as_ref().map(|u| u.diagnostics.clone()).unwrap_or_default();
    diagnostics.portal_id = portal.portal_id.clone();

    let records: Option<Vec<ContentRecord>> = network
        .catalog
        .as_ref()
        .map(|all| all.iter().filter(|r| r.portal_id == portal.portal_id).cloned().collect());

    if let Some(records) = &records {
        diagnostics.catalog_records = records.len();
        let taxonomy_size = network.taxonomy.as_ref().map_or(0, TopicTaxonomy::len);
        let offer = offer_distribution(records, settings.axis);
        let mut prov = ProvisionOutputs {
            offered: shannon_diversity(&offer, taxonomy_size).ok(),
            richness: network.taxonomy.as_ref().map(|t| richness(records, t)),
            ..ProvisionOutputs::default()
        };
        if let Some(reference) = ctx.reference {
            prov.age = match average_age(records, reference) {
                Ok(a) => Some(a),
                Err(Error::NoContent(_)) => None,
                Err(e) => return Err(e),
            };
        }
        if let (Some(u), Some(join)) = (&usage, &portal.join) {
            match accessed_distribution(&u.sessions, records, join, settings.axis, &period) {
                Ok(acc) => {
                    diagnostics.uncatalogued_views = acc.uncatalogued_views;
                    prov.accessed_by_views = shannon_diversity(&acc.overall.by_views, taxonomy_size).ok();
                    prov.accessed_by_users = shannon_diversity(&acc.overall.by_visitors, taxonomy_size).ok();
                    prov.gaps = demand_offer_gap(&offer, &acc.overall.by_views, m.gap_threshold).ok();
                }
                Err(e) if e.kind() == crate::error::ErrorKind::Domain => {}
                Err(e) => return Err(e),
            }
        }
        outputs.provision = Some(prov);
    }

    if let Some(g) = &portal.site_graph {
        outputs.organization = Some(organization_profile(g, m.distance_k)?);
    }

    if let Some(u) = &usage {
        let band = LinearityBand { low: m.linearity_band_low, high: m.linearity_band_high };
        let nav = navigation_summary(&u.sessions, band);
        let demand = overall_demand(&u.sessions, &period);
        let rec = recency(&u.sessions, &period);
        outputs.navigation = Some(nav.clone());
        outputs.recency = Some(rec);
        outputs.activity_level = activity_level(&u.sessions).ok();
        if demand.visits.len() >= 2 {
            let trend = demand_trend(&demand.visits)?;
            outputs.dynamics = Some(dynamics_class(trend.relative_slope, m.growth_threshold)?);
            outputs.trend = Some(trend);
        }
        diagnostics.navigation = Some(nav);
        diagnostics.recency = Some(rec);
        diagnostics.demand = Some(demand);
    }

    if let (Some(g), Some(communities)) = (&network.cross_site, &ctx.communities) {
        let site = portal.site_id.as_deref().unwrap_or(&portal.portal_id);
        match position_profile(g, site, communities, &settings.thresholds()) {
            Ok(p) => outputs.position = Some(p),
            Err(Error::UnknownSite(_)) => {}
            Err(e) => return Err(e),
        }
    }

    outputs.relative_size = ctx.relative_sizes.get(&portal.portal_id).copied();
    if let Some(sizes) = &ctx.sizes {
        outputs.size = sizes.classes.get(&portal.portal_id).copied();
        outputs.size_single_portal = sizes.single_portal;
    }

    let report = assemble_report(&portal.portal_id, period, m, &outputs)?;
    Ok(PortalOutcome { report, diagnostics })
}
