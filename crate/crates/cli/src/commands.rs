use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

use portal_metrics::catalog::{
    average_age, offer_distribution, parse_catalog, richness, shannon_diversity, CatalogParse, TopicTaxonomy,
};
use portal_metrics::pipeline::{analyze_network, NetworkInputs, PortalInputs, PortalOutcome};
use portal_metrics::position::{
    build_cross_site_graph, detect_communities, position_profile, CrossSiteBuild, PositionThresholds, SiteMap,
};
use portal_metrics::report::{compare_within_segment, deserialize_report, serialize_report, to_canonical_json};
use portal_metrics::structure::{build_site_graph, organization_profile, BuildTally, SiteGraph};
use portal_metrics::usage::{open_log, parse_log, LogParse, PathJoin};
use portal_metrics::Error;

use crate::config::{check_out_dir, read_text, ConfigFlags, RunConfig};

fn print_json(value: &Value) -> Result<()> {
    print!("{}", to_canonical_json(value)?);
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)
        .map_err(Error::from)
        .with_context(|| format!("writing `{}`", path.display()))
}

fn load_catalog(path: &Path) -> Result<CatalogParse> {
    let file = File::open(path)
        .map_err(Error::from)
        .with_context(|| format!("reading catalog `{}`", path.display()))?;
    parse_catalog(file).with_context(|| format!("parsing catalog `{}`", path.display()))
}

fn load_taxonomy(path: &Path) -> Result<TopicTaxonomy> {
    let text = read_text(path, "taxonomy")?;
    TopicTaxonomy::parse(&text).with_context(|| format!("parsing taxonomy `{}`", path.display()))
}

fn load_site_graph(path: &Path, root: Option<&str>) -> Result<(SiteGraph, BuildTally)> {
    let file = File::open(path)
        .map_err(Error::from)
        .with_context(|| format!("reading site graph `{}`", path.display()))?;
    build_site_graph(BufReader::new(file), root).with_context(|| format!("parsing site graph `{}`", path.display()))
}

fn load_cross_site(cfg: &RunConfig) -> Result<Option<CrossSiteBuild>> {
    let (links, map) = match (&cfg.page_links, &cfg.site_map) {
        (None, None) => return Ok(None),
        (Some(l), Some(m)) => (l, m),
        _ => return Err(Error::Config("`page_links` and `site_map` go together".into()).into()),
    };
    let site_map = SiteMap::parse(&read_text(map, "site map")?).with_context(|| format!("parsing site map `{}`", map.display()))?;
    let file = File::open(links)
        .map_err(Error::from)
        .with_context(|| format!("reading page links `{}`", links.display()))?;
    let build = build_cross_site_graph(BufReader::new(file), &site_map)
        .with_context(|| format!("aggregating page links `{}`", links.display()))?;
    Ok(Some(build))
}

fn load_logs(cfg: &RunConfig) -> Result<Option<LogParse>> {
    if cfg.logs.is_empty() {
        return Ok(None);
    }
    let mut all = LogParse::default();
    for path in &cfg.logs {
        let reader = open_log(path)?;
        let parsed = parse_log(reader, cfg.visitor_policy).with_context(|| format!("parsing log `{}`", path.display()))?;
        all.merge(parsed);
    }
    Ok(Some(all))
}

fn load_join(cfg: &RunConfig) -> Result<Option<PathJoin>> {
    cfg.join_map
        .as_ref()
        .map(|p| PathJoin::parse(&read_text(p, "join map")?).with_context(|| format!("parsing join map `{}`", p.display())))
        .transpose()
}

struct Loaded {
    network: NetworkInputs,
    portal: PortalInputs,
    catalog: Option<CatalogParse>,
    tally: Option<BuildTally>,
    cross: Option<CrossSiteBuild>,
}

fn load_all(cfg: &RunConfig) -> Result<Loaded> {
    let portal_id = cfg.portal_id()?.to_string();
    let catalog = cfg.catalog.as_deref().map(load_catalog).transpose()?;
    let taxonomy = cfg.taxonomy.as_deref().map(load_taxonomy).transpose()?;
    let cross = load_cross_site(cfg)?;
    let graph = cfg.site_graph.as_deref().map(|p| load_site_graph(p, cfg.root.as_deref())).transpose()?;
    let (site_graph, tally) = match graph {
        Some((g, t)) => (Some(g), Some(t)),
        None => (None, None),
    };
    let network = NetworkInputs {
        catalog: catalog.as_ref().map(|c| c.records.clone()),
        taxonomy,
        cross_site: cross.as_ref().map(|c| c.graph.clone()),
    };
    let portal = PortalInputs {
        portal_id,
        site_id: cfg.site_id.clone(),
        site_graph,
        log: load_logs(cfg)?,
        join: load_join(cfg)?,
    };
    Ok(Loaded { network, portal, catalog, tally, cross })
}

fn run_pipeline(cfg: &RunConfig) -> Result<(PortalOutcome, Loaded)> {
    let loaded = load_all(cfg)?;
    let settings = cfg.settings()?;
    let mut outcomes = analyze_network(&loaded.network, std::slice::from_ref(&loaded.portal), &settings)?;
    let mut outcome = outcomes.remove(0);
    let d = &mut outcome.diagnostics;
    if let Some(c) = &loaded.catalog {
        d.catalog_duplicates = c.duplicates;
        d.catalog_row_errors = c.row_errors.iter().map(|e| format!("line {}: {}", e.line, e.message)).collect();
    }
    if let Some(t) = &loaded.tally {
        d.site_self_loops = t.self_loops;
        d.site_parallel_edges = t.parallel_edges;
    }
    if let Some(c) = &loaded.cross {
        d.link_intra_site = c.intra_site_links;
        d.link_unmapped_urls = c.unmapped_urls;
    }
    Ok((outcome, loaded))
}

pub fn catalog(flags: &ConfigFlags) -> Result<()> {
    let cfg = RunConfig::resolve(flags)?;
    let parsed = load_catalog(cfg.require(&cfg.catalog, "catalog")?)?;
    let taxonomy = cfg.taxonomy.as_deref().map(load_taxonomy).transpose()?;
    let reference = cfg.reference_date.or_else(|| parsed.records.iter().map(|r| r.published).max());
    let mut by_portal: BTreeMap<&str, Vec<_>> = BTreeMap::new();
    for r in &parsed.records {
        if cfg.portal.as_deref().is_none_or(|p| p == r.portal_id) {
            by_portal.entry(r.portal_id.as_str()).or_default().push(r.clone());
        }
    }
    if let Some(p) = &cfg.portal {
        if !by_portal.contains_key(p.as_str()) {
            return Err(Error::NoContent(format!("portal `{p}` has no catalog records")).into());
        }
    }
    let taxonomy_size = taxonomy.as_ref().map_or(0, TopicTaxonomy::len);
    let mut portals = serde_json::Map::new();
    for (id, records) in by_portal {
        let offer = offer_distribution(&records, cfg.axis);
        let age = match reference {
            Some(day) => Some(average_age(&records, day)?),
            None => None,
        };
        portals.insert(
            id.to_string(),
            json!({
                "records": records.len(),
                "offered": shannon_diversity(&offer, taxonomy_size).ok(),
                "richness": taxonomy.as_ref().map(|t| richness(&records, t)),
                "age": age,
            }),
        );
    }
    print_json(&json!({
        "reference_date": reference.map(|d| d.to_string()),
        "duplicates": parsed.duplicates,
        "row_errors": parsed.row_errors.iter().map(|e| format!("line {}: {}", e.line, e.message)).collect::<Vec<_>>(),
        "portals": Value::Object(portals),
    }))
}

pub fn structure(flags: &ConfigFlags) -> Result<()> {
    let cfg = RunConfig::resolve(flags)?;
    let (graph, tally) = load_site_graph(cfg.require(&cfg.site_graph, "site_graph")?, cfg.root.as_deref())?;
    let profile = organization_profile(&graph, cfg.methodology.distance_k)?;
    print_json(&json!({
        "pages": graph.node_count(),
        "links": graph.edge_count(),
        "root": graph.id(graph.root()),
        "self_loops": tally.self_loops,
        "parallel_edges": tally.parallel_edges,
        "organization": profile,
    }))
}

pub fn usage(flags: &ConfigFlags) -> Result<()> {
    let mut cfg = RunConfig::resolve(flags)?;
    if cfg.logs.is_empty() {
        return Err(Error::Config("`logs` is required for this subcommand".into()).into());
    }
    cfg.site_graph = None;
    cfg.page_links = None;
    cfg.site_map = None;
    let (outcome, _) = run_pipeline(&cfg)?;
    print_json(&json!({
        "period": outcome.report.period,
        "diagnostics": outcome.diagnostics,
        "activity_level": outcome.report.segmentation_inputs.as_ref().and_then(|s| s.activity_level),
    }))
}

pub fn position(flags: &ConfigFlags) -> Result<()> {
    let cfg = RunConfig::resolve(flags)?;
    cfg.require(&cfg.page_links, "page_links")?;
    let build = load_cross_site(&cfg)?.expect("page links present");
    let g = &build.graph;
    let communities = detect_communities(g, cfg.methodology.community_seed);
    let m = &cfg.methodology;
    let thresholds = PositionThresholds {
        bridge_min_score: m.bridge_min_score,
        bridge_min_communities: m.bridge_min_communities,
        authority_percentile: m.authority_percentile,
        hub_percentile: m.hub_percentile,
    };
    let sites: Vec<String> = match cfg.site_id.as_ref().or(cfg.portal.as_ref()) {
        Some(s) => vec![s.clone()],
        None => g.sites().to_vec(),
    };
    let mut profiles = serde_json::Map::new();
    for s in sites {
        let p = position_profile(g, &s, &communities, &thresholds)?;
        profiles.insert(s, serde_json::to_value(p)?);
    }
    print_json(&json!({
        "sites": g.site_count(),
        "site_links": g.link_count(),
        "page_links": build.page_links,
        "intra_site_links": build.intra_site_links,
        "unmapped_urls": build.unmapped_urls,
        "communities": communities,
        "profiles": Value::Object(profiles),
    }))
}

pub fn segment(flags: &ConfigFlags) -> Result<()> {
    let mut cfg = RunConfig::resolve(flags)?;
    cfg.require(&cfg.catalog, "catalog")?;
    cfg.site_graph = None;
    cfg.page_links = None;
    cfg.site_map = None;
    let (outcome, _) = run_pipeline(&cfg)?;
    let r = &outcome.report;
    print_json(&json!({
        "portal_id": r.portal_id,
        "segmentation_inputs": r.segmentation_inputs,
        "segment": r.segment,
        "flags": r.metadata.flags,
    }))
}

pub fn report(flags: &ConfigFlags) -> Result<()> {
    let cfg = RunConfig::resolve(flags)?;
    check_out_dir(&cfg.out_dir)?;
    let (outcome, _) = run_pipeline(&cfg)?;
    let id = &outcome.report.portal_id;
    let report_path = cfg.out_dir.join(format!("report-{id}.json"));
    let diag_path = cfg.out_dir.join(format!("diagnostics-{id}.json"));
    write_file(&report_path, &serialize_report(&outcome.report)?)?;
    write_file(&diag_path, &to_canonical_json(&outcome.diagnostics)?)?;
    eprintln!("wrote {} and {}", report_path.display(), diag_path.display());
    Ok(())
}

pub fn compare(flags: &ConfigFlags, paths: &[PathBuf]) -> Result<()> {
    let cfg = RunConfig::resolve(flags)?;
    check_out_dir(&cfg.out_dir)?;
    let mut reports = Vec::with_capacity(paths.len());
    for p in paths {
        let bytes = fs::read(p)
            .map_err(Error::from)
            .with_context(|| format!("reading report `{}`", p.display()))?;
        reports.push(deserialize_report(&bytes).with_context(|| format!("loading report `{}`", p.display()))?);
    }
    let cmp = compare_within_segment(&reports, cfg.margin)?;
    let table = cmp.summary_table();
    write_file(&cfg.out_dir.join("comparison.json"), &to_canonical_json(&cmp)?)?;
    write_file(&cfg.out_dir.join("comparison.txt"), &table)?;
    print!("{table}");
    Ok(())
}
