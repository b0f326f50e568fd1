//! Deterministic synthetic inputs with planted ground truth.
//!
//! Every generator emits the same text formats the parsers read, so tests
//! built on these fixtures run the whole ingestion path.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Chain,
    Cycle,
    Complete,
    /// Node 0 linked to and from every other node.
    Star,
    /// Two bidirectional cliques plus one node linking out to a member of each.
    TwoCommunity,
    /// Every node links to `out_degree` distinct random targets.
    RandomDigraph,
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "chain" => GraphKind::Chain,
            "cycle" => GraphKind::Cycle,
            "complete" => GraphKind::Complete,
            "star" => GraphKind::Star,
            "two-community" => GraphKind::TwoCommunity,
            "random-digraph" => GraphKind::RandomDigraph,
            other => return Err(Error::Config(format!("unknown graph kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub size: usize,
    pub seed: u64,
    pub out_degree: usize,
}

impl GraphSpec {
    pub fn new(kind: GraphKind, size: usize) -> Self {
        Self { kind, size, seed: 0, out_degree: 3 }
    }
}

/// Node names of generated graphs, in declaration order.
pub fn node_name(i: usize) -> String {
    format!("n{i}")
}

/// Name of the bridge node in a [`GraphKind::TwoCommunity`] graph.
pub const BRIDGE_NODE: &str = "bridge";

/// Edges of the requested shape as `(from, to)` index pairs.
///
/// For two-community graphs the last index is the bridge node.
pub fn graph_edges(spec: &GraphSpec) -> Result<Vec<(usize, usize)>> {
    let n = spec.size;
    if n == 0 {
        return Err(Error::Config("graph size must be at least 1".into()));
    }
    let mut edges = Vec::new();
    match spec.kind {
        GraphKind::Chain => edges.extend((1..n).map(|i| (i - 1, i))),
        GraphKind::Cycle => {
            if n > 1 {
                edges.extend((0..n).map(|i| (i, (i + 1) % n)));
            }
        }
        GraphKind::Complete => {
            for a in 0..n {
                edges.extend((0..n).filter(|&b| b != a).map(|b| (a, b)));
            }
        }
        GraphKind::Star => {
            for leaf in 1..n {
                edges.push((0, leaf));
                edges.push((leaf, 0));
            }
        }
        GraphKind::TwoCommunity => {
            if n < 5 {
                return Err(Error::Config("two-community graph needs at least 5 nodes".into()));
            }
            let members = n - 1;
            let first = members / 2;
            let cliques = [(0..first).collect::<Vec<_>>(), (first..members).collect::<Vec<_>>()];
            for clique in &cliques {
                for &a in clique {
                    edges.extend(clique.iter().filter(|&&b| b != a).map(|&b| (a, b)));
                }
            }
            edges.push((members, 0));
            edges.push((members, first));
        }
        GraphKind::RandomDigraph => {
            if spec.out_degree >= n.max(1) {
                return Err(Error::Config(format!(
                    "out-degree {} needs more than {n} nodes",
                    spec.out_degree
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut others: Vec<usize> = Vec::with_capacity(n);
            for a in 0..n {
                others.clear();
                others.extend((0..n).filter(|&b| b != a));
                let (picked, _) = others.partial_shuffle(&mut rng, spec.out_degree);
                let mut picked = picked.to_vec();
                picked.sort_unstable();
                edges.extend(picked.into_iter().map(|b| (a, b)));
            }
        }
    }
    Ok(edges)
}

fn node_label(kind: GraphKind, n: usize, i: usize) -> String {
    if kind == GraphKind::TwoCommunity && i == n - 1 {
        BRIDGE_NODE.to_string()
    } else {
        node_name(i)
    }
}

/// Edge-list text: every node declared on its own line, then one
/// tab-separated edge per line. The first node is the homepage.
pub fn gen_graph(spec: &GraphSpec) -> Result<String> {
    let edges = graph_edges(spec)?;
    let mut out = String::new();
    for i in 0..spec.size {
        let _ = writeln!(out, "{}", node_label(spec.kind, spec.size, i));
    }
    for (a, b) in edges {
        let _ = writeln!(
            out,
            "{}\t{}",
            node_label(spec.kind, spec.size, a),
            node_label(spec.kind, spec.size, b)
        );
    }
    Ok(out)
}

/// Page-level link files describing a site-level graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossSiteFixture {
    pub page_links: String,
    pub site_map: String,
    pub sites: Vec<String>,
}

pub fn site_prefix(site: &str) -> String {
    format!("http://{site}.example.org/")
}

/// Expands each site-level edge into `pages_per_link` page links and adds
/// one intra-site link per site, which aggregation must drop.
pub fn gen_cross_site(spec: &GraphSpec, pages_per_link: usize) -> Result<CrossSiteFixture> {
    let edges = graph_edges(spec)?;
    let sites: Vec<String> = (0..spec.size).map(|i| node_label(spec.kind, spec.size, i)).collect();
    let mut site_map = String::new();
    let mut page_links = String::new();
    for s in &sites {
        let p = site_prefix(s);
        let _ = writeln!(site_map, "{p}\t{s}");
        let _ = writeln!(page_links, "{p}index.html\t{p}about.html");
    }
    for (a, b) in edges {
        for k in 0..pages_per_link.max(1) {
            let _ = writeln!(
                page_links,
                "{}page{k}.html\t{}resource{k}.html",
                site_prefix(&sites[a]),
                site_prefix(&sites[b])
            );
        }
    }
    Ok(CrossSiteFixture { page_links, site_map, sites })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogSpec {
    pub start: NaiveDate,
    pub bucket_seconds: i64,
    /// Visits to plant in each bucket.
    pub visits: Vec<u64>,
    pub visitors: usize,
    pub views_per_visit: usize,
    /// Share of all lines that come from crawlers, in `[0, 1)`.
    pub bot_fraction: f64,
    pub session_timeout_seconds: i64,
    pub paths: Vec<String>,
    pub seed: u64,
}

impl Default for LogSpec {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2024, 3, 1).unwrap(),
            bucket_seconds: 86_400,
            visits: vec![10, 20, 30],
            visitors: 10,
            views_per_visit: 3,
            bot_fraction: 0.0,
            session_timeout_seconds: crate::usage::DEFAULT_SESSION_TIMEOUT_SECS,
            paths: (0..8).map(|i| format!("/content/{i}")).collect(),
            seed: 0,
        }
    }
}

/// What the generator planted, computed from its own schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTruth {
    pub visits: Vec<u64>,
    pub human_lines: usize,
    pub bot_lines: usize,
    pub activity_level: Option<f64>,
    pub recency_seconds: Option<f64>,
    /// Views per path across all visits.
    pub path_views: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogFixture {
    pub text: String,
    pub truth: LogTruth,
}

pub const FIXTURE_USER_AGENT: &str = "Mozilla/5.0 (X11; Linux x86_64) Gecko/20100101 Firefox/124.0";
pub const FIXTURE_BOT_AGENT: &str = "Mozilla/5.0 (compatible; Googlebot/2.1; +http://www.google.com/bot.html)";

pub fn clf_line(client: &str, t: DateTime<Utc>, path: &str, status: u16, agent: &str) -> String {
    format!(
        "{client} - - [{}] \"GET {path} HTTP/1.1\" {status} 512 \"-\" \"{agent}\"",
        t.format("%d/%b/%Y:%H:%M:%S %z")
    )
}

/// Combined Log Format text with planted visits per bucket.
///
/// Visits of a bucket are dealt round-robin to visitors and spaced so that
/// consecutive visits of one visitor are always more than a timeout apart.
pub fn gen_log(spec: &LogSpec) -> Result<LogFixture> {
    if !(0.0..1.0).contains(&spec.bot_fraction) {
        return Err(Error::Config(format!("bot fraction must lie in [0, 1), got {}", spec.bot_fraction)));
    }
    if spec.bucket_seconds <= 0 || spec.session_timeout_seconds <= 0 {
        return Err(Error::Config("bucket and timeout must be positive".into()));
    }
    let planted: u64 = spec.visits.iter().sum();
    if spec.visitors == 0 {
        if planted > 0 {
            return Err(Error::Config("visits planted but no visitors".into()));
        }
        return Ok(LogFixture {
            text: String::new(),
            truth: LogTruth {
                visits: spec.visits.clone(),
                human_lines: 0,
                bot_lines: 0,
                activity_level: None,
                recency_seconds: None,
                path_views: BTreeMap::new(),
            },
        });
    }
    if spec.views_per_visit == 0 || spec.paths.is_empty() {
        return Err(Error::Config("visits need at least one view and one path".into()));
    }

    let view_step = 60;
    let span = (spec.views_per_visit as i64 - 1) * view_step;
    let offset_room = spec.visitors as i64;
    let spacing = spec.session_timeout_seconds + span + offset_room + 3_600;
    let max_in_bucket = *spec.visits.iter().max().unwrap_or(&0) as i64;
    let rounds = (max_in_bucket + spec.visitors as i64 - 1) / spec.visitors as i64;
    if rounds > 0 && (rounds - 1) * spacing + span + offset_room + spec.session_timeout_seconds >= spec.bucket_seconds {
        return Err(Error::Config(format!(
            "{max_in_bucket} visits by {} visitors do not fit in one bucket",
            spec.visitors
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let origin = spec.start.and_hms_opt(0, 0, 0).unwrap().and_utc();
    let mut lines: Vec<(DateTime<Utc>, String)> = Vec::new();
    let mut starts: Vec<Vec<i64>> = vec![Vec::new(); spec.visitors];
    let mut path_views: BTreeMap<String, u64> = BTreeMap::new();
    let mut dealt = 0usize;
    for (b, &count) in spec.visits.iter().enumerate() {
        let bucket_start = b as i64 * spec.bucket_seconds;
        for k in 0..count as usize {
            let visitor = (dealt + k) % spec.visitors;
            let start = bucket_start + (k / spec.visitors) as i64 * spacing + visitor as i64;
            starts[visitor].push(start);
            let client = format!("10.{}.{}.{}", visitor >> 16 & 255, visitor >> 8 & 255, visitor & 255);
            for v in 0..spec.views_per_visit {
                let t = origin + Duration::seconds(start + v as i64 * view_step);
                let path = spec.paths.choose(&mut rng).expect("paths not empty");
                *path_views.entry(path.clone()).or_insert(0) += 1;
                lines.push((t, clf_line(&client, t, path, 200, FIXTURE_USER_AGENT)));
            }
        }
        dealt += count as usize;
    }
    let human_lines = lines.len();

    let f = spec.bot_fraction;
    let bot_lines = (human_lines as f64 * f / (1.0 - f)).round() as usize;
    let horizon = (spec.visits.len() as i64 * spec.bucket_seconds).max(1);
    for i in 0..bot_lines {
        let t = origin + Duration::seconds(rng.gen_range(0..horizon));
        let path = if i % 10 == 0 {
            crate::usage::ROBOTS_PATH.to_string()
        } else {
            spec.paths.choose(&mut rng).expect("paths not empty").clone()
        };
        let client = format!("192.0.2.{}", i % 250 + 1);
        lines.push((t, clf_line(&client, t, &path, 200, FIXTURE_BOT_AGENT)));
    }
    lines.sort_by(|a, b| a.0.cmp(&b.0));

    let mut text = String::with_capacity(lines.iter().map(|l| l.1.len() + 1).sum());
    for (_, l) in &lines {
        text.push_str(l);
        text.push('\n');
    }

    let mut per_visitor = Vec::new();
    for s in &starts {
        if s.len() >= 2 {
            per_visitor.push((s[s.len() - 1] - s[0]) as f64 / (s.len() - 1) as f64);
        }
    }
    let recency_seconds =
        (!per_visitor.is_empty()).then(|| per_visitor.iter().sum::<f64>() / per_visitor.len() as f64);
    Ok(LogFixture {
        text,
        truth: LogTruth {
            visits: spec.visits.clone(),
            human_lines,
            bot_lines,
            activity_level: (planted > 0).then_some(spec.views_per_visit as f64),
            recency_seconds,
            path_views,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogSpec {
    pub portal_id: String,
    /// Records to plant per topic.
    pub topic_counts: Vec<(String, u64)>,
    /// Ages in days, dealt round-robin over the records.
    pub ages_days: Vec<u32>,
    pub reference: NaiveDate,
    pub resource_types: Vec<String>,
}

impl CatalogSpec {
    pub fn uniform(portal_id: &str, topics: usize, per_topic: u64) -> Self {
        Self {
            portal_id: portal_id.to_string(),
            topic_counts: (0..topics).map(|t| (format!("topic{t}"), per_topic)).collect(),
            ages_days: vec![30],
            reference: NaiveDate::from_ymd_opt(2024, 4, 1).unwrap(),
            resource_types: vec!["activity".into(), "lesson".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogFixture {
    /// Comma-separated catalog with a header row.
    pub catalog: String,
    /// One topic per line.
    pub taxonomy: String,
    /// `path<TAB>identifier` lines.
    pub join_map: String,
    /// Web path of each record, in catalog order.
    pub paths: Vec<String>,
    pub mean_age_days: Option<f64>,
}

pub fn record_path(portal_id: &str, identifier: &str) -> String {
    format!("/{portal_id}/content/{identifier}")
}

pub fn gen_catalog(spec: &CatalogSpec) -> Result<CatalogFixture> {
    if spec.ages_days.is_empty() {
        return Err(Error::Config("at least one planted age is needed".into()));
    }
    if spec.resource_types.is_empty() {
        return Err(Error::Config("at least one resource type is needed".into()));
    }
    if spec.portal_id.is_empty() || spec.portal_id.contains([',', '\t', '\n']) {
        return Err(Error::Config(format!("unusable portal id `{}`", spec.portal_id)));
    }
    let mut catalog = String::from("identifier,resource_type,topic,published,portal_id\n");
    let mut taxonomy = String::new();
    let mut join_map = String::new();
    let mut paths = Vec::new();
    let mut age_sum = 0u64;
    let mut i = 0usize;
    for (topic, count) in &spec.topic_counts {
        if topic.is_empty() || topic.contains([',', '\t', '\n', '"']) {
            return Err(Error::Config(format!("unusable topic label `{topic}`")));
        }
        let _ = writeln!(taxonomy, "{topic}");
        for _ in 0..*count {
            let age = spec.ages_days[i % spec.ages_days.len()];
            let published = spec.reference - Duration::days(age as i64);
            let id = format!("{}-{i:06}", spec.portal_id);
            let kind = &spec.resource_types[i % spec.resource_types.len()];
            let _ = writeln!(catalog, "{id},{kind},{topic},{published},{}", spec.portal_id);
            let path = record_path(&spec.portal_id, &id);
            let _ = writeln!(join_map, "{path}\t{id}");
            paths.push(path);
            age_sum += age as u64;
            i += 1;
        }
    }
    Ok(CatalogFixture {
        catalog,
        taxonomy,
        join_map,
        paths,
        mean_age_days: (i > 0).then(|| age_sum as f64 / i as f64),
    })
}
