//! Access-log ingestion, crawler filtering, sessionization and usage metrics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use flate2::read::MultiGzDecoder;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{Axis, ContentRecord, TopicDistribution};
use crate::error::{Error, Result};
use crate::structure::{self, SiteGraphBuilder};

/// One request from an NCSA Combined Log Format line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub visitor_key: String,
    pub client: String,
    pub auth_user: Option<String>,
    pub timestamp: DateTime<Utc>,
    pub method: String,
    pub path: String,
    pub protocol: String,
    pub status: u16,
    pub bytes: Option<u64>,
    pub referrer: String,
    pub user_agent: String,
}

impl LogEntry {
    /// Only successful and redirected requests count as page views.
    pub fn is_view(&self) -> bool {
        (200..400).contains(&self.status)
    }
}

/// How visitors are told apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitorKeyPolicy {
    /// Use the authenticated user field when the log carries one.
    pub use_auth_user: bool,
}

impl Default for VisitorKeyPolicy {
    fn default() -> Self {
        Self { use_auth_user: true }
    }
}

impl VisitorKeyPolicy {
    pub fn key(&self, client: &str, auth_user: Option<&str>, user_agent: &str) -> String {
        if self.use_auth_user {
            if let Some(user) = auth_user {
                return format!("user:{user}");
            }
        }
        let mut h = Sha256::new();
        h.update(client.as_bytes());
        h.update([0x1f]);
        h.update(user_agent.as_bytes());
        format!("anon:{}", &hex::encode(h.finalize())[..16])
    }
}

#[derive(Debug, Clone, Default)]
pub struct LogParse {
    pub entries: Vec<LogEntry>,
    pub lines: usize,
    pub malformed: usize,
}

impl LogParse {
    pub fn merge(&mut self, other: LogParse) {
        self.entries.extend(other.entries);
        self.lines += other.lines;
        self.malformed += other.malformed;
    }
}

fn combined_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r#"^(\S+) (\S+) (\S+) \[([^\]]+)\] "((?:[^"\\]|\\.)*)" (\d{3}) (\S+) "((?:[^"\\]|\\.)*)" "((?:[^"\\]|\\.)*)"(?:\s.*)?$"#,
        )
        .expect("combined log regex")
    })
}

const CLF_TIME: &str = "%d/%b/%Y:%H:%M:%S %z";

fn unescape(s: &str) -> String {
    if !s.contains('\\') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn dash_to_none(s: &str) -> Option<&str> {
    (s != "-" && !s.is_empty()).then_some(s)
}

/// Parses one Combined Log Format line.
pub fn parse_line(line: &str, policy: VisitorKeyPolicy) -> Option<LogEntry> {
    let caps = combined_regex().captures(line.trim_end())?;
    let client = caps[1].to_string();
    let auth_user = dash_to_none(&caps[3]).map(str::to_string);
    let timestamp = DateTime::parse_from_str(&caps[4], CLF_TIME).ok()?.with_timezone(&Utc);
    let request = unescape(&caps[5]);
    let mut parts = request.split_whitespace();
    let (method, path, protocol) = match (parts.next(), parts.next(), parts.next()) {
        (Some(m), Some(p), proto) => (m.to_string(), p.to_string(), proto.unwrap_or("").to_string()),
        _ => return None,
    };
    let status = caps[6].parse().ok()?;
    let bytes = dash_to_none(&caps[7]).and_then(|b| b.parse().ok());
    let referrer = unescape(&caps[8]);
    let user_agent = unescape(&caps[9]);
    let visitor_key = policy.key(&client, auth_user.as_deref(), &user_agent);
    Some(LogEntry {
        visitor_key,
        client,
        auth_user,
        timestamp,
        method,
        path,
        protocol,
        status,
        bytes,
        referrer,
        user_agent,
    })
}

/// Parses a Combined Log Format stream.
///
/// Malformed and empty lines are skipped and tallied; if more than half of
/// the lines are malformed the stream is rejected as a whole.
pub fn parse_log<R: BufRead>(input: R, policy: VisitorKeyPolicy) -> Result<LogParse> {
    let mut out = LogParse::default();
    for line in input.lines() {
        let line = line?;
        out.lines += 1;
        match parse_line(&line, policy) {
            Some(e) => out.entries.push(e),
            None => out.malformed += 1,
        }
    }
    if out.lines > 0 && out.malformed * 2 > out.lines {
        return Err(Error::Format(format!(
            "{} of {} log lines are not in Combined Log Format",
            out.malformed, out.lines
        )));
    }
    Ok(out)
}

/// Opens a log file, transparently decompressing gzip.
pub fn open_log(path: &Path) -> Result<Box<dyn BufRead>> {
    let mut file = File::open(path)
        .map_err(|e| Error::Format(format!("cannot open log {}: {e}", path.display())))?;
    let mut magic = [0u8; 2];
    let read = file.read(&mut magic)?;
    let file = File::open(path)?;
    if read == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Case-insensitive user-agent substrings identifying automated agents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotSignatures {
    tokens: Vec<String>,
}

pub const DEFAULT_BOT_TOKENS: &[&str] = &[
    "bot",
    "crawl",
    "spider",
    "slurp",
    "archiver",
    "facebookexternalhit",
    "mediapartners",
    "feedfetcher",
    "python-requests",
    "python-urllib",
    "curl/",
    "wget/",
    "libwww",
    "httpclient",
    "go-http-client",
    "headlesschrome",
    "phantomjs",
    "scrapy",
];

pub const ROBOTS_PATH: &str = "/robots.txt";

impl Default for BotSignatures {
    fn default() -> Self {
        Self::new(DEFAULT_BOT_TOKENS.iter().copied())
    }
}

impl BotSignatures {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut tokens: Vec<String> = tokens
            .into_iter()
            .map(|t| t.as_ref().trim().to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
        tokens.sort();
        tokens.dedup();
        Self { tokens }
    }

    /// Adds the tokens of a plain-text list, one per line (`#` comments allowed).
    pub fn extend_from_text(&mut self, text: &str) {
        let extra = text.lines().map(str::trim).filter(|l| !l.starts_with('#'));
        *self = Self::new(self.tokens.iter().map(String::as_str).chain(extra));
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn matches(&self, entry: &LogEntry) -> bool {
        let path = entry.path.split(['?', '#']).next().unwrap_or("");
        if path == ROBOTS_PATH {
            return true;
        }
        let ua = entry.user_agent.to_lowercase();
        self.tokens.iter().any(|t| ua.contains(t.as_str()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct AgentSplit {
    pub humans: Vec<LogEntry>,
    pub bots: Vec<LogEntry>,
}

pub fn filter_agents(entries: Vec<LogEntry>, signatures: &BotSignatures) -> AgentSplit {
    let (bots, humans) = entries.into_iter().partition(|e| signatures.matches(e));
    AgentSplit { humans, bots }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PageView {
    pub timestamp: DateTime<Utc>,
    pub path: String,
}

/// A visitor's maximal run of views with no gap above the timeout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub visitor_key: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub views: Vec<PageView>,
}

pub const DEFAULT_SESSION_TIMEOUT_SECS: i64 = 30 * 60;

/// Groups entries per visitor and splits wherever the gap exceeds `timeout`.
///
/// The output is ordered by visitor key, then start time, and does not depend
/// on the order of `entries`.
pub fn sessionize(entries: &[LogEntry], timeout: Duration) -> Vec<Session> {
    let mut sorted: Vec<&LogEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.visitor_key, a.timestamp, &a.path).cmp(&(&b.visitor_key, b.timestamp, &b.path))
    });
    let mut sessions: Vec<Session> = Vec::new();
    for e in sorted {
        let view = PageView { timestamp: e.timestamp, path: e.path.clone() };
        match sessions.last_mut() {
            Some(s) if s.visitor_key == e.visitor_key && e.timestamp - s.end <= timeout => {
                s.end = e.timestamp;
                s.views.push(view);
            }
            _ => sessions.push(Session {
                visitor_key: e.visitor_key.clone(),
                start: e.timestamp,
                end: e.timestamp,
                views: vec![view],
            }),
        }
    }
    sessions
}

/// Analysis window split into fixed-length buckets; the last may be partial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisPeriod {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub bucket_seconds: i64,
}

impl AnalysisPeriod {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>, bucket: Duration) -> Result<Self> {
        if start >= end {
            return Err(Error::Config(format!("period start {start} is not before end {end}")));
        }
        if bucket.num_seconds() <= 0 {
            return Err(Error::Config("bucket length must be positive".into()));
        }
        Ok(Self { start, end, bucket_seconds: bucket.num_seconds() })
    }

    /// Whole days from the first to the last given date, inclusive, in daily buckets.
    pub fn days(first: NaiveDate, last: NaiveDate) -> Result<Self> {
        let start = first.and_hms_opt(0, 0, 0).expect("midnight").and_utc();
        let end = (last + Duration::days(1)).and_hms_opt(0, 0, 0).expect("midnight").and_utc();
        Self::new(start, end, Duration::days(1))
    }

    pub fn bucket(&self) -> Duration {
        Duration::seconds(self.bucket_seconds)
    }

    pub fn bucket_count(&self) -> usize {
        let span = (self.end - self.start).num_seconds();
        ((span + self.bucket_seconds - 1) / self.bucket_seconds) as usize
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        t >= self.start && t < self.end
    }

    pub fn bucket_of(&self, t: DateTime<Utc>) -> Option<usize> {
        self.contains(t)
            .then(|| ((t - self.start).num_seconds() / self.bucket_seconds) as usize)
    }

    pub fn bucket_start(&self, index: usize) -> DateTime<Utc> {
        self.start + Duration::seconds(self.bucket_seconds * index as i64)
    }

    pub fn overlaps(&self, other: &AnalysisPeriod) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandCounts {
    pub bucket_starts: Vec<DateTime<Utc>>,
    pub visits: Vec<u64>,
    pub total: u64,
}

/// Visits per bucket, each session counted in the bucket holding its start.
pub fn overall_demand(sessions: &[Session], period: &AnalysisPeriod) -> DemandCounts {
    let buckets = period.bucket_count();
    let mut visits = vec![0u64; buckets];
    for s in sessions {
        if let Some(b) = period.bucket_of(s.start) {
            visits[b] += 1;
        }
    }
    DemandCounts {
        bucket_starts: (0..buckets).map(|i| period.bucket_start(i)).collect(),
        total: visits.iter().sum(),
        visits,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recency {
    /// Mean over eligible visitors of their mean gap between visit starts.
    pub mean_gap_seconds: Option<f64>,
    pub eligible_visitors: usize,
    pub single_visit_visitors: usize,
}

impl Recency {
    pub fn mean_gap_days(&self) -> Option<f64> {
        self.mean_gap_seconds.map(|s| s / 86_400.0)
    }
}

pub fn recency(sessions: &[Session], period: &AnalysisPeriod) -> Recency {
    let mut starts: BTreeMap<&str, Vec<DateTime<Utc>>> = BTreeMap::new();
    for s in sessions.iter().filter(|s| period.contains(s.start)) {
        starts.entry(&s.visitor_key).or_default().push(s.start);
    }
    let mut gaps = Vec::new();
    let mut single = 0;
    for mut times in starts.into_values() {
        if times.len() < 2 {
            single += 1;
            continue;
        }
        times.sort_unstable();
        let span = (times[times.len() - 1] - times[0]).num_seconds() as f64;
        gaps.push(span / (times.len() - 1) as f64);
    }
    Recency {
        mean_gap_seconds: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
        eligible_visitors: gaps.len(),
        single_visit_visitors: single,
    }
}

/// Total page views over total visits.
pub fn activity_level(sessions: &[Session]) -> Result<f64> {
    if sessions.is_empty() {
        return Err(Error::Domain("activity level needs at least one visit".into()));
    }
    let views: usize = sessions.iter().map(|s| s.views.len()).sum();
    Ok(views as f64 / sessions.len() as f64)
}

/// Maps requested paths to catalog identifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathJoin {
    map: HashMap<String, String>,
}

impl PathJoin {
    pub fn new<I, P, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (P, S)>,
        P: Into<String>,
        S: Into<String>,
    {
        Self { map: pairs.into_iter().map(|(p, s)| (p.into(), s.into())).collect() }
    }

    /// Two delimited columns per line: path, identifier.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match structure::split_fields(line).as_slice() {
                [path, id] => {
                    map.entry(path.to_string()).or_insert_with(|| id.to_string());
                }
                _ => {
                    return Err(Error::Format(format!(
                        "join map line {}: expected two columns",
                        i + 1
                    )))
                }
            }
        }
        Ok(Self { map })
    }

    pub fn identifier(&self, path: &str) -> Option<&str> {
        self.map
            .get(path)
            .or_else(|| self.map.get(path.split(['?', '#']).next().unwrap_or(path)))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessSplit {
    /// Views per label.
    pub by_views: TopicDistribution,
    /// Distinct visitors per label.
    pub by_visitors: TopicDistribution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessedDistribution {
    pub axis: Axis,
    pub buckets: Vec<AccessSplit>,
    pub overall: AccessSplit,
    pub uncatalogued_views: u64,
}

/// Accessed content per bucket, weighted by views and by distinct visitors.
pub fn accessed_distribution(
    sessions: &[Session],
    catalog: &[ContentRecord],
    join: &PathJoin,
    axis: Axis,
    period: &AnalysisPeriod,
) -> Result<AccessedDistribution> {
    let mut by_id: HashMap<&str, &ContentRecord> = HashMap::new();
    for r in catalog {
        by_id.entry(r.identifier.as_str()).or_insert(r);
    }
    let buckets = period.bucket_count();
    let mut views: Vec<BTreeMap<&str, u64>> = vec![BTreeMap::new(); buckets];
    let mut visitors: Vec<BTreeMap<&str, BTreeSet<&str>>> = vec![BTreeMap::new(); buckets];
    let mut overall_visitors: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut uncatalogued = 0u64;
    let mut joined = 0u64;
    for s in sessions {
        for v in &s.views {
            let Some(b) = period.bucket_of(v.timestamp) else { continue };
            let Some(record) = join.identifier(&v.path).and_then(|id| by_id.get(id)) else {
                uncatalogued += 1;
                continue;
            };
            let label = match axis {
                Axis::Topic => record.topic.as_str(),
                Axis::ResourceType => record.resource_type.as_str(),
            };
            joined += 1;
            *views[b].entry(label).or_insert(0) += 1;
            visitors[b].entry(label).or_default().insert(&s.visitor_key);
            overall_visitors.entry(label).or_default().insert(&s.visitor_key);
        }
    }
    if joined == 0 {
        return Err(Error::Domain(format!(
            "no view could be joined to the catalog ({uncatalogued} uncatalogued views)"
        )));
    }
    let mut overall = AccessSplit::default();
    let buckets = views
        .into_iter()
        .zip(visitors)
        .map(|(v, u)| {
            for (label, n) in &v {
                overall.by_views.add(*label, *n);
            }
            AccessSplit {
                by_views: TopicDistribution::from_counts(v),
                by_visitors: TopicDistribution::from_counts(
                    u.into_iter().map(|(l, set)| (l, set.len() as u64)),
                ),
            }
        })
        .collect();
    overall.by_visitors = TopicDistribution::from_counts(
        overall_visitors.into_iter().map(|(l, set)| (l, set.len() as u64)),
    );
    Ok(AccessedDistribution { axis, buckets, overall, uncatalogued_views: uncatalogued })
}

/// Navigation path graph of one session: distinct pages, consecutive
/// transitions, reloads dropped. The first page is the root.
pub fn navigation_graph(session: &Session) -> Result<structure::SiteGraph> {
    let mut b = SiteGraphBuilder::new();
    for v in &session.views {
        b.add_node(&v.path);
    }
    for w in session.views.windows(2) {
        if w[0].path != w[1].path {
            b.add_edge(&w[0].path, &w[1].path);
        }
    }
    b.build(None).map(|(g, _)| g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NavigationOutcome {
    Measured { complexity: f64, linearity: f64 },
    /// Fewer than two distinct pages.
    Degenerate,
}

pub fn navigation_metrics(session: &Session) -> NavigationOutcome {
    let Ok(g) = navigation_graph(session) else {
        return NavigationOutcome::Degenerate;
    };
    match (structure::navigability(&g), structure::linearity(&g)) {
        (Some(complexity), Some(linearity)) => NavigationOutcome::Measured { complexity, linearity },
        _ => NavigationOutcome::Degenerate,
    }
}

/// Linearity band outside which navigation counts as erratic (below) or
/// tedious (above).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearityBand {
    pub low: f64,
    pub high: f64,
}

impl Default for LinearityBand {
    fn default() -> Self {
        Self { low: 0.2, high: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavigationSummary {
    pub measured: usize,
    pub degenerate: usize,
    pub complexity_mean: Option<f64>,
    pub complexity_median: Option<f64>,
    pub linearity_mean: Option<f64>,
    pub linearity_median: Option<f64>,
    pub share_above_band: Option<f64>,
    pub share_below_band: Option<f64>,
    pub band: LinearityBand,
}

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn navigation_summary(sessions: &[Session], band: LinearityBand) -> NavigationSummary {
    let mut complexity = Vec::new();
    let mut linearity = Vec::new();
    let mut degenerate = 0;
    for s in sessions {
        match navigation_metrics(s) {
            NavigationOutcome::Measured { complexity: c, linearity: l } => {
                complexity.push(c);
                linearity.push(l);
            }
            NavigationOutcome::Degenerate => degenerate += 1,
        }
    }
    let measured = linearity.len();
    let share = |pred: &dyn Fn(f64) -> bool| {
        (measured > 0)
            .then(|| linearity.iter().filter(|&&l| pred(l)).count() as f64 / measured as f64)
    };
    let share_above_band = share(&|l| l > band.high);
    let share_below_band = share(&|l| l < band.low);
    NavigationSummary {
        measured,
        degenerate,
        complexity_mean: mean(&complexity),
        complexity_median: median(&mut complexity),
        linearity_mean: mean(&linearity),
        linearity_median: median(&mut linearity),
        share_above_band,
        share_below_band,
        band,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"127.0.0.1 - frank [10/Oct/2000:13:55:36 -0700] "GET /apache_pb.gif HTTP/1.0" 200 2326 "http://www.example.com/start.html" "Mozilla/4.08 [en] (Win98; I ;Nav)""#;

    fn t(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    fn entry(visitor: &str, at: DateTime<Utc>, path: &str) -> LogEntry {
        LogEntry {
            visitor_key: visitor.into(),
            client: "10.0.0.1".into(),
            auth_user: None,
            timestamp: at,
            method: "GET".into(),
            path: path.into(),
            protocol: "HTTP/1.1".into(),
            status: 200,
            bytes: Some(1),
            referrer: "-".into(),
            user_agent: "Mozilla/5.0".into(),
        }
    }

    fn session(visitor: &str, start: DateTime<Utc>, paths: &[&str]) -> Session {
        let views: Vec<PageView> = paths
            .iter()
            .enumerate()
            .map(|(i, p)| PageView { timestamp: start + Duration::minutes(i as i64), path: p.to_string() })
            .collect();
        Session {
            visitor_key: visitor.into(),
            start,
            end: views.last().unwrap().timestamp,
            views,
        }
    }

    #[test]
    fn parses_combined_line() {
        let e = parse_line(LINE, VisitorKeyPolicy::default()).unwrap();
        assert_eq!(e.client, "127.0.0.1");
        assert_eq!(e.auth_user.as_deref(), Some("frank"));
        assert_eq!(e.timestamp, t("2000-10-10T20:55:36Z"));
        assert_eq!((e.method.as_str(), e.path.as_str(), e.protocol.as_str()), ("GET", "/apache_pb.gif", "HTTP/1.0"));
        assert_eq!((e.status, e.bytes), (200, Some(2326)));
        assert_eq!(e.referrer, "http://www.example.com/start.html");
        assert_eq!(e.user_agent, "Mozilla/4.08 [en] (Win98; I ;Nav)");
        assert_eq!(e.visitor_key, "user:frank");
        assert!(e.is_view());
    }

    #[test]
    fn anonymous_key_hashes_client_and_agent() {
        let line = LINE.replace("frank", "-");
        let a = parse_line(&line, VisitorKeyPolicy::default()).unwrap();
        assert!(a.visitor_key.starts_with("anon:"));
        let other_agent = line.replace("Win98", "Linux");
        let b = parse_line(&other_agent, VisitorKeyPolicy::default()).unwrap();
        assert_ne!(a.visitor_key, b.visitor_key);
        let ignore_auth = parse_line(LINE, VisitorKeyPolicy { use_auth_user: false }).unwrap();
        assert_eq!(ignore_auth.visitor_key, a.visitor_key);
    }

    #[test]
    fn malformed_lines_are_tallied() {
        let missing_ua = r#"127.0.0.1 - - [10/Oct/2000:13:55:36 -0700] "GET / HTTP/1.0" 200 1 "-""#;
        let text = format!("{LINE}\n\n{missing_ua}\n{LINE}\n{LINE}\n");
        let parsed = parse_log(text.as_bytes(), VisitorKeyPolicy::default()).unwrap();
        assert_eq!(parsed.entries.len(), 3);
        assert_eq!(parsed.malformed, 2);
    }

    #[test]
    fn mostly_garbage_is_fatal() {
        let text = format!("{LINE}\nnope\nnope\n");
        let err = parse_log(text.as_bytes(), VisitorKeyPolicy::default()).unwrap_err();
        assert_eq!(err.kind(), crate::ErrorKind::Format);
    }

    #[test]
    fn error_statuses_are_kept_but_not_views() {
        let line = LINE.replace("\" 200 ", "\" 404 ");
        let e = parse_line(&line, VisitorKeyPolicy::default()).unwrap();
        assert_eq!(e.status, 404);
        assert!(!e.is_view());
    }

    #[test]
    fn agent_filter() {
        let sigs = BotSignatures::default();
        let mut bot = entry("b", t("2020-01-01T00:00:00Z"), "/");
        bot.user_agent = "Mozilla/5.0 (compatible; Googlebot/2.1)".into();
        let human = entry("h", t("2020-01-01T00:00:00Z"), "/");
        let robots = entry("r", t("2020-01-01T00:00:00Z"), "/robots.txt");
        let split = filter_agents(vec![bot, human.clone(), robots], &sigs);
        assert_eq!(split.humans, vec![human]);
        assert_eq!(split.bots.len(), 2);
    }

    #[test]
    fn signature_list_extends_defaults() {
        let mut sigs = BotSignatures::default();
        sigs.extend_from_text("# custom\nMyMonitor\n");
        let mut e = entry("x", t("2020-01-01T00:00:00Z"), "/");
        e.user_agent = "mymonitor/1.0".into();
        assert!(sigs.matches(&e));
    }

    #[test]
    fn sessionize_examples() {
        let base = t("2020-01-01T10:00:00Z");
        let ten = Duration::minutes(10);
        let timeout = Duration::minutes(30);
        let one: Vec<_> = (0..4).map(|i| entry("v", base + ten * i, "/a")).collect();
        assert_eq!(sessionize(&one, timeout).len(), 1);

        let split = vec![entry("v", base, "/a"), entry("v", base + Duration::minutes(31), "/b")];
        assert_eq!(sessionize(&split, timeout).len(), 2);

        let exact = vec![entry("v", base, "/a"), entry("v", base + timeout, "/b")];
        assert_eq!(sessionize(&exact, timeout).len(), 1);

        let interleaved = vec![
            entry("v", base, "/a"),
            entry("w", base + Duration::minutes(1), "/a"),
            entry("v", base + Duration::minutes(2), "/b"),
            entry("w", base + Duration::minutes(3), "/b"),
        ];
        let s = sessionize(&interleaved, timeout);
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|s| s.views.len() == 2));
        assert_eq!(s[0].visitor_key, "v");
        assert_eq!(s[1].visitor_key, "w");
    }

    #[test]
    fn period_buckets() {
        let p = AnalysisPeriod::new(t("2020-01-01T00:00:00Z"), t("2020-01-03T12:00:00Z"), Duration::days(1)).unwrap();
        assert_eq!(p.bucket_count(), 3);
        assert_eq!(p.bucket_of(t("2020-01-03T11:59:59Z")), Some(2));
        assert_eq!(p.bucket_of(t("2020-01-03T12:00:00Z")), None);
        assert!(AnalysisPeriod::new(p.end, p.start, Duration::days(1)).is_err());
    }

    #[test]
    fn demand_examples() {
        let day = |d: u32| t(&format!("2020-01-0{d}T12:00:00Z"));
        let p = AnalysisPeriod::days(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2020, 1, 3).unwrap()).unwrap();
        let five: Vec<_> = (0..5).map(|i| session(&format!("v{i}"), day(1), &["/"])).collect();
        let d = overall_demand(&five, &p);
        assert_eq!((d.visits.as_slice(), d.total), (&[5, 0, 0][..], 5));

        let early = vec![session("v", t("2019-12-31T23:00:00Z"), &["/"])];
        assert_eq!(overall_demand(&early, &p).total, 0);

        let mut s = Vec::new();
        for (d, n) in [(1, 1), (2, 2), (3, 3)] {
            for i in 0..n {
                s.push(session(&format!("v{d}{i}"), day(d), &["/"]));
            }
        }
        let d = overall_demand(&s, &p);
        assert_eq!((d.visits, d.total), (vec![1, 2, 3], 6));
    }

    #[test]
    fn recency_examples() {
        let p = AnalysisPeriod::days(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2020, 1, 31).unwrap()).unwrap();
        let base = t("2020-01-02T00:00:00Z");
        let d = Duration::days(1);
        let one = vec![session("v", base, &["/"]), session("v", base + d * 2, &["/"]), session("v", base + d * 4, &["/"])];
        assert_eq!(recency(&one, &p).mean_gap_days(), Some(2.0));

        let singles = vec![session("v", base, &["/"]), session("w", base, &["/"])];
        let r = recency(&singles, &p);
        assert_eq!((r.mean_gap_seconds, r.single_visit_visitors), (None, 2));

        let two = vec![
            session("v", base, &["/"]),
            session("v", base + d, &["/"]),
            session("w", base, &["/"]),
            session("w", base + d * 3, &["/"]),
        ];
        assert_eq!(recency(&two, &p).mean_gap_days(), Some(2.0));
    }

    #[test]
    fn activity_examples() {
        let base = t("2020-01-02T00:00:00Z");
        let mk = |n: usize| session("v", base, &vec!["/"; n]);
        assert_eq!(activity_level(&[mk(2), mk(4), mk(6)]).unwrap(), 4.0);
        assert_eq!(activity_level(&[mk(1)]).unwrap(), 1.0);
        assert_eq!(activity_level(&[mk(1), mk(1), mk(10)]).unwrap(), 4.0);
        assert!(activity_level(&[]).is_err());
    }

    fn records() -> Vec<ContentRecord> {
        ["a", "b"]
            .iter()
            .map(|topic| ContentRecord {
                identifier: format!("id-{topic}"),
                resource_type: "activity".into(),
                topic: topic.to_string(),
                published: NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
                portal_id: "p".into(),
            })
            .collect()
    }

    #[test]
    fn accessed_distribution_by_views_and_visitors() {
        let p = AnalysisPeriod::days(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()).unwrap();
        let join = PathJoin::new([("/r/a", "id-a"), ("/r/b", "id-b")]);
        let base = t("2020-01-01T08:00:00Z");
        let sessions = vec![
            session("v", base, &["/r/a"; 9]),
            session("w", base, &["/r/b", "/about"]),
        ];
        let acc = accessed_distribution(&sessions, &records(), &join, Axis::Topic, &p).unwrap();
        assert_eq!(acc.overall.by_views, TopicDistribution::from_counts([("a", 9), ("b", 1)]));
        assert_eq!(acc.overall.by_visitors, TopicDistribution::from_counts([("a", 1), ("b", 1)]));
        assert_eq!(acc.uncatalogued_views, 1);

        let lost = vec![session("v", base, &["/nowhere"])];
        assert!(accessed_distribution(&lost, &records(), &join, Axis::Topic, &p).is_err());
    }

    #[test]
    fn query_strings_fall_back_to_bare_path() {
        let join = PathJoin::parse("/r/a\tid-a\n").unwrap();
        assert_eq!(join.identifier("/r/a?lang=es"), Some("id-a"));
        assert!(PathJoin::parse("/r/a\n").is_err());
    }

    #[test]
    fn navigation_examples() {
        let base = t("2020-01-01T08:00:00Z");
        let chain = navigation_metrics(&session("v", base, &["/a", "/b", "/c"]));
        assert!(matches!(chain, NavigationOutcome::Measured { linearity, .. } if linearity == 1.0));

        let pingpong = navigation_metrics(&session("v", base, &["/a", "/b", "/a", "/b"]));
        assert_eq!(pingpong, NavigationOutcome::Measured { complexity: 1.0, linearity: 0.0 });

        let reload = navigation_metrics(&session("v", base, &["/a", "/a"]));
        assert_eq!(reload, NavigationOutcome::Degenerate);
    }

    #[test]
    fn navigation_summary_shares() {
        let base = t("2020-01-01T08:00:00Z");
        let sessions = vec![
            session("v", base, &["/a", "/b", "/c"]),
            session("w", base, &["/a", "/b", "/a"]),
            session("x", base, &["/a"]),
        ];
        let s = navigation_summary(&sessions, LinearityBand::default());
        assert_eq!((s.measured, s.degenerate), (2, 1));
        assert_eq!(s.share_above_band, Some(0.5));
        assert_eq!(s.share_below_band, Some(0.5));
        assert_eq!(s.linearity_median, Some(0.5));
    }
}
