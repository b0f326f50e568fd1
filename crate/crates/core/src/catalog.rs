//! Content catalog ingestion and provision metrics.
//!
//! A catalog is a delimited table of educational resources keyed by their
//! Dublin Core identifier. Everything downstream (diversity, richness,
//! average age, relative size) counts deduplicated records only.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One catalogued educational resource.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentRecord {
    pub identifier: String,
    pub resource_type: String,
    pub topic: String,
    pub published: NaiveDate,
    pub portal_id: String,
}

/// The network-wide agreed list of topics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicTaxonomy {
    topics: Vec<String>,
}

impl TopicTaxonomy {
    pub fn new<I, S>(topics: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let topics: Vec<String> = topics.into_iter().map(Into::into).collect();
        if topics.is_empty() {
            return Err(Error::Format("topic taxonomy is empty".into()));
        }
        let mut seen = HashSet::new();
        for t in &topics {
            if t.trim().is_empty() {
                return Err(Error::Format("topic taxonomy contains an empty label".into()));
            }
            if !seen.insert(t.as_str()) {
                return Err(Error::Format(format!("duplicate taxonomy label `{t}`")));
            }
        }
        Ok(Self { topics })
    }

    /// One label per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn contains(&self, topic: &str) -> bool {
        self.topics.iter().any(|t| t == topic)
    }
}

/// Counts per label along one axis (topic or resource type).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicDistribution {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl TopicDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut dist = Self::new();
        for (label, count) in counts {
            dist.add(label, count);
        }
        dist
    }

    pub fn add(&mut self, label: impl Into<String>, count: u64) {
        *self.counts.entry(label.into()).or_insert(0) += count;
        self.total += count;
    }

    pub fn get(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    /// Number of labels with a positive count.
    pub fn support(&self) -> usize {
        self.counts.values().filter(|&&c| c > 0).count()
    }

    pub fn share(&self, label: &str) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.get(label) as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Topic,
    ResourceType,
}

impl Axis {
    fn label<'a>(&self, record: &'a ContentRecord) -> &'a str {
        match self {
            Axis::Topic => &record.topic,
            Axis::ResourceType => &record.resource_type,
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "topic" => Ok(Axis::Topic),
            "resource_type" | "type" => Ok(Axis::ResourceType),
            other => Err(Error::Config(format!("unknown axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct CatalogParse {
    pub records: Vec<ContentRecord>,
    pub duplicates: usize,
    pub row_errors: Vec<RowError>,
}

const IDENTIFIER: &[&str] = &["identifier", "dc:identifier", "id"];
const RESOURCE_TYPE: &[&str] = &["resource_type", "dc:type", "type"];
const TOPIC: &[&str] = &["topic", "dc:subject", "subject"];
const PUBLISHED: &[&str] = &["published", "dc:date", "date"];
const PORTAL: &[&str] = &["portal_id", "portal"];

fn find_column(headers: &csv::StringRecord, names: &'static [&'static str]) -> Result<usize> {
    headers
        .iter()
        .position(|h| {
            let h = h.trim().to_ascii_lowercase();
            names.iter().any(|n| *n == h)
        })
        .ok_or(Error::MissingColumn(names[0]))
}

/// Accepts `YYYY-MM-DD`, optionally followed by a time part.
pub fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    let day = match raw.char_indices().nth(10) {
        Some((i, 'T' | ' ')) => &raw[..i],
        Some(_) => return None,
        None => raw,
    };
    NaiveDate::parse_from_str(day, "%Y-%m-%d").ok()
}

/// Parses a comma- or tab-separated catalog with a header row.
///
/// Rows that cannot be read are skipped and tallied with their line number.
/// Records sharing `(portal_id, identifier)` are collapsed, first one wins.
pub fn parse_catalog<R: Read>(mut input: R) -> Result<CatalogParse> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let header_line = text.lines().next().unwrap_or("");
    if header_line.trim().is_empty() {
        return Err(Error::Format("catalog has no header row".into()));
    }
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("catalog header: {e}")))?
        .clone();
    let id_col = find_column(&headers, IDENTIFIER)?;
    let type_col = find_column(&headers, RESOURCE_TYPE)?;
    let topic_col = find_column(&headers, TOPIC)?;
    let date_col = find_column(&headers, PUBLISHED)?;
    let portal_col = find_column(&headers, PORTAL)?;

    let mut out = CatalogParse::default();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                out.row_errors.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.iter().all(|f| f.is_empty()) {
            continue;
        }
        let field = |i: usize| row.get(i).unwrap_or("");
        let identifier = field(id_col);
        if identifier.is_empty() {
            out.row_errors.push(RowError { line, message: "empty identifier".into() });
            continue;
        }
        if row.len() < headers.len() {
            out.row_errors.push(RowError {
                line,
                message: format!("expected {} fields, found {}", headers.len(), row.len()),
            });
            continue;
        }
        let Some(published) = parse_date(field(date_col)) else {
            out.row_errors.push(RowError {
                line,
                message: format!("unparseable date `{}`", field(date_col)),
            });
            continue;
        };
        let record = ContentRecord {
            identifier: identifier.to_string(),
            resource_type: field(type_col).to_string(),
            topic: field(topic_col).to_string(),
            published,
            portal_id: field(portal_col).to_string(),
        };
        if seen.insert((record.portal_id.clone(), record.identifier.clone())) {
            out.records.push(record);
        } else {
            out.duplicates += 1;
        }
    }
    Ok(out)
}

/// Shannon entropy of a distribution and its evenness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diversity {
    /// Entropy in nats.
    pub entropy: f64,
    /// Entropy divided by `ln S`; zero when `S == 1`.
    pub evenness: f64,
}

/// Shannon entropy `-sum p ln p` over the positive counts, in nats.
pub fn shannon_entropy(dist: &TopicDistribution) -> Result<f64> {
    if dist.total() == 0 {
        return Err(Error::NoContent("distribution has no positive count".into()));
    }
    let total = dist.total() as f64;
    let h = -dist
        .counts()
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * p.ln()
        })
        .sum::<f64>();
    // a single-topic distribution evaluates to -0.0
    Ok(h.max(0.0))
}

/// Entropy plus evenness against a category count of `taxonomy_size`.
///
/// Labels outside the taxonomy still contribute to the entropy, so the
/// evenness denominator uses whichever is larger: the taxonomy size or the
/// number of labels actually present.
pub fn shannon_diversity(dist: &TopicDistribution, taxonomy_size: usize) -> Result<Diversity> {
    let entropy = shannon_entropy(dist)?;
    let categories = taxonomy_size.max(dist.support());
    let evenness = if categories <= 1 {
        0.0
    } else {
        (entropy / (categories as f64).ln()).clamp(0.0, 1.0)
    };
    Ok(Diversity { entropy, evenness })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Richness {
    pub ratio: f64,
    pub covered: usize,
    pub taxonomy_size: usize,
    /// Topics found in records but missing from the taxonomy.
    pub unknown_topics: Vec<String>,
}

pub fn richness(records: &[ContentRecord], taxonomy: &TopicTaxonomy) -> Richness {
    let present: BTreeSet<&str> = records.iter().map(|r| r.topic.as_str()).collect();
    let covered = taxonomy
        .topics()
        .iter()
        .filter(|t| present.contains(t.as_str()))
        .count();
    let unknown_topics = present
        .iter()
        .filter(|t| !taxonomy.contains(t))
        .map(|t| t.to_string())
        .collect();
    Richness {
        ratio: covered as f64 / taxonomy.len() as f64,
        covered,
        taxonomy_size: taxonomy.len(),
        unknown_topics,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeSummary {
    pub mean_days: f64,
    pub by_topic: BTreeMap<String, f64>,
}

/// Mean age in days of the records at `reference`, overall and per topic.
pub fn average_age(records: &[ContentRecord], reference: NaiveDate) -> Result<AgeSummary> {
    if records.is_empty() {
        return Err(Error::NoContent("no records to age".into()));
    }
    let mut sum = 0i64;
    let mut per_topic: BTreeMap<&str, (i64, u64)> = BTreeMap::new();
    for r in records {
        if r.published > reference {
            return Err(Error::PublishedAfterReference {
                identifier: r.identifier.clone(),
                published: r.published,
                reference,
            });
        }
        let age = (reference - r.published).num_days();
        sum += age;
        let slot = per_topic.entry(&r.topic).or_insert((0, 0));
        slot.0 += age;
        slot.1 += 1;
    }
    Ok(AgeSummary {
        mean_days: sum as f64 / records.len() as f64,
        by_topic: per_topic
            .into_iter()
            .map(|(t, (s, n))| (t.to_string(), s as f64 / n as f64))
            .collect(),
    })
}

pub fn offer_distribution(records: &[ContentRecord], axis: Axis) -> TopicDistribution {
    let mut dist = TopicDistribution::new();
    for r in records {
        dist.add(axis.label(r), 1);
    }
    dist
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapFlag {
    HighDemandLowOffer,
    HighOfferLowDemand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicGap {
    pub label: String,
    pub offer_share: f64,
    pub demand_share: f64,
    /// `demand_share - offer_share`
    pub gap: f64,
    pub flag: Option<GapFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub threshold: f64,
    pub topics: Vec<TopicGap>,
}

impl GapReport {
    pub fn flagged(&self) -> impl Iterator<Item = &TopicGap> {
        self.topics.iter().filter(|t| t.flag.is_some())
    }
}

/// Compares offered and accessed shares topic by topic.
///
/// Labels missing from either side count as zero. A gap strictly above
/// `threshold` flags high demand / low offer, strictly below `-threshold`
/// flags the opposite.
pub fn demand_offer_gap(
    offer: &TopicDistribution,
    accessed: &TopicDistribution,
    threshold: f64,
) -> Result<GapReport> {
    if offer.total() == 0 || accessed.total() == 0 {
        return Err(Error::Domain(format!(
            "gap analysis needs both offer and demand (offer total {}, demand total {})",
            offer.total(),
            accessed.total()
        )));
    }
    let labels: BTreeSet<&str> = offer.labels().chain(accessed.labels()).collect();
    let topics = labels
        .into_iter()
        .map(|label| {
            let offer_share = offer.share(label);
            let demand_share = accessed.share(label);
            let gap = demand_share - offer_share;
            let flag = if gap > threshold {
                Some(GapFlag::HighDemandLowOffer)
            } else if gap < -threshold {
                Some(GapFlag::HighOfferLowDemand)
            } else {
                None
            };
            TopicGap { label: label.to_string(), offer_share, demand_share, gap, flag }
        })
        .collect();
    Ok(GapReport { threshold, topics })
}

/// Number of distinct identifiers across all records, ignoring portals.
pub fn network_unique_count(records: &[ContentRecord]) -> usize {
    records.iter().map(|r| r.identifier.as_str()).collect::<HashSet<_>>().len()
}
