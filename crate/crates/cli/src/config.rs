//! Run configuration: a `key = value` file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use chrono::{Duration, NaiveDate};
use clap::Args;

use portal_metrics::catalog::Axis;
use portal_metrics::pipeline::RunSettings;
use portal_metrics::report::{Methodology, DEFAULT_COMPARISON_MARGIN};
use portal_metrics::usage::{AnalysisPeriod, BotSignatures, VisitorKeyPolicy};
use portal_metrics::Error;

/// Keys that name files; relative values in a config file resolve against
/// the file's directory.
const PATH_KEYS: &[&str] = &[
    "catalog", "taxonomy", "site_graph", "logs", "join_map", "page_links", "site_map", "bot_list", "out_dir",
];

const OTHER_KEYS: &[&str] = &[
    "portal",
    "site_id",
    "root",
    "period_start",
    "period_end",
    "bucket_seconds",
    "reference_date",
    "session_timeout",
    "gap_threshold",
    "growth_threshold",
    "bridge_min_score",
    "bridge_min_communities",
    "authority_percentile",
    "hub_percentile",
    "distance_k",
    "band_low",
    "band_high",
    "axis",
    "use_auth_user",
    "margin",
    "seed",
];

/// Flags shared by every subcommand; each overrides the config file key of
/// the same name (dashes become underscores).
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// `key = value` configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub catalog: Option<String>,
    #[arg(long, global = true)]
    pub taxonomy: Option<String>,
    #[arg(long, global = true)]
    pub site_graph: Option<String>,
    /// Access log; repeat for several files
    #[arg(long = "log", global = true)]
    pub logs: Vec<String>,
    #[arg(long, global = true)]
    pub join_map: Option<String>,
    #[arg(long, global = true)]
    pub page_links: Option<String>,
    #[arg(long, global = true)]
    pub site_map: Option<String>,
    #[arg(long, global = true)]
    pub bot_list: Option<String>,
    #[arg(long, global = true)]
    pub out_dir: Option<String>,
    #[arg(long, global = true)]
    pub portal: Option<String>,
    #[arg(long, global = true)]
    pub site_id: Option<String>,
    /// Homepage of the site graph
    #[arg(long, global = true)]
    pub root: Option<String>,
    /// First day of the analysis period (YYYY-MM-DD)
    #[arg(long, global = true)]
    pub period_start: Option<String>,
    /// Last day of the analysis period, inclusive
    #[arg(long, global = true)]
    pub period_end: Option<String>,
    #[arg(long, global = true)]
    pub bucket_seconds: Option<String>,
    #[arg(long, global = true)]
    pub reference_date: Option<String>,
    /// Session timeout in seconds
    #[arg(long, global = true)]
    pub session_timeout: Option<String>,
    #[arg(long, global = true)]
    pub gap_threshold: Option<String>,
    #[arg(long, global = true)]
    pub growth_threshold: Option<String>,
    #[arg(long, global = true)]
    pub bridge_min_score: Option<String>,
    #[arg(long, global = true)]
    pub bridge_min_communities: Option<String>,
    #[arg(long, global = true)]
    pub authority_percentile: Option<String>,
    #[arg(long, global = true)]
    pub hub_percentile: Option<String>,
    /// Distance assigned to unreachable page pairs (default: page count)
    #[arg(long, global = true)]
    pub distance_k: Option<String>,
    #[arg(long, global = true)]
    pub band_low: Option<String>,
    #[arg(long, global = true)]
    pub band_high: Option<String>,
    /// `topic` or `resource_type`
    #[arg(long, global = true)]
    pub axis: Option<String>,
    #[arg(long, global = true)]
    pub use_auth_user: Option<String>,
    /// Comparison margin for learning pointers
    #[arg(long, global = true)]
    pub margin: Option<String>,
    /// Community detection seed
    #[arg(long, global = true)]
    pub seed: Option<String>,
}

impl ConfigFlags {
    fn overrides(&self) -> BTreeMap<&'static str, String> {
        let mut out = BTreeMap::new();
        let mut put = |k: &'static str, v: &Option<String>| {
            if let Some(v) = v {
                out.insert(k, v.clone());
            }
        };
        put("catalog", &self.catalog);
        put("taxonomy", &self.taxonomy);
        put("site_graph", &self.site_graph);
        put("join_map", &self.join_map);
        put("page_links", &self.page_links);
        put("site_map", &self.site_map);
        put("bot_list", &self.bot_list);
        put("out_dir", &self.out_dir);
        put("portal", &self.portal);
        put("site_id", &self.site_id);
        put("root", &self.root);
        put("period_start", &self.period_start);
        put("period_end", &self.period_end);
        put("bucket_seconds", &self.bucket_seconds);
        put("reference_date", &self.reference_date);
        put("session_timeout", &self.session_timeout);
        put("gap_threshold", &self.gap_threshold);
        put("growth_threshold", &self.growth_threshold);
        put("bridge_min_score", &self.bridge_min_score);
        put("bridge_min_communities", &self.bridge_min_communities);
        put("authority_percentile", &self.authority_percentile);
        put("hub_percentile", &self.hub_percentile);
        put("distance_k", &self.distance_k);
        put("band_low", &self.band_low);
        put("band_high", &self.band_high);
        put("axis", &self.axis);
        put("use_auth_user", &self.use_auth_user);
        put("margin", &self.margin);
        put("seed", &self.seed);
        if !self.logs.is_empty() {
            out.insert("logs", self.logs.join(","));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub catalog: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub site_graph: Option<PathBuf>,
    pub logs: Vec<PathBuf>,
    pub join_map: Option<PathBuf>,
    pub page_links: Option<PathBuf>,
    pub site_map: Option<PathBuf>,
    pub bot_list: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub portal: Option<String>,
    pub site_id: Option<String>,
    pub root: Option<String>,
    pub period: Option<AnalysisPeriod>,
    pub reference_date: Option<NaiveDate>,
    pub axis: Axis,
    pub visitor_policy: VisitorKeyPolicy,
    pub margin: f64,
    pub methodology: Methodology,
}

fn config_error(msg: String) -> anyhow::Error {
    Error::Config(msg).into()
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_config_text(text: &str, origin: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(config_error(format!("{}:{}: expected `key = value`", origin.display(), i + 1)));
        };
        let key = k.trim().replace('-', "_");
        if !PATH_KEYS.contains(&key.as_str()) && !OTHER_KEYS.contains(&key.as_str()) {
            return Err(config_error(format!("{}:{}: unknown key `{key}`", origin.display(), i + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn parse<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| config_error(format!("`{key}`: cannot parse `{raw}`")))
}

fn parse_date(key: &str, raw: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| config_error(format!("`{key}`: expected YYYY-MM-DD, got `{raw}`")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(config_error(format!("`{key}`: expected true or false, got `{raw}`"))),
    }
}

impl RunConfig {
    /// Resolves flag > file > default.
    pub fn resolve(flags: &ConfigFlags) -> Result<Self> {
        let mut values: BTreeMap<String, String> = BTreeMap::new();
        if let Some(path) = &flags.config {
            let text = fs::read_to_string(path)
                .map_err(Error::from)
                .with_context(|| format!("reading config `{}`", path.display()))?;
            let base = path.parent().unwrap_or(Path::new(""));
            for (k, v) in parse_config_text(&text, path)? {
                let v = if PATH_KEYS.contains(&k.as_str()) {
                    v.split(',')
                        .map(|p| base.join(p.trim()).to_string_lossy().into_owned())
                        .collect::<Vec<_>>()
                        .join(",")
                } else {
                    v
                };
                values.insert(k, v);
            }
        }
        for (k, v) in flags.overrides() {
            values.insert(k.to_string(), v);
        }
        Self::from_values(&values)
    }

    pub fn from_values(values: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| values.get(k).map(String::as_str).filter(|v| !v.is_empty());
        let path = |k: &str| get(k).map(PathBuf::from);
        let mut m = RunSettings::default().methodology;
        if let Some(v) = get("session_timeout") {
            m.session_timeout_seconds = parse("session_timeout", v)?;
        }
        if let Some(v) = get("bucket_seconds") {
            m.bucket_seconds = parse("bucket_seconds", v)?;
        }
        if let Some(v) = get("gap_threshold") {
            m.gap_threshold = parse("gap_threshold", v)?;
        }
        if let Some(v) = get("growth_threshold") {
            m.growth_threshold = parse("growth_threshold", v)?;
        }
        if let Some(v) = get("bridge_min_score") {
            m.bridge_min_score = parse("bridge_min_score", v)?;
        }
        if let Some(v) = get("bridge_min_communities") {
            m.bridge_min_communities = parse("bridge_min_communities", v)?;
        }
        if let Some(v) = get("authority_percentile") {
            m.authority_percentile = parse("authority_percentile", v)?;
        }
        if let Some(v) = get("hub_percentile") {
            m.hub_percentile = parse("hub_percentile", v)?;
        }
        if let Some(v) = get("distance_k") {
            m.distance_k = Some(parse("distance_k", v)?);
        }
        if let Some(v) = get("band_low") {
            m.linearity_band_low = parse("band_low", v)?;
        }
        if let Some(v) = get("band_high") {
            m.linearity_band_high = parse("band_high", v)?;
        }
        if let Some(v) = get("seed") {
            m.community_seed = parse("seed", v)?;
        }
        let use_auth_user = get("use_auth_user").map(|v| parse_bool("use_auth_user", v)).transpose()?.unwrap_or(true);
        if !use_auth_user {
            m.visitor_identification = "sha256(client address, user agent)".into();
        }
        m.validate()?;

        let period = match (get("period_start"), get("period_end")) {
            (None, None) => None,
            (Some(s), Some(e)) => {
                let days = AnalysisPeriod::days(parse_date("period_start", s)?, parse_date("period_end", e)?)?;
                Some(AnalysisPeriod::new(days.start, days.end, Duration::seconds(m.bucket_seconds))?)
            }
            _ => return Err(config_error("`period_start` and `period_end` go together".into())),
        };
        let margin = get("margin").map(|v| parse::<f64>("margin", v)).transpose()?.unwrap_or(DEFAULT_COMPARISON_MARGIN);
        if !(margin >= 0.0) {
            return Err(config_error(format!("`margin` must be non-negative, got {margin}")));
        }
        Ok(Self {
            catalog: path("catalog"),
            taxonomy: path("taxonomy"),
            site_graph: path("site_graph"),
            logs: get("logs")
                .map(|v| v.split(',').map(str::trim).filter(|p| !p.is_empty()).map(PathBuf::from).collect())
                .unwrap_or_default(),
            join_map: path("join_map"),
            page_links: path("page_links"),
            site_map: path("site_map"),
            bot_list: path("bot_list"),
            out_dir: path("out_dir").unwrap_or_else(|| PathBuf::from(".")),
            portal: get("portal").map(str::to_string),
            site_id: get("site_id").map(str::to_string),
            root: get("root").map(str::to_string),
            period,
            reference_date: get("reference_date").map(|v| parse_date("reference_date", v)).transpose()?,
            axis: get("axis").map(Axis::from_str).transpose()?.unwrap_or(Axis::Topic),
            visitor_policy: VisitorKeyPolicy { use_auth_user },
            margin,
            methodology: m,
        })
    }

    pub fn require<'a, T>(&self, value: &'a Option<T>, key: &str) -> Result<&'a T> {
        value.as_ref().ok_or_else(|| config_error(format!("`{key}` is required for this subcommand")))
    }

    pub fn portal_id(&self) -> Result<&str> {
        self.require(&self.portal, "portal").map(String::as_str)
    }

    pub fn bots(&self) -> Result<BotSignatures> {
        let mut bots = BotSignatures::default();
        if let Some(p) = &self.bot_list {
            bots.extend_from_text(&read_text(p, "bot list")?);
        }
        Ok(bots)
    }

    pub fn settings(&self) -> Result<RunSettings> {
        let mut s = RunSettings::default().with_bots(self.bots()?);
        let digest = s.methodology.bot_signatures_sha256.clone();
        s.methodology = Methodology { bot_signatures_sha256: digest, ..self.methodology.clone() };
        s.axis = self.axis;
        s.reference = self.reference_date;
        s.period = self.period;
        Ok(s)
    }
}

/// Reads a whole text file, naming it in any error.
pub fn read_text(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path)
        .map_err(Error::from)
        .with_context(|| format!("reading {what} `{}`", path.display()))
}

pub fn check_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(Error::from)
        .with_context(|| format!("creating output directory `{}`", dir.display()))?;
    if !dir.is_dir() {
        bail!(anyhow!(Error::Config(format!("`{}` is not a directory", dir.display()))));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_dashes() {
        let m = parse_config_text("# c\nportal = a\nsession-timeout = 60\n\n", Path::new("x.conf")).unwrap();
        assert_eq!(m["portal"], "a");
        assert_eq!(m["session_timeout"], "60");
    }

    #[test]
    fn rejects_unknown_keys_and_bare_lines() {
        assert!(parse_config_text("colour = red", Path::new("x")).is_err());
        assert!(parse_config_text("portal", Path::new("x")).is_err());
    }

    #[test]
    fn flags_beat_file_and_paths_resolve_against_config_dir() {
        let dir = std::env::temp_dir().join(format!("pm-config-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let conf = dir.join("run.conf");
        fs::write(&conf, "catalog = cat.csv\nlogs = a.log, b.log\ngap_threshold = 0.2\n").unwrap();
        let flags = ConfigFlags { config: Some(conf), gap_threshold: Some("0.4".into()), ..ConfigFlags::default() };
        let cfg = RunConfig::resolve(&flags).unwrap();
        fs::remove_dir_all(&dir).unwrap();
        assert_eq!(cfg.methodology.gap_threshold, 0.4);
        assert_eq!(cfg.catalog, Some(dir.join("cat.csv")));
        assert_eq!(cfg.logs, vec![dir.join("a.log"), dir.join("b.log")]);
    }

    #[test]
    fn defaults_apply_without_file() {
        let cfg = RunConfig::resolve(&ConfigFlags::default()).unwrap();
        assert_eq!(cfg.methodology.session_timeout_seconds, 1800);
        assert_eq!(cfg.margin, DEFAULT_COMPARISON_MARGIN);
        assert!(cfg.period.is_none());
    }

    #[test]
    fn period_needs_both_ends() {
        let mut v = BTreeMap::new();
        v.insert("period_start".to_string(), "2024-03-01".to_string());
        assert!(RunConfig::from_values(&v).is_err());
        v.insert("period_end".to_string(), "2024-03-03".to_string());
        let p = RunConfig::from_values(&v).unwrap().period.unwrap();
        assert_eq!(p.bucket_count(), 3);
    }
}
