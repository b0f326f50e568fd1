//! A portal's place in the national educational Web: in-degree
//! (authoritativeness), out-degree (hubness), and bridging between link
//! communities.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::split_fields;

/// Directed site-level link graph with link multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossSiteGraph {
    sites: Vec<String>,
    index: HashMap<String, usize>,
    links: BTreeMap<(usize, usize), u64>,
    out: Vec<BTreeSet<usize>>,
    inc: Vec<BTreeSet<usize>>,
}

impl CrossSiteGraph {
    /// Builds a graph from site-level links; self-links are ignored.
    pub fn from_links<'a>(
        sites: impl IntoIterator<Item = &'a str>,
        links: impl IntoIterator<Item = (&'a str, &'a str, u64)>,
    ) -> Self {
        let links: Vec<(&str, &str, u64)> = links.into_iter().collect();
        let mut names: BTreeSet<&str> = sites.into_iter().collect();
        for (a, b, _) in &links {
            names.insert(a);
            names.insert(b);
        }
        let sites: Vec<String> = names.into_iter().map(str::to_string).collect();
        let index: HashMap<String, usize> =
            sites.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let n = sites.len();
        let mut g = CrossSiteGraph {
            sites,
            index,
            links: BTreeMap::new(),
            out: vec![BTreeSet::new(); n],
            inc: vec![BTreeSet::new(); n],
        };
        for (a, b, m) in links {
            let (a, b) = (g.index[a], g.index[b]);
            if a == b || m == 0 {
                continue;
            }
            *g.links.entry((a, b)).or_insert(0) += m;
            g.out[a].insert(b);
            g.inc[b].insert(a);
        }
        g
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn sites(&self) -> &[String] {
        &self.sites
    }

    pub fn site_index(&self, site: &str) -> Option<usize> {
        self.index.get(site).copied()
    }

    fn require(&self, site: &str) -> Result<usize> {
        self.site_index(site).ok_or_else(|| Error::UnknownSite(site.to_string()))
    }

    pub fn multiplicity(&self, from: &str, to: &str) -> u64 {
        match (self.site_index(from), self.site_index(to)) {
            (Some(a), Some(b)) => self.links.get(&(a, b)).copied().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn links(&self) -> impl Iterator<Item = (&str, &str, u64)> + '_ {
        self.links
            .iter()
            .map(|(&(a, b), &m)| (self.sites[a].as_str(), self.sites[b].as_str(), m))
    }

    fn in_degree_of(&self, v: usize) -> usize {
        self.inc[v].len()
    }

    fn out_degree_of(&self, v: usize) -> usize {
        self.out[v].len()
    }

    /// Distinct sites linked in either direction.
    fn neighbors(&self, v: usize) -> BTreeSet<usize> {
        self.out[v].union(&self.inc[v]).copied().collect()
    }
}

/// Longest-prefix mapping from URLs to site identifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SiteMap {
    prefixes: Vec<(String, String)>,
}

impl SiteMap {
    pub fn new<I, P, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (P, S)>,
        P: Into<String>,
        S: Into<String>,
    {
        let mut prefixes: Vec<(String, String)> =
            pairs.into_iter().map(|(p, s)| (p.into(), s.into())).collect();
        prefixes.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Self { prefixes }
    }

    /// Two delimited columns per line: URL prefix, site id.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match split_fields(line).as_slice() {
                [prefix, site] => pairs.push((prefix.to_string(), site.to_string())),
                _ => {
                    return Err(Error::Format(format!(
                        "site map line {}: expected two columns",
                        i + 1
                    )))
                }
            }
        }
        Ok(Self::new(pairs))
    }

    pub fn site_for(&self, url: &str) -> Option<&str> {
        self.prefixes
            .iter()
            .find(|(p, _)| url.starts_with(p.as_str()))
            .map(|(_, s)| s.as_str())
    }

    pub fn site_ids(&self) -> impl Iterator<Item = &str> {
        self.prefixes.iter().map(|(_, s)| s.as_str())
    }
}

/// Second-level labels under which country domains register names
/// (`educ.ar` vs `mec.gub.uy`).
const SECOND_LEVEL: &[&str] = &["com", "edu", "gob", "gov", "gub", "org", "net", "ac", "co", "mil", "nom", "int", "sch"];

/// Approximate registrable domain of a URL's host.
pub fn registrable_domain(raw: &str) -> String {
    let host = url::Url::parse(raw)
        .ok()
        .and_then(|u| u.host_str().map(str::to_string))
        .unwrap_or_else(|| raw.split('/').next().unwrap_or(raw).to_string())
        .to_lowercase();
    let host = host.strip_prefix("www.").unwrap_or(&host).to_string();
    if host.parse::<std::net::IpAddr>().is_ok() {
        return host;
    }
    let labels: Vec<&str> = host.split('.').filter(|l| !l.is_empty()).collect();
    let keep = match labels.as_slice() {
        [.., second, tld] if tld.len() == 2 && SECOND_LEVEL.contains(second) => 3,
        _ => 2,
    };
    labels[labels.len().saturating_sub(keep)..].join(".")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossSiteBuild {
    pub graph: CrossSiteGraph,
    pub page_links: usize,
    pub intra_site_links: usize,
    /// URLs no site-map prefix covered; grouped by registrable domain.
    pub unmapped_urls: usize,
}

/// Aggregates page-level `(from_url, to_url)` rows into a site-level graph.
///
/// Every site named in the site map is part of the graph even without links.
pub fn build_cross_site_graph<R: BufRead>(page_links: R, site_map: &SiteMap) -> Result<CrossSiteBuild> {
    let mut site_links: BTreeMap<(String, String), u64> = BTreeMap::new();
    let (mut page_count, mut intra, mut unmapped) = (0, 0, 0);
    let mut resolve = |url: &str| match site_map.site_for(url) {
        Some(s) => s.to_string(),
        None => {
            unmapped += 1;
            registrable_domain(url)
        }
    };
    let mut linked_sites: BTreeSet<String> = BTreeSet::new();
    for (i, line) in page_links.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_fields(line);
        let [from, to] = fields.as_slice() else {
            return Err(Error::Format(format!("page links line {}: expected two columns", i + 1)));
        };
        page_count += 1;
        let (a, b) = (resolve(from), resolve(to));
        if a == b {
            intra += 1;
            linked_sites.insert(a);
            continue;
        }
        *site_links.entry((a, b)).or_insert(0) += 1;
    }
    for (a, b) in site_links.keys() {
        linked_sites.insert(a.clone());
        linked_sites.insert(b.clone());
    }
    let graph = CrossSiteGraph::from_links(
        site_map.site_ids().chain(linked_sites.iter().map(String::as_str)),
        site_links.iter().map(|((a, b), &m)| (a.as_str(), b.as_str(), m)),
    );
    if graph.site_count() == 0 {
        return Err(Error::Domain("cross-site graph is empty".into()));
    }
    Ok(CrossSiteBuild { graph, page_links: page_count, intra_site_links: intra, unmapped_urls: unmapped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degree {
    /// Distinct neighbor sites.
    pub distinct: usize,
    /// Page-level links summed over those sites.
    pub weighted: u64,
}

/// In-degree over distinct linking sites.
pub fn authoritativeness(g: &CrossSiteGraph, site: &str) -> Result<Degree> {
    let v = g.require(site)?;
    Ok(Degree {
        distinct: g.in_degree_of(v),
        weighted: g.inc[v].iter().map(|&u| g.links[&(u, v)]).sum(),
    })
}

/// Out-degree over distinct linked sites.
pub fn hubness(g: &CrossSiteGraph, site: &str) -> Result<Degree> {
    let v = g.require(site)?;
    Ok(Degree {
        distinct: g.out_degree_of(v),
        weighted: g.out[v].iter().map(|&w| g.links[&(v, w)]).sum(),
    })
}

/// Community labels per site, dense from zero in order of each community's
/// first site (sites sorted by id).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    pub labels: BTreeMap<String, usize>,
    pub seed: u64,
    pub algorithm: String,
    pub rounds: usize,
    pub converged: bool,
}

impl CommunityAssignment {
    pub fn label(&self, site: &str) -> Option<usize> {
        self.labels.get(site).copied()
    }

    pub fn community_count(&self) -> usize {
        self.labels.values().collect::<BTreeSet<_>>().len()
    }
}

/// A community detection method over the undirected projection.
pub trait CommunityStrategy {
    fn name(&self) -> &str;
    fn detect(&self, g: &CrossSiteGraph, seed: u64) -> CommunityAssignment;
}

/// Asynchronous label propagation over reciprocity-weighted ties.
///
/// Initial labels are the nodes' positions in a seeded shuffle. A neighbor
/// linked in both directions weighs 2, a one-way neighbor 1, and the node's
/// own label 1. Each round visits the nodes in a fresh seeded order and
/// moves each one to the heaviest label around it, keeping its current
/// label when that is among the heaviest and otherwise taking the smallest.
/// It stops after a round without changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelPropagation {
    pub max_rounds: usize,
}

impl Default for LabelPropagation {
    fn default() -> Self {
        Self { max_rounds: 100 }
    }
}

pub const LABEL_PROPAGATION: &str = "async-label-propagation/reciprocity-weighted/keep-current-ties";

impl CommunityStrategy for LabelPropagation {
    fn name(&self) -> &str {
        LABEL_PROPAGATION
    }

    fn detect(&self, g: &CrossSiteGraph, seed: u64) -> CommunityAssignment {
        let n = g.site_count();
        let neighbors: Vec<Vec<(usize, usize)>> = (0..n)
            .map(|v| {
                g.neighbors(v)
                    .into_iter()
                    .map(|w| (w, usize::from(g.out[v].contains(&w)) + usize::from(g.inc[v].contains(&w))))
                    .collect()
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut labels = vec![0usize; n];
        for (pos, &v) in order.iter().enumerate() {
            labels[v] = pos;
        }

        let mut rounds = 0;
        let mut converged = false;
        let mut weights: BTreeMap<usize, usize> = BTreeMap::new();
        while rounds < self.max_rounds {
            rounds += 1;
            order.shuffle(&mut rng);
            let mut changed = false;
            for &v in &order {
                weights.clear();
                weights.insert(labels[v], 1);
                for &(w, weight) in &neighbors[v] {
                    *weights.entry(labels[w]).or_insert(0) += weight;
                }
                let top = weights.values().copied().max().unwrap_or(0);
                if weights[&labels[v]] == top {
                    continue;
                }
                // ascending iteration makes the first heaviest label the smallest
                if let Some((&l, _)) = weights.iter().find(|&(_, &c)| c == top) {
                    labels[v] = l;
                    changed = true;
                }
            }
            if !changed {
                converged = true;
                break;
            }
        }

        let mut dense: HashMap<usize, usize> = HashMap::new();
        let labels = g
            .sites()
            .iter()
            .zip(&labels)
            .map(|(site, l)| {
                let next = dense.len();
                (site.clone(), *dense.entry(*l).or_insert(next))
            })
            .collect();
        CommunityAssignment {
            labels,
            seed,
            algorithm: self.name().to_string(),
            rounds,
            converged,
        }
    }
}

pub fn detect_communities(g: &CrossSiteGraph, seed: u64) -> CommunityAssignment {
    LabelPropagation::default().detect(g, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionThresholds {
    pub bridge_min_score: f64,
    pub bridge_min_communities: usize,
    /// Quantile in `[0, 1]` of in-degree above which a site is an authority.
    pub authority_percentile: f64,
    pub hub_percentile: f64,
}

impl Default for PositionThresholds {
    fn default() -> Self {
        Self {
            bridge_min_score: 0.5,
            bridge_min_communities: 2,
            authority_percentile: 0.75,
            hub_percentile: 0.75,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bridging {
    pub degree: usize,
    pub distinct_neighbors: usize,
    pub adjacent_communities: Option<usize>,
    pub bridge_score: Option<f64>,
    pub bridge: bool,
    pub isolated: bool,
}

/// Linear-interpolation quantile of `values` (`q` in `[0, 1]`).
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// Median of `Id + Od` across all sites of the graph.
pub fn median_degree(g: &CrossSiteGraph) -> f64 {
    let degrees: Vec<f64> = (0..g.site_count())
        .map(|v| (g.in_degree_of(v) + g.out_degree_of(v)) as f64)
        .collect();
    quantile(&degrees, 0.5).unwrap_or(0.0)
}

pub fn bridging(
    g: &CrossSiteGraph,
    site: &str,
    communities: &CommunityAssignment,
    thresholds: &PositionThresholds,
) -> Result<Bridging> {
    let v = g.require(site)?;
    let degree = g.in_degree_of(v) + g.out_degree_of(v);
    let neighbors = g.neighbors(v);
    if neighbors.is_empty() {
        return Ok(Bridging {
            degree,
            distinct_neighbors: 0,
            adjacent_communities: None,
            bridge_score: None,
            bridge: false,
            isolated: true,
        });
    }
    let mut adjacent = BTreeSet::new();
    for &w in &neighbors {
        let label = communities
            .label(&g.sites[w])
            .ok_or_else(|| Error::Domain(format!("site `{}` has no community label", g.sites[w])))?;
        adjacent.insert(label);
    }
    let adjacent = adjacent.len();
    let score = adjacent as f64 / neighbors.len() as f64;
    let bridge = adjacent >= thresholds.bridge_min_communities
        && score >= thresholds.bridge_min_score
        && degree as f64 <= median_degree(g);
    Ok(Bridging {
        degree,
        distinct_neighbors: neighbors.len(),
        adjacent_communities: Some(adjacent),
        bridge_score: Some(score),
        bridge,
        isolated: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionMethod {
    pub community_algorithm: String,
    pub community_seed: u64,
    pub thresholds: PositionThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionProfile {
    pub site: String,
    pub in_degree: usize,
    pub weighted_in_degree: u64,
    pub out_degree: usize,
    pub weighted_out_degree: u64,
    pub degree: usize,
    pub distinct_neighbors: usize,
    pub adjacent_communities: Option<usize>,
    pub bridge_score: Option<f64>,
    pub authority: bool,
    pub hub: bool,
    pub bridge: bool,
    pub isolated: bool,
    pub method: PositionMethod,
}

pub fn position_profile(
    g: &CrossSiteGraph,
    site: &str,
    communities: &CommunityAssignment,
    thresholds: &PositionThresholds,
) -> Result<PositionProfile> {
    let id = authoritativeness(g, site)?;
    let od = hubness(g, site)?;
    let b = bridging(g, site, communities, thresholds)?;
    let ins: Vec<f64> = (0..g.site_count()).map(|v| g.in_degree_of(v) as f64).collect();
    let outs: Vec<f64> = (0..g.site_count()).map(|v| g.out_degree_of(v) as f64).collect();
    let in_cut = quantile(&ins, thresholds.authority_percentile).unwrap_or(0.0);
    let out_cut = quantile(&outs, thresholds.hub_percentile).unwrap_or(0.0);
    Ok(PositionProfile {
        site: site.to_string(),
        in_degree: id.distinct,
        weighted_in_degree: id.weighted,
        out_degree: od.distinct,
        weighted_out_degree: od.weighted,
        degree: b.degree,
        distinct_neighbors: b.distinct_neighbors,
        adjacent_communities: b.adjacent_communities,
        bridge_score: b.bridge_score,
        authority: id.distinct > 0 && id.distinct as f64 >= in_cut,
        hub: od.distinct > 0 && od.distinct as f64 >= out_cut,
        bridge: b.bridge,
        isolated: b.isolated,
        method: PositionMethod {
            community_algorithm: communities.algorithm.clone(),
            community_seed: communities.seed,
            thresholds: *thresholds,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bidirectional<'a>(pairs: &[(&'a str, &'a str)]) -> Vec<(&'a str, &'a str, u64)> {
        pairs.iter().flat_map(|&(a, b)| [(a, b, 1), (b, a, 1)]).collect()
    }

    /// Two bidirectional triangles plus a site `x` linking out to one node of each.
    fn bridged_triangles() -> CrossSiteGraph {
        let mut links = bidirectional(&[("a1", "a2"), ("a2", "a3"), ("a1", "a3"), ("b1", "b2"), ("b2", "b3"), ("b1", "b3")]);
        links.push(("x", "a1", 1));
        links.push(("x", "b1", 1));
        CrossSiteGraph::from_links([], links)
    }

    #[test]
    fn page_links_aggregate_to_sites() {
        let map = SiteMap::new([("http://a.org/", "A"), ("http://b.org/", "B")]);
        let text = "http://a.org/1\thttp://b.org/x\nhttp://a.org/2\thttp://b.org/x\nhttp://a.org/1\thttp://a.org/2\n";
        let built = build_cross_site_graph(text.as_bytes(), &map).unwrap();
        assert_eq!(built.graph.link_count(), 1);
        assert_eq!(built.graph.multiplicity("A", "B"), 2);
        assert_eq!(built.intra_site_links, 1);
        assert_eq!(built.unmapped_urls, 0);
    }

    #[test]
    fn unmapped_urls_group_by_domain() {
        let map = SiteMap::new([("http://a.org/", "A")]);
        let text = "http://a.org/1,https://www.portal.educ.ar/x\nhttp://a.org/2,http://cdn.portal.educ.ar/y\n";
        let built = build_cross_site_graph(text.as_bytes(), &map).unwrap();
        assert_eq!(built.unmapped_urls, 2);
        assert_eq!(built.graph.multiplicity("A", "educ.ar"), 2);
    }

    #[test]
    fn registrable_domains() {
        assert_eq!(registrable_domain("http://www.example.com/a"), "example.com");
        assert_eq!(registrable_domain("https://recursos.educ.ar/x"), "educ.ar");
        assert_eq!(registrable_domain("http://portal.mec.gub.uy/"), "mec.gub.uy");
        assert_eq!(registrable_domain("http://10.1.2.3/"), "10.1.2.3");
    }

    #[test]
    fn empty_link_graph_is_fatal() {
        assert!(build_cross_site_graph("".as_bytes(), &SiteMap::default()).is_err());
    }

    #[test]
    fn degree_examples() {
        let g = CrossSiteGraph::from_links([], [("a", "p", 1), ("b", "p", 1), ("c", "p", 1), ("p", "d", 1)]);
        assert_eq!(authoritativeness(&g, "p").unwrap().distinct, 3);
        assert_eq!(authoritativeness(&g, "a").unwrap().distinct, 0);
        assert_eq!(hubness(&g, "p").unwrap().distinct, 1);
        assert_eq!(hubness(&g, "d").unwrap().distinct, 0);
        assert!(matches!(authoritativeness(&g, "zz"), Err(Error::UnknownSite(_))));

        let multi = CrossSiteGraph::from_links([], [("a", "p", 5)]);
        assert_eq!(authoritativeness(&multi, "p").unwrap(), Degree { distinct: 1, weighted: 5 });

        let back = CrossSiteGraph::from_links([], [("a", "p", 1), ("b", "p", 1), ("p", "a", 1), ("p", "b", 1), ("p", "c", 1), ("p", "d", 1)]);
        assert_eq!(hubness(&back, "p").unwrap().distinct, 4);
    }

    #[test]
    fn communities_of_disjoint_and_complete_graphs() {
        let disjoint = CrossSiteGraph::from_links(
            [],
            bidirectional(&[("a", "b"), ("b", "c"), ("a", "c"), ("d", "e"), ("e", "f"), ("d", "f")]),
        );
        for seed in 0..20 {
            assert_eq!(detect_communities(&disjoint, seed).community_count(), 2);
        }
        let names = ["a", "b", "c", "d", "e"];
        let mut pairs = Vec::new();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                pairs.push((*a, *b));
            }
        }
        let complete = CrossSiteGraph::from_links([], bidirectional(&pairs));
        assert_eq!(detect_communities(&complete, 7).community_count(), 1);
    }

    #[test]
    fn triangles_joined_by_one_edge() {
        let mut pairs = vec![("a", "b"), ("b", "c"), ("a", "c"), ("d", "e"), ("e", "f"), ("d", "f")];
        pairs.push(("c", "d"));
        let g = CrossSiteGraph::from_links([], bidirectional(&pairs));
        let c = detect_communities(&g, 0);
        assert!(c.converged);
        assert_eq!(c.community_count(), 2);
        assert_eq!(c.label("a"), c.label("c"));
        assert_ne!(c.label("c"), c.label("d"));
    }

    #[test]
    fn bridge_between_triangles() {
        let g = bridged_triangles();
        let c = detect_communities(&g, 0);
        let t = PositionThresholds::default();
        let b = bridging(&g, "x", &c, &t).unwrap();
        assert_eq!(b.degree, 2);
        assert_eq!(b.adjacent_communities, Some(2));
        assert_eq!(b.bridge_score, Some(1.0));
        assert!(b.bridge);
        let inner = bridging(&g, "a2", &c, &t).unwrap();
        assert_eq!(inner.adjacent_communities, Some(1));
        assert!(!inner.bridge);
    }

    #[test]
    fn isolated_site_has_no_bridge_score() {
        let g = CrossSiteGraph::from_links(["lonely"], [("a", "b", 1)]);
        let c = detect_communities(&g, 1);
        let b = bridging(&g, "lonely", &c, &PositionThresholds::default()).unwrap();
        assert!(b.isolated);
        assert_eq!((b.adjacent_communities, b.bridge_score, b.bridge), (None, None, false));
    }

    #[test]
    fn star_flags() {
        let leaves = ["l1", "l2", "l3", "l4", "l5"];
        let inward = CrossSiteGraph::from_links([], leaves.iter().map(|l| (*l, "hub", 1)));
        let c = detect_communities(&inward, 0);
        let t = PositionThresholds::default();
        let p = position_profile(&inward, "hub", &c, &t).unwrap();
        assert!(p.authority && !p.hub);
        assert!(!position_profile(&inward, "l1", &c, &t).unwrap().authority);

        let outward = CrossSiteGraph::from_links([], leaves.iter().map(|l| ("hub", *l, 1)));
        let c = detect_communities(&outward, 0);
        let p = position_profile(&outward, "hub", &c, &t).unwrap();
        assert!(p.hub && !p.authority);
        assert_eq!(p.method.community_algorithm, LABEL_PROPAGATION);
    }

    #[test]
    fn mid_graph_node_has_no_flags() {
        // in-degrees: a 0, b 1, c 2, d 3, e 4 -> 75th percentile 3
        let g = CrossSiteGraph::from_links(
            [],
            [
                ("a", "b", 1),
                ("a", "c", 1), ("b", "c", 1),
                ("a", "d", 1), ("b", "d", 1), ("c", "d", 1),
                ("a", "e", 1), ("b", "e", 1), ("c", "e", 1), ("d", "e", 1),
            ],
        );
        let c = detect_communities(&g, 0);
        let p = position_profile(&g, "c", &c, &PositionThresholds::default()).unwrap();
        assert_eq!((p.in_degree, p.out_degree), (2, 2));
        assert!(!p.authority && !p.hub);
        assert!(position_profile(&g, "d", &c, &PositionThresholds::default()).unwrap().authority);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[0.0, 1.0, 2.0, 3.0, 4.0], 0.75), Some(3.0));
        assert_eq!(quantile(&[1.0, 2.0], 0.5), Some(1.5));
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn planted_cliques_survive_every_seed() {
        for size in 3..=5 {
            let clique = |p: &str| -> Vec<(String, String)> {
                let ids: Vec<String> = (0..size).map(|i| format!("{p}{i}")).collect();
                ids.iter()
                    .flat_map(|a| ids.iter().filter(move |b| *b != a).map(move |b| (a.clone(), b.clone())))
                    .collect()
            };
            let mut owned = clique("a");
            owned.extend(clique("b"));
            owned.push(("x".into(), "a0".into()));
            owned.push(("x".into(), "b0".into()));
            let g = CrossSiteGraph::from_links([], owned.iter().map(|(a, b)| (a.as_str(), b.as_str(), 1)));
            for seed in 0..200 {
                let c = detect_communities(&g, seed);
                assert!(c.converged);
                let (la, lb) = (c.label("a0"), c.label("b0"));
                assert_ne!(la, lb, "size {size} seed {seed}");
                for i in 0..size {
                    assert_eq!(c.label(&format!("a{i}")), la);
                    assert_eq!(c.label(&format!("b{i}")), lb);
                }
                let b = bridging(&g, "x", &c, &PositionThresholds::default()).unwrap();
                assert!(b.bridge, "size {size} seed {seed}");
            }
        }
    }
}
