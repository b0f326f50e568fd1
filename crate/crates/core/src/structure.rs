//! Intra-portal page graph and the four organization metrics.
//!
//! Navigability is Botafogo's compactness over converted distances and
//! linearity is Botafogo's stratum. Both are computed from one breadth-first
//! search per source node, so the full distance matrix is only materialized
//! when [`converted_distances`] is asked for explicitly.

use std::collections::{HashMap, VecDeque};
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNREACHABLE: u32 = u32::MAX;

/// Directed page graph with a designated homepage.
///
/// Nodes are indexed densely in insertion order; adjacency lists are sorted
/// and free of self-loops and parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    out: Vec<Vec<usize>>,
    root: usize,
    edge_count: usize,
}

/// Tallies of what normalization removed while building a graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildTally {
    pub self_loops: usize,
    pub parallel_edges: usize,
}

#[derive(Debug, Default)]
pub struct SiteGraphBuilder {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    out: Vec<Vec<usize>>,
    tally: BuildTally,
}

impl SiteGraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        self.out.push(Vec::new());
        i
    }

    pub fn add_edge(&mut self, from: &str, to: &str) {
        let a = self.add_node(from);
        let b = self.add_node(to);
        if a == b {
            self.tally.self_loops += 1;
        } else {
            self.out[a].push(b);
        }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Finishes the graph. Without an explicit root the first node seen is used.
    pub fn build(mut self, root: Option<&str>) -> Result<(SiteGraph, BuildTally)> {
        if self.ids.is_empty() {
            return Err(Error::Domain("site graph has no nodes".into()));
        }
        let root = match root {
            Some(r) => *self.index.get(r).ok_or_else(|| Error::UnknownRoot(r.to_string()))?,
            None => 0,
        };
        let mut edge_count = 0;
        for adj in &mut self.out {
            let before = adj.len();
            adj.sort_unstable();
            adj.dedup();
            self.tally.parallel_edges += before - adj.len();
            edge_count += adj.len();
        }
        Ok((
            SiteGraph {
                ids: self.ids,
                index: self.index,
                out: self.out,
                root,
                edge_count,
            },
            self.tally,
        ))
    }
}

impl SiteGraph {
    /// Builds a graph from explicit nodes and edges, normalizing as it goes.
    pub fn from_parts<'a>(
        nodes: impl IntoIterator<Item = &'a str>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
        root: Option<&str>,
    ) -> Result<Self> {
        let mut b = SiteGraphBuilder::new();
        for n in nodes {
            b.add_node(n);
        }
        for (f, t) in edges {
            b.add_edge(f, t);
        }
        b.build(root).map(|(g, _)| g)
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn node(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.out[node]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(a, adj)| adj.iter().map(move |&b| (a, b)))
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.out[from].binary_search(&to).is_ok()
    }

    /// Hop distances from `source`; `u32::MAX` marks unreachable nodes.
    fn bfs_into(&self, source: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) {
        dist.fill(UNREACHABLE);
        queue.clear();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let next = dist[v] + 1;
            for &w in &self.out[v] {
                if dist[w] == UNREACHABLE {
                    dist[w] = next;
                    queue.push_back(w);
                }
            }
        }
    }

    /// Shortest hop distances from `source`, `None` where unreachable.
    pub fn distances_from(&self, source: usize) -> Vec<Option<u32>> {
        let mut dist = vec![UNREACHABLE; self.node_count()];
        self.bfs_into(source, &mut dist, &mut VecDeque::new());
        dist.into_iter().map(|d| (d != UNREACHABLE).then_some(d)).collect()
    }
}

/// Reads an edge list.
///
/// Each non-comment line holds delimited fields (tab, comma or whitespace).
/// Two or more fields link the first to every other one, which also covers
/// crawler output of the form `url<TAB>outlink<TAB>outlink...`; a single
/// field declares a node. `# node: <id>` lines declare isolated nodes and
/// other `#` lines are ignored.
pub fn build_site_graph<R: BufRead>(input: R, root: Option<&str>) -> Result<(SiteGraph, BuildTally)> {
    let mut b = SiteGraphBuilder::new();
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim_start();
            if let Some(node) = comment
                .strip_prefix("node:")
                .or_else(|| comment.strip_prefix("NODE:"))
            {
                let node = node.trim();
                if !node.is_empty() {
                    b.add_node(node);
                }
            }
            continue;
        }
        let fields: Vec<&str> = split_fields(line);
        match fields.as_slice() {
            [] => {}
            [single] => {
                b.add_node(single);
            }
            [from, rest @ ..] => {
                for to in rest {
                    b.add_edge(from, to);
                }
            }
        }
    }
    b.build(root)
}

pub(crate) fn split_fields(line: &str) -> Vec<&str> {
    let raw: Vec<&str> = if line.contains('\t') {
        line.split('\t').collect()
    } else if line.contains(',') {
        line.split(',').collect()
    } else {
        line.split_whitespace().collect()
    };
    raw.into_iter().map(str::trim).filter(|f| !f.is_empty()).collect()
}

/// Why a metric is reported as absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    /// The graph has a single node.
    SingleNode,
    /// No page other than the homepage is reachable from it.
    NothingReachable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Depth {
    pub mean: Option<f64>,
    pub reachable: usize,
    pub unreachable: usize,
    pub degeneracy: Option<Degeneracy>,
}

/// Mean click distance from the homepage over the pages it can reach.
pub fn depth(g: &SiteGraph) -> Depth {
    let n = g.node_count();
    if n < 2 {
        return Depth {
            mean: None,
            reachable: 0,
            unreachable: 0,
            degeneracy: Some(Degeneracy::SingleNode),
        };
    }
    let dist = g.distances_from(g.root());
    let (mut sum, mut reachable) = (0u64, 0usize);
    for (v, d) in dist.iter().enumerate() {
        if v == g.root() {
            continue;
        }
        if let Some(d) = d {
            sum += u64::from(*d);
            reachable += 1;
        }
    }
    let unreachable = n - 1 - reachable;
    if reachable == 0 {
        return Depth {
            mean: None,
            reachable,
            unreachable,
            degeneracy: Some(Degeneracy::NothingReachable),
        };
    }
    Depth {
        mean: Some(sum as f64 / reachable as f64),
        reachable,
        unreachable,
        degeneracy: None,
    }
}

/// `|E| / (n (n - 1))`, absent for single-node graphs.
pub fn density(g: &SiteGraph) -> Option<f64> {
    let n = g.node_count();
    (n >= 2).then(|| g.edge_count() as f64 / (n * (n - 1)) as f64)
}

/// All-pairs converted distances: shortest hop counts capped at `k`, with
/// unreachable pairs set to `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvertedDistanceMatrix {
    n: usize,
    k: u32,
    d: Vec<u32>,
}

impl ConvertedDistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn get(&self, from: usize, to: usize) -> u32 {
        self.d[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[u32] {
        &self.d[from * self.n..(from + 1) * self.n]
    }

    pub fn off_diagonal_sum(&self) -> u64 {
        self.d.iter().map(|&x| u64::from(x)).sum()
    }
}

/// Default conversion constant: the node count.
pub fn default_k(g: &SiteGraph) -> u32 {
    g.node_count() as u32
}

pub fn converted_distances(g: &SiteGraph, k: u32) -> ConvertedDistanceMatrix {
    let n = g.node_count();
    let rows: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![UNREACHABLE; n], VecDeque::new()),
            |(dist, queue), src| {
                g.bfs_into(src, dist, queue);
                dist.iter()
                    .enumerate()
                    .map(|(j, &d)| if j == src { 0 } else { d.min(k) })
                    .collect()
            },
        )
        .collect();
    ConvertedDistanceMatrix { n, k, d: rows.concat() }
}

/// Per-node distance sums gathered in a single all-sources sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceSums {
    pub k: u32,
    /// Sum of converted distances over ordered pairs `i != j`.
    pub converted_total: u64,
    /// Sum of finite distances from each node to the others.
    pub outgoing: Vec<u64>,
    /// Sum of finite distances from the others to each node.
    pub incoming: Vec<u64>,
}

pub fn distance_sums(g: &SiteGraph, k: u32) -> DistanceSums {
    let n = g.node_count();
    let empty = || DistanceSums {
        k,
        converted_total: 0,
        outgoing: vec![0; n],
        incoming: vec![0; n],
    };
    (0..n)
        .into_par_iter()
        .fold(
            || (empty(), vec![UNREACHABLE; n], VecDeque::new()),
            |(mut acc, mut dist, mut queue), src| {
                g.bfs_into(src, &mut dist, &mut queue);
                for (j, &d) in dist.iter().enumerate() {
                    if j == src {
                        continue;
                    }
                    acc.converted_total += u64::from(d.min(k));
                    if d != UNREACHABLE {
                        acc.outgoing[src] += u64::from(d);
                        acc.incoming[j] += u64::from(d);
                    }
                }
                (acc, dist, queue)
            },
        )
        .map(|(acc, _, _)| acc)
        .reduce(empty, |mut a, b| {
            a.converted_total += b.converted_total;
            for (x, y) in a.outgoing.iter_mut().zip(b.outgoing) {
                *x += y;
            }
            for (x, y) in a.incoming.iter_mut().zip(b.incoming) {
                *x += y;
            }
            a
        })
}

fn compactness_from(n: usize, sums: &DistanceSums) -> Result<f64> {
    let pairs = (n * n - n) as u64;
    let max = pairs * u64::from(sums.k);
    let min = pairs;
    if max <= min {
        return Err(Error::Config(format!(
            "conversion constant k = {} leaves compactness undefined",
            sums.k
        )));
    }
    Ok((max - sums.converted_total.min(max)) as f64 / (max - min) as f64)
}

fn stratum_from(n: usize, sums: &DistanceSums) -> f64 {
    let n = n as u64;
    let lap = if n % 2 == 0 { n * n * n / 4 } else { (n * n * n - n) / 4 };
    let ap: u64 = sums
        .outgoing
        .iter()
        .zip(&sums.incoming)
        .map(|(&o, &i)| o.abs_diff(i))
        .sum();
    ap as f64 / lap as f64
}

/// Compactness with the default conversion constant `k = n`.
pub fn navigability(g: &SiteGraph) -> Option<f64> {
    navigability_with_k(g, default_k(g)).ok().flatten()
}

pub fn navigability_with_k(g: &SiteGraph, k: u32) -> Result<Option<f64>> {
    let n = g.node_count();
    if n < 2 {
        return Ok(None);
    }
    compactness_from(n, &distance_sums(g, k)).map(Some)
}

/// Stratum: absolute prestige over its maximum, the directed chain's value.
pub fn linearity(g: &SiteGraph) -> Option<f64> {
    let n = g.node_count();
    (n >= 2).then(|| stratum_from(n, &distance_sums(g, default_k(g))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrganizationProfile {
    pub pages: usize,
    pub links: usize,
    pub depth: Option<f64>,
    pub unreachable_pages: usize,
    pub density: Option<f64>,
    pub navigability: Option<f64>,
    pub linearity: Option<f64>,
    pub distance_k: u32,
    pub degeneracy: Vec<Degeneracy>,
}

/// All four organization metrics from a single distance sweep.
pub fn organization_profile(g: &SiteGraph, k: Option<u32>) -> Result<OrganizationProfile> {
    let n = g.node_count();
    let k = k.unwrap_or_else(|| default_k(g));
    let d = depth(g);
    let mut degeneracy = Vec::new();
    if let Some(flag) = d.degeneracy {
        degeneracy.push(flag);
    }
    let (navigability, linearity) = if n >= 2 {
        let sums = distance_sums(g, k);
        (Some(compactness_from(n, &sums)?), Some(stratum_from(n, &sums)))
    } else {
        (None, None)
    };
    Ok(OrganizationProfile {
        pages: n,
        links: g.edge_count(),
        depth: d.mean,
        unreachable_pages: d.unreachable,
        density: density(g),
        navigability,
        linearity,
        distance_k: k,
        degeneracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(nodes: &[&str], edges: &[(&str, &str)]) -> SiteGraph {
        SiteGraph::from_parts(nodes.iter().copied(), edges.iter().copied(), Some(nodes[0])).unwrap()
    }

    fn chain(n: usize) -> SiteGraph {
        let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let edges: Vec<(&str, &str)> =
            ids.windows(2).map(|w| (w[0].as_str(), w[1].as_str())).collect();
        SiteGraph::from_parts(ids.iter().map(String::as_str), edges, None).unwrap()
    }

    fn complete(n: usize) -> SiteGraph {
        let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let mut edges = Vec::new();
        for a in &ids {
            for b in &ids {
                edges.push((a.as_str(), b.as_str()));
            }
        }
        SiteGraph::from_parts(ids.iter().map(String::as_str), edges, None).unwrap()
    }

    #[test]
    fn builds_from_edge_list() {
        let (g, tally) = build_site_graph("A,B\nB,C\n".as_bytes(), Some("A")).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 2));
        assert_eq!(tally, BuildTally::default());
    }

    #[test]
    fn collapses_parallel_and_drops_self_loops() {
        let (g, tally) = build_site_graph("A\tB\nA\tB\nB\tB\n".as_bytes(), None).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(tally.parallel_edges, 1);
        assert_eq!(tally.self_loops, 1);
    }

    #[test]
    fn crawler_rows_and_isolated_nodes() {
        let text = "# crawl\n# node: orphan\n/ /a /b\n/a /b\n/b\n";
        let (g, _) = build_site_graph(text.as_bytes(), Some("/")).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 3);
        assert!(g.node("orphan").is_some());
    }

    #[test]
    fn unknown_root_and_empty_input() {
        assert!(matches!(
            build_site_graph("A,B\n".as_bytes(), Some("Z")),
            Err(Error::UnknownRoot(_))
        ));
        let err = build_site_graph("".as_bytes(), None).unwrap_err();
        assert_eq!(err.kind(), crate::ErrorKind::Domain);
    }

    #[test]
    fn depth_examples() {
        let star = graph(&["A", "B", "C", "D"], &[("A", "B"), ("A", "C"), ("A", "D")]);
        let d = depth(&star);
        assert_eq!((d.mean, d.unreachable), (Some(1.0), 0));

        assert_eq!(depth(&chain(4)).mean, Some(2.0));

        let partial = graph(&["A", "B", "C"], &[("A", "B")]);
        let d = depth(&partial);
        assert_eq!((d.mean, d.unreachable), (Some(1.0), 1));

        let single = graph(&["A"], &[]);
        assert_eq!(depth(&single).degeneracy, Some(Degeneracy::SingleNode));
        assert_eq!(depth(&single).mean, None);
    }

    #[test]
    fn density_examples() {
        assert_eq!(density(&complete(3)), Some(1.0));
        assert_eq!(density(&chain(4)), Some(0.25));
        assert_eq!(density(&graph(&["A", "B"], &[])), Some(0.0));
        assert_eq!(density(&graph(&["A"], &[])), None);
    }

    #[test]
    fn converted_distance_examples() {
        let m = converted_distances(&complete(3), 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), u32::from(i != j));
            }
        }
        let m = converted_distances(&chain(3), 3);
        assert_eq!(m.row(0), [0, 1, 2]);
        assert_eq!(m.row(1), [3, 0, 1]);
        assert_eq!(m.row(2), [3, 3, 0]);

        let m = converted_distances(&graph(&["A"], &[]), 1);
        assert_eq!((m.n(), m.get(0, 0)), (1, 0));
    }

    #[test]
    fn navigability_examples() {
        assert_eq!(navigability(&complete(4)), Some(1.0));
        assert_eq!(navigability(&graph(&["A", "B", "C"], &[])), Some(0.0));
        // max 18, sum 13, min 6
        assert_eq!(navigability(&chain(3)), Some(5.0 / 12.0));
        assert_eq!(navigability(&graph(&["A"], &[])), None);
        assert!(navigability_with_k(&chain(3), 1).is_err());
    }

    #[test]
    fn linearity_examples() {
        assert_eq!(linearity(&chain(3)), Some(1.0));
        let cycle = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")]);
        assert_eq!(linearity(&cycle), Some(0.0));
        assert_eq!(linearity(&complete(5)), Some(0.0));
    }

    #[test]
    fn chain_with_back_edge_is_balanced() {
        // status and contrastatus are both 3 for every node
        let g = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")]);
        let sums = distance_sums(&g, 3);
        assert_eq!(sums.outgoing, vec![3, 3, 3]);
        assert_eq!(sums.incoming, vec![3, 3, 3]);
    }

    #[test]
    fn profile_of_complete_and_single() {
        let p = organization_profile(&complete(4), None).unwrap();
        assert_eq!(
            (p.depth, p.density, p.navigability, p.linearity),
            (Some(1.0), Some(1.0), Some(1.0), Some(0.0))
        );
        let p = organization_profile(&graph(&["A"], &[]), None).unwrap();
        assert_eq!((p.depth, p.density, p.navigability, p.linearity), (None, None, None, None));
        assert_eq!(p.degeneracy, vec![Degeneracy::SingleNode]);
    }

    #[test]
    fn profile_of_chain() {
        let p = organization_profile(&chain(4), None).unwrap();
        assert_eq!(p.depth, Some(2.0));
        assert_eq!(p.density, Some(0.25));
        assert_eq!(p.linearity, Some(1.0));
        // sum of converted distances: 6 reachable pairs (1+2+3+1+2+1 = 10) + 6 * 4
        assert_eq!(p.navigability, Some((48.0 - 34.0) / 36.0));
    }
}
