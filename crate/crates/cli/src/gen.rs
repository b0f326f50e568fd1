//! Synthetic fixture generation.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use clap::{Args, Subcommand};

use portal_metrics::fixtures::{
    gen_catalog, gen_cross_site, gen_graph, gen_log, CatalogSpec, GraphKind, GraphSpec, LogSpec,
};
use portal_metrics::Error;

use crate::config::{check_out_dir, ConfigFlags};

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Site graph on stdout
    Graph(GraphArgs),
    /// Combined Log Format access log on stdout
    Log {
        /// Visits per day, comma-separated
        #[arg(long, default_value = "10,20,30")]
        visits: String,
        #[arg(long, default_value_t = 10)]
        visitors: usize,
        #[arg(long, default_value_t = 3)]
        views_per_visit: usize,
        #[arg(long, default_value_t = 0.0)]
        bot_fraction: f64,
        /// Distinct page paths to spread views over
        #[arg(long, default_value_t = 20)]
        pages: usize,
    },
    /// Catalog, taxonomy and join map written to the output directory
    Catalog {
        #[arg(long, default_value_t = 4)]
        topics: usize,
        #[arg(long, default_value_t = 25)]
        per_topic: u64,
    },
    /// Page links and site map written to the output directory
    Links {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 2)]
        pages_per_link: usize,
    },
    /// A three-portal network with one config file per portal
    Network,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// chain, cycle, complete, star, two-community or random-digraph
    #[arg(long, default_value = "random-digraph")]
    kind: String,
    #[arg(long, default_value_t = 20)]
    size: usize,
    #[arg(long, default_value_t = 3)]
    graph_out_degree: usize,
}

fn seed(flags: &ConfigFlags) -> Result<u64> {
    flags
        .seed
        .as_deref()
        .map(|s| s.parse().map_err(|_| Error::Config(format!("`seed`: cannot parse `{s}`"))))
        .transpose()
        .map(|s| s.unwrap_or(0))
        .map_err(Into::into)
}

fn graph_spec(a: &GraphArgs, seed: u64) -> Result<GraphSpec> {
    let kind: GraphKind = a.kind.parse()?;
    Ok(GraphSpec { seed, out_degree: a.graph_out_degree, ..GraphSpec::new(kind, a.size) })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text)
        .map_err(Error::from)
        .with_context(|| format!("writing `{}`", path.display()))
}

pub fn run(flags: &ConfigFlags, cmd: GenCommand) -> Result<()> {
    let seed = seed(flags)?;
    let out_dir = Path::new(flags.out_dir.as_deref().unwrap_or("."));
    match cmd {
        GenCommand::Graph(a) => print!("{}", gen_graph(&graph_spec(&a, seed)?)?),
        GenCommand::Log { visits, visitors, views_per_visit, bot_fraction, pages } => {
            let visits = visits
                .split(',')
                .map(|v| v.trim().parse::<u64>().map_err(|_| Error::Config(format!("`visits`: cannot parse `{v}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            let spec = LogSpec {
                visits,
                visitors,
                views_per_visit,
                bot_fraction,
                paths: (0..pages.max(1)).map(|i| format!("/page{i}.html")).collect(),
                seed,
                ..LogSpec::default()
            };
            print!("{}", gen_log(&spec)?.text);
        }
        GenCommand::Catalog { topics, per_topic } => {
            check_out_dir(out_dir)?;
            let portal = flags.portal.as_deref().unwrap_or("portal");
            let cat = gen_catalog(&CatalogSpec::uniform(portal, topics, per_topic))?;
            write(out_dir, "catalog.csv", &cat.catalog)?;
            write(out_dir, "taxonomy.txt", &cat.taxonomy)?;
            write(out_dir, &format!("{portal}.join.tsv"), &cat.join_map)?;
        }
        GenCommand::Links { graph, pages_per_link } => {
            check_out_dir(out_dir)?;
            let links = gen_cross_site(&graph_spec(&graph, seed)?, pages_per_link)?;
            write(out_dir, "page_links.tsv", &links.page_links)?;
            write(out_dir, "site_map.tsv", &links.site_map)?;
        }
        GenCommand::Network => network(out_dir, seed)?,
    }
    Ok(())
}

/// Three portals: two large and growing with contrasting site graphs, one
/// small with flat demand. Each gets `<id>.conf` pointing at the shared files.
fn network(dir: &Path, seed: u64) -> Result<()> {
    check_out_dir(dir)?;
    let plan = [
        ("alpha", 4, 25, vec![10u64, 20, 30], GraphSpec { seed: seed + 1, out_degree: 6, ..GraphSpec::new(GraphKind::RandomDigraph, 40) }, "n0"),
        ("beta", 4, 25, vec![10, 20, 30], GraphSpec::new(GraphKind::Chain, 40), "n1"),
        ("gamma", 2, 10, vec![20, 20, 20], GraphSpec::new(GraphKind::Star, 10), "n2"),
    ];
    let mut catalog = String::new();
    for (id, topics, per_topic, visits, graph, site) in plan {
        let cat = gen_catalog(&CatalogSpec::uniform(id, topics, per_topic))?;
        if catalog.is_empty() {
            catalog = cat.catalog.clone();
            write(dir, "taxonomy.txt", &cat.taxonomy)?;
        } else {
            catalog.extend(cat.catalog.lines().skip(1).map(|l| format!("{l}\n")));
        }
        let log = gen_log(&LogSpec {
            visits,
            bot_fraction: 0.1,
            paths: cat.paths.clone(),
            seed: seed + id.len() as u64,
            ..LogSpec::default()
        })?;
        write(dir, &format!("{id}.log"), &log.text)?;
        write(dir, &format!("{id}.graph.tsv"), &gen_graph(&graph)?)?;
        write(dir, &format!("{id}.join.tsv"), &cat.join_map)?;
        let conf = format!(
            "# generated fixture\nportal = {id}\nsite_id = {site}\ncatalog = catalog.csv\ntaxonomy = taxonomy.txt\n\
             site_graph = {id}.graph.tsv\nroot = n0\nlogs = {id}.log\njoin_map = {id}.join.tsv\n\
             page_links = page_links.tsv\nsite_map = site_map.tsv\nout_dir = out\n"
        );
        write(dir, &format!("{id}.conf"), &conf)?;
    }
    write(dir, "catalog.csv", &catalog)?;
    let links = gen_cross_site(&GraphSpec { seed: seed + 4, out_degree: 3, ..GraphSpec::new(GraphKind::RandomDigraph, 12) }, 2)?;
    write(dir, "page_links.tsv", &links.page_links)?;
    write(dir, "site_map.tsv", &links.site_map)?;
    Ok(())
}
