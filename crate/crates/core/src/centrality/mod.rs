//! The eight network-based integration indicators.
//!
//! Degrees, strengths, PageRank, and betweenness operate on the directed
//! graph; clustering, closeness, random-walk betweenness, and the k-core
//! shell index operate on the undirected projection.

mod current_flow;
mod kcore;
mod pagerank;
mod paths;

pub use current_flow::random_walk_betweenness;
pub use kcore::kcore_decomposition;
pub use pagerank::{pagerank, PageRankMode, PageRankOptions};
pub use paths::{betweenness, closeness};

use crate::country::CountryCode;
use crate::error::Result;
use crate::graph::YearlyTradeGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

/// All indicators for one (country, year).
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityRecord {
    pub country: CountryCode,
    pub year: i32,
    pub k_in: usize,
    pub k_out: usize,
    pub s_in: f64,
    pub s_out: f64,
    pub pagerank: f64,
    pub betweenness: f64,
    pub betweenness_norm: f64,
    pub rwb: f64,
    pub closeness: f64,
    pub clustering: f64,
    pub kcore: usize,
}

/// In- or out-degree on the directed graph (number of import/export partners).
pub fn degree(graph: &YearlyTradeGraph, direction: Direction) -> Vec<usize> {
    let n = graph.node_count();
    (0..n)
        .map(|i| match direction {
            Direction::In => graph.in_neighbors(i).count(),
            Direction::Out => graph.out_neighbors(i).count(),
        })
        .collect()
}

/// In- or out-strength: total import/export value over incident edges.
pub fn strength(graph: &YearlyTradeGraph, direction: Direction) -> Vec<f64> {
    let n = graph.node_count();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match direction {
                    Direction::In => graph.weight(j, i),
                    Direction::Out => graph.weight(i, j),
                })
                .sum()
        })
        .collect()
}

/// Local clustering on an undirected adjacency list:
/// cc_i = 2 e_i / (k_i (k_i - 1)), zero when k_i < 2.
pub fn local_clustering(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut is_neighbor = vec![false; n];
    let mut out = vec![0.0; n];
    for i in 0..n {
        let k = adj[i].len();
        if k < 2 {
            continue;
        }
        for &j in &adj[i] {
            is_neighbor[j] = true;
        }
        let mut links = 0usize;
        for &j in &adj[i] {
            for &l in &adj[j] {
                if l > j && is_neighbor[l] {
                    links += 1;
                }
            }
        }
        for &j in &adj[i] {
            is_neighbor[j] = false;
        }
        out[i] = 2.0 * links as f64 / (k * (k - 1)) as f64;
    }
    out
}

/// Clustering coefficient of every node on the undirected projection.
pub fn clustering_coefficient(graph: &YearlyTradeGraph) -> Vec<f64> {
    local_clustering(&graph.undirected_neighbors())
}

/// Options shared by [`compute_all`] calls.
#[derive(Debug, Clone, Copy)]
pub struct CentralityOptions {
    pub pagerank: PageRankOptions,
}

impl Default for CentralityOptions {
    fn default() -> Self {
        CentralityOptions { pagerank: PageRankOptions::default() }
    }
}

/// Evaluate every indicator for every registered country, ordered by code.
pub fn compute_all(
    graph: &YearlyTradeGraph,
    options: &CentralityOptions,
) -> Result<Vec<CentralityRecord>> {
    let n = graph.node_count();
    let k_in = degree(graph, Direction::In);
    let k_out = degree(graph, Direction::Out);
    let s_in = strength(graph, Direction::In);
    let s_out = strength(graph, Direction::Out);
    let pr = pagerank(graph, options.pagerank)?;
    let btw = betweenness(graph);
    let norm = if n > 2 { ((n - 1) * (n - 2)) as f64 } else { 1.0 };
    let rwb = random_walk_betweenness(graph)?;
    let clo = closeness(graph);
    let clu = clustering_coefficient(graph);
    let shells = kcore_decomposition(graph);

    Ok((0..n)
        .map(|i| CentralityRecord {
            country: graph.nodes()[i],
            year: graph.year(),
            k_in: k_in[i],
            k_out: k_out[i],
            s_in: s_in[i],
            s_out: s_out[i],
            pagerank: pr[i],
            betweenness: btw[i],
            betweenness_norm: btw[i] / norm,
            rwb: rwb[i],
            closeness: clo[i],
            clustering: clu[i],
            kcore: shells[i],
        })
        .collect())
}
