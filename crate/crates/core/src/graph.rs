//! Yearly weighted directed trade networks.
//!
//! A [`YearlyTradeGraph`] holds the dense N x N weight matrix W(t) for one
//! year over a fixed node registry, with the binary adjacency A(t) derived
//! as a_ij = 1 iff w_ij > 0. Construction optionally applies the
//! first-quartile edge filter: a bilateral flow becomes an edge only when
//! its (duplicate-summed) value strictly exceeds the 25th percentile of the
//! year's positive flows.

use std::collections::BTreeMap;

use crate::country::{CountryCode, Universe};
use crate::error::{Error, Result};
use crate::flow::FlowRecord;

/// How the quartile filter threshold is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeFilter {
    /// Keep every positive flow as an edge.
    Off,
    /// Threshold at the first quartile of this year's positive flows.
    PerYear,
    /// Threshold at the first quartile of a pooled (all-years) distribution,
    /// supplied by the caller.
    Pooled { threshold: f64 },
}

/// Immutable weighted directed graph for one year.
#[derive(Debug, Clone)]
pub struct YearlyTradeGraph {
    year: i32,
    nodes: Vec<CountryCode>,
    /// Row-major N x N weight matrix, zero diagonal.
    weights: Vec<f64>,
}

impl YearlyTradeGraph {
    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Registered codes in sorted order; position is the node index.
    pub fn nodes(&self) -> &[CountryCode] {
        &self.nodes
    }

    pub fn index_of(&self, code: CountryCode) -> Option<usize> {
        self.nodes.binary_search(&code).ok()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.nodes.len() + j]
    }

    /// a_ij: 1 iff w_ij > 0.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weight(i, j) > 0.0
    }

    pub fn edge_count(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    /// Directed successors of `i` (j with w_ij > 0).
    pub fn out_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.nodes.len();
        (0..n).filter(move |&j| self.has_edge(i, j))
    }

    /// Directed predecessors of `i` (j with w_ji > 0).
    pub fn in_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.nodes.len();
        (0..n).filter(move |&j| self.has_edge(j, i))
    }

    /// Neighbor lists of the undirected projection (edge iff a_ij or a_ji).
    pub fn undirected_neighbors(&self) -> Vec<Vec<usize>> {
        let n = self.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if self.has_edge(i, j) || self.has_edge(j, i) {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        adj
    }

    /// Build a graph directly from node codes and explicit weighted edges.
    /// Intended for tests and ad-hoc analysis; codes are sorted internally.
    pub fn from_edges(
        year: i32,
        codes: &[CountryCode],
        edges: &[(CountryCode, CountryCode, f64)],
    ) -> Result<Self> {
        let universe = Universe::new(codes.to_vec())?;
        let n = universe.len();
        let mut weights = vec![0.0; n * n];
        for (o, d, w) in edges {
            let i = universe.index_of(*o).ok_or_else(|| Error::UnknownCountry {
                code: o.to_string(),
                location: "edge list".into(),
            })?;
            let j = universe.index_of(*d).ok_or_else(|| Error::UnknownCountry {
                code: d.to_string(),
                location: "edge list".into(),
            })?;
            if i == j {
                return Err(Error::Validation(format!("self-loop on {o}")));
            }
            weights[i * n + j] += w;
        }
        Ok(YearlyTradeGraph { year, nodes: universe.codes().to_vec(), weights })
    }
}

/// Whole-network statistics for one year.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStats {
    pub year: i32,
    pub edge_count: usize,
    pub average_degree: f64,
    pub density: f64,
    pub average_clustering: f64,
}

/// 25th percentile under linear interpolation between closest ranks.
pub fn quartile_threshold(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Computation("no flows for year".into()));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Computation("quartile input must be positive".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = 0.25 * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    let q = if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    };
    Ok(q)
}

/// Sum duplicate (origin, destination) pairs, then keep pairs passing the
/// filter as edges. Every universe country is registered as a node whether
/// or not it trades.
pub fn build_yearly_graph(
    flows: &[FlowRecord],
    year: i32,
    universe: &Universe,
    filter: EdgeFilter,
) -> Result<YearlyTradeGraph> {
    let n = universe.len();
    // Aggregate on sorted indices so input order cannot matter.
    let mut pair_sums: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (idx, flow) in flows.iter().enumerate() {
        if flow.year != year {
            return Err(Error::Validation(format!(
                "flow record {idx} has year {} but graph year is {year}",
                flow.year
            )));
        }
        let location = format!("flow record {idx}");
        let i = universe.index_of(flow.origin).ok_or_else(|| Error::UnknownCountry {
            code: flow.origin.to_string(),
            location: location.clone(),
        })?;
        let j = universe.index_of(flow.destination).ok_or_else(|| Error::UnknownCountry {
            code: flow.destination.to_string(),
            location,
        })?;
        *pair_sums.entry((i, j)).or_insert(0.0) += flow.value;
    }

    let threshold = match filter {
        EdgeFilter::Off => None,
        EdgeFilter::Pooled { threshold } => Some(threshold),
        EdgeFilter::PerYear => {
            let positive: Vec<f64> =
                pair_sums.values().copied().filter(|v| *v > 0.0).collect();
            if positive.is_empty() {
                None // no positive flows: nothing to filter
            } else {
                Some(quartile_threshold(&positive)?)
            }
        }
    };

    let mut weights = vec![0.0; n * n];
    for ((i, j), value) in pair_sums {
        let keep = match threshold {
            None => value > 0.0,
            Some(t) => value > t, // strict: ties at the threshold are excluded
        };
        if keep {
            weights[i * n + j] = value;
        }
    }
    Ok(YearlyTradeGraph { year, nodes: universe.codes().to_vec(), weights })
}

/// Edge count, density, and undirected average degree / clustering.
pub fn network_stats(graph: &YearlyTradeGraph) -> Result<NetworkStats> {
    let n = graph.node_count();
    if n < 2 {
        return Err(Error::Computation("degenerate graph".into()));
    }
    let edge_count = graph.edge_count();
    let density = edge_count as f64 / (n * (n - 1)) as f64;

    let adj = graph.undirected_neighbors();
    let average_degree = adj.iter().map(|nb| nb.len() as f64).sum::<f64>() / n as f64;
    let average_clustering =
        crate::centrality::local_clustering(&adj).iter().sum::<f64>() / n as f64;

    Ok(NetworkStats { year: graph.year(), edge_count, average_degree, density, average_clustering })
}

/// Per-year stats for a series of graphs sorted by year.
pub fn evolution_series(graphs: &[YearlyTradeGraph]) -> Result<Vec<NetworkStats>> {
    for pair in graphs.windows(2) {
        if pair[1].year() == pair[0].year() {
            return Err(Error::Validation(format!("duplicate year {}", pair[0].year())));
        }
        if pair[1].year() < pair[0].year() {
            return Err(Error::Validation("graphs must be sorted by year".into()));
        }
    }
    graphs.iter().map(network_stats).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> CountryCode {
        CountryCode::new(s).unwrap()
    }

    fn flow(o: &str, d: &str, year: i32, v: f64) -> FlowRecord {
        FlowRecord::new(code(o), code(d), year, v).unwrap()
    }

    fn universe(codes: &[&str]) -> Universe {
        Universe::new(codes.iter().map(|c| code(c)).collect()).unwrap()
    }

    #[test]
    fn quartile_matches_linear_interpolation() {
        assert_eq!(quartile_threshold(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.75);
        assert_eq!(quartile_threshold(&[5.0, 5.0, 5.0, 5.0]).unwrap(), 5.0);
        assert_eq!(quartile_threshold(&[10.0]).unwrap(), 10.0);
        // order does not matter
        assert_eq!(quartile_threshold(&[4.0, 1.0, 3.0, 2.0]).unwrap(), 1.75);
        assert!(quartile_threshold(&[]).is_err());
    }

    #[test]
    fn filter_keeps_only_flows_strictly_above_quartile() {
        let u = universe(&["AAA", "BBB", "CCC"]);
        let flows = vec![
            flow("AAA", "BBB", 2005, 10.0),
            flow("BBB", "CCC", 2005, 1.0),
            flow("CCC", "AAA", 2005, 1.0),
            flow("AAA", "CCC", 2005, 1.0),
        ];
        // Q1 of {10,1,1,1} = 1.0; only the 10 strictly exceeds it.
        let g = build_yearly_graph(&flows, 2005, &u, EdgeFilter::PerYear).unwrap();
        assert_eq!(g.edge_count(), 1);
        let a = g.index_of(code("AAA")).unwrap();
        let b = g.index_of(code("BBB")).unwrap();
        assert!(g.has_edge(a, b));
        assert_eq!(g.weight(a, b), 10.0);
    }

    #[test]
    fn empty_flow_set_gives_isolated_registry() {
        let u = universe(&["AAA", "BBB", "CCC"]);
        let g = build_yearly_graph(&[], 2005, &u, EdgeFilter::Off).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn duplicate_pairs_are_summed_before_filtering() {
        let u = universe(&["AAA", "BBB"]);
        let flows = vec![flow("AAA", "BBB", 2005, 5.0), flow("AAA", "BBB", 2005, 7.0)];
        let g = build_yearly_graph(&flows, 2005, &u, EdgeFilter::Off).unwrap();
        let a = g.index_of(code("AAA")).unwrap();
        let b = g.index_of(code("BBB")).unwrap();
        assert_eq!(g.weight(a, b), 12.0);
    }

    #[test]
    fn unknown_country_is_rejected_with_location() {
        let u = universe(&["AAA", "BBB"]);
        let flows = vec![flow("AAA", "ZZZ", 2005, 5.0)];
        let err = build_yearly_graph(&flows, 2005, &u, EdgeFilter::Off).unwrap_err();
        match err {
            Error::UnknownCountry { code, location } => {
                assert_eq!(code, "ZZZ");
                assert!(location.contains('0'));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stats_on_complete_and_cycle_graphs() {
        // complete directed graph on 4 nodes
        let codes: Vec<CountryCode> = ["AAA", "BBB", "CCC", "DDD"].map(|c| code(c)).into();
        let mut edges = Vec::new();
        for o in &codes {
            for d in &codes {
                if o != d {
                    edges.push((*o, *d, 1.0));
                }
            }
        }
        let g = YearlyTradeGraph::from_edges(2000, &codes, &edges).unwrap();
        let s = network_stats(&g).unwrap();
        assert_eq!(s.density, 1.0);
        assert_eq!(s.average_clustering, 1.0);

        // directed 3-cycle
        let codes3: Vec<CountryCode> = ["AAA", "BBB", "CCC"].map(|c| code(c)).into();
        let g3 = YearlyTradeGraph::from_edges(
            2000,
            &codes3,
            &[
                (codes3[0], codes3[1], 1.0),
                (codes3[1], codes3[2], 1.0),
                (codes3[2], codes3[0], 1.0),
            ],
        )
        .unwrap();
        let s3 = network_stats(&g3).unwrap();
        assert_eq!(s3.edge_count, 3);
        assert_eq!(s3.density, 0.5);
        assert_eq!(s3.average_degree, 2.0);
        assert_eq!(s3.average_clustering, 1.0); // projection is a triangle

        // empty graph on 5 nodes
        let codes5: Vec<CountryCode> =
            ["AAA", "BBB", "CCC", "DDD", "EEE"].map(|c| code(c)).into();
        let g5 = YearlyTradeGraph::from_edges(2000, &codes5, &[]).unwrap();
        let s5 = network_stats(&g5).unwrap();
        assert_eq!(s5.density, 0.0);
        assert_eq!(s5.average_clustering, 0.0);
    }

    #[test]
    fn degenerate_graph_errors() {
        let codes: Vec<CountryCode> = vec![code("AAA")];
        let g = YearlyTradeGraph::from_edges(2000, &codes, &[]).unwrap();
        assert!(network_stats(&g).is_err());
    }

    #[test]
    fn evolution_rejects_duplicate_years() {
        let codes: Vec<CountryCode> = ["AAA", "BBB"].map(|c| code(c)).into();
        let g = YearlyTradeGraph::from_edges(2000, &codes, &[]).unwrap();
        let stats = evolution_series(&[g.clone()]).unwrap();
        assert_eq!(stats.len(), 1);
        assert!(evolution_series(&[g.clone(), g]).is_err());
    }
}
