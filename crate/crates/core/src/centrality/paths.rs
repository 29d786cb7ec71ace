//! Shortest-path measures: closeness and betweenness.
//!
//! Paths are unweighted hops on the binary adjacency. Closeness runs on the
//! undirected projection; betweenness on the directed graph via Brandes'
//! accumulation.

use std::collections::VecDeque;

use crate::graph::YearlyTradeGraph;

/// BFS distances from `source` over an adjacency list; unreachable = None.
fn bfs_distances(adj: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v].unwrap();
        for &w in &adj[v] {
            if dist[w].is_none() {
                dist[w] = Some(dv + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Closeness on the undirected projection.
///
/// For a node reaching r-1 others with total distance D:
/// `C(i) = ((r-1)/(N-1)) * ((r-1)/D)`, which reduces to the inverse mean
/// geodesic distance when the graph is connected. Isolated nodes get 0.
pub fn closeness(graph: &YearlyTradeGraph) -> Vec<f64> {
    let n = graph.node_count();
    if n < 2 {
        return vec![0.0; n];
    }
    let adj = graph.undirected_neighbors();
    (0..n)
        .map(|i| {
            let dist = bfs_distances(&adj, i);
            let mut reached = 0usize;
            let mut total = 0usize;
            for (j, d) in dist.iter().enumerate() {
                if j != i {
                    if let Some(d) = d {
                        reached += 1;
                        total += d;
                    }
                }
            }
            if reached == 0 {
                0.0
            } else {
                let r1 = reached as f64;
                (r1 / (n - 1) as f64) * (r1 / total as f64)
            }
        })
        .collect()
}

/// Raw directed betweenness: for every ordered pair (s, t) with s != i != t,
/// the fraction of shortest s->t paths passing through i. Pairs with no
/// path contribute zero. Divide by (N-1)(N-2) for the normalized variant.
pub fn betweenness(graph: &YearlyTradeGraph) -> Vec<f64> {
    let n = graph.node_count();
    let succ: Vec<Vec<usize>> = (0..n).map(|i| graph.out_neighbors(i).collect()).collect();
    let mut score = vec![0.0; n];

    for s in 0..n {
        // Brandes (2001): BFS, then dependency back-propagation.
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0; n];
        let mut dist = vec![usize::MAX; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &succ[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                score[w] += delta[w];
            }
        }
    }
    score
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centrality::test_graphs::*;

    #[test]
    fn closeness_on_star_and_path() {
        let star = ungraph(4, &[(0, 1), (0, 2), (0, 3)]);
        let c = closeness(&star);
        assert_eq!(c[0], 1.0);

        let path = ungraph(3, &[(0, 1), (1, 2)]);
        let c = closeness(&path);
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c[1], 1.0);
        assert!((c[2] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn closeness_disconnected_uses_reachable_fraction() {
        // pair 0-1 plus isolated 2: r-1 = 1 of N-1 = 2, distance 1
        let g = ungraph(3, &[(0, 1)]);
        let c = closeness(&g);
        assert!((c[0] - 0.5).abs() < 1e-15);
        assert_eq!(c[2], 0.0);
    }

    #[test]
    fn betweenness_directed_path_and_complete() {
        let path = digraph(3, &[(0, 1), (1, 2)]);
        let b = betweenness(&path);
        assert_eq!(b, vec![0.0, 1.0, 0.0]);

        let mut edges = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    edges.push((i, j));
                }
            }
        }
        let complete = digraph(4, &edges);
        assert_eq!(betweenness(&complete), vec![0.0; 4]);
    }

    #[test]
    fn betweenness_splits_over_equal_paths() {
        // 0->1->3 and 0->2->3: each middle node carries half of pair (0,3)
        let g = digraph(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        let b = betweenness(&g);
        assert!((b[1] - 0.5).abs() < 1e-15);
        assert!((b[2] - 0.5).abs() < 1e-15);
        assert_eq!(b[0], 0.0);
        assert_eq!(b[3], 0.0);
    }
}
