//! Random-walk (current-flow) betweenness on the undirected projection.
//!
//! For each source/target pair a unit of current is injected at the source
//! and removed at the target; a node's throughflow is half the sum of the
//! absolute net currents on its incident edges, which equals the expected
//! net number of times a random walk from source to target passes the node.
//! Scores sum over all unordered pairs within each connected component
//! (endpoints excluded) and are divided by N(N-1)/2.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::YearlyTradeGraph;

pub fn random_walk_betweenness(graph: &YearlyTradeGraph) -> Result<Vec<f64>> {
    let n = graph.node_count();
    if n < 3 {
        // no (source, target, intermediate) triples exist
        return Ok(vec![0.0; n]);
    }
    let adj = graph.undirected_neighbors();
    let mut score = vec![0.0; n];

    for comp in components(&adj) {
        let m = comp.len();
        if m < 3 {
            continue;
        }
        // local index of each member
        let mut local = vec![usize::MAX; n];
        for (li, &v) in comp.iter().enumerate() {
            local[v] = li;
        }

        // Grounded Laplacian: drop the last member's row/column, invert,
        // and re-embed with zeros. Potentials are differences of columns
        // of this generalized inverse, so the grounding choice cancels.
        let g = m - 1;
        let mut lap = DMatrix::<f64>::zeros(g, g);
        for (li, &v) in comp.iter().enumerate().take(g) {
            lap[(li, li)] = adj[v].len() as f64;
            for &w in &adj[v] {
                let lj = local[w];
                if lj < g {
                    lap[(li, lj)] = -1.0;
                }
            }
        }
        let chol = lap.cholesky().ok_or_else(|| {
            Error::Computation("singular grounded Laplacian in current-flow solve".into())
        })?;
        let inv = chol.inverse();

        // t[v][u] = generalized-inverse entry for component members
        let entry = |v: usize, u: usize| -> f64 {
            let (lv, lu) = (local[v], local[u]);
            if lv < g && lu < g {
                inv[(lv, lu)]
            } else {
                0.0
            }
        };

        for (si, &s) in comp.iter().enumerate() {
            for &t in comp.iter().skip(si + 1) {
                for &i in &comp {
                    if i == s || i == t {
                        continue;
                    }
                    let vi = entry(i, s) - entry(i, t);
                    let mut through = 0.0;
                    for &j in &adj[i] {
                        let vj = entry(j, s) - entry(j, t);
                        through += (vi - vj).abs();
                    }
                    score[i] += 0.5 * through;
                }
            }
        }
    }

    let norm = (n * (n - 1)) as f64 / 2.0;
    score.iter_mut().for_each(|x| *x /= norm);
    Ok(score)
}

/// Connected components of an adjacency list, in node order.
fn components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut head = 0;
        while head < comp.len() {
            let v = comp[head];
            head += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centrality::test_graphs::*;

    #[test]
    fn triangle_is_symmetric() {
        let g = ungraph(3, &[(0, 1), (1, 2), (0, 2)]);
        let rwb = random_walk_betweenness(&g).unwrap();
        assert!((rwb[0] - rwb[1]).abs() < 1e-12);
        assert!((rwb[1] - rwb[2]).abs() < 1e-12);
        // each node carries current 1/3 for the one pair excluding it
        assert!((rwb[0] - (1.0 / 3.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn path_middle_dominates() {
        let g = ungraph(3, &[(0, 1), (1, 2)]);
        let rwb = random_walk_betweenness(&g).unwrap();
        assert!(rwb[1] > rwb[0]);
        assert_eq!(rwb[0], rwb[2]);
        // node 1 is a cut vertex separating 1 and 1 nodes: one crossing pair
        assert!((rwb[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(rwb[0], 0.0);
    }

    #[test]
    fn tiny_graphs_are_all_zero() {
        let g = ungraph(2, &[(0, 1)]);
        assert_eq!(random_walk_betweenness(&g).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn cut_vertex_carries_all_cross_pairs() {
        // two triangles sharing node 2: components of size 2 and 2 around the cut
        let g = ungraph(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)]);
        let rwb = random_walk_betweenness(&g).unwrap();
        let norm = 10.0; // N(N-1)/2
        assert!(rwb[2] >= 4.0 / norm - 1e-12); // p*q = 2*2 crossing pairs
        assert!(rwb[2] > rwb[0]);
    }

    #[test]
    fn disconnected_components_are_independent() {
        // triangle plus unrelated pair: pair nodes are never intermediates
        let g = ungraph(5, &[(0, 1), (1, 2), (0, 2), (3, 4)]);
        let rwb = random_walk_betweenness(&g).unwrap();
        assert_eq!(rwb[3], 0.0);
        assert_eq!(rwb[4], 0.0);
        assert!(rwb[0] > 0.0);
    }
}
