//! k-core shell indices by iterative peeling of the undirected projection.

use crate::graph::YearlyTradeGraph;

/// Shell index of every node: the largest k such that the node survives in
/// the k-core. Peeling processes minimum-degree nodes in node (country
/// code) order, which pins the traversal without affecting the result.
pub fn kcore_decomposition(graph: &YearlyTradeGraph) -> Vec<usize> {
    let adj = graph.undirected_neighbors();
    peel(&adj)
}

pub(crate) fn peel(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut degree: Vec<usize> = adj.iter().map(|nb| nb.len()).collect();
    let mut shell = vec![0usize; n];
    let mut removed = vec![false; n];
    let mut current = 0usize;

    for _ in 0..n {
        // lowest-degree unremoved node, ties broken by index
        let v = (0..n)
            .filter(|&v| !removed[v])
            .min_by_key(|&v| (degree[v], v))
            .unwrap();
        current = current.max(degree[v]);
        shell[v] = current;
        removed[v] = true;
        for &w in &adj[v] {
            if !removed[w] && degree[w] > 0 {
                degree[w] -= 1;
            }
        }
    }
    shell
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centrality::test_graphs::*;

    #[test]
    fn triangle_and_star() {
        let triangle = ungraph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(kcore_decomposition(&triangle), vec![2, 2, 2]);

        let star = ungraph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert_eq!(kcore_decomposition(&star), vec![1; 5]);
    }

    #[test]
    fn isolated_node_has_shell_zero() {
        let g = ungraph(4, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(kcore_decomposition(&g), vec![2, 2, 2, 0]);
    }

    #[test]
    fn eight_node_twelve_edge_sample_network() {
        // Inner 4-clique {4,5,6,7}; 2 connects to 4 and 5, 3 connects to 6
        // and 7; leaves 0-2 and 1-4. Shells: leaves 1, connectors 2,
        // clique 3; 12 edges in total.
        let edges = [
            (4, 5), (4, 6), (4, 7), (5, 6), (5, 7), (6, 7), // clique
            (2, 4), (2, 5), (3, 6), (3, 7), // shell-2 connectors
            (0, 2), (1, 4), // pendant leaves
        ];
        let g = ungraph(8, &edges);
        let shells = kcore_decomposition(&g);
        assert_eq!(shells, vec![1, 1, 2, 2, 3, 3, 3, 3]);
        assert_eq!(*shells.iter().max().unwrap(), 3);
    }

    #[test]
    fn shell_never_exceeds_degree() {
        let g = ungraph(6, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (3, 5)]);
        let shells = kcore_decomposition(&g);
        let adj = g.undirected_neighbors();
        for v in 0..6 {
            assert!(shells[v] <= adj[v].len());
        }
    }
}
