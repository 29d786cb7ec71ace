//! PageRank by power iteration, binary or trade-value weighted.

use crate::error::{Error, Result};
use crate::graph::YearlyTradeGraph;

/// Whether a node's rank is split among successors by edge count or by
/// edge weight (out-strength).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PageRankMode {
    Binary,
    Weighted,
}

#[derive(Debug, Clone, Copy)]
pub struct PageRankOptions {
    pub damping: f64,
    pub mode: PageRankMode,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankOptions {
    fn default() -> Self {
        PageRankOptions { damping: 0.85, mode: PageRankMode::Weighted, tol: 1e-12, max_iter: 1000 }
    }
}

/// Power iteration on
/// `PR_i = (1-d)/N + d * sum_j m_ji PR_j`,
/// where `m_ji` splits node j's rank over its successors (by count in
/// binary mode, by weight share in weighted mode) and the mass of nodes
/// with no successors is redistributed uniformly over all N nodes.
pub fn pagerank(graph: &YearlyTradeGraph, options: PageRankOptions) -> Result<Vec<f64>> {
    let PageRankOptions { damping: d, mode, tol, max_iter } = options;
    if !(0.0 < d && d < 1.0) {
        return Err(Error::Validation(format!("damping must be in (0,1), got {d}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Validation("tolerance must be positive".into()));
    }
    let n = graph.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }

    // Out-capacity each node divides its rank by.
    let out_total: Vec<f64> = (0..n)
        .map(|j| match mode {
            PageRankMode::Binary => graph.out_neighbors(j).count() as f64,
            PageRankMode::Weighted => (0..n).map(|k| graph.weight(j, k)).sum(),
        })
        .collect();

    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;

    for _ in 0..max_iter {
        let dangling_mass: f64 =
            (0..n).filter(|&j| out_total[j] == 0.0).map(|j| rank[j]).sum();
        let base = (1.0 - d) / nf + d * dangling_mass / nf;
        next.iter_mut().for_each(|x| *x = base);
        for j in 0..n {
            if out_total[j] == 0.0 {
                continue;
            }
            let scale = d * rank[j];
            for k in graph.out_neighbors(j) {
                // the share ratio is computed first so that uniformly
                // scaled weights keep every quotient bit-identical
                let share = match mode {
                    PageRankMode::Binary => 1.0 / out_total[j],
                    PageRankMode::Weighted => graph.weight(j, k) / out_total[j],
                };
                next[k] += scale * share;
            }
        }
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual < tol {
            // Remove accumulated rounding so the vector sums to exactly 1.
            let total: f64 = rank.iter().sum();
            rank.iter_mut().for_each(|x| *x /= total);
            return Ok(rank);
        }
    }
    Err(Error::NonConvergence { iterations: max_iter, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centrality::test_graphs::*;

    #[test]
    fn mutual_pair_splits_evenly() {
        let g = digraph(2, &[(0, 1), (1, 0)]);
        let pr = pagerank(&g, PageRankOptions::default()).unwrap();
        assert!((pr[0] - 0.5).abs() < 1e-12);
        assert!((pr[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cycle_is_uniform() {
        let g = digraph(3, &[(0, 1), (1, 2), (2, 0)]);
        let pr = pagerank(&g, PageRankOptions::default()).unwrap();
        for p in pr {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dangling_two_node_chain_matches_fixed_point() {
        // A->B with B dangling, d = 0.85, N = 2. Solving
        //   PR_A = 0.075 + 0.425 PR_B
        //   PR_B = 0.075 + 0.85 PR_A + 0.425 PR_B
        // gives PR_B = 0.13875 / 0.21375.
        let g = digraph(2, &[(0, 1)]);
        let pr = pagerank(&g, PageRankOptions::default()).unwrap();
        let expected_b = 0.13875 / 0.21375;
        assert!((pr[1] - expected_b).abs() < 1e-9, "PR_B = {}", pr[1]);
        assert!((pr[0] - (1.0 - expected_b)).abs() < 1e-9);
        assert!((pr[0] - 0.35088).abs() < 5e-6);
        assert!((pr[1] - 0.64912).abs() < 5e-6);
    }

    #[test]
    fn weighted_mode_follows_trade_shares() {
        // 0 sends 3/4 of its rank share to 1 and 1/4 to 2.
        let g = weighted_digraph(3, &[(0, 1, 3.0), (0, 2, 1.0), (1, 0, 1.0), (2, 0, 1.0)]);
        let pr =
            pagerank(&g, PageRankOptions { mode: PageRankMode::Weighted, ..Default::default() })
                .unwrap();
        assert!(pr[1] > pr[2]);
        assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sum_is_one_and_floor_holds() {
        let g = digraph(5, &[(0, 1), (1, 2), (2, 3), (3, 0), (4, 0)]);
        let opts = PageRankOptions::default();
        let pr = pagerank(&g, opts).unwrap();
        assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let floor = (1.0 - opts.damping) / 5.0;
        assert!(pr.iter().all(|p| *p >= floor - 1e-12));
    }

    #[test]
    fn non_convergence_reports_residual() {
        let g = digraph(3, &[(0, 1), (1, 2), (2, 0), (0, 2)]);
        let err = pagerank(
            &g,
            PageRankOptions { max_iter: 1, tol: 1e-15, ..Default::default() },
        )
        .unwrap_err();
        match err {
            Error::NonConvergence { iterations, residual } => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_damping() {
        let g = digraph(2, &[(0, 1)]);
        assert!(pagerank(&g, PageRankOptions { damping: 1.0, ..Default::default() }).is_err());
        assert!(pagerank(&g, PageRankOptions { damping: 0.0, ..Default::default() }).is_err());
    }
}
