//! Property-based invariants for the graph, centrality, indicator, panel,
//! and estimator layers.

use indexmap::IndexMap;
use proptest::prelude::*;

use tradenet::centrality::{
    clustering_coefficient, compute_all, pagerank, CentralityOptions, PageRankMode,
    PageRankOptions,
};
use tradenet::country::CountryCode;
use tradenet::econ::{fixed_effects_within, pooled_ols, CovMode, RegressionSpec};
use tradenet::flow::FlowRecord;
use tradenet::graph::{build_yearly_graph, network_stats, EdgeFilter, YearlyTradeGraph};
use tradenet::indicators::{overlap_frequency_ratio, pca_index, rta_measure, MembershipMatrix};
use tradenet::panel::{add_lags, correlation_matrix, PanelDataset};
use tradenet::country::Universe;

fn codes(n: usize) -> Vec<CountryCode> {
    (0..n)
        .map(|i| {
            CountryCode::new(&format!(
                "{}{}{}",
                (b'A' + (i / 676) as u8) as char,
                (b'A' + ((i / 26) % 26) as u8) as char,
                (b'A' + (i % 26) as u8) as char
            ))
            .unwrap()
        })
        .collect()
}

/// Strategy: a set of flows over up to `n` countries with positive
/// integer-valued amounts (keeping scale arithmetic exact).
fn flow_set(n: usize) -> impl Strategy<Value = Vec<(usize, usize, u32)>> {
    proptest::collection::vec(
        (0..n, 0..n, 1u32..100_000).prop_filter("no self flows", |(a, b, _)| a != b),
        0..40,
    )
}

fn build(flows: &[(usize, usize, u32)], n: usize, filter: EdgeFilter) -> YearlyTradeGraph {
    let universe = Universe::new(codes(n)).unwrap();
    let records: Vec<FlowRecord> = flows
        .iter()
        .map(|(o, d, v)| {
            FlowRecord::new(universe.codes()[*o], universe.codes()[*d], 2005, *v as f64).unwrap()
        })
        .collect();
    build_yearly_graph(&records, 2005, &universe, filter).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_flows_preserves_filtered_structure(flows in flow_set(8)) {
        let base = build(&flows, 8, EdgeFilter::PerYear);
        let scaled_flows: Vec<(usize, usize, u32)> =
            flows.iter().map(|(a, b, v)| (*a, *b, v * 7)).collect();
        let scaled = build(&scaled_flows, 8, EdgeFilter::PerYear);
        for i in 0..8 {
            for j in 0..8 {
                prop_assert_eq!(base.has_edge(i, j), scaled.has_edge(i, j));
            }
        }
        let s = network_stats(&base).unwrap();
        let s2 = network_stats(&scaled).unwrap();
        prop_assert_eq!(s, s2);
    }

    #[test]
    fn flow_order_is_irrelevant(flows in flow_set(6), seed in 0u64..1000) {
        let mut shuffled = flows.clone();
        // deterministic permutation from the seed
        let mut state = seed;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            shuffled.swap(i, j);
        }
        let a = build(&flows, 6, EdgeFilter::PerYear);
        let b = build(&shuffled, 6, EdgeFilter::PerYear);
        for i in 0..6 {
            for j in 0..6 {
                prop_assert_eq!(a.weight(i, j), b.weight(i, j));
            }
        }
    }

    #[test]
    fn density_and_edges_within_bounds(flows in flow_set(7)) {
        let g = build(&flows, 7, EdgeFilter::Off);
        let s = network_stats(&g).unwrap();
        prop_assert!(s.density >= 0.0 && s.density <= 1.0);
        prop_assert!(s.edge_count <= 7 * 6);
        prop_assert!(s.average_clustering >= 0.0 && s.average_clustering <= 1.0);
    }

    #[test]
    fn adjacency_matches_raw_flow_rederivation(flows in flow_set(6)) {
        // brute re-derivation: sum duplicates, quartile of positive sums,
        // strict comparison
        let g = build(&flows, 6, EdgeFilter::PerYear);
        let mut sums = std::collections::BTreeMap::new();
        for (o, d, v) in &flows {
            *sums.entry((*o, *d)).or_insert(0.0) += *v as f64;
        }
        let mut positive: Vec<f64> = sums.values().copied().filter(|v| *v > 0.0).collect();
        positive.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let threshold = if positive.is_empty() {
            None
        } else {
            let h = 0.25 * (positive.len() - 1) as f64;
            let lo = h.floor() as usize;
            let frac = h - lo as f64;
            Some(if frac == 0.0 {
                positive[lo]
            } else {
                positive[lo] + frac * (positive[lo + 1] - positive[lo])
            })
        };
        for i in 0..6 {
            for j in 0..6 {
                let expected = match (sums.get(&(i, j)), threshold) {
                    (Some(v), Some(t)) => *v > t,
                    _ => false,
                };
                prop_assert_eq!(g.has_edge(i, j), expected, "edge {}->{}", i, j);
            }
        }
    }

    #[test]
    fn pagerank_sums_to_one_with_floor(flows in flow_set(8), weighted in any::<bool>()) {
        let g = build(&flows, 8, EdgeFilter::Off);
        let mode = if weighted { PageRankMode::Weighted } else { PageRankMode::Binary };
        let opts = PageRankOptions { mode, ..Default::default() };
        let pr = pagerank(&g, opts).unwrap();
        let total: f64 = pr.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        let floor = (1.0 - opts.damping) / 8.0;
        prop_assert!(pr.iter().all(|p| *p >= floor - 1e-12));
    }

    #[test]
    fn clustering_and_closeness_bounded(flows in flow_set(8)) {
        let g = build(&flows, 8, EdgeFilter::Off);
        let records = compute_all(&g, &CentralityOptions::default()).unwrap();
        for r in &records {
            prop_assert!((0.0..=1.0).contains(&r.clustering));
            prop_assert!((0.0..=1.0).contains(&r.closeness));
            prop_assert!(r.betweenness >= 0.0);
            prop_assert!(r.rwb >= 0.0);
        }
    }

    #[test]
    fn kcore_shells_bounded_by_degree(flows in flow_set(10)) {
        let g = build(&flows, 10, EdgeFilter::Off);
        let records = compute_all(&g, &CentralityOptions::default()).unwrap();
        let adj = g.undirected_neighbors();
        let max_shell = records.iter().map(|r| r.kcore).max().unwrap();
        for (i, r) in records.iter().enumerate() {
            prop_assert!(r.kcore <= adj[i].len());
        }
        // the induced subgraph on shells >= k has min degree >= k
        for k in 1..=max_shell {
            let members: Vec<usize> =
                records.iter().enumerate().filter(|(_, r)| r.kcore >= k).map(|(i, _)| i).collect();
            for &v in &members {
                let inside = adj[v].iter().filter(|w| members.contains(w)).count();
                prop_assert!(inside >= k, "node {} has degree {} in the {}-core", v, inside, k);
            }
        }
    }

    #[test]
    fn complete_graph_clusters_fully_trees_not_at_all(n in 3usize..8) {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    edges.push((i, j, 1u32));
                }
            }
        }
        let complete = build(&edges, n, EdgeFilter::Off);
        prop_assert!(clustering_coefficient(&complete).iter().all(|c| *c == 1.0));

        // a star is a tree: clustering zero everywhere
        let star: Vec<(usize, usize, u32)> = (1..n).map(|i| (0, i, 1u32)).collect();
        let tree = build(&star, n, EdgeFilter::Off);
        prop_assert!(clustering_coefficient(&tree).iter().all(|c| *c == 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pca_scores_are_centered_and_affine_invariant(
        raw in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0, 0.0f64..10.0), 8..30),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let rows: Vec<Vec<f64>> = raw.iter().map(|(a, b, c)| vec![*a, *b, a + b + c]).collect();
        let names = ["a", "b", "c"];
        prop_assume!(pca_index(&rows, &names).is_ok());
        let scores = pca_index(&rows, &names).unwrap();
        let mean: f64 = scores.iter().sum::<f64>() / scores.len() as f64;
        prop_assert!(mean.abs() < 1e-9);

        // positively rescaling one input column leaves the scores unchanged
        let rescaled: Vec<Vec<f64>> =
            rows.iter().map(|r| vec![r[0] * scale + shift, r[1], r[2]]).collect();
        let scores2 = pca_index(&rescaled, &names).unwrap();
        for (s1, s2) in scores.iter().zip(&scores2) {
            prop_assert!((s1 - s2).abs() < 1e-8, "{} vs {}", s1, s2);
        }
    }

    #[test]
    fn rta_is_scale_free_in_gdp(gdps in proptest::collection::vec(1.0f64..1e6, 4), c in 1.0f64..1000.0) {
        let country_codes = codes(4);
        let mut cells = vec![false; 4 * 2];
        for i in 0..4 {
            cells[i * 2] = true; // everyone shares REC 0
        }
        let m = MembershipMatrix::new(
            country_codes.clone(),
            vec!["R0".into(), "R1".into()],
            cells,
        )
        .unwrap();
        let map: std::collections::BTreeMap<CountryCode, f64> =
            country_codes.iter().copied().zip(gdps.iter().copied()).collect();
        let scaled: std::collections::BTreeMap<CountryCode, f64> =
            country_codes.iter().copied().zip(gdps.iter().map(|g| g * c)).collect();
        let a = rta_measure(country_codes[0], 2005, &map, &m).unwrap();
        let b = rta_measure(country_codes[0], 2005, &scaled, &m).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn ofr_is_bounded_and_monotone(members in 1usize..=8) {
        let country_codes = codes(1);
        let mut cells = vec![false; 8];
        for r in 0..members {
            cells[r] = true;
        }
        let m = MembershipMatrix::new(
            country_codes.clone(),
            (0..8).map(|r| format!("R{r}")).collect(),
            cells,
        )
        .unwrap();
        let v = overlap_frequency_ratio(country_codes[0], &m).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!((v - (members as f64 - 1.0) / 7.0).abs() < 1e-15);
    }

    #[test]
    fn lag_columns_shift_exactly(t in 3usize..8, l in 1usize..3, n in 2usize..5) {
        prop_assume!(l < t);
        let country_codes = codes(n);
        let mut columns = IndexMap::new();
        let values: Vec<Option<f64>> =
            (0..n * t).map(|i| Some(i as f64 * 1.5 - 3.0)).collect();
        columns.insert("x".to_string(), values.clone());
        let mut panel = PanelDataset::from_columns(
            country_codes,
            (2000..2000 + t as i32).collect(),
            columns,
        )
        .unwrap();
        add_lags(&mut panel, &["x".to_string()], l).unwrap();
        let lagged = panel.column(&format!("lag{l}_x")).unwrap();
        for ci in 0..n {
            for ti in 0..t {
                let expected = if ti >= l { values[ci * t + ti - l] } else { None };
                prop_assert_eq!(lagged[ci * t + ti], expected);
            }
        }
    }

    #[test]
    fn correlation_matrix_is_symmetric_unit_diagonal(
        data in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 4..20),
    ) {
        let xs: Vec<f64> = data.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = data.iter().map(|p| p.1 + 0.3 * p.0).collect();
        prop_assume!(xs.iter().any(|v| (v - xs[0]).abs() > 1e-6));
        prop_assume!(ys.iter().any(|v| (v - ys[0]).abs() > 1e-6));
        let mut columns = IndexMap::new();
        columns.insert("x".to_string(), xs.into_iter().map(Some).collect());
        columns.insert("y".to_string(), ys.into_iter().map(Some).collect());
        let panel = PanelDataset::from_columns(
            codes(1),
            (2000..2000 + data.len() as i32).collect(),
            columns,
        )
        .unwrap();
        let vars = ["x".to_string(), "y".to_string()];
        let m = correlation_matrix(&panel, &vars).unwrap();
        prop_assert_eq!(m[0][0], 1.0);
        prop_assert_eq!(m[1][1], 1.0);
        prop_assert!((m[0][1] - m[1][0]).abs() < 1e-12);
        prop_assert!(m[0][1].abs() <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ols_residuals_orthogonal_to_design(
        data in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 10..40),
    ) {
        let xs: Vec<f64> = data.iter().map(|p| p.0).collect();
        prop_assume!(xs.iter().any(|v| (v - xs[0]).abs() > 1e-3));
        let ys: Vec<f64> = data.iter().map(|p| 1.0 + 2.0 * p.0 + p.1).collect();
        let mut columns = IndexMap::new();
        columns.insert("x".to_string(), xs.into_iter().map(Some).collect());
        columns.insert("y".to_string(), ys.into_iter().map(Some).collect());
        let panel = PanelDataset::from_columns(
            codes(1),
            (2000..2000 + data.len() as i32).collect(),
            columns,
        )
        .unwrap();
        let spec = RegressionSpec::new("y", &["x"]);
        let r = pooled_ols(&panel, &spec, CovMode::Robust).unwrap();
        let scale: f64 = r.residuals.iter().map(|e| e * e).sum::<f64>().sqrt().max(1.0);
        for j in 0..r.design.ncols() {
            let dot: f64 = (0..r.design.nrows()).map(|i| r.design[(i, j)] * r.residuals[i]).sum();
            prop_assert!(dot.abs() / scale < 1e-8);
        }
    }

    #[test]
    fn fe_slopes_ignore_per_country_shifts(
        shifts in proptest::collection::vec(-100.0f64..100.0, 4),
        noise in proptest::collection::vec(-0.5f64..0.5, 4 * 6),
    ) {
        let n = 4;
        let t = 6;
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut y_shifted = Vec::new();
        for ci in 0..n {
            for ti in 0..t {
                let xv = (ci * t + ti) as f64 * 0.37 % 5.0;
                let e = noise[ci * t + ti];
                x.push(Some(xv));
                y.push(Some(2.0 * xv + e));
                y_shifted.push(Some(2.0 * xv + e + shifts[ci]));
            }
        }
        let mut c1 = IndexMap::new();
        c1.insert("x".to_string(), x.clone());
        c1.insert("y".to_string(), y);
        let mut c2 = IndexMap::new();
        c2.insert("x".to_string(), x);
        c2.insert("y".to_string(), y_shifted);
        let years: Vec<i32> = (2000..2000 + t as i32).collect();
        let p1 = PanelDataset::from_columns(codes(n), years.clone(), c1).unwrap();
        let p2 = PanelDataset::from_columns(codes(n), years, c2).unwrap();
        let spec = RegressionSpec::new("y", &["x"]);
        let b1 = fixed_effects_within(&p1, &spec, CovMode::Clustered).unwrap();
        let b2 = fixed_effects_within(&p2, &spec, CovMode::Clustered).unwrap();
        prop_assert!((b1.coef("x").unwrap() - b2.coef("x").unwrap()).abs() < 1e-9);
    }
}
