//! Pooled OLS with robust or country-clustered standard errors.

use crate::error::Result;
use crate::linalg;
use crate::panel::PanelDataset;

use super::{build_design, sandwich_cov, terms_from, CovMode, RegressionResult, RegressionSpec};

pub fn pooled_ols(
    panel: &PanelDataset,
    spec: &RegressionSpec,
    cov_mode: CovMode,
) -> Result<RegressionResult> {
    let design = build_design(panel, spec, true)?;
    let n = design.n();
    let k = design.k();

    let beta = linalg::lstsq(&design.x, &design.y, &design.names)?;
    let fitted = &design.x * &beta;
    let residuals = &design.y - &fitted;

    let xtx = design.x.transpose() * &design.x;
    let (xtx_inv, _) = linalg::sym_inverse(&xtx)?;

    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let mean_y = design.y.iter().sum::<f64>() / n as f64;
    let tss: f64 = design.y.iter().map(|y| (y - mean_y).powi(2)).sum();
    let dof = (n - k) as f64;
    let sigma2 = ssr / dof;
    let cov_classic = &xtx_inv * sigma2;
    let r2 = if tss > 0.0 { 1.0 - ssr / tss } else { 1.0 };
    let r2_adjusted = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / dof;

    let cov = sandwich_cov(&design.x, &residuals, &xtx_inv, &design.country_of, cov_mode);
    let terms = terms_from(&design.names, &beta, &cov);

    Ok(RegressionResult {
        estimator: "pooled_ols".into(),
        dependent: spec.dependent.clone(),
        terms,
        n_obs: n,
        n_countries: design.n_countries(),
        r2_adjusted: Some(r2_adjusted),
        cov,
        cov_classic,
        residuals: residuals.iter().copied().collect(),
        rows: design.rows,
        design_names: design.names,
        design: design.x,
    })
}

#[cfg(test)]
mod tests {
    use indexmap::IndexMap;

    use super::*;
    use crate::country::CountryCode;
    use crate::econ::INTERCEPT;

    pub(crate) fn tiny_panel(xy: &[(f64, f64)]) -> PanelDataset {
        let n = xy.len();
        let code = CountryCode::new("AAA").unwrap();
        let mut columns = IndexMap::new();
        columns.insert("x".to_string(), xy.iter().map(|p| Some(p.0)).collect());
        columns.insert("y".to_string(), xy.iter().map(|p| Some(p.1)).collect());
        PanelDataset::from_columns(
            vec![code],
            (2000..2000 + n as i32).collect(),
            columns,
        )
        .unwrap()
    }

    #[test]
    fn exact_line_is_recovered() {
        let panel = tiny_panel(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        let spec = RegressionSpec::new("y", &["x"]);
        let r = pooled_ols(&panel, &spec, CovMode::Robust).unwrap();
        assert!((r.coef(INTERCEPT).unwrap() - 1.0).abs() < 1e-12);
        assert!((r.coef("x").unwrap() - 2.0).abs() < 1e-12);
        assert!(r.residuals.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn constant_only_returns_sample_mean() {
        let panel = tiny_panel(&[(0.0, 2.0), (0.5, 4.0), (1.0, 9.0)]);
        let spec = RegressionSpec::new("y", &[]);
        let r = pooled_ols(&panel, &spec, CovMode::Robust).unwrap();
        assert!((r.coef(INTERCEPT).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_columns_are_reported() {
        let code = CountryCode::new("AAA").unwrap();
        let mut columns = IndexMap::new();
        columns.insert("x".to_string(), vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)]);
        columns.insert("x2".to_string(), vec![Some(2.0), Some(4.0), Some(6.0), Some(8.0)]);
        columns.insert("y".to_string(), vec![Some(1.0), Some(2.0), Some(2.5), Some(4.0)]);
        let panel = PanelDataset::from_columns(
            vec![code],
            vec![2000, 2001, 2002, 2003],
            columns,
        )
        .unwrap();
        let spec = RegressionSpec::new("y", &["x", "x2"]);
        match pooled_ols(&panel, &spec, CovMode::Robust) {
            Err(crate::error::Error::RankDeficient(cols)) => {
                assert_eq!(cols, vec!["x2".to_string()])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn residuals_are_orthogonal_to_design() {
        let xy: Vec<(f64, f64)> =
            (0..30).map(|i| (i as f64, 3.0 + 0.5 * i as f64 + ((i * 7) % 5) as f64)).collect();
        let panel = tiny_panel(&xy);
        let spec = RegressionSpec::new("y", &["x"]);
        let r = pooled_ols(&panel, &spec, CovMode::Robust).unwrap();
        for j in 0..r.design.ncols() {
            let dot: f64 =
                (0..r.design.nrows()).map(|i| r.design[(i, j)] * r.residuals[i]).sum();
            assert!(dot.abs() < 1e-8, "column {j} not orthogonal: {dot}");
        }
    }
}
