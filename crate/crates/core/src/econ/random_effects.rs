//! Random-effects GLS with Swamy-Arora variance components.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::PanelDataset;

use super::within::demean_by_group;
use super::{build_design, terms_from, RegressionResult, RegressionSpec, INTERCEPT};

/// Quasi-demeaned GLS on a balanced panel.
///
/// The idiosyncratic variance comes from within residuals, the unit-effect
/// variance from the between regression (clamped at zero with a warning
/// when negative), and every column is transformed as `v - theta * v_bar_i`
/// before a final OLS pass.
pub fn random_effects_gls(panel: &PanelDataset, spec: &RegressionSpec) -> Result<RegressionResult> {
    let design = build_design(panel, spec, true)?;
    let n = design.n();
    let k = design.k();

    // balancedness over the estimation sample
    let mut counts: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    for g in &design.country_of {
        *counts.entry(*g).or_insert(0) += 1;
    }
    let t = *counts.values().next().unwrap();
    if counts.values().any(|c| *c != t) {
        return Err(Error::Validation("random effects needs a balanced panel".into()));
    }
    let n_countries = counts.len();
    if t < 2 {
        return Err(Error::Validation("random effects needs at least 2 periods".into()));
    }

    // sigma_e^2 from the within regression (slopes only; the intercept and
    // time-invariant regressors drop out of the demeaned equation)
    let slope_cols: Vec<usize> =
        (0..k).filter(|&j| design.names[j] != INTERCEPT).collect();
    let mut xw = DMatrix::<f64>::zeros(n, slope_cols.len());
    for (jj, &j) in slope_cols.iter().enumerate() {
        for i in 0..n {
            xw[(i, jj)] = design.x[(i, j)];
        }
    }
    let mut yw = design.y.clone();
    demean_by_group(&mut xw, &mut yw, &design.country_of);
    let varying: Vec<usize> = (0..slope_cols.len())
        .filter(|&jj| {
            let norm2: f64 = (0..n).map(|i| xw[(i, jj)] * xw[(i, jj)]).sum();
            let raw: f64 =
                (0..n).map(|i| design.x[(i, slope_cols[jj])].powi(2)).sum::<f64>().max(1.0);
            norm2 > 1e-20 * raw
        })
        .collect();
    let k_slopes = varying.len();
    let xw = xw.select_columns(varying.iter());
    let slope_names: Vec<String> =
        varying.iter().map(|&jj| design.names[slope_cols[jj]].clone()).collect();
    let beta_w = linalg::lstsq(&xw, &yw, &slope_names)?;
    let resid_w = &yw - &xw * &beta_w;
    let ssr_w: f64 = resid_w.iter().map(|e| e * e).sum();
    let dof_w = (n - n_countries - k_slopes) as f64;
    if dof_w <= 0.0 {
        return Err(Error::Validation("not enough observations for variance components".into()));
    }
    let sigma_e2 = ssr_w / dof_w;

    // between regression on country means
    let mut xb = DMatrix::<f64>::zeros(n_countries, k);
    let mut yb = DVector::<f64>::zeros(n_countries);
    for (gi, (&g, &cnt)) in counts.iter().enumerate() {
        let m = cnt as f64;
        for i in 0..n {
            if design.country_of[i] == g {
                yb[gi] += design.y[i] / m;
                for j in 0..k {
                    xb[(gi, j)] += design.x[(i, j)] / m;
                }
            }
        }
    }
    // columns whose country means are constant (time dummies, the crisis
    // window) carry no between variation and drop from this regression
    let between_cols: Vec<usize> = (0..k)
        .filter(|&j| {
            if design.names[j] == INTERCEPT {
                return true;
            }
            let mean = xb.column(j).sum() / n_countries as f64;
            let var: f64 =
                (0..n_countries).map(|g| (xb[(g, j)] - mean).powi(2)).sum::<f64>();
            var > 1e-18 * mean.abs().max(1.0)
        })
        .collect();
    let xb = xb.select_columns(between_cols.iter());
    let between_names: Vec<String> =
        between_cols.iter().map(|&j| design.names[j].clone()).collect();
    let dof_b = n_countries as f64 - between_cols.len() as f64;
    let sigma_u2 = if dof_b > 0.0 {
        let beta_b = linalg::lstsq(&xb, &yb, &between_names)?;
        let resid_b = &yb - &xb * &beta_b;
        let ssr_b: f64 = resid_b.iter().map(|e| e * e).sum();
        let sigma_1 = ssr_b / dof_b; // estimates sigma_u^2 + sigma_e^2 / T
        let raw = sigma_1 - sigma_e2 / t as f64;
        if raw < 0.0 {
            log::warn!("negative unit-effect variance estimate {raw:.3e}; clamped to 0");
            0.0
        } else {
            raw
        }
    } else {
        log::warn!("too few countries for the between regression; unit variance set to 0");
        0.0
    };

    let theta = 1.0 - (sigma_e2 / (t as f64 * sigma_u2 + sigma_e2)).sqrt();

    // quasi-demeaning
    let mut xg = design.x.clone();
    let mut yg = design.y.clone();
    let mut means_x = vec![vec![0.0; k]; n_countries];
    let mut means_y = vec![0.0; n_countries];
    let group_index: Vec<usize> = {
        let keys: Vec<usize> = counts.keys().copied().collect();
        design.country_of.iter().map(|g| keys.binary_search(g).unwrap()).collect()
    };
    for i in 0..n {
        let gi = group_index[i];
        means_y[gi] += design.y[i] / t as f64;
        for j in 0..k {
            means_x[gi][j] += design.x[(i, j)] / t as f64;
        }
    }
    for i in 0..n {
        let gi = group_index[i];
        yg[i] -= theta * means_y[gi];
        for j in 0..k {
            xg[(i, j)] -= theta * means_x[gi][j];
        }
    }

    let beta = linalg::lstsq(&xg, &yg, &design.names)?;
    let resid = &yg - &xg * &beta;
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let sigma2 = ssr / (n - k) as f64;
    let xtx = xg.transpose() * &xg;
    let (xtx_inv, _) = linalg::sym_inverse(&xtx)?;
    let cov = &xtx_inv * sigma2;
    let terms = terms_from(&design.names, &beta, &cov);

    // residuals in the original scale for downstream diagnostics
    let orig_resid = &design.y - &design.x * &beta;

    Ok(RegressionResult {
        estimator: "random_effects".into(),
        dependent: spec.dependent.clone(),
        terms,
        n_obs: n,
        n_countries,
        r2_adjusted: None,
        cov: cov.clone(),
        cov_classic: cov,
        residuals: orig_resid.iter().copied().collect(),
        rows: design.rows,
        design_names: design.names,
        design: design.x,
    })
}
