//! Fixed-effects (within) estimator with cluster-robust errors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::PanelDataset;

use super::{build_design, sandwich_cov, terms_from, CovMode, RegressionResult, RegressionSpec};

/// Demean y and X by country and run OLS on the transformed data; slopes
/// equal the least-squares-dummy-variable estimates exactly. The intercept
/// is absorbed. Standard errors are clustered by country by default.
pub fn fixed_effects_within(
    panel: &PanelDataset,
    spec: &RegressionSpec,
    cov_mode: CovMode,
) -> Result<RegressionResult> {
    let design = build_design(panel, spec, false)?;
    let n = design.n();
    let k = design.k();
    if k == 0 {
        return Err(Error::Validation("within estimator needs at least one regressor".into()));
    }

    // per-country means
    let mut x_dm = design.x.clone();
    let mut y_dm = design.y.clone();
    demean_by_group(&mut x_dm, &mut y_dm, &design.country_of);

    // a regressor without within variation cannot be identified
    for j in 0..k {
        let norm2: f64 = (0..n).map(|i| x_dm[(i, j)] * x_dm[(i, j)]).sum();
        let raw: f64 = (0..n).map(|i| design.x[(i, j)].powi(2)).sum::<f64>().max(1.0);
        if norm2 <= 1e-20 * raw {
            return Err(Error::Validation(format!(
                "regressor {} is time-invariant within countries",
                design.names[j]
            )));
        }
    }

    let beta = linalg::lstsq(&x_dm, &y_dm, &design.names)?;
    let fitted = &x_dm * &beta;
    let residuals = &y_dm - &fitted;

    let xtx = x_dm.transpose() * &x_dm;
    let (xtx_inv, _) = linalg::sym_inverse(&xtx)?;

    let n_countries = design.n_countries();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let tss: f64 = y_dm.iter().map(|y| y * y).sum();
    // dof accounts for the absorbed country intercepts
    let dof = (n - n_countries - k) as f64;
    let sigma2 = if dof > 0.0 { ssr / dof } else { f64::NAN };
    let cov_classic = &xtx_inv * sigma2;
    let r2_within = if tss > 0.0 { 1.0 - ssr / tss } else { 1.0 };
    let r2_adjusted = if dof > 0.0 {
        1.0 - (1.0 - r2_within) * (n as f64 - 1.0) / dof
    } else {
        f64::NAN
    };

    let cov = match cov_mode {
        CovMode::Clustered => {
            sandwich_cov(&x_dm, &residuals, &xtx_inv, &design.country_of, CovMode::Clustered)
        }
        CovMode::Robust => {
            sandwich_cov(&x_dm, &residuals, &xtx_inv, &design.country_of, CovMode::Robust)
        }
    };
    let terms = terms_from(&design.names, &beta, &cov);

    Ok(RegressionResult {
        estimator: "fixed_effects".into(),
        dependent: spec.dependent.clone(),
        terms,
        n_obs: n,
        n_countries,
        r2_adjusted: Some(r2_adjusted),
        cov,
        cov_classic,
        residuals: residuals.iter().copied().collect(),
        rows: design.rows,
        design_names: design.names,
        design: x_dm,
    })
}

pub(crate) fn demean_by_group(x: &mut DMatrix<f64>, y: &mut DVector<f64>, group_of: &[usize]) {
    use std::collections::BTreeMap;
    let n = x.nrows();
    let k = x.ncols();
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, g) in group_of.iter().enumerate() {
        members.entry(*g).or_default().push(i);
    }
    for rows in members.values() {
        let m = rows.len() as f64;
        let y_mean: f64 = rows.iter().map(|&i| y[i]).sum::<f64>() / m;
        for &i in rows {
            y[i] -= y_mean;
        }
        for j in 0..k {
            let x_mean: f64 = rows.iter().map(|&i| x[(i, j)]).sum::<f64>() / m;
            for &i in rows {
                x[(i, j)] -= x_mean;
            }
        }
    }
    let _ = n;
}
