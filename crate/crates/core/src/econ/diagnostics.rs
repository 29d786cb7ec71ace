//! Specification tests: Hausman, Breusch-Pagan LM, heteroskedasticity,
//! Breusch-Godfrey, Durbin-Wu-Hausman, and the joint Wald test.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::PanelDataset;

use super::{build_design, RegressionResult, RegressionSpec, INTERCEPT};

/// Statistic, p-value, degrees of freedom, and an optional caveat flag.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p: f64,
    pub dof: usize,
    pub flag: Option<String>,
}

/// Hausman contrast of fixed- against random-effects estimates over their
/// common slope coefficients:
/// `H = d' [V_FE - V_RE]^{-1} d`, chi-square with dim(d) dof. A
/// non-positive-definite variance difference falls back to the
/// Moore-Penrose pseudo-inverse and flags the result.
pub fn hausman_test(fe: &RegressionResult, re: &RegressionResult) -> Result<TestResult> {
    let common: Vec<&str> = fe
        .design_names
        .iter()
        .filter(|n| *n != INTERCEPT && re.design_names.contains(n))
        .map(|s| s.as_str())
        .collect();
    if common.is_empty() {
        return Err(Error::Validation("no common regressors for the Hausman test".into()));
    }
    let k = common.len();
    let fe_idx: Vec<usize> =
        common.iter().map(|n| fe.design_names.iter().position(|d| d == n).unwrap()).collect();
    let re_idx: Vec<usize> =
        common.iter().map(|n| re.design_names.iter().position(|d| d == n).unwrap()).collect();

    let mut d = DVector::<f64>::zeros(k);
    let mut v = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        d[a] = fe.terms[fe_idx[a]].coef - re.terms[re_idx[a]].coef;
        for b in 0..k {
            v[(a, b)] =
                fe.cov_classic[(fe_idx[a], fe_idx[b])] - re.cov_classic[(re_idx[a], re_idx[b])];
        }
    }

    let (inv, used_pinv) = match v.clone().cholesky() {
        Some(chol) => (chol.inverse(), false),
        None => (linalg::pseudo_inverse(&v)?, true),
    };
    let statistic = (d.transpose() * inv * &d)[(0, 0)].max(0.0);
    Ok(TestResult {
        statistic,
        p: linalg::chi_square_sf(statistic, k),
        dof: k,
        flag: used_pinv.then(|| "variance difference not positive definite".to_string()),
    })
}

/// Breusch-Pagan Lagrange-multiplier test of random effects against pooled
/// OLS on a balanced panel, chi-square(1).
pub fn breusch_pagan_lm(pooled: &RegressionResult) -> Result<TestResult> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<&crate::country::CountryCode, Vec<f64>> = BTreeMap::new();
    for ((country, _), e) in pooled.rows.iter().zip(&pooled.residuals) {
        groups.entry(country).or_default().push(*e);
    }
    let n = groups.len();
    let t = groups.values().next().map(|v| v.len()).unwrap_or(0);
    if t < 2 {
        return Err(Error::Validation("Breusch-Pagan LM needs at least 2 periods".into()));
    }
    if groups.values().any(|v| v.len() != t) {
        return Err(Error::Validation("Breusch-Pagan LM needs a balanced panel".into()));
    }
    let sum_sq_of_sums: f64 = groups.values().map(|v| v.iter().sum::<f64>().powi(2)).sum();
    let sum_sq: f64 = pooled.residuals.iter().map(|e| e * e).sum();
    let nt = (n * t) as f64;
    let ratio = sum_sq_of_sums / sum_sq - 1.0;
    let statistic = nt / (2.0 * (t as f64 - 1.0)) * ratio * ratio;
    Ok(TestResult { statistic, p: linalg::chi_square_sf(statistic, 1), dof: 1, flag: None })
}

/// Koenker's studentized Breusch-Pagan heteroskedasticity test: n R^2 from
/// regressing squared residuals on the design, chi-square with
/// (non-constant columns) dof.
pub fn heteroskedasticity_test(result: &RegressionResult) -> Result<TestResult> {
    let n = result.design.nrows();
    let k = result.design.ncols();
    let slope_cols = result.design_names.iter().filter(|n| *n != INTERCEPT).count();
    if slope_cols == 0 {
        return Err(Error::Validation(
            "heteroskedasticity test needs a non-constant regressor".into(),
        ));
    }
    let e2 = DVector::from_iterator(n, result.residuals.iter().map(|e| e * e));
    let beta = linalg::lstsq(&result.design, &e2, &result.design_names)?;
    let fitted = &result.design * &beta;
    let resid = &e2 - fitted;
    let ssr: f64 = resid.iter().map(|v| v * v).sum();
    let mean = e2.iter().sum::<f64>() / n as f64;
    let tss: f64 = e2.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - ssr / tss } else { 0.0 };
    let statistic = n as f64 * r2.max(0.0);
    let _ = k;
    Ok(TestResult {
        statistic,
        p: linalg::chi_square_sf(statistic, slope_cols),
        dof: slope_cols,
        flag: None,
    })
}

/// Breusch-Godfrey LM test for serial correlation up to `order`, run as an
/// auxiliary regression of residuals on the design plus within-country
/// lagged residuals (zero-filled at country starts), chi-square(order).
pub fn breusch_godfrey(result: &RegressionResult, order: usize) -> Result<TestResult> {
    if order == 0 {
        return Err(Error::Validation("autocorrelation order must be at least 1".into()));
    }
    let n = result.design.nrows();
    let k = result.design.ncols();

    // residual lags within country, zero before the sample start
    let mut lags = DMatrix::<f64>::zeros(n, order);
    let mut max_run = 0usize;
    let mut run = 0usize;
    for i in 0..n {
        let same_country = i > 0 && result.rows[i].0 == result.rows[i - 1].0;
        run = if same_country { run + 1 } else { 1 };
        max_run = max_run.max(run);
        for m in 1..=order {
            if run > m {
                lags[(i, m - 1)] = result.residuals[i - m];
            }
        }
    }
    if order >= max_run {
        return Err(Error::Validation(format!(
            "order {order} too large for {max_run} consecutive periods"
        )));
    }

    let mut aux = DMatrix::<f64>::zeros(n, k + order);
    aux.view_mut((0, 0), (n, k)).copy_from(&result.design);
    aux.view_mut((0, k), (n, order)).copy_from(&lags);
    let mut names = result.design_names.clone();
    names.extend((1..=order).map(|m| format!("resid_lag{m}")));

    let e = DVector::from_column_slice(&result.residuals);
    let beta = linalg::lstsq(&aux, &e, &names)?;
    let fitted = &aux * &beta;
    let ssr: f64 = (&e - fitted).iter().map(|v| v * v).sum();
    let mean = e.iter().sum::<f64>() / n as f64;
    let tss: f64 = e.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - ssr / tss } else { 0.0 };
    let statistic = n as f64 * r2.max(0.0);
    Ok(TestResult {
        statistic,
        p: linalg::chi_square_sf(statistic, order),
        dof: order,
        flag: None,
    })
}

/// Durbin-Wu-Hausman endogeneity test in control-function form plus the
/// first-stage F statistic of the excluded instruments.
#[derive(Debug, Clone, PartialEq)]
pub struct DwhResult {
    pub statistic: f64,
    pub p: f64,
    pub first_stage_f: f64,
    pub weak_instruments: bool,
}

/// First stage: regress `suspect` on the exogenous regressors plus the
/// excluded `instruments`; second stage: add the first-stage residual to
/// the structural equation and test its coefficient (chi-square(1)). Both
/// stages run on the common sample where every column is present.
pub fn durbin_wu_hausman(
    panel: &PanelDataset,
    spec: &RegressionSpec,
    suspect: &str,
    instruments: &[String],
) -> Result<DwhResult> {
    if instruments.is_empty() {
        return Err(Error::Validation("need at least one instrument".into()));
    }
    if instruments.iter().any(|i| i == suspect) {
        return Err(Error::Validation(format!(
            "suspect variable {suspect} cannot be its own instrument"
        )));
    }
    if instruments.iter().any(|i| spec.regressors.contains(i)) {
        return Err(Error::Validation(
            "instruments must be excluded from the structural regressors".into(),
        ));
    }
    if !spec.regressors.iter().any(|r| r == suspect) {
        return Err(Error::Validation(format!("{suspect} is not a regressor")));
    }

    // one design over regressors + instruments pins a common sample
    let mut combined = spec.clone();
    combined.regressors.extend(instruments.iter().cloned());
    let design = build_design(panel, &combined, true)?;
    let n = design.n();

    let col_of = |name: &str| design.names.iter().position(|c| c == name);
    let suspect_col = col_of(suspect).unwrap();
    let instrument_cols: Vec<usize> =
        instruments.iter().map(|i| col_of(i).unwrap()).collect();
    let structural_cols: Vec<usize> = (0..design.names.len())
        .filter(|j| !instrument_cols.contains(j))
        .collect();
    let exog_cols: Vec<usize> =
        structural_cols.iter().copied().filter(|&j| j != suspect_col).collect();

    let take = |cols: &[usize]| {
        let mut m = DMatrix::<f64>::zeros(n, cols.len());
        for (jj, &j) in cols.iter().enumerate() {
            for i in 0..n {
                m[(i, jj)] = design.x[(i, j)];
            }
        }
        m
    };
    let names_of =
        |cols: &[usize]| cols.iter().map(|&j| design.names[j].clone()).collect::<Vec<_>>();

    // first stage
    let fs_y = design.x.column(suspect_col).into_owned();
    let mut fs_cols = exog_cols.clone();
    fs_cols.extend(instrument_cols.iter().copied());
    let fs_x = take(&fs_cols);
    let fs_beta = linalg::lstsq(&fs_x, &fs_y, &names_of(&fs_cols))?;
    let fs_resid = &fs_y - &fs_x * &fs_beta;
    let ssr_u: f64 = fs_resid.iter().map(|e| e * e).sum();

    // restricted first stage (instruments dropped) for the F statistic
    let r_x = take(&exog_cols);
    let r_beta = linalg::lstsq(&r_x, &fs_y, &names_of(&exog_cols))?;
    let ssr_r: f64 = (&fs_y - &r_x * &r_beta).iter().map(|e| e * e).sum();
    let q = instruments.len() as f64;
    let dof_u = (n - fs_cols.len()) as f64;
    let f = ((ssr_r - ssr_u) / q) / (ssr_u / dof_u);
    let weak = f < 1.0;
    if weak {
        log::warn!("weak instruments for {suspect}: first-stage F = {f:.3}");
    }

    // second stage: structural equation plus the control-function residual
    let k = structural_cols.len();
    let mut aug = DMatrix::<f64>::zeros(n, k + 1);
    aug.view_mut((0, 0), (n, k)).copy_from(&take(&structural_cols));
    for i in 0..n {
        aug[(i, k)] = fs_resid[i];
    }
    let mut names = names_of(&structural_cols);
    names.push("first_stage_residual".into());

    let beta = linalg::lstsq(&aug, &design.y, &names)?;
    let resid = &design.y - &aug * &beta;
    let ssr: f64 = resid.iter().map(|v| v * v).sum();
    let sigma2 = ssr / (n - k - 1) as f64;
    let xtx = aug.transpose() * &aug;
    let (xtx_inv, _) = linalg::sym_inverse(&xtx)?;
    let se = (sigma2 * xtx_inv[(k, k)]).sqrt();
    let t_stat = beta[k] / se;
    let statistic = t_stat * t_stat;

    Ok(DwhResult {
        statistic,
        p: linalg::chi_square_sf(statistic, 1),
        first_stage_f: f,
        weak_instruments: weak,
    })
}

/// Wald test that every non-intercept, non-dummy slope is jointly zero,
/// using the result's reported covariance.
pub fn wald_joint(result: &RegressionResult) -> Result<TestResult> {
    let idx: Vec<usize> = result
        .design_names
        .iter()
        .enumerate()
        .filter(|(_, n)| *n != INTERCEPT && !n.starts_with("year_"))
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return Err(Error::Validation("no slope coefficients to test".into()));
    }
    let k = idx.len();
    let mut b = DVector::<f64>::zeros(k);
    let mut v = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        b[a] = result.terms[idx[a]].coef;
        for c in 0..k {
            v[(a, c)] = result.cov[(idx[a], idx[c])];
        }
    }
    let (inv, used_pinv) = linalg::sym_inverse(&v)?;
    if used_pinv {
        log::warn!("singular covariance in the joint Wald test; generalized inverse used");
    }
    let statistic = (b.transpose() * inv * &b)[(0, 0)].max(0.0);
    Ok(TestResult {
        statistic,
        p: linalg::chi_square_sf(statistic, k),
        dof: k,
        flag: used_pinv.then(|| "singular covariance".to_string()),
    })
}
