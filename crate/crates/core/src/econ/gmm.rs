//! Blundell-Bond system GMM for dynamic panels.
//!
//! Stacks the first-differenced equation (instrumented by lagged levels of
//! the dependent and of endogenous regressors) with the levels equation
//! (instrumented by lagged first differences). Exogenous regressors, year
//! dummies, and the constant enter as standard instruments, transformed to
//! match each equation. Supports collapsed or per-period instrument
//! blocks, one- or two-step weighting, and Windmeijer-corrected two-step
//! standard errors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::PanelDataset;

use super::diagnostics::TestResult;
use super::{terms_from, GmmSteps, RegressionResult, RegressionSpec, INTERCEPT};

/// System-GMM estimates plus the per-country blocks the post-estimation
/// tests need.
#[derive(Debug, Clone)]
pub struct GmmResult {
    pub base: RegressionResult,
    pub instrument_count: usize,
    /// A moment-weight matrix was rank deficient and a generalized inverse
    /// was used.
    pub weight_used_pinv: bool,
    pub(crate) z_blocks: Vec<DMatrix<f64>>,
    pub(crate) s_blocks: Vec<DMatrix<f64>>,
    pub(crate) final_resid: Vec<DVector<f64>>,
    pub(crate) weight_final: DMatrix<f64>,
    /// P = (G'WG)^{-1} G'W, mapping stacked moments to coefficient space.
    pub(crate) proj: DMatrix<f64>,
    pub(crate) var_beta: DMatrix<f64>,
    /// Per country: (block row, time index) of each differenced-equation row.
    pub(crate) diff_rows: Vec<Vec<(usize, usize)>>,
    pub(crate) n_params: usize,
}

/// One instrument column of the stacked system.
#[derive(Debug, Clone, Copy, PartialEq)]
enum ZCol {
    /// Lagged level of GMM variable `var` instrumenting the differenced
    /// equation; `time` pins the column to one period when not collapsed.
    DiffLag { var: usize, lag: usize, time: Option<usize> },
    /// Lagged first difference instrumenting the levels equation.
    LevelDiff { var: usize, time: Option<usize> },
    /// Exogenous regressor as its own instrument in both equations.
    IvExog { reg: usize },
    /// Year dummy (exogenous IV-style).
    IvDummy { year: i32 },
    IvConst,
}

struct CountryBlock {
    country: usize,
    s: DMatrix<f64>,
    q: DVector<f64>,
    z: DMatrix<f64>,
    diff_rows: Vec<(usize, usize)>,
    level_rows: Vec<(usize, usize)>,
}

pub fn system_gmm(panel: &PanelDataset, spec: &RegressionSpec) -> Result<GmmResult> {
    spec.validate()?;
    if !spec.include_lagged_dependent {
        return Err(Error::Validation(
            "system GMM requires include_lagged_dependent = true".into(),
        ));
    }
    let t = panel.n_years();
    if t < 4 {
        return Err(Error::Validation(format!("system GMM needs T >= 4 periods, got {t}")));
    }

    let dep = panel.column(&spec.dependent)?;
    let regs: Vec<&[Option<f64>]> =
        spec.regressors.iter().map(|r| panel.column(r)).collect::<Result<_>>()?;
    let endo_idx: Vec<usize> = spec
        .regressors
        .iter()
        .enumerate()
        .filter(|(_, r)| spec.endogenous.contains(r))
        .map(|(i, _)| i)
        .collect();
    let exog_idx: Vec<usize> =
        (0..spec.regressors.len()).filter(|i| !endo_idx.contains(i)).collect();

    // coefficient layout: lagged dependent, regressors, dummies, constant
    let mut dummy_years: Vec<i32> = if spec.year_dummies {
        // levels equations cover the 2nd..last years; drop the first of them
        panel.years()[2..].to_vec()
    } else {
        Vec::new()
    };

    // exactly collinear year dummies (e.g. with a crisis-window regressor)
    // are dropped and the blocks rebuilt
    let (names, k, z_cols, blocks) = loop {
        let mut names = vec![super::lag_name(&spec.dependent)];
        names.extend(spec.regressors.iter().cloned());
        names.extend(dummy_years.iter().map(|y| format!("year_{y}")));
        names.push(INTERCEPT.to_string());
        let k = names.len();
        let z_cols = instrument_columns(spec, &endo_idx, &exog_idx, &dummy_years, t);

        let mut blocks: Vec<CountryBlock> = Vec::new();
        for ci in 0..panel.n_countries() {
            let block =
                country_block(panel, &z_cols, dep, &regs, &endo_idx, &dummy_years, ci, t, k);
            if block.q.len() > 0 {
                blocks.push(block);
            }
        }
        if blocks.is_empty() {
            return Err(Error::Validation("empty GMM estimation sample".into()));
        }

        let total_rows: usize = blocks.iter().map(|b| b.q.len()).sum();
        let mut stacked = DMatrix::<f64>::zeros(total_rows, k);
        let mut at = 0usize;
        for b in &blocks {
            stacked.view_mut((at, 0), (b.q.len(), k)).copy_from(&b.s);
            at += b.q.len();
        }
        match linalg::check_full_rank(&stacked, &names) {
            Err(Error::RankDeficient(flagged))
                if !flagged.is_empty() && flagged.iter().all(|f| f.starts_with("year_")) =>
            {
                log::warn!("dropping collinear year dummies from GMM: {flagged:?}");
                dummy_years.retain(|y| !flagged.contains(&format!("year_{y}")));
            }
            Err(e) => return Err(e),
            Ok(()) => break (names, k, z_cols, blocks),
        }
    };

    // drop instrument columns that are identically zero across the sample
    let live: Vec<usize> = (0..z_cols.len())
        .filter(|&col| blocks.iter().any(|b| (0..b.z.nrows()).any(|r| b.z[(r, col)] != 0.0)))
        .collect();
    let l = live.len();
    if l < k {
        return Err(Error::Validation(format!(
            "underidentified: {l} instruments for {k} parameters"
        )));
    }
    let mut z_blocks: Vec<DMatrix<f64>> =
        blocks.iter().map(|b| b.z.select_columns(live.iter())).collect();
    // estimates and test statistics are invariant to instrument column
    // scaling; normalizing to unit RMS keeps the moment algebra well
    // conditioned when levels, differences, and dummies mix
    let total_rows: usize = z_blocks.iter().map(|z| z.nrows()).sum();
    for col in 0..l {
        let ss: f64 = z_blocks.iter().map(|z| z.column(col).norm_squared()).sum();
        let scale = (ss / total_rows as f64).sqrt();
        if scale > 0.0 {
            for z in &mut z_blocks {
                let mut c = z.column_mut(col);
                c /= scale;
            }
        }
    }
    let n_countries = blocks.len();
    if l > n_countries {
        log::warn!("instrument proliferation: {l} instruments exceed {n_countries} countries");
    }

    // moment algebra
    let mut g = DMatrix::<f64>::zeros(l, k);
    let mut zq = DVector::<f64>::zeros(l);
    let mut zhz = DMatrix::<f64>::zeros(l, l);
    for (b, z) in blocks.iter().zip(&z_blocks) {
        g += z.transpose() * &b.s;
        zq += z.transpose() * &b.q;
        let h = h_matrix(b);
        zhz += z.transpose() * h * z;
    }

    let (w1, pinv1) = linalg::sym_inverse(&zhz)?;
    if pinv1 {
        log::warn!("one-step weight matrix is singular; using a generalized inverse");
    }
    let beta1 = gmm_solve(&g, &w1, &zq, &names)?;

    // clustered moment covariance at the one-step estimates
    let u1: Vec<DVector<f64>> = blocks.iter().map(|b| &b.q - &b.s * &beta1).collect();
    let mut omega = DMatrix::<f64>::zeros(l, l);
    for (z, u) in z_blocks.iter().zip(&u1) {
        let zu = z.transpose() * u;
        omega += &zu * zu.transpose();
    }
    let (w2, pinv2) = linalg::sym_inverse(&omega)?;
    if pinv2 {
        log::warn!("two-step weight matrix is singular; using a generalized inverse");
    }

    let (a1, _) = linalg::sym_inverse(&(g.transpose() * &w1 * &g))?;
    let v1_robust = &a1 * g.transpose() * &w1 * &omega * &w1 * &g * &a1;

    let (beta, var_beta, weight_final) = match spec.gmm.steps {
        GmmSteps::One => (beta1.clone(), v1_robust.clone(), w1.clone()),
        GmmSteps::Two => {
            let beta2 = gmm_solve(&g, &w2, &zq, &names)?;
            let (a2, _) = linalg::sym_inverse(&(g.transpose() * &w2 * &g))?;
            let var = if spec.gmm.windmeijer {
                windmeijer_correct(&blocks, &z_blocks, &g, &w2, &a2, &u1, &v1_robust, &beta2)
            } else {
                a2.clone()
            };
            (beta2, var, w2.clone())
        }
    };

    let final_resid: Vec<DVector<f64>> = blocks.iter().map(|b| &b.q - &b.s * &beta).collect();

    let (a_final, _) = linalg::sym_inverse(&(g.transpose() * &weight_final * &g))?;
    let proj = &a_final * g.transpose() * &weight_final;

    let terms = terms_from(&names, &beta, &var_beta);
    let n_obs: usize = blocks.iter().map(|b| b.level_rows.len()).sum();
    let mut rows = Vec::new();
    let mut residuals = Vec::new();
    for (bi, b) in blocks.iter().enumerate() {
        let code = panel.countries()[b.country];
        for &(r, ti) in &b.level_rows {
            rows.push((code, panel.years()[ti]));
            residuals.push(final_resid[bi][r]);
        }
    }

    let base = RegressionResult {
        estimator: "system_gmm".into(),
        dependent: spec.dependent.clone(),
        terms,
        n_obs,
        n_countries,
        r2_adjusted: None,
        cov: var_beta.clone(),
        cov_classic: var_beta.clone(),
        residuals,
        rows,
        design_names: names,
        design: DMatrix::zeros(0, k),
    };

    Ok(GmmResult {
        base,
        instrument_count: l,
        weight_used_pinv: pinv1 || pinv2,
        z_blocks,
        s_blocks: blocks.iter().map(|b| b.s.clone()).collect(),
        final_resid,
        weight_final,
        proj,
        var_beta,
        diff_rows: blocks.iter().map(|b| b.diff_rows.clone()).collect(),
        n_params: k,
    })
}

fn instrument_columns(
    spec: &RegressionSpec,
    endo_idx: &[usize],
    exog_idx: &[usize],
    dummy_years: &[i32],
    t: usize,
) -> Vec<ZCol> {
    // GMM variable 0 is the dependent; 1.. map to endogenous regressors
    let n_gmm_vars = 1 + endo_idx.len();
    let mut cols = Vec::new();
    for var in 0..n_gmm_vars {
        if spec.gmm.collapse {
            for lag in spec.gmm.lag_min..=spec.gmm.lag_max {
                cols.push(ZCol::DiffLag { var, lag, time: None });
            }
        } else {
            for ti in 2..t {
                for lag in spec.gmm.lag_min..=spec.gmm.lag_max.min(ti) {
                    cols.push(ZCol::DiffLag { var, lag, time: Some(ti) });
                }
            }
        }
    }
    if spec.gmm.level_instruments {
        for var in 0..n_gmm_vars {
            if spec.gmm.collapse {
                cols.push(ZCol::LevelDiff { var, time: None });
            } else {
                for ti in 2..t {
                    cols.push(ZCol::LevelDiff { var, time: Some(ti) });
                }
            }
        }
    }
    for &reg in exog_idx {
        cols.push(ZCol::IvExog { reg });
    }
    for &year in dummy_years {
        cols.push(ZCol::IvDummy { year });
    }
    cols.push(ZCol::IvConst);
    cols
}

#[allow(clippy::too_many_arguments)]
fn country_block(
    panel: &PanelDataset,
    z_cols: &[ZCol],
    dep: &[Option<f64>],
    regs: &[&[Option<f64>]],
    endo_idx: &[usize],
    dummy_years: &[i32],
    ci: usize,
    t: usize,
    k: usize,
) -> CountryBlock {
    let at = |col: &[Option<f64>], ti: usize| col[ci * t + ti];
    let n_reg = regs.len();
    let gmm_vars: Vec<&[Option<f64>]> =
        std::iter::once(dep).chain(endo_idx.iter().map(|&i| regs[i])).collect();

    let mut diff_times = Vec::new();
    let mut level_times = Vec::new();
    for ti in 1..t {
        if at(dep, ti).is_some()
            && at(dep, ti - 1).is_some()
            && regs.iter().all(|r| at(r, ti).is_some())
        {
            level_times.push(ti);
        }
        if ti >= 2
            && at(dep, ti).is_some()
            && at(dep, ti - 1).is_some()
            && at(dep, ti - 2).is_some()
            && regs.iter().all(|r| at(r, ti).is_some() && at(r, ti - 1).is_some())
        {
            diff_times.push(ti);
        }
    }

    let rows = diff_times.len() + level_times.len();
    let mut s = DMatrix::<f64>::zeros(rows, k);
    let mut q = DVector::<f64>::zeros(rows);
    let mut z = DMatrix::<f64>::zeros(rows, z_cols.len());
    let mut diff_rows = Vec::new();
    let mut level_rows = Vec::new();

    // instrument value of a column at (equation row, time)
    let z_value = |col: &ZCol, ti: usize, differenced: bool| -> f64 {
        match *col {
            ZCol::DiffLag { var, lag, time } => {
                if !differenced || time.is_some_and(|pin| pin != ti) || ti < lag {
                    0.0
                } else {
                    at(gmm_vars[var], ti - lag).unwrap_or(0.0)
                }
            }
            ZCol::LevelDiff { var, time } => {
                if differenced || time.is_some_and(|pin| pin != ti) || ti < 2 {
                    0.0
                } else {
                    match (at(gmm_vars[var], ti - 1), at(gmm_vars[var], ti - 2)) {
                        (Some(a), Some(b)) => a - b,
                        _ => 0.0,
                    }
                }
            }
            ZCol::IvExog { reg } => {
                if differenced {
                    match (at(regs[reg], ti), at(regs[reg], ti - 1)) {
                        (Some(a), Some(b)) => a - b,
                        _ => 0.0,
                    }
                } else {
                    at(regs[reg], ti).unwrap_or(0.0)
                }
            }
            ZCol::IvDummy { year } => {
                let now = panel.years()[ti];
                if differenced {
                    let prev = panel.years()[ti - 1];
                    if year == now {
                        1.0
                    } else if year == prev {
                        -1.0
                    } else {
                        0.0
                    }
                } else if year == now {
                    1.0
                } else {
                    0.0
                }
            }
            ZCol::IvConst => {
                if differenced {
                    0.0
                } else {
                    1.0
                }
            }
        }
    };

    for (r, &ti) in diff_times.iter().enumerate() {
        diff_rows.push((r, ti));
        q[r] = at(dep, ti).unwrap() - at(dep, ti - 1).unwrap();
        s[(r, 0)] = at(dep, ti - 1).unwrap() - at(dep, ti - 2).unwrap();
        for (j, reg) in regs.iter().enumerate() {
            s[(r, 1 + j)] = at(reg, ti).unwrap() - at(reg, ti - 1).unwrap();
        }
        let year = panel.years()[ti];
        let prev = panel.years()[ti - 1];
        for (dj, dy) in dummy_years.iter().enumerate() {
            s[(r, 1 + n_reg + dj)] = if *dy == year {
                1.0
            } else if *dy == prev {
                -1.0
            } else {
                0.0
            };
        }
        // the constant differences out of the transformed equation
        for (col_idx, col) in z_cols.iter().enumerate() {
            z[(r, col_idx)] = z_value(col, ti, true);
        }
    }
    for (i, &ti) in level_times.iter().enumerate() {
        let r = diff_times.len() + i;
        level_rows.push((r, ti));
        q[r] = at(dep, ti).unwrap();
        s[(r, 0)] = at(dep, ti - 1).unwrap();
        for (j, reg) in regs.iter().enumerate() {
            s[(r, 1 + j)] = at(reg, ti).unwrap();
        }
        for (dj, dy) in dummy_years.iter().enumerate() {
            s[(r, 1 + n_reg + dj)] = if *dy == panel.years()[ti] { 1.0 } else { 0.0 };
        }
        s[(r, k - 1)] = 1.0;
        for (col_idx, col) in z_cols.iter().enumerate() {
            z[(r, col_idx)] = z_value(col, ti, false);
        }
    }

    CountryBlock { country: ci, s, q, z, diff_rows, level_rows }
}

/// One-step weighting kernel: tridiagonal (2, -1) over temporally adjacent
/// differenced rows, identity over the levels block.
fn h_matrix(block: &CountryBlock) -> DMatrix<f64> {
    let rows = block.q.len();
    let mut h = DMatrix::<f64>::identity(rows, rows);
    for &(ra, ta) in &block.diff_rows {
        h[(ra, ra)] = 2.0;
        for &(rb, tb) in &block.diff_rows {
            if tb == ta + 1 {
                h[(ra, rb)] = -1.0;
                h[(rb, ra)] = -1.0;
            }
        }
    }
    h
}

fn gmm_solve(
    g: &DMatrix<f64>,
    w: &DMatrix<f64>,
    zq: &DVector<f64>,
    names: &[String],
) -> Result<DVector<f64>> {
    let a = g.transpose() * w * g;
    let b = g.transpose() * w * zq;
    let (inv, pinv) = linalg::sym_inverse(&a)?;
    if pinv {
        // happens when the clustered moment covariance has rank below the
        // instrument count (few countries, many instruments); the
        // minimum-norm solution is reported, matching the generalized
        // inverse convention
        log::warn!(
            "singular GMM moment matrix for {names:?}; using a generalized inverse"
        );
    }
    Ok(inv * b)
}

#[allow(clippy::too_many_arguments)]
fn windmeijer_correct(
    blocks: &[CountryBlock],
    z_blocks: &[DMatrix<f64>],
    g: &DMatrix<f64>,
    w2: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    u1: &[DVector<f64>],
    v1_robust: &DMatrix<f64>,
    beta2: &DVector<f64>,
) -> DMatrix<f64> {
    let l = w2.nrows();
    let k = g.ncols();
    let mut m2 = DVector::<f64>::zeros(l);
    for (b, z) in blocks.iter().zip(z_blocks) {
        let u2 = &b.q - &b.s * beta2;
        m2 += z.transpose() * u2;
    }

    let gt_w = g.transpose() * w2;
    let mut d = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        // dOmega/dbeta_j at the one-step residuals, with the sign from
        // dW/dbeta_j = -W (dOmega/dbeta_j) W already folded in
        let mut omega_j = DMatrix::<f64>::zeros(l, l);
        for ((b, z), u) in blocks.iter().zip(z_blocks).zip(u1) {
            let zs = z.transpose() * b.s.column(j);
            let zu = z.transpose() * u;
            omega_j += &zs * zu.transpose() + &zu * zs.transpose();
        }
        let col = a2 * &gt_w * omega_j * w2 * &m2;
        d.set_column(j, &col);
    }

    a2 + &d * a2 + a2 * d.transpose() + &d * v1_robust * d.transpose()
}

/// Hansen J overidentification statistic: the minimized two-step
/// criterion, chi-square with (instruments - parameters) dof; identically
/// zero when just-identified.
pub fn hansen_j(gmm: &GmmResult) -> TestResult {
    let l = gmm.instrument_count;
    let k = gmm.n_params;
    if l <= k {
        return TestResult { statistic: 0.0, p: 1.0, dof: 0, flag: None };
    }
    let mut m = DVector::<f64>::zeros(l);
    for (z, u) in gmm.z_blocks.iter().zip(&gmm.final_resid) {
        m += z.transpose() * u;
    }
    let statistic = (m.transpose() * &gmm.weight_final * &m)[(0, 0)].max(0.0);
    let dof = l - k;
    TestResult { statistic, p: linalg::chi_square_sf(statistic, dof), dof, flag: None }
}

/// Arellano-Bond z test for order-`order` serial correlation of the
/// differenced residuals.
pub fn arellano_bond_ar(gmm: &GmmResult, order: usize) -> Result<TestResult> {
    if order == 0 {
        return Err(Error::Validation("autocorrelation order must be at least 1".into()));
    }
    let k = gmm.n_params;
    let l = gmm.weight_final.nrows();
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    let mut h = DVector::<f64>::zeros(k);
    let mut gvec = DVector::<f64>::zeros(l);
    let mut pairs = 0usize;

    for (ci, diff_rows) in gmm.diff_rows.iter().enumerate() {
        let u = &gmm.final_resid[ci];
        let mut w = DVector::<f64>::zeros(u.len());
        for &(row, ti) in diff_rows {
            if let Some(&(lag_row, _)) = diff_rows.iter().find(|&&(_, lt)| lt + order == ti) {
                w[row] = u[lag_row];
                pairs += 1;
            }
        }
        let wu = w.dot(u);
        d0 += wu;
        d1 += wu * wu;
        h += gmm.s_blocks[ci].transpose() * &w;
        gvec += gmm.z_blocks[ci].transpose() * u * wu;
    }
    if pairs == 0 {
        return Err(Error::Validation(format!("too few periods for AR({order}) test")));
    }

    let middle = -2.0 * (gmm.proj.transpose() * &h).dot(&gvec);
    let last = (h.transpose() * &gmm.var_beta * &h)[(0, 0)];
    let variance = d1 + middle + last;
    if variance <= 0.0 {
        return Err(Error::Computation(format!(
            "non-positive AR({order}) variance estimate {variance:.3e}"
        )));
    }
    let z = d0 / variance.sqrt();
    Ok(TestResult { statistic: z, p: linalg::normal_two_sided_p(z), dof: 1, flag: None })
}
