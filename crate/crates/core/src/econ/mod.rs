//! Panel estimators and their diagnostic battery: pooled OLS, the within
//! (fixed-effects) estimator, Swamy-Arora random effects, Blundell-Bond
//! system GMM, and the specification tests reported alongside them.

mod diagnostics;
mod gmm;
mod instruments;
mod ols;
mod random_effects;
mod within;

pub use diagnostics::{
    breusch_godfrey, breusch_pagan_lm, durbin_wu_hausman, hausman_test, heteroskedasticity_test,
    wald_joint, DwhResult, TestResult,
};
pub use gmm::{arellano_bond_ar, hansen_j, system_gmm, GmmResult};
pub use instruments::{build_external_instrument, top5_export_intensity};
pub use ols::pooled_ols;
pub use random_effects::random_effects_gls;
pub use within::fixed_effects_within;

use nalgebra::{DMatrix, DVector};

use crate::country::CountryCode;
use crate::error::{Error, Result};
use crate::linalg;
use crate::panel::PanelDataset;

/// GMM weighting steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmmSteps {
    One,
    Two,
}

#[derive(Debug, Clone)]
pub struct GmmOptions {
    /// Shallowest lagged level instrumenting the differenced equation
    /// (must be at least 2).
    pub lag_min: usize,
    /// Deepest lag used.
    pub lag_max: usize,
    /// One instrument column per lag depth instead of one per period.
    pub collapse: bool,
    pub steps: GmmSteps,
    /// Windmeijer finite-sample correction for two-step standard errors.
    pub windmeijer: bool,
    /// Also instrument the levels equation with lagged first differences
    /// (the system part; disable for a just-identified setup).
    pub level_instruments: bool,
}

impl Default for GmmOptions {
    fn default() -> Self {
        GmmOptions {
            lag_min: 2,
            lag_max: 4,
            collapse: true,
            steps: GmmSteps::Two,
            windmeijer: true,
            level_instruments: true,
        }
    }
}

/// Declarative model description shared by all estimators.
#[derive(Debug, Clone)]
pub struct RegressionSpec {
    pub dependent: String,
    pub regressors: Vec<String>,
    pub include_lagged_dependent: bool,
    pub endogenous: Vec<String>,
    pub year_dummies: bool,
    pub gmm: GmmOptions,
}

impl RegressionSpec {
    pub fn new(dependent: &str, regressors: &[&str]) -> Self {
        RegressionSpec {
            dependent: dependent.to_string(),
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            include_lagged_dependent: false,
            endogenous: Vec::new(),
            year_dummies: false,
            gmm: GmmOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.endogenous {
            if !self.regressors.contains(e) {
                return Err(Error::Validation(format!(
                    "endogenous variable {e} is not a regressor"
                )));
            }
        }
        if self.gmm.lag_min < 2 {
            return Err(Error::Validation("gmm lag_min must be at least 2".into()));
        }
        if self.gmm.lag_max < self.gmm.lag_min {
            return Err(Error::Validation("gmm lag_max must be >= lag_min".into()));
        }
        Ok(())
    }
}

/// One estimated coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub name: String,
    pub coef: f64,
    pub se: f64,
    pub p: f64,
}

/// Standard-error flavor for the static estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovMode {
    /// Heteroskedasticity-robust (HC1).
    Robust,
    /// Clustered by country (CR1).
    Clustered,
}

/// Estimates plus everything the diagnostic battery needs afterwards.
#[derive(Debug, Clone)]
pub struct RegressionResult {
    pub estimator: String,
    pub dependent: String,
    pub terms: Vec<Term>,
    pub n_obs: usize,
    pub n_countries: usize,
    pub r2_adjusted: Option<f64>,
    /// Covariance matching the reported standard errors.
    pub cov: DMatrix<f64>,
    /// Conventional (non-robust) covariance, used by the Hausman contrast.
    pub cov_classic: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub rows: Vec<(CountryCode, i32)>,
    pub design_names: Vec<String>,
    pub design: DMatrix<f64>,
}

impl RegressionResult {
    pub fn coef(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.coef)
    }

    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }
}

pub(crate) const INTERCEPT: &str = "const";

/// A fully materialized estimation sample.
#[derive(Debug, Clone)]
pub struct Design {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub names: Vec<String>,
    /// (country, year) key of each design row.
    pub rows: Vec<(CountryCode, i32)>,
    /// country index (into the panel registry) of each design row.
    pub country_of: Vec<usize>,
}

impl Design {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_countries(&self) -> usize {
        let mut seen: Vec<usize> = self.country_of.clone();
        seen.dedup();
        seen.len()
    }
}

pub(crate) fn lag_name(dependent: &str) -> String {
    format!("lag1_{dependent}")
}

/// Materialize y and X for `spec` over all panel rows where every needed
/// value is present. The lagged dependent, when requested, is shifted
/// within country on the fly; year dummies drop the first sample year.
pub(crate) fn build_design(
    panel: &PanelDataset,
    spec: &RegressionSpec,
    intercept: bool,
) -> Result<Design> {
    spec.validate()?;
    let t = panel.n_years();
    let dep = panel.column(&spec.dependent)?;
    let reg_cols: Vec<&[Option<f64>]> =
        spec.regressors.iter().map(|r| panel.column(r)).collect::<Result<_>>()?;

    // candidate rows: dependent present, all regressors present, lag present
    let mut keep: Vec<usize> = Vec::new();
    for row in 0..panel.row_count() {
        let ti = row % t;
        let mut ok = dep[row].is_some() && reg_cols.iter().all(|c| c[row].is_some());
        if spec.include_lagged_dependent {
            ok = ok && ti >= 1 && dep[row - 1].is_some();
        }
        if ok {
            keep.push(row);
        }
    }
    if keep.is_empty() {
        return Err(Error::Validation("empty estimation sample".into()));
    }

    let mut names: Vec<String> = Vec::new();
    if intercept {
        names.push(INTERCEPT.to_string());
    }
    if spec.include_lagged_dependent {
        names.push(lag_name(&spec.dependent));
    }
    names.extend(spec.regressors.iter().cloned());

    let mut dummy_years: Vec<i32> = Vec::new();
    if spec.year_dummies {
        let mut years: Vec<i32> = keep.iter().map(|&r| panel.row_key(r).1).collect();
        years.sort_unstable();
        years.dedup();
        dummy_years = years.into_iter().skip(1).collect(); // drop first sample year
    }

    loop {
        let mut names_full = names.clone();
        names_full.extend(dummy_years.iter().map(|y| format!("year_{y}")));
        let n = keep.len();
        let k = names_full.len();
        let mut x = DMatrix::<f64>::zeros(n, k);
        let mut y = DVector::<f64>::zeros(n);
        let mut rows = Vec::with_capacity(n);
        let mut country_of = Vec::with_capacity(n);

        for (i, &row) in keep.iter().enumerate() {
            let (country, year) = panel.row_key(row);
            rows.push((country, year));
            country_of.push(row / t);
            y[i] = dep[row].unwrap();
            let mut j = 0;
            if intercept {
                x[(i, j)] = 1.0;
                j += 1;
            }
            if spec.include_lagged_dependent {
                x[(i, j)] = dep[row - 1].unwrap();
                j += 1;
            }
            for col in &reg_cols {
                x[(i, j)] = col[row].unwrap();
                j += 1;
            }
            for dy in &dummy_years {
                x[(i, j)] = if year == *dy { 1.0 } else { 0.0 };
                j += 1;
            }
        }

        // Exactly collinear year dummies (e.g. with a crisis-window dummy)
        // are dropped and the design rebuilt; collinear user variables are
        // a hard error.
        if let Err(Error::RankDeficient(flagged)) = linalg::check_full_rank(&x, &names_full) {
            if !flagged.is_empty() && flagged.iter().all(|f| f.starts_with("year_")) {
                log::warn!("dropping collinear year dummies: {flagged:?}");
                dummy_years.retain(|y| !flagged.contains(&format!("year_{y}")));
                continue;
            }
        }
        return Ok(Design { y, x, names: names_full, rows, country_of });
    }
}

/// HC1 or CR1 sandwich covariance for an OLS-style fit.
pub(crate) fn sandwich_cov(
    x: &DMatrix<f64>,
    residuals: &DVector<f64>,
    xtx_inv: &DMatrix<f64>,
    country_of: &[usize],
    mode: CovMode,
) -> DMatrix<f64> {
    let n = x.nrows();
    let k = x.ncols();
    let mut meat = DMatrix::<f64>::zeros(k, k);
    match mode {
        CovMode::Robust => {
            for i in 0..n {
                let e2 = residuals[i] * residuals[i];
                let xi = x.row(i);
                for a in 0..k {
                    for b in 0..k {
                        meat[(a, b)] += e2 * xi[a] * xi[b];
                    }
                }
            }
            let scale = n as f64 / (n as f64 - k as f64);
            xtx_inv * meat * xtx_inv * scale
        }
        CovMode::Clustered => {
            let mut scores: std::collections::BTreeMap<usize, DVector<f64>> =
                std::collections::BTreeMap::new();
            for i in 0..n {
                let s = scores
                    .entry(country_of[i])
                    .or_insert_with(|| DVector::zeros(k));
                for a in 0..k {
                    s[a] += x[(i, a)] * residuals[i];
                }
            }
            let g = scores.len() as f64;
            for s in scores.values() {
                meat += s * s.transpose();
            }
            let nf = n as f64;
            let kf = k as f64;
            let scale = if g > 1.0 && nf > kf {
                (g / (g - 1.0)) * ((nf - 1.0) / (nf - kf))
            } else {
                1.0
            };
            xtx_inv * meat * xtx_inv * scale
        }
    }
}

/// p-values from a covariance diagonal, standard-normal reference.
pub(crate) fn terms_from(
    names: &[String],
    beta: &DVector<f64>,
    cov: &DMatrix<f64>,
) -> Vec<Term> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let se = cov[(j, j)].max(0.0).sqrt();
            let p = if se > 0.0 {
                crate::linalg::normal_two_sided_p(beta[j] / se)
            } else {
                f64::NAN
            };
            Term { name: name.clone(), coef: beta[j], se, p }
        })
        .collect()
}
