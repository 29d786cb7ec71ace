//! Pipeline configuration: a TOML file mirrored by CLI flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::centrality::{PageRankMode, PageRankOptions};
use crate::econ::{GmmOptions, GmmSteps, RegressionSpec};
use crate::error::{Error, Result};
use crate::indicators::TradeCostMode;
use crate::panel::TNC_MEASURES;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub inputs: InputsConfig,
    pub network: NetworkConfig,
    #[serde(default)]
    pub centrality: CentralityConfig,
    pub panel: PanelConfig,
    pub output: OutputConfig,
    #[serde(default, rename = "regression")]
    pub regressions: Vec<RegressionConfig>,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsConfig {
    pub flows: PathBuf,
    #[serde(rename = "macro")]
    pub macro_table: PathBuf,
    pub memberships: PathBuf,
    pub tariffs: PathBuf,
    pub universe: PathBuf,
    /// Skip malformed flow rows instead of aborting.
    #[serde(default)]
    pub skip_malformed: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub year_start: i32,
    pub year_end: i32,
    /// "on" applies the first-quartile edge filter.
    #[serde(default = "default_on")]
    pub filter: String,
    /// "per-year" or "pooled".
    #[serde(default = "default_per_year")]
    pub quartile_mode: String,
}

fn default_on() -> String {
    "on".into()
}

fn default_per_year() -> String {
    "per-year".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentralityConfig {
    /// "weighted" or "binary".
    #[serde(default = "default_weighted")]
    pub pagerank_mode: String,
    #[serde(default = "default_damping")]
    pub pagerank_damping: f64,
    #[serde(default = "default_tol")]
    pub pagerank_tol: f64,
    #[serde(default = "default_max_iter")]
    pub pagerank_max_iter: usize,
}

impl Default for CentralityConfig {
    fn default() -> Self {
        CentralityConfig {
            pagerank_mode: default_weighted(),
            pagerank_damping: default_damping(),
            pagerank_tol: default_tol(),
            pagerank_max_iter: default_max_iter(),
        }
    }
}

fn default_weighted() -> String {
    "weighted".into()
}

fn default_damping() -> f64 {
    0.85
}

fn default_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    1000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelConfig {
    pub year_start: i32,
    pub year_end: i32,
    #[serde(default = "default_epsilon")]
    pub log_epsilon: f64,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    #[serde(default = "default_top_k")]
    pub ranking_top_k: usize,
    /// Country filter for the figure series; empty means all countries.
    #[serde(default)]
    pub figure_countries: Vec<String>,
    /// "country-count" or "tariff-share".
    #[serde(default = "default_tc_mode")]
    pub trade_cost_mode: String,
}

fn default_epsilon() -> f64 {
    1e-6
}

fn default_max_lag() -> usize {
    1
}

fn default_top_k() -> usize {
    10
}

fn default_tc_mode() -> String {
    "country-count".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionConfig {
    pub dependent: String,
    #[serde(default = "default_regressors")]
    pub regressors: Vec<String>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<String>,
    #[serde(default)]
    pub endogenous: Vec<String>,
    #[serde(default = "default_true")]
    pub year_dummies: bool,
    #[serde(default)]
    pub gmm: GmmConfig,
}

pub fn default_regressors() -> Vec<String> {
    ["rgdpc", "hc", "pop", "tc", "infra", "iqi", "rta", "fdi", "ofr", "crisis"]
        .map(String::from)
        .to_vec()
}

fn default_estimators() -> Vec<String> {
    ["pooled_ols", "fixed_effects", "random_effects", "system_gmm"]
        .map(String::from)
        .to_vec()
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmmConfig {
    #[serde(default = "default_lag_min")]
    pub lag_min: usize,
    #[serde(default = "default_lag_max")]
    pub lag_max: usize,
    #[serde(default = "default_true")]
    pub collapse: bool,
    /// "one" or "two".
    #[serde(default = "default_two")]
    pub steps: String,
    #[serde(default = "default_true")]
    pub windmeijer: bool,
    #[serde(default = "default_true")]
    pub level_instruments: bool,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            lag_min: default_lag_min(),
            lag_max: default_lag_max(),
            collapse: true,
            steps: default_two(),
            windmeijer: true,
            level_instruments: true,
        }
    }
}

fn default_lag_min() -> usize {
    2
}

fn default_lag_max() -> usize {
    4
}

fn default_two() -> String {
    "two".into()
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = Self::from_toml(&text)?;
        // paths are relative to the config file
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    pub fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.inputs.flows,
            &mut self.inputs.macro_table,
            &mut self.inputs.memberships,
            &mut self.inputs.tariffs,
            &mut self.inputs.universe,
            &mut self.output.dir,
        ] {
            if p.is_relative() {
                *p = base.join(&p);
            }
        }
    }

    /// Structural checks plus input-file existence.
    pub fn validate(&self) -> Result<()> {
        if self.network.year_end < self.network.year_start {
            return Err(Error::Validation("network year range is empty".into()));
        }
        if self.panel.year_end < self.panel.year_start {
            return Err(Error::Validation("panel year range is empty".into()));
        }
        if self.panel.year_start < self.network.year_start
            || self.panel.year_end > self.network.year_end
        {
            return Err(Error::Validation(
                "panel years must lie within the network years".into(),
            ));
        }
        if !(0.0 < self.centrality.pagerank_damping && self.centrality.pagerank_damping < 1.0) {
            return Err(Error::Validation("pagerank damping must be in (0,1)".into()));
        }
        if self.panel.log_epsilon <= 0.0 {
            return Err(Error::Validation("log epsilon must be positive".into()));
        }
        self.filter_on()?;
        self.quartile_per_year()?;
        self.pagerank_options()?;
        self.trade_cost_mode()?;
        for r in &self.regressions {
            if !TNC_MEASURES.contains(&r.dependent.as_str()) {
                return Err(Error::Validation(format!(
                    "unknown dependent measure {}; expected one of {TNC_MEASURES:?}",
                    r.dependent
                )));
            }
            r.to_spec()?.validate()?;
            for e in &r.estimators {
                if !["pooled_ols", "fixed_effects", "random_effects", "system_gmm"]
                    .contains(&e.as_str())
                {
                    return Err(Error::Validation(format!("unknown estimator {e}")));
                }
            }
        }
        for path in [
            &self.inputs.flows,
            &self.inputs.macro_table,
            &self.inputs.memberships,
            &self.inputs.tariffs,
            &self.inputs.universe,
        ] {
            if !path.exists() {
                return Err(Error::Validation(format!(
                    "input file {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn filter_on(&self) -> Result<bool> {
        match self.network.filter.as_str() {
            "on" => Ok(true),
            "off" => Ok(false),
            other => Err(Error::Validation(format!("filter must be on|off, got {other}"))),
        }
    }

    pub fn quartile_per_year(&self) -> Result<bool> {
        match self.network.quartile_mode.as_str() {
            "per-year" => Ok(true),
            "pooled" => Ok(false),
            other => Err(Error::Validation(format!(
                "quartile_mode must be per-year|pooled, got {other}"
            ))),
        }
    }

    pub fn pagerank_options(&self) -> Result<PageRankOptions> {
        let mode = match self.centrality.pagerank_mode.as_str() {
            "weighted" => PageRankMode::Weighted,
            "binary" => PageRankMode::Binary,
            other => {
                return Err(Error::Validation(format!(
                    "pagerank_mode must be weighted|binary, got {other}"
                )))
            }
        };
        Ok(PageRankOptions {
            damping: self.centrality.pagerank_damping,
            mode,
            tol: self.centrality.pagerank_tol,
            max_iter: self.centrality.pagerank_max_iter,
        })
    }

    pub fn trade_cost_mode(&self) -> Result<TradeCostMode> {
        match self.panel.trade_cost_mode.as_str() {
            "country-count" => Ok(TradeCostMode::CountryCount),
            "tariff-share" => Ok(TradeCostMode::TariffShare),
            other => Err(Error::Validation(format!(
                "trade_cost_mode must be country-count|tariff-share, got {other}"
            ))),
        }
    }
}

impl RegressionConfig {
    pub fn to_spec(&self) -> Result<RegressionSpec> {
        let steps = match self.gmm.steps.as_str() {
            "one" => GmmSteps::One,
            "two" => GmmSteps::Two,
            other => {
                return Err(Error::Validation(format!("gmm steps must be one|two, got {other}")))
            }
        };
        Ok(RegressionSpec {
            dependent: self.dependent.clone(),
            regressors: self.regressors.clone(),
            include_lagged_dependent: false, // set per estimator by the pipeline
            endogenous: self.endogenous.clone(),
            year_dummies: self.year_dummies,
            gmm: GmmOptions {
                lag_min: self.gmm.lag_min,
                lag_max: self.gmm.lag_max,
                collapse: self.gmm.collapse,
                steps,
                windmeijer: self.gmm.windmeijer,
                level_instruments: self.gmm.level_instruments,
            },
        })
    }
}

/// The eight default model blocks with the per-measure endogenous sets.
pub fn default_regressions() -> Vec<RegressionConfig> {
    let endogenous: [(&str, &[&str]); 8] = [
        ("s_in", &["rgdpc", "hc"]),
        ("s_out", &["rgdpc", "hc", "rta"]),
        ("pagerank", &["rgdpc"]),
        ("betweenness", &["rgdpc", "hc"]),
        ("rwb", &["rgdpc", "hc", "iqi"]),
        ("closeness", &["rgdpc", "hc", "infra"]),
        ("clustering", &["rgdpc", "iqi"]),
        ("kcore", &["rgdpc", "hc"]),
    ];
    endogenous
        .iter()
        .map(|(dep, endo)| RegressionConfig {
            dependent: dep.to_string(),
            regressors: default_regressors(),
            estimators: ["pooled_ols", "fixed_effects", "random_effects", "system_gmm"]
                .map(String::from)
                .to_vec(),
            endogenous: endo.iter().map(|s| s.to_string()).collect(),
            year_dummies: true,
            gmm: GmmConfig::default(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7

[inputs]
flows = "flows.csv"
macro = "macro.csv"
memberships = "memberships.csv"
tariffs = "tariffs.csv"
universe = "countries.txt"

[network]
year_start = 2000
year_end = 2019

[panel]
year_start = 2002
year_end = 2019

[output]
dir = "out"
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = PipelineConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.network.filter, "on");
        assert!(c.filter_on().unwrap());
        assert!(c.quartile_per_year().unwrap());
        assert_eq!(c.centrality.pagerank_damping, 0.85);
        assert_eq!(c.panel.max_lag, 1);
        assert!(c.regressions.is_empty());
    }

    #[test]
    fn validation_rejects_bad_ranges_and_missing_files() {
        let mut c = PipelineConfig::from_toml(MINIMAL).unwrap();
        c.panel.year_start = 1999;
        assert!(c.validate().is_err());

        let mut c = PipelineConfig::from_toml(MINIMAL).unwrap();
        c.network.filter = "maybe".into();
        assert!(c.validate().is_err());

        let c = PipelineConfig::from_toml(MINIMAL).unwrap();
        // input files do not exist in the test cwd
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_regressions_cover_all_measures() {
        let blocks = default_regressions();
        assert_eq!(blocks.len(), 8);
        for b in &blocks {
            assert!(b.to_spec().is_ok());
        }
    }
}
