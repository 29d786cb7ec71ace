//! End-to-end pipeline: ingest -> graphs -> centralities -> indices ->
//! panel -> estimators -> reports.
//!
//! Every artifact is a deterministic function of the inputs and the
//! config; reruns with identical inputs are byte-identical. On failure the
//! files written so far are removed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::centrality::{compute_all, CentralityOptions, CentralityRecord};
use crate::config::PipelineConfig;
use crate::country::{CountryCode, Universe};
use crate::csvio::{fmt_sig, write_csv, write_text};
use crate::econ::{
    arellano_bond_ar, breusch_godfrey, breusch_pagan_lm, durbin_wu_hausman, fixed_effects_within,
    hansen_j, hausman_test, heteroskedasticity_test, pooled_ols, random_effects_gls, system_gmm,
    wald_joint, CovMode, RegressionResult, RegressionSpec,
};
use crate::error::{Error, Result};
use crate::flow::{read_flows_csv, FlowRecord};
use crate::graph::{
    build_yearly_graph, evolution_series, quartile_threshold, EdgeFilter, YearlyTradeGraph,
};
use crate::indicators::{
    apply_log_policy, build_covariates, read_macro_csv, read_memberships_csv, read_tariffs_csv,
    CovariateOptions,
};
use crate::panel::{
    add_lags, assemble, correlation_matrix, descriptive_stats, measure_value, top_k_ranking,
    PanelDataset, TNC_MEASURES,
};

/// What a `run` produced.
#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub countries_retained: usize,
    pub panel_rows: usize,
}

/// Tracks written artifacts so a failed run can clean up after itself.
struct ArtifactWriter {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl ArtifactWriter {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(ArtifactWriter { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        write_csv(&path, header, rows)?;
        self.files.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_text(&path, content)?;
        self.files.push(path);
        Ok(())
    }

    fn remove_all(&self) {
        for f in &self.files {
            let _ = std::fs::remove_file(f);
        }
    }
}

/// Run the full pipeline for a validated config. `config_text` is hashed
/// into the manifest.
pub fn run_pipeline(config: &PipelineConfig, config_text: &str) -> Result<RunSummary> {
    config.validate()?;
    let mut writer = ArtifactWriter::new(&config.output.dir)?;
    match run_stages(config, config_text, &mut writer) {
        Ok(summary) => Ok(summary),
        Err(e) => {
            writer.remove_all();
            Err(e)
        }
    }
}

fn run_stages(
    config: &PipelineConfig,
    config_text: &str,
    writer: &mut ArtifactWriter,
) -> Result<RunSummary> {
    // ---- ingest ----------------------------------------------------------
    let universe_text = std::fs::read_to_string(&config.inputs.universe).map_err(|source| {
        Error::Io { path: config.inputs.universe.display().to_string(), source }
    })?;
    let universe = Universe::from_lines(&universe_text)?;
    let flows = read_flows_csv(&config.inputs.flows, config.inputs.skip_malformed)?;
    let macros = read_macro_csv(&config.inputs.macro_table)?;
    let memberships = read_memberships_csv(&config.inputs.memberships)?;
    let tariffs = read_tariffs_csv(&config.inputs.tariffs)?;

    // ---- yearly graphs ---------------------------------------------------
    let graphs = build_graphs(config, &flows, &universe)?;

    // ---- network evolution -----------------------------------------------
    let stats = evolution_series(&graphs)?;
    let evolution_rows: Vec<Vec<String>> = stats
        .iter()
        .map(|s| {
            vec![
                s.year.to_string(),
                s.edge_count.to_string(),
                fmt_sig(s.average_degree),
                fmt_sig(s.density),
                fmt_sig(s.average_clustering),
            ]
        })
        .collect();
    writer.csv(
        "evolution.csv",
        &["year", "edge_count", "average_degree", "density", "average_clustering"],
        &evolution_rows,
    )?;

    // ---- centralities ------------------------------------------------------
    let centrality_options = CentralityOptions { pagerank: config.pagerank_options()? };
    let mut records: Vec<CentralityRecord> = Vec::new();
    for graph in &graphs {
        let year_records = compute_all(graph, &centrality_options)?;
        writer.csv(
            &format!("centrality_{}.csv", graph.year()),
            &CENTRALITY_HEADER,
            &year_records.iter().map(centrality_row).collect::<Vec<_>>(),
        )?;
        records.extend(year_records);
    }

    // ---- covariates and panel ---------------------------------------------
    let covariate_options = CovariateOptions { tc_mode: config.trade_cost_mode()? };
    let covariates = build_covariates(&macros, &memberships, &tariffs, &covariate_options)?;
    let mut panel =
        assemble(&records, &covariates, (config.panel.year_start, config.panel.year_end))?;
    apply_log_policy(&mut panel, config.panel.log_epsilon)?;
    let base_variables = panel.variables();
    add_lags(&mut panel, &base_variables, config.panel.max_lag)?;
    write_panel(writer, &panel)?;

    // ---- descriptive outputs ----------------------------------------------
    for measure in TNC_MEASURES {
        let mut rows = Vec::new();
        for year in config.panel.year_start..=config.panel.year_end {
            let ranked = top_k_ranking(&records, measure, year, config.panel.ranking_top_k)?;
            for (rank, (country, value)) in ranked.iter().enumerate() {
                rows.push(vec![
                    year.to_string(),
                    (rank + 1).to_string(),
                    country.to_string(),
                    fmt_sig(*value),
                ]);
            }
        }
        writer.csv(
            &format!("rankings_{measure}.csv"),
            &["year", "rank", "country", "value"],
            &rows,
        )?;
    }

    let corr_vars: Vec<String> = TNC_MEASURES
        .iter()
        .map(|m| m.to_string())
        .chain(["rgdpc", "pop", "hc", "iqi"].map(String::from))
        .collect();
    let corr = correlation_matrix(&panel, &corr_vars)?;
    let mut corr_header = vec!["variable"];
    corr_header.extend(corr_vars.iter().map(|s| s.as_str()));
    let corr_rows: Vec<Vec<String>> = corr_vars
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut row = vec![v.clone()];
            row.extend(corr[i].iter().map(|x| fmt_sig(*x)));
            row
        })
        .collect();
    writer.csv("corr.csv", &corr_header, &corr_rows)?;

    let summaries = descriptive_stats(&panel, &base_variables)?;
    let desc_rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            vec![
                s.variable.clone(),
                s.obs.to_string(),
                fmt_sig(s.mean),
                fmt_sig(s.sd),
                fmt_sig(s.min),
                fmt_sig(s.max),
            ]
        })
        .collect();
    writer.csv("descriptives.csv", &["variable", "obs", "mean", "sd", "min", "max"], &desc_rows)?;

    let figure_rows = emit_figure_series(&records, &config.panel.figure_countries, &universe)?;
    writer.csv("figure_series.csv", &["measure", "country", "year", "value"], &figure_rows)?;

    // ---- estimators --------------------------------------------------------
    for block in &config.regressions {
        run_regressions(writer, &panel, &flows, block)?;
    }

    // ---- manifest ----------------------------------------------------------
    let mut hasher = Sha256::new();
    hasher.update(config_text.as_bytes());
    let config_hash = hex_digest(hasher);
    let manifest = format!(
        "tool=tradenet {}\nconfig_sha256={}\nseed={}\ncountries={}\npanel_rows={}\nartifacts={}\n",
        env!("CARGO_PKG_VERSION"),
        config_hash,
        config.seed,
        panel.n_countries(),
        panel.row_count(),
        writer.files.len() + 1,
    );
    writer.text("manifest.txt", &manifest)?;

    Ok(RunSummary {
        out_dir: writer.dir.clone(),
        files: writer.files.clone(),
        countries_retained: panel.n_countries(),
        panel_rows: panel.row_count(),
    })
}

fn hex_digest(hasher: Sha256) -> String {
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Group flows by year and build each yearly graph; the pooled quartile
/// mode thresholds every year at the all-years first quartile of the
/// summed pair flows.
pub fn build_graphs(
    config: &PipelineConfig,
    flows: &[FlowRecord],
    universe: &Universe,
) -> Result<Vec<YearlyTradeGraph>> {
    let filter_on = config.filter_on()?;
    let per_year = config.quartile_per_year()?;

    let mut by_year: BTreeMap<i32, Vec<FlowRecord>> = BTreeMap::new();
    for year in config.network.year_start..=config.network.year_end {
        by_year.insert(year, Vec::new());
    }
    for f in flows {
        if let Some(bucket) = by_year.get_mut(&f.year) {
            bucket.push(*f);
        }
        // flows outside the configured range are ignored
    }

    let pooled_threshold = if filter_on && !per_year {
        let mut pair_sums: BTreeMap<(i32, CountryCode, CountryCode), f64> = BTreeMap::new();
        for f in flows {
            if (config.network.year_start..=config.network.year_end).contains(&f.year) {
                *pair_sums.entry((f.year, f.origin, f.destination)).or_insert(0.0) += f.value;
            }
        }
        let positive: Vec<f64> = pair_sums.values().copied().filter(|v| *v > 0.0).collect();
        if positive.is_empty() {
            None
        } else {
            Some(quartile_threshold(&positive)?)
        }
    } else {
        None
    };

    by_year
        .iter()
        .map(|(year, year_flows)| {
            let filter = if !filter_on {
                EdgeFilter::Off
            } else if per_year {
                EdgeFilter::PerYear
            } else {
                match pooled_threshold {
                    Some(threshold) => EdgeFilter::Pooled { threshold },
                    None => EdgeFilter::Off,
                }
            };
            build_yearly_graph(year_flows, *year, universe, filter)
        })
        .collect()
}

const CENTRALITY_HEADER: [&str; 13] = [
    "country",
    "year",
    "k_in",
    "k_out",
    "s_in",
    "s_out",
    "pagerank",
    "betweenness",
    "betweenness_norm",
    "rwb",
    "closeness",
    "clustering",
    "kcore",
];

fn centrality_row(r: &CentralityRecord) -> Vec<String> {
    vec![
        r.country.to_string(),
        r.year.to_string(),
        r.k_in.to_string(),
        r.k_out.to_string(),
        fmt_sig(r.s_in),
        fmt_sig(r.s_out),
        fmt_sig(r.pagerank),
        fmt_sig(r.betweenness),
        fmt_sig(r.betweenness_norm),
        fmt_sig(r.rwb),
        fmt_sig(r.closeness),
        fmt_sig(r.clustering),
        r.kcore.to_string(),
    ]
}

fn write_panel(writer: &mut ArtifactWriter, panel: &PanelDataset) -> Result<()> {
    let variables = panel.variables();
    let mut header = vec!["country".to_string(), "year".to_string()];
    header.extend(variables.iter().cloned());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let columns: Vec<&[Option<f64>]> =
        variables.iter().map(|v| panel.column(v)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(panel.row_count());
    for row in 0..panel.row_count() {
        let (country, year) = panel.row_key(row);
        let mut cells = vec![country.to_string(), year.to_string()];
        for col in &columns {
            cells.push(col[row].map(fmt_sig).unwrap_or_default());
        }
        rows.push(cells);
    }
    writer.csv("panel.csv", &header_refs, &rows)
}

/// Long-format `measure,country,year,value` rows for external plotting.
/// An empty filter emits every country; unknown filter entries are skipped
/// with a warning.
pub fn emit_figure_series(
    records: &[CentralityRecord],
    filter: &[String],
    universe: &Universe,
) -> Result<Vec<Vec<String>>> {
    let mut wanted: Vec<CountryCode> = Vec::new();
    for name in filter {
        match CountryCode::new(name) {
            Ok(code) if universe.contains(code) => wanted.push(code),
            _ => log::warn!("figure series: unknown country {name:?} skipped"),
        }
    }
    let all_measures = [
        "k_in",
        "k_out",
        "s_in",
        "s_out",
        "pagerank",
        "betweenness",
        "betweenness_raw",
        "rwb",
        "closeness",
        "clustering",
        "kcore",
    ];
    let mut rows = Vec::new();
    for measure in all_measures {
        for r in records {
            if wanted.is_empty() || wanted.contains(&r.country) {
                rows.push(vec![
                    measure.to_string(),
                    r.country.to_string(),
                    r.year.to_string(),
                    fmt_sig(measure_value(r, measure)?),
                ]);
            }
        }
    }
    Ok(rows)
}

fn run_regressions(
    writer: &mut ArtifactWriter,
    panel: &PanelDataset,
    flows: &[FlowRecord],
    block: &crate::config::RegressionConfig,
) -> Result<()> {
    let mut spec = block.to_spec()?;
    let measure = &block.dependent;

    // a regressor that never varies (e.g. the crisis dummy when the panel
    // window has no crisis years) is collinear with the intercept
    let constant = constant_regressors(panel, &spec.regressors)?;
    if !constant.is_empty() {
        log::warn!("{measure}: dropping constant regressors {constant:?}");
        spec.regressors.retain(|r| !constant.contains(r));
        spec.endogenous.retain(|r| !constant.contains(r));
    }
    let invariant = time_invariant_regressors(panel, &spec.regressors)?;

    let mut static_results: BTreeMap<&str, RegressionResult> = BTreeMap::new();
    for estimator in &block.estimators {
        match estimator.as_str() {
            "pooled_ols" => {
                let r = pooled_ols(panel, &spec, CovMode::Clustered)?;
                write_static_result(writer, measure, &r)?;
                static_results.insert("pooled_ols", r);
            }
            "fixed_effects" => {
                // time-invariant regressors cannot be identified within;
                // omit them the way standard FE software does
                let mut fe_spec = spec.clone();
                if !invariant.is_empty() {
                    log::warn!(
                        "fixed effects for {measure}: omitting time-invariant {invariant:?}"
                    );
                    fe_spec.regressors.retain(|r| !invariant.contains(r));
                    fe_spec.endogenous.retain(|r| !invariant.contains(r));
                }
                let r = fixed_effects_within(panel, &fe_spec, CovMode::Clustered)?;
                write_static_result(writer, measure, &r)?;
                static_results.insert("fixed_effects", r);
            }
            "random_effects" => {
                let r = random_effects_gls(panel, &spec)?;
                write_static_result(writer, measure, &r)?;
                static_results.insert("random_effects", r);
            }
            "system_gmm" => {
                let mut dynamic = spec.clone();
                dynamic.include_lagged_dependent = true;
                let gmm = system_gmm(panel, &dynamic)?;
                write_gmm_result(writer, measure, &dynamic, &gmm)?;
            }
            other => return Err(Error::Validation(format!("unknown estimator {other}"))),
        }
    }

    // Table A.4-style diagnostics need the pooled / FE / RE trio
    if let (Some(pooled), Some(fe), Some(re)) = (
        static_results.get("pooled_ols"),
        static_results.get("fixed_effects"),
        static_results.get("random_effects"),
    ) {
        let bp = breusch_pagan_lm(pooled)?;
        let hausman = hausman_test(fe, re)?;
        let het = heteroskedasticity_test(pooled)?;
        let bg = breusch_godfrey(pooled, 1)?;
        let rows = vec![
            vec!["breusch_pagan_lm".into(), fmt_sig(bp.statistic), fmt_sig(bp.p)],
            vec!["hausman".into(), fmt_sig(hausman.statistic), fmt_sig(hausman.p)],
            vec!["heteroskedasticity".into(), fmt_sig(het.statistic), fmt_sig(het.p)],
            vec!["breusch_godfrey".into(), fmt_sig(bg.statistic), fmt_sig(bg.p)],
        ];
        writer.csv(
            &format!("diagnostics_{measure}.csv"),
            &["test", "statistic", "p"],
            &rows,
        )?;
    }

    // per-regressor endogeneity screen, instrumenting each suspect with
    // its own lag and the top-5 export-intensity interaction; dummies and
    // time-invariant regressors have no usable own-lag instrument
    let mut endo_rows = Vec::new();
    for suspect in &block.regressors {
        if suspect == "crisis" || invariant.contains(suspect) {
            continue;
        }
        let lag_iv = format!("lag1_{suspect}");
        if !panel.has_column(&lag_iv) {
            continue;
        }
        let mut instruments = vec![lag_iv];
        let external = format!("iv_top5_{suspect}");
        if !panel.has_column(&external) {
            // external instrument column built on the fly from flows
            let mut augmented = panel.clone();
            let col = crate::econ::build_external_instrument(flows, panel, suspect)?;
            augmented.insert_column(external.clone(), col)?;
            instruments.push(external);
            let dwh = durbin_wu_hausman(&augmented, &spec, suspect, &instruments)?;
            endo_rows.push(endogeneity_row(suspect, &dwh));
        } else {
            instruments.push(external);
            let dwh = durbin_wu_hausman(panel, &spec, suspect, &instruments)?;
            endo_rows.push(endogeneity_row(suspect, &dwh));
        }
    }
    if !endo_rows.is_empty() {
        writer.csv(
            &format!("endogeneity_{measure}.csv"),
            &["regressor", "chi2", "p", "first_stage_f", "endogenous_at_5pct"],
            &endo_rows,
        )?;
    }
    Ok(())
}

/// Columns that hold one constant value over the whole panel.
fn constant_regressors(panel: &PanelDataset, regressors: &[String]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for name in regressors {
        let values: Vec<f64> = panel.column(name)?.iter().flatten().copied().collect();
        if let Some(first) = values.first() {
            if values.iter().all(|v| (v - first).abs() <= 1e-12 * first.abs().max(1.0)) {
                out.push(name.clone());
            }
        }
    }
    Ok(out)
}

/// Columns with no within-country variation anywhere in the panel.
fn time_invariant_regressors(panel: &PanelDataset, regressors: &[String]) -> Result<Vec<String>> {
    let t = panel.n_years();
    let mut out = Vec::new();
    for name in regressors {
        let col = panel.column(name)?;
        let mut varies = false;
        'countries: for ci in 0..panel.n_countries() {
            let cells = &col[ci * t..(ci + 1) * t];
            let mut first: Option<f64> = None;
            for cell in cells.iter().flatten() {
                match first {
                    None => first = Some(*cell),
                    Some(v) if (v - cell).abs() > 1e-12 * v.abs().max(1.0) => {
                        varies = true;
                        break 'countries;
                    }
                    _ => {}
                }
            }
        }
        if !varies {
            out.push(name.clone());
        }
    }
    Ok(out)
}

fn endogeneity_row(suspect: &str, dwh: &crate::econ::DwhResult) -> Vec<String> {
    vec![
        suspect.to_string(),
        fmt_sig(dwh.statistic),
        fmt_sig(dwh.p),
        fmt_sig(dwh.first_stage_f),
        if dwh.p < 0.05 { "yes" } else { "no" }.to_string(),
    ]
}

const RESULT_HEADER: [&str; 4] = ["name", "coef", "se", "p"];

fn coefficient_rows(result: &RegressionResult) -> Vec<Vec<String>> {
    result
        .terms
        .iter()
        .map(|t| vec![t.name.clone(), fmt_sig(t.coef), fmt_sig(t.se), fmt_sig(t.p)])
        .collect()
}

fn write_static_result(
    writer: &mut ArtifactWriter,
    measure: &str,
    result: &RegressionResult,
) -> Result<()> {
    let mut rows = coefficient_rows(result);
    let wald = wald_joint(result)?;
    rows.push(vec!["wald_p".into(), fmt_sig(wald.p), String::new(), String::new()]);
    if let Some(r2) = result.r2_adjusted {
        rows.push(vec!["r2_adjusted".into(), fmt_sig(r2), String::new(), String::new()]);
    }
    rows.push(vec!["obs".into(), result.n_obs.to_string(), String::new(), String::new()]);
    writer.csv(
        &format!("results_{measure}_{}.csv", result.estimator),
        &RESULT_HEADER,
        &rows,
    )
}

fn write_gmm_result(
    writer: &mut ArtifactWriter,
    measure: &str,
    spec: &RegressionSpec,
    gmm: &crate::econ::GmmResult,
) -> Result<()> {
    let mut rows = coefficient_rows(&gmm.base);
    let hansen = hansen_j(gmm);
    // the AR variance estimate can degenerate when the instrument count
    // dwarfs the number of countries; report the test as unavailable then
    let ar_cell = |order: usize| match arellano_bond_ar(gmm, order) {
        Ok(t) => fmt_sig(t.p),
        Err(e) => {
            log::warn!("AR({order}) test unavailable for {measure}: {e}");
            String::new()
        }
    };
    let ar1 = ar_cell(1);
    let ar2 = ar_cell(2);
    let wald = wald_joint(&gmm.base)?;
    rows.push(vec!["hansen_p".into(), fmt_sig(hansen.p), String::new(), String::new()]);
    rows.push(vec!["ar1_p".into(), ar1, String::new(), String::new()]);
    rows.push(vec!["ar2_p".into(), ar2, String::new(), String::new()]);
    rows.push(vec![
        "endogenous".into(),
        spec.endogenous.join(";"),
        String::new(),
        String::new(),
    ]);
    rows.push(vec![
        "instruments".into(),
        gmm.instrument_count.to_string(),
        String::new(),
        String::new(),
    ]);
    rows.push(vec!["wald_p".into(), fmt_sig(wald.p), String::new(), String::new()]);
    rows.push(vec!["obs".into(), gmm.base.n_obs.to_string(), String::new(), String::new()]);
    writer.csv(&format!("results_{measure}_system_gmm.csv"), &RESULT_HEADER, &rows)
}
