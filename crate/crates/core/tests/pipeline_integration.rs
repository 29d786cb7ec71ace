//! Full-pipeline integration: synthetic inputs through every stage.

use std::collections::BTreeMap;
use std::path::Path;

use tradenet::config::{default_regressions, PipelineConfig};
use tradenet::pipeline::run_pipeline;
use tradenet::synth::{generate_synthetic, write_synthetic, SyntheticSpec};

fn config_text(data_dir: &Path, out_dir: &Path, years: (i32, i32), panel: (i32, i32)) -> String {
    format!(
        r#"
seed = 42

[inputs]
flows = "{data}/flows.csv"
macro = "{data}/macro.csv"
memberships = "{data}/memberships.csv"
tariffs = "{data}/tariffs.csv"
universe = "{data}/countries.txt"

[network]
year_start = {y0}
year_end = {y1}
filter = "on"

[panel]
year_start = {p0}
year_end = {p1}

[output]
dir = "{out}"

[[regression]]
dependent = "s_in"
endogenous = ["rgdpc", "hc"]
"#,
        data = data_dir.display(),
        out = out_dir.display(),
        y0 = years.0,
        y1 = years.1,
        p0 = panel.0,
        p1 = panel.1,
    )
}

fn tree_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            out.insert(
                entry.file_name().to_string_lossy().to_string(),
                std::fs::read(entry.path()).unwrap(),
            );
        }
    }
    out
}

#[test]
fn ten_country_run_produces_full_artifact_set() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    let out_dir = tmp.path().join("out");
    let data = generate_synthetic(&SyntheticSpec::new(10, 2000, 2009, 11)).unwrap();
    write_synthetic(&data, &data_dir).unwrap();

    let text = config_text(&data_dir, &out_dir, (2000, 2009), (2002, 2007));
    let config = PipelineConfig::from_toml(&text).unwrap();
    let summary = run_pipeline(&config, &text).unwrap();

    // balancing rule: full-coverage synthetic data retains every country
    assert_eq!(summary.countries_retained, 10);
    assert_eq!(summary.panel_rows, 10 * 6);

    for name in [
        "evolution.csv",
        "panel.csv",
        "corr.csv",
        "descriptives.csv",
        "figure_series.csv",
        "manifest.txt",
        "rankings_pagerank.csv",
        "rankings_kcore.csv",
        "centrality_2000.csv",
        "centrality_2009.csv",
        "results_s_in_pooled_ols.csv",
        "results_s_in_fixed_effects.csv",
        "results_s_in_random_effects.csv",
        "results_s_in_system_gmm.csv",
        "diagnostics_s_in.csv",
        "endogeneity_s_in.csv",
    ] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }

    // evolution rows cover every network year
    let evolution = std::fs::read_to_string(out_dir.join("evolution.csv")).unwrap();
    assert_eq!(evolution.lines().count(), 1 + 10);

    // the GMM result carries the Table-2 style footer
    let gmm = std::fs::read_to_string(out_dir.join("results_s_in_system_gmm.csv")).unwrap();
    for footer in ["hansen_p", "ar1_p", "ar2_p", "endogenous", "instruments", "wald_p", "obs"] {
        assert!(gmm.lines().any(|l| l.starts_with(footer)), "{footer} missing in\n{gmm}");
    }
    assert!(gmm.lines().any(|l| l.starts_with("lag1_s_in,")));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    let data = generate_synthetic(&SyntheticSpec::new(8, 2000, 2007, 5)).unwrap();
    write_synthetic(&data, &data_dir).unwrap();

    let out_a = tmp.path().join("out_a");
    let out_b = tmp.path().join("out_b");
    let text_a = config_text(&data_dir, &out_a, (2000, 2007), (2002, 2006));
    let text_b = config_text(&data_dir, &out_b, (2000, 2007), (2002, 2006));
    let config_a = PipelineConfig::from_toml(&text_a).unwrap();
    let config_b = PipelineConfig::from_toml(&text_b).unwrap();
    run_pipeline(&config_a, &text_a).unwrap();
    run_pipeline(&config_b, &text_b).unwrap();

    let a = tree_bytes(&out_a);
    let b = tree_bytes(&out_b);
    let names_a: Vec<&String> = a.keys().collect();
    let names_b: Vec<&String> = b.keys().collect();
    assert_eq!(names_a, names_b);
    for (name, bytes) in &a {
        if name == "manifest.txt" {
            continue; // config text embeds the out dir, so hashes differ
        }
        assert_eq!(Some(bytes), b.get(name).as_deref(), "{name} differs");
    }
}

#[test]
fn missing_input_fails_validation_before_any_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let text = config_text(&tmp.path().join("nope"), &out_dir, (2000, 2005), (2002, 2004));
    let config = PipelineConfig::from_toml(&text).unwrap();
    let err = run_pipeline(&config, &text).unwrap_err();
    assert!(err.is_validation(), "unexpected error kind: {err:?}");
    assert!(!out_dir.exists() || tree_bytes(&out_dir).is_empty());
}

#[test]
fn default_regression_blocks_run_on_synthetic_data() {
    // all 8 measures, static estimators only, to keep the test quick
    let tmp = tempfile::tempdir().unwrap();
    let data_dir = tmp.path().join("data");
    let out_dir = tmp.path().join("out");
    let data = generate_synthetic(&SyntheticSpec::new(12, 2000, 2009, 3)).unwrap();
    write_synthetic(&data, &data_dir).unwrap();

    let mut text = config_text(&data_dir, &out_dir, (2000, 2009), (2002, 2008));
    text.truncate(text.find("[[regression]]").unwrap());
    let mut config = PipelineConfig::from_toml(&text).unwrap();
    let mut blocks = default_regressions();
    for b in &mut blocks {
        b.estimators = vec!["pooled_ols".into(), "fixed_effects".into()];
    }
    config.regressions = blocks;
    run_pipeline(&config, &text).unwrap();
    for measure in ["s_in", "s_out", "pagerank", "betweenness", "rwb", "closeness", "clustering", "kcore"]
    {
        assert!(out_dir.join(format!("results_{measure}_pooled_ols.csv")).exists());
        assert!(out_dir.join(format!("results_{measure}_fixed_effects.csv")).exists());
    }
}
