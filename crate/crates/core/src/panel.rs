//! Balanced country-year panel assembly and descriptive outputs.

use indexmap::IndexMap;

use crate::centrality::CentralityRecord;
use crate::country::CountryCode;
use crate::error::{Error, Result};
use crate::indicators::CovariateRecord;

/// Column-oriented balanced panel. Rows are sorted by (country, year) and
/// indexed as `country_index * n_years + year_index`; lag columns hold
/// `None` where the lag reaches before the sample start.
#[derive(Debug, Clone)]
pub struct PanelDataset {
    countries: Vec<CountryCode>,
    years: Vec<i32>,
    columns: IndexMap<String, Vec<Option<f64>>>,
}

impl PanelDataset {
    /// Assemble from per-country-year column values. Years must be
    /// contiguous; every (country, year) cell of every column must be
    /// present (missing data is resolved before balancing).
    pub fn from_columns(
        countries: Vec<CountryCode>,
        years: Vec<i32>,
        columns: IndexMap<String, Vec<Option<f64>>>,
    ) -> Result<Self> {
        if countries.is_empty() || years.is_empty() {
            return Err(Error::Validation("empty panel".into()));
        }
        if countries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("countries must be sorted and distinct".into()));
        }
        if years.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::Validation("years must be contiguous".into()));
        }
        let rows = countries.len() * years.len();
        for (name, col) in &columns {
            if col.len() != rows {
                return Err(Error::Validation(format!(
                    "column {name} has {} cells, expected {rows}",
                    col.len()
                )));
            }
        }
        Ok(PanelDataset { countries, years, columns })
    }

    pub fn countries(&self) -> &[CountryCode] {
        &self.countries
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn n_countries(&self) -> usize {
        self.countries.len()
    }

    pub fn n_years(&self) -> usize {
        self.years.len()
    }

    pub fn row_count(&self) -> usize {
        self.countries.len() * self.years.len()
    }

    pub fn row_key(&self, row: usize) -> (CountryCode, i32) {
        let t = self.years.len();
        (self.countries[row / t], self.years[row % t])
    }

    pub fn variables(&self) -> Vec<String> {
        self.columns.keys().cloned().collect()
    }

    pub fn column(&self, name: &str) -> Result<&[Option<f64>]> {
        self.columns
            .get(name)
            .map(|c| c.as_slice())
            .ok_or_else(|| Error::Validation(format!("unknown panel variable {name}")))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn insert_column(&mut self, name: String, values: Vec<Option<f64>>) -> Result<()> {
        if values.len() != self.row_count() {
            return Err(Error::Validation(format!(
                "column {name} has {} cells, expected {}",
                values.len(),
                self.row_count()
            )));
        }
        self.columns.insert(name, values);
        Ok(())
    }

    /// Replace a column's values in place (used by the log-transform step).
    pub fn map_column<F: FnMut(f64) -> Result<f64>>(&mut self, name: &str, mut f: F) -> Result<()> {
        let col = self
            .columns
            .get_mut(name)
            .ok_or_else(|| Error::Validation(format!("unknown panel variable {name}")))?;
        for cell in col.iter_mut() {
            if let Some(v) = cell {
                *v = f(*v)?;
            }
        }
        Ok(())
    }
}

/// Inner-join centrality and covariate records, then keep only countries
/// observed in every year of `year_range`. The result is exactly
/// N x T rows.
pub fn assemble(
    centrality: &[CentralityRecord],
    covariates: &[CovariateRecord],
    year_range: (i32, i32),
) -> Result<PanelDataset> {
    let (y0, y1) = year_range;
    if y1 < y0 {
        return Err(Error::Validation(format!("bad year range {y0}..{y1}")));
    }
    let years: Vec<i32> = (y0..=y1).collect();
    let t = years.len();

    let mut cent: IndexMap<(CountryCode, i32), &CentralityRecord> = IndexMap::new();
    for r in centrality {
        cent.insert((r.country, r.year), r);
    }
    let mut cov: IndexMap<(CountryCode, i32), &CovariateRecord> = IndexMap::new();
    for r in covariates {
        cov.insert((r.country, r.year), r);
    }

    // countries with a full year run in both sources
    let mut candidates: Vec<CountryCode> =
        cent.keys().map(|(c, _)| *c).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    candidates.retain(|c| {
        years.iter().all(|y| cent.contains_key(&(*c, *y)) && cov.contains_key(&(*c, *y)))
    });
    if candidates.is_empty() {
        return Err(Error::Validation("no fully-covered countries".into()));
    }

    let rows = candidates.len() * t;
    let mut columns: IndexMap<String, Vec<Option<f64>>> = IndexMap::new();
    let names = [
        "k_in",
        "k_out",
        "s_in",
        "s_out",
        "pagerank",
        "betweenness_raw",
        "betweenness",
        "rwb",
        "closeness",
        "clustering",
        "kcore",
        "rgdpc",
        "hc",
        "pop",
        "tc",
        "infra",
        "iqi",
        "rta",
        "ofr",
        "fdi",
        "crisis",
    ];
    for name in names {
        columns.insert(name.to_string(), vec![None; rows]);
    }

    for (ci, c) in candidates.iter().enumerate() {
        for (ti, y) in years.iter().enumerate() {
            let row = ci * t + ti;
            let ce = cent[&(*c, *y)];
            let co = cov[&(*c, *y)];
            let values: [(&str, f64); 21] = [
                ("k_in", ce.k_in as f64),
                ("k_out", ce.k_out as f64),
                ("s_in", ce.s_in),
                ("s_out", ce.s_out),
                ("pagerank", ce.pagerank),
                ("betweenness_raw", ce.betweenness),
                ("betweenness", ce.betweenness_norm),
                ("rwb", ce.rwb),
                ("closeness", ce.closeness),
                ("clustering", ce.clustering),
                ("kcore", ce.kcore as f64),
                ("rgdpc", co.rgdpc),
                ("hc", co.hc),
                ("pop", co.pop),
                ("tc", co.tc),
                ("infra", co.infra),
                ("iqi", co.iqi),
                ("rta", co.rta),
                ("ofr", co.ofr),
                ("fdi", co.fdi),
                ("crisis", if co.crisis { 1.0 } else { 0.0 }),
            ];
            for (name, v) in values {
                columns[name][row] = Some(v);
            }
        }
    }

    PanelDataset::from_columns(candidates, years, columns)
}

/// Add `lag1_x .. lagL_x` columns for each listed variable. Rows whose lag
/// falls before the sample start stay in the panel with a missing marker.
pub fn add_lags(panel: &mut PanelDataset, variables: &[String], max_lag: usize) -> Result<()> {
    let t = panel.n_years();
    if max_lag == 0 {
        return Err(Error::Validation("max_lag must be at least 1".into()));
    }
    if max_lag >= t {
        return Err(Error::Validation(format!(
            "max_lag {max_lag} must be smaller than the {t} panel years"
        )));
    }
    for var in variables {
        let base = panel.column(var)?.to_vec();
        for lag in 1..=max_lag {
            let mut col = vec![None; base.len()];
            for ci in 0..panel.n_countries() {
                for ti in lag..t {
                    col[ci * t + ti] = base[ci * t + ti - lag];
                }
            }
            panel.insert_column(format!("lag{lag}_{var}"), col)?;
        }
    }
    Ok(())
}

/// Pairwise Pearson correlations over rows where both variables are
/// present. Errors when a variable has zero variance.
pub fn correlation_matrix(panel: &PanelDataset, variables: &[String]) -> Result<Vec<Vec<f64>>> {
    if panel.row_count() < 3 {
        return Err(Error::Validation("need at least 3 rows for correlations".into()));
    }
    let cols: Vec<&[Option<f64>]> =
        variables.iter().map(|v| panel.column(v)).collect::<Result<_>>()?;
    for (v, col) in variables.iter().zip(&cols) {
        let values: Vec<f64> = col.iter().flatten().copied().collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        if values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() == 0.0 {
            return Err(Error::ZeroVariance(v.clone()));
        }
    }
    let k = variables.len();
    let mut out = vec![vec![0.0; k]; k];
    for a in 0..k {
        out[a][a] = 1.0;
        for b in (a + 1)..k {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (x, y) in cols[a].iter().zip(cols[b]) {
                if let (Some(x), Some(y)) = (x, y) {
                    xs.push(*x);
                    ys.push(*y);
                }
            }
            let r = pearson(&xs, &ys)?;
            out[a][b] = r;
            out[b][a] = r;
        }
    }
    Ok(out)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    if x.len() < 3 {
        return Err(Error::Validation("need at least 3 paired observations".into()));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance("pairwise sample".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// {obs, mean, sd, min, max} per variable; sd uses the n-1 denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableSummary {
    pub variable: String,
    pub obs: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

pub fn descriptive_stats(panel: &PanelDataset, variables: &[String]) -> Result<Vec<VariableSummary>> {
    variables
        .iter()
        .map(|v| {
            let values: Vec<f64> = panel.column(v)?.iter().flatten().copied().collect();
            if values.is_empty() {
                return Err(Error::Validation(format!("variable {v} has no observations")));
            }
            let obs = values.len();
            let mean = values.iter().sum::<f64>() / obs as f64;
            let sd = if obs > 1 {
                (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (obs - 1) as f64).sqrt()
            } else {
                0.0
            };
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(VariableSummary { variable: v.clone(), obs, mean, sd, min, max })
        })
        .collect()
}

/// Countries ranked descending by `measure` in `year`; ties break in
/// ascending code order. `k` larger than the record count truncates.
pub fn top_k_ranking(
    records: &[CentralityRecord],
    measure: &str,
    year: i32,
    k: usize,
) -> Result<Vec<(CountryCode, f64)>> {
    let mut rows: Vec<(CountryCode, f64)> = records
        .iter()
        .filter(|r| r.year == year)
        .map(|r| Ok((r.country, measure_value(r, measure)?)))
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(Error::Validation(format!("no centrality records for year {year}")));
    }
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    rows.truncate(k);
    Ok(rows)
}

/// Measure accessor by panel column name.
pub fn measure_value(record: &CentralityRecord, measure: &str) -> Result<f64> {
    Ok(match measure {
        "k_in" => record.k_in as f64,
        "k_out" => record.k_out as f64,
        "s_in" => record.s_in,
        "s_out" => record.s_out,
        "pagerank" => record.pagerank,
        "betweenness_raw" => record.betweenness,
        "betweenness" => record.betweenness_norm,
        "rwb" => record.rwb,
        "closeness" => record.closeness,
        "clustering" => record.clustering,
        "kcore" => record.kcore as f64,
        other => return Err(Error::Validation(format!("unknown measure {other}"))),
    })
}

/// The eight dependent measures of the regression models.
pub const TNC_MEASURES: [&str; 8] =
    ["s_in", "s_out", "pagerank", "betweenness", "rwb", "closeness", "clustering", "kcore"];

/// Parse a `panel.csv` (as written by the pipeline) back into a dataset.
pub fn read_panel_csv(path: &std::path::Path) -> Result<PanelDataset> {
    use std::collections::BTreeSet;

    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Validation("empty panel file".into()))?
        .split(',')
        .collect();
    if header.len() < 3 || header[0] != "country" || header[1] != "year" {
        return Err(Error::Validation("panel.csv must start with country,year columns".into()));
    }
    let variables: Vec<String> = header[2..].iter().map(|s| s.to_string()).collect();

    let mut rows: Vec<(CountryCode, i32, Vec<Option<f64>>)> = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let line_no = idx as u64 + 2;
        if cells.len() != header.len() {
            return Err(Error::CsvParse {
                line: line_no,
                message: format!("expected {} cells, got {}", header.len(), cells.len()),
            });
        }
        let country = CountryCode::new(cells[0])
            .map_err(|e| Error::CsvParse { line: line_no, message: e.to_string() })?;
        let year: i32 = cells[1].parse().map_err(|_| Error::CsvParse {
            line: line_no,
            message: format!("bad year {:?}", cells[1]),
        })?;
        let values: Vec<Option<f64>> = cells[2..]
            .iter()
            .map(|c| if c.is_empty() { None } else { c.parse().ok() })
            .collect();
        rows.push((country, year, values));
    }

    let countries: Vec<CountryCode> =
        rows.iter().map(|(c, _, _)| *c).collect::<BTreeSet<_>>().into_iter().collect();
    let years: Vec<i32> =
        rows.iter().map(|(_, y, _)| *y).collect::<BTreeSet<_>>().into_iter().collect();
    let t = years.len();
    let mut columns = IndexMap::new();
    for (j, name) in variables.iter().enumerate() {
        let mut col = vec![None; countries.len() * t];
        for (c, y, values) in &rows {
            let ci = countries.binary_search(c).unwrap();
            let ti = years.binary_search(y).unwrap();
            col[ci * t + ti] = values[j];
        }
        columns.insert(name.clone(), col);
    }
    PanelDataset::from_columns(countries, years, columns)
}
