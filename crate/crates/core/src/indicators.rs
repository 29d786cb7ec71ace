//! Regression covariates built from raw macro inputs: PCA composite
//! indices, the GDP-weighted RTA measure, overlap frequency ratio, trade
//! cost, the crisis dummy, and the panel log-transform policy.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::country::CountryCode;
use crate::error::{Error, Result};
use crate::panel::PanelDataset;

/// One country-year row of raw macro inputs. `None` marks a missing cell;
/// rows with any missing required value are dropped before balancing.
#[derive(Debug, Clone, Deserialize)]
pub struct MacroRecord {
    pub country: CountryCode,
    pub year: i32,
    pub rgdpc: Option<f64>,
    pub gdp: Option<f64>,
    pub hc: Option<f64>,
    pub pop: Option<f64>,
    pub fdi: Option<f64>,
    pub wgi_voice_accountability: Option<f64>,
    pub wgi_political_stability: Option<f64>,
    pub wgi_government_effectiveness: Option<f64>,
    pub wgi_regulatory_quality: Option<f64>,
    pub wgi_rule_of_law: Option<f64>,
    pub wgi_control_of_corruption: Option<f64>,
    pub infra_telephone: Option<f64>,
    pub infra_air_freight: Option<f64>,
    pub infra_energy_use: Option<f64>,
    pub infra_electricity: Option<f64>,
}

impl MacroRecord {
    pub fn wgi(&self) -> [Option<f64>; 6] {
        [
            self.wgi_voice_accountability,
            self.wgi_political_stability,
            self.wgi_government_effectiveness,
            self.wgi_regulatory_quality,
            self.wgi_rule_of_law,
            self.wgi_control_of_corruption,
        ]
    }

    pub fn infra_inputs(&self) -> [Option<f64>; 4] {
        [self.infra_telephone, self.infra_air_freight, self.infra_energy_use, self.infra_electricity]
    }

    pub fn is_complete(&self) -> bool {
        self.rgdpc.is_some()
            && self.gdp.is_some()
            && self.hc.is_some()
            && self.pop.is_some()
            && self.fdi.is_some()
            && self.wgi().iter().all(Option::is_some)
            && self.infra_inputs().iter().all(Option::is_some)
    }
}

pub const WGI_COLUMNS: [&str; 6] = [
    "wgi_voice_accountability",
    "wgi_political_stability",
    "wgi_government_effectiveness",
    "wgi_regulatory_quality",
    "wgi_rule_of_law",
    "wgi_control_of_corruption",
];

pub const INFRA_COLUMNS: [&str; 4] =
    ["infra_telephone", "infra_air_freight", "infra_energy_use", "infra_electricity"];

/// Binary country x REC membership table with the derived tie dummy
/// B_ij = 1 iff countries i and j share at least one REC.
#[derive(Debug, Clone)]
pub struct MembershipMatrix {
    countries: Vec<CountryCode>,
    recs: Vec<String>,
    cells: Vec<bool>, // countries x recs, row-major
}

impl MembershipMatrix {
    pub fn new(countries: Vec<CountryCode>, recs: Vec<String>, cells: Vec<bool>) -> Result<Self> {
        if countries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("membership countries must be sorted, distinct".into()));
        }
        if cells.len() != countries.len() * recs.len() {
            return Err(Error::Validation("membership cell count mismatch".into()));
        }
        Ok(MembershipMatrix { countries, recs, cells })
    }

    pub fn countries(&self) -> &[CountryCode] {
        &self.countries
    }

    pub fn rec_count(&self) -> usize {
        self.recs.len()
    }

    pub fn rec_names(&self) -> &[String] {
        &self.recs
    }

    pub fn is_member(&self, country: CountryCode, rec: usize) -> bool {
        match self.countries.binary_search(&country) {
            Ok(i) => self.cells[i * self.recs.len() + rec],
            Err(_) => false,
        }
    }

    pub fn membership_count(&self, country: CountryCode) -> usize {
        (0..self.recs.len()).filter(|&r| self.is_member(country, r)).count()
    }

    /// B_ij: do the two countries share at least one REC?
    pub fn shares_rec(&self, a: CountryCode, b: CountryCode) -> bool {
        a != b && (0..self.recs.len()).any(|r| self.is_member(a, r) && self.is_member(b, r))
    }

    pub fn contains(&self, country: CountryCode) -> bool {
        self.countries.binary_search(&country).is_ok()
    }
}

/// Final covariate set for one country-year (Eq.-style regression inputs
/// plus pass-through levels).
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateRecord {
    pub country: CountryCode,
    pub year: i32,
    pub iqi: f64,
    pub infra: f64,
    pub rta: f64,
    pub ofr: f64,
    pub tc: f64,
    pub crisis: bool,
    pub rgdpc: f64,
    pub hc: f64,
    pub pop: f64,
    pub fdi: f64,
}

/// First-principal-component scores of a standardized indicator matrix.
///
/// Columns are centered and scaled to unit sample variance, the first
/// eigenvector of the correlation matrix is extracted, and the score is
/// oriented to correlate positively with the row mean of the standardized
/// inputs (falling back to a positive first loading when that correlation
/// degenerates).
pub fn pca_index(rows: &[Vec<f64>], names: &[&str]) -> Result<Vec<f64>> {
    let n = rows.len();
    let k = names.len();
    if k < 2 {
        return Err(Error::Validation("pca needs at least 2 indicator columns".into()));
    }
    if n < k + 1 {
        return Err(Error::Validation(format!(
            "pca needs at least {} observations for {k} columns, got {n}",
            k + 1
        )));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::Validation("ragged pca input".into()));
    }

    // standardize
    let mut z = DMatrix::<f64>::zeros(n, k);
    for j in 0..k {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if var == 0.0 {
            return Err(Error::ZeroVariance(names[j].to_string()));
        }
        let sd = var.sqrt();
        for i in 0..n {
            z[(i, j)] = (rows[i][j] - mean) / sd;
        }
    }

    let corr = z.transpose() * &z / (n as f64 - 1.0);
    let eig = corr.symmetric_eigen();
    let (top, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let mut loading = eig.eigenvectors.column(top).into_owned();

    let mut scores = &z * &loading;

    // orient: positive correlation with the row mean of standardized inputs
    let row_means: Vec<f64> = (0..n).map(|i| z.row(i).sum() / k as f64).collect();
    let cov: f64 = scores.iter().zip(&row_means).map(|(s, m)| s * m).sum();
    let flip = if cov.abs() > 1e-10 * (n as f64) {
        cov < 0.0
    } else {
        // degenerate orientation: pin the first nonzero loading positive
        let lead = loading.iter().find(|v| v.abs() > 1e-12).copied().unwrap_or(1.0);
        lead < 0.0
    };
    if flip {
        loading.neg_mut();
        scores.neg_mut();
    }
    Ok(scores.iter().copied().collect())
}

/// GDP-weighted RTA exposure: `(1/GDP_i) * sum_j B_ij GDP_j`.
pub fn rta_measure(
    country: CountryCode,
    year: i32,
    gdps: &BTreeMap<CountryCode, f64>,
    memberships: &MembershipMatrix,
) -> Result<f64> {
    let own = *gdps.get(&country).ok_or_else(|| Error::Computation(format!(
        "missing GDP for ({country}, {year})"
    )))?;
    let mut total = 0.0;
    for partner in memberships.countries() {
        if memberships.shares_rec(country, *partner) {
            let gdp = *gdps.get(partner).ok_or_else(|| Error::Computation(format!(
                "missing GDP for ({partner}, {year})"
            )))?;
            total += gdp;
        }
    }
    Ok(total / own)
}

/// Overlap frequency ratio `(m_i - 1) / (R - 1)` over the R RECs of the
/// matrix; zero (with a warning) for countries outside every REC.
pub fn overlap_frequency_ratio(country: CountryCode, memberships: &MembershipMatrix) -> Result<f64> {
    if !memberships.contains(country) {
        return Err(Error::Validation(format!("{country} not in membership matrix")));
    }
    let r = memberships.rec_count();
    if r < 2 {
        return Err(Error::Validation("need at least 2 RECs for the overlap ratio".into()));
    }
    let m = memberships.membership_count(country);
    if m == 0 {
        log::warn!("{country} belongs to no REC; overlap frequency ratio set to 0");
        return Ok(0.0);
    }
    Ok((m - 1) as f64 / (r - 1) as f64)
}

/// How the tariff is turned into the trade-cost covariate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TradeCostMode {
    /// Country tariff divided by the number of sample countries.
    #[default]
    CountryCount,
    /// Country tariff divided by the sum of all countries' tariffs.
    TariffShare,
}

pub fn trade_cost(
    tariffs: &BTreeMap<CountryCode, f64>,
    country: CountryCode,
    mode: TradeCostMode,
) -> Result<f64> {
    let own = *tariffs.get(&country).ok_or_else(|| Error::Computation(format!(
        "missing tariff for {country}"
    )))?;
    match mode {
        TradeCostMode::CountryCount => Ok(own / tariffs.len() as f64),
        TradeCostMode::TariffShare => {
            let total: f64 = tariffs.values().sum();
            if total == 0.0 {
                Ok(0.0)
            } else {
                Ok(own / total)
            }
        }
    }
}

/// 1 on exactly 2007-2009.
pub fn crisis_dummy(year: i32) -> bool {
    (2007..=2009).contains(&year)
}

/// Natural log with an epsilon shift applied to every variable except
/// k-core, the binary dummies, and the composite PCA indices (first-PC
/// scores are centered at zero, so they span negatives by construction).
pub fn log_transform_policy(column: &str, values: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if !is_logged_column(column) {
        return Ok(values.to_vec());
    }
    values
        .iter()
        .map(|&v| {
            if v < 0.0 {
                Err(Error::Computation(format!(
                    "negative value {v} in log-transformed column {column}"
                )))
            } else {
                Ok((v + epsilon).ln())
            }
        })
        .collect()
}

pub fn is_logged_column(column: &str) -> bool {
    !matches!(column, "kcore" | "crisis" | "iqi" | "infra") && !column.starts_with("year_")
}

/// Apply the log policy to every column of an assembled panel, in place.
pub fn apply_log_policy(panel: &mut PanelDataset, epsilon: f64) -> Result<()> {
    for name in panel.variables() {
        if is_logged_column(&name) {
            panel.map_column(&name, |v| {
                if v < 0.0 {
                    Err(Error::Computation(format!(
                        "negative value {v} in log-transformed column {name}"
                    )))
                } else {
                    Ok((v + epsilon).ln())
                }
            })?;
        }
    }
    Ok(())
}

/// Options for covariate construction.
#[derive(Debug, Clone, Copy, Default)]
pub struct CovariateOptions {
    pub tc_mode: TradeCostMode,
}

/// Build the covariate table from the three raw inputs. Country-years with
/// any missing macro cell are dropped (the panel balancing step then drops
/// countries that lose a year). The PCA indices are fitted on the pooled
/// complete rows.
pub fn build_covariates(
    macros: &[MacroRecord],
    memberships: &MembershipMatrix,
    tariffs: &BTreeMap<(CountryCode, i32), f64>,
    options: &CovariateOptions,
) -> Result<Vec<CovariateRecord>> {
    let complete: Vec<&MacroRecord> = macros
        .iter()
        .filter(|m| {
            let ok = m.is_complete();
            if !ok {
                log::warn!("dropping ({}, {}): missing macro cells", m.country, m.year);
            }
            ok
        })
        .collect();
    if complete.is_empty() {
        return Err(Error::Validation("no complete macro rows".into()));
    }

    let wgi_rows: Vec<Vec<f64>> =
        complete.iter().map(|m| m.wgi().iter().map(|v| v.unwrap()).collect()).collect();
    let iqi = pca_index(&wgi_rows, &WGI_COLUMNS)?;

    let infra_rows: Vec<Vec<f64>> =
        complete.iter().map(|m| m.infra_inputs().iter().map(|v| v.unwrap()).collect()).collect();
    let infra = pca_index(&infra_rows, &INFRA_COLUMNS)?;

    // per-year GDP and tariff maps
    let mut gdp_by_year: BTreeMap<i32, BTreeMap<CountryCode, f64>> = BTreeMap::new();
    for m in &complete {
        gdp_by_year.entry(m.year).or_default().insert(m.country, m.gdp.unwrap());
    }
    let mut tariff_by_year: BTreeMap<i32, BTreeMap<CountryCode, f64>> = BTreeMap::new();
    for ((country, year), value) in tariffs {
        tariff_by_year.entry(*year).or_default().insert(*country, *value);
    }

    let mut out = Vec::with_capacity(complete.len());
    for (idx, m) in complete.iter().enumerate() {
        let gdps = &gdp_by_year[&m.year];
        let rta = rta_measure(m.country, m.year, gdps, memberships)?;
        let ofr = overlap_frequency_ratio(m.country, memberships)?;
        let year_tariffs = tariff_by_year.get(&m.year).ok_or_else(|| {
            Error::Computation(format!("no tariffs for year {}", m.year))
        })?;
        let tc = trade_cost(year_tariffs, m.country, options.tc_mode)?;
        out.push(CovariateRecord {
            country: m.country,
            year: m.year,
            iqi: iqi[idx],
            infra: infra[idx],
            rta,
            ofr,
            tc,
            crisis: crisis_dummy(m.year),
            rgdpc: m.rgdpc.unwrap(),
            hc: m.hc.unwrap(),
            pop: m.pop.unwrap(),
            fdi: m.fdi.unwrap(),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_macro_csv(path: &Path) -> Result<Vec<MacroRecord>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let record: MacroRecord = row.map_err(|e| Error::CsvParse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// `country,<rec>,...` matrix of 0/1 cells.
pub fn read_memberships_csv(path: &Path) -> Result<MembershipMatrix> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let headers = rdr.headers().map_err(|e| Error::CsvParse {
        line: 1,
        message: e.to_string(),
    })?.clone();
    if headers.len() < 2 || headers.get(0) != Some("country") {
        return Err(Error::Validation(
            "memberships.csv must start with a `country` column".into(),
        ));
    }
    let recs: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let mut rows: Vec<(CountryCode, Vec<bool>)> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::CsvParse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(i as u64 + 2);
        let country = CountryCode::new(row.get(0).unwrap_or_default())
            .map_err(|e| Error::CsvParse { line, message: e.to_string() })?;
        let mut cells = Vec::with_capacity(recs.len());
        for v in row.iter().skip(1) {
            match v.trim() {
                "0" => cells.push(false),
                "1" => cells.push(true),
                other => {
                    return Err(Error::CsvParse {
                        line,
                        message: format!("membership cell must be 0 or 1, got {other:?}"),
                    })
                }
            }
        }
        rows.push((country, cells));
    }
    rows.sort_by_key(|(c, _)| *c);
    let countries: Vec<CountryCode> = rows.iter().map(|(c, _)| *c).collect();
    let cells: Vec<bool> = rows.into_iter().flat_map(|(_, v)| v).collect();
    MembershipMatrix::new(countries, recs, cells)
}

/// `country,year,tariff` rows.
pub fn read_tariffs_csv(path: &Path) -> Result<BTreeMap<(CountryCode, i32), f64>> {
    #[derive(Deserialize)]
    struct Row {
        country: CountryCode,
        year: i32,
        tariff: f64,
    }
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: Row = row.map_err(|e| Error::CsvParse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        out.insert((row.country, row.year), row.tariff);
    }
    Ok(out)
}
