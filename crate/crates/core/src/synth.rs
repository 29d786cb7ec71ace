//! Deterministic synthetic input generator.
//!
//! Produces a gravity-style flow table (flow proportional to the product
//! of the endpoints' GDPs, with noise), macro series with smooth drift, a
//! REC partition with overlapping memberships, and tariffs. The first
//! country in code order is a designated hub whose exports are boosted so
//! it has the highest out-strength in every year, giving tests a known
//! structural landmark.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::country::{CountryCode, Universe, AFRICAN_UNION_ISO3};
use crate::csvio::{fmt_sig, write_csv, write_text};
use crate::error::{Error, Result};
use crate::flow::FlowRecord;
use crate::indicators::{MacroRecord, MembershipMatrix};

/// The eight recognized regional economic communities.
pub const REC_NAMES: [&str; 8] =
    ["CEN-SAD", "ECCAS", "UMA", "ECOWAS", "SADC", "IGAD", "EAC", "COMESA"];

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub n_countries: usize,
    pub year_start: i32,
    pub year_end: i32,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(n_countries: usize, year_start: i32, year_end: i32, seed: u64) -> Self {
        SyntheticSpec { n_countries, year_start, year_end, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_countries < 4 {
            return Err(Error::Validation(format!(
                "synthetic data needs at least 4 countries, got {}",
                self.n_countries
            )));
        }
        if self.year_end < self.year_start {
            return Err(Error::Validation("year_end before year_start".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub universe: Universe,
    pub hub: CountryCode,
    pub flows: Vec<FlowRecord>,
    pub macros: Vec<MacroRecord>,
    pub memberships: MembershipMatrix,
    pub tariffs: BTreeMap<(CountryCode, i32), f64>,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_countries;
    let years: Vec<i32> = (spec.year_start..=spec.year_end).collect();

    let codes = country_codes(n);
    let universe = Universe::new(codes.clone())?;
    let codes = universe.codes().to_vec();
    let hub = codes[0];

    // country fundamentals
    let gdp_dist = LogNormal::new(22.0, 1.0).unwrap(); // around 3.6e9 USD
    let mut gdp0: Vec<f64> = (0..n).map(|_| gdp_dist.sample(&mut rng)).collect();
    let top = gdp0.iter().cloned().fold(0.0, f64::max);
    gdp0[0] = 1.5 * top; // the hub is the biggest economy
    let growth: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.06)).collect();
    let pop0: Vec<f64> = (0..n).map(|_| rng.random_range(1.0e6..8.0e7)).collect();
    let hc0: Vec<f64> = (0..n).map(|_| rng.random_range(1.1..2.4)).collect();
    let wgi_base: Vec<[f64; 6]> = (0..n)
        .map(|_| std::array::from_fn(|_| rng.random_range(-2.0..2.0)))
        .collect();
    let tariff0: Vec<f64> = (0..n).map(|_| rng.random_range(2.0..15.0)).collect();

    // persistent trade relations: a pair either trades in every year or not
    let noise: Normal<f64> = Normal::new(0.0, 0.35).unwrap();
    let mut active = vec![false; n * n];
    let mut pair_noise = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                active[i * n + j] = rng.random_range(0.0..1.0) < 0.55;
                pair_noise[i * n + j] = rng.random_range(0.5..1.5);
            }
        }
    }

    let gdp_at = |i: usize, ti: usize| gdp0[i] * (1.0 + growth[i]).powi(ti as i32);

    let mut flows = Vec::new();
    let mut macros = Vec::new();
    let mut tariffs = BTreeMap::new();
    let world_gdp0: f64 = gdp0.iter().sum();

    for (ti, &year) in years.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                if i == j || !active[i * n + j] {
                    continue;
                }
                // gravity with multiplicative noise, in thousands of USD
                let base = 2.0e4 * gdp_at(i, ti) * gdp_at(j, ti)
                    / (world_gdp0 * world_gdp0 / n as f64);
                let shock = noise.sample(&mut rng).exp();
                let boost = if i == 0 { 6.0 } else { 1.0 };
                let value = base * pair_noise[i * n + j] * shock * boost;
                flows.push(FlowRecord::new(codes[i], codes[j], year, value)?);
            }
        }
        for i in 0..n {
            let gdp = gdp_at(i, ti);
            let pop = pop0[i] * 1.02_f64.powi(ti as i32) * (0.01 * noise.sample(&mut rng)).exp();
            let rgdpc = gdp / pop;
            let hc = hc0[i] + 0.015 * ti as f64 + 0.02 * noise.sample(&mut rng);
            let fdi = (0.02 * gdp * (1.0 + 0.3 * noise.sample(&mut rng))).abs();
            let wgi: Vec<f64> = wgi_base[i]
                .iter()
                .map(|b| (b + 0.1 * noise.sample(&mut rng)).clamp(-2.5, 2.5))
                .collect();
            // infrastructure tied to income with idiosyncratic noise
            let income_scale = (rgdpc / 500.0).ln().max(0.1);
            let infra = [
                2.0 + 6.0 * income_scale + noise.sample(&mut rng).abs(),
                1.0e5 * income_scale * (1.0 + 0.2 * noise.sample(&mut rng)).abs(),
                250.0 * income_scale * (1.0 + 0.2 * noise.sample(&mut rng)).abs(),
                400.0 * income_scale * (1.0 + 0.2 * noise.sample(&mut rng)).abs(),
            ];
            macros.push(MacroRecord {
                country: codes[i],
                year,
                rgdpc: Some(rgdpc),
                gdp: Some(gdp),
                hc: Some(hc),
                pop: Some(pop),
                fdi: Some(fdi),
                wgi_voice_accountability: Some(wgi[0]),
                wgi_political_stability: Some(wgi[1]),
                wgi_government_effectiveness: Some(wgi[2]),
                wgi_regulatory_quality: Some(wgi[3]),
                wgi_rule_of_law: Some(wgi[4]),
                wgi_control_of_corruption: Some(wgi[5]),
                infra_telephone: Some(infra[0]),
                infra_air_freight: Some(infra[1]),
                infra_energy_use: Some(infra[2]),
                infra_electricity: Some(infra[3]),
            });
            let tariff = (tariff0[i]
                * (1.0 - 0.01 * ti as f64)
                * (1.0 + 0.05 * noise.sample(&mut rng)))
            .max(0.5);
            tariffs.insert((codes[i], year), tariff);
        }
    }

    let memberships = rec_partition(&codes);

    Ok(SyntheticData { universe, hub, flows, macros, memberships, tariffs })
}

/// Round-robin REC assignment with deterministic overlaps: every country
/// joins one REC by position, every third country a second, every fifth a
/// third.
fn rec_partition(codes: &[CountryCode]) -> MembershipMatrix {
    let r = REC_NAMES.len();
    let mut cells = vec![false; codes.len() * r];
    for i in 0..codes.len() {
        cells[i * r + (i % r)] = true;
        if i % 3 == 0 {
            cells[i * r + ((i + 1) % r)] = true;
        }
        if i % 5 == 0 {
            cells[i * r + ((i + 2) % r)] = true;
        }
    }
    MembershipMatrix::new(
        codes.to_vec(),
        REC_NAMES.iter().map(|s| s.to_string()).collect(),
        cells,
    )
    .unwrap()
}

fn country_codes(n: usize) -> Vec<CountryCode> {
    let mut codes: Vec<CountryCode> = AFRICAN_UNION_ISO3
        .iter()
        .take(n)
        .map(|c| CountryCode::new(c).unwrap())
        .collect();
    // beyond the 54 AU members, invent codes XAA, XAB, ...
    let mut extra = 0usize;
    while codes.len() < n {
        let c = format!(
            "X{}{}",
            (b'A' + (extra / 26) as u8) as char,
            (b'A' + (extra % 26) as u8) as char
        );
        codes.push(CountryCode::new(&c).unwrap());
        extra += 1;
    }
    codes
}

/// Write the four input CSVs plus the universe file into `dir`.
pub fn write_synthetic(data: &SyntheticData, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;

    let flow_rows: Vec<Vec<String>> = data
        .flows
        .iter()
        .map(|f| {
            vec![
                f.origin.to_string(),
                f.destination.to_string(),
                f.year.to_string(),
                fmt_sig(f.value),
            ]
        })
        .collect();
    write_csv(
        &dir.join("flows.csv"),
        &["origin", "destination", "year", "value_kusd"],
        &flow_rows,
    )?;

    let macro_header = [
        "country",
        "year",
        "rgdpc",
        "gdp",
        "hc",
        "pop",
        "fdi",
        "wgi_voice_accountability",
        "wgi_political_stability",
        "wgi_government_effectiveness",
        "wgi_regulatory_quality",
        "wgi_rule_of_law",
        "wgi_control_of_corruption",
        "infra_telephone",
        "infra_air_freight",
        "infra_energy_use",
        "infra_electricity",
    ];
    let cell = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
    let macro_rows: Vec<Vec<String>> = data
        .macros
        .iter()
        .map(|m| {
            vec![
                m.country.to_string(),
                m.year.to_string(),
                cell(m.rgdpc),
                cell(m.gdp),
                cell(m.hc),
                cell(m.pop),
                cell(m.fdi),
                cell(m.wgi_voice_accountability),
                cell(m.wgi_political_stability),
                cell(m.wgi_government_effectiveness),
                cell(m.wgi_regulatory_quality),
                cell(m.wgi_rule_of_law),
                cell(m.wgi_control_of_corruption),
                cell(m.infra_telephone),
                cell(m.infra_air_freight),
                cell(m.infra_energy_use),
                cell(m.infra_electricity),
            ]
        })
        .collect();
    write_csv(&dir.join("macro.csv"), &macro_header, &macro_rows)?;

    let mut mem_header = vec!["country"];
    let rec_names: Vec<&str> = data.memberships.rec_names().iter().map(|s| s.as_str()).collect();
    mem_header.extend(rec_names);
    let mem_rows: Vec<Vec<String>> = data
        .memberships
        .countries()
        .iter()
        .map(|c| {
            let mut row = vec![c.to_string()];
            for rec in 0..data.memberships.rec_count() {
                row.push(if data.memberships.is_member(*c, rec) { "1" } else { "0" }.to_string());
            }
            row
        })
        .collect();
    write_csv(&dir.join("memberships.csv"), &mem_header, &mem_rows)?;

    let tariff_rows: Vec<Vec<String>> = data
        .tariffs
        .iter()
        .map(|((c, y), v)| vec![c.to_string(), y.to_string(), fmt_sig(*v)])
        .collect();
    write_csv(&dir.join("tariffs.csv"), &["country", "year", "tariff"], &tariff_rows)?;

    let universe_text: String = data
        .universe
        .codes()
        .iter()
        .map(|c| format!("{c}\n"))
        .collect();
    write_text(&dir.join("countries.txt"), &universe_text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centrality::{strength, Direction};
    use crate::graph::{build_yearly_graph, EdgeFilter};

    #[test]
    fn same_seed_same_data() {
        let spec = SyntheticSpec::new(8, 2002, 2006, 42);
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a.flows, b.flows);
        assert_eq!(a.tariffs, b.tariffs);
    }

    #[test]
    fn hub_has_highest_out_strength_every_year() {
        let spec = SyntheticSpec::new(12, 2002, 2008, 7);
        let data = generate_synthetic(&spec).unwrap();
        for year in 2002..=2008 {
            let flows: Vec<_> =
                data.flows.iter().filter(|f| f.year == year).copied().collect();
            let g = build_yearly_graph(&flows, year, &data.universe, EdgeFilter::PerYear).unwrap();
            let s_out = strength(&g, Direction::Out);
            let hub_idx = g.index_of(data.hub).unwrap();
            let (best, _) = s_out
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            assert_eq!(best, hub_idx, "year {year}");
        }
    }

    #[test]
    fn too_few_countries_is_rejected() {
        assert!(generate_synthetic(&SyntheticSpec::new(3, 2002, 2006, 1)).is_err());
    }

    #[test]
    fn writes_all_input_files() {
        let dir = tempfile::tempdir().unwrap();
        let data = generate_synthetic(&SyntheticSpec::new(6, 2002, 2005, 3)).unwrap();
        write_synthetic(&data, dir.path()).unwrap();
        for f in ["flows.csv", "macro.csv", "memberships.csv", "tariffs.csv", "countries.txt"] {
            assert!(dir.path().join(f).exists(), "{f} missing");
        }
        // written files parse back
        let flows = crate::flow::read_flows_csv(&dir.path().join("flows.csv"), false).unwrap();
        assert_eq!(flows.len(), data.flows.len());
        let mem = crate::indicators::read_memberships_csv(&dir.path().join("memberships.csv"))
            .unwrap();
        assert_eq!(mem.rec_count(), 8);
    }
}
