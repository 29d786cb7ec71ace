//! External instrument built from top-5 export intensity.

use std::collections::BTreeMap;

use crate::country::CountryCode;
use crate::error::Result;
use crate::flow::FlowRecord;
use crate::panel::PanelDataset;

/// Share of a country-year's exports going to its five largest
/// destinations. Countries with no exports in a year get 0 with a warning.
pub fn top5_export_intensity(
    flows: &[FlowRecord],
    country: CountryCode,
    year: i32,
) -> f64 {
    let mut by_destination: BTreeMap<CountryCode, f64> = BTreeMap::new();
    for f in flows {
        if f.origin == country && f.year == year {
            *by_destination.entry(f.destination).or_insert(0.0) += f.value;
        }
    }
    let total: f64 = by_destination.values().sum();
    if total <= 0.0 {
        log::warn!("{country} has no exports in {year}; top-5 intensity set to 0");
        return 0.0;
    }
    let mut values: Vec<f64> = by_destination.values().copied().collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let top5: f64 = values.iter().take(5).sum();
    top5 / total
}

/// Panel column `intensity_it * endogenous_it`, usable as an external
/// instrument for `endogenous`.
pub fn build_external_instrument(
    flows: &[FlowRecord],
    panel: &PanelDataset,
    endogenous: &str,
) -> Result<Vec<Option<f64>>> {
    let base = panel.column(endogenous)?;
    let t = panel.n_years();
    let mut out = vec![None; panel.row_count()];
    for (row, cell) in base.iter().enumerate() {
        if let Some(v) = cell {
            let country = panel.countries()[row / t];
            let year = panel.years()[row % t];
            let intensity = top5_export_intensity(flows, country, year);
            out[row] = Some(intensity * v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> CountryCode {
        CountryCode::new(s).unwrap()
    }

    fn flow(o: &str, d: &str, v: f64) -> FlowRecord {
        FlowRecord::new(code(o), code(d), 2005, v).unwrap()
    }

    #[test]
    fn five_or_fewer_partners_is_full_intensity() {
        let flows = vec![flow("AAA", "BBB", 3.0), flow("AAA", "CCC", 2.0)];
        assert_eq!(top5_export_intensity(&flows, code("AAA"), 2005), 1.0);
    }

    #[test]
    fn seven_partner_example() {
        let values = [10.0, 5.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let dests = ["BBB", "CCC", "DDD", "EEE", "FFF", "GGG", "HHH"];
        let flows: Vec<FlowRecord> =
            dests.iter().zip(values).map(|(d, v)| flow("AAA", d, v)).collect();
        let intensity = top5_export_intensity(&flows, code("AAA"), 2005);
        assert!((intensity - 0.9).abs() < 1e-15); // 18 of 20
    }

    #[test]
    fn no_exports_is_zero() {
        let flows = vec![flow("BBB", "AAA", 3.0)];
        assert_eq!(top5_export_intensity(&flows, code("AAA"), 2005), 0.0);
    }

    #[test]
    fn duplicate_destinations_are_summed_before_ranking() {
        // AAA->BBB split into two records must count as one partner
        let flows = vec![
            flow("AAA", "BBB", 5.0),
            flow("AAA", "BBB", 5.0),
            flow("AAA", "CCC", 1.0),
            flow("AAA", "DDD", 1.0),
            flow("AAA", "EEE", 1.0),
            flow("AAA", "FFF", 1.0),
            flow("AAA", "GGG", 1.0),
        ];
        let intensity = top5_export_intensity(&flows, code("AAA"), 2005);
        assert!((intensity - 14.0 / 15.0).abs() < 1e-15);
    }
}
