//! Bilateral trade flow records and CSV ingestion.

use std::path::Path;

use serde::Deserialize;

use crate::country::CountryCode;
use crate::error::{Error, Result};

/// One bilateral trade observation: exporter, importer, year, value in
/// thousands of USD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRecord {
    pub origin: CountryCode,
    pub destination: CountryCode,
    pub year: i32,
    pub value: f64,
}

impl FlowRecord {
    pub fn new(origin: CountryCode, destination: CountryCode, year: i32, value: f64) -> Result<Self> {
        if origin == destination {
            return Err(Error::InvalidFlow {
                location: format!("{origin}->{destination} ({year})"),
                reason: "origin equals destination".into(),
            });
        }
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidFlow {
                location: format!("{origin}->{destination} ({year})"),
                reason: format!("value must be a non-negative real, got {value}"),
            });
        }
        Ok(FlowRecord { origin, destination, year, value })
    }
}

#[derive(Debug, Deserialize)]
struct RawFlowRow {
    origin: String,
    destination: String,
    year: i32,
    value_kusd: f64,
}

/// Read `origin,destination,year,value_kusd` rows from a CSV file.
///
/// Malformed rows abort with their line number unless `skip_malformed` is
/// set, in which case they are logged and dropped.
pub fn read_flows_csv(path: &Path, skip_malformed: bool) -> Result<Vec<FlowRecord>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_flows(file, skip_malformed)
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::CsvParse { line, message: e.to_string() }
}

/// Same as [`read_flows_csv`] for any reader.
pub fn read_flows<R: std::io::Read>(reader: R, skip_malformed: bool) -> Result<Vec<FlowRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    let mut raw = csv::StringRecord::new();
    let headers = rdr.headers().map_err(csv_err)?.clone();
    while rdr.read_record(&mut raw).map_err(csv_err)? {
        let line = raw.position().map(|p| p.line()).unwrap_or(0);
        let parsed: std::result::Result<RawFlowRow, _> = raw.deserialize(Some(&headers));
        let record = parsed.map_err(|e| Error::CsvParse { line, message: e.to_string() }).and_then(|row| {
            let origin = CountryCode::new(&row.origin)
                .map_err(|e| Error::CsvParse { line, message: e.to_string() })?;
            let destination = CountryCode::new(&row.destination)
                .map_err(|e| Error::CsvParse { line, message: e.to_string() })?;
            FlowRecord::new(origin, destination, row.year, row.value_kusd)
                .map_err(|e| Error::CsvParse { line, message: e.to_string() })
        });
        match record {
            Ok(r) => out.push(r),
            Err(e) if skip_malformed => log::warn!("skipping row: {e}"),
            Err(e) => return Err(e),
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

    #[test]
    fn rejects_self_loop_and_negative_value() {
        assert!(FlowRecord::new(code("KEN"), code("KEN"), 2005, 1.0).is_err());
        assert!(FlowRecord::new(code("KEN"), code("UGA"), 2005, -1.0).is_err());
        assert!(FlowRecord::new(code("KEN"), code("UGA"), 2005, f64::NAN).is_err());
        assert!(FlowRecord::new(code("KEN"), code("UGA"), 2005, 0.0).is_ok());
    }

    #[test]
    fn reads_csv_with_line_numbers_on_error() {
        let data = "origin,destination,year,value_kusd\nKEN,UGA,2005,10.5\nKEN,KEN,2005,3.0\n";
        let err = read_flows(data.as_bytes(), false).unwrap_err();
        match err {
            Error::CsvParse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
        // skip mode drops the bad row
        let rows = read_flows(data.as_bytes(), true).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].value, 10.5);
    }
}
