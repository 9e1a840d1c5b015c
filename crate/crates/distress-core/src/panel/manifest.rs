//! Panel ingestion from delimited text plus the manifest describing it.
//!
//! The on-disk format is comma-separated UTF-8 with a header row and `.` as
//! the decimal separator. A [`DataManifest`] maps file columns onto feature
//! names and identifies the label, survival, and industry columns.
//! [`write_panel`] emits the same format deterministically (column order =
//! schema order, shortest round-trip float formatting), so a written panel
//! reloads bit-identically.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    is_missing, EventStatus, FeatureGroup, FirmYearRecord, Industry, Panel, Schema, MISSING,
};
use crate::error::{Error, Result};

/// One mapped feature column.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    /// Column name in the file header.
    pub column: String,
    /// Feature name in the panel schema.
    pub feature: String,
    pub group: FeatureGroup,
}

/// Describes a panel file: which columns carry identifiers, label, survival
/// pair, industry, and features, and which token marks a missing value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataManifest {
    pub path: PathBuf,
    #[serde(default = "default_firm_column")]
    pub firm_column: String,
    #[serde(default = "default_year_column")]
    pub year_column: String,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    #[serde(default = "default_event_time_column")]
    pub event_time_column: String,
    #[serde(default = "default_event_status_column")]
    pub event_status_column: String,
    #[serde(default = "default_industry_column")]
    pub industry_column: String,
    /// Optional fiscal period end column (ISO date), required only for
    /// predictor re-timing.
    #[serde(default)]
    pub fiscal_end_column: Option<String>,
    #[serde(default = "default_missing_token")]
    pub missing_token: String,
    pub columns: Vec<ColumnSpec>,
}

fn default_firm_column() -> String {
    "firm_id".into()
}
fn default_year_column() -> String {
    "year".into()
}
fn default_label_column() -> String {
    "defaulted_next_year".into()
}
fn default_event_time_column() -> String {
    "event_time".into()
}
fn default_event_status_column() -> String {
    "event_status".into()
}
fn default_industry_column() -> String {
    "industry".into()
}
fn default_missing_token() -> String {
    "NA".into()
}

impl DataManifest {
    pub fn from_toml_file(path: &Path) -> Result<DataManifest> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Manifest(format!("cannot read {}: {e}", path.display())))?;
        let mut manifest: DataManifest =
            toml::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        // relative data path resolves against the manifest location
        if manifest.path.is_relative() {
            if let Some(dir) = path.parent() {
                manifest.path = dir.join(&manifest.path);
            }
        }
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for col in &self.columns {
            if !seen.insert(col.feature.as_str()) {
                return Err(Error::Manifest(format!(
                    "feature `{}` mapped more than once",
                    col.feature
                )));
            }
        }
        Ok(())
    }

    /// Derives the manifest that describes a panel written by [`write_panel`].
    pub fn for_panel(panel: &Panel, data_path: &Path) -> DataManifest {
        DataManifest {
            path: data_path.to_path_buf(),
            firm_column: default_firm_column(),
            year_column: default_year_column(),
            label_column: default_label_column(),
            event_time_column: default_event_time_column(),
            event_status_column: default_event_status_column(),
            industry_column: default_industry_column(),
            fiscal_end_column: panel
                .records()
                .iter()
                .any(|r| r.fiscal_end.is_some())
                .then(|| "fiscal_end".to_string()),
            missing_token: default_missing_token(),
            columns: panel
                .schema()
                .iter()
                .map(|(name, group)| ColumnSpec {
                    column: name.to_string(),
                    feature: name.to_string(),
                    group,
                })
                .collect(),
        }
    }
}

fn column_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Data(format!("{}: header lacks column `{name}`", path.display())))
}

/// Loads a panel according to its manifest.
///
/// Rows with an unparseable or out-of-range label are rejected with the
/// 1-based data row index; duplicate `(firm, year)` pairs are rejected naming
/// the duplicate.
pub fn load_panel(manifest: &DataManifest) -> Result<Panel> {
    manifest.validate()?;
    let path = &manifest.path;
    if !path.exists() {
        return Err(Error::Data(format!("panel file {} not found", path.display())));
    }
    let mut reader = csv::ReaderBuilder::new().from_path(path)?;
    let headers = reader.headers()?.clone();

    let firm_idx = column_index(&headers, &manifest.firm_column, path)?;
    let year_idx = column_index(&headers, &manifest.year_column, path)?;
    let label_idx = column_index(&headers, &manifest.label_column, path)?;
    let etime_idx = column_index(&headers, &manifest.event_time_column, path)?;
    let estat_idx = column_index(&headers, &manifest.event_status_column, path)?;
    let ind_idx = column_index(&headers, &manifest.industry_column, path)?;
    let fiscal_idx = manifest
        .fiscal_end_column
        .as_deref()
        .map(|c| column_index(&headers, c, path))
        .transpose()?;
    let feature_idx: Vec<usize> = manifest
        .columns
        .iter()
        .map(|c| column_index(&headers, &c.column, path))
        .collect::<Result<_>>()?;

    let schema = Schema::new(
        manifest
            .columns
            .iter()
            .map(|c| (c.feature.clone(), c.group))
            .collect(),
    )?;

    let mut records = Vec::new();
    for (row_no, row) in reader.records().enumerate() {
        let row = row?;
        let data_row = row_no + 1;
        let firm_id = row[firm_idx].to_string();
        let year: i32 = row[year_idx]
            .parse()
            .map_err(|_| Error::Data(format!("row {data_row}: bad year `{}`", &row[year_idx])))?;
        let label: u8 = match row[label_idx].parse::<u8>() {
            Ok(v @ (0 | 1)) => v,
            _ => {
                return Err(Error::Data(format!(
                    "row {data_row}: label `{}` outside {{0,1}}",
                    &row[label_idx]
                )))
            }
        };
        let event_time: i32 = row[etime_idx].parse().map_err(|_| {
            Error::Data(format!("row {data_row}: bad event_time `{}`", &row[etime_idx]))
        })?;
        let event_status: EventStatus = row[estat_idx].parse()?;
        let industry: Industry = row[ind_idx].parse()?;
        let fiscal_end = match fiscal_idx {
            Some(i) if !row[i].is_empty() && row[i] != manifest.missing_token => Some(
                row[i]
                    .parse::<chrono::NaiveDate>()
                    .map_err(|_| Error::Data(format!("row {data_row}: bad date `{}`", &row[i])))?,
            ),
            _ => None,
        };
        let mut features = Vec::with_capacity(feature_idx.len());
        for (&idx, spec) in feature_idx.iter().zip(&manifest.columns) {
            let cell = &row[idx];
            if cell == manifest.missing_token || cell.is_empty() {
                features.push(MISSING);
            } else {
                features.push(cell.parse::<f64>().map_err(|_| {
                    Error::Data(format!(
                        "row {data_row}: feature `{}` value `{cell}` not numeric",
                        spec.feature
                    ))
                })?);
            }
        }
        records.push(FirmYearRecord {
            firm_id,
            year,
            defaulted_next_year: label,
            event_time,
            event_status,
            industry,
            fiscal_end,
            features,
        });
    }
    Panel::new(schema, records)
}

/// Formats a feature value for the panel file. Uses shortest round-trip
/// formatting so load(write(panel)) reproduces every value bit-exactly.
fn format_value(x: f64, missing_token: &str) -> String {
    if is_missing(x) {
        missing_token.to_string()
    } else {
        format!("{x}")
    }
}

/// Writes a panel as delimited text, column order = schema order.
pub fn write_panel<W: Write>(panel: &Panel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let has_fiscal = panel.records().iter().any(|r| r.fiscal_end.is_some());
    let mut header = vec![
        "firm_id".to_string(),
        "year".to_string(),
        "defaulted_next_year".to_string(),
        "event_time".to_string(),
        "event_status".to_string(),
        "industry".to_string(),
    ];
    if has_fiscal {
        header.push("fiscal_end".to_string());
    }
    header.extend(panel.schema().iter().map(|(n, _)| n.to_string()));
    w.write_record(&header)?;

    for rec in panel.records() {
        let mut row = vec![
            rec.firm_id.clone(),
            rec.year.to_string(),
            rec.defaulted_next_year.to_string(),
            rec.event_time.to_string(),
            rec.event_status.to_string(),
            rec.industry.to_string(),
        ];
        if has_fiscal {
            row.push(
                rec.fiscal_end
                    .map(|d| d.to_string())
                    .unwrap_or_else(|| "NA".to_string()),
            );
        }
        row.extend(rec.features.iter().map(|&x| format_value(x, "NA")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the manifest describing a panel written next to it.
pub fn write_manifest<W: Write>(panel: &Panel, data_path: &Path, mut out: W) -> Result<()> {
    let manifest = DataManifest::for_panel(panel, data_path);
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| Error::Manifest(format!("serialize manifest: {e}")))?;
    out.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest_for(path: &Path) -> DataManifest {
        DataManifest {
            path: path.to_path_buf(),
            firm_column: "firm_id".into(),
            year_column: "year".into(),
            label_column: "defaulted_next_year".into(),
            event_time_column: "event_time".into(),
            event_status_column: "event_status".into(),
            industry_column: "industry".into(),
            fiscal_end_column: None,
            missing_token: "NA".into(),
            columns: vec![
                ColumnSpec {
                    column: "ni_at".into(),
                    feature: "ni_at".into(),
                    group: FeatureGroup::Accounting,
                },
                ColumnSpec {
                    column: "sigma".into(),
                    feature: "sigma".into(),
                    group: FeatureGroup::Market,
                },
            ],
        }
    }

    fn write_file(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("panel.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn well_formed_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "firm_id,year,defaulted_next_year,event_time,event_status,industry,ni_at,sigma\n\
             A,1995,0,1997,censored,shops,0.05,0.2\n\
             A,1996,0,1997,censored,shops,0.06,0.25\n\
             B,1995,1,1995,bankrupt,utils,-0.2,0.5\n",
        );
        let panel = load_panel(&manifest_for(&path)).unwrap();
        assert_eq!(panel.len(), 3);
        assert_eq!(panel.year_range(), (1995, 1996));
        assert_eq!(panel.schema().len(), 2);
        // sorted by (year, firm)
        assert_eq!(panel.records()[0].firm_id, "A");
        assert_eq!(panel.records()[1].firm_id, "B");
    }

    #[test]
    fn duplicate_firm_year_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "firm_id,year,defaulted_next_year,event_time,event_status,industry,ni_at,sigma\n\
             A,1995,0,1995,censored,shops,0.05,0.2\n\
             A,1995,0,1995,censored,shops,0.06,0.25\n",
        );
        let err = load_panel(&manifest_for(&path)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("duplicate") && msg.contains('A') && msg.contains("1995"), "{msg}");
    }

    #[test]
    fn missing_token_becomes_missing_marker() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "firm_id,year,defaulted_next_year,event_time,event_status,industry,ni_at,sigma\n\
             A,1995,0,1995,censored,shops,NA,0.2\n",
        );
        let panel = load_panel(&manifest_for(&path)).unwrap();
        assert!(is_missing(panel.records()[0].features[0]));
        assert_eq!(panel.records()[0].features[1], 0.2);
    }

    #[test]
    fn bad_label_rejected_with_row_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "firm_id,year,defaulted_next_year,event_time,event_status,industry,ni_at,sigma\n\
             A,1995,0,1995,censored,shops,0.0,0.2\n\
             B,1995,2,1995,censored,shops,0.0,0.2\n",
        );
        let err = load_panel(&manifest_for(&path)).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn missing_file_is_a_data_error() {
        let mut manifest = manifest_for(Path::new("/nonexistent/panel.csv"));
        manifest.path = PathBuf::from("/nonexistent/panel.csv");
        assert!(matches!(load_panel(&manifest), Err(Error::Data(_))));
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "firm_id,year,defaulted_next_year,event_time,event_status,industry,ni_at,sigma\n\
             A,1995,0,1996,censored,shops,0.1234567890123456,NA\n\
             A,1996,1,1996,bankrupt,shops,-3.5e-12,0.25\n",
        );
        let panel = load_panel(&manifest_for(&path)).unwrap();
        let out_path = dir.path().join("out.csv");
        write_panel(&panel, std::fs::File::create(&out_path).unwrap()).unwrap();
        let manifest = DataManifest::for_panel(&panel, &out_path);
        let reloaded = load_panel(&manifest).unwrap();
        assert_eq!(panel.schema(), reloaded.schema());
        for (a, b) in panel.records().iter().zip(reloaded.records()) {
            assert_eq!(a.firm_id, b.firm_id);
            assert_eq!(a.year, b.year);
            for (&x, &y) in a.features.iter().zip(&b.features) {
                assert!(x.to_bits() == y.to_bits() || (is_missing(x) && is_missing(y)));
            }
        }
    }
}
