//! Firm-year panel data model.
//!
//! A [`Panel`] is the currency every other module trades in: an ordered set
//! of [`FirmYearRecord`]s sharing one feature [`Schema`]. Records are sorted
//! by `(year, firm_id)` and carry, besides the predictor values, the binary
//! next-year default label and the survival pair `(event_time, event_status)`
//! used by the censored-data models.
//!
//! Missing predictor values are represented by an explicit sentinel
//! ([`MISSING`], an IEEE NaN) that is distinct from every real value and
//! survives text round-trips as the manifest's missing token.

mod impute;
mod manifest;
mod stats;
mod synth;

pub use impute::impute_last_observation;
pub use manifest::{load_panel, write_manifest, write_panel, ColumnSpec, DataManifest};
pub use stats::{correlation_with_default, summarize, FeatureSummary};
pub use synth::{signal_scores, synthesize_panel, SyntheticSpec};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel for a missing predictor value.
pub const MISSING: f64 = f64::NAN;

/// True when a feature value holds the missing sentinel.
#[inline]
pub fn is_missing(x: f64) -> bool {
    x.is_nan()
}

/// Predictor group a feature belongs to. Groups drive the cumulative
/// predictor staging in benchmarks and the scope of imputation (only
/// accounting features are forward-filled).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Accounting,
    Market,
    Industry,
    Macro,
    Text,
    Structural,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 6] = [
        FeatureGroup::Structural,
        FeatureGroup::Accounting,
        FeatureGroup::Market,
        FeatureGroup::Industry,
        FeatureGroup::Macro,
        FeatureGroup::Text,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Accounting => "accounting",
            FeatureGroup::Market => "market",
            FeatureGroup::Industry => "industry",
            FeatureGroup::Macro => "macro",
            FeatureGroup::Text => "text",
            FeatureGroup::Structural => "structural",
        }
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accounting" => Ok(FeatureGroup::Accounting),
            "market" => Ok(FeatureGroup::Market),
            "industry" => Ok(FeatureGroup::Industry),
            "macro" => Ok(FeatureGroup::Macro),
            "text" => Ok(FeatureGroup::Text),
            "structural" => Ok(FeatureGroup::Structural),
            other => Err(Error::Data(format!("unknown feature group `{other}`"))),
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fama-French 12 industry classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Industry {
    NoDur,
    Durbl,
    Manuf,
    Enrgy,
    Chems,
    BusEq,
    Telcm,
    Utils,
    Shops,
    Hlth,
    Money,
    Other,
}

impl Industry {
    pub const ALL: [Industry; 12] = [
        Industry::NoDur,
        Industry::Durbl,
        Industry::Manuf,
        Industry::Enrgy,
        Industry::Chems,
        Industry::BusEq,
        Industry::Telcm,
        Industry::Utils,
        Industry::Shops,
        Industry::Hlth,
        Industry::Money,
        Industry::Other,
    ];

    /// 1-based industry code.
    pub fn code(self) -> u8 {
        Industry::ALL.iter().position(|i| *i == self).unwrap() as u8 + 1
    }

    pub fn from_code(code: u8) -> Result<Industry> {
        Industry::ALL
            .get(code.checked_sub(1).map(usize::from).unwrap_or(usize::MAX))
            .copied()
            .ok_or_else(|| Error::Data(format!("industry code {code} outside 1..=12")))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Industry::NoDur => "nodur",
            Industry::Durbl => "durbl",
            Industry::Manuf => "manuf",
            Industry::Enrgy => "enrgy",
            Industry::Chems => "chems",
            Industry::BusEq => "buseq",
            Industry::Telcm => "telcm",
            Industry::Utils => "utils",
            Industry::Shops => "shops",
            Industry::Hlth => "hlth",
            Industry::Money => "money",
            Industry::Other => "other",
        }
    }
}

impl FromStr for Industry {
    type Err = Error;

    /// Accepts either the short name or the 1..=12 numeric code.
    fn from_str(s: &str) -> Result<Industry> {
        if let Ok(code) = s.parse::<u8>() {
            return Industry::from_code(code);
        }
        Industry::ALL
            .iter()
            .find(|i| i.as_str() == s.to_ascii_lowercase())
            .copied()
            .ok_or_else(|| Error::Data(format!("unknown industry `{s}`")))
    }
}

impl fmt::Display for Industry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Terminal state of a firm in the sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventStatus {
    Bankrupt,
    Censored,
}

impl FromStr for EventStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<EventStatus> {
        match s {
            "bankrupt" => Ok(EventStatus::Bankrupt),
            "censored" => Ok(EventStatus::Censored),
            other => Err(Error::Data(format!("unknown event status `{other}`"))),
        }
    }
}

impl fmt::Display for EventStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventStatus::Bankrupt => f.write_str("bankrupt"),
            EventStatus::Censored => f.write_str("censored"),
        }
    }
}

/// Ordered list of feature names with group tags. Identical across all
/// records of a panel; feature values are stored positionally against it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    features: Vec<(String, FeatureGroup)>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl Schema {
    pub fn new(features: Vec<(String, FeatureGroup)>) -> Result<Schema> {
        let mut index = BTreeMap::new();
        for (pos, (name, _)) in features.iter().enumerate() {
            if index.insert(name.clone(), pos).is_some() {
                return Err(Error::Data(format!("duplicate feature name `{name}`")));
            }
        }
        Ok(Schema { features, index })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        // index is skipped by serde; rebuild lazily if empty after deserialization
        if self.index.is_empty() && !self.features.is_empty() {
            return self.features.iter().position(|(n, _)| n == name);
        }
        self.index.get(name).copied()
    }

    pub fn name(&self, pos: usize) -> &str {
        &self.features[pos].0
    }

    pub fn group(&self, pos: usize) -> FeatureGroup {
        self.features[pos].1
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, FeatureGroup)> {
        self.features.iter().map(|(n, g)| (n.as_str(), *g))
    }

    /// Positions of the features belonging to any of `groups`, in schema order.
    pub fn positions_in_groups(&self, groups: &[FeatureGroup]) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, (_, g))| groups.contains(g))
            .map(|(i, _)| i)
            .collect()
    }
}

/// One firm-year observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmYearRecord {
    pub firm_id: String,
    pub year: i32,
    /// Binary label: 1 when the firm goes bankrupt in the year after `year`.
    pub defaulted_next_year: u8,
    /// Last observed year of the firm.
    pub event_time: i32,
    pub event_status: EventStatus,
    pub industry: Industry,
    /// Fiscal period end of the statement behind the accounting features,
    /// when known. Required by predictor re-timing, absent otherwise.
    pub fiscal_end: Option<chrono::NaiveDate>,
    /// Feature values in schema order; [`MISSING`] marks absent values.
    pub features: Vec<f64>,
}

/// Ordered collection of firm-year records sharing one schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Panel {
    schema: Schema,
    records: Vec<FirmYearRecord>,
    year_range: (i32, i32),
}

impl Panel {
    /// Builds a panel, sorting records by `(year, firm_id)` and checking the
    /// record invariants.
    pub fn new(schema: Schema, mut records: Vec<FirmYearRecord>) -> Result<Panel> {
        if records.is_empty() {
            return Err(Error::Data("panel has no records".into()));
        }
        for rec in &records {
            if rec.features.len() != schema.len() {
                return Err(Error::Data(format!(
                    "record ({}, {}) has {} feature values, schema has {}",
                    rec.firm_id,
                    rec.year,
                    rec.features.len(),
                    schema.len()
                )));
            }
            if rec.defaulted_next_year > 1 {
                return Err(Error::Data(format!(
                    "record ({}, {}) label {} outside {{0,1}}",
                    rec.firm_id, rec.year, rec.defaulted_next_year
                )));
            }
        }
        records.sort_by(|a, b| (a.year, &a.firm_id).cmp(&(b.year, &b.firm_id)));
        for pair in records.windows(2) {
            if pair[0].year == pair[1].year && pair[0].firm_id == pair[1].firm_id {
                return Err(Error::Data(format!(
                    "duplicate record for firm `{}` year {}",
                    pair[0].firm_id, pair[0].year
                )));
            }
        }
        let year_range = (
            records.first().unwrap().year,
            records.last().unwrap().year,
        );
        Ok(Panel {
            schema,
            records,
            year_range,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn records(&self) -> &[FirmYearRecord] {
        &self.records
    }

    pub fn year_range(&self) -> (i32, i32) {
        self.year_range
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records observed in `year`, in firm order.
    pub fn records_in_year(&self, year: i32) -> impl Iterator<Item = &FirmYearRecord> {
        self.records.iter().filter(move |r| r.year == year)
    }

    /// Rebuilds the panel with a new schema and per-record features produced
    /// by `f`. Used by transformations that extend or re-time features.
    pub fn map_records<F>(&self, schema: Schema, f: F) -> Result<Panel>
    where
        F: Fn(&FirmYearRecord) -> Option<FirmYearRecord>,
    {
        let records: Vec<FirmYearRecord> = self.records.iter().filter_map(|r| f(r)).collect();
        Panel::new(schema, records)
    }
}
