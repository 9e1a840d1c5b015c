//! Predictor timing alignment.
//!
//! Input records carry data measured during their own year: accounting
//! values from the fiscal statement whose end date the record holds, and
//! market/structural values computed from that year's trading. The aligned
//! record for forecast year `t` must only contain information available
//! before `t` starts, so alignment re-times features as:
//!
//! - accounting and text: the firm's latest statement ending at least six
//!   months before January 1 of `t` (no qualifying statement leaves them
//!   missing, to be imputed later);
//! - market and structural: the firm's record of year `t-1`;
//! - macro: the row published for December of `t-1` (records with no macro
//!   row for `t-1` are dropped and counted).
//!
//! Labels, survival pairs, and industry stay with the record.

use std::collections::HashMap;

use chrono::{Months, NaiveDate};

use super::MacroRow;
use crate::error::{Error, Result};
use crate::panel::{FeatureGroup, FirmYearRecord, Panel, Schema, MISSING};

/// Aligned panel plus bookkeeping.
#[derive(Debug)]
pub struct AlignOutcome {
    pub panel: Panel,
    /// Records dropped because no macro row existed for their prior year.
    pub dropped_missing_macro: usize,
}

/// True when a statement ending on `fiscal_end` is known at the start of
/// `year`: the end date plus six months must not pass January 1 of `year`.
fn statement_eligible(fiscal_end: NaiveDate, year: i32) -> bool {
    let cutoff = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid date");
    match fiscal_end.checked_add_months(Months::new(6)) {
        Some(d) => d <= cutoff,
        None => false,
    }
}

pub fn align_predictors(panel: &Panel, macro_rows: &[MacroRow]) -> Result<AlignOutcome> {
    let schema = panel.schema();
    for name in MacroRow::FEATURE_NAMES {
        if schema.position(name).is_some() {
            return Err(Error::Data(format!(
                "panel already carries macro feature `{name}`"
            )));
        }
    }
    let statement_groups = [FeatureGroup::Accounting, FeatureGroup::Text];
    let lagged_groups = [FeatureGroup::Market, FeatureGroup::Structural];
    let statement_pos = schema.positions_in_groups(&statement_groups);
    let lagged_pos = schema.positions_in_groups(&lagged_groups);

    let mut macro_by_year: HashMap<i32, &MacroRow> = HashMap::new();
    for row in macro_rows {
        if macro_by_year.insert(row.year, row).is_some() {
            return Err(Error::Data(format!("duplicate macro row for year {}", row.year)));
        }
    }

    // firm -> record indices (panel order is (year, firm), so these are year-ascending)
    let mut by_firm: HashMap<&str, Vec<usize>> = HashMap::new();
    for (idx, rec) in panel.records().iter().enumerate() {
        if rec.fiscal_end.is_none() {
            return Err(Error::Data(format!(
                "record ({}, {}) lacks a fiscal period end date",
                rec.firm_id, rec.year
            )));
        }
        by_firm.entry(rec.firm_id.as_str()).or_default().push(idx);
    }

    let mut out_schema_features: Vec<(String, FeatureGroup)> =
        schema.iter().map(|(n, g)| (n.to_string(), g)).collect();
    for name in MacroRow::FEATURE_NAMES {
        out_schema_features.push((name.to_string(), FeatureGroup::Macro));
    }
    let out_schema = Schema::new(out_schema_features)?;

    let mut dropped = 0usize;
    let mut records: Vec<FirmYearRecord> = Vec::with_capacity(panel.len());
    for rec in panel.records() {
        let target_year = rec.year;
        let macro_row = match macro_by_year.get(&(target_year - 1)) {
            Some(row) => row,
            None => {
                dropped += 1;
                continue;
            }
        };
        let firm_records = &by_firm[rec.firm_id.as_str()];

        // latest eligible statement by fiscal end date
        let statement = firm_records
            .iter()
            .map(|&i| &panel.records()[i])
            .filter(|r| statement_eligible(r.fiscal_end.unwrap(), target_year))
            .max_by_key(|r| r.fiscal_end.unwrap());

        // prior-year record for market/structural values
        let prior = firm_records
            .iter()
            .map(|&i| &panel.records()[i])
            .find(|r| r.year == target_year - 1);

        let mut features = vec![MISSING; out_schema.len()];
        if let Some(stmt) = statement {
            for &pos in &statement_pos {
                features[pos] = stmt.features[pos];
            }
        }
        if let Some(prev) = prior {
            for &pos in &lagged_pos {
                features[pos] = prev.features[pos];
            }
        }
        for (name, value) in MacroRow::FEATURE_NAMES.iter().zip(macro_row.values()) {
            features[out_schema.position(name).unwrap()] = value;
        }

        records.push(FirmYearRecord {
            firm_id: rec.firm_id.clone(),
            year: rec.year,
            defaulted_next_year: rec.defaulted_next_year,
            event_time: rec.event_time,
            event_status: rec.event_status,
            industry: rec.industry,
            fiscal_end: statement.and_then(|s| s.fiscal_end),
            features,
        });
    }
    if records.is_empty() {
        return Err(Error::Data(
            "alignment dropped every record (no macro coverage)".into(),
        ));
    }
    Ok(AlignOutcome {
        panel: Panel::new(out_schema, records)?,
        dropped_missing_macro: dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{is_missing, EventStatus, Industry};

    fn macro_row(year: i32) -> MacroRow {
        MacroRow {
            year,
            term_spread: year as f64 / 1000.0,
            credit_spread: 1.0,
            recession: 0,
            inflation: 3.0,
            gdp_growth: 2.0,
            unemployment: 5.0,
            industrial_production: 1.5,
        }
    }

    fn record(firm: &str, year: i32, fiscal_end: (i32, u32, u32), values: [f64; 2]) -> FirmYearRecord {
        FirmYearRecord {
            firm_id: firm.into(),
            year,
            defaulted_next_year: 0,
            event_time: year,
            event_status: EventStatus::Censored,
            industry: Industry::Other,
            fiscal_end: NaiveDate::from_ymd_opt(fiscal_end.0, fiscal_end.1, fiscal_end.2),
            features: values.to_vec(),
        }
    }

    fn raw_panel(records: Vec<FirmYearRecord>) -> Panel {
        let schema = Schema::new(vec![
            ("ni_at".into(), FeatureGroup::Accounting),
            ("sigma".into(), FeatureGroup::Market),
        ])
        .unwrap();
        Panel::new(schema, records).unwrap()
    }

    fn macro_table(years: std::ops::RangeInclusive<i32>) -> Vec<MacroRow> {
        years.map(macro_row).collect()
    }

    #[test]
    fn june_30_statement_is_eligible_for_next_year() {
        assert!(statement_eligible(
            NaiveDate::from_ymd_opt(1994, 6, 30).unwrap(),
            1995
        ));
        assert!(statement_eligible(
            NaiveDate::from_ymd_opt(1994, 7, 1).unwrap(),
            1995
        ));
    }

    #[test]
    fn september_30_statement_is_not_eligible() {
        assert!(!statement_eligible(
            NaiveDate::from_ymd_opt(1994, 9, 30).unwrap(),
            1995
        ));
    }

    #[test]
    fn late_statement_falls_back_to_previous_year() {
        let panel = raw_panel(vec![
            record("A", 1993, (1993, 12, 31), [1.0, 0.10]),
            record("A", 1994, (1994, 9, 30), [2.0, 0.20]),
            record("A", 1995, (1995, 9, 30), [3.0, 0.30]),
        ]);
        let out = align_predictors(&panel, &macro_table(1992..=1995)).unwrap();
        let aligned: Vec<_> = out.panel.records().iter().collect();
        // year 1995: statement of 1994 ends Sep 30 1994 (+6m = Mar 30 1995,
        // too late), so the Dec 31 1993 statement is used
        let rec_1995 = aligned.iter().find(|r| r.year == 1995).unwrap();
        assert_eq!(rec_1995.features[0], 1.0);
        // market value comes from the 1994 record
        assert_eq!(rec_1995.features[1], 0.20);
    }

    #[test]
    fn eligible_statement_used_for_following_year() {
        let panel = raw_panel(vec![
            record("A", 1994, (1994, 6, 30), [5.0, 0.11]),
            record("A", 1995, (1995, 6, 30), [6.0, 0.22]),
        ]);
        let out = align_predictors(&panel, &macro_table(1993..=1995)).unwrap();
        let rec_1995 = out.panel.records().iter().find(|r| r.year == 1995).unwrap();
        assert_eq!(rec_1995.features[0], 5.0);
        assert_eq!(rec_1995.features[1], 0.11);
    }

    #[test]
    fn macro_row_of_prior_year_attaches() {
        let panel = raw_panel(vec![
            record("A", 1989, (1989, 12, 31), [1.0, 0.1]),
            record("A", 1990, (1990, 12, 31), [2.0, 0.2]),
        ]);
        let out = align_predictors(&panel, &macro_table(1988..=1990)).unwrap();
        let rec_1990 = out.panel.records().iter().find(|r| r.year == 1990).unwrap();
        let pos = out.panel.schema().position("term_spread").unwrap();
        // term_spread was seeded as year/1000, so 1989's row shows up
        assert_eq!(rec_1990.features[pos], 1.989);
    }

    #[test]
    fn missing_macro_year_drops_records_with_count() {
        let panel = raw_panel(vec![
            record("A", 1990, (1990, 12, 31), [1.0, 0.1]),
            record("A", 1991, (1991, 12, 31), [2.0, 0.2]),
        ]);
        // only 1990 is covered: the 1990 record needs 1989 (absent)
        let out = align_predictors(&panel, &macro_table(1990..=1990)).unwrap();
        assert_eq!(out.dropped_missing_macro, 1);
        assert_eq!(out.panel.len(), 1);
        assert_eq!(out.panel.records()[0].year, 1991);
    }

    #[test]
    fn first_year_record_has_missing_lagged_features() {
        let panel = raw_panel(vec![
            record("A", 1990, (1990, 6, 30), [1.0, 0.1]),
            record("A", 1991, (1991, 6, 30), [2.0, 0.2]),
        ]);
        let out = align_predictors(&panel, &macro_table(1989..=1991)).unwrap();
        let rec_1990 = out.panel.records().iter().find(|r| r.year == 1990).unwrap();
        assert!(is_missing(rec_1990.features[0]), "no statement before 1990");
        assert!(is_missing(rec_1990.features[1]), "no 1989 market record");
    }

    #[test]
    fn perturbing_current_year_data_leaves_current_features_unchanged() {
        let clean = vec![
            record("A", 1994, (1994, 6, 30), [5.0, 0.11]),
            record("A", 1995, (1995, 6, 30), [6.0, 0.22]),
        ];
        let mut perturbed = clean.clone();
        perturbed[1].features = vec![999.0, 999.0];
        let out_clean = align_predictors(&raw_panel(clean), &macro_table(1993..=1995)).unwrap();
        let out_pert = align_predictors(&raw_panel(perturbed), &macro_table(1993..=1995)).unwrap();
        let a = out_clean.panel.records().iter().find(|r| r.year == 1995).unwrap();
        let b = out_pert.panel.records().iter().find(|r| r.year == 1995).unwrap();
        assert_eq!(a.features, b.features);
    }

    #[test]
    fn missing_fiscal_end_is_an_error() {
        let mut rec = record("A", 1994, (1994, 6, 30), [5.0, 0.11]);
        rec.fiscal_end = None;
        let panel = raw_panel(vec![rec]);
        assert!(align_predictors(&panel, &macro_table(1993..=1995)).is_err());
    }
}
