//! Industry-year aggregates.

use std::collections::BTreeMap;

use super::super::panel::{is_missing, EventStatus, Industry, Panel};
use crate::error::{Error, Result};

/// Names of the panel features the aggregates read.
#[derive(Debug, Clone)]
pub struct IndustryColumns {
    pub sales: String,
    pub sigma: String,
    pub tl_at: String,
}

impl Default for IndustryColumns {
    fn default() -> Self {
        IndustryColumns {
            sales: "sales".into(),
            sigma: "sigma".into(),
            tl_at: "tl_at".into(),
        }
    }
}

/// Aggregates for one industry-year. Fields are `None` when the underlying
/// cross-section is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct IndustryAggregates {
    pub industry: Industry,
    pub year: i32,
    /// Herfindahl-Hirschman index of sales concentration.
    pub hh_sales: Option<f64>,
    pub median_sigma: Option<f64>,
    pub median_tl_at: Option<f64>,
    /// Realized defaults in the industry over the prior calendar year.
    pub defaults_last_1yr: usize,
    /// Realized defaults over the prior two calendar years.
    pub defaults_last_2yr: usize,
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Computes the per-industry aggregates for `year` from that year's
/// cross-section, plus trailing default counts.
///
/// A bankrupt firm's default event falls in the calendar year after its last
/// record (`event_time + 1`), so the trailing windows `[year-1, year-1]` and
/// `[year-2, year-1]` only count events already realized before `year`
/// starts.
pub fn industry_aggregates(
    panel: &Panel,
    year: i32,
    columns: &IndustryColumns,
) -> Result<BTreeMap<Industry, IndustryAggregates>> {
    let schema = panel.schema();
    let sales_pos = schema
        .position(&columns.sales)
        .ok_or_else(|| Error::Data(format!("panel lacks feature `{}`", columns.sales)))?;
    let sigma_pos = schema
        .position(&columns.sigma)
        .ok_or_else(|| Error::Data(format!("panel lacks feature `{}`", columns.sigma)))?;
    let tl_at_pos = schema
        .position(&columns.tl_at)
        .ok_or_else(|| Error::Data(format!("panel lacks feature `{}`", columns.tl_at)))?;

    // one default event per bankrupt firm, dated event_time + 1
    let mut default_events: BTreeMap<(Industry, i32), usize> = BTreeMap::new();
    let mut seen_firms = std::collections::BTreeSet::new();
    for rec in panel.records() {
        if rec.event_status == EventStatus::Bankrupt && seen_firms.insert(&rec.firm_id) {
            *default_events
                .entry((rec.industry, rec.event_time + 1))
                .or_default() += 1;
        }
    }

    let mut out = BTreeMap::new();
    for industry in Industry::ALL {
        let rows: Vec<_> = panel
            .records_in_year(year)
            .filter(|r| r.industry == industry)
            .collect();

        let sales: Vec<f64> = rows
            .iter()
            .map(|r| r.features[sales_pos])
            .filter(|x| !is_missing(*x) && *x > 0.0)
            .collect();
        let hh_sales = if sales.is_empty() {
            None
        } else {
            let total: f64 = sales.iter().sum();
            Some(sales.iter().map(|s| (s / total) * (s / total)).sum())
        };

        let median_sigma = median(
            rows.iter()
                .map(|r| r.features[sigma_pos])
                .filter(|x| !is_missing(*x))
                .collect(),
        );
        let median_tl_at = median(
            rows.iter()
                .map(|r| r.features[tl_at_pos])
                .filter(|x| !is_missing(*x))
                .collect(),
        );

        let defaults_last_1yr = default_events.get(&(industry, year - 1)).copied().unwrap_or(0);
        let defaults_last_2yr = defaults_last_1yr
            + default_events.get(&(industry, year - 2)).copied().unwrap_or(0);

        out.insert(
            industry,
            IndustryAggregates {
                industry,
                year,
                hh_sales,
                median_sigma,
                median_tl_at,
                defaults_last_1yr,
                defaults_last_2yr,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{FeatureGroup, FirmYearRecord, Schema};

    fn record(
        firm: &str,
        year: i32,
        industry: Industry,
        sales: f64,
        sigma: f64,
        tl_at: f64,
        status: EventStatus,
        event_time: i32,
    ) -> FirmYearRecord {
        FirmYearRecord {
            firm_id: firm.into(),
            year,
            defaulted_next_year: u8::from(status == EventStatus::Bankrupt && year == event_time),
            event_time,
            event_status: status,
            industry,
            fiscal_end: None,
            features: vec![sales, sigma, tl_at],
        }
    }

    fn panel(records: Vec<FirmYearRecord>) -> Panel {
        let schema = Schema::new(vec![
            ("sales".into(), FeatureGroup::Accounting),
            ("sigma".into(), FeatureGroup::Market),
            ("tl_at".into(), FeatureGroup::Accounting),
        ])
        .unwrap();
        Panel::new(schema, records).unwrap()
    }

    #[test]
    fn single_firm_industry_has_hh_one() {
        let p = panel(vec![record(
            "A",
            2000,
            Industry::Utils,
            10.0,
            0.1,
            0.5,
            EventStatus::Censored,
            2000,
        )]);
        let aggs = industry_aggregates(&p, 2000, &IndustryColumns::default()).unwrap();
        assert_eq!(aggs[&Industry::Utils].hh_sales, Some(1.0));
    }

    #[test]
    fn two_equal_firms_have_hh_half() {
        let p = panel(vec![
            record("A", 2000, Industry::Shops, 5.0, 0.1, 0.5, EventStatus::Censored, 2000),
            record("B", 2000, Industry::Shops, 5.0, 0.2, 0.6, EventStatus::Censored, 2000),
        ]);
        let aggs = industry_aggregates(&p, 2000, &IndustryColumns::default()).unwrap();
        assert_eq!(aggs[&Industry::Shops].hh_sales, Some(0.5));
        assert_eq!(aggs[&Industry::Shops].median_sigma, Some(0.15000000000000002));
    }

    #[test]
    fn skewed_sales_hand_case() {
        // sales 1,1,1,7: shares 0.1,0.1,0.1,0.7 -> HH = 3*0.01 + 0.49 = 0.52
        let p = panel(vec![
            record("A", 2000, Industry::Manuf, 1.0, 0.1, 0.5, EventStatus::Censored, 2000),
            record("B", 2000, Industry::Manuf, 1.0, 0.2, 0.5, EventStatus::Censored, 2000),
            record("C", 2000, Industry::Manuf, 1.0, 0.3, 0.5, EventStatus::Censored, 2000),
            record("D", 2000, Industry::Manuf, 7.0, 0.4, 0.5, EventStatus::Censored, 2000),
        ]);
        let aggs = industry_aggregates(&p, 2000, &IndustryColumns::default()).unwrap();
        assert!((aggs[&Industry::Manuf].hh_sales.unwrap() - 0.52).abs() < 1e-12);
    }

    #[test]
    fn empty_industry_year_reports_missing() {
        let p = panel(vec![record(
            "A",
            2000,
            Industry::Utils,
            10.0,
            0.1,
            0.5,
            EventStatus::Censored,
            2000,
        )]);
        let aggs = industry_aggregates(&p, 2000, &IndustryColumns::default()).unwrap();
        assert_eq!(aggs[&Industry::Chems].hh_sales, None);
        assert_eq!(aggs[&Industry::Chems].median_sigma, None);
    }

    #[test]
    fn trailing_default_counts() {
        // firm X: last record 1998, bankrupt -> event realized in 1999
        // firm Y: last record 1997, bankrupt -> event realized in 1998
        let p = panel(vec![
            record("X", 1997, Industry::Shops, 1.0, 0.1, 0.5, EventStatus::Bankrupt, 1998),
            record("X", 1998, Industry::Shops, 1.0, 0.1, 0.5, EventStatus::Bankrupt, 1998),
            record("Y", 1997, Industry::Shops, 1.0, 0.1, 0.5, EventStatus::Bankrupt, 1997),
            record("Z", 2000, Industry::Shops, 1.0, 0.1, 0.5, EventStatus::Censored, 2000),
        ]);
        let aggs_2000 = industry_aggregates(&p, 2000, &IndustryColumns::default()).unwrap();
        // events in 1999 (X) count for the 1-yr window of 2000; 1998 (Y) only
        // for the 2-yr window
        assert_eq!(aggs_2000[&Industry::Shops].defaults_last_1yr, 1);
        assert_eq!(aggs_2000[&Industry::Shops].defaults_last_2yr, 2);
        let aggs_1999 = industry_aggregates(&p, 1999, &IndustryColumns::default()).unwrap();
        assert_eq!(aggs_1999[&Industry::Shops].defaults_last_1yr, 1);
        assert_eq!(aggs_1999[&Industry::Shops].defaults_last_2yr, 1);
    }

    #[test]
    fn medians_are_permutation_invariant() {
        let rows = vec![
            record("A", 2000, Industry::Hlth, 2.0, 0.3, 0.7, EventStatus::Censored, 2000),
            record("B", 2000, Industry::Hlth, 3.0, 0.1, 0.4, EventStatus::Censored, 2000),
            record("C", 2000, Industry::Hlth, 4.0, 0.2, 0.9, EventStatus::Censored, 2000),
        ];
        let mut reversed = rows.clone();
        reversed.reverse();
        let a = industry_aggregates(&panel(rows), 2000, &IndustryColumns::default()).unwrap();
        let b = industry_aggregates(&panel(reversed), 2000, &IndustryColumns::default()).unwrap();
        assert_eq!(a[&Industry::Hlth], b[&Industry::Hlth]);
        assert_eq!(a[&Industry::Hlth].median_sigma, Some(0.2));
    }

    #[test]
    fn hh_stays_in_unit_interval() {
        let p = panel(vec![
            record("A", 2000, Industry::Enrgy, 0.001, 0.1, 0.5, EventStatus::Censored, 2000),
            record("B", 2000, Industry::Enrgy, 900.0, 0.2, 0.6, EventStatus::Censored, 2000),
            record("C", 2000, Industry::Enrgy, 42.0, 0.2, 0.6, EventStatus::Censored, 2000),
        ]);
        let aggs = industry_aggregates(&p, 2000, &IndustryColumns::default()).unwrap();
        let hh = aggs[&Industry::Enrgy].hh_sales.unwrap();
        assert!(hh > 0.0 && hh <= 1.0);
    }
}
