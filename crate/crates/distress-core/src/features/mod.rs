//! Predictor construction: market-model statistics, the structural
//! distance-to-default measure, industry aggregates, and the timing rules
//! that re-align raw observations so a forecast-year record only sees
//! information available before the year starts.

mod align;
mod industry;
mod market;
mod merton;

pub use align::{align_predictors, AlignOutcome};
pub use industry::{industry_aggregates, IndustryAggregates, IndustryColumns};
pub use market::{market_model_stats, relative_size, MarketModelStats};
pub use merton::{merton_dd, naive_dd, MertonOptions};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equity observations for one firm over one year, the raw material for the
/// market-model statistics and the structural model.
#[derive(Debug, Clone)]
pub struct EquitySeries {
    pub firm_id: String,
    /// Periodic simple returns over the year, in time order.
    pub returns: Vec<f64>,
    /// Matching market-index returns.
    pub index_returns: Vec<f64>,
    /// End-of-period market value of equity.
    pub market_equity: f64,
    /// Face value of debt.
    pub debt_face_value: f64,
    /// Annualized risk-free rate (decimal).
    pub risk_free_rate: f64,
    /// Observations per year at this sampling frequency (12 monthly, ~252
    /// daily). Volatilities annualize by its square root, means linearly.
    pub periods_per_year: f64,
}

impl EquitySeries {
    pub fn validate(&self) -> Result<()> {
        if self.returns.len() < 30 {
            return Err(Error::Data(format!(
                "firm {}: {} return observations, need at least 30",
                self.firm_id,
                self.returns.len()
            )));
        }
        if self.returns.len() != self.index_returns.len() {
            return Err(Error::Data(format!(
                "firm {}: firm and index return lengths differ",
                self.firm_id
            )));
        }
        if !(self.market_equity > 0.0) {
            return Err(Error::Data(format!(
                "firm {}: market equity must be positive",
                self.firm_id
            )));
        }
        if !(self.debt_face_value > 0.0) {
            return Err(Error::Data(format!(
                "firm {}: debt face value must be positive",
                self.firm_id
            )));
        }
        if !(self.periods_per_year > 0.0) {
            return Err(Error::Data(format!(
                "firm {}: periods_per_year must be positive",
                self.firm_id
            )));
        }
        Ok(())
    }
}

/// One year of macro indicators, as published in December of that year.
/// A row with `year = t-1` feeds forecasts of year `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroRow {
    pub year: i32,
    pub term_spread: f64,
    pub credit_spread: f64,
    pub recession: u8,
    pub inflation: f64,
    pub gdp_growth: f64,
    pub unemployment: f64,
    pub industrial_production: f64,
}

impl MacroRow {
    pub const FEATURE_NAMES: [&'static str; 7] = [
        "term_spread",
        "credit_spread",
        "recession",
        "inflation",
        "gdp_growth",
        "unemployment",
        "industrial_production",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.term_spread,
            self.credit_spread,
            f64::from(self.recession),
            self.inflation,
            self.gdp_growth,
            self.unemployment,
            self.industrial_production,
        ]
    }
}

/// Outcome of the iterative structural model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralResult {
    /// Implied end-of-period asset value.
    pub asset_value: f64,
    /// Annualized asset volatility.
    pub asset_volatility: f64,
    /// Annualized implied asset drift.
    pub drift: f64,
    pub distance_to_default: f64,
    pub iterations: usize,
    pub converged: bool,
}
