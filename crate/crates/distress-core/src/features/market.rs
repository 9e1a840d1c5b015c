//! Market-model regression statistics and relative size.

use super::EquitySeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketModelStats {
    /// OLS slope of firm returns on index returns.
    pub beta: f64,
    /// Sample standard deviation of the OLS residuals (per period, not
    /// annualized).
    pub sigma: f64,
    /// Compounded firm return minus compounded index return over the year.
    pub annual_excess_return: f64,
}

/// Single-factor market model by OLS, plus the compounded excess return.
pub fn market_model_stats(series: &EquitySeries) -> Result<MarketModelStats> {
    series.validate()?;
    let n = series.returns.len() as f64;
    let mean_firm = series.returns.iter().sum::<f64>() / n;
    let mean_index = series.index_returns.iter().sum::<f64>() / n;

    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&r, &m) in series.returns.iter().zip(&series.index_returns) {
        sxx += (m - mean_index) * (m - mean_index);
        sxy += (m - mean_index) * (r - mean_firm);
    }
    let index_constant = series.index_returns.windows(2).all(|w| w[0] == w[1]);
    if sxx == 0.0 || index_constant {
        return Err(Error::Data(format!(
            "firm {}: index returns have zero variance",
            series.firm_id
        )));
    }
    let beta = sxy / sxx;
    let alpha = mean_firm - beta * mean_index;

    let ss_resid: f64 = series
        .returns
        .iter()
        .zip(&series.index_returns)
        .map(|(&r, &m)| {
            let e = r - alpha - beta * m;
            e * e
        })
        .sum();
    let sigma = (ss_resid / (n - 1.0)).sqrt();

    let firm_growth: f64 = series.returns.iter().map(|r| 1.0 + r).product();
    let index_growth: f64 = series.index_returns.iter().map(|r| 1.0 + r).product();

    Ok(MarketModelStats {
        beta,
        sigma,
        annual_excess_return: firm_growth - index_growth,
    })
}

/// Natural log of firm market equity over the total market value.
pub fn relative_size(firm_mktcap: f64, total_mktcap: f64) -> Result<f64> {
    if !(firm_mktcap > 0.0 && total_mktcap > 0.0) {
        return Err(Error::Data(format!(
            "relative_size needs positive inputs, got ({firm_mktcap}, {total_mktcap})"
        )));
    }
    Ok((firm_mktcap / total_mktcap).ln())
}
