//! Structural distance to default.
//!
//! Equity is valued as a European call on firm assets with the debt face
//! value as strike. The iterative solver alternates between (a) inverting
//! the call-pricing identity for the asset value on every period of the
//! reconstructed equity path, given the current asset volatility, and (b)
//! re-estimating the asset volatility and drift from the implied log asset
//! returns, until the volatility stops moving.

use statrs::function::erf::erfc;

use super::{EquitySeries, StructuralResult};
use crate::error::{Error, Result};

/// Standard normal CDF.
fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Solver knobs. Defaults: one-year horizon, drift floored at the risk-free
/// rate minus 10% to keep deeply negative sample drifts from blowing up the
/// measure.
#[derive(Debug, Clone, Copy)]
pub struct MertonOptions {
    /// Horizon T in years.
    pub horizon: f64,
    /// Apply the `r - 0.10` drift floor.
    pub floor_drift: bool,
    /// Stop when |change in sigma_V| falls below this.
    pub sigma_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MertonOptions {
    fn default() -> Self {
        MertonOptions {
            horizon: 1.0,
            floor_drift: true,
            sigma_tolerance: 1e-4,
            max_iterations: 500,
        }
    }
}

/// European call value of equity: E = V N(d1) - F e^{-rT} N(d2).
fn call_price(asset_value: f64, debt: f64, rate: f64, sigma: f64, horizon: f64) -> f64 {
    let discounted_debt = debt * (-rate * horizon).exp();
    if sigma * horizon.sqrt() < 1e-12 {
        return (asset_value - discounted_debt).max(0.0);
    }
    let vol = sigma * horizon.sqrt();
    let d1 = ((asset_value / debt).ln() + (rate + 0.5 * sigma * sigma) * horizon) / vol;
    let d2 = d1 - vol;
    asset_value * norm_cdf(d1) - discounted_debt * norm_cdf(d2)
}

/// Inverts the pricing identity for V given observed equity. The call value
/// is strictly increasing in V, so a bracketed bisection always lands on the
/// unique root; a few Newton steps (dE/dV = N(d1)) polish it to full
/// precision.
fn invert_for_asset_value(
    equity: f64,
    debt: f64,
    rate: f64,
    sigma: f64,
    horizon: f64,
) -> Result<f64> {
    let discounted_debt = debt * (-rate * horizon).exp();
    if sigma * horizon.sqrt() < 1e-12 {
        return Ok(equity + discounted_debt);
    }
    let mut lo = equity;
    let mut hi = equity + discounted_debt * 1e3;
    if call_price(lo, debt, rate, sigma, horizon) > equity
        || call_price(hi, debt, rate, sigma, horizon) < equity
    {
        return Err(Error::Numeric(format!(
            "asset value bracket failed (E={equity}, F={debt}, sigma={sigma})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if call_price(mid, debt, rate, sigma, horizon) < equity {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / hi < 1e-12 {
            break;
        }
    }
    let mut v = 0.5 * (lo + hi);
    for _ in 0..4 {
        let vol = sigma * horizon.sqrt();
        let d1 = ((v / debt).ln() + (rate + 0.5 * sigma * sigma) * horizon) / vol;
        let delta = norm_cdf(d1);
        if delta <= 0.0 {
            break;
        }
        v -= (call_price(v, debt, rate, sigma, horizon) - equity) / delta;
    }
    Ok(v)
}

/// Equity path implied by the end-of-period value and the return series:
/// levels E_0..E_n with E_n the observed market equity.
fn equity_path(series: &EquitySeries) -> Result<Vec<f64>> {
    let mut path = vec![0.0; series.returns.len() + 1];
    *path.last_mut().unwrap() = series.market_equity;
    for k in (0..series.returns.len()).rev() {
        let growth = 1.0 + series.returns[k];
        if growth <= 0.0 {
            return Err(Error::Data(format!(
                "firm {}: return {} implies non-positive equity",
                series.firm_id, series.returns[k]
            )));
        }
        path[k] = path[k + 1] / growth;
    }
    Ok(path)
}

/// Iterated structural solver. On non-convergence the last iterate is
/// returned with `converged = false`.
pub fn merton_dd(series: &EquitySeries, options: &MertonOptions) -> Result<StructuralResult> {
    series.validate()?;
    if series.risk_free_rate < 0.0 {
        return Err(Error::Data(format!(
            "firm {}: negative risk-free rate",
            series.firm_id
        )));
    }
    let horizon = options.horizon;
    let equity = series.market_equity;
    let debt = series.debt_face_value;
    let rate = series.risk_free_rate;
    let path = equity_path(series)?;

    // annualized equity volatility seeds the asset volatility
    let n = series.returns.len() as f64;
    let mean_r = series.returns.iter().sum::<f64>() / n;
    let var_r: f64 = series
        .returns
        .iter()
        .map(|r| (r - mean_r) * (r - mean_r))
        .sum::<f64>()
        / (n - 1.0);
    let sigma_equity = var_r.sqrt() * series.periods_per_year.sqrt();
    let mut sigma = (sigma_equity * equity / (equity + debt)).max(1e-6);

    let mut drift = rate;
    let mut converged = false;
    let mut iterations = 0;
    let mut assets = vec![0.0; path.len()];
    for iter in 1..=options.max_iterations {
        iterations = iter;
        for (v, &e) in assets.iter_mut().zip(&path) {
            *v = invert_for_asset_value(e, debt, rate, sigma, horizon)?;
        }
        let log_returns: Vec<f64> = assets.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        let m = log_returns.len() as f64;
        let mean_lr = log_returns.iter().sum::<f64>() / m;
        let var_lr: f64 = log_returns
            .iter()
            .map(|r| (r - mean_lr) * (r - mean_lr))
            .sum::<f64>()
            / (m - 1.0);
        let new_sigma = (var_lr.sqrt() * series.periods_per_year.sqrt()).max(1e-8);
        drift = mean_lr * series.periods_per_year;
        let delta = (new_sigma - sigma).abs();
        sigma = new_sigma;
        if delta < options.sigma_tolerance {
            converged = true;
            break;
        }
    }

    if options.floor_drift {
        drift = drift.max(rate - 0.10);
    }
    let asset_value = *assets.last().unwrap();
    let dd = ((asset_value / debt).ln() + (drift - 0.5 * sigma * sigma) * horizon)
        / (sigma * horizon.sqrt());

    Ok(StructuralResult {
        asset_value,
        asset_volatility: sigma,
        drift,
        distance_to_default: dd,
        iterations,
        converged,
    })
}

/// Closed-form alternative that skips the iteration: asset volatility is the
/// leverage-weighted blend `E/(E+F) sigma_E + F/(E+F) (0.05 + 0.25 sigma_E)`
/// and the drift is the firm's compounded return over the series.
pub fn naive_dd(series: &EquitySeries, horizon: f64) -> Result<f64> {
    series.validate()?;
    let equity = series.market_equity;
    let debt = series.debt_face_value;
    let n = series.returns.len() as f64;
    let mean_r = series.returns.iter().sum::<f64>() / n;
    let var_r: f64 = series
        .returns
        .iter()
        .map(|r| (r - mean_r) * (r - mean_r))
        .sum::<f64>()
        / (n - 1.0);
    let sigma_equity = var_r.sqrt() * series.periods_per_year.sqrt();
    let weight = equity / (equity + debt);
    let sigma = weight * sigma_equity + (1.0 - weight) * (0.05 + 0.25 * sigma_equity);
    let annual_return: f64 = series.returns.iter().map(|r| 1.0 + r).product::<f64>() - 1.0;
    Ok(
        (((equity + debt) / debt).ln() + (annual_return - 0.5 * sigma * sigma) * horizon)
            / (sigma * horizon.sqrt()),
    )
}
