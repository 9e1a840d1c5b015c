//! Grid tuning on validation AUC over one walk-forward step.
//!
//! For every grid point a model is trained on the training years and scored
//! on the two validation years; the point with the highest validation AUC
//! wins (ties go to the earliest grid position) and its model produces the
//! test-year scores. Test-year labels are never read during tuning, only
//! copied into the emitted forecast records.

use std::collections::BTreeSet;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::auc;
use super::window::SplitPlan;
use crate::error::{Error, Result};
use crate::model::{train, Dataset, ModelSpec, Standardization, SurvivalPair, TrainedModel};
use crate::panel::{EventStatus, FeatureGroup, Industry, Panel};

/// One scored test-year firm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastEntry {
    pub firm_id: String,
    pub score: f64,
    pub label: u8,
}

/// Out-of-sample scores for one test year plus the tuning outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastSet {
    pub test_year: i32,
    pub entries: Vec<ForecastEntry>,
    pub winning_spec: ModelSpec,
    pub validation_auc: f64,
}

/// Train/validation/test matrices for one plan, sharing the training
/// standardization.
#[derive(Debug)]
pub struct DatasetSplits {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    /// Firm ids of the test rows, in row order.
    pub test_firms: Vec<String>,
    /// Rows dropped per split for carrying missing values (complete-rows
    /// mode only): (train, validation, test).
    pub dropped: (usize, usize, usize),
}

fn industry_dummy_names() -> Vec<String> {
    Industry::ALL.iter().map(|i| format!("ind_{}", i.as_str())).collect()
}

/// Builds the feature matrices for a plan.
///
/// Columns are the schema features whose group is in `groups`, in schema
/// order; selecting the structural group also appends the twelve industry
/// indicator columns. When `require_complete` is set (families that cannot
/// route missing values), rows containing a missing value are dropped and
/// counted; otherwise missing values pass through for the trees to route.
pub fn assemble_splits(
    panel: &Panel,
    plan: &SplitPlan,
    groups: &BTreeSet<FeatureGroup>,
    require_complete: bool,
) -> Result<DatasetSplits> {
    if groups.is_empty() {
        return Err(Error::Manifest("no predictor groups selected".into()));
    }
    let group_list: Vec<FeatureGroup> = groups.iter().copied().collect();
    let positions = panel.schema().positions_in_groups(&group_list);
    let with_dummies = groups.contains(&FeatureGroup::Structural);
    if positions.is_empty() && !with_dummies {
        return Err(Error::Manifest(format!(
            "selected groups {:?} match no features",
            group_list
        )));
    }

    let mut names: Vec<String> = positions
        .iter()
        .map(|&p| panel.schema().name(p).to_string())
        .collect();
    if with_dummies {
        names.extend(industry_dummy_names());
    }
    let width = names.len();

    struct Part {
        rows: Vec<f64>,
        y: Vec<u8>,
        survival: Vec<SurvivalPair>,
        firms: Vec<String>,
        dropped: usize,
    }
    let mut parts: [Part; 3] = std::array::from_fn(|_| Part {
        rows: Vec::new(),
        y: Vec::new(),
        survival: Vec::new(),
        firms: Vec::new(),
        dropped: 0,
    });

    for rec in panel.records() {
        let slot = if plan.is_train_year(rec.year) {
            0
        } else if plan.is_validation_year(rec.year) {
            1
        } else if rec.year == plan.test_year {
            2
        } else {
            continue;
        };
        let mut row = Vec::with_capacity(width);
        for &p in &positions {
            row.push(rec.features[p]);
        }
        if with_dummies {
            for industry in Industry::ALL {
                row.push(f64::from(u8::from(rec.industry == industry)));
            }
        }
        if require_complete && row.iter().any(|v| v.is_nan()) {
            parts[slot].dropped += 1;
            continue;
        }
        let duration = f64::from(rec.event_time - rec.year + 1);
        if duration <= 0.0 {
            return Err(Error::Data(format!(
                "record ({}, {}) has event_time {} before its own year",
                rec.firm_id, rec.year, rec.event_time
            )));
        }
        parts[slot].rows.extend_from_slice(&row);
        parts[slot].y.push(rec.defaulted_next_year);
        parts[slot].survival.push(SurvivalPair {
            duration,
            event: rec.event_status == EventStatus::Bankrupt,
        });
        parts[slot].firms.push(rec.firm_id.clone());
    }

    let [train_part, val_part, test_part] = parts;
    if train_part.y.is_empty() {
        return Err(Error::Data(format!(
            "no training rows in {:?}",
            plan.train_years
        )));
    }
    if val_part.y.is_empty() {
        return Err(Error::Data(format!(
            "no validation rows in {:?}",
            plan.validation_years
        )));
    }
    if test_part.y.is_empty() {
        return Err(Error::Data(format!("no test rows in {}", plan.test_year)));
    }

    let to_matrix = |part: &Part| -> Result<Array2<f64>> {
        Array2::from_shape_vec((part.y.len(), width), part.rows.clone())
            .map_err(|e| Error::Data(format!("matrix shape: {e}")))
    };
    let train_x = to_matrix(&train_part)?;
    let standardization = Standardization::fit(&train_x);
    let train = Dataset::with_standardization(
        train_x,
        train_part.y,
        Some(train_part.survival),
        names.clone(),
        standardization.clone(),
    )?;
    let validation = Dataset::with_standardization(
        to_matrix(&val_part)?,
        val_part.y,
        Some(val_part.survival),
        names.clone(),
        standardization.clone(),
    )?;
    let test = Dataset::with_standardization(
        to_matrix(&test_part)?,
        test_part.y,
        Some(test_part.survival),
        names,
        standardization,
    )?;
    Ok(DatasetSplits {
        train,
        validation,
        test,
        test_firms: test_part.firms,
        dropped: (train_part.dropped, val_part.dropped, test_part.dropped),
    })
}

/// Runs the grid for one plan and emits the winning model's test scores.
///
/// Every spec in `grid` must share one family. Grid points whose validation
/// AUC is undefined (single-class validation outcome) are skipped; if all
/// are skipped this is an error. Since training is deterministic, the
/// winning grid point's fitted model is identical to a retrain on the same
/// training rows, so it is reused directly for the test scores.
pub fn tune_and_forecast(
    panel: &Panel,
    grid: &[ModelSpec],
    plan: &SplitPlan,
    groups: &BTreeSet<FeatureGroup>,
) -> Result<ForecastSet> {
    let (model, validation_auc, splits) = tune_on_plan(panel, grid, plan, groups)?;
    let scores = model.predict(&splits.test)?;
    let entries = splits
        .test_firms
        .iter()
        .zip(&scores)
        .zip(&splits.test.y)
        .map(|((firm_id, &score), &label)| ForecastEntry {
            firm_id: firm_id.clone(),
            score,
            label,
        })
        .collect();
    Ok(ForecastSet {
        test_year: plan.test_year,
        entries,
        winning_spec: model.spec.clone(),
        validation_auc,
    })
}

/// Grid search half of [`tune_and_forecast`], also returning the fitted
/// winner and the assembled splits for callers that need to rescore.
pub fn tune_on_plan(
    panel: &Panel,
    grid: &[ModelSpec],
    plan: &SplitPlan,
    groups: &BTreeSet<FeatureGroup>,
) -> Result<(TrainedModel, f64, DatasetSplits)> {
    if grid.is_empty() {
        return Err(Error::Manifest("empty hyperparameter grid".into()));
    }
    let family = grid[0].family;
    if grid.iter().any(|s| s.family != family) {
        return Err(Error::Manifest("grid mixes model families".into()));
    }
    let splits = assemble_splits(panel, plan, groups, !family.tolerates_missing())?;

    let outcomes: Vec<Option<(usize, TrainedModel, f64)>> = grid
        .par_iter()
        .enumerate()
        .map(|(idx, spec)| {
            let model = train(spec, &splits.train).ok()?;
            let scores = model.predict(&splits.validation).ok()?;
            let val_auc = auc(&scores, &splits.validation.y).ok()??;
            Some((idx, model, val_auc))
        })
        .collect();

    let mut best: Option<(usize, TrainedModel, f64)> = None;
    for outcome in outcomes.into_iter().flatten() {
        let better = match &best {
            None => true,
            // strict > keeps the earliest grid point on ties
            Some((_, _, best_auc)) => outcome.2 > *best_auc,
        };
        if better {
            best = Some(outcome);
        }
    }
    let (_, model, validation_auc) = best.ok_or_else(|| {
        Error::Numeric(format!(
            "every grid point failed or had an undefined validation AUC for test year {}",
            plan.test_year
        ))
    })?;
    Ok((model, validation_auc, splits))
}

/// Pooled AUC over a named year subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetAuc {
    pub name: String,
    pub auc: Option<f64>,
    pub n: usize,
    pub n_defaults: usize,
}

/// Period report: pooled (not per-year averaged) AUC per requested subset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<SubsetAuc>,
}

pub fn subset_report(
    forecasts: &[ForecastSet],
    year_sets: &[(String, BTreeSet<i32>)],
) -> Result<EvalReport> {
    let mut rows = Vec::with_capacity(year_sets.len());
    for (name, years) in year_sets {
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for fs in forecasts.iter().filter(|f| years.contains(&f.test_year)) {
            for e in &fs.entries {
                scores.push(e.score);
                labels.push(e.label);
            }
        }
        if scores.is_empty() {
            return Err(Error::Data(format!("subset `{name}` selects no forecasts")));
        }
        let n_defaults = labels.iter().filter(|&&l| l == 1).count();
        rows.push(SubsetAuc {
            name: name.clone(),
            auc: auc(&scores, &labels)?,
            n: scores.len(),
            n_defaults,
        });
    }
    Ok(EvalReport { rows })
}

/// The standard period subsets over a set of test years: the full span, the
/// 1999-2001 and 2007-2009 crisis windows, and everything else. Empty
/// intersections are omitted.
pub fn named_year_sets(test_years: &[i32]) -> Vec<(String, BTreeSet<i32>)> {
    let all: BTreeSet<i32> = test_years.iter().copied().collect();
    let dotcom: BTreeSet<i32> = all.iter().copied().filter(|y| (1999..=2001).contains(y)).collect();
    let gfc: BTreeSet<i32> = all.iter().copied().filter(|y| (2007..=2009).contains(y)).collect();
    let non_crisis: BTreeSet<i32> = all
        .iter()
        .copied()
        .filter(|y| !dotcom.contains(y) && !gfc.contains(y))
        .collect();
    let mut out = vec![("full".to_string(), all)];
    for (name, set) in [
        ("dotcom".to_string(), dotcom),
        ("gfc".to_string(), gfc),
        ("non_crisis".to_string(), non_crisis),
    ] {
        if !set.is_empty() {
            out.push((name, set));
        }
    }
    out
}
