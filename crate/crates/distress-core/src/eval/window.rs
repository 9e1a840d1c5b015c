//! Walk-forward year partitioning.
//!
//! For a test year `t` the training window runs from the first data year
//! through `t-3` and the validation window is always the two years
//! `{t-2, t-1}`. Advancing the test year by one grows the training window by
//! one year while the validation window slides along with it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One walk-forward step's year partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    /// Inclusive (first, last) training years; `last = test_year - 3`.
    pub train_years: (i32, i32),
    /// The two validation years `{t-2, t-1}`.
    pub validation_years: (i32, i32),
    pub test_year: i32,
}

impl SplitPlan {
    pub fn for_test_year(first_data_year: i32, test_year: i32) -> Result<SplitPlan> {
        if test_year < first_data_year + 3 {
            return Err(Error::Data(format!(
                "test year {test_year} needs data from {} but the sample starts in {first_data_year}",
                test_year - 3
            )));
        }
        Ok(SplitPlan {
            train_years: (first_data_year, test_year - 3),
            validation_years: (test_year - 2, test_year - 1),
            test_year,
        })
    }

    pub fn is_train_year(&self, year: i32) -> bool {
        year >= self.train_years.0 && year <= self.train_years.1
    }

    pub fn is_validation_year(&self, year: i32) -> bool {
        year == self.validation_years.0 || year == self.validation_years.1
    }
}

/// Builds one plan per test year in `first_test_year..=last_test_year`, all
/// anchored at `first_data_year`.
pub fn expanding_window_plan(
    first_data_year: i32,
    first_test_year: i32,
    last_test_year: i32,
) -> Result<Vec<SplitPlan>> {
    if last_test_year < first_test_year {
        return Err(Error::Data(format!(
            "empty test range {first_test_year}..={last_test_year}"
        )));
    }
    (first_test_year..=last_test_year)
        .map(|t| SplitPlan::for_test_year(first_data_year, t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_plan_sequence() {
        let plans = expanding_window_plan(1969, 1990, 1992).unwrap();
        assert_eq!(plans.len(), 3);
        assert_eq!(plans[0].train_years, (1969, 1987));
        assert_eq!(plans[0].validation_years, (1988, 1989));
        assert_eq!(plans[0].test_year, 1990);
        assert_eq!(plans[1].train_years, (1969, 1988));
        assert_eq!(plans[2].train_years, (1969, 1989));
    }

    #[test]
    fn consecutive_plans_grow_training_by_one_year() {
        let plans = expanding_window_plan(1980, 1990, 1999).unwrap();
        for pair in plans.windows(2) {
            assert_eq!(pair[1].train_years.1, pair[0].train_years.1 + 1);
            assert_eq!(pair[1].train_years.0, pair[0].train_years.0);
            assert_eq!(pair[1].test_year, pair[0].test_year + 1);
        }
    }

    #[test]
    fn insufficient_history_rejected() {
        assert!(expanding_window_plan(2000, 2001, 2001).is_err());
        assert!(expanding_window_plan(2000, 2002, 2002).is_err());
        assert!(expanding_window_plan(2000, 2003, 2003).is_ok());
    }

    #[test]
    fn year_sets_are_pairwise_disjoint() {
        for plan in expanding_window_plan(1969, 1990, 2019).unwrap() {
            for y in plan.train_years.0..=plan.train_years.1 {
                assert!(!plan.is_validation_year(y));
                assert_ne!(y, plan.test_year);
            }
            assert!(!plan.is_train_year(plan.test_year));
            assert!(!plan.is_validation_year(plan.test_year));
            assert_eq!(plan.validation_years.1 - plan.validation_years.0, 1);
            assert_eq!(plan.validation_years.1, plan.test_year - 1);
            assert_eq!(plan.train_years.1, plan.test_year - 3);
        }
    }
}
