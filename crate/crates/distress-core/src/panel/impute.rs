//! Last-observation imputation for accounting features.

use std::collections::HashMap;

use super::{is_missing, FeatureGroup, Panel};

/// Replaces each missing accounting value with the firm's most recent prior
/// non-missing value of the same feature. Leading missings stay missing and
/// non-accounting groups are untouched. Idempotent.
pub fn impute_last_observation(panel: &Panel) -> Panel {
    let accounting: Vec<usize> = panel
        .schema()
        .positions_in_groups(&[FeatureGroup::Accounting]);
    if accounting.is_empty() {
        return panel.clone();
    }

    // records are sorted by (year, firm); carry the last seen value per firm
    let mut last_seen: HashMap<String, Vec<f64>> = HashMap::new();
    let mut out = panel.clone();
    let schema = out.schema().clone();
    let records: Vec<_> = out
        .records()
        .iter()
        .cloned()
        .map(|mut rec| {
            let carried = last_seen
                .entry(rec.firm_id.clone())
                .or_insert_with(|| vec![f64::NAN; accounting.len()]);
            for (slot, &pos) in accounting.iter().enumerate() {
                if is_missing(rec.features[pos]) {
                    if !carried[slot].is_nan() {
                        rec.features[pos] = carried[slot];
                    }
                } else {
                    carried[slot] = rec.features[pos];
                }
            }
            rec
        })
        .collect();
    out = Panel::new(schema, records).expect("imputation preserves panel invariants");
    out
}
