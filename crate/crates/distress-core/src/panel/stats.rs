//! Per-feature summary statistics and label correlations.

use super::{is_missing, Panel};
use crate::error::{Error, Result};

/// Summary of one feature's non-missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSummary {
    pub name: String,
    pub group: super::FeatureGroup,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
}

/// Linear-interpolation percentile between closest ranks on sorted data
/// (the common "type 7" convention): rank h = (n-1)q, value interpolated
/// between floor(h) and ceil(h).
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Computes mean, sample standard deviation (n-1 denominator), and the
/// 25/50/75 percentiles per feature, skipping missing values. Features with
/// fewer than two non-missing observations are omitted from the result.
pub fn summarize(panel: &Panel) -> Vec<FeatureSummary> {
    let schema = panel.schema();
    let mut out = Vec::new();
    for pos in 0..schema.len() {
        let mut values: Vec<f64> = panel
            .records()
            .iter()
            .map(|r| r.features[pos])
            .filter(|x| !is_missing(*x))
            .collect();
        if values.len() < 2 {
            continue;
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        out.push(FeatureSummary {
            name: schema.name(pos).to_string(),
            group: schema.group(pos),
            n,
            mean,
            sd,
            p25: percentile(&values, 0.25),
            median: percentile(&values, 0.50),
            p75: percentile(&values, 0.75),
        });
    }
    out
}

/// Pairwise-complete Pearson correlation of each feature with the default
/// label. Zero-variance features (or features with fewer than two complete
/// pairs) report `None`.
pub fn correlation_with_default(panel: &Panel) -> Result<Vec<(String, Option<f64>)>> {
    let labels: Vec<f64> = panel
        .records()
        .iter()
        .map(|r| f64::from(r.defaulted_next_year))
        .collect();
    let label_mean = labels.iter().sum::<f64>() / labels.len() as f64;
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(Error::Data("label has zero variance".into()));
    }
    let _ = label_mean;

    let schema = panel.schema();
    let mut out = Vec::with_capacity(schema.len());
    for pos in 0..schema.len() {
        let pairs: Vec<(f64, f64)> = panel
            .records()
            .iter()
            .filter(|r| !is_missing(r.features[pos]))
            .map(|r| (r.features[pos], f64::from(r.defaulted_next_year)))
            .collect();
        out.push((schema.name(pos).to_string(), pearson(&pairs)));
    }
    Ok(out)
}

/// Two-pass Pearson correlation; `None` when either side is degenerate.
fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len();
    if n < 2 {
        return None;
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{EventStatus, FeatureGroup, FirmYearRecord, Industry, Schema, MISSING};

    fn panel_with(values: Vec<Vec<f64>>, labels: Vec<u8>) -> Panel {
        let width = values[0].len();
        let schema = Schema::new(
            (0..width)
                .map(|i| (format!("f{i}"), FeatureGroup::Accounting))
                .collect(),
        )
        .unwrap();
        let records = values
            .into_iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (features, label))| FirmYearRecord {
                firm_id: format!("F{i}"),
                year: 2000,
                defaulted_next_year: label,
                event_time: 2000,
                event_status: EventStatus::Censored,
                industry: Industry::Other,
                fiscal_end: None,
                features,
            })
            .collect();
        Panel::new(schema, records).unwrap()
    }

    #[test]
    fn symmetric_set_summary() {
        let p = panel_with(
            vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0], vec![5.0]],
            vec![0, 0, 0, 0, 1],
        );
        let s = &summarize(&p)[0];
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.median, 3.0);
        assert_eq!(s.p25, 2.0);
        assert_eq!(s.p75, 4.0);
    }

    #[test]
    fn constant_feature_sd_zero() {
        let p = panel_with(vec![vec![2.0], vec![2.0], vec![2.0]], vec![0, 0, 1]);
        assert_eq!(summarize(&p)[0].sd, 0.0);
    }

    #[test]
    fn skewed_values_hand_computed() {
        // {1, 1, 10}: mean 4, sample variance ((9+9+36)... ) = (9+9+36)/2 = 27
        let p = panel_with(vec![vec![1.0], vec![1.0], vec![10.0]], vec![0, 0, 1]);
        let s = &summarize(&p)[0];
        assert_eq!(s.mean, 4.0);
        assert!((s.sd - 27.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn entirely_missing_feature_absent() {
        let p = panel_with(
            vec![vec![1.0, MISSING], vec![2.0, MISSING], vec![3.0, MISSING]],
            vec![0, 0, 1],
        );
        let summaries = summarize(&p);
        assert_eq!(summaries.len(), 1);
        assert_eq!(summaries[0].name, "f0");
    }

    #[test]
    fn feature_equal_to_label_correlates_one() {
        let p = panel_with(
            vec![vec![0.0], vec![1.0], vec![0.0], vec![1.0]],
            vec![0, 1, 0, 1],
        );
        let corr = correlation_with_default(&p).unwrap();
        assert!((corr[0].1.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negated_label_correlates_minus_one() {
        let p = panel_with(
            vec![vec![0.0], vec![-1.0], vec![0.0], vec![-1.0]],
            vec![0, 1, 0, 1],
        );
        let corr = correlation_with_default(&p).unwrap();
        assert!((corr[0].1.unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_feature_undefined() {
        let p = panel_with(vec![vec![5.0], vec![5.0], vec![5.0]], vec![0, 0, 1]);
        let corr = correlation_with_default(&p).unwrap();
        assert!(corr[0].1.is_none());
    }

    #[test]
    fn single_class_labels_error() {
        let p = panel_with(vec![vec![1.0], vec![2.0]], vec![0, 0]);
        assert!(correlation_with_default(&p).is_err());
    }

    #[test]
    fn matches_independent_sum_formula_oracle() {
        // independent route: r = (n*Sxy - Sx*Sy) / sqrt((n*Sxx - Sx^2)(n*Syy - Sy^2))
        let values = vec![
            vec![0.3],
            vec![1.2],
            vec![-0.4],
            vec![2.0],
            vec![0.9],
            vec![1.4],
        ];
        let labels = vec![0u8, 1, 0, 1, 0, 1];
        let p = panel_with(values.clone(), labels.clone());
        let got = correlation_with_default(&p).unwrap()[0].1.unwrap();

        let n = values.len() as f64;
        let xs: Vec<f64> = values.iter().map(|v| v[0]).collect();
        let ys: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let syy: f64 = ys.iter().map(|y| y * y).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let oracle = (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
        assert!((got - oracle).abs() < 1e-12, "got {got}, oracle {oracle}");
    }
}
