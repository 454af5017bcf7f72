//! Forecast-error metrics: MAPE, RMSE, empirical error CDF, and the
//! per-entity / pooled report assembled by the backtest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One recorded forecast error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub entity: usize,
    pub horizon_step: usize,
    pub actual: f64,
    pub predicted: f64,
}

/// MAPE in percent over `(actual, predicted)` pairs. Pairs with a zero
/// actual are excluded and counted, since the ratio is undefined there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mape {
    pub percent: f64,
    pub used: usize,
    pub excluded_zero_actuals: usize,
}

pub fn mape(pairs: &[(f64, f64)]) -> Result<Mape> {
    if pairs.is_empty() {
        return Err(Error::data("empty error set"));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for &(actual, predicted) in pairs {
        if actual == 0.0 {
            excluded += 1;
            continue;
        }
        sum += ((actual - predicted) / actual).abs();
        used += 1;
    }
    if used == 0 {
        return Err(Error::data("all actual loads are zero; MAPE undefined"));
    }
    Ok(Mape {
        percent: 100.0 * sum / used as f64,
        used,
        excluded_zero_actuals: excluded,
    })
}

pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::data("empty error set"));
    }
    let sum: f64 = pairs
        .iter()
        .map(|&(actual, predicted)| (actual - predicted) * (actual - predicted))
        .sum();
    Ok((sum / pairs.len() as f64).sqrt())
}

/// Standard empirical CDF of absolute errors: sorted `(error, probability)`
/// points with ties collapsed into one step.
pub fn error_cdf(abs_errors: &[f64]) -> Result<Vec<(f64, f64)>> {
    if abs_errors.is_empty() {
        return Err(Error::data("empty error set"));
    }
    let mut sorted = abs_errors.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite error sample"));
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, e) in sorted.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *e => last.1 = p,
            _ => out.push((*e, p)),
        }
    }
    Ok(out)
}

/// Metrics for one row of the report (an entity, or the pooled TOTAL).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMetrics {
    pub label: String,
    pub mape_percent: Option<f64>,
    pub rmse: Option<f64>,
    pub samples: usize,
    pub zero_loads_excluded: usize,
}

impl RowMetrics {
    fn empty(label: String) -> Self {
        RowMetrics {
            label,
            mape_percent: None,
            rmse: None,
            samples: 0,
            zero_loads_excluded: 0,
        }
    }

    fn from_pairs(label: String, pairs: &[(f64, f64)]) -> Self {
        if pairs.is_empty() {
            return RowMetrics::empty(label);
        }
        let m = mape(pairs).ok();
        let r = rmse(pairs).ok();
        RowMetrics {
            label,
            mape_percent: m.map(|m| m.percent),
            rmse: r,
            samples: pairs.len(),
            zero_loads_excluded: m.map(|m| m.excluded_zero_actuals).unwrap_or(0),
        }
    }
}

/// How the TOTAL row is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TotalMode {
    /// Pool the error samples of all entities into one set.
    Pooled,
    /// Emit the pooled row plus a mean-of-per-entity-metrics row.
    Both,
}

impl Default for TotalMode {
    fn default() -> Self {
        TotalMode::Pooled
    }
}

/// Backtest metrics for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub entities: Vec<RowMetrics>,
    /// Pooled TOTAL row over the per-entity error multiset.
    pub total: RowMetrics,
    /// Mean of per-entity metrics, present under [`TotalMode::Both`].
    pub total_entity_mean: Option<RowMetrics>,
    pub per_horizon: Vec<RowMetrics>,
    /// Pooled absolute-error samples for CDF export.
    pub abs_errors: Vec<f64>,
    pub emissions: usize,
}

impl MetricsReport {
    pub fn is_empty(&self) -> bool {
        self.total.samples == 0
    }
}

/// Assembles the report from recorded samples.
pub fn build_report(
    method: &str,
    entity_ids: &[String],
    horizon: usize,
    samples: &[ErrorSample],
    emissions: usize,
    total_mode: TotalMode,
) -> MetricsReport {
    let mut per_entity_pairs: Vec<Vec<(f64, f64)>> = vec![Vec::new(); entity_ids.len()];
    let mut per_horizon_pairs: Vec<Vec<(f64, f64)>> = vec![Vec::new(); horizon];
    let mut pooled = Vec::with_capacity(samples.len());
    for s in samples {
        per_entity_pairs[s.entity].push((s.actual, s.predicted));
        per_horizon_pairs[s.horizon_step - 1].push((s.actual, s.predicted));
        pooled.push((s.actual, s.predicted));
    }

    let entities: Vec<RowMetrics> = entity_ids
        .iter()
        .zip(&per_entity_pairs)
        .map(|(id, pairs)| RowMetrics::from_pairs(id.clone(), pairs))
        .collect();
    let total = RowMetrics::from_pairs("TOTAL".to_string(), &pooled);
    let total_entity_mean = match total_mode {
        TotalMode::Pooled => None,
        TotalMode::Both => {
            let with_data: Vec<&RowMetrics> =
                entities.iter().filter(|e| e.samples > 0).collect();
            if with_data.is_empty() {
                Some(RowMetrics::empty("TOTAL (entity mean)".to_string()))
            } else {
                let n = with_data.len() as f64;
                Some(RowMetrics {
                    label: "TOTAL (entity mean)".to_string(),
                    mape_percent: with_data
                        .iter()
                        .map(|e| e.mape_percent)
                        .sum::<Option<f64>>()
                        .map(|s| s / n),
                    rmse: with_data.iter().map(|e| e.rmse).sum::<Option<f64>>().map(|s| s / n),
                    samples: with_data.iter().map(|e| e.samples).sum(),
                    zero_loads_excluded: with_data.iter().map(|e| e.zero_loads_excluded).sum(),
                })
            }
        }
    };
    let per_horizon: Vec<RowMetrics> = per_horizon_pairs
        .iter()
        .enumerate()
        .map(|(i, pairs)| RowMetrics::from_pairs(format!("t+{}", i + 1), pairs))
        .collect();
    let abs_errors: Vec<f64> = pooled.iter().map(|(a, p)| (a - p).abs()).collect();

    MetricsReport {
        method: method.to_string(),
        entities,
        total,
        total_entity_mean,
        per_horizon,
        abs_errors,
        emissions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn perfect_forecast_scores_zero() {
        let pairs = vec![(2.0, 2.0), (5.0, 5.0)];
        assert_eq!(mape(&pairs).unwrap().percent, 0.0);
        assert_eq!(rmse(&pairs).unwrap(), 0.0);
    }

    #[test]
    fn single_point_arithmetic() {
        let pairs = vec![(2.0, 1.0)];
        assert_relative_eq!(mape(&pairs).unwrap().percent, 50.0, max_relative = 1e-15);
        assert_relative_eq!(rmse(&pairs).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn pooled_total_with_equal_counts_averages_entity_mapes() {
        // Entity A: MAPE 4%, entity B: MAPE 6%, equal counts → pooled 5%.
        let mut pairs = Vec::new();
        for _ in 0..10 {
            pairs.push((100.0, 96.0));
            pairs.push((100.0, 106.0));
        }
        assert_relative_eq!(mape(&pairs).unwrap().percent, 5.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_actuals_are_excluded_and_counted() {
        let pairs = vec![(0.0, 1.0), (2.0, 1.0)];
        let m = mape(&pairs).unwrap();
        assert_eq!(m.excluded_zero_actuals, 1);
        assert_eq!(m.used, 1);
        assert_relative_eq!(m.percent, 50.0, max_relative = 1e-15);
        assert!(mape(&[(0.0, 1.0)]).is_err());
        assert!(mape(&[]).is_err());
        assert!(rmse(&[]).is_err());
    }

    #[test]
    fn cdf_examples() {
        let cdf = error_cdf(&[3.0, 1.0, 2.0]).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(cdf.len(), 3);
        assert_eq!(cdf[0].0, 1.0);
        assert_relative_eq!(cdf[0].1, third, max_relative = 1e-15);
        assert_eq!(cdf[1].0, 2.0);
        assert_relative_eq!(cdf[1].1, 2.0 * third, max_relative = 1e-15);
        assert_eq!(cdf[2], (3.0, 1.0));

        let flat = error_cdf(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(flat, vec![(0.5, 1.0)]);
    }

    #[test]
    fn metrics_are_permutation_invariant() {
        let mut pairs = vec![(3.0, 2.5), (1.0, 1.2), (4.0, 4.4), (2.0, 1.0)];
        let m1 = mape(&pairs).unwrap().percent;
        let r1 = rmse(&pairs).unwrap();
        pairs.reverse();
        pairs.swap(0, 2);
        assert_relative_eq!(mape(&pairs).unwrap().percent, m1, max_relative = 1e-15);
        assert_relative_eq!(rmse(&pairs).unwrap(), r1, max_relative = 1e-15);
    }

    #[test]
    fn report_assembles_rows_and_both_mode() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let samples = vec![
            ErrorSample { entity: 0, horizon_step: 1, actual: 100.0, predicted: 96.0 },
            ErrorSample { entity: 1, horizon_step: 2, actual: 100.0, predicted: 94.0 },
        ];
        let report = build_report("engine", &ids, 2, &samples, 1, TotalMode::Both);
        assert_eq!(report.entities[0].mape_percent, Some(4.0));
        assert_eq!(report.entities[1].mape_percent, Some(6.0));
        assert_eq!(report.total.samples, 2);
        assert_relative_eq!(report.total.mape_percent.unwrap(), 5.0, max_relative = 1e-12);
        let mean_row = report.total_entity_mean.unwrap();
        assert_relative_eq!(mean_row.mape_percent.unwrap(), 5.0, max_relative = 1e-12);
        assert_eq!(report.per_horizon.len(), 2);
        assert_eq!(report.per_horizon[0].samples, 1);
        assert!(!report.is_empty());

        let empty = build_report("engine", &ids, 2, &[], 0, TotalMode::Pooled);
        assert!(empty.is_empty());
        assert_eq!(empty.total.mape_percent, None);
    }
}
