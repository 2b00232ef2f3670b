//! Evaluation statistics: threshold statistics of scalar fields, error
//! splits between the bulk and the extreme region, and KDE exports.

use serde::{Deserialize, Serialize};

use crate::distributions::{kde_pdf, linsp, Bandwidth};
use crate::{Error, Result};

/// Compensated (Neumaier) sum.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn check_field(field: &[f64]) -> Result<()> {
    if field.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if let Some((index, &value)) = field.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    Ok(())
}

/// Mean of the values at or above `t`.
pub fn conditional_mean(field: &[f64], t: f64) -> Result<f64> {
    check_field(field)?;
    let above: Vec<f64> = field.iter().copied().filter(|&v| v >= t).collect();
    if above.is_empty() {
        return Err(Error::EmptyConditionalSet);
    }
    Ok(neumaier_sum(above.iter().copied()) / above.len() as f64)
}

/// Fraction of the total mass carried by values at or above `t`.
pub fn weighted_coverage(field: &[f64], t: f64) -> Result<f64> {
    check_field(field)?;
    if let Some(&v) = field.iter().find(|&&v| v < 0.0) {
        return Err(Error::InvalidArgument(format!("coverage needs a nonnegative field, found {v}")));
    }
    let total = neumaier_sum(field.iter().copied());
    if total <= 0.0 {
        return Err(Error::ZeroTotalMass);
    }
    Ok(neumaier_sum(field.iter().copied().filter(|&v| v >= t)) / total)
}

/// Mean signed and absolute estimator errors split by whether the true
/// value reaches the extreme threshold, each normalized by the full sample
/// count, with the ratios between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub err_bulk_signed: f64,
    pub err_extreme_signed: f64,
    pub err_bulk_abs: f64,
    pub err_extreme_abs: f64,
    /// `|bulk signed| / |extreme signed|`
    pub c_tilde_hat: Option<f64>,
    /// `bulk abs / extreme abs`
    pub c_hat_hat: Option<f64>,
    /// `extreme abs / |extreme signed|`
    pub k_hat: Option<f64>,
    pub n_eval: usize,
    pub n_extreme: usize,
    pub t_star: f64,
}

/// Ratios with a denominator below this are reported as undefined.
pub const RATIO_GUARD: f64 = 1e-15;

fn guarded_ratio(num: f64, den: f64) -> Option<f64> {
    (den.abs() >= RATIO_GUARD).then(|| num / den)
}

/// Builds the report from truth and estimator values at the same inputs.
/// The extreme region is `{x : y_true(x) >= t_star}`.
pub fn data_consistency_report(y_true: &[f64], y_est: &[f64], t_star: f64) -> Result<ConsistencyReport> {
    check_field(y_true)?;
    check_field(y_est)?;
    if y_true.len() != y_est.len() {
        return Err(Error::DimensionMismatch { expected: y_true.len(), got: y_est.len() });
    }
    let n = y_true.len();
    let n_extreme = y_true.iter().filter(|&&y| y >= t_star).count();
    if n_extreme == 0 {
        return Err(Error::EmptyExtremeSet);
    }
    let errors = || y_true.iter().zip(y_est).map(|(&y, &f)| (y >= t_star, f - y));
    let part = |extreme: bool, abs: bool| {
        neumaier_sum(errors().filter(|&(e, _)| e == extreme).map(|(_, d)| if abs { d.abs() } else { d })) / n as f64
    };
    let (bs, es, ba, ea) = (part(false, false), part(true, false), part(false, true), part(true, true));
    Ok(ConsistencyReport {
        err_bulk_signed: bs,
        err_extreme_signed: es,
        err_bulk_abs: ba,
        err_extreme_abs: ea,
        c_tilde_hat: guarded_ratio(bs.abs(), es.abs()),
        c_hat_hat: guarded_ratio(ba, ea),
        k_hat: guarded_ratio(ea, es.abs()),
        n_eval: n,
        n_extreme,
        t_star,
    })
}

impl ConsistencyReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Evaluation grid for density exports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GridSpec {
    Range { lo: f64, hi: f64, points: usize },
    /// Spans all samples, padded by 10% of their range on each side.
    Auto { points: usize },
}

impl GridSpec {
    pub fn build(&self, sets: &[(&str, &[f64])]) -> Result<Vec<f64>> {
        match *self {
            GridSpec::Range { lo, hi, points } => linsp(lo, hi, points),
            GridSpec::Auto { points } => {
                let all = sets.iter().flat_map(|(_, s)| s.iter().copied());
                let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::EmptyDistribution);
                }
                let pad = if hi > lo { 0.1 * (hi - lo) } else { 1.0 };
                linsp(lo - pad, hi + pad, points)
            }
        }
    }
}

/// CSV with a `grid` column and one density column per named sample set.
pub fn pdf_compare_export(sets: &[(&str, &[f64])], grid: GridSpec, bandwidth: Bandwidth) -> Result<String> {
    if sets.is_empty() {
        return Err(Error::InvalidArgument("no sample sets to export".into()));
    }
    let grid = grid.build(sets)?;
    let columns = sets.iter().map(|(_, s)| kde_pdf(s, &grid, bandwidth)).collect::<Result<Vec<_>>>()?;
    let mut out = String::from("grid");
    for (name, _) in sets {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (i, y) in grid.iter().enumerate() {
        out.push_str(&y.to_string());
        for col in &columns {
            out.push(',');
            out.push_str(&col[i].to_string());
        }
        out.push('\n');
    }
    Ok(out)
}

/// CSV of conditional mean and weighted coverage per threshold for each
/// named field. Undefined entries, including coverage of fields with
/// negative values, are written as `NaN`.
pub fn threshold_table(fields: &[(&str, &[f64])], thresholds: &[f64]) -> Result<String> {
    let mut out = String::from("threshold");
    for (name, _) in fields {
        out.push_str(&format!(",cond_mean_{name},coverage_{name}"));
    }
    out.push('\n');
    for &t in thresholds {
        out.push_str(&t.to_string());
        for (_, field) in fields {
            let cm = match conditional_mean(field, t) {
                Ok(v) => v,
                Err(Error::EmptyConditionalSet) => f64::NAN,
                Err(e) => return Err(e),
            };
            let cov = match weighted_coverage(field, t) {
                Ok(v) => v,
                Err(Error::ZeroTotalMass | Error::InvalidArgument(_)) => f64::NAN,
                Err(e) => return Err(e),
            };
            out.push_str(&format!(",{cm},{cov}"));
        }
        out.push('\n');
    }
    Ok(out)
}
