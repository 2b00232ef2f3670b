//! Randomized property suite for the transport distances and bounds.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::EmpiricalDistribution;
use crate::rng::{stream_rng, Stream};
use crate::wasserstein::{
    check_wp_bounds, slack, w1_bruteforce_oracle, w1_lower_bound_mean_diff, w1_upper_bound_coupled, w1_empirical,
};
use crate::Result;

/// Signature of the `W_1` implementation under test.
pub type W1Fn<'a> = &'a dyn Fn(&EmpiricalDistribution, &EmpiricalDistribution) -> Result<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub trial: usize,
    pub detail: String,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: usize,
    pub oracle_checks: usize,
    pub sandwich_checks: usize,
    pub wp_checks: usize,
    pub violations: Vec<Violation>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Uniform values on `[-10, 10]`, `n` in `2..=7`.
pub fn random_oracle_pair(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let n = rng.random_range(2..=7);
    let mut draw = || (0..n).map(|_| rng.random_range(-10.0..10.0)).collect::<Vec<f64>>();
    (draw(), draw())
}

/// Two functions evaluated on a shared input sample: a random base field and
/// a perturbed, rescaled or independent second field.
pub fn random_paired_fields(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let n = rng.random_range(1..=200);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let y1: Vec<f64> = match rng.random_range(0..3) {
        0 => x.iter().map(|v| v * v).collect(),
        1 => x.iter().map(|v| (1.7 * v).sin() + 0.3 * v).collect(),
        _ => x.iter().map(|v| v.exp()).collect(),
    };
    let y2: Vec<f64> = match rng.random_range(0..3) {
        0 => {
            let eps = rng.random_range(0.0..1.0);
            y1.iter().map(|v| v + eps * rng.random_range(-1.0..1.0)).collect()
        }
        1 => {
            let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
            y1.iter().map(|v| a * v + b).collect()
        }
        _ => (0..n).map(|_| rng.random_range(-5.0..5.0)).collect(),
    };
    (y1, y2)
}

/// Runs `trials` rounds of: oracle equivalence, the W1 sandwich and the
/// `W_p` bounds for `p` in {1, 2, 3} with monotonicity in `p`.
pub fn run_bound_suite(seed: u64, trials: usize, w1: W1Fn) -> Result<SuiteReport> {
    let mut rng = stream_rng(seed, Stream::Property);
    let mut report = SuiteReport { seed, trials, ..Default::default() };
    let mut violations = Vec::new();
    for trial in 0..trials {
        let (a, b) = random_oracle_pair(&mut rng);
        let got = w1(&EmpiricalDistribution::new(a.clone())?, &EmpiricalDistribution::new(b.clone())?)?;
        let want = w1_bruteforce_oracle(&a, &b)?;
        report.oracle_checks += 1;
        if (got - want).abs() > 1e-12 {
            violations.push(violation("oracle", trial, format!("w1 {got} vs oracle {want}"), &a, &b));
        }

        let (y1, y2) = random_paired_fields(&mut rng);
        let d1 = EmpiricalDistribution::new(y1.clone())?;
        let d2 = EmpiricalDistribution::new(y2.clone())?;
        let w = w1(&d1, &d2)?;
        let lower = w1_lower_bound_mean_diff(&y1, &y2)?;
        let upper = w1_upper_bound_coupled(&y1, &y2)?;
        report.sandwich_checks += 1;
        if lower > w + slack(w) || w > upper + slack(w) {
            violations.push(violation("sandwich", trial, format!("{lower} <= {w} <= {upper} fails"), &y1, &y2));
        }

        let mut prev = 0.0;
        for p in [1.0, 2.0, 3.0] {
            let r = check_wp_bounds(&y1, &y2, p)?;
            report.wp_checks += 1;
            if !r.satisfied {
                violations.push(violation("wp_bounds", trial, format!("{r:?}"), &y1, &y2));
            }
            if r.wp + slack(r.wp) < prev {
                violations.push(violation("wp_monotone", trial, format!("W_{p} = {} < {prev}", r.wp), &y1, &y2));
            }
            prev = r.wp;
        }
    }
    report.violations = violations;
    Ok(report)
}

fn violation(check: &str, trial: usize, detail: String, y1: &[f64], y2: &[f64]) -> Violation {
    Violation { check: check.into(), trial, detail, y1: y1.to_vec(), y2: y2.to_vec() }
}

/// The library `W_1`.
pub fn exact_w1(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> Result<f64> {
    w1_empirical(a, b)
}

/// A deliberately wrong `W_1` for negative controls.
pub fn faulty_w1(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> Result<f64> {
    Ok(1.5 * w1_empirical(a, b)? + 0.1)
}
