use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `n` evenly spaced points from `a` to `b`, both endpoints included.
pub fn linsp(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("linsp needs n >= 2, got {n}")));
    }
    if !a.is_finite() || !b.is_finite() || a > b {
        return Err(Error::InvalidArgument(format!("linsp needs finite a <= b, got ({a}, {b})")));
    }
    let step = (b - a) / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|i| a + i as f64 * step).collect();
    out[n - 1] = b;
    Ok(out)
}

/// One `linsp(a, b, n)` block of probability levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileBlock {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl QuantileBlock {
    pub const fn new(a: f64, b: f64, n: usize) -> Self {
        Self { a, b, n }
    }
}

impl From<(f64, f64, usize)> for QuantileBlock {
    fn from((a, b, n): (f64, f64, usize)) -> Self {
        Self { a, b, n }
    }
}

/// Strictly increasing probability levels with a tail cutoff `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSet {
    probs: Vec<f64>,
    tau: f64,
}

impl QuantileSet {
    pub fn new(probs: Vec<f64>, tau: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidArgument(format!("tail cutoff must lie in [0, 1), got {tau}")));
        }
        if probs.is_empty() {
            return Err(Error::InvalidArgument("quantile set is empty".into()));
        }
        if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        if probs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("quantile levels must be strictly increasing".into()));
        }
        if tau > 0.0 && probs[0] < tau {
            return Err(Error::InvalidArgument(format!(
                "level {} lies below the tail cutoff {tau}",
                probs[0]
            )));
        }
        Ok(Self { probs, tau })
    }

    /// `m` midpoint levels `(i - 1/2) / m`, a plain quadrature grid on (0, 1).
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("uniform grid needs m >= 1".into()));
        }
        Self::new((0..m).map(|i| (i as f64 + 0.5) / m as f64).collect(), 0.0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// The levels at or above `tau`, recorded with that cutoff.
    pub fn tail(&self, tau: f64) -> Result<Self> {
        let probs: Vec<f64> = self.probs.iter().copied().filter(|&p| p >= tau).collect();
        Self::new(probs, tau)
    }
}

/// Concatenates `linsp` blocks, drops exact duplicates and sorts.
pub fn build_quantile_set(blocks: &[QuantileBlock], tau: f64) -> Result<QuantileSet> {
    let mut probs = Vec::new();
    for block in blocks {
        probs.extend(linsp(block.a, block.b, block.n)?);
    }
    if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    probs.sort_by(f64::total_cmp);
    probs.dedup();
    QuantileSet::new(probs, tau)
}
