//! Reference-distribution construction: empirical laws, quantile-level sets,
//! the generalized extreme value family and Gaussian kernel density estimates.

mod empirical;
mod gevd;
mod kde;
mod quantile_set;

pub use empirical::{empirical_quantile, rank_for, EmpiricalDistribution};
pub use gevd::{gevd_fit_mle, GevdDescriptor, GevdFit, GevdParams, TruncatedGevd, KAPPA_EPS};
pub use kde::{kde_pdf, scott_bandwidth, Bandwidth};
pub use quantile_set::{build_quantile_set, linsp, QuantileBlock, QuantileSet};

use crate::Result;

/// Anything that can answer `F^{-1}(q)`.
///
/// Implemented for the concrete laws in this module and for plain closures,
/// so the Wasserstein estimators can mix analytic and empirical sources.
pub trait QuantileSource {
    fn quantile(&self, q: f64) -> Result<f64>;
}

impl<F> QuantileSource for F
where
    F: Fn(f64) -> Result<f64>,
{
    fn quantile(&self, q: f64) -> Result<f64> {
        self(q)
    }
}
