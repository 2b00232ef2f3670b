use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Scott's rule, `n^{-1/5}` times the sample standard deviation.
    Auto,
    Fixed(f64),
}

pub fn scott_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt() * n.powf(-0.2)
}

/// Gaussian kernel density estimate of `samples` evaluated on `grid`.
pub fn kde_pdf(samples: &[f64], grid: &[f64], bandwidth: Bandwidth) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation grid".into()));
    }
    let h = match bandwidth {
        Bandwidth::Auto => scott_bandwidth(samples),
        Bandwidth::Fixed(h) => h,
    };
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
    }

    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let norm = 1.0 / (sorted.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    // kernels further than 10h contribute below exp(-50)
    let reach = 10.0 * h;

    Ok(grid
        .iter()
        .map(|&g| {
            let lo = sorted.partition_point(|&x| x < g - reach);
            let hi = sorted.partition_point(|&x| x <= g + reach);
            let s: f64 = sorted[lo..hi]
                .iter()
                .map(|&x| {
                    let z = (g - x) / h;
                    (-0.5 * z * z).exp()
                })
                .sum();
            s * norm
        })
        .collect())
}
