//! One-dimensional Wasserstein distances.
//!
//! In 1D the optimal coupling is the monotone one, so `W_p` between two
//! empirical laws is an integral of `|F1^{-1} - F2^{-1}|^p` over (0, 1), which
//! is piecewise constant between the breakpoints `i/n` and `j/m`. The
//! quantile-level estimator used as the training penalty averages the same
//! integrand over a fixed set of levels instead.
//!
//! The bound checks compare `W_p` of two push-forwards `y1(x)`, `y2(x)` of a
//! shared input sample against moment-based lower bounds and the cost of the
//! coupling that pairs `y1(x_i)` with `y2(x_i)`.

use serde::{Deserialize, Serialize};

use crate::distributions::{EmpiricalDistribution, QuantileSet, QuantileSource};
use crate::{Error, Result};

/// Slack applied to every bound comparison.
pub fn slack(value: f64) -> f64 {
    1e-9 * (1.0 + value.abs())
}

/// Walks the merged breakpoint partition of (0, 1], handing `(weight, a_i, b_j)`
/// for every segment on which both quantile functions are constant.
fn for_each_segment(a: &[f64], b: &[f64], mut f: impl FnMut(f64, f64, f64)) {
    let (n, m) = (a.len(), b.len());
    let total = (n * m) as f64;
    let (mut i, mut j, mut pos) = (0usize, 0usize, 0usize);
    while i < n && j < m {
        let next_a = (i + 1) * m;
        let next_b = (j + 1) * n;
        let next = next_a.min(next_b);
        f((next - pos) as f64 / total, a[i], b[j]);
        pos = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
}

/// Exact `W_1` between two empirical laws.
pub fn w1_empirical(d1: &EmpiricalDistribution, d2: &EmpiricalDistribution) -> Result<f64> {
    let (a, b) = (d1.samples(), d2.samples());
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if a.len() == b.len() {
        let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
        return Ok(s / a.len() as f64);
    }
    let mut s = 0.0;
    for_each_segment(a, b, |w, x, y| s += w * (x - y).abs());
    Ok(s)
}

/// Exact `W_p`, `p >= 1`.
pub fn wp_empirical(d1: &EmpiricalDistribution, d2: &EmpiricalDistribution, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("Wasserstein order must be >= 1, got {p}")));
    }
    let (a, b) = (d1.samples(), d2.samples());
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if p == 1.0 {
        return w1_empirical(d1, d2);
    }
    let mut s = 0.0;
    if a.len() == b.len() {
        s = a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum::<f64>() / a.len() as f64;
    } else {
        for_each_segment(a, b, |w, x, y| s += w * (x - y).abs().powf(p));
    }
    Ok(s.powf(1.0 / p))
}

/// Average of `|F_a^{-1}(q) - F_b^{-1}(q)|` over the levels of `levels`.
pub fn w1_quantile_mc<A, B>(qf_a: &A, qf_b: &B, levels: &QuantileSet) -> Result<f64>
where
    A: QuantileSource + ?Sized,
    B: QuantileSource + ?Sized,
{
    if levels.is_empty() {
        return Err(Error::InvalidArgument("empty quantile set".into()));
    }
    let mut s = 0.0;
    for &q in levels.probs() {
        s += (qf_a.quantile(q)? - qf_b.quantile(q)?).abs();
    }
    Ok(s / levels.len() as f64)
}

/// The tail proxy: [`w1_quantile_mc`] over a set whose levels all sit at or
/// above a positive cutoff.
pub fn w1_tail<A, B>(qf_a: &A, qf_b: &B, levels: &QuantileSet) -> Result<f64>
where
    A: QuantileSource + ?Sized,
    B: QuantileSource + ?Sized,
{
    if !(levels.tau() > 0.0) {
        return Err(Error::InvalidArgument("tail estimator needs a positive cutoff".into()));
    }
    w1_quantile_mc(qf_a, qf_b, levels)
}

fn check_paired(y1: &[f64], y2: &[f64]) -> Result<()> {
    if y1.is_empty() || y2.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if y1.len() != y2.len() {
        return Err(Error::DimensionMismatch { expected: y1.len(), got: y2.len() });
    }
    Ok(())
}

fn mean(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    v.sum::<f64>() / n as f64
}

/// `|E[y1] - E[y2]|`, a lower bound on `W_1` of the push-forwards.
pub fn w1_lower_bound_mean_diff(y1: &[f64], y2: &[f64]) -> Result<f64> {
    check_paired(y1, y2)?;
    let n = y1.len();
    Ok((mean(y1.iter().copied(), n) - mean(y2.iter().copied(), n)).abs())
}

/// `E|y1 - y2|`, the cost of the coupling induced by the shared inputs and an
/// upper bound on `W_1` of the push-forwards.
pub fn w1_upper_bound_coupled(y1: &[f64], y2: &[f64]) -> Result<f64> {
    check_paired(y1, y2)?;
    Ok(mean(y1.iter().zip(y2).map(|(a, b)| (a - b).abs()), y1.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lower_mean_diff: f64,
    pub w1: f64,
    pub upper_coupled_mean_abs: f64,
    pub satisfied: bool,
}

/// Evaluates `|E[y1 - y2]| <= W_1(y1#mu, y2#mu) <= E|y1 - y2|`.
pub fn sandwich_bounds(y1: &[f64], y2: &[f64]) -> Result<BoundReport> {
    let lower = w1_lower_bound_mean_diff(y1, y2)?;
    let upper = w1_upper_bound_coupled(y1, y2)?;
    let w1 = w1_empirical(
        &EmpiricalDistribution::new(y1.to_vec())?,
        &EmpiricalDistribution::new(y2.to_vec())?,
    )?;
    let tol = slack(w1);
    Ok(BoundReport {
        lower_mean_diff: lower,
        w1,
        upper_coupled_mean_abs: upper,
        satisfied: lower <= w1 + tol && w1 <= upper + tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WpBoundReport {
    pub p: f64,
    pub wp: f64,
    /// `|E[y1 - y2]|`
    pub mean_diff_lower: f64,
    /// `|(E|y1|^p)^{1/p} - (E|y2|^p)^{1/p}|`
    pub moment_triangle_lower: f64,
    /// `E|y1 - y2|^p`, compared against `W_p^p`
    pub coupled_upper_pth: f64,
    /// `|E|y1|^p - E|y2|^p| / (2p^2/(p-1))^p`, only meaningful for `p > 1`
    pub subexponential_lower: Option<f64>,
    pub satisfied: bool,
}

/// Evaluates the `W_p` lower and upper bounds for paired evaluations.
pub fn check_wp_bounds(y1: &[f64], y2: &[f64], p: f64) -> Result<WpBoundReport> {
    check_paired(y1, y2)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("Wasserstein order must be >= 1, got {p}")));
    }
    let n = y1.len();
    let wp = wp_empirical(
        &EmpiricalDistribution::new(y1.to_vec())?,
        &EmpiricalDistribution::new(y2.to_vec())?,
        p,
    )?;
    let mean_diff_lower = (mean(y1.iter().copied(), n) - mean(y2.iter().copied(), n)).abs();
    let m1 = mean(y1.iter().map(|y| y.abs().powf(p)), n);
    let m2 = mean(y2.iter().map(|y| y.abs().powf(p)), n);
    let moment_triangle_lower = (m1.powf(1.0 / p) - m2.powf(1.0 / p)).abs();
    let coupled_upper_pth = mean(y1.iter().zip(y2).map(|(a, b)| (a - b).abs().powf(p)), n);
    let subexponential_lower = (p > 1.0).then(|| (m1 - m2).abs() / (2.0 * p * p / (p - 1.0)).powf(p));

    let tol = slack(wp);
    let wpp = wp.powf(p);
    let satisfied = mean_diff_lower <= wp + tol
        && moment_triangle_lower <= wp + tol
        && wpp <= coupled_upper_pth + slack(wpp)
        && subexponential_lower.is_none_or(|b| b <= wp + tol);
    Ok(WpBoundReport {
        p,
        wp,
        mean_diff_lower,
        moment_triangle_lower,
        coupled_upper_pth,
        subexponential_lower,
        satisfied,
    })
}

/// Minimum over all bijections of the mean matched distance. Exhaustive, so
/// limited to `n <= 7`.
pub fn w1_bruteforce_oracle(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let n = a.len();
    if n > 7 {
        return Err(Error::OracleSizeLimit(n));
    }
    let cost = |perm: &[usize]| -> f64 {
        perm.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).abs()).sum::<f64>() / n as f64
    };

    // Heap's algorithm
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut best = cost(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(cost(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{build_quantile_set, QuantileBlock};
    use crate::rng::{stream_rng, Stream};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Exp, Normal};

    fn ed(v: &[f64]) -> EmpiricalDistribution {
        EmpiricalDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn w1_examples() {
        assert_eq!(w1_empirical(&ed(&[1.0, 5.0, 2.0]), &ed(&[2.0, 1.0, 5.0])).unwrap(), 0.0);
        assert_eq!(w1_empirical(&ed(&[3.0]), &ed(&[-1.5])).unwrap(), 4.5);
        assert!((w1_empirical(&ed(&[0.0, 1.0]), &ed(&[0.5, 2.0])).unwrap() - 0.75).abs() < 1e-15);
        assert!((w1_bruteforce_oracle(&[0.0, 1.0], &[0.5, 2.0]).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(w1_bruteforce_oracle(&[1.0, 4.0, 2.0], &[4.0, 2.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(w1_bruteforce_oracle(&[0.0; 8], &[0.0; 8]), Err(Error::OracleSizeLimit(8))));
    }

    #[test]
    fn w1_unequal_sizes() {
        // {0, 1} against {0, 0, 3}: F1^-1 = 0 on (0, 1/2], 1 on (1/2, 1];
        // F2^-1 = 0 on (0, 2/3], 3 on (2/3, 1]. Integrand: 0, then 1 on (1/2, 2/3], 2 on (2/3, 1].
        let w = w1_empirical(&ed(&[0.0, 1.0]), &ed(&[0.0, 0.0, 3.0])).unwrap();
        assert!((w - (1.0 / 6.0 + 2.0 / 3.0)).abs() < 1e-15);
        // replicating each sample k times leaves the law unchanged
        let a = [0.3, -1.0, 2.5];
        let b = [1.0, 0.0, 4.0, -2.0, 0.1];
        let a3: Vec<f64> = a.iter().flat_map(|&x| [x; 5]).collect();
        let b3: Vec<f64> = b.iter().flat_map(|&x| [x; 3]).collect();
        let direct = w1_empirical(&ed(&a), &ed(&b)).unwrap();
        let replicated = w1_empirical(&ed(&a3), &ed(&b3)).unwrap();
        assert!((direct - replicated).abs() < 1e-12);
    }

    #[test]
    fn wp_examples() {
        let (a, b) = (ed(&[0.0, 1.0]), ed(&[0.5, 2.0]));
        assert!((wp_empirical(&a, &b, 2.0).unwrap() - (1.25f64 / 2.0).sqrt()).abs() < 1e-15);
        assert_eq!(wp_empirical(&a, &b, 1.0).unwrap(), w1_empirical(&a, &b).unwrap());
        for p in [1.0, 2.0, 3.5] {
            assert!((wp_empirical(&ed(&[2.0]), &ed(&[-1.0]), p).unwrap() - 3.0).abs() < 1e-12);
        }
        assert!(wp_empirical(&a, &b, 0.5).is_err());
    }

    #[test]
    fn quantile_estimator_examples() {
        let levels = QuantileSet::new(vec![0.25, 0.5, 0.75], 0.0).unwrap();
        let id = |q: f64| -> Result<f64> { Ok(q) };
        let zero = |_q: f64| -> Result<f64> { Ok(0.0) };
        let c = |_q: f64| -> Result<f64> { Ok(-2.5) };
        assert_eq!(w1_quantile_mc(&id, &id, &levels).unwrap(), 0.0);
        assert_eq!(w1_quantile_mc(&zero, &c, &levels).unwrap(), 2.5);
        assert!((w1_quantile_mc(&id, &zero, &levels).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tail_estimator_examples() {
        let levels = QuantileSet::new(vec![0.96, 0.98, 1.0], 0.95).unwrap();
        let id = |q: f64| -> Result<f64> { Ok(q) };
        let twice = |q: f64| -> Result<f64> { Ok(2.0 * q) };
        let a = |_q: f64| -> Result<f64> { Ok(1.0) };
        let b = |_q: f64| -> Result<f64> { Ok(4.0) };
        assert_eq!(w1_tail(&id, &id, &levels).unwrap(), 0.0);
        assert_eq!(w1_tail(&a, &b, &levels).unwrap(), 3.0);
        assert!((w1_tail(&id, &twice, &levels).unwrap() - 0.98).abs() < 1e-15);
        let untailed = QuantileSet::new(vec![0.5], 0.0).unwrap();
        assert!(w1_tail(&id, &twice, &untailed).is_err());
    }

    #[test]
    fn failing_quantile_source_propagates() {
        let levels = QuantileSet::new(vec![0.5], 0.0).unwrap();
        let bad = |q: f64| -> Result<f64> { Err(Error::ProbabilityOutOfRange(q)) };
        let ok = |_q: f64| -> Result<f64> { Ok(0.0) };
        assert!(w1_quantile_mc(&bad, &ok, &levels).is_err());
    }

    #[test]
    fn bound_examples() {
        assert_eq!(w1_lower_bound_mean_diff(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(w1_upper_bound_coupled(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        let r = sandwich_bounds(&[0.0, 2.0], &[1.0, 1.0]).unwrap();
        assert!((r.w1 - 1.0).abs() < 1e-15 && r.satisfied);
        let y1 = [0.3, -1.0, 4.0];
        let y2: Vec<f64> = y1.iter().map(|y| y + 1.5).collect();
        assert!((w1_lower_bound_mean_diff(&y1, &y2).unwrap() - 1.5).abs() < 1e-12);
        assert!((w1_upper_bound_coupled(&y1, &y2).unwrap() - 1.5).abs() < 1e-12);
        assert!(w1_lower_bound_mean_diff(&[], &[]).is_err());
        assert!(w1_upper_bound_coupled(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn wp_bound_examples() {
        let y = [0.5, -2.0, 3.0];
        let r = check_wp_bounds(&y, &y, 2.0).unwrap();
        assert_eq!(r.wp, 0.0);
        assert_eq!(r.mean_diff_lower, 0.0);
        assert_eq!(r.coupled_upper_pth, 0.0);
        assert!(r.satisfied);
        // constant maps make the coupling bound tight
        for p in [1.0, 2.0, 3.0] {
            let r = check_wp_bounds(&[2.0; 4], &[-1.0; 4], p).unwrap();
            assert!((r.wp - 3.0).abs() < 1e-12);
            assert!((r.wp.powf(p) - r.coupled_upper_pth).abs() < 1e-9);
            assert!(r.satisfied);
        }
    }

    #[test]
    fn mc_estimator_converges_to_exact() {
        let mut rng = stream_rng(21, Stream::Property);
        let normal = Normal::new(1.0, 2.0).unwrap();
        let exp = Exp::new(0.5).unwrap();
        let a = ed(&(0..4000).map(|_| normal.sample(&mut rng)).collect::<Vec<_>>());
        let b = ed(&(0..4000).map(|_| exp.sample(&mut rng)).collect::<Vec<_>>());
        let exact = w1_empirical(&a, &b).unwrap();
        let levels = QuantileSet::uniform(10_000).unwrap();
        let mc = w1_quantile_mc(&a, &b, &levels).unwrap();
        assert!((mc - exact).abs() / exact < 1e-2, "mc {mc} exact {exact}");
    }

    #[test]
    fn subexponential_bound_on_bounded_data() {
        let mut rng = stream_rng(33, Stream::Property);
        for _ in 0..200 {
            let n = rng.random_range(2..50);
            let y1: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..5.0)).collect();
            let r = check_wp_bounds(&y1, &y2, 2.0).unwrap();
            assert!(r.subexponential_lower.unwrap() <= r.wp + slack(r.wp));
        }
    }

    #[test]
    fn tail_set_from_blocks() {
        let levels = build_quantile_set(&[QuantileBlock::new(0.95, 1.0, 6)], 0.95).unwrap();
        let a = ed(&(0..100).map(f64::from).collect::<Vec<_>>());
        let b = ed(&(0..100).map(|i| f64::from(i) + 2.0).collect::<Vec<_>>());
        assert!((w1_tail(&a, &b, &levels).unwrap() - 2.0).abs() < 1e-12);
    }

    fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, n)
    }

    proptest! {
        #[test]
        fn matches_bruteforce(n in 1usize..=7, seed in any::<u64>()) {
            let mut rng = stream_rng(seed, Stream::Property);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let exact = w1_empirical(&ed(&a), &ed(&b)).unwrap();
            prop_assert!((exact - w1_bruteforce_oracle(&a, &b).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn metric_axioms((a, b, c) in (1usize..=7).prop_flat_map(|n| (values(n), values(n), values(n)))) {
            let (a, b, c) = (ed(&a), ed(&b), ed(&c));
            let ab = w1_empirical(&a, &b).unwrap();
            prop_assert_eq!(ab, w1_empirical(&b, &a).unwrap());
            let ac = w1_empirical(&a, &c).unwrap();
            let cb = w1_empirical(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-9);
        }

        #[test]
        fn unequal_sizes_are_symmetric(a in prop::collection::vec(-10.0f64..10.0, 1..12),
                                       b in prop::collection::vec(-10.0f64..10.0, 1..12)) {
            let (a, b) = (ed(&a), ed(&b));
            let ab = w1_empirical(&a, &b).unwrap();
            let ba = w1_empirical(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
        }

        #[test]
        fn sandwich_holds((y1, y2) in (1usize..40).prop_flat_map(|n| (values(n), values(n)))) {
            prop_assert!(sandwich_bounds(&y1, &y2).unwrap().satisfied);
        }

        #[test]
        fn wp_monotone_in_p((y1, y2) in (1usize..30).prop_flat_map(|n| (values(n), values(n)))) {
            let (a, b) = (ed(&y1), ed(&y2));
            let w: Vec<f64> = [1.0, 1.5, 2.0, 3.0, 4.0].iter().map(|&p| wp_empirical(&a, &b, p).unwrap()).collect();
            for pair in w.windows(2) {
                prop_assert!(pair[0] <= pair[1] + slack(pair[1]));
            }
        }

        #[test]
        fn wp_bounds_hold((y1, y2) in (1usize..30).prop_flat_map(|n| (values(n), values(n))), p in 1.0f64..4.0) {
            prop_assert!(check_wp_bounds(&y1, &y2, p).unwrap().satisfied);
        }
    }
}
