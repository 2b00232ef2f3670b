use std::io::{BufRead, Write};
use std::path::Path;

use super::QuantileSource;
use crate::{Error, Result};

/// 1-based order-statistic rank `ceil(q * n)` clamped to `[1, n]`.
///
/// Shared by the empirical quantile and by the training index refresh so both
/// always agree on which sample attains a given level.
pub fn rank_for(q: f64, n: usize) -> usize {
    let r = (q * n as f64).ceil();
    if r < 1.0 {
        1
    } else if r >= n as f64 {
        n
    } else {
        r as usize
    }
}

/// A finite sample stored in ascending order, used as an estimated 1D law.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples in ascending order.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn min(&self) -> f64 {
        self.samples[0]
    }

    pub fn max(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// The `ceil(q n)`-th order statistic; `q = 0` gives the minimum.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::ProbabilityOutOfRange(q));
        }
        Ok(self.samples[rank_for(q, self.samples.len()) - 1])
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 20);
        for v in &self.samples {
            out.push_str(&format!("{v}\n"));
        }
        out
    }

    /// Parses one value per line. Blank lines are ignored; anything else that
    /// is not a number is an error.
    pub fn from_csv_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut samples = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let field = line.trim();
            if field.is_empty() {
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: `{field}` is not a number", lineno + 1)))?;
            samples.push(v);
        }
        Self::new(samples)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(self.to_csv_string().as_bytes())?;
        file.flush()?;
        Ok(())
    }
}

impl QuantileSource for EmpiricalDistribution {
    fn quantile(&self, q: f64) -> Result<f64> {
        EmpiricalDistribution::quantile(self, q)
    }
}

/// Free-function form of [`EmpiricalDistribution::quantile`].
pub fn empirical_quantile(dist: &EmpiricalDistribution, q: f64) -> Result<f64> {
    dist.quantile(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(v: &[f64]) -> EmpiricalDistribution {
        EmpiricalDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(empirical_quantile(&dist(&[1.0, 2.0, 3.0, 4.0]), 1.0).unwrap(), 4.0);
        assert_eq!(dist(&[5.0]).quantile(0.37).unwrap(), 5.0);
        // ceil(2.5) = 3rd order statistic
        assert_eq!(dist(&[10.0, 20.0, 30.0, 40.0, 50.0]).quantile(0.5).unwrap(), 30.0);
        assert_eq!(dist(&[3.0, 1.0, 2.0]).quantile(0.0).unwrap(), 1.0);
    }

    #[test]
    fn rank_arithmetic() {
        assert_eq!(rank_for(0.95, 100), 95);
        assert_eq!(rank_for(0.0, 100), 1);
        assert_eq!(rank_for(1.0, 100), 100);
        assert_eq!(rank_for(1.0 - 1e-7, 100), 100);
        assert_eq!(rank_for(0.011, 100), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(EmpiricalDistribution::new(vec![]), Err(Error::EmptyDistribution)));
        assert!(matches!(
            EmpiricalDistribution::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(dist(&[1.0]).quantile(1.5).is_err());
        assert!(dist(&[1.0]).quantile(-0.1).is_err());
    }

    #[test]
    fn csv_parsing() {
        let d = EmpiricalDistribution::from_csv_reader("3\n1.5\n\n-2e-3\n".as_bytes()).unwrap();
        assert_eq!(d.samples(), &[-2e-3, 1.5, 3.0]);
        assert!(matches!(
            EmpiricalDistribution::from_csv_reader("1\nabc\n".as_bytes()),
            Err(Error::Parse(_))
        ));
        assert!(EmpiricalDistribution::from_csv_reader("".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn quantile_is_monotone(mut v in prop::collection::vec(-1e6f64..1e6, 1..60), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let d = EmpiricalDistribution::new(std::mem::take(&mut v)).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(d.quantile(lo).unwrap() <= d.quantile(hi).unwrap());
        }

        #[test]
        fn csv_round_trip(v in prop::collection::vec(-1e9f64..1e9, 1..40)) {
            let d = EmpiricalDistribution::new(v).unwrap();
            let back = EmpiricalDistribution::from_csv_reader(d.to_csv_string().as_bytes()).unwrap();
            prop_assert_eq!(d, back);
        }
    }
}
