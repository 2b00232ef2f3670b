use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The scalar observable `g(u)` applied to a model's state output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Observable {
    /// `g(u) = u_0` for one-dimensional states.
    Identity,
    /// `g(u) = max_j u_j`.
    Max,
    /// `g(u) = sum_j w_j |u_j|`.
    WeightedAbsSum { weights: Vec<f64> },
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Observable {
    pub fn check_dim(&self, m: usize) -> Result<()> {
        match self {
            Observable::Identity if m != 1 => Err(Error::DimensionMismatch { expected: 1, got: m }),
            Observable::WeightedAbsSum { weights } if weights.len() != m => {
                Err(Error::DimensionMismatch { expected: weights.len(), got: m })
            }
            _ if m == 0 => Err(Error::DimensionMismatch { expected: 1, got: 0 }),
            _ => Ok(()),
        }
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        match self {
            Observable::Identity => u[0],
            Observable::Max => u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Observable::WeightedAbsSum { weights } => weights.iter().zip(u).map(|(w, x)| w * x.abs()).sum(),
        }
    }

    /// Gradient of `g` with respect to `u`; the subgradient at kinks is 0
    /// for `|.|` and the first maximizer for `max`.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        match self {
            Observable::Identity => vec![1.0],
            Observable::Max => {
                let mut g = vec![0.0; u.len()];
                g[self.trigger(u).unwrap_or(0)] = 1.0;
                g
            }
            Observable::WeightedAbsSum { weights } => weights.iter().zip(u).map(|(w, x)| w * sign(*x)).collect(),
        }
    }

    /// The output component that determines `g(u)`, if `g` has one: the
    /// first maximizer for `max`, the largest weighted term for a weighted
    /// sum. Ties resolve to the lowest index.
    pub fn trigger(&self, u: &[f64]) -> Option<usize> {
        let argmax = |vals: &mut dyn Iterator<Item = f64>| {
            let mut best = (0usize, f64::NEG_INFINITY);
            for (j, v) in vals.enumerate() {
                if v > best.1 {
                    best = (j, v);
                }
            }
            best.0
        };
        match self {
            Observable::Identity => None,
            Observable::Max => Some(argmax(&mut u.iter().copied())),
            Observable::WeightedAbsSum { weights } => {
                Some(argmax(&mut weights.iter().zip(u).map(|(w, x)| w * x.abs())))
            }
        }
    }

    /// Whether `g(u)` equals one selected coordinate of `u`.
    pub fn is_selecting(&self) -> bool {
        matches!(self, Observable::Max)
    }

    /// Value and `u`-gradient with the selected coordinate frozen at `j`.
    /// Observables that do not select a coordinate ignore `j`.
    pub fn frozen(&self, u: &[f64], j: usize) -> (f64, Vec<f64>) {
        match self {
            Observable::Max => {
                let mut grad = vec![0.0; u.len()];
                grad[j] = 1.0;
                (u[j], grad)
            }
            _ => (self.value(u), self.gradient(u)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_and_triggers() {
        let g = Observable::WeightedAbsSum { weights: vec![2.0, 0.5] };
        assert_eq!(g.value(&[1.0, -2.0]), 3.0);
        assert_eq!(g.trigger(&[1.0, -2.0]), Some(0));
        assert_eq!(g.trigger(&[0.1, -2.0]), Some(1));
        assert_eq!(g.gradient(&[1.0, -2.0]), vec![2.0, -0.5]);
        assert_eq!(g.gradient(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(g.frozen(&[1.0, -2.0], 0), (3.0, vec![2.0, -0.5]));
        assert!(!g.is_selecting());

        let m = Observable::Max;
        assert_eq!(m.value(&[0.5, 3.0, -1.0]), 3.0);
        assert_eq!(m.trigger(&[0.5, 3.0, -1.0]), Some(1));
        assert_eq!(m.frozen(&[0.5, 3.0, -1.0], 0), (0.5, vec![1.0, 0.0, 0.0]));
        assert_eq!(Observable::Identity.trigger(&[4.0]), None);
    }

    #[test]
    fn dimension_checks() {
        assert!(Observable::Identity.check_dim(2).is_err());
        assert!(Observable::WeightedAbsSum { weights: vec![1.0] }.check_dim(2).is_err());
        assert!(Observable::Max.check_dim(3).is_ok());
    }
}
