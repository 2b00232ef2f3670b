use std::io::BufRead;
use std::path::Path;

use ndarray::Array2;

use super::Observable;
use crate::{Error, Result};

/// Aligned inputs `x_i`, states `u_i` and observables `y_i = g(u_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Array2<f64>,
    pub states: Array2<f64>,
    pub observables: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Array2<f64>, states: Array2<f64>, g: &Observable) -> Result<Self> {
        g.check_dim(states.ncols())?;
        let observables = states.rows().into_iter().map(|u| g.value(&u.to_vec())).collect();
        Self::from_parts(inputs, states, observables, g)
    }

    /// Checks alignment, finiteness and `|y_i - g(u_i)| <= 1e-12 (1 + |y_i|)`.
    pub fn from_parts(inputs: Array2<f64>, states: Array2<f64>, observables: Vec<f64>, g: &Observable) -> Result<Self> {
        let n = inputs.nrows();
        if n == 0 {
            return Err(Error::EmptyDistribution);
        }
        if states.nrows() != n || observables.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: states.nrows().min(observables.len()) });
        }
        g.check_dim(states.ncols())?;
        for (index, &value) in inputs.iter().chain(states.iter()).chain(&observables).enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
        }
        for (i, (u, &y)) in states.rows().into_iter().zip(&observables).enumerate() {
            if (g.value(&u.to_vec()) - y).abs() > 1e-12 * (1.0 + y.abs()) {
                return Err(Error::InvalidArgument(format!("row {i}: observable does not match g(u)")));
            }
        }
        Ok(Self { inputs, states, observables })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn state_dim(&self) -> usize {
        self.states.ncols()
    }

    /// Header `x1,..,xd,u1,..,um,y`, one row per point.
    pub fn to_csv_string(&self) -> String {
        let mut header: Vec<String> = (1..=self.input_dim()).map(|i| format!("x{i}")).collect();
        header.extend((1..=self.state_dim()).map(|j| format!("u{j}")));
        header.push("y".into());
        let mut s = header.join(",");
        s.push('\n');
        for ((x, u), y) in self.inputs.rows().into_iter().zip(self.states.rows()).zip(&self.observables) {
            let fields: Vec<String> = x.iter().chain(u.iter()).chain(std::iter::once(y)).map(|v| v.to_string()).collect();
            s.push_str(&fields.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn from_csv_reader<R: BufRead>(reader: R, g: &Observable) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))??;
        let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
        let d = cols.iter().take_while(|c| c.starts_with('x')).count();
        let m = cols[d..].iter().take_while(|c| c.starts_with('u')).count();
        if d == 0 || m == 0 || cols.len() != d + m + 1 || cols[d + m] != "y" {
            return Err(Error::Parse(format!("unexpected header: {header}")));
        }
        let (mut xs, mut us, mut ys) = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
            if vals.len() != d + m + 1 {
                return Err(Error::Parse(format!("line {}: expected {} fields", lineno + 2, d + m + 1)));
            }
            xs.extend_from_slice(&vals[..d]);
            us.extend_from_slice(&vals[d..d + m]);
            ys.push(vals[d + m]);
        }
        let n = ys.len();
        let inputs = Array2::from_shape_vec((n, d), xs).expect("n*d values");
        let states = Array2::from_shape_vec((n, m), us).expect("n*m values");
        Self::from_parts(inputs, states, ys, g)
    }

    pub fn read_csv(path: impl AsRef<Path>, g: &Observable) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file), g)
    }
}
