use std::path::Path;

use eta_core::distributions::EmpiricalDistribution;
use ndarray::Array2;

use crate::CliError;

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// `x1,..,xd` header followed by one row per point.
pub fn inputs_to_csv(x: &Array2<f64>) -> String {
    let header: Vec<String> = (1..=x.ncols()).map(|i| format!("x{i}")).collect();
    let mut s = header.join(",");
    s.push('\n');
    for row in x.rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

pub fn inputs_from_csv(path: &Path) -> Result<Array2<f64>, CliError> {
    let text = read(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::usage(format!("{}: empty file", path.display())))?;
    let cols = header.split(',').count();
    let mut data = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let vals: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::usage(format!("{} line {}: {e}", path.display(), i + 2)))?;
        if vals.len() != cols {
            return Err(CliError::usage(format!("{} line {}: expected {cols} fields", path.display(), i + 2)));
        }
        data.extend(vals);
    }
    if data.is_empty() {
        return Err(CliError::usage(format!("{}: no rows", path.display())));
    }
    Ok(Array2::from_shape_vec((data.len() / cols, cols), data).expect("rows * cols values"))
}

pub fn read_samples(path: &Path) -> Result<EmpiricalDistribution, CliError> {
    EmpiricalDistribution::read_csv(path).map_err(|e| CliError { code: 2, message: format!("{}: {e}", path.display()) })
}
