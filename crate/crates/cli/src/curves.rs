//! k-indexed curves as written to and read from CSV.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub ks: Vec<usize>,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn new(ks: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(ks.len(), values.len());
        Curve { ks, values }
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.ks
            .iter()
            .zip(&self.values)
            .map(|(&k, &v)| (k as f64, v))
            .collect()
    }

    /// Pointwise mean over the k values present in every curve.
    pub fn mean(curves: &[Curve]) -> Option<Curve> {
        let first = curves.first()?;
        let mut sums: BTreeMap<usize, (f64, usize)> =
            first.ks.iter().map(|&k| (k, (0.0, 0))).collect();
        for c in curves {
            for (k, v) in c.ks.iter().zip(&c.values) {
                if let Some(e) = sums.get_mut(k) {
                    e.0 += v;
                    e.1 += 1;
                }
            }
        }
        let (ks, values) = sums
            .into_iter()
            .filter(|(_, (_, n))| *n == curves.len())
            .map(|(k, (s, n))| (k, s / n as f64))
            .unzip();
        Some(Curve { ks, values })
    }
}

pub fn write_curve_csv(path: &Path, header: &str, curve: &Curve) -> CliResult<()> {
    let mut out = Vec::new();
    writeln!(out, "{header}").expect("in-memory write");
    for (k, v) in curve.ks.iter().zip(&curve.values) {
        writeln!(out, "{k},{v}").expect("in-memory write");
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Reads the first two columns as `k,value`; further columns are returned
/// from the first data row (reference levels in bias CSVs).
pub fn read_curve_csv(path: &Path) -> CliResult<(Curve, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |line: usize| CliError::Data(format!("{}: malformed line {line}", path.display()));
    let (mut ks, mut values, mut extra) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(bad(i + 1));
        }
        ks.push(fields[0].parse().map_err(|_| bad(i + 1))?);
        values.push(fields[1].parse().map_err(|_| bad(i + 1))?);
        if i == 1 {
            extra = fields[2..]
                .iter()
                .map(|f| f.parse())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(i + 1))?;
        }
    }
    Ok((Curve { ks, values }, extra))
}
