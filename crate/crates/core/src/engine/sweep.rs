use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{run, ProtocolSpec};

/// Signals over a one-dimensional axis, with the metadata needed to rerun it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Vec<f64>,
    pub signals: Vec<f64>,
    /// Per-point error bars (zero for noiseless runs).
    pub sigma: Vec<f64>,
    pub metadata: BTreeMap<String, String>,
}

/// `x` with 17 significant digits, enough to round-trip an f64.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepResult {
    pub fn new(axis: Vec<f64>, signals: Vec<f64>) -> Result<Self> {
        if axis.len() != signals.len() {
            return Err(Error::LengthMismatch(axis.len(), signals.len()));
        }
        let sigma = vec![0.0; axis.len()];
        Ok(Self { axis, signals, sigma, metadata: BTreeMap::new() })
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    /// `# key = value` header lines, then `axis_value,signal,sigma` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s.push_str("axis_value,signal,sigma\n");
        for ((a, y), e) in self.axis.iter().zip(&self.signals).zip(&self.sigma) {
            let _ = writeln!(s, "{},{},{}", format_sig17(*a), format_sig17(*y), format_sig17(*e));
        }
        s
    }

    /// Inverse of [`SweepResult::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut out = SweepResult::new(vec![], vec![])?;
        let bad = |line: usize, msg: &str| Error::ChannelParse { line, msg: msg.into() };
        let mut header = false;
        for (i, line) in text.lines().enumerate() {
            if let Some(meta) = line.strip_prefix("# ") {
                if let Some((k, v)) = meta.split_once(" = ") {
                    out.metadata.insert(k.to_string(), v.to_string());
                }
                continue;
            }
            if !header {
                header = true;
                continue;
            }
            let f: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| bad(i + 1, "bad number")))
                .collect::<Result<_>>()?;
            if f.len() != 3 {
                return Err(bad(i + 1, "expected three columns"));
            }
            out.axis.push(f[0]);
            out.signals.push(f[1]);
            out.sigma.push(f[2]);
        }
        Ok(out)
    }
}

/// One [`run`] per grid point, in parallel, results in grid order.
pub fn sweep<T, F>(grid: &[T], build: F) -> Result<SweepResult>
where
    T: Real,
    F: Fn(T) -> Result<ProtocolSpec<T>> + Sync,
{
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let signals: Vec<f64> = grid
        .par_iter()
        .enumerate()
        .map(|(index, &x)| {
            build(x)
                .and_then(|spec| run(&spec))
                .map(|v| v.to_f64())
                .map_err(|e| Error::AtGridPoint { index, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    SweepResult::new(grid.iter().map(|x| x.to_f64()).collect(), signals)
}

/// Least-squares fit of log|signal| = k log x + b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub k: f64,
    pub intercept: f64,
    /// RMS residual in the log domain.
    pub residual: f64,
    /// Points dropped for a non-positive x or a zero signal.
    pub excluded: usize,
}

pub fn fit_power_law(x: &[f64], signals: &[f64]) -> Result<PowerLawFit> {
    if x.len() != signals.len() {
        return Err(Error::LengthMismatch(x.len(), signals.len()));
    }
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(signals)
        .filter(|(a, y)| **a > 0.0 && y.abs() > 0.0 && a.is_finite() && y.is_finite())
        .map(|(a, y)| (a.ln(), y.abs().ln()))
        .collect();
    let excluded = x.len() - pts.len();
    if pts.len() < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 positive points (have {})", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all x values coincide".into()));
    }
    let k = sxy / sxx;
    let intercept = my - k * mx;
    let residual = (pts.iter().map(|p| (p.1 - k * p.0 - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Ok(PowerLawFit { k, intercept, residual, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::second_order_protocol;
    use crate::system::{ExperimentParams, SystemModel};

    #[test]
    fn quadratic_exponent() {
        let x: Vec<f64> = (1..=8).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.7 * v * v).collect();
        let f = fit_power_law(&x, &y).unwrap();
        assert!((f.k - 2.0).abs() < 1e-9);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn non_positive_points_excluded() {
        let x = [0.0, 0.1, 0.2, 0.3, 0.4];
        let y = [1.0, 0.01, 0.04, 0.0, 0.16];
        let f = fit_power_law(&x, &y).unwrap();
        assert_eq!(f.excluded, 2);
        assert!((f.k - 2.0).abs() < 1e-9);
        assert!(fit_power_law(&[0.1, 0.2], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn empty_grid() {
        let m = SystemModel::<f64>::build(ExperimentParams::default()).unwrap();
        assert!(matches!(sweep(&[], |t| second_order_protocol(&m, t)), Err(Error::EmptyGrid)));
    }

    #[test]
    fn one_point_equals_run() {
        let m = SystemModel::<f64>::build(ExperimentParams::default()).unwrap();
        let r = sweep(&[6e-6], |t| second_order_protocol(&m, t)).unwrap();
        let v = run(&second_order_protocol(&m, 6e-6).unwrap()).unwrap();
        assert_eq!(r.signals, vec![v]);
    }

    #[test]
    fn grid_errors_carry_index() {
        let m = SystemModel::<f64>::build(ExperimentParams::default()).unwrap();
        let e = sweep(&[1e-6, -1e-6], |t| second_order_protocol(&m, t)).unwrap_err();
        assert!(matches!(e, Error::AtGridPoint { index: 1, .. }));
    }

    #[test]
    fn csv_round_trip() {
        let r = SweepResult::new(vec![0.0, 1.0 / 3.0], vec![std::f64::consts::PI, -1e-300])
            .unwrap()
            .with_meta("mode", "coupling-only");
        let back = SweepResult::from_csv(&r.to_csv()).unwrap();
        assert_eq!(back, r);
    }
}
