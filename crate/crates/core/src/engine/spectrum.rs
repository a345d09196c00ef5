use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::system::SystemModel;

use super::{fourth_order_protocol, run};

/// Step of a uniform grid; errors on fewer than two points or uneven spacing.
pub fn uniform_step<T: Real>(grid: &[T]) -> Result<T> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.len() == 1 {
        return Err(Error::NonUniformGrid);
    }
    let step = grid[1] - grid[0];
    if step <= T::zero() {
        return Err(Error::NonUniformGrid);
    }
    let tol = step * T::lit(1e-6);
    if grid.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > tol) {
        return Err(Error::NonUniformGrid);
    }
    Ok(step)
}

/// Ideal fourth-order signal over τ21 (rows) × τ43 (columns) at fixed τ32.
pub fn sweep_2d<T: Real>(model: &SystemModel<T>, tau21: &[T], tau43: &[T], tau32: T) -> Result<DMatrix<T>> {
    uniform_step(tau21)?;
    uniform_step(tau43)?;
    let (nr, nc) = (tau21.len(), tau43.len());
    let vals: Vec<T> = (0..nr * nc)
        .into_par_iter()
        .map(|idx| {
            let (r, c) = (idx / nc, idx % nc);
            fourth_order_protocol(model, tau21[r], tau32, tau43[c], 1, T::zero())
                .and_then(|s| run(&s))
                .map_err(|e| Error::AtGridPoint { index: idx, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_row_slice(nr, nc, &vals))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub row: usize,
    pub col: usize,
    pub freq_row: f64,
    pub freq_col: f64,
    pub magnitude: f64,
}

/// |DFT| of a 2D signal with frequency axes in Hz.
#[derive(Debug, Clone)]
pub struct Spectrum2D {
    pub magnitude: DMatrix<f64>,
    /// Signed bin frequencies (0, 1, …, −1)/(M·step).
    pub freq_rows: Vec<f64>,
    pub freq_cols: Vec<f64>,
}

fn bin_freqs(n: usize, step: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let kk = if k <= (n - 1) / 2 { k as f64 } else { k as f64 - n as f64 };
            kk / (n as f64 * step)
        })
        .collect()
}

pub fn spectral_density(signal: &DMatrix<f64>, step_rows: f64, step_cols: f64) -> Result<Spectrum2D> {
    let (nr, nc) = signal.shape();
    if nr == 0 || nc == 0 {
        return Err(Error::EmptyGrid);
    }
    if !(step_rows > 0.0 && step_cols > 0.0) {
        return Err(Error::InvalidParameter("sample steps must be positive".into()));
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut data: Vec<Complex<f64>> = (0..nr * nc).map(|i| Complex::new(signal[(i / nc, i % nc)], 0.0)).collect();
    let row_fft = planner.plan_fft_forward(nc);
    for row in data.chunks_mut(nc) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(nr);
    let mut col = vec![Complex::new(0.0, 0.0); nr];
    for c in 0..nc {
        for r in 0..nr {
            col[r] = data[r * nc + c];
        }
        col_fft.process(&mut col);
        for r in 0..nr {
            data[r * nc + c] = col[r];
        }
    }
    let magnitude = DMatrix::from_fn(nr, nc, |r, c| data[r * nc + c].norm());
    Ok(Spectrum2D { magnitude, freq_rows: bin_freqs(nr, step_rows), freq_cols: bin_freqs(nc, step_cols) })
}

impl Spectrum2D {
    /// Width of one frequency bin along rows and columns.
    pub fn bin_width(&self) -> (f64, f64) {
        let w = |f: &[f64]| if f.len() > 1 { f[1] - f[0] } else { f64::INFINITY };
        (w(&self.freq_rows), w(&self.freq_cols))
    }

    /// Σ|X|², equal to M·Σ|x|² for an M-point signal.
    pub fn energy(&self) -> f64 {
        self.magnitude.iter().map(|m| m * m).sum()
    }

    /// Periodic local maxima at or above `rel` times the global maximum, strongest first.
    pub fn peaks(&self, rel: f64) -> Vec<Peak> {
        let (nr, nc) = self.magnitude.shape();
        let max = self.magnitude.max();
        let mut out = Vec::new();
        for r in 0..nr {
            for c in 0..nc {
                let m = self.magnitude[(r, c)];
                if m < rel * max || m == 0.0 {
                    continue;
                }
                let mut is_max = true;
                for dr in [nr - 1, 0, 1] {
                    for dc in [nc - 1, 0, 1] {
                        if (dr, dc) == (0, 0) || (nr == 1 && dr != 0) || (nc == 1 && dc != 0) {
                            continue;
                        }
                        if self.magnitude[((r + dr) % nr, (c + dc) % nc)] > m {
                            is_max = false;
                        }
                    }
                }
                if is_max {
                    out.push(Peak {
                        row: r,
                        col: c,
                        freq_row: self.freq_rows[r],
                        freq_col: self.freq_cols[c],
                        magnitude: m,
                    });
                }
            }
        }
        out.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
        out
    }
}
