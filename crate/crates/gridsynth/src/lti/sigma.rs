//! Singular-value plots and CSV export of frequency-domain data.

use std::io::Write;

use crate::error::{Error, Result};
use crate::lti::model::{singular_values_complex, StateSpaceModel};

/// Per-frequency singular values, descending within each row.
#[derive(Debug, Clone)]
pub struct SigmaPlot {
    pub frequencies: Vec<f64>,
    pub singular_values: Vec<Vec<f64>>,
}

impl SigmaPlot {
    pub fn max_sigma1(&self) -> f64 {
        self.singular_values
            .iter()
            .filter_map(|sv| sv.first().copied())
            .fold(0.0, f64::max)
    }

    /// CSV with header `omega_rad_s, sigma1, sigma2, ...` at 12+ significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let k = self.singular_values.first().map_or(0, |v| v.len());
        write!(w, "omega_rad_s")?;
        for i in 1..=k {
            write!(w, ",sigma{i}")?;
        }
        writeln!(w)?;
        for (omega, sv) in self.frequencies.iter().zip(&self.singular_values) {
            write!(w, "{omega:.12e}")?;
            for s in sv {
                write!(w, ",{s:.12e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Singular values of `G(jw)` over a sorted grid.
pub fn sigma_plot(sys: &StateSpaceModel, grid: &[f64]) -> Result<SigmaPlot> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("sigma grid must be sorted".into()));
    }
    let singular_values = grid
        .iter()
        .map(|&w| singular_values_complex(&sys.eval_response(w)))
        .collect();
    Ok(SigmaPlot {
        frequencies: grid.to_vec(),
        singular_values,
    })
}

/// `n` log-spaced angular frequencies covering `f_lo..f_hi` in Hz.
pub fn log_grid_hz(f_lo: f64, f_hi: f64, n: usize) -> Vec<f64> {
    let w_lo = 2.0 * std::f64::consts::PI * f_lo;
    let w_hi = 2.0 * std::f64::consts::PI * f_hi;
    let ratio = (w_hi / w_lo).ln();
    (0..n)
        .map(|i| w_lo * (ratio * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Default evaluation grid: DC plus 400 log-spaced points over 1e-4..1e4 Hz.
pub fn default_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(log_grid_hz(1e-4, 1e4, 400));
    g
}
