//! Least-squares power laws `y = C N^p` fitted in log-log coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Exponent `p`.
    pub slope: f64,
    /// `ln C`.
    pub intercept: f64,
    /// Root-mean-square residual of `ln y` around the line.
    pub residual: f64,
    pub points: usize,
}

impl PowerLawFit {
    pub fn predict(&self, n: f64) -> f64 {
        (self.intercept + self.slope * n.ln()).exp()
    }
}

/// Fits `ln y = intercept + slope ln n` to `(n, y)` pairs.
pub fn fit_powerlaw(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return invalid(format!("a power-law fit needs at least two points, got {}", points.len()));
    }
    if let Some(&(n, y)) = points.iter().find(|&&(n, y)| !(n > 0.0 && y > 0.0 && n.is_finite() && y.is_finite())) {
        return invalid(format!("power-law fit needs positive finite data, got ({n}, {y})"));
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return invalid("power-law fit needs at least two distinct abscissae");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(PowerLawFit { slope, intercept, residual: (ss / k).sqrt(), points: points.len() })
}
