//! Least-squares extraction of power-law exponents and exponential rates.

use serde::Serialize;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    PowerLaw,
    Exponential,
}

/// `log y = intercept + exponent_or_rate · u` with `u = log x` (power law)
/// or `u = x` (exponential).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub kind: FitKind,
    pub exponent_or_rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub n_points: usize,
    /// Largest absolute residual in log space.
    pub max_residual: f64,
}

impl ScalingFit {
    /// Whether the fitted slope lies within `tol` of `expected`.
    pub fn agrees_with(&self, expected: f64, tol: f64) -> bool {
        (self.exponent_or_rate - expected).abs() <= tol
    }

    /// Fitted curve evaluated at `x`.
    pub fn predict(&self, x: f64) -> f64 {
        let u = match self.kind {
            FitKind::PowerLaw => x.ln(),
            FitKind::Exponential => x,
        };
        (self.intercept + self.exponent_or_rate * u).exp()
    }
}

fn check_abscissae(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::Domain(format!("a fit needs at least 3 points, got {}", points.len())));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Domain("abscissae must be strictly increasing".into()));
    }
    if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Domain("non-finite data point".into()));
    }
    Ok(())
}

fn linear_fit(kind: FitKind, uv: &[(f64, f64)]) -> ScalingFit {
    let n = uv.len() as f64;
    let mu = uv.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = uv.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut suu, mut suv, mut svv) = (0.0, 0.0, 0.0);
    for &(u, v) in uv {
        suu += (u - mu) * (u - mu);
        suv += (u - mu) * (v - mv);
        svv += (v - mv) * (v - mv);
    }
    let slope = suv / suu;
    let intercept = mv - slope * mu;
    let residuals = uv.iter().map(|&(u, v)| v - intercept - slope * u);
    let (ss_res, max_residual) = residuals.fold((0.0, 0.0f64), |(s, m), r| (s + r * r, m.max(r.abs())));
    let r_squared = if svv == 0.0 { 1.0 } else { (1.0 - ss_res / svv).clamp(0.0, 1.0) };
    let stderr = if uv.len() > 2 { (ss_res / (n - 2.0) / suu).sqrt() } else { f64::NAN };
    ScalingFit { kind, exponent_or_rate: slope, intercept, r_squared, stderr, n_points: uv.len(), max_residual }
}

/// Fit `y = A x^β` through `(log x, log y)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<ScalingFit> {
    check_abscissae(points)?;
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::Domain("power-law fit needs positive x and y".into()));
    }
    let uv: Vec<_> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    Ok(linear_fit(FitKind::PowerLaw, &uv))
}

/// Fit `y = A e^{κx}` through `(x, log y)`.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<ScalingFit> {
    check_abscissae(points)?;
    if points.iter().any(|&(_, y)| y <= 0.0) {
        return Err(Error::Domain("exponential fit needs positive y".into()));
    }
    let uv: Vec<_> = points.iter().map(|&(x, y)| (x, y.ln())).collect();
    Ok(linear_fit(FitKind::Exponential, &uv))
}
