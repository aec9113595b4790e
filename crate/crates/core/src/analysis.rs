//! Power-law fits of error curves and the crossover between them.

use serde::Serialize;

use crate::error::{QstError, Result};

/// `error ≈ prefactor · k^exponent`, fitted with the exponent held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: i32,
    pub prefactor: f64,
    pub rms_residual: f64,
}

impl PowerLawFit {
    pub fn predict(&self, k: f64) -> f64 {
        self.prefactor * k.powi(self.exponent)
    }
}

fn check_data(data: &[(f64, f64)]) -> Result<()> {
    if data.len() < 3 {
        return Err(QstError::InsufficientData(format!("need at least 3 points, got {}", data.len())));
    }
    if let Some(&(k, _)) = data.iter().find(|(k, e)| !(*k >= 1.0) || !e.is_finite()) {
        return Err(QstError::InvalidParameter(format!("fit abscissae must be >= 1 with finite values, got k = {k}")));
    }
    Ok(())
}

/// Zero-intercept least squares on the regressor `k^exponent`.
pub fn fit_power(data: &[(f64, f64)], exponent: i32) -> Result<PowerLawFit> {
    check_data(data)?;
    let (num, den) = data.iter().fold((0.0, 0.0), |(n, d), &(k, e)| {
        let x = k.powi(exponent);
        (n + e * x, d + x * x)
    });
    let prefactor = num / den;
    if prefactor < 0.0 {
        return Err(QstError::InvalidParameter(format!("fitted prefactor {prefactor:e} is negative")));
    }
    let fit = PowerLawFit { exponent, prefactor, rms_residual: 0.0 };
    let ss: f64 = data.iter().map(|&(k, e)| (e - fit.predict(k)).powi(2)).sum();
    Ok(PowerLawFit { rms_residual: (ss / data.len() as f64).sqrt(), ..fit })
}

/// Converts `(k, value)` rows with integer steps for [`fit_power`].
pub fn as_real(curve: &[(usize, f64)]) -> Vec<(f64, f64)> {
    curve.iter().map(|&(k, e)| (k as f64, e)).collect()
}

/// Step count at which `a` and `b` predict the same error.
pub fn crossover(a: &PowerLawFit, b: &PowerLawFit) -> Result<f64> {
    if !(a.prefactor > 0.0) || !(b.prefactor > 0.0) {
        return Err(QstError::InvalidParameter(format!(
            "crossover needs positive prefactors, got {:e} and {:e}",
            a.prefactor, b.prefactor
        )));
    }
    if a.exponent == b.exponent {
        return Err(QstError::InvalidParameter("crossover needs distinct exponents".into()));
    }
    Ok((b.prefactor / a.prefactor).powf(1.0 / f64::from(a.exponent - b.exponent)))
}

/// Free power law `prefactor · k^exponent` from least squares in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreeExponentFit {
    pub exponent: f64,
    pub prefactor: f64,
}

/// Diagnostic fit with the exponent free. Points with non-positive values are skipped.
pub fn free_exponent_fit(data: &[(f64, f64)]) -> Result<FreeExponentFit> {
    check_data(data)?;
    let logs: Vec<(f64, f64)> = data.iter().filter(|(_, e)| *e > 0.0).map(|&(k, e)| (k.ln(), e.ln())).collect();
    if logs.len() < 2 {
        return Err(QstError::InsufficientData("fewer than 2 positive values for a log-log fit".into()));
    }
    let n = logs.len() as f64;
    let (mx, my) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx).powi(2)));
    if sxx == 0.0 {
        return Err(QstError::InsufficientData("all abscissae coincide".into()));
    }
    let exponent = sxy / sxx;
    Ok(FreeExponentFit { exponent, prefactor: (my - exponent * mx).exp() })
}
