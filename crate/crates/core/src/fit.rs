//! Least-squares straight lines, used for log-log scaling fits.

use alloc::vec::Vec;

// float methods come from here in no_std builds, from std otherwise
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope (zero for two points or exact fits).
    pub slope_std_error: f64,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let w: Vec<f64> = alloc::vec![1.0; x.len()];
    fit_line_weighted(x, y, &w)
}

/// Weighted least squares; `w` are inverse variances up to a constant.
pub fn fit_line_weighted(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len().min(w.len()),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.len(),
        });
    }
    if x.iter().chain(y).chain(w).any(|v| !v.is_finite()) || w.iter().any(|&v| v < 0.0) {
        return Err(Error::param(
            "fit inputs must be finite with non-negative weights",
        ));
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        sxx += wi * (xi - mx) * (xi - mx);
        sxy += wi * (xi - mx) * (yi - my);
        syy += wi * (yi - my) * (yi - my);
    }
    if sxx <= 0.0 {
        return Err(Error::param("abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let n = x.len() as f64;
    let slope_std_error = if x.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        slope_std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert_relative_eq!(f.slope, -0.5, epsilon = 1e-15);
        assert_relative_eq!(f.intercept, 2.0, epsilon = 1e-15);
        assert_relative_eq!(f.r_squared, 1.0);
        assert!(f.slope_std_error < 1e-15);
    }

    #[test]
    fn matches_textbook_formula() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.1, 3.9, 6.2, 7.8, 10.1];
        let f = fit_line(&x, &y).unwrap();
        // slope = (n Σxy − Σx Σy) / (n Σx² − (Σx)²)
        let (n, sx, sy) = (5.0, 15.0, 30.1);
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let want = (n * sxy - sx * sy) / (n * 55.0 - sx * sx);
        assert_relative_eq!(f.slope, want, epsilon = 1e-13);
        assert!(f.r_squared > 0.99 && f.r_squared <= 1.0);
    }

    #[test]
    fn weights_select_points() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.0, 1.0, 2.0, 100.0];
        let f = fit_line_weighted(&x, &y, &[1.0, 1.0, 1.0, 0.0]).unwrap();
        assert_relative_eq!(f.slope, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            fit_line(&[1.0], &[1.0]),
            Err(Error::InsufficientData { .. })
        ));
        assert!(fit_line(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(fit_line(&[1.0, 2.0], &[1.0]).is_err());
    }
}
