//! Large-scale expansion of the magnitude function.
//!
//! For a smooth compact domain `X ⊂ R^n` with `n` odd,
//! `M_X(R) = Σ_j c_j(X) / (n! ω_n) R^{n-j} + O(R^{-∞})` with
//! `c0 = vol(X)`, `c1 = m·area(∂X)`, `c2 = (m²/2)(n-1)∫H` and `c3 = λ_n·W(∂X)`,
//! where `m = (n+1)/2` and `λ_n` is a dimensional constant known only through
//! calibration.

mod calibrate;
mod experiment;
mod fit;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, GeometricFunctionals};

pub use calibrate::{
    calibrate_lambda3, residual_after, Calibration, CalibrationEstimator, CalibrationOptions,
    CalibrationPoint, Provenance,
};
pub use experiment::{
    falsification_experiment, ExperimentOptions, ExperimentRow, ExperimentTable, Verdict,
};
pub use fit::{fit_expansion, fit_powers, FitResult};

/// `n! ω_n`.
pub fn normalization(n: u32) -> f64 {
    (1..=n).map(f64::from).product::<f64>() * unit_ball_volume(n)
}

/// Functionals of the segment `[0, length]`: its boundary is two points.
pub fn interval_functionals(length: f64) -> GeometricFunctionals {
    GeometricFunctionals {
        volume: length,
        area: 2.0,
        mean_curvature_integral: 0.0,
        willmore: 0.0,
    }
}

/// Predicted coefficients `c0..c3` (the last only when `λ_n` is known).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionPrediction {
    pub n: u32,
    pub m: u32,
    /// `c0, c1, c2`, followed by `c3` when `lambda_n` is set.
    pub c: Vec<f64>,
    pub norm: f64,
    pub lambda_n: Option<f64>,
}

impl ExpansionPrediction {
    pub fn coefficient(&self, j: usize) -> Result<f64> {
        match self.c.get(j) {
            Some(&c) => Ok(c),
            None if j == 3 => Err(Error::MissingLambda),
            None => Err(Error::InvalidInput(format!("no coefficient c{j}"))),
        }
    }

    /// Coefficients of the domain scaled by `s`: `c_j ↦ s^{n-j} c_j`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut p = self.clone();
        for (j, c) in p.c.iter_mut().enumerate() {
            *c *= s.powi(self.n as i32 - j as i32);
        }
        p
    }
}

pub fn predict_coefficients(
    g: &GeometricFunctionals,
    n: u32,
    lambda_n: Option<f64>,
) -> Result<ExpansionPrediction> {
    if n % 2 == 0 {
        return Err(Error::InvalidInput(format!("dimension must be odd, got {n}")));
    }
    if let Some(l) = lambda_n {
        if !l.is_finite() {
            return Err(Error::InvalidInput(format!("lambda_n must be finite, got {l}")));
        }
    }
    let m = (n + 1) / 2;
    let mf = f64::from(m);
    let mut c = vec![
        g.volume,
        mf * g.area,
        mf * mf / 2.0 * f64::from(n - 1) * g.mean_curvature_integral,
    ];
    if let Some(l) = lambda_n {
        c.push(l * g.willmore);
    }
    Ok(ExpansionPrediction {
        n,
        m,
        c,
        norm: normalization(n),
        lambda_n,
    })
}

/// `(1/norm) Σ_{j <= order} c_j R^{n-j}`.
pub fn predicted_magnitude(p: &ExpansionPrediction, r: f64, order: usize) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("R must be positive, got {r}")));
    }
    if order > 3 {
        return Err(Error::InvalidInput(format!("order must be 0..=3, got {order}")));
    }
    let mut sum = 0.0;
    for j in 0..=order {
        sum += p.coefficient(j)? * r.powi(p.n as i32 - j as i32);
    }
    Ok(sum / p.norm)
}
