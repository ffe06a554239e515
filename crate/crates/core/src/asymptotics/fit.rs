use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::normalization;
use crate::error::{Error, Result};
use crate::metric::MagnitudeCurve;

/// Smallest accepted singular-value ratio of the column-scaled design.
const RANK_TOLERANCE: f64 = 1e-12;

/// Least-squares expansion coefficients, in the units of `c_j`
/// (the fit is of `value · n!ω_n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Power of `R` → coefficient, for free and fixed powers alike.
    pub coefficients: BTreeMap<i32, f64>,
    /// Standard errors of the free coefficients from the residual variance
    /// (absent when there are no spare degrees of freedom).
    pub std_errors: BTreeMap<i32, f64>,
    /// Weighted residual 2-norm.
    pub residual_norm: f64,
    pub fixed: BTreeSet<i32>,
    /// Row weights are `R^-weight_power`.
    pub weight_power: i32,
    pub n_samples: usize,
}

impl FitResult {
    /// Coefficient of `R^{n-j}`.
    pub fn c(&self, n: u32, j: u32) -> Option<f64> {
        self.coefficients.get(&(n as i32 - j as i32)).copied()
    }
}

/// Fits `value · n!ω_n ≈ Σ_p c_p R^p` over `p ∈ {n, n-1, n-2, n-3}`.
pub fn fit_expansion(
    curve: &MagnitudeCurve,
    n: u32,
    fixed: &BTreeMap<i32, f64>,
) -> Result<FitResult> {
    if n % 2 == 0 {
        return Err(Error::InvalidInput(format!("dimension must be odd, got {n}")));
    }
    let n = n as i32;
    fit_powers(curve, normalization(n as u32), &[n, n - 1, n - 2, n - 3], fixed)
}

/// Weighted least squares of `value · norm` against the given powers of `R`.
///
/// Rows are weighted by `R^-p_min`, with `p_min` the lowest free power, so
/// every sample carries equal weight on that coefficient. Fixed powers are
/// subtracted before fitting.
pub fn fit_powers(
    curve: &MagnitudeCurve,
    norm: f64,
    powers: &[i32],
    fixed: &BTreeMap<i32, f64>,
) -> Result<FitResult> {
    let all: BTreeSet<i32> = powers.iter().copied().collect();
    if let Some(p) = fixed.keys().find(|p| !all.contains(p)) {
        return Err(Error::InvalidInput(format!("fixed power {p} is not in the expansion")));
    }
    let free: Vec<i32> = all.iter().rev().copied().filter(|p| !fixed.contains_key(p)).collect();
    if free.is_empty() {
        return Err(Error::InvalidInput("every power is fixed".into()));
    }
    let samples: Vec<(f64, f64)> = curve.successful().map(|s| (s.r, s.value)).collect();
    if samples.len() < free.len() + 2 {
        return Err(Error::InvalidInput(format!(
            "{} free powers need at least {} samples, got {}",
            free.len(),
            free.len() + 2,
            samples.len()
        )));
    }
    let (rmin, rmax) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(r, _)| (lo.min(r), hi.max(r)));
    if rmax < 2.0 * rmin {
        return Err(Error::InvalidInput(format!(
            "R values must span at least a factor 2, got [{rmin}, {rmax}]"
        )));
    }
    let p_min = *free.last().unwrap();
    let weight = |r: f64| r.powi(-p_min);
    let rows = samples.len();
    let cols = free.len();
    let mut a = DMatrix::from_fn(rows, cols, |i, k| weight(samples[i].0) * samples[i].0.powi(free[k]));
    let b = DVector::from_iterator(
        rows,
        samples.iter().map(|&(r, v)| {
            let known: f64 = fixed.iter().map(|(&p, &c)| c * r.powi(p)).sum();
            weight(r) * (v * norm - known)
        }),
    );
    // scale columns to unit max-norm so the rank test is scale free
    let scales: Vec<f64> = (0..cols)
        .map(|k| a.column(k).amax().max(f64::MIN_POSITIVE))
        .collect();
    for (k, s) in scales.iter().enumerate() {
        a.column_mut(k).scale_mut(1.0 / s);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_TOLERANCE * smax) {
        return Err(Error::RankDeficient(smin / smax));
    }
    let x = svd.solve(&b, 0.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let resid = &b - &a * &x;
    let residual_norm = resid.norm();

    let mut coefficients: BTreeMap<i32, f64> = fixed.clone();
    let mut std_errors = BTreeMap::new();
    let dof = rows - cols;
    let cov = (a.transpose() * &a).try_inverse();
    for (k, &p) in free.iter().enumerate() {
        coefficients.insert(p, x[k] / scales[k]);
        if let (Some(cov), true) = (&cov, dof > 0) {
            let s2 = residual_norm * residual_norm / dof as f64;
            std_errors.insert(p, (s2 * cov[(k, k)]).sqrt() / scales[k]);
        }
    }
    Ok(FitResult {
        coefficients,
        std_errors,
        residual_norm,
        fixed: fixed.keys().copied().collect(),
        weight_power: p_min,
        n_samples: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{interval_functionals, predict_coefficients, predicted_magnitude};
    use crate::domain::DomainSpec;
    use crate::geometry::functionals_quadrature;
    use crate::metric::MagnitudeSample;
    use crate::sampler::interval_magnitude_exact;

    fn curve(points: impl IntoIterator<Item = (f64, f64)>) -> MagnitudeCurve {
        MagnitudeCurve {
            samples: points
                .into_iter()
                .map(|(r, value)| MagnitudeSample {
                    r,
                    value,
                    n_points: 0,
                    condition_estimate: 1.0,
                    failure: None,
                })
                .collect(),
        }
    }

    #[test]
    fn recovers_noise_free_coefficients() {
        let g = functionals_quadrature(&DomainSpec::ellipsoid(0.5), 64).unwrap();
        let p = predict_coefficients(&g, 3, Some(2.0)).unwrap();
        let grid: Vec<f64> = (0..10).map(|i| 2.0 + i as f64).collect();
        let c = curve(grid.iter().map(|&r| (r, predicted_magnitude(&p, r, 3).unwrap())));
        let fit = fit_expansion(&c, 3, &BTreeMap::new()).unwrap();
        for j in 0..4 {
            let got = fit.c(3, j).unwrap();
            assert!((got - p.c[j as usize]).abs() <= 1e-8 * p.c[j as usize].abs(), "c{j}: {got}");
        }
    }

    #[test]
    fn interval_curve_gives_length_and_one() {
        let ell = 2.0;
        let c = curve((1..=6).map(|i| (i as f64, interval_magnitude_exact(ell, i as f64))));
        let fixed = BTreeMap::from([(-1, 0.0), (-2, 0.0)]);
        let fit = fit_expansion(&c, 1, &fixed).unwrap();
        assert!((fit.coefficients[&1] - ell).abs() < 1e-12);
        // constant term of the magnitude is coefficient / norm
        assert!((fit.coefficients[&0] / 2.0 - 1.0).abs() < 1e-12);
        let p = predict_coefficients(&interval_functionals(ell), 1, None).unwrap();
        assert!((fit.coefficients[&0] - p.c[1]).abs() < 1e-12);
    }

    #[test]
    fn fixed_powers_extract_the_constant() {
        let g = functionals_quadrature(&DomainSpec::ball(1.0), 64).unwrap();
        let p = predict_coefficients(&g, 3, Some(-0.7)).unwrap();
        let c = curve((1..=5).map(|i| {
            let r = i as f64;
            (r, predicted_magnitude(&p, r, 3).unwrap())
        }));
        let fixed = BTreeMap::from([(3, p.c[0]), (2, p.c[1]), (1, p.c[2])]);
        let fit = fit_expansion(&c, 3, &fixed).unwrap();
        assert_eq!(fit.weight_power, 0);
        assert!((fit.coefficients[&0] - p.c[3]).abs() < 1e-10);
    }

    #[test]
    fn rejects_narrow_or_short_grids() {
        let c = curve([(1.0, 1.0), (1.5, 2.0), (1.9, 3.0), (1.95, 4.0)]);
        assert!(matches!(fit_expansion(&c, 1, &BTreeMap::new()), Err(Error::InvalidInput(_))));
        let c = curve([(1.0, 1.0), (4.0, 2.0)]);
        assert!(matches!(fit_expansion(&c, 3, &BTreeMap::new()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn duplicate_scales_are_rank_deficient() {
        // four distinct rows against four powers is fine, but collinear data is not
        let c = curve([(1.0, 1.0), (1.0, 1.0), (1.0, 1.0), (2.0, 2.0), (2.0, 2.0), (2.0, 2.0)]);
        assert!(matches!(
            fit_expansion(&c, 3, &BTreeMap::new()),
            Err(Error::RankDeficient(_))
        ));
    }
}
