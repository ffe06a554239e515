use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fit_expansion, predict_coefficients, predicted_magnitude, ExpansionPrediction};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::geometry::{functionals_quadrature, DEFAULT_QUAD_ORDER};
use crate::metric::{MagnitudeCurve, MagnitudeSample};
use crate::sampler::{Estimator, Strategy};

/// Which per-scale value enters the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationEstimator {
    /// The certified lower bound at the last refinement level.
    LowerBound,
    /// The Richardson extrapolation of the last two levels, with the change
    /// from the previous pair as a systematic error.
    Extrapolated,
}

impl FromStr for CalibrationEstimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower_bound" | "lower-bound" => Ok(Self::LowerBound),
            "extrapolated" => Ok(Self::Extrapolated),
            _ => Err(Error::InvalidInput(format!("unknown estimator `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    #[serde(rename = "R_grid")]
    pub r_grid: Vec<f64>,
    pub tol: f64,
    #[serde(rename = "N_max")]
    pub n_max: usize,
    pub seed: u64,
    pub estimator: CalibrationEstimator,
    pub bootstrap_samples: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            r_grid: vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0],
            tol: 1e-9,
            n_max: 4096,
            seed: 0,
            estimator: CalibrationEstimator::Extrapolated,
            bootstrap_samples: 1000,
        }
    }
}

/// Per-scale record of a calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    #[serde(rename = "R")]
    pub r: f64,
    pub lower_bound: f64,
    pub value: f64,
    /// Systematic error of `value` (zero for the lower bound).
    pub systematic: f64,
    pub n_points: usize,
    /// `(value - order-2 prediction) · norm`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub domain: DomainSpec,
    pub options: CalibrationOptions,
    /// Fitted constant term `c3` and its split uncertainty.
    pub c3: f64,
    pub c3_statistical: f64,
    pub c3_systematic: f64,
    pub willmore: f64,
    pub points: Vec<CalibrationPoint>,
    pub tool_version: String,
}

/// The calibrated constant, stored as JSON `{lambda3, uncertainty, provenance}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub lambda3: f64,
    pub uncertainty: f64,
    pub provenance: Provenance,
}

impl Calibration {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// `(value - predicted(order)) · norm` per successful sample.
pub fn residual_after(
    curve: &MagnitudeCurve,
    prediction: &ExpansionPrediction,
    order: usize,
) -> Result<Vec<(f64, f64)>> {
    curve
        .successful()
        .map(|s| {
            Ok((
                s.r,
                (s.value - predicted_magnitude(prediction, s.r, order)?) * prediction.norm,
            ))
        })
        .collect()
}

/// Calibrates `λ3` on the unit 3-ball.
///
/// Ball magnitudes are estimated on the grid, `c0..c2` are held at their
/// geometric values, the remaining constant is fitted and divided by the
/// Willmore energy of the sphere. The uncertainty combines a bootstrap over
/// the grid with the estimator's systematic error.
pub fn calibrate_lambda3(opts: &CalibrationOptions) -> Result<Calibration> {
    if opts.r_grid.len() < 6 {
        return Err(Error::InvalidInput(format!(
            "calibration needs at least 6 scales, got {}",
            opts.r_grid.len()
        )));
    }
    if opts.bootstrap_samples < 10 {
        return Err(Error::InvalidInput("bootstrap needs at least 10 resamples".into()));
    }
    crate::metric::check_grid(&opts.r_grid)?;
    let domain = DomainSpec::ball(1.0);
    let g = functionals_quadrature(&domain, DEFAULT_QUAD_ORDER)?;
    let prediction = predict_coefficients(&g, 3, None)?;
    let est = Estimator::new(&domain, opts.n_max, Strategy::FarthestPoint, opts.seed)?;

    let mut points = Vec::with_capacity(opts.r_grid.len());
    for &r in &opts.r_grid {
        let rep = est.estimate(r, opts.tol)?;
        let (value, systematic) = match opts.estimator {
            CalibrationEstimator::LowerBound => (rep.final_value, 0.0),
            CalibrationEstimator::Extrapolated => match (rep.extrapolated, rep.extrapolation_spread) {
                // floor the spread at a tenth of the extrapolation step
                (Some(x), Some(s)) => (x, s.max((x - rep.final_value).abs() * 0.1)),
                _ => {
                    return Err(Error::CalibrationUnstable(format!(
                        "no extrapolation available at R = {r}; raise N_max"
                    )))
                }
            },
        };
        let residual = (value - predicted_magnitude(&prediction, r, 2)?) * prediction.norm;
        points.push(CalibrationPoint {
            r,
            lower_bound: rep.final_value,
            value,
            systematic,
            n_points: rep.estimates.last().unwrap().0,
            residual,
        });
    }

    let fixed = BTreeMap::from([(3, prediction.c[0]), (2, prediction.c[1]), (1, prediction.c[2])]);
    let curve_of = |pts: &[&CalibrationPoint]| MagnitudeCurve {
        samples: pts
            .iter()
            .map(|p| MagnitudeSample {
                r: p.r,
                value: p.value,
                n_points: p.n_points,
                condition_estimate: f64::NAN,
                failure: None,
            })
            .collect(),
    };
    let all: Vec<&CalibrationPoint> = points.iter().collect();
    let c3 = fit_expansion(&curve_of(&all), 3, &fixed)?.coefficients[&0];

    // bootstrap over scales; resamples that collapse the R spread are redrawn
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_b007);
    let mut boot = Vec::with_capacity(opts.bootstrap_samples);
    for _ in 0..100 * opts.bootstrap_samples {
        if boot.len() == opts.bootstrap_samples {
            break;
        }
        let mut pick: Vec<&CalibrationPoint> = (0..points.len())
            .map(|_| &points[rng.random_range(0..points.len())])
            .collect();
        pick.sort_by(|a, b| a.r.total_cmp(&b.r));
        if let Ok(fit) = fit_expansion(&curve_of(&pick), 3, &fixed) {
            boot.push(fit.coefficients[&0]);
        }
    }
    let mean = boot.iter().sum::<f64>() / boot.len() as f64;
    let statistical =
        (boot.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (boot.len() - 1) as f64).sqrt();
    // estimator errors share a sign across scales: treat them as correlated
    let systematic = points.iter().map(|p| p.systematic).sum::<f64>() / points.len() as f64
        * prediction.norm;
    let c3_err = statistical.hypot(systematic);

    let lambda3 = c3 / g.willmore;
    let uncertainty = c3_err / g.willmore;
    if !(uncertainty <= 0.5 * lambda3.abs()) {
        return Err(Error::CalibrationUnstable(format!(
            "lambda3 = {lambda3:.4} ± {uncertainty:.4} (more than 50% relative)"
        )));
    }
    if !(lambda3.abs() > 3.0 * uncertainty) {
        return Err(Error::CalibrationUnstable(format!(
            "lambda3 = {lambda3:.4} ± {uncertainty:.4} is not distinct from 0 at 3 sigma"
        )));
    }
    Ok(Calibration {
        lambda3,
        uncertainty,
        provenance: Provenance {
            domain,
            options: opts.clone(),
            c3,
            c3_statistical: statistical,
            c3_systematic: systematic,
            willmore: g.willmore,
            points,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}
