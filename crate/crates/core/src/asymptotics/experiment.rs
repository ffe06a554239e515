use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{fit_expansion, predict_coefficients};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::geometry::{functionals_quadrature, intrinsic_volumes, DEFAULT_QUAD_ORDER, DEFAULT_T_GRID};
use crate::metric::format_float;
use crate::sampler::{estimate_curve, Strategy};

/// Largest `max/min` ratio of `c3 / V0` still reported as constant.
pub const CONSTANT_RATIO_SPREAD: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub a_grid: Vec<f64>,
    #[serde(rename = "R_grid")]
    pub r_grid: Vec<f64>,
    /// Sample budget per magnitude estimate; 0 skips the fitted `c3` column.
    pub budget: usize,
    pub seed: u64,
    pub lambda3: f64,
    pub tol: f64,
    pub n_mc: usize,
    pub t_grid: Vec<f64>,
    pub quad_order: usize,
}

impl ExperimentOptions {
    pub fn new(lambda3: f64) -> Self {
        Self {
            a_grid: vec![1.0, 0.5, 0.25, 0.125],
            r_grid: vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0],
            budget: 0,
            seed: 0,
            lambda3,
            tol: 1e-9,
            n_mc: 1_000_000,
            t_grid: DEFAULT_T_GRID.to_vec(),
            quad_order: DEFAULT_QUAD_ORDER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub a: f64,
    pub willmore: f64,
    #[serde(rename = "V0")]
    pub v0: f64,
    #[serde(rename = "V0_err")]
    pub v0_err: f64,
    pub c3_pred: f64,
    pub c3_fitted: Option<f64>,
    pub c3_fitted_err: Option<f64>,
    pub ratio_c3_v0: f64,
    /// Why the fitted column is missing, when it was requested.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NonConstant,
    Constant,
    InsufficientGrid,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::NonConstant => "non-constant",
            Verdict::Constant => "constant",
            Verdict::InsufficientGrid => "insufficient grid",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
    /// `max / min` of `|c3 / V0|` over the rows.
    pub ratio_spread: f64,
    pub verdict: Verdict,
}

impl ExperimentTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["a", "willmore", "V0", "c3_pred", "c3_fitted", "c3_fitted_err", "ratio_c3_V0"])?;
        let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
        for r in &self.rows {
            out.write_record([
                format_float(r.a),
                format_float(r.willmore),
                format_float(r.v0),
                format_float(r.c3_pred),
                opt(r.c3_fitted),
                opt(r.c3_fitted_err),
                format_float(r.ratio_c3_v0),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// One-line summary of the ratio spread and verdict.
    pub fn summary(&self) -> String {
        let ratios: Vec<f64> = self.rows.iter().map(|r| r.ratio_c3_v0).collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        format!(
            "c3/V0 ranges over [{lo:.6}, {hi:.6}] across {} aspect ratios (max/min {:.4}): {}",
            self.rows.len(),
            self.ratio_spread,
            self.verdict
        )
    }
}

/// Tabulates `c3 = λ3·W(∂X_a)` against `V0(X_a)` over a family of ellipsoids.
///
/// Willmore energies come from quadrature, `V0` from the Steiner fit. With a
/// nonzero budget, `c3` is also fitted from sampled magnitude curves with
/// `c0..c2` held at their geometric values; failures there are recorded per
/// row and do not abort the table.
pub fn falsification_experiment(opts: &ExperimentOptions) -> Result<ExperimentTable> {
    if opts.a_grid.is_empty() {
        return Err(Error::InvalidInput("a_grid is empty".into()));
    }
    if let Some(a) = opts.a_grid.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(Error::InvalidInput(format!("aspect ratios must lie in (0, 1], got {a}")));
    }
    if !opts.lambda3.is_finite() {
        return Err(Error::MissingLambda);
    }
    let mut rows = Vec::with_capacity(opts.a_grid.len());
    for (i, &a) in opts.a_grid.iter().enumerate() {
        let spec = DomainSpec::ellipsoid(a);
        let g = functionals_quadrature(&spec, opts.quad_order)?;
        let seed = opts.seed.wrapping_add(i as u64);
        let iv = intrinsic_volumes(&spec, &opts.t_grid, opts.n_mc, seed)?;
        let p = predict_coefficients(&g, 3, Some(opts.lambda3))?;
        let c3_pred = p.c[3];
        let (mut c3_fitted, mut c3_fitted_err, mut failure) = (None, None, None);
        if opts.budget > 0 {
            let fitted = estimate_curve(
                &spec,
                &opts.r_grid,
                opts.tol,
                opts.budget,
                Strategy::FarthestPoint,
                seed,
            )
            .and_then(|ce| {
                let fixed = BTreeMap::from([(3, p.c[0]), (2, p.c[1]), (1, p.c[2])]);
                fit_expansion(&ce.curve, 3, &fixed)
            });
            match fitted {
                Ok(fit) => {
                    c3_fitted = Some(fit.coefficients[&0]);
                    c3_fitted_err = fit.std_errors.get(&0).copied();
                }
                Err(e) => failure = Some(e.to_string()),
            }
        }
        rows.push(ExperimentRow {
            a,
            willmore: g.willmore,
            v0: iv.v[0],
            v0_err: iv.std_err[0],
            c3_pred,
            c3_fitted,
            c3_fitted_err,
            ratio_c3_v0: c3_pred / iv.v[0],
            failure,
        });
    }
    let mags: Vec<f64> = rows.iter().map(|r| r.ratio_c3_v0.abs()).collect();
    let hi = mags.iter().cloned().fold(0.0, f64::max);
    let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio_spread = hi / lo;
    let verdict = if rows.len() < 2 {
        Verdict::InsufficientGrid
    } else if ratio_spread > CONSTANT_RATIO_SPREAD {
        Verdict::NonConstant
    } else {
        Verdict::Constant
    };
    Ok(ExperimentTable {
        rows,
        ratio_spread,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn quick(a_grid: Vec<f64>) -> ExperimentOptions {
        ExperimentOptions {
            a_grid,
            n_mc: 100_000,
            ..ExperimentOptions::new(2.0)
        }
    }

    #[test]
    fn ball_row_is_the_baseline() {
        let t = falsification_experiment(&quick(vec![1.0])).unwrap();
        assert_eq!(t.verdict, Verdict::InsufficientGrid);
        let row = &t.rows[0];
        assert!((row.willmore - 4.0 * PI).abs() < 1e-10);
        assert!((row.ratio_c3_v0 / (2.0 * 4.0 * PI) - 1.0).abs() < 0.05);
    }

    #[test]
    fn flattening_breaks_constancy() {
        let t = falsification_experiment(&quick(vec![1.0, 0.5, 0.25, 0.125])).unwrap();
        assert_eq!(t.verdict, Verdict::NonConstant);
        assert!(t.ratio_spread > 2.0);
        for w in t.rows.windows(2) {
            assert!(w[1].willmore > w[0].willmore);
            assert!(w[1].ratio_c3_v0 > w[0].ratio_c3_v0);
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("a,willmore,V0,c3_pred,c3_fitted,c3_fitted_err,ratio_c3_V0\n"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn rejects_aspect_outside_unit_interval() {
        assert!(falsification_experiment(&quick(vec![1.5])).is_err());
    }
}
