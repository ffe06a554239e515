use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::unit_ball_volume;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};

pub const DEFAULT_T_GRID: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

/// Target samples per stratum; strata per axis are capped at 64.
const SAMPLES_PER_STRATUM: usize = 16;

fn strata_per_axis(n_mc: usize) -> usize {
    ((n_mc / SAMPLES_PER_STRATUM) as f64).cbrt().floor().clamp(1.0, 64.0) as usize
}

/// Steiner-polynomial fit `vol(X + tB) = Σ_k ω_{3-k} V_k t^{3-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicVolumes {
    /// `[V0, V1, V2, V3]`.
    pub v: [f64; 4],
    /// Standard errors of the fitted coefficients, propagated from the
    /// Monte Carlo volume errors.
    pub std_err: [f64; 4],
    /// `|fit - data| / |data|` over the grid.
    pub relative_residual: f64,
    pub t_grid: Vec<f64>,
    pub parallel_volumes: Vec<f64>,
    pub parallel_volume_std_err: Vec<f64>,
}

/// Euclidean distance from `p` to an axis-aligned ellipsoid with semi-axes
/// `e`; zero inside.
fn distance_to_ellipsoid(p: [f64; 3], e: [f64; 3]) -> f64 {
    let g: f64 = (0..3).map(|i| (p[i] / e[i]).powi(2)).sum();
    if g <= 1.0 {
        return 0.0;
    }
    // closest point x_i = e_i² p_i / (e_i² + s), with s >= 0 the root of
    // f(s) = Σ (e_i p_i / (e_i² + s))² - 1, decreasing and convex in s
    let f = |s: f64| -> (f64, f64) {
        let mut v = -1.0;
        let mut d = 0.0;
        for i in 0..3 {
            let q = e[i] * p[i] / (e[i] * e[i] + s);
            v += q * q;
            d -= 2.0 * q * q / (e[i] * e[i] + s);
        }
        (v, d)
    };
    let mut s = 0.0;
    // Newton from the left converges monotonically for a convex decreasing f
    for _ in 0..100 {
        let (v, d) = f(s);
        let step = v / d;
        s -= step;
        if step.abs() <= 1e-15 * (1.0 + s.abs()) {
            break;
        }
    }
    let mut d2 = 0.0;
    for i in 0..3 {
        let x = e[i] * e[i] * p[i] / (e[i] * e[i] + s);
        d2 += (p[i] - x).powi(2);
    }
    d2.sqrt()
}

/// Stratified Monte Carlo estimate of `vol(X + tB)` with its standard error.
fn parallel_volume(e: [f64; 3], t: f64, n_mc: usize, seed: u64, t_index: u64) -> (f64, f64) {
    let half = [e[0] + t, e[1] + t, e[2] + t];
    let strata = strata_per_axis(n_mc);
    let cells = strata * strata * strata;
    let per_cell = n_mc.div_ceil(cells).max(2);
    let cell_vol = 8.0 * half[0] * half[1] * half[2] / cells as f64;
    let (mean, var) = (0..cells)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((t_index << 32) | c as u64);
            let idx = [c / (strata * strata), (c / strata) % strata, c % strata];
            let mut hits = 0usize;
            for _ in 0..per_cell {
                let mut p = [0.0; 3];
                for k in 0..3 {
                    let u = (idx[k] as f64 + rng.random::<f64>()) / strata as f64;
                    p[k] = half[k] * (2.0 * u - 1.0);
                }
                if distance_to_ellipsoid(p, e) <= t {
                    hits += 1;
                }
            }
            let frac = hits as f64 / per_cell as f64;
            let var = frac * (1.0 - frac) / (per_cell - 1) as f64;
            (cell_vol * frac, cell_vol * cell_vol * var)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    (mean, var.sqrt())
}

/// Intrinsic volumes of a convex domain from Monte Carlo parallel volumes.
///
/// `n_mc` samples are drawn per grid value, stratified over a cubic grid of
/// the bounding box with about 16 samples per cell; each stratum has its own counter-based stream, so the
/// result does not depend on the thread count.
pub fn intrinsic_volumes(
    spec: &DomainSpec,
    t_grid: &[f64],
    n_mc: usize,
    seed: u64,
) -> Result<IntrinsicVolumes> {
    spec.validate()?;
    let e = match spec {
        DomainSpec::Ball { .. } | DomainSpec::Ellipsoid { .. } => spec.semi_axes().unwrap(),
        DomainSpec::SolidTorus { .. } => return Err(Error::NonConvexSpec(spec.name().into())),
        _ => {
            return Err(Error::UnsupportedDomain(format!(
                "intrinsic volumes of {}",
                spec.name()
            )))
        }
    };
    let mut distinct = t_grid.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 || distinct.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput(
            "t_grid needs at least 4 distinct positive values".into(),
        ));
    }
    if n_mc < 2 {
        return Err(Error::InvalidInput("N_mc must be at least 2".into()));
    }
    let (vols, errs): (Vec<f64>, Vec<f64>) = t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| parallel_volume(e, t, n_mc, seed, i as u64))
        .unzip();

    // columns: V0 t³ ω3, V1 t² ω2, V2 t ω1, V3
    let m = t_grid.len();
    let basis = |t: f64, k: usize| unit_ball_volume(3 - k as u32) * t.powi(3 - k as i32);
    let a = DMatrix::from_fn(m, 4, |r, k| basis(t_grid[r], k) / errs[r].max(1e-300));
    let b = DVector::from_iterator(m, (0..m).map(|r| vols[r] / errs[r].max(1e-300)));
    let svd = a.clone().svd(true, true);
    let sol = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    // covariance (AᵀA)⁻¹ for the whitened system
    let cov = (a.transpose() * &a)
        .try_inverse()
        .ok_or(Error::RankDeficient(0.0))?;
    let fitted: Vec<f64> = (0..m)
        .map(|r| (0..4).map(|k| basis(t_grid[r], k) * sol[k]).sum())
        .collect();
    let num: f64 = fitted.iter().zip(&vols).map(|(f, v)| (f - v).powi(2)).sum();
    let den: f64 = vols.iter().map(|v| v * v).sum();
    Ok(IntrinsicVolumes {
        v: [sol[0], sol[1], sol[2], sol[3]],
        std_err: [0, 1, 2, 3].map(|k| cov[(k, k)].sqrt()),
        relative_residual: (num / den).sqrt(),
        t_grid: t_grid.to_vec(),
        parallel_volumes: vols,
        parallel_volume_std_err: errs,
    })
}
