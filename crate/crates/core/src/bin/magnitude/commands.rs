use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use magnitude_core::asymptotics::{
    calibrate_lambda3, falsification_experiment, Calibration, CalibrationOptions, ExperimentOptions,
};
use magnitude_core::domain::DomainSpec;
use magnitude_core::geometry::{
    functionals_mesh, functionals_quadrature, intrinsic_volumes, mesh_domain, SurfaceMesh, DEFAULT_T_GRID,
};
use magnitude_core::manifest::RunManifest;
use magnitude_core::metric::{magnitude_curve, FiniteMetricSpace};
use magnitude_core::sampler::{estimate_curve, Strategy};
use magnitude_core::{Error, Result};
use serde_json::json;

use super::{
    parse_grid, CalibrateArgs, CalibrationArgs, FalsifyArgs, GeometryArgs, GeometryMode, MagnitudeArgs,
    StrategyArg,
};

/// Runs `body` against the output file or standard output; a file output
/// also gets a manifest sidecar.
pub(crate) fn emit(
    out: Option<&Path>,
    manifest: RunManifest,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            body(&mut w)?;
            w.flush()?;
            manifest.finish(path)?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

pub(crate) fn write_json(w: &mut dyn Write, v: &impl serde::Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, v)?;
    writeln!(w)?;
    Ok(())
}

fn finite_space(a: &MagnitudeArgs) -> Result<Option<FiniteMetricSpace>> {
    if let Some(p) = &a.points {
        return FiniteMetricSpace::read_points_file(p).map(Some);
    }
    if let Some(p) = &a.distances {
        return FiniteMetricSpace::read_distance_file(p).map(Some);
    }
    Ok(None)
}

pub(crate) fn magnitude(a: MagnitudeArgs) -> Result<()> {
    let grid = match (a.r, &a.r_grid) {
        (Some(r), _) => vec![r],
        (None, Some(g)) => parse_grid(g)?,
        (None, None) => return Err(Error::InvalidInput("give --R or --R-grid".into())),
    };
    let strategy = match a.strategy {
        StrategyArg::Grid => Strategy::Grid,
        StrategyArg::Fps => Strategy::FarthestPoint,
    };
    let mut manifest = RunManifest::new("magnitude", a.seed)
        .param("R_grid", &grid)
        .param("tol", a.tol)
        .param("N_max", a.n_max)
        .param("strategy", strategy);

    let mut space = finite_space(&a)?;
    let mut spec = None;
    if space.is_none() {
        let s: DomainSpec = a
            .domain
            .as_deref()
            .ok_or_else(|| Error::InvalidInput("give --domain, --points or --distances".into()))?
            .parse()?;
        manifest = manifest.param("domain", &s);
        if matches!(s, DomainSpec::PointCloud { .. }) {
            space = Some(s.load_point_cloud()?);
        } else {
            spec = Some(s);
        }
    }
    if let Some(p) = a.points.as_ref().or(a.distances.as_ref()) {
        manifest = manifest.param("input", p);
    }

    let (curve, reports) = match (space, spec) {
        (Some(space), _) => (magnitude_curve(&space, &grid)?, None),
        (None, Some(spec)) => {
            let est = estimate_curve(&spec, &grid, a.tol, a.n_max, strategy, a.seed)?;
            (est.curve, Some(est.reports))
        }
        (None, None) => unreachable!(),
    };

    emit(a.out.as_deref(), manifest, |w| curve.write_csv(w))?;
    if let (Some(path), Some(reports)) = (&a.report, &reports) {
        std::fs::write(path, serde_json::to_string_pretty(reports)? + "\n")?;
    }
    if let Some(reports) = &reports {
        for rep in reports.iter().flatten() {
            eprintln!(
                "R={} N={} value={:.10} delta={:.3e} status={:?}",
                rep.r,
                rep.estimates.last().map_or(0, |e| e.0),
                rep.final_value,
                rep.delta_last,
                rep.status
            );
        }
    }
    let failed: Vec<_> = curve.samples.iter().filter(|s| !s.is_ok()).collect();
    if let Some(s) = failed.first() {
        // the CSV is already written
        return Err(Error::CurveIncomplete {
            failed: failed.len(),
            total: curve.samples.len(),
            first: format!("R={}: {}", s.r, s.failure.as_deref().unwrap_or("")),
        });
    }
    Ok(())
}

pub(crate) fn geometry(a: GeometryArgs) -> Result<()> {
    let spec: DomainSpec = a.domain.parse()?;
    let mut manifest = RunManifest::new("geometry", a.seed)
        .param("domain", &spec)
        .param("mode", format!("{:?}", a.mode).to_lowercase());
    let functionals = if a.mode == GeometryMode::Mesh || a.mesh.is_some() {
        let mesh = match &a.mesh {
            Some(p) => SurfaceMesh::read_off_file(p)?,
            None => mesh_domain(&spec, a.refinement)?,
        };
        manifest = manifest.param("refinement", a.refinement);
        if let Some(p) = &a.mesh_out {
            mesh.write_off(BufWriter::new(File::create(p)?))?;
        }
        functionals_mesh(&mesh)?
    } else {
        manifest = manifest.param("quad_order", a.quad_order);
        functionals_quadrature(&spec, a.quad_order)?
    };
    let mut doc = json!({ "domain": spec, "functionals": functionals });
    if let Some(n_mc) = a.n_mc {
        manifest = manifest.param("N_mc", n_mc);
        doc["intrinsic_volumes"] = serde_json::to_value(intrinsic_volumes(&spec, &DEFAULT_T_GRID, n_mc, a.seed)?)?;
    }
    emit(a.out.as_deref(), manifest, |w| write_json(w, &doc))
}

fn calibration_options(c: &CalibrationArgs) -> Result<CalibrationOptions> {
    Ok(CalibrationOptions {
        r_grid: parse_grid(&c.r_grid)?,
        tol: c.tol,
        n_max: c.n_max,
        seed: c.seed,
        estimator: c.estimator.parse()?,
        bootstrap_samples: c.bootstrap,
    })
}

pub(crate) fn calibrate(a: CalibrateArgs) -> Result<()> {
    let opts = calibration_options(&a.cal)?;
    let cal = calibrate_lambda3(&opts)?;
    cal.save(&a.out)?;
    RunManifest::new("calibrate", opts.seed).param("options", &opts).finish(&a.out)?;
    eprintln!("lambda3 = {:.6} ± {:.6}", cal.lambda3, cal.uncertainty);
    Ok(())
}

pub(crate) fn falsify(a: FalsifyArgs) -> Result<()> {
    let cal = match (&a.calibration, a.calibrate) {
        (Some(p), _) if p.exists() => Calibration::load(p)?,
        (None, true) => {
            let opts = calibration_options(&CalibrationArgs {
                r_grid: a.cal_r_grid.clone(),
                tol: a.tol,
                n_max: 4096,
                seed: a.seed,
                estimator: "extrapolated".into(),
                bootstrap: 1000,
            })?;
            calibrate_lambda3(&opts)?
        }
        _ => return Err(Error::MissingLambda),
    };
    let mut opts = ExperimentOptions::new(cal.lambda3);
    opts.a_grid = parse_grid(&a.a_grid)?;
    opts.r_grid = parse_grid(&a.r_grid)?;
    opts.budget = a.budget;
    opts.seed = a.seed;
    opts.tol = a.tol;
    opts.n_mc = a.n_mc;
    let table = falsification_experiment(&opts)?;
    let manifest = RunManifest::new("falsify", a.seed)
        .param("options", &opts)
        .param("lambda3_uncertainty", cal.uncertainty);
    emit(a.out.as_deref(), manifest, |w| table.write_csv(w))?;
    eprintln!("{}", table.summary());
    Ok(())
}
