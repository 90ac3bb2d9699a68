//! The five subcommands.

use std::path::Path;

use anyhow::Result;
use ebg_core::geodesic::{expansion_chain, solve_operator_jacobi, CurvatureOperator};
use ebg_core::invariants::{
    bound_series, lambda_min, RiemannInvariants, SeriesKind, SmallBallSeries,
};
use ebg_core::registry::volume_model;
use ebg_core::report::CheckReport;
use serde::Serialize;

use crate::checks::{
    beam_fit, jacobi_reports, monotonicity_reports, run_checks, BeamFit, BoundOrdering, Check,
};
use crate::output::{ensure_dir, write_csv, write_json};
use crate::scenario::Scenario;

fn report(out: &Path, reports: &[CheckReport]) -> Result<()> {
    write_json(&out.join("report.json"), &reports)
}

/// One CSV per space with the selected volume columns and their arcsinh
/// rescalings; ordering and derivative checks go to `report.json`.
pub fn bounds(sc: &Scenario, out: &Path) -> Result<Vec<CheckReport>> {
    ensure_dir(out)?;
    let times = sc.t_grid.times();
    let mut reports = BoundOrdering.run(sc);
    for (name, space) in &sc.spaces {
        let mut header = vec!["t".to_string()];
        let mut cols = vec![times.clone()];
        for c in &sc.columns {
            let v = volume_model(c)?.curve(space, &times, &sc.quadrature)?;
            header.push(c.clone());
            cols.push(v);
        }
        for (i, c) in sc.columns.iter().enumerate() {
            header.push(format!("asinh_{c}"));
            cols.push(cols[i + 1].iter().map(|v| v.asinh()).collect());
        }
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let cols: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        write_csv(&out.join(format!("{name}.csv")), &header, &cols)?;
        match monotonicity_reports(space, &times, &sc.quadrature) {
            Ok(r) => reports.extend(r.into_iter().map(|mut r| {
                r.check = format!("{}/{name}", r.check);
                r
            })),
            Err(e) => reports.push(crate::checks::errored(&format!("monotonicity/{name}"), e)),
        }
    }
    reports.sort_by(|a, b| a.check.cmp(&b.check));
    report(out, &reports)?;
    Ok(reports)
}

/// Operator Jacobi trajectories along the direction that spreads its mass
/// over the factors in proportion to their dimensions, plus the Jacobi suites.
pub fn jacobi_lab(sc: &Scenario, out: &Path) -> Result<Vec<CheckReport>> {
    ensure_dir(out)?;
    let g = &sc.geodesic;
    for (name, space) in &sc.spaces {
        let d = space.dim() as f64;
        let w: Vec<f64> = space.factors().iter().map(|f| f.dim as f64 / d).collect();
        let op = CurvatureOperator::for_direction(space, &w)?;
        let traj = solve_operator_jacobi(&op, g.horizon, g.step)?;
        let rows = expansion_chain(&traj);
        let col = |f: fn(&ebg_core::geodesic::ExpansionScalar) -> f64| {
            rows.iter().map(f).collect::<Vec<_>>()
        };
        let (t, det, u, kappa) = (
            col(|r| r.t),
            col(|r| r.det_j),
            col(|r| r.u),
            col(|r| r.kappa_eff),
        );
        write_csv(
            &out.join(format!("{name}.trajectory.csv")),
            &["t", "det_j", "u", "kappa_eff"],
            &[&t, &det, &u, &kappa],
        )?;
    }
    let mut reports = jacobi_reports(sc);
    reports.sort_by(|a, b| a.check.cmp(&b.check));
    report(out, &reports)?;
    Ok(reports)
}

#[derive(Serialize)]
struct SeriesEntry {
    space: String,
    #[serde(flatten)]
    series: SmallBallSeries,
}

/// Exact small-ball coefficients for every space with `d >= 3`.
pub fn series(sc: &Scenario, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let mut entries = Vec::new();
    for (name, space) in &sc.spaces {
        if space.dim() < 3 {
            continue;
        }
        let inv = RiemannInvariants::for_space(space)?;
        let lam = lambda_min(space)?;
        for kind in [
            SeriesKind::Volume,
            SeriesKind::Ebg,
            SeriesKind::Bg,
            SeriesKind::HOfR,
        ] {
            entries.push(SeriesEntry {
                space: name.clone(),
                series: bound_series(kind, &inv, Some(&lam))?,
            });
        }
    }
    write_json(&out.join("series.json"), &entries)
}

#[derive(Serialize)]
struct AsymptoticSummary {
    d: usize,
    slope: f64,
    expected_slope: f64,
    t_check: f64,
    quadrature_over_formula: f64,
}

/// eBG/BG for the single-negative-eigenvalue spectrum at large radii.
pub fn asymptotics(sc: &Scenario, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let BeamFit {
        ts,
        ebg,
        bg,
        slope,
        quotient,
    } = beam_fit(sc)?;
    let ratio: Vec<f64> = ebg.iter().zip(&bg).map(|(e, b)| e / b).collect();
    let predicted = ts
        .iter()
        .map(|&t| Ok(ebg_core::bounds::beam_asymptotics(sc.asymptotics.d, t)?.1))
        .collect::<Result<Vec<_>>>()?;
    write_csv(
        &out.join("asymptotics.csv"),
        &["t", "ebg", "bg", "ratio", "predicted_ratio"],
        &[&ts, &ebg, &bg, &ratio, &predicted],
    )?;
    let d = sc.asymptotics.d;
    write_json(
        &out.join("asymptotics.json"),
        &AsymptoticSummary {
            d,
            slope,
            expected_slope: -((d - 1) as f64) / 2.0,
            t_check: sc.asymptotics.t_check,
            quadrature_over_formula: quotient,
        },
    )
}

pub fn verify(sc: &Scenario, out: &Path, only: &[String]) -> Result<Vec<CheckReport>> {
    ensure_dir(out)?;
    let reports = run_checks(sc, only);
    report(out, &reports)?;
    Ok(reports)
}
