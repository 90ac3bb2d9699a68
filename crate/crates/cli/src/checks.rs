//! Named verification checks run by `verify`. Each check turns a scenario
//! into one or more reports; the runner merges them sorted by name.

use ebg_core::bounds::{
    beam_asymptotics, beam_spectrum, bg_curve, loglog_slope, BoundCurve, EnhancedKernel,
};
use ebg_core::geodesic::{liouville_check, operator_consistency, ratio_monotonicity};
use ebg_core::invariants::{
    bound_series, fit_series, gray_series, lambda_min, q, relative_gap, series_gap, GapPair,
    RiemannInvariants, SeriesKind,
};
use ebg_core::jacobi::random::ScheduleSampler;
use ebg_core::jacobi::suites::{
    late_start_suite, monotonicity_suite, product_average_suite, shuffling_suite, sorting_suite,
    tot_suite, two_impulse_identity_suite, TrialConfig,
};
use ebg_core::jacobi::verify_monotonicity;
use ebg_core::model_spaces::ProductSpace;
use ebg_core::monotonicity::{
    additive_gap_check, area_level_check, empirical_ratio_probe, multiplicative_gap_check,
};
use ebg_core::registry::volume_model;
use ebg_core::report::{curve_scale, CheckReport};
use ebg_core::sphere::{QuadratureMode, SphereQuadrature, MAX_EXACT_BLOCKS};
use ebg_core::Result;

use crate::scenario::Scenario;

pub trait Check {
    fn name(&self) -> &'static str;
    fn run(&self, scenario: &Scenario) -> Vec<CheckReport>;
}

/// A failed report standing in for a check that could not run.
pub fn errored(name: &str, err: impl std::fmt::Display) -> CheckReport {
    CheckReport {
        check: name.to_string(),
        trials: 0,
        min_margin: None,
        pass: Some(false),
        diagnostics: vec![err.to_string()],
    }
}

fn per_space<F>(scenario: &Scenario, name: &str, f: F) -> Vec<CheckReport>
where
    F: Fn(&ProductSpace) -> Result<Vec<CheckReport>>,
{
    let mut out = Vec::new();
    for (label, space) in &scenario.spaces {
        match f(space) {
            Ok(reports) => out.extend(reports.into_iter().map(|mut r| {
                r.check = format!("{}/{label}", r.check);
                r
            })),
            Err(e) => out.push(errored(&format!("{name}/{label}"), e)),
        }
    }
    out
}

fn flatten(name: &str, r: Result<Vec<CheckReport>>) -> Vec<CheckReport> {
    r.unwrap_or_else(|e| vec![errored(name, e)])
}

pub struct BoundOrdering;

impl Check for BoundOrdering {
    fn name(&self) -> &'static str {
        "bounds.ordering"
    }

    fn run(&self, sc: &Scenario) -> Vec<CheckReport> {
        let times = sc.t_grid.times();
        per_space(sc, self.name(), |space| {
            let c = BoundCurve::for_space(space, &times, &sc.quadrature)?;
            let vol = c.volume.as_deref().unwrap_or_default();
            let scale = curve_scale([c.bg.as_slice(), c.ebg.as_slice(), vol]);
            let margin = (0..c.len())
                .map(|i| (c.ebg[i] - vol[i]).min(c.bg[i] - c.ebg[i]) / scale)
                .fold(f64::INFINITY, f64::min);
            Ok(vec![CheckReport::from_margin(self.name(), c.len(), margin)])
        })
    }
}

/// Derivative checks on the scenario grid, shared by `bounds` and `verify`.
pub fn monotonicity_reports(
    space: &ProductSpace,
    times: &[f64],
    quad: &SphereQuadrature,
) -> Result<Vec<CheckReport>> {
    let curve = BoundCurve::for_space(space, times, quad)?;
    let mut reports: Vec<CheckReport> = additive_gap_check(&curve)?
        .into_iter()
        .chain(multiplicative_gap_check(&curve)?)
        .map(|g| g.to_check())
        .collect();
    reports.push(area_level_check(&space.ricci_spectrum(), times, quad)?.to_check());
    reports.push(empirical_ratio_probe(&curve)?.to_check());
    Ok(reports)
}

pub struct Monotonicity;

impl Check for Monotonicity {
    fn name(&self) -> &'static str {
        "monotonicity"
    }

    fn run(&self, sc: &Scenario) -> Vec<CheckReport> {
        let times = sc.t_grid.times();
        per_space(sc, self.name(), |space| {
            monotonicity_reports(space, &times, &sc.quadrature)
        })
    }
}

/// Tolerance checks against exact results need a deterministic sphere rule;
/// a Monte Carlo scenario falls back to a 64-node exact rule for them.
pub fn exact_rule(sc: &Scenario) -> SphereQuadrature {
    match sc.quadrature.mode {
        QuadratureMode::ExactReduced => sc.quadrature,
        QuadratureMode::MonteCarlo => SphereQuadrature::exact(64),
    }
}

/// Radii used for fitting small-ball coefficients.
pub fn fit_radii() -> Vec<f64> {
    (0..=30).map(|i| 0.01 + 0.003 * i as f64).collect()
}

pub struct Series;

impl Series {
    fn for_space(space: &ProductSpace, quad: &SphereQuadrature) -> Result<Vec<CheckReport>> {
        let inv = RiemannInvariants::for_space(space)?;
        let lam = lambda_min(space)?;
        let vol = gray_series(&inv);
        let ebg = bound_series(SeriesKind::Ebg, &inv, None)?;
        let hr = bound_series(SeriesKind::HOfR, &inv, None)?;
        let exact = |ok: bool| if ok { 0.0 } else { -1.0 };
        let identities = series_gap(GapPair::EbgMinusVolume, &inv) == &ebg.c4 - &vol.c4
            && series_gap(GapPair::VolumeMinusHOfR, &inv) == &vol.c4 - &hr.c4;
        let gap = series_gap(GapPair::EbgMinusVolume, &inv);

        let mut out = vec![
            CheckReport::from_margin("series.gap-identities", 1, exact(identities)),
            CheckReport::from_margin("series.ebg-c2-exact", 1, exact(ebg.c2 == vol.c2)),
            CheckReport::from_margin(
                "series.ebg-volume-gap",
                1,
                ebg_core::invariants::q_to_f64(&gap),
            ),
        ];
        let blocks = space
            .ricci_spectrum()
            .eigenvalues()
            .len()
            .max(space.reduced_factors().len());
        if blocks > MAX_EXACT_BLOCKS {
            out.push(CheckReport::skipped(
                "series.fit",
                "precondition not met: needs a deterministic sphere rule",
            ));
            return Ok(out);
        }
        let ts = fit_radii();
        let mut worst: f64 = 0.0;
        for kind in [
            SeriesKind::Volume,
            SeriesKind::Ebg,
            SeriesKind::Bg,
            SeriesKind::HOfR,
        ] {
            let model = match kind {
                SeriesKind::Volume => "volume",
                SeriesKind::Ebg => "ebg",
                SeriesKind::Bg => "bg",
                SeriesKind::HOfR => "hr",
            };
            let curve = volume_model(model)?.curve(space, &ts, quad)?;
            let (c2, c4) = fit_series(space.dim(), &ts, &curve)?;
            let s = bound_series(kind, &inv, Some(&lam))?;
            worst = worst
                .max(relative_gap(c2, &s.c2))
                .max(relative_gap(c4, &s.c4));
        }
        out.push(CheckReport::from_margin("series.fit", 4, 1e-4 - worst));
        Ok(out)
    }
}

impl Check for Series {
    fn name(&self) -> &'static str {
        "series"
    }

    fn run(&self, sc: &Scenario) -> Vec<CheckReport> {
        let mut out = per_space(sc, self.name(), |space| {
            if space.dim() < 3 {
                return Ok(vec![CheckReport::skipped(
                    "series",
                    "precondition not met: d < 3",
                )]);
            }
            Self::for_space(space, &exact_rule(sc))
        });
        // Reference coefficients of the hyperbolic plane times the plane.
        let reference = (|| -> Result<bool> {
            let space = ProductSpace::from_pairs(&[(2, -1.0), (2, 0.0)])?;
            let inv = RiemannInvariants::for_space(&space)?;
            let lam = lambda_min(&space)?;
            let vol = gray_series(&inv);
            let ebg = bound_series(SeriesKind::Ebg, &inv, None)?;
            let bg = bound_series(SeriesKind::Bg, &inv, Some(&lam))?;
            Ok([vol.c2, vol.c4, ebg.c2, ebg.c4, bg.c2, bg.c4]
                == [
                    q(1, 18),
                    q(1, 720),
                    q(1, 18),
                    q(13, 6480),
                    q(1, 9),
                    q(13, 2160),
                ])
        })();
        out.push(match reference {
            Ok(ok) => CheckReport::from_margin("series.reference", 1, if ok { 0.0 } else { -1.0 }),
            Err(e) => errored("series.reference", e),
        });
        out
    }
}

pub struct JacobiSuites;

impl Check for JacobiSuites {
    fn name(&self) -> &'static str {
        "jacobi"
    }

    fn run(&self, sc: &Scenario) -> Vec<CheckReport> {
        jacobi_reports(sc)
    }
}

/// All randomized Jacobi suites for the scenario's settings.
pub fn jacobi_reports(sc: &Scenario) -> Vec<CheckReport> {
    let j = &sc.jacobi;
    let cfg = TrialConfig {
        trials: j.trials,
        seed: sc.seed,
        horizon: j.horizon,
        step: j.step,
    };
    let mut out = Vec::new();
    let one = |name: &str, r: Result<CheckReport>| r.unwrap_or_else(|e| errored(name, e));
    out.push(one("jacobi.monotonicity", monotonicity_suite(&cfg)));
    out.push(one("jacobi.late-start", late_start_suite(&cfg)));
    out.extend(flatten(
        "jacobi.shuffling",
        shuffling_suite(&cfg, &j.p_list),
    ));
    out.push(one("jacobi.sorting", sorting_suite(&cfg, &j.p_list)));
    out.push(one("jacobi.tot", tot_suite(&cfg, &j.p_list)));
    out.push(one("jacobi.product-average", product_average_suite(&cfg)));
    out.push(two_impulse_identity_suite(100, sc.seed));
    if j.inject_reversed {
        let (hi, lo) = ScheduleSampler::new(j.horizon)
            .ordered_pair(&mut ebg_core::jacobi::random::trial_rng(sc.seed, 0));
        let mut r = one(
            "jacobi.monotonicity.injected",
            verify_monotonicity(&lo, &hi, j.horizon, j.step),
        );
        r.check = "jacobi.monotonicity.injected".into();
        out.push(r);
    }
    out
}

pub struct Geodesic;

impl Check for Geodesic {
    fn name(&self) -> &'static str {
        "geodesic"
    }

    fn run(&self, sc: &Scenario) -> Vec<CheckReport> {
        let g = &sc.geodesic;
        per_space(sc, self.name(), |space| {
            let mut out = operator_consistency(
                space,
                g.directions,
                sc.seed,
                g.horizon,
                g.step,
                &exact_rule(sc),
            )?;
            let d = space.dim();
            let k_ref = space.ricci_spectrum().min() / (d - 1) as f64;
            let grid: Vec<f64> = (1..=g.ratio_points)
                .map(|i| g.horizon * i as f64 / g.ratio_points as f64)
                .collect();
            out.extend(
                ratio_monotonicity(space, k_ref, &grid, &sc.quadrature)?
                    .into_iter()
                    .map(|mut r| {
                        r.check = format!("geodesic.{}", r.check);
                        r
                    }),
            );
            let l = liouville_check(space, g.liouville_samples, g.horizon, 20, sc.seed)?;
            let margin = if l.initial == l.flowed {
                1e-8 - l.max_drift
            } else {
                -1.0
            };
            out.push(CheckReport::from_margin(
                "geodesic.liouville",
                g.liouville_samples,
                margin,
            ));
            Ok(out)
        })
    }
}

pub struct BeamFit {
    pub ts: Vec<f64>,
    pub ebg: Vec<f64>,
    pub bg: Vec<f64>,
    /// Slope of `log(eBG/BG)` against `log t`.
    pub slope: f64,
    /// Quadrature ratio over the predicted beam ratio at the check radius.
    pub quotient: f64,
}

pub fn beam_fit(sc: &Scenario) -> Result<BeamFit> {
    let a = &sc.asymptotics;
    let spectrum = beam_spectrum(a.d)?;
    let kernel = EnhancedKernel::new(&spectrum, &SphereQuadrature::exact(a.nodes))?;
    let ts: Vec<f64> = (0..a.points)
        .map(|i| a.t_min + (a.t_max - a.t_min) * i as f64 / (a.points - 1) as f64)
        .collect();
    let ebg = kernel.curve(&ts)?;
    let bg = bg_curve(&spectrum, &ts)?;
    let ratio: Vec<f64> = ebg.iter().zip(&bg).map(|(e, b)| e / b).collect();
    let slope = loglog_slope(&ts, &ratio)?;
    let at = kernel.curve(&[a.t_check])?[0] / bg_curve(&spectrum, &[a.t_check])?[0];
    let (_, predicted) = beam_asymptotics(a.d, a.t_check)?;
    Ok(BeamFit {
        ts,
        ebg,
        bg,
        slope,
        quotient: at / predicted,
    })
}

pub struct Asymptotics;

impl Check for Asymptotics {
    fn name(&self) -> &'static str {
        "asymptotics"
    }

    fn run(&self, sc: &Scenario) -> Vec<CheckReport> {
        match beam_fit(sc) {
            Ok(BeamFit {
                ts,
                slope,
                quotient,
                ..
            }) => {
                let target = -((sc.asymptotics.d - 1) as f64) / 2.0;
                vec![
                    CheckReport::exploratory(
                        "asymptotics.beam-slope",
                        ts.len(),
                        0.05 - (slope - target).abs(),
                    )
                    .with_diagnostic(format!("slope {slope:.6}, expected {target}")),
                    CheckReport::exploratory(
                        "asymptotics.beam-ratio",
                        1,
                        0.1 - (quotient - 1.0).abs(),
                    )
                    .with_diagnostic(format!("quadrature / formula = {quotient:.6}")),
                ]
            }
            Err(e) => vec![errored(self.name(), e)],
        }
    }
}

pub fn registry() -> Vec<Box<dyn Check>> {
    vec![
        Box::new(BoundOrdering),
        Box::new(Monotonicity),
        Box::new(Series),
        Box::new(JacobiSuites),
        Box::new(Geodesic),
        Box::new(Asymptotics),
    ]
}

/// Runs every registered check whose name starts with one of `only` (all
/// when empty) and returns the reports sorted by name.
pub fn run_checks(sc: &Scenario, only: &[String]) -> Vec<CheckReport> {
    let mut reports: Vec<CheckReport> = registry()
        .iter()
        .filter(|c| only.is_empty() || only.iter().any(|o| c.name().starts_with(o.as_str())))
        .flat_map(|c| c.run(sc))
        .collect();
    reports.sort_by(|a, b| a.check.cmp(&b.check));
    reports
}
