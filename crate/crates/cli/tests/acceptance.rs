//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use ebg_core::bounds::{
    beam_asymptotics, beam_spectrum, bg_bound, bg_curve, loglog_slope, BoundCurve, EnhancedKernel,
};
use ebg_core::geodesic::operator_consistency;
use ebg_core::invariants::{
    bound_series, fit_series, gray_series, lambda_min, q, relative_gap, RiemannInvariants,
    SeriesKind,
};
use ebg_core::jacobi::suites::{
    monotonicity_suite, shuffling_suite, sorting_suite, tot_suite, two_impulse_identity_suite,
    TrialConfig,
};
use ebg_core::model_spaces::{exact_ball_volume, model_ball_volume, ProductSpace, RicciSpectrum};
use ebg_core::monotonicity::{additive_gap_check, multiplicative_gap_check};
use ebg_core::registry::volume_model;
use ebg_core::report::curve_scale;
use ebg_core::sphere::SphereQuadrature;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn h2r2() -> ProductSpace {
    ProductSpace::from_pairs(&[(2, -1.0), (2, 0.0)]).unwrap()
}

fn h3r2() -> ProductSpace {
    ProductSpace::from_pairs(&[(3, -1.0), (2, 0.0)]).unwrap()
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn within(elapsed: Duration, limit: f64, detail: String) -> Outcome {
    let secs = elapsed.as_secs_f64();
    if secs < limit {
        Ok(format!("{detail}, {secs:.2}s"))
    } else {
        Err(format!("{detail}, took {secs:.2}s (limit {limit}s)"))
    }
}

fn closed_forms() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for t in uniform(0.1, 10.0, 100) {
        let h2r2_closed = 2.0 * PI * PI * (2.0 * t * t.sinh() - 2.0 * t.cosh() - t * t + 2.0);
        let h3r2_closed = PI * PI / 6.0
            * (-8.0 * t.powi(3) - 3.0 * (2.0 * t).sinh() + 6.0 * t * (2.0 * t).cosh());
        let a = exact_ball_volume(&h2r2(), t).map_err(|e| e.to_string())?;
        let b = exact_ball_volume(&h3r2(), t).map_err(|e| e.to_string())?;
        worst = worst
            .max(((a - h2r2_closed) / h2r2_closed).abs())
            .max(((b - h3r2_closed) / h3r2_closed).abs());
    }
    if worst > 1e-8 {
        return Err(format!("max relative error {worst:.2e}"));
    }
    within(
        start.elapsed(),
        5.0,
        format!("max relative error {worst:.2e}"),
    )
}

fn ordering() -> Outcome {
    let quad = SphereQuadrature::exact(64);
    let t = uniform(0.0, 10.0, 1001);
    let mut worst = f64::INFINITY;
    for space in [h2r2(), h3r2()] {
        let c = BoundCurve::for_space(&space, &t, &quad).map_err(|e| e.to_string())?;
        let vol = c.volume.as_ref().unwrap();
        let scale = curve_scale([c.bg.as_slice()]);
        for ((e, v), b) in c.ebg.iter().zip(vol).zip(&c.bg) {
            worst = worst.min((e - v) / scale).min((b - e) / scale);
        }
    }
    let mut bg_err: f64 = 0.0;
    for t in uniform(0.1, 10.0, 100) {
        let closed = 24.0
            * PI
            * PI
            * (2.0 + (t / 3f64.sqrt()).cosh())
            * (t / (2.0 * 3f64.sqrt())).sinh().powi(4);
        let bg = bg_bound(&h2r2().ricci_spectrum(), t).map_err(|e| e.to_string())?;
        bg_err = bg_err.max(((bg - closed) / closed).abs());
    }
    let detail = format!("min normalised margin {worst:.2e}, BG closed-form error {bg_err:.2e}");
    if worst >= -1e-9 && bg_err <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn series() -> Outcome {
    let start = Instant::now();
    let space = h2r2();
    let inv = RiemannInvariants::for_space(&space).map_err(|e| e.to_string())?;
    let lam = lambda_min(&space).map_err(|e| e.to_string())?;
    let vol = gray_series(&inv);
    let ebg = bound_series(SeriesKind::Ebg, &inv, None).map_err(|e| e.to_string())?;
    let bg = bound_series(SeriesKind::Bg, &inv, Some(&lam)).map_err(|e| e.to_string())?;
    let exact = [&vol.c2, &vol.c4, &ebg.c2, &ebg.c4, &bg.c2, &bg.c4]
        == [
            &q(1, 18),
            &q(1, 720),
            &q(1, 18),
            &q(13, 6480),
            &q(1, 9),
            &q(13, 2160),
        ];
    if !exact {
        return Err("exact rationals differ".into());
    }
    let ts: Vec<f64> = (0..=30).map(|i| 0.01 + 0.003 * i as f64).collect();
    let quad = SphereQuadrature::exact(64);
    let mut worst: f64 = 0.0;
    for (name, s) in [("volume", &vol), ("ebg", &ebg), ("bg", &bg)] {
        let curve = volume_model(name)
            .and_then(|m| m.curve(&space, &ts, &quad))
            .map_err(|e| e.to_string())?;
        let (c2, c4) = fit_series(4, &ts, &curve).map_err(|e| e.to_string())?;
        worst = worst
            .max(relative_gap(c2, &s.c2))
            .max(relative_gap(c4, &s.c4));
    }
    if worst > 1e-4 {
        return Err(format!("fitted coefficients off by {worst:.2e}"));
    }
    within(
        start.elapsed(),
        10.0,
        format!("exact rationals match, fit error {worst:.2e}"),
    )
}

fn crossing() -> Outcome {
    let space = h3r2();
    let gap =
        |t: f64| exact_ball_volume(&space, t).unwrap() - model_ball_volume(5, -0.3, t).unwrap();
    let (mut lo, mut hi) = (5.0, 9.0);
    if gap(lo) * gap(hi) >= 0.0 {
        return Err("no sign change on [5, 9]".into());
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if gap(lo) * gap(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let detail = format!("root {root:.6}");
    if (root - 7.3216).abs() <= 5e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn jacobi() -> Outcome {
    let start = Instant::now();
    let cfg = TrialConfig {
        trials: 1000,
        seed: 20240611,
        horizon: 3.0,
        step: 1e-3,
    };
    let tot_cfg = TrialConfig {
        horizon: 2.0,
        ..cfg
    };
    let powers = [1.0, 2.0, 3.0, 5.0];
    let mut reports = vec![
        monotonicity_suite(&cfg).map_err(|e| e.to_string())?,
        sorting_suite(&cfg, &powers).map_err(|e| e.to_string())?,
        tot_suite(&tot_cfg, &powers).map_err(|e| e.to_string())?,
        two_impulse_identity_suite(100, cfg.seed),
    ];
    reports.extend(shuffling_suite(&cfg, &powers).map_err(|e| e.to_string())?);
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed() || r.trials < 100)
        .map(|r| r.check.clone())
        .collect();
    let worst = reports
        .iter()
        .filter_map(|r| r.min_margin)
        .fold(f64::INFINITY, f64::min);
    if !bad.is_empty() {
        return Err(format!("failing: {}", bad.join(", ")));
    }
    within(
        start.elapsed(),
        60.0,
        format!("{} suites, min margin {worst:.2e}", reports.len()),
    )
}

fn operator() -> Outcome {
    let quad = SphereQuadrature::exact(64);
    let mut worst = f64::INFINITY;
    for pairs in [
        vec![(2, -1.0), (2, 0.0)],
        vec![(3, -1.0), (2, 0.0)],
        vec![(2, 1.0), (2, -1.0)],
        vec![(3, -0.5), (2, 2.0), (1, 0.0)],
    ] {
        let space = ProductSpace::from_pairs(&pairs).unwrap();
        for r in operator_consistency(&space, 16, 5, 3.0, 1e-3, &quad).map_err(|e| e.to_string())? {
            if !r.passed() {
                return Err(format!("{pairs:?}: {} margin {:?}", r.check, r.min_margin));
            }
            worst = worst.min(r.min_margin.unwrap());
        }
    }
    Ok(format!(
        "det J, kappa ceiling, Cauchy-Schwarz and total area hold, min margin {worst:.2e}"
    ))
}

fn monotonicity() -> Outcome {
    let t = uniform(0.0, 10.0, 1001);
    let quad = SphereQuadrature::exact(64);
    let mut curves = Vec::new();
    for space in [h2r2(), h3r2()] {
        curves.push(BoundCurve::for_space(&space, &t, &quad).map_err(|e| e.to_string())?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mc = SphereQuadrature::monte_carlo(500, 3);
    for _ in 0..50 {
        let spectrum =
            RicciSpectrum::new((0..4).map(|_| (rng.random_range(-3.0..1.5), 1)).collect()).unwrap();
        curves.push(BoundCurve::for_spectrum(&spectrum, &t, &mc).map_err(|e| e.to_string())?);
    }
    let mut worst = f64::INFINITY;
    for c in &curves {
        let reports = additive_gap_check(c)
            .and_then(|a| Ok(a.into_iter().chain(multiplicative_gap_check(c)?)));
        for r in reports.map_err(|e| e.to_string())? {
            worst = worst.min(r.min_margin);
        }
    }
    let detail = format!(
        "{} curves, min normalised derivative {worst:.2e}",
        curves.len()
    );
    if worst >= -1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn asymptotics() -> Outcome {
    let spectrum = beam_spectrum(4).unwrap();
    let kernel = EnhancedKernel::new(&spectrum, &SphereQuadrature::exact(256)).unwrap();
    let ts = uniform(50.0, 200.0, 16);
    let ebg = kernel.curve(&ts).map_err(|e| e.to_string())?;
    let bg = bg_curve(&spectrum, &ts).map_err(|e| e.to_string())?;
    let ratio: Vec<f64> = ebg.iter().zip(&bg).map(|(e, b)| e / b).collect();
    let slope = loglog_slope(&ts, &ratio).map_err(|e| e.to_string())?;
    let at = kernel.curve(&[100.0]).unwrap()[0] / bg_curve(&spectrum, &[100.0]).unwrap()[0];
    let predicted = beam_asymptotics(4, 100.0).unwrap().1;
    let detail = format!(
        "slope {slope:.4}, quadrature/formula at t=100 {:.4}",
        at / predicted
    );
    if (slope + 1.5).abs() <= 0.05 && (at / predicted - 1.0).abs() <= 0.1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("ebg-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let scenario = dir.join("scenario.json");
    std::fs::write(
        &scenario,
        r#"{
            "spaces": [{"name": "h2xr2", "factors": [{"dim": 2, "curvature": -1.0}, {"dim": 2, "curvature": 0.0}]},
                       {"name": "s2xr2", "factors": [{"dim": 2, "curvature": 1.0}, {"dim": 2, "curvature": 0.0}]}],
            "t_grid": {"start": 0.0, "stop": 4.0, "points": 401},
            "quadrature": {"mode": "monte-carlo", "nodes": 4000},
            "jacobi": {"trials": 40, "step": 0.002},
            "geodesic": {"directions": 2, "liouville_samples": 50, "ratio_points": 20}
        }"#,
    )
    .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("run{run}"));
        let status = Command::new(env!("CARGO_BIN_EXE_ebg"))
            .args(["verify", "--scenario"])
            .arg(&scenario)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "42"])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("verify exited with {}", status.status));
        }
        outputs.push(std::fs::read(out.join("report.json")).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    if outputs[0] == outputs[1] {
        Ok(format!("{} bytes identical across runs", outputs[0].len()))
    } else {
        Err("report.json differs between runs".into())
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 closed-form volumes", closed_forms),
        ("2 bound ordering", ordering),
        ("3 series coefficients", series),
        ("4 scalar-model crossing", crossing),
        ("5 jacobi property suites", jacobi),
        ("6 operator consistency", operator),
        ("7 derivative monotonicity", monotonicity),
        ("8 beam asymptotics", asymptotics),
        ("9 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
