use approx::assert_relative_eq;
use ebg_core::geodesic::{
    expansion_chain, liouville_check, ratio_monotonicity, solve_operator_jacobi,
    solve_operator_jacobi_matrix, total_area, CurvatureOperator,
};
use ebg_core::model_spaces::{exact_ball_volume, ProductSpace};
use ebg_core::sn::sn;
use ebg_core::sphere::SphereQuadrature;
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::f64::consts::PI;

fn spaces() -> Vec<ProductSpace> {
    [
        vec![(2, -1.0), (2, 0.0)],
        vec![(3, -1.0), (2, 0.0)],
        vec![(2, 1.0), (2, -1.0)],
        vec![(3, -0.5), (2, 2.0), (1, 0.0)],
    ]
    .iter()
    .map(|p| ProductSpace::from_pairs(p).unwrap())
    .collect()
}

/// Random orthogonal matrix from the QR factorisation of a Gaussian-ish matrix.
fn rotation(n: usize, entries: &[f64]) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |i, j| {
        entries[(i * n + j) % entries.len()] + if i == j { 0.3 } else { 0.0 }
    });
    m.qr().q()
}

fn weights(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotated_matrix_ode_matches_product_of_sn(
        space_ix in 0usize..4,
        raw in prop::collection::vec(0.01f64..1.0, 3),
        entries in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let space = &spaces()[space_ix];
        let w = weights(&raw[..space.factors().len()]);
        let op = CurvatureOperator::for_direction(space, &w).unwrap();
        let q = rotation(op.diag().len(), &entries);
        let r = &q * op.matrix() * q.transpose();
        let traj = solve_operator_jacobi_matrix(&r, 3.0, 1e-3).unwrap();
        for s in traj.states.iter().skip(1) {
            let expect = op.det_closed_form(s.t);
            prop_assert!((s.det_j - expect).abs() <= 1e-8 * expect.abs(), "t={} {} vs {}", s.t, s.det_j, expect);
        }
        if let Some(tc) = traj.conjugate_time {
            let first = op.diag().iter().filter(|k| **k > 0.0).map(|k| PI / k.sqrt()).fold(f64::INFINITY, f64::min);
            prop_assert!((tc - first).abs() < 1e-8);
        }
        for e in expansion_chain(&traj) {
            prop_assert!(e.kappa_eff <= e.ricci_ceiling + 1e-9);
            prop_assert!(e.cauchy_schwarz_gap >= -1e-9);
        }
    }
}

#[test]
fn expansion_matches_log_det_differences() {
    let space = ProductSpace::from_pairs(&[(2, -1.0), (2, 0.0)]).unwrap();
    let op = CurvatureOperator::for_direction(&space, &[0.4, 0.6]).unwrap();
    let traj = solve_operator_jacobi(&op, 3.0, 1e-3).unwrap();
    let h = 1e-4;
    let log_det = |t: f64| op.diag().iter().map(|&k| sn(k, t).ln()).sum::<f64>();
    let mut strict = false;
    for e in expansion_chain(&traj).iter().skip(99).step_by(100) {
        let fd = (log_det(e.t + h) - log_det(e.t - h)) / (2.0 * h) / 3.0;
        assert_relative_eq!(e.u, fd, max_relative = 1e-6);
        let fd2 = (log_det(e.t + h) - 2.0 * log_det(e.t) + log_det(e.t - h)) / (h * h) / 3.0;
        // u^2 and u' nearly cancel at small t, so the tolerance scales with u^2.
        assert_relative_eq!(
            e.kappa_eff,
            fd2 + fd * fd,
            epsilon = 1e-6 * (1.0 + e.u * e.u)
        );
        strict |= e.kappa_eff < e.ricci_ceiling - 1e-4;
    }
    assert!(
        strict,
        "distinct sectional eigenvalues should make the Riccati bound strict"
    );
}

#[test]
fn isotropic_expansion_is_tight() {
    let op = CurvatureOperator::isotropic(4, -0.7).unwrap();
    let traj = solve_operator_jacobi(&op, 2.0, 1e-3).unwrap();
    for e in expansion_chain(&traj) {
        assert_relative_eq!(e.kappa_eff, 0.7, epsilon = 1e-9);
        assert!(e.cauchy_schwarz_gap.abs() < 1e-9);
    }
}

#[test]
fn total_area_is_derivative_of_volume() {
    let quad = SphereQuadrature::exact(64);
    let h = 1e-4;
    for space in spaces() {
        for t in [0.3, 1.0, 1.5, 2.0] {
            let fd = (exact_ball_volume(&space, t + h).unwrap()
                - exact_ball_volume(&space, t - h).unwrap())
                / (2.0 * h);
            let ta = total_area(&space, t, &quad).unwrap();
            assert_relative_eq!(ta, fd, max_relative = 1e-6);
        }
    }
    let h2r2 = &spaces()[0];
    for t in [0.5f64, 2.0, 6.0] {
        let closed = 4.0 * PI * PI * t * (t.cosh() - 1.0);
        assert_relative_eq!(
            total_area(h2r2, t, &quad).unwrap(),
            closed,
            max_relative = 1e-10
        );
    }
}

#[test]
fn ratio_statements_hold() {
    let quad = SphereQuadrature::exact(48);
    let grid: Vec<f64> = (1..=50).map(|i| 0.1 * i as f64).collect();
    let reports = ratio_monotonicity(&spaces()[0], -1.0 / 3.0, &grid, &quad).unwrap();
    assert_eq!(reports.len(), 4);
    for r in &reports {
        assert!(r.passed(), "{r:?}");
    }

    let sphere = ProductSpace::from_pairs(&[(3, 1.0)]).unwrap();
    let grid: Vec<f64> = (1..=30).map(|i| 0.1 * i as f64).collect();
    for r in ratio_monotonicity(&sphere, 1.0, &grid, &quad).unwrap() {
        assert!(r.min_margin.unwrap().abs() < 1e-9, "{r:?}");
    }

    let skipped = ratio_monotonicity(&spaces()[0], 0.0, &grid, &quad).unwrap();
    assert_eq!(skipped[0].pass, None);
    assert!(skipped[2].passed());
}

#[test]
fn ricci_distribution_is_flow_invariant() {
    for space in spaces() {
        let report = liouville_check(&space, 400, 2.0, 20, 11).unwrap();
        assert_eq!(report.initial, report.flowed);
        assert!(report.max_drift < 1e-9, "{}", report.max_drift);
    }
}
