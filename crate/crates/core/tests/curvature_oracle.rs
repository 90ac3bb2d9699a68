use ebg_core::bounds::{bg_curve, EnhancedKernel};
use ebg_core::invariants::{
    bound_series, decompose, fit_series, gray_series, lambda_min, q, q_to_f64, relative_gap,
    series_gap, GapPair, RiemannInvariants, SeriesKind, Q,
};
use ebg_core::model_spaces::{exact_ball_volume, model_ball_volume, ProductSpace, RicciSpectrum};
use ebg_core::sphere::{RicciDistribution, SphereQuadrature};
use nalgebra::DMatrix;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

/// Product of conformal constant-curvature metrics `4|dx|^2 / (1 + k|x|^2)^2`.
struct ProductMetric {
    factors: Vec<(usize, f64)>,
}

impl ProductMetric {
    fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.0).sum()
    }

    fn g(&self, x: &[f64]) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.dim(), self.dim());
        let mut off = 0;
        for &(n, k) in &self.factors {
            let r2: f64 = x[off..off + n].iter().map(|v| v * v).sum();
            let c = if k == 0.0 {
                1.0
            } else {
                4.0 / (1.0 + k * r2).powi(2)
            };
            for i in off..off + n {
                g[(i, i)] = c;
            }
            off += n;
        }
        g
    }

    /// `Gamma[a][b][c] = Gamma^a_{bc}` from centred differences of the metric.
    fn christoffel(&self, x: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let n = self.dim();
        let h = 1e-5;
        let dg: Vec<DMatrix<f64>> = (0..n)
            .map(|c| {
                let (mut p, mut m) = (x.to_vec(), x.to_vec());
                p[c] += h;
                m[c] -= h;
                (self.g(&p) - self.g(&m)) / (2.0 * h)
            })
            .collect();
        let ginv = self.g(x).try_inverse().unwrap();
        let mut gamma = vec![vec![vec![0.0; n]; n]; n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    gamma[a][b][c] = (0..n)
                        .map(|e| {
                            0.5 * ginv[(a, e)] * (dg[b][(e, c)] + dg[c][(e, b)] - dg[e][(b, c)])
                        })
                        .sum();
                }
            }
        }
        gamma
    }

    /// `(R, Ric.Ric, Riem.Riem)` at `x`.
    fn invariants(&self, x: &[f64]) -> (f64, f64, f64) {
        let n = self.dim();
        let h = 1e-3;
        let gam = self.christoffel(x);
        let dgam: Vec<_> = (0..n)
            .map(|c| {
                let (mut p, mut m) = (x.to_vec(), x.to_vec());
                p[c] += h;
                m[c] -= h;
                (self.christoffel(&p), self.christoffel(&m))
            })
            .collect();
        let d = |c: usize, a: usize, b: usize, e: usize| {
            (dgam[c].0[a][b][e] - dgam[c].1[a][b][e]) / (2.0 * h)
        };
        // riem[a][b][c][e] = R^a_{bce}
        let mut riem = vec![vec![vec![vec![0.0; n]; n]; n]; n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for e in 0..n {
                        let mut v = d(c, a, e, b) - d(e, a, c, b);
                        #[allow(clippy::needless_range_loop)]
                        for f in 0..n {
                            v += gam[a][c][f] * gam[f][e][b] - gam[a][e][f] * gam[f][c][b];
                        }
                        riem[a][b][c][e] = v;
                    }
                }
            }
        }
        let g = self.g(x);
        let gi = g.clone().try_inverse().unwrap();
        let ric = DMatrix::from_fn(n, n, |b, e| (0..n).map(|a| riem[a][b][a][e]).sum());
        let scalar = (&gi * &ric).trace();
        let mixed = &gi * &ric;
        let ric2 = (&mixed * &mixed).trace();
        // Diagonal metric: raising an index divides by g_ii.
        let mut riem2 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for e in 0..n {
                        let lower = g[(a, a)] * riem[a][b][c][e];
                        riem2 += lower * lower / (g[(a, a)] * g[(b, b)] * g[(c, c)] * g[(e, e)]);
                    }
                }
            }
        }
        (scalar, ric2, riem2)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn finite_difference_curvature_matches_factor_sums() {
    let cases: Vec<Vec<(usize, f64)>> = vec![
        vec![(2, -1.0), (2, 0.0)],
        vec![(3, -1.0), (2, 0.0)],
        vec![(2, 1.0), (2, -1.0)],
        vec![(3, 0.5)],
        vec![(2, -2.0), (2, 0.5), (1, 0.0)],
    ];
    for factors in cases {
        let metric = ProductMetric {
            factors: factors.clone(),
        };
        let x: Vec<f64> = (0..metric.dim())
            .map(|i| 0.07 * (i as f64 + 1.0) - 0.15)
            .collect();
        let (r, ric2, riem2) = metric.invariants(&x);
        let exact = RiemannInvariants::for_factors(
            &factors
                .iter()
                .map(|&(n, k)| (n, Q::from_float(k).unwrap()))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(rel(r, q_to_f64(&exact.r)) < 1e-5, "{factors:?} R {r}");
        assert!(
            rel(ric2, q_to_f64(&exact.ric2)) < 1e-5,
            "{factors:?} ric2 {ric2}"
        );
        assert!(
            rel(riem2, q_to_f64(&exact.riem2)) < 1e-5,
            "{factors:?} riem2 {riem2}"
        );
    }
}

#[test]
fn hyperbolic_plane_times_plane_coefficients() {
    let space = ProductSpace::from_pairs(&[(2, -1.0), (2, 0.0)]).unwrap();
    let inv = RiemannInvariants::for_space(&space).unwrap();
    let lam = lambda_min(&space).unwrap();
    let vol = gray_series(&inv);
    let ebg = bound_series(SeriesKind::Ebg, &inv, None).unwrap();
    let bg = bound_series(SeriesKind::Bg, &inv, Some(&lam)).unwrap();
    assert_eq!((vol.c2.clone(), vol.c4.clone()), (q(1, 18), q(1, 720)));
    assert_eq!((ebg.c2.clone(), ebg.c4.clone()), (q(1, 18), q(13, 6480)));
    assert_eq!((bg.c2, bg.c4), (q(1, 9), q(13, 2160)));
    assert_eq!(series_gap(GapPair::EbgMinusVolume, &inv), &ebg.c4 - &vol.c4);
    assert!(bound_series(SeriesKind::Bg, &inv, None).is_err());
}

#[test]
fn two_sphere_leading_term() {
    // 2 pi (1 - cos t) = pi t^2 (1 - t^2/12 + t^4/360 - ...)
    let inv = RiemannInvariants {
        d: 2,
        r: q(2, 1),
        ric2: q(2, 1),
        riem2: q(4, 1),
        s2: q(4, 1),
        e2: Q::zero(),
        c2: Q::zero(),
        box_r: Q::zero(),
    };
    let s = gray_series(&inv);
    assert_eq!(s.c2, q(-1, 12));
    assert_eq!(s.c4, q(1, 360));
}

#[test]
fn scalar_model_gap_is_positive_for_h3_times_plane() {
    let space = ProductSpace::from_pairs(&[(3, -1.0), (2, 0.0)]).unwrap();
    let inv = RiemannInvariants::for_space(&space).unwrap();
    let gap = series_gap(GapPair::VolumeMinusHOfR, &inv);
    assert!(gap.is_positive());
    let hr = bound_series(SeriesKind::HOfR, &inv, None).unwrap();
    assert_eq!(gap, gray_series(&inv).c4 - hr.c4);
}

fn small_rational() -> impl Strategy<Value = Q> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| q(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gap_formulas_match_coefficient_differences(
        factors in prop::collection::vec((1usize..=4, small_rational()), 1..=4),
        box_r in small_rational(),
    ) {
        let d: usize = factors.iter().map(|f| f.0).sum();
        prop_assume!(d >= 3);
        let inv = RiemannInvariants::for_factors(&factors).unwrap();
        prop_assert!(!inv.s2.is_negative() && !inv.e2.is_negative() && !inv.c2.is_negative());
        prop_assert_eq!(&inv.s2 + &inv.e2 + &inv.c2, inv.riem2.clone());
        let vol = gray_series(&inv);
        let ebg = bound_series(SeriesKind::Ebg, &inv, None).unwrap();
        let hr = bound_series(SeriesKind::HOfR, &inv, None).unwrap();
        prop_assert_eq!(series_gap(GapPair::EbgMinusVolume, &inv), &ebg.c4 - &vol.c4);
        prop_assert_eq!(series_gap(GapPair::VolumeMinusHOfR, &inv), &vol.c4 - &hr.c4);
        prop_assert!(!series_gap(GapPair::EbgMinusVolume, &inv).is_negative());
        // The eBG t^2 term is exact, whatever box R is.
        let inv = inv.with_box_r(box_r);
        prop_assert_eq!(bound_series(SeriesKind::Ebg, &inv, None).unwrap().c2, gray_series(&inv).c2);
    }

    #[test]
    fn decompose_pieces_are_nonnegative(
        r in -20i64..20, ric_extra in 0i64..40, d in 3usize..9,
    ) {
        // Any Ricci spectrum has ric2 >= R^2/d; pick riem2 large enough for C^2 >= 0.
        let dq = q(d as i64, 1);
        let rq = q(r, 1);
        let ric2 = &rq * &rq / &dq + q(ric_extra, 1);
        let riem2 = q(4, 1) * &ric2 + q(1, 1);
        let inv = decompose(d, rq, ric2, riem2).unwrap();
        prop_assert!(!inv.s2.is_negative() && !inv.e2.is_negative());
        prop_assert_eq!(&inv.s2 + &inv.e2 + &inv.c2, inv.riem2.clone());
    }
}

#[test]
fn fitted_coefficients_match_exact_series() {
    let ts: Vec<f64> = (0..=30).map(|i| 0.01 + 0.003 * i as f64).collect();
    let quad = SphereQuadrature::exact(64);
    for pairs in [
        vec![(2, -1.0), (2, 0.0)],
        vec![(3, -1.0), (2, 0.0)],
        vec![(2, 1.0), (3, -0.5)],
    ] {
        let space = ProductSpace::from_pairs(&pairs).unwrap();
        let d = space.dim();
        let inv = RiemannInvariants::for_space(&space).unwrap();
        let lam = lambda_min(&space).unwrap();
        let spectrum = space.ricci_spectrum();
        let vol: Vec<f64> = ts
            .iter()
            .map(|&t| exact_ball_volume(&space, t).unwrap())
            .collect();
        let ebg = EnhancedKernel::new(&spectrum, &quad)
            .unwrap()
            .curve(&ts)
            .unwrap();
        let bg = bg_curve(&spectrum, &ts).unwrap();
        let k_hr = spectrum.scalar() / (d * (d - 1)) as f64;
        let hr: Vec<f64> = ts
            .iter()
            .map(|&t| model_ball_volume(d, k_hr, t).unwrap())
            .collect();
        for (kind, curve) in [
            (SeriesKind::Volume, vol),
            (SeriesKind::Ebg, ebg),
            (SeriesKind::Bg, bg),
            (SeriesKind::HOfR, hr),
        ] {
            let exact = bound_series(kind, &inv, Some(&lam)).unwrap();
            let (c2, c4) = fit_series(d, &ts, &curve).unwrap();
            assert!(
                relative_gap(c2, &exact.c2) < 1e-4,
                "{pairs:?} {kind} c2 {c2} vs {}",
                exact.c2
            );
            assert!(
                relative_gap(c4, &exact.c4) < 1e-4,
                "{pairs:?} {kind} c4 {c4} vs {}",
                exact.c4
            );
        }
    }
}

#[test]
fn sphere_moments_by_monte_carlo() {
    for d in 3..=8usize {
        let pairs: Vec<(f64, usize)> = (0..d).map(|i| ((i as f64 * 1.7).sin() * 2.0, 1)).collect();
        let spectrum = RicciSpectrum::new(pairs).unwrap();
        let dist =
            RicciDistribution::new(&spectrum, &SphereQuadrature::monte_carlo(200_000, d as u64))
                .unwrap();
        let (r, ric2, df) = (spectrum.scalar(), spectrum.ric2(), d as f64);
        let first = dist.average(|x| x);
        assert!(
            (first - r / df).abs() < 3.0 * dist.standard_error(|x| x),
            "d={d} first moment"
        );
        let second = dist.average(|x| x * x);
        let expect = (r * r + 2.0 * ric2) / (df * (df + 2.0));
        assert!(
            (second - expect).abs() < 3.0 * dist.standard_error(|x| x * x),
            "d={d} second moment"
        );
    }
}
