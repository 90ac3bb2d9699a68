//! Operator Jacobi fields along geodesics of product spaces: `det J`, the
//! expansion scalar, total sphere area, area/volume ratio comparisons and a
//! check that the Ricci distribution of directions is carried unchanged by
//! the geodesic flow.
//!
//! Sign convention: a normal direction with sectional curvature `k` evolves
//! as `j'' = -k j`, i.e. `J'' = -R J` with `R` the curvature operator.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::bounds::{cumulative_volume, EnhancedKernel};
use crate::error::{Error, Result};
use crate::model_spaces::{exact_ball_volume, ProductSpace, SpaceFactor};
use crate::report::{CheckReport, MARGIN_TOL};
use crate::sn::{sn, sphere_area};
use crate::sphere::{SimplexMeasure, SphereQuadrature};

const CONJUGATE_TOL: f64 = 1e-10;

/// Eigenvalues of the curvature operator on the normal space of a geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureOperator {
    diag: Vec<f64>,
}

impl CurvatureOperator {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || diag.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("curvature operator needs finite eigenvalues"));
        }
        Ok(Self { diag })
    }

    pub fn isotropic(d: usize, k: f64) -> Result<Self> {
        Self::new(vec![k; d.saturating_sub(1)])
    }

    /// Operator along a geodesic of `space` whose squared speed in factor
    /// `i` is `weights[i]`. Factor `i` contributes `k_i w_i` on the `n_i - 1`
    /// directions orthogonal to the velocity inside it; the `m - 1` mixing
    /// directions between the `m` factors are flat.
    pub fn for_direction(space: &ProductSpace, weights: &[f64]) -> Result<Self> {
        let factors = space.factors();
        if weights.len() != factors.len() {
            return Err(Error::DimensionMismatch {
                expected: factors.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(Error::arg(
                "factor weights must be non-negative and sum to 1",
            ));
        }
        let mut diag = vec![0.0; factors.len() - 1];
        for (f, w) in factors.iter().zip(weights) {
            diag.extend(std::iter::repeat_n(f.curvature * w, f.dim - 1));
        }
        Self::new(diag)
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Ambient dimension `d` (the normal space has dimension `d - 1`).
    pub fn dim(&self) -> usize {
        self.diag.len() + 1
    }

    /// `Ric(v, v)`: the trace of the operator.
    pub fn ricci(&self) -> f64 {
        self.diag.iter().sum()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(&self.diag))
    }

    /// `det J` from the per-direction closed forms.
    pub fn det_closed_form(&self, t: f64) -> f64 {
        self.diag.iter().map(|&k| sn(k, t)).product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorJacobiState {
    pub t: f64,
    pub j: DMatrix<f64>,
    pub jprime: DMatrix<f64>,
    pub det_j: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTrajectory {
    pub curvature: DMatrix<f64>,
    pub states: Vec<OperatorJacobiState>,
    pub conjugate_time: Option<f64>,
}

fn rk4_matrix(
    j: &DMatrix<f64>,
    p: &DMatrix<f64>,
    r: &DMatrix<f64>,
    h: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let acc = |x: &DMatrix<f64>| -(r * x);
    let k1j = p.clone();
    let k1p = acc(j);
    let k2j = p + &k1p * (0.5 * h);
    let k2p = acc(&(j + &k1j * (0.5 * h)));
    let k3j = p + &k2p * (0.5 * h);
    let k3p = acc(&(j + &k2j * (0.5 * h)));
    let k4j = p + &k3p * h;
    let k4p = acc(&(j + &k3j * h));
    (
        j + (k1j + &k2j * 2.0 + &k3j * 2.0 + k4j) * (h / 6.0),
        p + (k1p + &k2p * 2.0 + &k3p * 2.0 + k4p) * (h / 6.0),
    )
}

/// Dense RK4 for `J'' = -R J`, `J(0) = 0`, `J'(0) = I`, for a constant
/// symmetric curvature matrix. States are reported at `k * step`; the run
/// stops at the first conjugate point, located by bisection on `det J`.
pub fn solve_operator_jacobi_matrix(
    r: &DMatrix<f64>,
    horizon: f64,
    step: f64,
) -> Result<OperatorTrajectory> {
    if !r.is_square() || r.nrows() == 0 {
        return Err(Error::arg("curvature matrix must be square and non-empty"));
    }
    if !(horizon > 0.0 && step > 0.0 && step <= horizon) {
        return Err(Error::arg("need horizon > 0 and 0 < step <= horizon"));
    }
    let n = r.nrows();
    let mut j = DMatrix::zeros(n, n);
    let mut p = DMatrix::identity(n, n);
    let mut states = vec![OperatorJacobiState {
        t: 0.0,
        j: j.clone(),
        jprime: p.clone(),
        det_j: 0.0,
    }];
    let steps = (horizon / step + 1e-9).floor() as usize;
    let mut conjugate_time = None;
    for k in 1..=steps {
        let t0 = (k - 1) as f64 * step;
        let (jn, pn) = rk4_matrix(&j, &p, r, step);
        let det = jn.determinant();
        if det <= 0.0 && k > 1 {
            let (mut lo, mut hi) = (0.0, step);
            while hi - lo > CONJUGATE_TOL {
                let mid = 0.5 * (lo + hi);
                if rk4_matrix(&j, &p, r, mid).0.determinant() > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            conjugate_time = Some(t0 + 0.5 * (lo + hi));
            break;
        }
        j = jn;
        p = pn;
        states.push(OperatorJacobiState {
            t: k as f64 * step,
            j: j.clone(),
            jprime: p.clone(),
            det_j: det,
        });
    }
    Ok(OperatorTrajectory {
        curvature: r.clone(),
        states,
        conjugate_time,
    })
}

pub fn solve_operator_jacobi(
    op: &CurvatureOperator,
    horizon: f64,
    step: f64,
) -> Result<OperatorTrajectory> {
    solve_operator_jacobi_matrix(&op.matrix(), horizon, step)
}

/// Expansion data at one time: `u = tr(U)/(d-1)` with `U = J' J^{-1}`,
/// `kappa_eff = u' + u^2`, the Cauchy-Schwarz slack
/// `tr(U^2) - tr(U)^2/(d-1)`, and the Ricci ceiling `-Ric/(d-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionScalar {
    pub t: f64,
    pub det_j: f64,
    pub u: f64,
    pub kappa_eff: f64,
    pub cauchy_schwarz_gap: f64,
    pub ricci_ceiling: f64,
}

/// Expansion scalars at every state with `t > 0`, using the Riccati
/// equation `U' = -U^2 - R` for `u'`.
pub fn expansion_chain(traj: &OperatorTrajectory) -> Vec<ExpansionScalar> {
    let n = traj.curvature.nrows() as f64;
    let tr_r = traj.curvature.trace();
    traj.states
        .iter()
        .filter(|s| s.t > 0.0 && s.det_j > 0.0)
        .filter_map(|s| {
            let inv = s.j.clone().try_inverse()?;
            let u_mat = &s.jprime * inv;
            let tr_u = u_mat.trace();
            let tr_u2 = (&u_mat * &u_mat).trace();
            let u = tr_u / n;
            let du = -(tr_u2 + tr_r) / n;
            Some(ExpansionScalar {
                t: s.t,
                det_j: s.det_j,
                u,
                kappa_eff: du + u * u,
                cauchy_schwarz_gap: tr_u2 - tr_u * tr_u / n,
                ricci_ceiling: -tr_r / n,
            })
        })
        .collect()
}

/// Direction rule over the factor blocks of a space (flat factors merged),
/// with `det J` evaluated in closed form per direction.
#[derive(Debug, Clone)]
pub struct DirectionRule {
    blocks: Vec<SpaceFactor>,
    measure: SimplexMeasure,
    dim: usize,
}

impl DirectionRule {
    pub fn new(space: &ProductSpace, quad: &SphereQuadrature) -> Result<Self> {
        let blocks = space.reduced_factors();
        let mults: Vec<usize> = blocks.iter().map(|b| b.dim).collect();
        Ok(Self {
            measure: SimplexMeasure::new(&mults, quad)?,
            blocks,
            dim: space.dim(),
        })
    }

    pub fn measure(&self) -> &SimplexMeasure {
        &self.measure
    }

    /// `det J(t)` for the direction with block masses `w`:
    /// `t^(m-1) prod_i sn(k_i w_i, t)^(n_i - 1)`.
    pub fn det_j(&self, w: &[f64], t: f64) -> f64 {
        let mixing = t.powi(self.blocks.len() as i32 - 1);
        self.blocks
            .iter()
            .zip(w)
            .map(|(b, &wi)| sn(b.curvature * wi, t).powi(b.dim as i32 - 1))
            .product::<f64>()
            * mixing
    }

    /// `Ric(v, v)` for block masses `w`.
    pub fn ricci(&self, w: &[f64]) -> f64 {
        self.blocks
            .iter()
            .zip(w)
            .map(|(b, wi)| (b.dim - 1) as f64 * b.curvature * wi)
            .sum()
    }

    /// Total area of the geodesic sphere: `Omega_{d-1} E[det J(t)]`.
    pub fn total_area(&self, t: f64) -> f64 {
        sphere_area(self.dim - 1) * self.measure.expect(|w| self.det_j(w, t))
    }
}

pub fn total_area(space: &ProductSpace, t: f64, quad: &SphereQuadrature) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::arg(format!("radius must be non-negative, got {t}")));
    }
    Ok(DirectionRule::new(space, quad)?.total_area(t))
}

fn ratio_margin(ratios: &[f64]) -> f64 {
    let ceiling = ratios.iter().map(|r| 1.0 - r).fold(f64::INFINITY, f64::min);
    let decrease = ratios
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min);
    ceiling.min(decrease)
}

/// Area and volume ratio comparisons on an ascending grid of positive times:
///
/// * `ratio.direction-area`: `det J / sn_k^(d-1)` per direction is `<= 1` and nonincreasing;
/// * `ratio.ball-volume`: ball volume over the curvature-`k` model volume, likewise;
/// * `ratio.averaged-area`: total area over the eBG area;
/// * `ratio.averaged-volume`: ball volume over the eBG volume.
///
/// The first two need `k_ref <= lambda_min/(d-1)` and are skipped otherwise.
/// Ratios are only compared while the comparison denominators are positive.
pub fn ratio_monotonicity(
    space: &ProductSpace,
    k_ref: f64,
    grid: &[f64],
    quad: &SphereQuadrature,
) -> Result<Vec<CheckReport>> {
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg(
            "ratio grid must be strictly ascending positive times",
        ));
    }
    let spectrum = space.ricci_spectrum();
    let d = space.dim();
    let p = d as i32 - 1;
    let rule = DirectionRule::new(space, quad)?;
    let kernel = EnhancedKernel::new(&spectrum, quad)?;
    let ta_vol = cumulative_volume(|t| rule.total_area(t), grid, &[])?;
    let ebg_vol = kernel.curve(grid)?;
    let model = SpaceFactor {
        dim: d,
        curvature: k_ref,
    };
    let model_vol = cumulative_volume(
        |t| model.area(t),
        grid,
        &crate::sn::conjugate_time(k_ref)
            .into_iter()
            .collect::<Vec<_>>(),
    )?;

    let live = grid.iter().take_while(|&&t| sn(k_ref, t) > 0.0).count();
    let mut reports = Vec::new();
    if k_ref > spectrum.min() / (d - 1) as f64 + MARGIN_TOL {
        reports.push(CheckReport::skipped(
            "ratio.direction-area",
            "precondition not met: k_ref exceeds lambda_min/(d-1)",
        ));
        reports.push(CheckReport::skipped(
            "ratio.ball-volume",
            "precondition not met: k_ref exceeds lambda_min/(d-1)",
        ));
    } else {
        let margin = rule
            .measure()
            .iter()
            .map(|(w, _)| {
                let ratios: Vec<f64> = grid[..live]
                    .iter()
                    .map(|&t| rule.det_j(w, t) / sn(k_ref, t).powi(p))
                    .collect();
                ratio_margin(&ratios)
            })
            .fold(f64::INFINITY, f64::min);
        reports.push(CheckReport::from_margin(
            "ratio.direction-area",
            rule.measure().len(),
            margin,
        ));
        let ratios: Vec<f64> = (0..live).map(|i| ta_vol[i] / model_vol[i]).collect();
        reports.push(CheckReport::from_margin(
            "ratio.ball-volume",
            1,
            ratio_margin(&ratios),
        ));
    }

    let area_ratios: Vec<f64> = grid
        .iter()
        .map(|&t| (rule.total_area(t), kernel.area(t)))
        .take_while(|(_, den)| *den > 0.0)
        .map(|(num, den)| num / den)
        .collect();
    reports.push(CheckReport::from_margin(
        "ratio.averaged-area",
        1,
        ratio_margin(&area_ratios),
    ));
    let vol_ratios: Vec<f64> = ta_vol.iter().zip(&ebg_vol).map(|(a, b)| a / b).collect();
    reports.push(CheckReport::from_margin(
        "ratio.averaged-volume",
        1,
        ratio_margin(&vol_ratios),
    ));
    Ok(reports)
}

/// Histograms of `Ric(v, v)` over random unit directions before and after
/// flowing each geodesic for time `t`, plus the largest per-direction drift.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiouvilleReport {
    pub initial: Vec<usize>,
    pub flowed: Vec<usize>,
    pub max_drift: f64,
}

/// One factor's geodesic in its standard embedding: flat space, the round
/// sphere of radius `1/sqrt(k)` in `R^(n+1)`, or the hyperboloid
/// `<x, x> = 1/k` in Minkowski space. Returns the squared speed at time `t`.
fn flow_factor_speed(f: &SpaceFactor, velocity: &[f64], t: f64, step: f64) -> f64 {
    let n = f.dim;
    let k = f.curvature;
    let lorentz = |a: &[f64], b: &[f64]| -> f64 {
        let s: f64 = a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum();
        if k < 0.0 {
            s - a[0] * b[0]
        } else {
            s + a[0] * b[0]
        }
    };
    if k == 0.0 {
        return velocity.iter().map(|v| v * v).sum();
    }
    let mut x = vec![0.0; n + 1];
    x[0] = 1.0 / k.abs().sqrt();
    let mut v = vec![0.0; n + 1];
    v[1..].copy_from_slice(velocity);
    // x'' = -k <x', x'> x for both signs once <,> is the ambient form.
    let accel = |x: &[f64], v: &[f64]| -> Vec<f64> {
        let s = lorentz(v, v);
        x.iter().map(|xi| -k * s * xi).collect()
    };
    let steps = (t / step).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let axpy = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + s * y).collect()
    };
    for _ in 0..steps {
        let k1x = v.clone();
        let k1v = accel(&x, &v);
        let x2 = axpy(&x, &k1x, 0.5 * h);
        let v2 = axpy(&v, &k1v, 0.5 * h);
        let k2v = accel(&x2, &v2);
        let x3 = axpy(&x, &v2, 0.5 * h);
        let v3 = axpy(&v, &k2v, 0.5 * h);
        let k3v = accel(&x3, &v3);
        let x4 = axpy(&x, &v3, h);
        let v4 = axpy(&v, &k3v, h);
        let k4v = accel(&x4, &v4);
        for i in 0..=n {
            x[i] += h / 6.0 * (k1x[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
            v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }
    lorentz(&v, &v)
}

/// Flow `samples` random unit geodesics of `space` for time `t` and compare
/// the distribution of `Ric(v, v)` before and after, binned into `bins`
/// equal cells on `[lambda_min, lambda_max]`.
pub fn liouville_check(
    space: &ProductSpace,
    samples: usize,
    t: f64,
    bins: usize,
    seed: u64,
) -> Result<LiouvilleReport> {
    if samples == 0 || bins == 0 || !(t >= 0.0) {
        return Err(Error::arg("need samples > 0, bins > 0 and t >= 0"));
    }
    let spectrum = space.ricci_spectrum();
    let (lo, hi) = (spectrum.min(), spectrum.max());
    let bin = |x: f64| -> usize {
        if hi == lo {
            0
        } else {
            (((x - lo) / (hi - lo) * bins as f64).floor().max(0.0) as usize).min(bins - 1)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut initial = vec![0; bins];
    let mut flowed = vec![0; bins];
    let mut max_drift: f64 = 0.0;
    for _ in 0..samples {
        let g: Vec<f64> = (0..space.dim())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut offset = 0;
        let (mut ric0, mut ric_t) = (0.0, 0.0);
        for f in space.factors() {
            let vel: Vec<f64> = g[offset..offset + f.dim].iter().map(|x| x / norm).collect();
            offset += f.dim;
            let lambda = (f.dim - 1) as f64 * f.curvature;
            ric0 += lambda * vel.iter().map(|v| v * v).sum::<f64>();
            ric_t += lambda * flow_factor_speed(f, &vel, t, 1e-3);
        }
        initial[bin(ric0)] += 1;
        flowed[bin(ric_t)] += 1;
        max_drift = max_drift.max((ric_t - ric0).abs());
    }
    Ok(LiouvilleReport {
        initial,
        flowed,
        max_drift,
    })
}

fn random_rotation(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal))
        .qr()
        .q()
}

/// Operator checks on `samples` random directions of `space`, each with the
/// curvature operator conjugated by a random rotation:
///
/// * `geodesic.det-j`: matrix-ODE `det J` within `1e-8` relative of the product of `sn`;
/// * `geodesic.kappa-ceiling`: `kappa_eff <= -Ric/(d-1)`;
/// * `geodesic.cauchy-schwarz`: `tr(U^2) >= tr(U)^2/(d-1)`;
/// * `geodesic.total-area`: total area within `1e-6` relative of a centred
///   difference of the exact volume.
///
/// Tolerance checks report `tolerance - error` as their margin. The area
/// check is skipped when `quad` resolves to Monte Carlo for this space.
pub fn operator_consistency(
    space: &ProductSpace,
    samples: usize,
    seed: u64,
    horizon: f64,
    step: f64,
    quad: &SphereQuadrature,
) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut det_err, mut ceiling, mut cs): (f64, f64, f64) = (0.0, f64::INFINITY, f64::INFINITY);
    for _ in 0..samples {
        let g: Vec<f64> = space
            .factors()
            .iter()
            .map(|f| {
                (0..f.dim)
                    .map(|_| rng.sample::<f64, _>(StandardNormal).powi(2))
                    .sum::<f64>()
            })
            .collect();
        let total: f64 = g.iter().sum();
        let w: Vec<f64> = g.iter().map(|x| x / total).collect();
        let op = CurvatureOperator::for_direction(space, &w)?;
        let q = random_rotation(&mut rng, op.diag().len());
        let traj =
            solve_operator_jacobi_matrix(&(&q * op.matrix() * q.transpose()), horizon, step)?;
        for s in traj.states.iter().skip(1) {
            let exact = op.det_closed_form(s.t);
            det_err = det_err.max((s.det_j - exact).abs() / exact.abs());
        }
        for e in expansion_chain(&traj) {
            let scale = e.ricci_ceiling.abs().max(1.0);
            ceiling = ceiling.min((e.ricci_ceiling - e.kappa_eff) / scale);
            cs = cs.min(e.cauchy_schwarz_gap / e.u.powi(2).max(1.0));
        }
    }
    let mut out = vec![
        CheckReport::from_margin("geodesic.det-j", samples, 1e-8 - det_err),
        CheckReport::from_margin("geodesic.kappa-ceiling", samples, ceiling),
        CheckReport::from_margin("geodesic.cauchy-schwarz", samples, cs),
    ];
    let rule = DirectionRule::new(space, quad)?;
    if rule.measure().is_monte_carlo() {
        out.push(CheckReport::skipped(
            "geodesic.total-area",
            "precondition not met: needs a deterministic sphere rule",
        ));
        return Ok(out);
    }
    let cut = space
        .factors()
        .iter()
        .filter_map(|f| f.cut_radius())
        .fold(f64::INFINITY, f64::min);
    let top = horizon.min(0.9 * cut);
    let h = 1e-4;
    let mut area_err: f64 = 0.0;
    for i in 1..=8 {
        let t = top * i as f64 / 8.0;
        let fd = (exact_ball_volume(space, t + h)? - exact_ball_volume(space, t - h)?) / (2.0 * h);
        area_err = area_err.max((rule.total_area(t) - fd).abs() / fd.abs());
    }
    out.push(CheckReport::from_margin(
        "geodesic.total-area",
        8,
        1e-6 - area_err,
    ));
    Ok(out)
}
