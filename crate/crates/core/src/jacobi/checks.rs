//! Numerical verification of the ordering results for correlated Jacobi
//! equations: monotonicity, max/min shuffling (all powers), sorting of many
//! trajectories, the Tot comparison for shuffled monotone families, and the
//! averaged-coefficient product bound.

use super::family::{sort_family, tot_curve, ScheduleFamily, ShuffleStep};
use super::schedule::{merge_minmax, KappaSchedule};
use super::solver::{solve_jacobi, solve_jacobi_from, JacobiSolution, JacobiState};
use crate::error::{Error, Result};
use crate::report::{min_normalized_margin, CheckReport};

/// Closed-form solution for `kappa = a delta(t-1) + b delta(t-2)` with the
/// stick-at-zero rule.
pub fn two_impulse_solution(a: f64, b: f64, t: f64) -> f64 {
    if t <= 1.0 {
        return t;
    }
    // On [1, 2]: j = 1 + (1 + a)(t - 1).
    let slope1 = 1.0 + a;
    if slope1 < 0.0 && 1.0 - 1.0 / slope1 <= t.min(2.0) {
        return 0.0;
    }
    if t <= 2.0 {
        return t + a * (t - 1.0);
    }
    let j2 = 2.0 + a;
    if j2 <= 0.0 {
        return 0.0;
    }
    let slope2 = 1.0 + a + b * j2;
    let j = j2 + slope2 * (t - 2.0);
    if j <= 0.0 {
        0.0
    } else {
        j
    }
}

/// `j_1 >= j_2` on the grid whenever `kappa_1 >= kappa_2`. Skipped with a
/// diagnostic when the schedules are not ordered.
pub fn verify_monotonicity(
    k1: &KappaSchedule,
    k2: &KappaSchedule,
    horizon: f64,
    step: f64,
) -> Result<CheckReport> {
    const NAME: &str = "jacobi.monotonicity";
    if !k1.dominates(k2) {
        return Ok(CheckReport::skipped(
            NAME,
            "precondition not met: kappa_1 >= kappa_2 fails somewhere",
        ));
    }
    let s1 = solve_jacobi(k1, horizon, step)?;
    let s2 = solve_jacobi(k2, horizon, step)?;
    Ok(CheckReport::from_margin(
        NAME,
        1,
        min_normalized_margin(&s1.j, &s2.j),
    ))
}

/// Monotonicity started at a later time `T` from states with
/// `j_1(T) >= j_2(T) > 0` and `j_1'/j_1 >= j_2'/j_2`.
pub fn verify_late_start(
    k1: &KappaSchedule,
    k2: &KappaSchedule,
    start1: JacobiState,
    start2: JacobiState,
    horizon: f64,
    step: f64,
) -> Result<CheckReport> {
    const NAME: &str = "jacobi.monotonicity-late-start";
    if start1.t != start2.t {
        return Err(Error::arg("late-start states must share their start time"));
    }
    let ordered = start1.j >= start2.j
        && start2.j > 0.0
        && start1.jprime * start2.j >= start2.jprime * start1.j
        && k1.dominates_after(k2, start1.t);
    if !ordered {
        return Ok(CheckReport::skipped(
            NAME,
            "precondition not met at the start time",
        ));
    }
    let s1 = solve_jacobi_from(k1, start1, horizon, step)?;
    let s2 = solve_jacobi_from(k2, start2, horizon, step)?;
    Ok(CheckReport::from_margin(
        NAME,
        1,
        min_normalized_margin(&s1.j, &s2.j),
    ))
}

/// Which phases of the stick-at-zero bookkeeping a shuffling trial visited:
/// `[j_min > 0, only j_min stuck, j_min and one of j_1/j_2 stuck, all stuck]`.
pub type Eras = [bool; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct ShufflingReport {
    pub report: CheckReport,
    pub eras: Eras,
}

struct FourSolutions {
    one: JacobiSolution,
    two: JacobiSolution,
    max: JacobiSolution,
    min: JacobiSolution,
}

fn solve_four(
    k1: &KappaSchedule,
    k2: &KappaSchedule,
    horizon: f64,
    step: f64,
) -> Result<FourSolutions> {
    let (hi, lo) = merge_minmax(k1, k2);
    Ok(FourSolutions {
        one: solve_jacobi(k1, horizon, step)?,
        two: solve_jacobi(k2, horizon, step)?,
        max: solve_jacobi(&hi, horizon, step)?,
        min: solve_jacobi(&lo, horizon, step)?,
    })
}

fn eras_of(sol: &FourSolutions) -> Eras {
    let mut eras = [false; 4];
    for k in 0..sol.one.j.len() {
        if k == 0 {
            continue;
        }
        let (a, b, lo) = (sol.one.j[k], sol.two.j[k], sol.min.j[k]);
        let era = match (lo > 0.0, a > 0.0, b > 0.0) {
            (true, ..) => 0,
            (false, true, true) => 1,
            (false, true, false) | (false, false, true) => 2,
            (false, false, false) => 3,
        };
        eras[era] = true;
    }
    eras
}

fn shuffling_margin(sol: &FourSolutions, p: f64) -> f64 {
    let pow = |s: &JacobiSolution| s.j.iter().map(|v| v.powf(p)).collect::<Vec<_>>();
    let lhs: Vec<f64> = pow(&sol.max)
        .iter()
        .zip(pow(&sol.min))
        .map(|(a, b)| a + b)
        .collect();
    let rhs: Vec<f64> = pow(&sol.one)
        .iter()
        .zip(pow(&sol.two))
        .map(|(a, b)| a + b)
        .collect();
    min_normalized_margin(&lhs, &rhs)
}

/// `j_max^p + j_min^p >= j_1^p + j_2^p` on the grid, one report per power.
/// The four trajectories are integrated once and reused for every `p`.
pub fn verify_shuffling_powers(
    k1: &KappaSchedule,
    k2: &KappaSchedule,
    powers: &[f64],
    horizon: f64,
    step: f64,
) -> Result<Vec<ShufflingReport>> {
    if let Some(p) = powers.iter().find(|p| !(**p >= 1.0)) {
        return Err(Error::arg(format!(
            "shuffling powers must be >= 1, got {p}"
        )));
    }
    let sol = solve_four(k1, k2, horizon, step)?;
    let eras = eras_of(&sol);
    Ok(powers
        .iter()
        .map(|&p| ShufflingReport {
            report: CheckReport::from_margin(
                format!("jacobi.shuffling.p{p}"),
                1,
                shuffling_margin(&sol, p),
            ),
            eras,
        })
        .collect())
}

pub fn verify_shuffling(
    k1: &KappaSchedule,
    k2: &KappaSchedule,
    p: f64,
    horizon: f64,
    step: f64,
) -> Result<ShufflingReport> {
    Ok(verify_shuffling_powers(k1, k2, &[p], horizon, step)?.remove(0))
}

/// The coefficient of `(j_1 + j_2)` in `(j_1 + j_2)''` written through the
/// half-sum and half-difference of the schedules equals
/// `(kappa_1 j_1 + kappa_2 j_2) / (j_1 + j_2)`, and the max/min version
/// dominates it. Evaluated on the smooth part at every grid point where all
/// four solutions are positive. Margins here are the worst relative identity
/// error (negated) and the normalised dominance slack.
pub fn verify_coefficient_algebra(
    k1: &KappaSchedule,
    k2: &KappaSchedule,
    horizon: f64,
    step: f64,
) -> Result<(f64, CheckReport)> {
    let (hi, lo) = merge_minmax(k1, k2);
    let sol = solve_four(k1, k2, horizon, step)?;
    let mut worst_identity: f64 = 0.0;
    let mut coeff12 = Vec::new();
    let mut coeff_mm = Vec::new();
    for k in 1..sol.one.j.len() {
        let t = sol.one.times[k];
        let (j1, j2, jx, jn) = (sol.one.j[k], sol.two.j[k], sol.max.j[k], sol.min.j[k]);
        if !(j1 > 0.0 && j2 > 0.0 && jx > 0.0 && jn > 0.0) {
            break;
        }
        let (a, b) = (k1.level_at(t), k2.level_at(t));
        let (x, n) = (hi.level_at(t), lo.level_at(t));
        let c12 = 0.5 * (a + b) + 0.5 * (a - b) * (j1 - j2) / (j1 + j2);
        let direct = (a * j1 + b * j2) / (j1 + j2);
        let scale = a.abs().max(b.abs()).max(1.0);
        worst_identity = worst_identity.max((c12 - direct).abs() / scale);
        coeff12.push(c12);
        coeff_mm.push(0.5 * (x + n) + 0.5 * (x - n) * (jx - jn) / (jx + jn));
    }
    let margin = if coeff12.is_empty() {
        0.0
    } else {
        min_normalized_margin(&coeff_mm, &coeff12)
    };
    Ok((
        worst_identity,
        CheckReport::from_margin("jacobi.coefficient-algebra", 1, margin),
    ))
}

/// Sorted family beats the original for every power in `powers`.
pub fn verify_sorting(family: &ScheduleFamily, powers: &[f64], step: f64) -> Result<CheckReport> {
    let sorted = sort_family(family)?;
    let before = family.solve(step)?;
    let after = sorted.solve(step)?;
    let margin = powers
        .iter()
        .map(|&p| {
            let lhs = tot_curve(&after, sorted.weights(), p);
            let rhs = tot_curve(&before, family.weights(), p);
            min_normalized_margin(&lhs, &rhs)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(CheckReport::from_margin("jacobi.sorting", 1, margin))
}

/// `Tot(s, p, F_0) >= Tot(s, p, F_sigma)` at every grid time for a monotone
/// family `F_0` and a measure-preserving step shuffle `sigma`.
pub fn verify_shuffled_tot(
    family: &ScheduleFamily,
    shuffle: Vec<ShuffleStep>,
    powers: &[f64],
    step: f64,
) -> Result<CheckReport> {
    let shuffled = family.clone().with_shuffle(shuffle)?;
    let base = family.solve(step)?;
    let moved = shuffled.solve(step)?;
    let margin = powers
        .iter()
        .map(|&p| {
            min_normalized_margin(
                &tot_curve(&base, family.weights(), p),
                &tot_curve(&moved, family.weights(), p),
            )
        })
        .fold(f64::INFINITY, f64::min);
    Ok(CheckReport::from_margin("jacobi.tot-shuffle", 1, margin))
}

/// Whether members are ordered the same way at every instant (a monotone
/// family in the sense required by the Tot comparison).
pub fn is_monotone_family(family: &ScheduleFamily) -> bool {
    let m = family.members();
    (0..m.len()).all(|i| (0..m.len()).all(|k| m[i].dominates(&m[k]) || m[k].dominates(&m[i])))
}

/// Rotation shuffle on `n` members with `cells` shuffle epochs over the
/// horizon: during epoch `e`, trajectory `i` follows member
/// `(i + round(omega * t_e * n)) mod n`.
pub fn rotation_shuffle(n: usize, cells: usize, omega: f64, horizon: f64) -> Vec<ShuffleStep> {
    (1..cells)
        .map(|e| {
            let t = horizon * e as f64 / cells as f64;
            let shift = (omega * t * n as f64).round() as usize % n;
            (t, (0..n).map(|i| (i + shift) % n).collect())
        })
        .collect()
}

/// Tot deficits `Tot(F_0) - Tot(F_sigma)` at the horizon for the rotation
/// shuffle of a continuum family `tau -> level(tau)` discretised with
/// `(n 2^m, cells 2^m)` for `m = 0..refinements`.
#[allow(clippy::too_many_arguments)]
pub fn rotation_deficits<F: Fn(f64) -> f64>(
    level: F,
    n: usize,
    cells: usize,
    omega: f64,
    horizon: f64,
    p: f64,
    refinements: usize,
    step: f64,
) -> Result<Vec<f64>> {
    (0..refinements)
        .map(|m| {
            let nm = n << m;
            let members = (0..nm)
                .map(|i| KappaSchedule::constant(level((i as f64 + 0.5) / nm as f64)))
                .collect();
            let fam = ScheduleFamily::uniform(members, horizon)?;
            let shuffled =
                fam.clone()
                    .with_shuffle(rotation_shuffle(nm, cells << m, omega, horizon))?;
            let tot = |f: &ScheduleFamily| -> Result<f64> {
                Ok(*tot_curve(&f.solve(step)?, f.weights(), p).last().unwrap())
            };
            Ok(tot(&fam)? - tot(&shuffled)?)
        })
        .collect()
}

/// Solution for the averaged schedule dominates the weighted geometric mean
/// of the members' solutions: `j_av >= prod_i j_i^{w_i}` (for uniform
/// weights, `j_av^n >= prod_i j_i`). Compared while every member is positive.
pub fn product_average_check(
    family: &ScheduleFamily,
    horizon: f64,
    step: f64,
) -> Result<CheckReport> {
    let schedules = family.effective_schedules()?;
    let refs: Vec<&KappaSchedule> = schedules.iter().collect();
    let weights = family.weights();
    let avg = KappaSchedule::combine(&refs, |v| v.iter().zip(weights).map(|(k, w)| k * w).sum())?;
    let j_av = solve_jacobi(&avg, horizon, step)?;
    let members = schedules
        .iter()
        .map(|k| solve_jacobi(k, horizon, step))
        .collect::<Result<Vec<_>>>()?;
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for k in 1..j_av.j.len() {
        if members.iter().any(|s| s.j[k] <= 0.0) {
            break;
        }
        let log_mean: f64 = members
            .iter()
            .zip(weights)
            .map(|(s, w)| w * s.j[k].ln())
            .sum();
        lhs.push(j_av.j[k]);
        rhs.push(log_mean.exp());
    }
    let mut report = CheckReport::from_margin(
        "jacobi.product-average",
        1,
        if lhs.is_empty() {
            0.0
        } else {
            min_normalized_margin(&lhs, &rhs)
        },
    );
    if lhs.len() + 1 < j_av.j.len() {
        report = report.with_diagnostic(format!(
            "compared up to t = {:.6} where a member reached zero",
            j_av.times[lhs.len()]
        ));
    }
    Ok(report)
}
