//! Fixed-step RK4 for `j'' = kappa j` with exact impulse jumps and the
//! stick-at-zero rule.

use serde::Serialize;

use super::schedule::{union_sorted, KappaSchedule};
use crate::error::{Error, Result};

const ROOT_TOL: f64 = 1e-12;

/// Position and velocity at a time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiState {
    pub t: f64,
    pub j: f64,
    pub jprime: f64,
}

impl JacobiState {
    /// `j(0) = 0`, `j'(0) = 1`.
    pub const STANDARD: JacobiState = JacobiState {
        t: 0.0,
        j: 0.0,
        jprime: 1.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiSolution {
    pub times: Vec<f64>,
    pub j: Vec<f64>,
    pub jprime: Vec<f64>,
    /// First time after the start at which `j` reaches zero.
    pub first_zero: Option<f64>,
    pub stuck: bool,
    pub diagnostics: Vec<String>,
}

impl JacobiSolution {
    pub fn last(&self) -> f64 {
        *self.j.last().expect("non-empty solution")
    }
}

/// Reporting grid `start, k*step ..., horizon` with duplicates removed.
pub fn report_grid(start: f64, horizon: f64, step: f64) -> Vec<f64> {
    let mut grid = vec![start];
    let first = (start / step).floor() as usize + 1;
    let last = (horizon / step + 1e-9).floor() as usize;
    for k in first..=last {
        let t = k as f64 * step;
        if t > start + 1e-12 && t <= horizon {
            grid.push(t);
        }
    }
    if horizon - grid.last().copied().unwrap_or(start) > 1e-12 * horizon.max(1.0) {
        grid.push(horizon);
    }
    grid
}

fn rk4(j: f64, jp: f64, kappa: f64, h: f64) -> (f64, f64) {
    // y' = (jp, kappa j)
    let (k1j, k1p) = (jp, kappa * j);
    let (k2j, k2p) = (jp + 0.5 * h * k1p, kappa * (j + 0.5 * h * k1j));
    let (k3j, k3p) = (jp + 0.5 * h * k2p, kappa * (j + 0.5 * h * k2j));
    let (k4j, k4p) = (jp + h * k3p, kappa * (j + h * k3j));
    (
        j + h * ((k1j + 2.0 * k2j + 2.0 * k3j + k4j) / 6.0),
        jp + h * ((k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0),
    )
}

/// Zero of `s -> rk4(j, jp, kappa, s).0` on `(0, h]` given a sign change,
/// located by Illinois-modified regula falsi.
fn substep_root(j: f64, jp: f64, kappa: f64, h: f64, j_end: f64) -> f64 {
    let (mut a, mut fa) = (0.0, j);
    let (mut b, mut fb) = (h, j_end);
    let mut side = 0i8;
    for _ in 0..200 {
        if b - a <= ROOT_TOL {
            break;
        }
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c > a && c < b { c } else { 0.5 * (a + b) };
        let fc = rk4(j, jp, kappa, c).0;
        if fc == 0.0 {
            return c;
        }
        if fc > 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    b
}

/// Solve from the standard initial conditions on `[0, horizon]`.
pub fn solve_jacobi(schedule: &KappaSchedule, horizon: f64, step: f64) -> Result<JacobiSolution> {
    solve_jacobi_from(schedule, JacobiState::STANDARD, horizon, step)
}

/// Solve from an arbitrary state at `start.t`. The start state is taken to
/// be post-impulse: an impulse exactly at `start.t` is not re-applied.
pub fn solve_jacobi_from(
    schedule: &KappaSchedule,
    start: JacobiState,
    horizon: f64,
    step: f64,
) -> Result<JacobiSolution> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::arg(format!("step must be positive, got {step}")));
    }
    if !(horizon > start.t) {
        return Err(Error::arg(format!(
            "horizon {horizon} must exceed the start time {}",
            start.t
        )));
    }
    if step > horizon - start.t {
        return Err(Error::arg(format!(
            "step {step} exceeds the integration span"
        )));
    }
    if !(start.j >= 0.0 && start.j.is_finite() && start.jprime.is_finite()) {
        return Err(Error::arg("start state needs finite values with j >= 0"));
    }

    let grid = report_grid(start.t, horizon, step);
    let knots = union_sorted(
        grid.iter()
            .copied()
            .chain(schedule.impulse_times())
            .chain(schedule.edges())
            .filter(|&t| t > start.t && t <= horizon),
    );

    let mut out = JacobiSolution {
        times: Vec::with_capacity(grid.len()),
        j: Vec::with_capacity(grid.len()),
        jprime: Vec::with_capacity(grid.len()),
        first_zero: None,
        stuck: false,
        diagnostics: Vec::new(),
    };
    // A start at j = 0 that is not moving up is already stuck.
    if start.j == 0.0 && start.jprime <= 0.0 {
        out.first_zero = Some(start.t);
        out.stuck = true;
    }
    let (mut t, mut j, mut jp) = (start.t, start.j, start.jprime);
    if out.stuck {
        jp = 0.0;
    }
    out.times.push(t);
    out.j.push(j);
    out.jprime.push(jp);
    let mut next_grid = 1;

    for &target in &knots {
        if !out.stuck {
            let kappa = schedule.level_at(t);
            let span = target - t;
            let n = (span / step - 1e-9).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for i in 0..n {
                let (jn, jpn) = rk4(j, jp, kappa, h);
                let t_sub = t + h * i as f64;
                if jn <= 0.0 {
                    let s = if jn == 0.0 {
                        h
                    } else {
                        substep_root(j, jp, kappa, h, jn)
                    };
                    let t0 = if i + 1 == n && jn == 0.0 {
                        target
                    } else {
                        (t_sub + s).min(target)
                    };
                    out.first_zero = Some(t0);
                    out.stuck = true;
                    break;
                }
                j = jn;
                jp = jpn;
            }
            if out.stuck {
                j = 0.0;
                jp = 0.0;
            }
        }
        t = target;

        let a = schedule.impulse_at(t);
        if a != 0.0 {
            if out.stuck {
                if out.first_zero == Some(t) {
                    out.diagnostics.push(format!(
                        "impulse at t = {t} coincides with the first zero; zero takes precedence"
                    ));
                }
            } else {
                jp += a * j;
            }
        }

        if next_grid < grid.len() && grid[next_grid] == t {
            out.times.push(t);
            out.j.push(j);
            out.jprime.push(jp);
            next_grid += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn flat_schedule_is_linear() {
        let sol = solve_jacobi(&KappaSchedule::constant(0.0), 3.0, 0.01).unwrap();
        for (t, j) in sol.times.iter().zip(&sol.j) {
            assert_relative_eq!(*j, *t, epsilon = 1e-13);
        }
        assert!(sol.first_zero.is_none());
        assert_eq!(sol.times.len(), 301);
    }

    #[test]
    fn negative_constant_sticks_at_pi() {
        let sol = solve_jacobi(&KappaSchedule::constant(-1.0), 5.0, 1e-3).unwrap();
        assert_relative_eq!(sol.first_zero.unwrap(), PI, epsilon = 1e-10);
        assert!(sol.stuck);
        for ((t, j), jp) in sol.times.iter().zip(&sol.j).zip(&sol.jprime) {
            if *t < PI {
                assert_relative_eq!(*j, t.sin(), epsilon = 1e-11);
            } else {
                assert_eq!(*j, 0.0);
                assert_eq!(*jp, 0.0);
            }
        }
    }

    #[test]
    fn impulses_jump_the_velocity() {
        let k = KappaSchedule::from_impulses(vec![(1.0, 1.0), (2.0, 1.0)]).unwrap();
        let sol = solve_jacobi(&k, 3.0, 0.01).unwrap();
        assert_relative_eq!(sol.last(), 8.0, max_relative = 1e-13);
    }

    #[test]
    fn invalid_arguments() {
        let k = KappaSchedule::constant(0.0);
        assert!(solve_jacobi(&k, 1.0, 2.0).is_err());
        assert!(solve_jacobi(&k, 1.0, 0.0).is_err());
        assert!(solve_jacobi(&k, -1.0, 0.1).is_err());
    }

    #[test]
    fn impulse_at_zero_is_diagnosed() {
        // j = t - 2(t - 1) = 2 - t hits zero exactly at 2, where a second impulse sits.
        let k = KappaSchedule::from_impulses(vec![(1.0, -2.0), (2.0, 5.0)]).unwrap();
        let sol = solve_jacobi(&k, 3.0, 0.125).unwrap();
        assert_eq!(sol.first_zero, Some(2.0));
        assert_eq!(sol.last(), 0.0);
        assert_eq!(sol.diagnostics.len(), 1);
    }

    #[test]
    fn late_start_grid_aligns() {
        let k = KappaSchedule::constant(1.0);
        let start = JacobiState {
            t: 0.55,
            j: 1.0,
            jprime: 0.0,
        };
        let sol = solve_jacobi_from(&k, start, 2.0, 0.01).unwrap();
        assert_relative_eq!(sol.times[1], 0.56, epsilon = 1e-15);
        for (t, j) in sol.times.iter().zip(&sol.j) {
            assert_relative_eq!(*j, (t - 0.55).cosh(), max_relative = 1e-9);
        }
    }
}
