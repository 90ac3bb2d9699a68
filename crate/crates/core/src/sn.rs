//! The comparison function `sn(k, t)` and unit-sphere areas.

use std::f64::consts::PI;

/// Solution of `j'' = -k j`, `j(0) = 0`, `j'(0) = 1`, clamped to zero past
/// the first conjugate time `pi / sqrt(k)` when `k > 0`.
///
/// Nonincreasing in `k` for every fixed `t >= 0`.
pub fn sn(k: f64, t: f64) -> f64 {
    if k > 0.0 {
        let s = k.sqrt();
        if s * t >= PI {
            0.0
        } else {
            (s * t).sin() / s
        }
    } else if k < 0.0 {
        let s = (-k).sqrt();
        (s * t).sinh() / s
    } else {
        t
    }
}

/// First conjugate time of `sn(k, .)`, if any.
pub fn conjugate_time(k: f64) -> Option<f64> {
    (k > 0.0).then(|| PI / k.sqrt())
}

/// Area of the unit sphere `S^n` embedded in `R^(n+1)`, i.e. `2 pi^((n+1)/2) / Gamma((n+1)/2)`.
pub fn sphere_area(n: usize) -> f64 {
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n - 1) as f64 * sphere_area(n - 2),
    }
}
