//! One-dimensional quadrature: adaptive Gauss-Kronrod for the exact-volume
//! oracles, Gauss-Jacobi rules (Golub-Welsch) for sphere averages, and a
//! composite Gauss-Legendre integrator for area-to-volume curves.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance used for every exact-volume oracle integral.
pub const ORACLE_ABS_TOL: f64 = 1e-12;
/// Relative tolerance used for every exact-volume oracle integral.
pub const ORACLE_REL_TOL: f64 = 1e-10;

const MAX_INTERVALS: usize = 20_000;

// Kronrod 15-point abscissae (non-negative half) and weights; the embedded
// 7-point Gauss rule uses the odd-indexed abscissae.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Estimate {
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

struct Interval {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Globally adaptive Gauss-Kronrod (G7/K15) integration of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate satisfies `error <= max(abs_tol, rel_tol * |value|)`.
pub fn adaptive_gk<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate> {
    adaptive_gk_breaks(f, &[a, b], abs_tol, rel_tol)
}

/// Same as [`adaptive_gk`] with the initial partition given by `breaks`
/// (ascending). Known kinks of the integrand should be listed there.
pub fn adaptive_gk_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Err(Error::arg("quadrature needs at least two break points"));
    }
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        if w[1] < w[0] {
            return Err(Error::arg("quadrature break points must be ascending"));
        }
        if w[1] == w[0] {
            continue;
        }
        let est = kronrod15(&f, w[0], w[1]);
        value += est.value;
        error += est.error;
        heap.push(Interval {
            a: w[0],
            b: w[1],
            est,
        });
    }
    while error > abs_tol.max(rel_tol * value.abs()) || !error.is_finite() {
        if heap.len() >= MAX_INTERVALS || !value.is_finite() || !error.is_finite() {
            return Err(Error::NotConverged {
                achieved: error,
                requested: abs_tol.max(rel_tol * value.abs()),
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine resolution.
            heap.push(worst);
            return Err(Error::NotConverged {
                achieved: error,
                requested: abs_tol.max(rel_tol * value.abs()),
            });
        }
        let left = kronrod15(&f, worst.a, mid);
        let right = kronrod15(&f, mid, worst.b);
        value += left.value + right.value - worst.est.value;
        error += left.error + right.error - worst.est.error;
        heap.push(Interval {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Interval {
            a: mid,
            b: worst.b,
            est: right,
        });
    }
    // Re-sum to shed the drift of the running updates.
    let value = heap.iter().map(|i| i.est.value).sum();
    let error = heap.iter().map(|i| i.est.error).sum();
    Ok(Estimate { value, error })
}

/// Adaptive integration at the oracle tolerances.
pub fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64]) -> Result<f64> {
    adaptive_gk_breaks(f, breaks, ORACLE_ABS_TOL, ORACLE_REL_TOL).map(|e| e.value)
}

/// Nodes and weights of a Gauss rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss-Jacobi rule for the weight `(1 - x)^alpha (1 + x)^beta` on `[-1, 1]`,
/// computed by the Golub-Welsch eigenvalue method. Weights are normalised to
/// sum to one, so the rule integrates against the corresponding probability
/// density.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<GaussRule> {
    if n == 0 {
        return Err(Error::arg("Gauss rule needs at least one node"));
    }
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(Error::arg(format!(
            "Jacobi exponents must exceed -1 (alpha={alpha}, beta={beta})"
        )));
    }
    let ab = alpha + beta;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        let diag = if i == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
        };
        jacobi[(i, i)] = diag;
        if i + 1 < n {
            let m = k + 1.0;
            let s = 2.0 * m + ab;
            let off2 = if i == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * m * (m + alpha) * (m + beta) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0))
            };
            let off = off2.sqrt();
            jacobi[(i, i + 1)] = off;
            jacobi[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Ok(GaussRule {
        nodes: pairs.iter().map(|p| p.0.clamp(-1.0, 1.0)).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    })
}

/// Gauss-Legendre rule on `[-1, 1]` with weights summing to two.
pub fn gauss_legendre(n: usize) -> Result<GaussRule> {
    let mut rule = gauss_jacobi(n, 0.0, 0.0)?;
    rule.weights.iter_mut().for_each(|w| *w *= 2.0);
    Ok(rule)
}

/// Quadrature for the Beta(a, b) probability law on `[0, 1]`.
pub fn beta_rule(n: usize, a: f64, b: f64) -> Result<GaussRule> {
    // w = (1 + x)/2 maps (1-x)^(b-1) (1+x)^(a-1) onto w^(a-1) (1-w)^(b-1).
    let mut rule = gauss_jacobi(n, b - 1.0, a - 1.0)?;
    rule.nodes.iter_mut().for_each(|x| *x = 0.5 * (1.0 + *x));
    Ok(rule)
}

/// Composite Gauss-Legendre integrator on panels no wider than a caller
/// supplied width.
#[derive(Debug, Clone)]
pub struct CompositeLegendre {
    rule: GaussRule,
}

impl CompositeLegendre {
    pub fn new(nodes_per_panel: usize) -> Result<Self> {
        Ok(Self {
            rule: gauss_legendre(nodes_per_panel)?,
        })
    }

    fn panel<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        h * self
            .rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
    }

    /// Integral over `[a, b]` on uniform panels of width at most `max_width`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, max_width: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let lo = a + h * i as f64;
                let hi = if i + 1 == panels { b } else { lo + h };
                self.panel(f, lo, hi)
            })
            .sum()
    }

    /// Running integral `∫_0^t f` at each of the ascending, non-negative
    /// `times`. Panels never exceed `min(max_width, t_1 / 50)` on the first
    /// interval and `max_width` afterwards.
    pub fn cumulative<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        times: &[f64],
        max_width: f64,
    ) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(times.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &t in times {
            if t < prev {
                return Err(Error::arg(
                    "cumulative integration needs ascending non-negative times",
                ));
            }
            let width = if prev == 0.0 {
                max_width.min(t / 50.0)
            } else {
                max_width
            };
            if t > prev {
                acc += self.integrate(f, prev, t, width);
            }
            out.push(acc);
            prev = t;
        }
        Ok(out)
    }
}
