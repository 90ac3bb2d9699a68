//! Bishop-Gromov (BG) and enhanced Bishop-Gromov (eBG) comparison areas and
//! volumes, sampled bound curves, and the large-radius beam asymptotics.
//!
//! BG compares against the model space whose sn argument is the smallest
//! Ricci eigenvalue over `d - 1`. eBG instead averages, over departure
//! directions `X`, the model area with argument `Ric(X, X) / (d - 1)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_spaces::{exact_ball_volume, ProductSpace, RicciSpectrum};
use crate::quadrature::CompositeLegendre;
use crate::sn::{conjugate_time, sn, sphere_area};
use crate::sphere::{RicciDistribution, SphereQuadrature};

/// Widest radial panel used when integrating areas into volumes.
pub const RADIAL_PANEL: f64 = 0.05;
const RADIAL_NODES: usize = 8;

fn check_radius(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!(
            "radius must be finite and non-negative, got {t}"
        )))
    }
}

/// Running integrals `int_0^t area` at every ascending time in `times`.
/// Panels are aligned with each entry of `breaks`, where the integrand may kink.
pub fn cumulative_volume<F: Fn(f64) -> f64>(
    area: F,
    times: &[f64],
    breaks: &[f64],
) -> Result<Vec<f64>> {
    let rule = CompositeLegendre::new(RADIAL_NODES)?;
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    let mut pending: Vec<f64> = breaks.iter().copied().filter(|b| *b > 0.0).collect();
    pending.sort_by(f64::total_cmp);
    let mut pending = pending.into_iter().peekable();
    for &t in times {
        check_radius(t)?;
        if t < prev {
            return Err(Error::arg("bound curve times must be ascending"));
        }
        while let Some(b) = pending.next_if(|&b| b <= t) {
            if b > prev {
                let width = if prev == 0.0 {
                    RADIAL_PANEL.min(b / 50.0)
                } else {
                    RADIAL_PANEL
                };
                acc += rule.integrate(&area, prev, b, width);
                prev = b;
            }
        }
        if t > prev {
            let width = if prev == 0.0 {
                RADIAL_PANEL.min(t / 50.0)
            } else {
                RADIAL_PANEL
            };
            acc += rule.integrate(&area, prev, t, width);
            prev = t;
        }
        out.push(acc);
    }
    Ok(out)
}

/// The sn argument used by BG: `lambda_min / (d - 1)`.
pub fn bg_argument(spectrum: &RicciSpectrum) -> f64 {
    spectrum.min() / (spectrum.dim() - 1) as f64
}

pub fn bg_area(spectrum: &RicciSpectrum, t: f64) -> f64 {
    let d = spectrum.dim();
    sphere_area(d - 1) * sn(bg_argument(spectrum), t).powi(d as i32 - 1)
}

pub fn bg_bound(spectrum: &RicciSpectrum, t: f64) -> Result<f64> {
    Ok(bg_curve(spectrum, &[t])?[0])
}

pub fn bg_curve(spectrum: &RicciSpectrum, times: &[f64]) -> Result<Vec<f64>> {
    let breaks: Vec<f64> = conjugate_time(bg_argument(spectrum)).into_iter().collect();
    cumulative_volume(|t| bg_area(spectrum, t), times, &breaks)
}

/// Precomputed direction rule for eBG: per-node sn arguments and probabilities.
#[derive(Debug, Clone)]
pub struct EnhancedKernel {
    dim: usize,
    args: Vec<f64>,
    probs: Vec<f64>,
    omega: f64,
}

impl EnhancedKernel {
    pub fn new(spectrum: &RicciSpectrum, quad: &SphereQuadrature) -> Result<Self> {
        let d = spectrum.dim();
        let dist = RicciDistribution::new(spectrum, quad)?;
        let scale = 1.0 / (d - 1) as f64;
        Ok(Self {
            dim: d,
            args: dist.values().iter().map(|x| x * scale).collect(),
            probs: dist.probs().to_vec(),
            omega: sphere_area(d - 1),
        })
    }

    pub fn area(&self, t: f64) -> f64 {
        let p = self.dim as i32 - 1;
        self.omega
            * self
                .args
                .iter()
                .zip(&self.probs)
                .map(|(&k, w)| w * sn(k, t).powi(p))
                .sum::<f64>()
    }

    /// Volumes at `times`. Panels align with the clamp times of the extreme
    /// arguments; interior clamps each carry only their node's weight.
    pub fn curve(&self, times: &[f64]) -> Result<Vec<f64>> {
        let lo = self.args.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.args.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let breaks: Vec<f64> = [lo, hi].into_iter().filter_map(conjugate_time).collect();
        cumulative_volume(|t| self.area(t), times, &breaks)
    }
}

pub fn ebg_area(spectrum: &RicciSpectrum, t: f64, quad: &SphereQuadrature) -> Result<f64> {
    check_radius(t)?;
    Ok(EnhancedKernel::new(spectrum, quad)?.area(t))
}

pub fn ebg_bound(spectrum: &RicciSpectrum, t: f64, quad: &SphereQuadrature) -> Result<f64> {
    Ok(EnhancedKernel::new(spectrum, quad)?.curve(&[t])?[0])
}

/// Sampled volume, eBG and BG curves on a common ascending grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    pub times: Vec<f64>,
    pub volume: Option<Vec<f64>>,
    pub ebg: Vec<f64>,
    pub bg: Vec<f64>,
}

impl BoundCurve {
    pub fn for_spectrum(
        spectrum: &RicciSpectrum,
        times: &[f64],
        quad: &SphereQuadrature,
    ) -> Result<Self> {
        Ok(Self {
            times: times.to_vec(),
            volume: None,
            ebg: EnhancedKernel::new(spectrum, quad)?.curve(times)?,
            bg: bg_curve(spectrum, times)?,
        })
    }

    pub fn for_space(space: &ProductSpace, times: &[f64], quad: &SphereQuadrature) -> Result<Self> {
        let mut curve = Self::for_spectrum(&space.ricci_spectrum(), times, quad)?;
        let volume = times
            .iter()
            .map(|&t| exact_ball_volume(space, t))
            .collect::<Result<Vec<_>>>()?;
        curve.volume = Some(volume);
        Ok(curve)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Large-radius beam picture for the spectrum with a single negative
/// eigenvalue `-(d-1)` and all others zero: returns the beam half-angle
/// `phi_max = sqrt((d-2)/((d-1) t))` and the predicted eBG/BG ratio
/// `(2/Omega_{d-1}) (2 pi / ((d-1) t))^((d-1)/2)`.
pub fn beam_asymptotics(d: usize, t: f64) -> Result<(f64, f64)> {
    if d < 3 {
        return Err(Error::arg(format!("beam asymptotics need d >= 3, got {d}")));
    }
    if !(t > 0.0) {
        return Err(Error::arg(format!("beam asymptotics need t > 0, got {t}")));
    }
    let dm1 = (d - 1) as f64;
    let phi_max = ((d as f64 - 2.0) / (dm1 * t)).sqrt();
    let ratio = 2.0 / sphere_area(d - 1) * (2.0 * PI / (dm1 * t)).powf(0.5 * dm1);
    Ok((phi_max, ratio))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::arg(
            "log-log fit needs at least two positive samples",
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Spectrum with one eigenvalue `-(d-1)` and `d-1` zeros.
pub fn beam_spectrum(d: usize) -> Result<RicciSpectrum> {
    RicciSpectrum::new(vec![(-((d - 1) as f64), 1), (0.0, d - 1)])
}
