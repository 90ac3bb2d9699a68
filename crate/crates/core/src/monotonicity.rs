//! Derivative checks on sampled bound curves: `BG - eBG` and `eBG - volume`
//! grow, `BG / eBG` grows (with the Lambda quantity behind it), the
//! area-level version of the latter, and a probe of `eBG / volume`, which
//! is only conjectured to grow.

use serde::Serialize;

use crate::bounds::{bg_area, BoundCurve, EnhancedKernel};
use crate::error::{Error, Result};
use crate::model_spaces::RicciSpectrum;
use crate::report::{curve_scale, CheckReport, MARGIN_TOL};
use crate::sphere::SphereQuadrature;

/// Coarsest grid spacing accepted for finite differences.
pub const MAX_SPACING: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub check: String,
    pub grid: Vec<f64>,
    /// Normalised margins, one per grid point.
    pub margins: Vec<f64>,
    pub min_margin: f64,
    /// `None` for exploratory probes.
    pub pass: Option<bool>,
}

impl GapReport {
    fn proved(check: &str, grid: &[f64], margins: Vec<f64>) -> Self {
        let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            check: check.into(),
            grid: grid.to_vec(),
            pass: Some(min_margin >= -MARGIN_TOL),
            min_margin,
            margins,
        }
    }

    fn exploratory(check: &str, grid: &[f64], margins: Vec<f64>) -> Self {
        Self {
            pass: None,
            ..Self::proved(check, grid, margins)
        }
    }

    pub fn to_check(&self) -> CheckReport {
        match self.pass {
            Some(_) => CheckReport::from_margin(&self.check, self.grid.len(), self.min_margin),
            None => CheckReport::exploratory(&self.check, self.grid.len(), self.min_margin),
        }
    }
}

/// Second-order finite-difference derivative on a uniform grid: centred in
/// the interior, one-sided three-point stencils at both ends.
pub fn derivative(grid: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    if grid.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    if grid.len() < 3 {
        return Err(Error::arg("finite differences need at least three points"));
    }
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if grid
        .windows(2)
        .any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0))
        || h <= 0.0
    {
        return Err(Error::arg(
            "finite differences need a uniform ascending grid",
        ));
    }
    if h > MAX_SPACING + 1e-12 {
        return Err(Error::GridTooCoarse {
            spacing: h,
            limit: MAX_SPACING,
        });
    }
    let n = values.len();
    Ok((0..n)
        .map(|i| match i {
            0 => (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h),
            _ if i == n - 1 => {
                (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h)
            }
            _ => (values[i + 1] - values[i - 1]) / (2.0 * h),
        })
        .collect())
}

fn normalised(values: Vec<f64>, scale: f64) -> Vec<f64> {
    values.into_iter().map(|v| v / scale).collect()
}

/// Longest suffix of the grid on which every listed series is positive.
fn positive_suffix(series: &[&[f64]]) -> usize {
    let n = series[0].len();
    (0..n)
        .rev()
        .take_while(|&i| series.iter().all(|s| s[i] > 0.0))
        .count()
}

fn derivative_check(check: &str, grid: &[f64], diff: &[f64], scale: f64) -> Result<GapReport> {
    Ok(GapReport::proved(
        check,
        grid,
        normalised(derivative(grid, diff)?, scale),
    ))
}

/// `d/dt (BG - eBG) >= 0` and, when the volume is known, `d/dt (eBG - vol) >= 0`.
pub fn additive_gap_check(curve: &BoundCurve) -> Result<Vec<GapReport>> {
    let mut out = Vec::new();
    let mut series = vec![curve.bg.as_slice(), curve.ebg.as_slice()];
    if let Some(v) = &curve.volume {
        series.push(v);
    }
    let scale = curve_scale(series);
    let gap: Vec<f64> = curve
        .bg
        .iter()
        .zip(&curve.ebg)
        .map(|(b, e)| b - e)
        .collect();
    out.push(derivative_check(
        "bg-ebg.additive",
        &curve.times,
        &gap,
        scale,
    )?);
    if let Some(vol) = &curve.volume {
        let gap: Vec<f64> = curve.ebg.iter().zip(vol).map(|(e, v)| e - v).collect();
        out.push(derivative_check(
            "ebg-volume.additive",
            &curve.times,
            &gap,
            scale,
        )?);
    }
    Ok(out)
}

/// `d/dt (BG / eBG) >= 0` together with
/// `Lambda = BG'/BG * eBG - eBG' >= 0`, on the part of the grid where both
/// curves are positive.
pub fn multiplicative_gap_check(curve: &BoundCurve) -> Result<Vec<GapReport>> {
    let keep = positive_suffix(&[&curve.bg, &curve.ebg]);
    let start = curve.len() - keep;
    let (t, bg, ebg) = (
        &curve.times[start..],
        &curve.bg[start..],
        &curve.ebg[start..],
    );
    let ratio: Vec<f64> = bg.iter().zip(ebg).map(|(b, e)| b / e).collect();
    let d_ratio = derivative(t, &ratio)?;
    let ratio_scale = curve_scale([ratio.as_slice()]);
    let d_bg = derivative(t, bg)?;
    let d_ebg = derivative(t, ebg)?;
    let lambda: Vec<f64> = (0..t.len())
        .map(|i| d_bg[i] / bg[i] * ebg[i] - d_ebg[i])
        .collect();
    let lambda_scale = curve_scale([d_bg.as_slice(), d_ebg.as_slice()]);
    Ok(vec![
        GapReport::proved("bg-ebg.multiplicative", t, normalised(d_ratio, ratio_scale)),
        GapReport::proved("bg-ebg.lambda", t, normalised(lambda, lambda_scale)),
    ])
}

/// Area-level Lambda: `BGarea'/BGarea * eBGarea - eBGarea' >= 0` wherever
/// the BG area is positive, with derivatives from the sampled areas.
pub fn area_level_check(
    spectrum: &RicciSpectrum,
    grid: &[f64],
    quad: &SphereQuadrature,
) -> Result<GapReport> {
    let kernel = EnhancedKernel::new(spectrum, quad)?;
    let bg: Vec<f64> = grid.iter().map(|&t| bg_area(spectrum, t)).collect();
    let ebg: Vec<f64> = grid.iter().map(|&t| kernel.area(t)).collect();
    let d_bg = derivative(grid, &bg)?;
    let d_ebg = derivative(grid, &ebg)?;
    let scale = curve_scale([d_bg.as_slice(), d_ebg.as_slice()]);
    let (mut times, mut margins) = (Vec::new(), Vec::new());
    for i in 0..grid.len() {
        if bg[i] > 0.0 {
            times.push(grid[i]);
            margins.push((d_bg[i] / bg[i] * ebg[i] - d_ebg[i]) / scale);
        }
    }
    Ok(GapReport::proved("bg-ebg.area-lambda", &times, margins))
}

/// Minimum of `d/dt (eBG / vol)` where the volume is positive. Reported, not judged.
pub fn empirical_ratio_probe(curve: &BoundCurve) -> Result<GapReport> {
    let vol = curve
        .volume
        .as_ref()
        .ok_or_else(|| Error::arg("ratio probe needs the volume column"))?;
    let keep = positive_suffix(&[vol]);
    let start = curve.len() - keep;
    let t = &curve.times[start..];
    let ratio: Vec<f64> = curve.ebg[start..]
        .iter()
        .zip(&vol[start..])
        .map(|(e, v)| e / v)
        .collect();
    let scale = curve_scale([ratio.as_slice()]);
    Ok(GapReport::exploratory(
        "ebg-volume.ratio-probe",
        t,
        normalised(derivative(t, &ratio)?, scale),
    ))
}
