//! Homogeneous model spaces: finite products of constant-curvature factors,
//! their Ricci data, and exact geodesic-ball volumes.

use std::cell::RefCell;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_gk_breaks, ORACLE_ABS_TOL, ORACLE_REL_TOL};
use crate::sn::{conjugate_time, sn, sphere_area};

/// A constant-curvature factor: `R^n`, the round sphere or hyperbolic space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceFactor {
    pub dim: usize,
    pub curvature: f64,
}

impl SpaceFactor {
    pub fn new(dim: usize, curvature: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace(
                "factor dimension must be positive".into(),
            ));
        }
        if !curvature.is_finite() {
            return Err(Error::InvalidSpace(format!(
                "non-finite curvature {curvature}"
            )));
        }
        if dim == 1 && curvature != 0.0 {
            return Err(Error::InvalidSpace(
                "a one-dimensional factor must be flat".into(),
            ));
        }
        Ok(Self { dim, curvature })
    }

    pub fn flat(dim: usize) -> Self {
        Self {
            dim,
            curvature: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.dim, self.curvature).map(|_| ())
    }

    /// Radius of the cut locus for a sphere factor.
    pub fn cut_radius(&self) -> Option<f64> {
        if self.dim >= 2 {
            conjugate_time(self.curvature)
        } else {
            None
        }
    }

    /// Area of the geodesic sphere of radius `r` (zero past the cut locus).
    pub fn area(&self, r: f64) -> f64 {
        if self.dim == 1 {
            return 2.0;
        }
        sphere_area(self.dim - 1) * sn(self.curvature, r).powi(self.dim as i32 - 1)
    }

    /// Volume of the geodesic ball of radius `r`, saturating at the total
    /// volume of a sphere factor.
    pub fn volume(&self, r: f64) -> Result<f64> {
        self.volume_tol(r, ORACLE_ABS_TOL, ORACLE_REL_TOL)
    }

    fn volume_tol(&self, r: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
        if r <= 0.0 {
            return Ok(0.0);
        }
        let n = self.dim;
        let k = self.curvature;
        if n == 1 {
            return Ok(2.0 * r);
        }
        let omega = sphere_area(n - 1);
        if k == 0.0 {
            return Ok(omega * r.powi(n as i32) / n as f64);
        }
        let r = self.cut_radius().map_or(r, |c| r.min(c));
        if n == 2 {
            // 1 - cos x = 2 sin^2(x/2) and cosh x - 1 = 2 sinh^2(x/2) avoid cancellation.
            let s = k.abs().sqrt();
            let half = if k > 0.0 {
                (0.5 * s * r).sin()
            } else {
                (0.5 * s * r).sinh()
            };
            return Ok(omega * 2.0 * half * half / (s * s));
        }
        adaptive_gk_breaks(|tau| self.area(tau), &[0.0, r], abs_tol, rel_tol).map(|e| e.value)
    }
}

/// A product of constant-curvature factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProduct", into = "RawProduct")]
pub struct ProductSpace {
    factors: Vec<SpaceFactor>,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct RawProduct {
    factors: Vec<SpaceFactor>,
}

impl TryFrom<RawProduct> for ProductSpace {
    type Error = Error;
    fn try_from(raw: RawProduct) -> Result<Self> {
        ProductSpace::new(raw.factors)
    }
}

impl From<ProductSpace> for RawProduct {
    fn from(space: ProductSpace) -> Self {
        RawProduct {
            factors: space.factors,
        }
    }
}

impl ProductSpace {
    pub fn new(factors: Vec<SpaceFactor>) -> Result<Self> {
        for f in &factors {
            f.validate()?;
        }
        let dim = factors.iter().map(|f| f.dim).sum();
        if dim < 2 {
            return Err(Error::InvalidSpace(format!(
                "total dimension {dim} is below 2"
            )));
        }
        Ok(Self { factors, dim })
    }

    /// Shorthand for `H^n(k) x R^m` style products from `(dim, curvature)` pairs.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(n, k)| SpaceFactor {
                    dim: n,
                    curvature: k,
                })
                .collect(),
        )
    }

    pub fn factors(&self) -> &[SpaceFactor] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ricci_spectrum(&self) -> RicciSpectrum {
        let pairs = self
            .factors
            .iter()
            .map(|f| ((f.dim - 1) as f64 * f.curvature, f.dim))
            .collect();
        RicciSpectrum::new(pairs).expect("validated product space has a valid spectrum")
    }

    /// Curved factors in declaration order followed by all flat factors merged
    /// into a single Euclidean block.
    pub fn reduced_factors(&self) -> Vec<SpaceFactor> {
        let mut out: Vec<SpaceFactor> = Vec::new();
        let mut flat = 0;
        for f in &self.factors {
            if f.curvature == 0.0 {
                flat += f.dim;
            } else {
                out.push(*f);
            }
        }
        if flat > 0 {
            out.push(SpaceFactor::flat(flat));
        }
        out
    }
}

/// Eigenvalues of the Ricci form with multiplicities, sorted ascending with
/// equal values merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicciSpectrum {
    eigenvalues: Vec<(f64, usize)>,
    dim: usize,
}

impl RicciSpectrum {
    pub fn new(mut pairs: Vec<(f64, usize)>) -> Result<Self> {
        if pairs.iter().any(|p| p.1 == 0 || !p.0.is_finite()) {
            return Err(Error::arg(
                "spectrum needs finite eigenvalues with positive multiplicities",
            ));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, usize)> = Vec::with_capacity(pairs.len());
        for (v, m) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += m,
                _ => merged.push((v, m)),
            }
        }
        let dim = merged.iter().map(|p| p.1).sum();
        if dim < 2 {
            return Err(Error::arg(format!("spectrum dimension {dim} is below 2")));
        }
        Ok(Self {
            eigenvalues: merged,
            dim,
        })
    }

    /// Einstein spectrum `lambda * g` in dimension `d`.
    pub fn isotropic(dim: usize, lambda: f64) -> Result<Self> {
        Self::new(vec![(lambda, dim)])
    }

    pub fn eigenvalues(&self) -> &[(f64, usize)] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0].0
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1].0
    }

    pub fn is_isotropic(&self) -> bool {
        self.eigenvalues.len() == 1
    }

    pub fn scalar(&self) -> f64 {
        self.eigenvalues.iter().map(|&(v, m)| v * m as f64).sum()
    }

    /// `R_{mu nu} R^{mu nu}` for a diagonal Ricci form.
    pub fn ric2(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|&(v, m)| v * v * m as f64)
            .sum()
    }

    /// Diagonal of the Ricci form in an ascending eigenbasis.
    pub fn diagonal(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .flat_map(|&(v, m)| std::iter::repeat_n(v, m))
            .collect()
    }

    pub fn quadratic_form(&self, x: &Direction) -> Result<f64> {
        if x.components.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.components.len(),
            });
        }
        let value: f64 = self
            .diagonal()
            .iter()
            .zip(&x.components)
            .map(|(l, c)| l * c * c)
            .sum();
        Ok(value.clamp(self.min(), self.max()))
    }
}

/// A unit tangent vector expressed in the ascending Ricci eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    components: Vec<f64>,
}

impl Direction {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        let norm2: f64 = components.iter().map(|c| c * c).sum();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::arg(format!(
                "direction has squared norm {norm2}, expected 1"
            )));
        }
        Ok(Self { components })
    }

    pub fn normalized(mut components: Vec<f64>) -> Result<Self> {
        let norm = components.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::arg("cannot normalise a zero or non-finite vector"));
        }
        components.iter_mut().for_each(|c| *c /= norm);
        Ok(Self { components })
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }
}

pub fn ricci_spectrum(space: &ProductSpace) -> RicciSpectrum {
    space.ricci_spectrum()
}

pub fn scalar_curvature(spectrum: &RicciSpectrum) -> f64 {
    spectrum.scalar()
}

pub fn ricci_quadratic_form(spectrum: &RicciSpectrum, x: &Direction) -> Result<f64> {
    spectrum.quadratic_form(x)
}

/// Volume of the geodesic ball of radius `t` in a product space.
///
/// The ball splits into shells of the first curved factor times balls of the
/// remaining product: `vol(t) = int_0^t A_1(tau) V_rest(sqrt(t^2 - tau^2)) dtau`.
/// The substitution `tau = t sin(phi)` removes the square-root endpoint
/// singularity. Three or more blocks recurse.
pub fn exact_ball_volume(space: &ProductSpace, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::arg(format!("radius must be non-negative, got {t}")));
    }
    product_volume(&space.reduced_factors(), t, ORACLE_ABS_TOL, ORACLE_REL_TOL)
}

fn product_volume(blocks: &[SpaceFactor], t: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let (first, rest) = blocks.split_first().expect("at least one block");
    if rest.is_empty() {
        return first.volume_tol(t, abs_tol, rel_tol);
    }
    let mut breaks = vec![0.0];
    if let Some(c) = first.cut_radius().filter(|&c| c < t) {
        breaks.push((c / t).asin());
    }
    if let [only] = rest {
        if let Some(c) = only.cut_radius().filter(|&c| c < t) {
            breaks.push((c / t).acos());
        }
    }
    breaks.push(FRAC_PI_2);
    breaks.sort_by(f64::total_cmp);

    // Inner volumes are themselves quadratures for curved blocks; tighten
    // them so their noise stays below the outer tolerance.
    let failure = RefCell::new(None);
    let integrand = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let a = first.area(t * s);
        if a == 0.0 {
            return 0.0;
        }
        match product_volume(rest, t * c, abs_tol * 1e-2, rel_tol * 1e-2) {
            Ok(v) => a * v * t * c,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let est = adaptive_gk_breaks(integrand, &breaks, abs_tol, rel_tol)?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(est.value),
    }
}

/// Ball volume in the `d`-dimensional space of constant sectional curvature `k`.
pub fn model_ball_volume(d: usize, k: f64, t: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::arg(format!(
            "model space dimension must be at least 2, got {d}"
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::arg(format!("radius must be non-negative, got {t}")));
    }
    SpaceFactor::new(d, k)?.volume(t)
}
