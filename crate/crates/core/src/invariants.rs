//! Quadratic curvature invariants and exact small-ball series coefficients.
//!
//! Every series is `vol = (Omega_{d-1}/d) t^d (1 + c2 t^2 + c4 t^4 + ...)`
//! with rational `c2`, `c4`. Homogeneous spaces have `box R = 0`, which is
//! the default.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model_spaces::ProductSpace;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn qi(n: usize) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Exact rational value of a double.
pub fn q_from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::arg(format!("{x} has no rational value")))
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `R`, `Ric.Ric`, `Riem.Riem` and their split into the traceful (`s2`),
/// traceless-Ricci (`e2`) and Weyl (`c2`) squares.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannInvariants {
    pub d: usize,
    pub r: Q,
    pub ric2: Q,
    pub riem2: Q,
    pub s2: Q,
    pub e2: Q,
    pub c2: Q,
    pub box_r: Q,
}

pub fn decompose(d: usize, r: Q, ric2: Q, riem2: Q) -> Result<RiemannInvariants> {
    if d < 3 {
        return Err(Error::arg(format!("decomposition needs d >= 3, got {d}")));
    }
    let dq = qi(d);
    let one = Q::one();
    let s2 = Q::from_integer(2.into()) * &r * &r / (&dq * (&dq - &one));
    let dm2 = &dq - Q::from_integer(2.into());
    let e2 = qi(4) * &ric2 / &dm2 - qi(4) * &r * &r / (&dq * &dm2);
    let c2 = &riem2 - qi(4) * &ric2 / &dm2 + qi(2) * &r * &r / ((&dq - &one) * &dm2);
    Ok(RiemannInvariants {
        d,
        r,
        ric2,
        riem2,
        s2,
        e2,
        c2,
        box_r: Q::zero(),
    })
}

impl RiemannInvariants {
    /// Invariants of a product of constant-curvature factors, summed per
    /// factor: `R += n(n-1)k`, `ric2 += n(n-1)^2 k^2`, `riem2 += 2n(n-1)k^2`.
    pub fn for_factors(factors: &[(usize, Q)]) -> Result<Self> {
        let (mut r, mut ric2, mut riem2) = (Q::zero(), Q::zero(), Q::zero());
        let mut d = 0;
        for (n, k) in factors {
            let n = *n;
            d += n;
            if n < 2 {
                continue;
            }
            let nn = qi(n * (n - 1));
            r += &nn * k;
            ric2 += &nn * qi(n - 1) * k * k;
            riem2 += qi(2) * &nn * k * k;
        }
        decompose(d, r, ric2, riem2)
    }

    pub fn for_space(space: &ProductSpace) -> Result<Self> {
        let factors = space
            .factors()
            .iter()
            .map(|f| Ok((f.dim, q_from_f64(f.curvature)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::for_factors(&factors)
    }

    pub fn with_box_r(mut self, box_r: Q) -> Self {
        self.box_r = box_r;
        self
    }
}

/// Smallest Ricci eigenvalue of a product space, exactly.
pub fn lambda_min(space: &ProductSpace) -> Result<Q> {
    let mut out: Option<Q> = None;
    for f in space.factors() {
        let lam = qi(f.dim - 1) * q_from_f64(f.curvature)?;
        out = Some(match out {
            Some(m) if m <= lam => m,
            _ => lam,
        });
    }
    out.ok_or_else(|| Error::arg("empty space"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesKind {
    Volume,
    Bg,
    Ebg,
    HOfR,
}

impl SeriesKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesKind::Volume => "volume",
            SeriesKind::Bg => "bg",
            SeriesKind::Ebg => "ebg",
            SeriesKind::HOfR => "h-of-r",
        }
    }
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeriesKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volume" | "gray" => Ok(SeriesKind::Volume),
            "bg" => Ok(SeriesKind::Bg),
            "ebg" => Ok(SeriesKind::Ebg),
            "h-of-r" | "hr" => Ok(SeriesKind::HOfR),
            _ => Err(Error::Unknown {
                what: "series kind",
                name: s.to_string(),
            }),
        }
    }
}

fn ser_q<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", x.numer(), x.denom()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallBallSeries {
    pub d: usize,
    pub kind: SeriesKind,
    #[serde(serialize_with = "ser_q")]
    pub c2: Q,
    #[serde(serialize_with = "ser_q")]
    pub c4: Q,
}

/// Series of the true volume.
pub fn gray_series(inv: &RiemannInvariants) -> SmallBallSeries {
    let d = qi(inv.d);
    let c2 = -&inv.r / (qi(6) * (&d + qi(2)));
    let num =
        qi(5) * &inv.r * &inv.r + qi(8) * &inv.ric2 - qi(3) * &inv.riem2 - qi(18) * &inv.box_r;
    let c4 = num / (qi(360) * (&d + qi(2)) * (&d + qi(4)));
    SmallBallSeries {
        d: inv.d,
        kind: SeriesKind::Volume,
        c2,
        c4,
    }
}

/// Series of a comparison volume. `lambda_min` is needed only for BG.
pub fn bound_series(
    kind: SeriesKind,
    inv: &RiemannInvariants,
    lambda_min: Option<&Q>,
) -> Result<SmallBallSeries> {
    let dn = inv.d;
    let d = qi(dn);
    let dm1 = &d - Q::one();
    let five_d_7 = qi(5) * &d - qi(7);
    let (c2, c4) = match kind {
        SeriesKind::Volume => return Ok(gray_series(inv)),
        SeriesKind::Bg => {
            let lam = lambda_min
                .ok_or_else(|| Error::arg("BG series needs the smallest Ricci eigenvalue"))?;
            let c2 = -&d * lam / (qi(6) * (&d + qi(2)));
            let c4 = &d * &five_d_7 * lam * lam / (qi(360) * &dm1 * (&d + qi(4)));
            (c2, c4)
        }
        SeriesKind::Ebg => {
            let c2 = -&inv.r / (qi(6) * (&d + qi(2)));
            let c4 = &five_d_7 * (&inv.r * &inv.r + qi(2) * &inv.ric2)
                / (qi(360) * &dm1 * (&d + qi(2)) * (&d + qi(4)));
            (c2, c4)
        }
        SeriesKind::HOfR => {
            let c2 = -&inv.r / (qi(6) * (&d + qi(2)));
            let c4 = &five_d_7 * &inv.r * &inv.r / (qi(360) * &dm1 * &d * (&d + qi(4)));
            (c2, c4)
        }
    };
    Ok(SmallBallSeries {
        d: dn,
        kind,
        c2,
        c4,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapPair {
    /// `c4(eBG) - c4(volume)`; never negative.
    EbgMinusVolume,
    /// `c4(volume) - c4(H[R])`; either sign.
    VolumeMinusHOfR,
}

/// `t^4` gap coefficient written through `E^2` and `C^2` (homogeneous case).
pub fn series_gap(pair: GapPair, inv: &RiemannInvariants) -> Q {
    let d = qi(inv.d);
    let dm1 = &d - Q::one();
    match pair {
        GapPair::EbgMinusVolume => {
            (&d * (&d + Q::one()) * &inv.e2 + qi(6) * &dm1 * &inv.c2)
                / (qi(720) * &dm1 * (&d + qi(2)) * (&d + qi(4)))
        }
        GapPair::VolumeMinusHOfR => {
            ((qi(2) * &d - qi(7)) * &inv.e2 - qi(3) * &inv.c2)
                / (qi(360) * (&d + qi(2)) * (&d + qi(4)))
        }
    }
}

/// Least-squares fit of `c2`, `c4` (with a `c6` nuisance term) from volumes
/// `vols[i]` at radii `ts[i]`, normalised by the flat volume.
pub fn fit_series(d: usize, ts: &[f64], vols: &[f64]) -> Result<(f64, f64)> {
    if ts.len() != vols.len() || ts.len() < 3 {
        return Err(Error::arg(
            "series fit needs at least three matching samples",
        ));
    }
    let flat = crate::sn::sphere_area(d - 1) / d as f64;
    let a = nalgebra::DMatrix::from_fn(ts.len(), 3, |i, j| ts[i].powi(2 * (j as i32 + 1)));
    let b = nalgebra::DVector::from_iterator(
        ts.len(),
        ts.iter()
            .zip(vols)
            .map(|(t, v)| v / (flat * t.powi(d as i32)) - 1.0),
    );
    let sol = a.svd(true, true).solve(&b, 1e-300).map_err(Error::arg)?;
    Ok((sol[0], sol[1]))
}

/// `|x|` relative to `|y|`, for comparing fitted and exact coefficients.
pub fn relative_gap(x: f64, y: &Q) -> f64 {
    let yf = q_to_f64(y);
    if y.is_zero() {
        x.abs()
    } else {
        (x - yf).abs() / yf.abs()
    }
}

pub fn is_nonnegative(x: &Q) -> bool {
    !x.is_negative()
}
