//! Pass/fail records shared by every verification routine.

use serde::Serialize;

/// Normalised margin below which a proved inequality counts as violated.
pub const MARGIN_TOL: f64 = 1e-9;

/// Outcome of one named check.
///
/// `min_margin` is the smallest normalised slack `(lhs - rhs) / scale` seen;
/// `pass` is `None` when the check was skipped or is exploratory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    #[serde(rename = "name")]
    pub check: String,
    pub trials: usize,
    pub min_margin: Option<f64>,
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl CheckReport {
    pub fn from_margin(check: impl Into<String>, trials: usize, min_margin: f64) -> Self {
        Self {
            check: check.into(),
            trials,
            min_margin: Some(min_margin),
            pass: Some(min_margin >= -MARGIN_TOL),
            diagnostics: Vec::new(),
        }
    }

    pub fn skipped(check: impl Into<String>, why: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            trials: 0,
            min_margin: None,
            pass: None,
            diagnostics: vec![why.into()],
        }
    }

    pub fn exploratory(check: impl Into<String>, trials: usize, min_margin: f64) -> Self {
        Self {
            pass: None,
            ..Self::from_margin(check, trials, min_margin)
        }
    }

    pub fn with_diagnostic(mut self, note: impl Into<String>) -> Self {
        self.diagnostics.push(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.pass == Some(true)
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }

    /// Fold many trial reports into one: trials add up, margins take the
    /// minimum, and the result fails if any trial failed. Skipped trials are
    /// counted in a diagnostic rather than as passes.
    pub fn aggregate(
        check: impl Into<String>,
        reports: impl IntoIterator<Item = CheckReport>,
    ) -> Self {
        let mut out = Self {
            check: check.into(),
            trials: 0,
            min_margin: None,
            pass: None,
            diagnostics: Vec::new(),
        };
        let mut skipped = 0;
        for r in reports {
            match r.pass {
                None if r.min_margin.is_none() => skipped += 1,
                _ => {}
            }
            out.trials += r.trials.max(1);
            if let Some(m) = r.min_margin {
                out.min_margin = Some(out.min_margin.map_or(m, |cur: f64| cur.min(m)));
            }
            out.pass = match (out.pass, r.pass) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (_, Some(true)) => Some(true),
                (p, None) => p,
            };
            for d in r.diagnostics {
                if !out.diagnostics.contains(&d) && out.diagnostics.len() < 8 {
                    out.diagnostics.push(d);
                }
            }
        }
        if skipped > 0 {
            out.diagnostics.push(format!("{skipped} trial(s) skipped"));
        }
        out
    }
}

/// Largest absolute value across the given series, floored to avoid
/// dividing by zero on identically vanishing curves.
pub fn curve_scale<'a>(series: impl IntoIterator<Item = &'a [f64]>) -> f64 {
    series
        .into_iter()
        .flat_map(|s| s.iter())
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}

/// `min_k (lhs_k - rhs_k) / scale` with `scale` the joint magnitude of both series.
pub fn min_normalized_margin(lhs: &[f64], rhs: &[f64]) -> f64 {
    let scale = curve_scale([lhs, rhs]);
    lhs.iter()
        .zip(rhs)
        .map(|(a, b)| (a - b) / scale)
        .fold(f64::INFINITY, f64::min)
}
