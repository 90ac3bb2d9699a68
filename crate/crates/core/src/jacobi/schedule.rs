//! Coefficient schedules `kappa(t)`: a piecewise-constant part plus Dirac
//! impulses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `kappa(t) = level(t) + sum_i w_i delta(t - s_i)`.
///
/// `smooth` lists `(t_start, level)` cells; each level holds on
/// `[t_start, next_start)` and the last one forever. The canonical form
/// starts at zero, never repeats a level in adjacent cells, and drops
/// zero-weight impulses, so equal functions compare equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct KappaSchedule {
    smooth: Vec<(f64, f64)>,
    impulses: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RawSchedule {
    #[serde(default)]
    smooth: Vec<(f64, f64)>,
    #[serde(default)]
    impulses: Vec<(f64, f64)>,
}

impl TryFrom<RawSchedule> for KappaSchedule {
    type Error = Error;
    fn try_from(raw: RawSchedule) -> Result<Self> {
        KappaSchedule::new(raw.smooth, raw.impulses)
    }
}

impl From<KappaSchedule> for RawSchedule {
    fn from(s: KappaSchedule) -> Self {
        RawSchedule {
            smooth: s.smooth,
            impulses: s.impulses,
        }
    }
}

impl KappaSchedule {
    pub fn new(smooth: Vec<(f64, f64)>, impulses: Vec<(f64, f64)>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidSchedule(msg));
        if let Some(&(t0, _)) = smooth.first() {
            if t0 != 0.0 {
                return bad(format!("smooth part must start at t = 0, starts at {t0}"));
            }
        }
        for w in smooth.windows(2) {
            if !(w[1].0 > w[0].0) {
                return bad("smooth cell starts must be strictly increasing".into());
            }
        }
        if let Some(&(t, v)) = smooth
            .iter()
            .find(|(t, v)| !t.is_finite() || !v.is_finite())
        {
            return bad(format!("non-finite smooth cell ({t}, {v})"));
        }
        for w in impulses.windows(2) {
            if !(w[1].0 > w[0].0) {
                return bad("impulse times must be strictly increasing".into());
            }
        }
        if let Some(&(t, a)) = impulses
            .iter()
            .find(|(t, a)| !(*t > 0.0) || !t.is_finite() || !a.is_finite())
        {
            return bad(format!(
                "impulse ({t}, {a}) needs a finite positive time and finite weight"
            ));
        }

        let mut cells: Vec<(f64, f64)> = Vec::with_capacity(smooth.len().max(1));
        for (t, v) in smooth {
            if cells.last().is_none_or(|last| last.1 != v) {
                cells.push((t, v));
            }
        }
        if cells.is_empty() {
            cells.push((0.0, 0.0));
        }
        let impulses = impulses.into_iter().filter(|(_, a)| *a != 0.0).collect();
        Ok(Self {
            smooth: cells,
            impulses,
        })
    }

    pub fn constant(level: f64) -> Self {
        Self::new(vec![(0.0, level)], vec![]).expect("finite constant")
    }

    pub fn from_impulses(impulses: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(vec![], impulses)
    }

    pub fn smooth(&self) -> &[(f64, f64)] {
        &self.smooth
    }

    pub fn impulses(&self) -> &[(f64, f64)] {
        &self.impulses
    }

    /// Smooth level in force on the cell containing `t`.
    pub fn level_at(&self, t: f64) -> f64 {
        let idx = self.smooth.partition_point(|&(s, _)| s <= t);
        self.smooth[idx.saturating_sub(1)].1
    }

    /// Weight of the impulse at exactly `t`, zero if none.
    pub fn impulse_at(&self, t: f64) -> f64 {
        self.impulses
            .binary_search_by(|(s, _)| s.total_cmp(&t))
            .map_or(0.0, |i| self.impulses[i].1)
    }

    /// Interior cell boundaries of the smooth part.
    pub fn edges(&self) -> impl Iterator<Item = f64> + '_ {
        self.smooth.iter().skip(1).map(|c| c.0)
    }

    pub fn impulse_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.impulses.iter().map(|c| c.0)
    }

    /// Pointwise combination over the common refinement of several schedules:
    /// levels combine cell by cell and impulse weights time by time, with a
    /// missing impulse counting as weight zero.
    pub fn combine<F: Fn(&[f64]) -> f64>(schedules: &[&KappaSchedule], f: F) -> Result<Self> {
        let starts = union_sorted(schedules.iter().flat_map(|s| s.smooth.iter().map(|c| c.0)));
        let times = union_sorted(schedules.iter().flat_map(|s| s.impulse_times()));
        let mut buf = vec![0.0; schedules.len()];
        let mut eval = |g: &dyn Fn(&KappaSchedule) -> f64| {
            for (b, s) in buf.iter_mut().zip(schedules) {
                *b = g(s);
            }
            f(&buf)
        };
        let smooth = starts
            .iter()
            .map(|&t| (t, eval(&|s| s.level_at(t))))
            .collect();
        let impulses = times
            .iter()
            .map(|&t| (t, eval(&|s| s.impulse_at(t))))
            .collect();
        Self::new(smooth, impulses)
    }

    /// `self >= other` as measures: every cell level and every impulse weight.
    pub fn dominates(&self, other: &KappaSchedule) -> bool {
        self.dominates_after(other, 0.0)
    }

    /// Domination restricted to `t >= start` (impulses strictly after `start`).
    pub fn dominates_after(&self, other: &KappaSchedule, start: f64) -> bool {
        let Ok(diff) = Self::combine(&[self, other], |v| v[0] - v[1]) else {
            return false;
        };
        let cells_ok = diff.smooth.iter().enumerate().all(|(i, &(_, v))| {
            let end = diff.smooth.get(i + 1).map_or(f64::INFINITY, |c| c.0);
            end <= start || v >= 0.0
        });
        cells_ok && diff.impulses.iter().all(|&(t, a)| t <= start || a >= 0.0)
    }

    /// Largest absolute smooth level.
    pub fn sup_level(&self) -> f64 {
        self.smooth.iter().map(|c| c.1.abs()).fold(0.0, f64::max)
    }
}

pub(crate) fn union_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Pointwise maximum and minimum of two schedules on their common refinement.
/// `kmax + kmin = k1 + k2` holds exactly.
pub fn merge_minmax(k1: &KappaSchedule, k2: &KappaSchedule) -> (KappaSchedule, KappaSchedule) {
    let hi = KappaSchedule::combine(&[k1, k2], |v| v[0].max(v[1])).expect("max of valid schedules");
    let lo = KappaSchedule::combine(&[k1, k2], |v| v[0].min(v[1])).expect("min of valid schedules");
    (hi, lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn imp(v: &[(f64, f64)]) -> KappaSchedule {
        KappaSchedule::from_impulses(v.to_vec()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(KappaSchedule::new(vec![(0.5, 1.0)], vec![]).is_err());
        assert!(KappaSchedule::new(vec![(0.0, f64::NAN)], vec![]).is_err());
        assert!(KappaSchedule::new(vec![(0.0, 1.0), (0.0, 2.0)], vec![]).is_err());
        assert!(imp(&[(1.0, 1.0)]).impulses().len() == 1);
        assert!(KappaSchedule::from_impulses(vec![(0.0, 1.0)]).is_err());
        assert!(KappaSchedule::from_impulses(vec![(2.0, 1.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn canonical_form() {
        let a =
            KappaSchedule::new(vec![(0.0, 1.0), (1.0, 1.0), (2.0, 3.0)], vec![(1.0, 0.0)]).unwrap();
        assert_eq!(a.smooth(), &[(0.0, 1.0), (2.0, 3.0)]);
        assert!(a.impulses().is_empty());
        assert_eq!(a.level_at(0.0), 1.0);
        assert_eq!(a.level_at(1.99), 1.0);
        assert_eq!(a.level_at(2.0), 3.0);
        assert_eq!(a.level_at(50.0), 3.0);
    }

    #[test]
    fn merge_of_crossed_impulses() {
        let k1 = imp(&[(1.0, 1.0), (2.0, -1.0)]);
        let k2 = imp(&[(1.0, -1.0), (2.0, 1.0)]);
        let (hi, lo) = merge_minmax(&k1, &k2);
        assert_eq!(hi, imp(&[(1.0, 1.0), (2.0, 1.0)]));
        assert_eq!(lo, imp(&[(1.0, -1.0), (2.0, -1.0)]));
    }

    #[test]
    fn merge_of_equal_and_constant_schedules() {
        let k = KappaSchedule::new(vec![(0.0, 1.0), (0.5, -2.0)], vec![(0.7, 3.0)]).unwrap();
        assert_eq!(merge_minmax(&k, &k), (k.clone(), k.clone()));
        let (hi, lo) = merge_minmax(
            &KappaSchedule::constant(3.0),
            &KappaSchedule::constant(-1.0),
        );
        assert_eq!(hi, KappaSchedule::constant(3.0));
        assert_eq!(lo, KappaSchedule::constant(-1.0));
    }

    #[test]
    fn domination() {
        let a = KappaSchedule::new(vec![(0.0, 1.0), (1.0, -1.0)], vec![(0.5, 1.0)]).unwrap();
        let b = KappaSchedule::new(vec![(0.0, 0.0), (1.0, -2.0)], vec![]).unwrap();
        assert!(a.dominates(&b));
        assert!(!b.dominates(&a));
        let c = KappaSchedule::new(vec![(0.0, 5.0), (1.0, -2.0)], vec![]).unwrap();
        assert!(!b.dominates(&c));
        assert!(b.dominates_after(&c, 1.0));
    }

    #[test]
    fn serde_round_trip() {
        let k = KappaSchedule::new(vec![(0.0, 1.0), (0.5, -2.0)], vec![(0.7, 3.0)]).unwrap();
        let json = serde_json::to_string(&k).unwrap();
        assert_eq!(
            json,
            r#"{"smooth":[[0.0,1.0],[0.5,-2.0]],"impulses":[[0.7,3.0]]}"#
        );
        let back: KappaSchedule = serde_json::from_str(&json).unwrap();
        assert_eq!(back, k);
        assert!(serde_json::from_str::<KappaSchedule>(r#"{"impulses":[[-1.0,1.0]]}"#).is_err());
    }
}
