//! Weighted families of schedules, step-function shuffles between them, and
//! the total functional `Tot(s, p) = sum_i w_i j_i(s)^p`.

use super::schedule::{merge_minmax, union_sorted, KappaSchedule};
use super::solver::{solve_jacobi, JacobiSolution};
use crate::error::{Error, Result};

const WEIGHT_TOL: f64 = 1e-12;

/// A permutation in force after `time`: trajectory `i` follows member `perm[i]`.
pub type ShuffleStep = (f64, Vec<usize>);

/// Members with probability weights, optionally shuffled in time.
///
/// A shuffle step `(p_k, perm_k)` is in force on `(p_k, p_{k+1}]`; before the
/// first step every trajectory follows its own member. Impulses sitting
/// exactly on a shuffle time therefore act under the earlier permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleFamily {
    members: Vec<KappaSchedule>,
    weights: Vec<f64>,
    shuffle: Vec<ShuffleStep>,
    horizon: f64,
}

impl ScheduleFamily {
    pub fn new(members: Vec<KappaSchedule>, weights: Vec<f64>, horizon: f64) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::arg("a family needs at least one member"));
        }
        if weights.len() != members.len() {
            return Err(Error::DimensionMismatch {
                expected: members.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0))
            || (weights.iter().sum::<f64>() - 1.0).abs() > WEIGHT_TOL
        {
            return Err(Error::arg(
                "family weights must be non-negative and sum to 1",
            ));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::arg(format!(
                "family horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self {
            members,
            weights,
            shuffle: Vec::new(),
            horizon,
        })
    }

    pub fn uniform(members: Vec<KappaSchedule>, horizon: f64) -> Result<Self> {
        let n = members.len().max(1);
        Self::new(members, vec![1.0 / n as f64; n], horizon)
    }

    /// Attach a shuffle. Times must increase strictly inside `[0, horizon)`,
    /// a step at time zero must be the identity, and every permutation must
    /// preserve the weight measure (only equal weights may be exchanged).
    pub fn with_shuffle(mut self, shuffle: Vec<ShuffleStep>) -> Result<Self> {
        let n = self.members.len();
        for w in shuffle.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::arg("shuffle times must be strictly increasing"));
            }
        }
        for (t, perm) in &shuffle {
            if !(*t >= 0.0 && *t < self.horizon) {
                return Err(Error::arg(format!("shuffle time {t} outside [0, horizon)")));
            }
            if perm.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: perm.len(),
                });
            }
            let mut seen = vec![false; n];
            for &m in perm {
                if m >= n || std::mem::replace(&mut seen[m], true) {
                    return Err(Error::arg(format!("shuffle at {t} is not a permutation")));
                }
            }
            if *t == 0.0 && perm.iter().enumerate().any(|(i, &m)| i != m) {
                return Err(Error::arg("the shuffle at time zero must be the identity"));
            }
            if perm
                .iter()
                .enumerate()
                .any(|(i, &m)| self.weights[i] != self.weights[m])
            {
                return Err(Error::arg(format!(
                    "shuffle at {t} does not preserve the weight measure"
                )));
            }
        }
        self.shuffle = shuffle;
        Ok(self)
    }

    pub fn members(&self) -> &[KappaSchedule] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn shuffle(&self) -> &[ShuffleStep] {
        &self.shuffle
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn has_uniform_weights(&self) -> bool {
        self.weights
            .iter()
            .all(|w| (w - self.weights[0]).abs() <= WEIGHT_TOL)
    }

    fn member_for(&self, trajectory: usize, t: f64, inclusive: bool) -> usize {
        let idx = self
            .shuffle
            .partition_point(|(p, _)| if inclusive { *p <= t } else { *p < t });
        match idx {
            0 => trajectory,
            k => self.shuffle[k - 1].1[trajectory],
        }
    }

    /// The schedule actually followed by each trajectory once the shuffle is
    /// applied.
    pub fn effective_schedules(&self) -> Result<Vec<KappaSchedule>> {
        if self.shuffle.is_empty() {
            return Ok(self.members.clone());
        }
        let starts = union_sorted(
            self.members
                .iter()
                .flat_map(|m| m.smooth().iter().map(|c| c.0))
                .chain(self.shuffle.iter().map(|s| s.0)),
        );
        let times = union_sorted(self.members.iter().flat_map(|m| m.impulse_times()));
        (0..self.len())
            .map(|i| {
                let smooth = starts
                    .iter()
                    .map(|&c| (c, self.members[self.member_for(i, c, true)].level_at(c)))
                    .collect();
                let impulses = times
                    .iter()
                    .map(|&s| (s, self.members[self.member_for(i, s, false)].impulse_at(s)))
                    .collect();
                KappaSchedule::new(smooth, impulses)
            })
            .collect()
    }

    pub fn solve(&self, step: f64) -> Result<Vec<JacobiSolution>> {
        self.effective_schedules()?
            .iter()
            .map(|k| solve_jacobi(k, self.horizon, step))
            .collect()
    }
}

/// Perfectly ordered family: trajectory `i` follows the `i`-th largest
/// coefficient at every instant. Built by odd-even transposition of pairwise
/// max/min merges, so it needs exchangeable (uniform) weights.
pub fn sort_family(family: &ScheduleFamily) -> Result<ScheduleFamily> {
    if !family.has_uniform_weights() {
        return Err(Error::arg("sorting a family requires uniform weights"));
    }
    let mut s = family.effective_schedules()?;
    let n = s.len();
    for round in 0..n {
        let mut i = round % 2;
        while i + 1 < n {
            let (hi, lo) = merge_minmax(&s[i], &s[i + 1]);
            s[i] = hi;
            s[i + 1] = lo;
            i += 2;
        }
    }
    ScheduleFamily::new(s, family.weights.clone(), family.horizon)
}

/// `sum_i w_i j_i^p` at every grid index of already computed solutions.
pub fn tot_curve(solutions: &[JacobiSolution], weights: &[f64], p: f64) -> Vec<f64> {
    let len = solutions.first().map_or(0, |s| s.j.len());
    (0..len)
        .map(|k| {
            solutions
                .iter()
                .zip(weights)
                .map(|(s, w)| w * s.j[k].powf(p))
                .sum()
        })
        .collect()
}

/// `Tot(s, p)` for the (possibly shuffled) family, solving up to `s`.
pub fn tot_functional(family: &ScheduleFamily, s: f64, p: f64, step: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::arg(format!("Tot needs 1 <= p < inf, got {p}")));
    }
    if !(s >= 0.0) || s > family.horizon {
        return Err(Error::arg(format!(
            "s = {s} lies outside [0, {}]",
            family.horizon
        )));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let step = step.min(s);
    family
        .effective_schedules()?
        .iter()
        .zip(&family.weights)
        .map(|(k, w)| Ok(w * solve_jacobi(k, s, step)?.last().powf(p)))
        .sum()
}
