//! Seeded generators for randomized schedule trials.
//!
//! Smooth levels are uniform in `[-4, 4]` and impulse weights uniform in
//! `[-3, 3]`. Every trial draws from its own ChaCha stream derived from the
//! run seed, so trials are reproducible and independent of execution order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::family::ShuffleStep;
use super::schedule::KappaSchedule;

pub const LEVEL_BOUND: f64 = 4.0;
pub const WEIGHT_BOUND: f64 = 3.0;

/// Independent generator for trial number `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Shape of random schedules on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSampler {
    pub horizon: f64,
    pub max_cells: usize,
    pub max_impulses: usize,
}

impl ScheduleSampler {
    pub fn new(horizon: f64) -> Self {
        Self {
            horizon,
            max_cells: 4,
            max_impulses: 3,
        }
    }

    fn sorted_times(&self, rng: &mut impl Rng, count: usize) -> Vec<f64> {
        let mut t: Vec<f64> = (0..count)
            .map(|_| rng.random_range(0.0..self.horizon))
            .filter(|t| *t > 0.0)
            .collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }

    /// Shared partition: cell starts (beginning with zero) and impulse times.
    pub fn partition(&self, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
        let cells = rng.random_range(1..=self.max_cells.max(1));
        let impulses = rng.random_range(0..=self.max_impulses);
        let mut starts = vec![0.0];
        starts.extend(self.sorted_times(rng, cells - 1));
        (starts, self.sorted_times(rng, impulses))
    }

    fn fill(rng: &mut impl Rng, starts: &[f64], times: &[f64]) -> KappaSchedule {
        let smooth = starts
            .iter()
            .map(|&t| (t, rng.random_range(-LEVEL_BOUND..=LEVEL_BOUND)))
            .collect();
        let impulses = times
            .iter()
            .map(|&t| (t, rng.random_range(-WEIGHT_BOUND..=WEIGHT_BOUND)))
            .collect();
        KappaSchedule::new(smooth, impulses).expect("generated schedule is valid")
    }

    pub fn schedule(&self, rng: &mut impl Rng) -> KappaSchedule {
        let (starts, times) = self.partition(rng);
        Self::fill(rng, &starts, &times)
    }

    /// Two unordered schedules on a shared partition, so that they cross.
    pub fn pair(&self, rng: &mut impl Rng) -> (KappaSchedule, KappaSchedule) {
        let (starts, times) = self.partition(rng);
        (
            Self::fill(rng, &starts, &times),
            Self::fill(rng, &starts, &times),
        )
    }

    /// `(hi, lo)` with `hi >= lo`: `hi` adds a non-negative random schedule
    /// (possibly with extra impulses of its own) to `lo`.
    pub fn ordered_pair(&self, rng: &mut impl Rng) -> (KappaSchedule, KappaSchedule) {
        let lo = self.schedule(rng);
        let (starts, mut times) = self.partition(rng);
        times.extend(lo.impulse_times());
        times.sort_by(f64::total_cmp);
        times.dedup();
        let smooth = starts
            .iter()
            .map(|&t| (t, rng.random_range(0.0..=LEVEL_BOUND)))
            .collect();
        let impulses = times
            .iter()
            .map(|&t| (t, rng.random_range(0.0..=WEIGHT_BOUND)))
            .collect();
        let bump = KappaSchedule::new(smooth, impulses).expect("generated schedule is valid");
        let hi =
            KappaSchedule::combine(&[&lo, &bump], |v| v[0] + v[1]).expect("sum of valid schedules");
        (hi, lo)
    }

    /// `n` members on a shared partition of `cells` cells, ranked the same
    /// way in every cell and at every impulse: member 0 largest.
    pub fn monotone_family(
        &self,
        rng: &mut impl Rng,
        n: usize,
        cells: usize,
        impulses: usize,
    ) -> Vec<KappaSchedule> {
        let mut starts = vec![0.0];
        starts.extend((1..cells).map(|c| self.horizon * c as f64 / cells as f64));
        let times = self.sorted_times(rng, impulses);
        let ranked = |rng: &mut ChaCha8Rng, bound: f64| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        };
        let mut local = ChaCha8Rng::seed_from_u64(rng.random());
        let levels: Vec<Vec<f64>> = starts
            .iter()
            .map(|_| ranked(&mut local, LEVEL_BOUND))
            .collect();
        let weights: Vec<Vec<f64>> = times
            .iter()
            .map(|_| ranked(&mut local, WEIGHT_BOUND))
            .collect();
        (0..n)
            .map(|i| {
                let smooth = starts
                    .iter()
                    .zip(&levels)
                    .map(|(&t, l)| (t, l[i]))
                    .collect();
                let imps = times
                    .iter()
                    .zip(&weights)
                    .map(|(&t, w)| (t, w[i]))
                    .collect();
                KappaSchedule::new(smooth, imps).expect("generated schedule is valid")
            })
            .collect()
    }

    /// Uniformly random permutations at `cells - 1` equally spaced times.
    pub fn shuffle(&self, rng: &mut impl Rng, n: usize, cells: usize) -> Vec<ShuffleStep> {
        (1..cells)
            .map(|c| {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(rng);
                (self.horizon * c as f64 / cells as f64, perm)
            })
            .collect()
    }
}
