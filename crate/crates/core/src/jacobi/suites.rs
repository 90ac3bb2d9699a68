//! Randomized trial suites over the Jacobi checks, each aggregated into one
//! report per property. Every suite draws from its own seeded streams.

use rand::Rng;

use super::checks::{
    product_average_check, two_impulse_solution, verify_late_start, verify_monotonicity,
    verify_shuffled_tot, verify_shuffling_powers, verify_sorting,
};
use super::family::ScheduleFamily;
use super::random::{trial_rng, ScheduleSampler};
use super::schedule::KappaSchedule;
use super::solver::JacobiState;
use crate::error::Result;
use crate::report::CheckReport;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub trials: u64,
    pub seed: u64,
    pub horizon: f64,
    pub step: f64,
}

impl TrialConfig {
    fn rng(&self, salt: u64, trial: u64) -> rand_chacha::ChaCha8Rng {
        trial_rng(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15), trial)
    }

    fn sampler(&self) -> ScheduleSampler {
        ScheduleSampler::new(self.horizon)
    }
}

/// Ordered random pairs: `kappa_1 >= kappa_2` implies `j_1 >= j_2`.
pub fn monotonicity_suite(cfg: &TrialConfig) -> Result<CheckReport> {
    let reports = (0..cfg.trials)
        .map(|trial| {
            let (hi, lo) = cfg.sampler().ordered_pair(&mut cfg.rng(1, trial));
            verify_monotonicity(&hi, &lo, cfg.horizon, cfg.step)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::aggregate("jacobi.monotonicity", reports))
}

/// Monotonicity from ordered states at a random later start time.
pub fn late_start_suite(cfg: &TrialConfig) -> Result<CheckReport> {
    let reports = (0..cfg.trials)
        .map(|trial| {
            let mut rng = cfg.rng(2, trial);
            let (hi, lo) = cfg.sampler().ordered_pair(&mut rng);
            let t0 = rng.random_range(0.1..0.5) * cfg.horizon;
            let j2 = rng.random_range(0.1..2.0);
            let j1 = j2 * rng.random_range(1.0..2.0);
            let u2 = rng.random_range(-2.0..2.0);
            let u1 = u2 + rng.random_range(0.0..1.0);
            let s1 = JacobiState {
                t: t0,
                j: j1,
                jprime: u1 * j1,
            };
            let s2 = JacobiState {
                t: t0,
                j: j2,
                jprime: u2 * j2,
            };
            verify_late_start(&hi, &lo, s1, s2, cfg.horizon, cfg.step)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::aggregate("jacobi.late-start", reports))
}

/// Max/min shuffling on random pairs, one report per power.
pub fn shuffling_suite(cfg: &TrialConfig, powers: &[f64]) -> Result<Vec<CheckReport>> {
    let mut by_power = vec![Vec::new(); powers.len()];
    let mut eras = [0usize; 4];
    for trial in 0..cfg.trials {
        let (k1, k2) = cfg.sampler().pair(&mut cfg.rng(3, trial));
        for (slot, r) in by_power.iter_mut().zip(verify_shuffling_powers(
            &k1,
            &k2,
            powers,
            cfg.horizon,
            cfg.step,
        )?) {
            for (count, seen) in eras.iter_mut().zip(r.eras) {
                *count += seen as usize;
            }
            slot.push(r.report);
        }
    }
    let note = format!("era coverage {eras:?}");
    Ok(powers
        .iter()
        .zip(by_power)
        .map(|(p, reports)| {
            CheckReport::aggregate(format!("jacobi.shuffling.p{p}"), reports).with_diagnostic(&note)
        })
        .collect())
}

/// Sorting families of two to six random schedules.
pub fn sorting_suite(cfg: &TrialConfig, powers: &[f64]) -> Result<CheckReport> {
    let sampler = cfg.sampler();
    let reports = (0..cfg.trials)
        .map(|trial| {
            let mut rng = cfg.rng(5, trial);
            let n = rng.random_range(2..=6);
            let members = (0..n).map(|_| sampler.schedule(&mut rng)).collect();
            verify_sorting(
                &ScheduleFamily::uniform(members, cfg.horizon)?,
                powers,
                cfg.step,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::aggregate("jacobi.sorting", reports))
}

/// Monotone families lose total under random measure-preserving shuffles.
pub fn tot_suite(cfg: &TrialConfig, powers: &[f64]) -> Result<CheckReport> {
    let sampler = cfg.sampler();
    let reports = (0..cfg.trials)
        .map(|trial| {
            let mut rng = cfg.rng(7, trial);
            let n = rng.random_range(2..=8);
            let cells = rng.random_range(2..=16);
            let impulses = rng.random_range(0..=2);
            let members = sampler.monotone_family(&mut rng, n, cells, impulses);
            let fam = ScheduleFamily::uniform(members, cfg.horizon)?;
            let shuffle = sampler.shuffle(&mut rng, n, cells);
            verify_shuffled_tot(&fam, shuffle, powers, cfg.step)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::aggregate("jacobi.tot", reports))
}

/// `j(A,B) + j(a,b) - j(A,b) - j(a,B) = (A-a)(B-b)(t-2)` for two impulses,
/// compared with exact equality on inputs that are multiples of 1/8 and at
/// times where all four solutions are still positive. The margin is the
/// largest absolute mismatch, negated.
pub fn two_impulse_identity_suite(trials: u64, seed: u64) -> CheckReport {
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for trial in 0..trials {
        let mut rng = trial_rng(seed ^ 0x7f4a_7c15, trial);
        let mut draw = || rng.random_range(-24i32..=24) as f64 / 8.0;
        let (a, b, aa, bb) = (draw(), draw(), draw(), draw());
        for m in 0..=16 {
            let t = 2.0 + m as f64 / 8.0;
            let j = |x, y| two_impulse_solution(x, y, t);
            let vals = [j(aa, bb), j(a, b), j(aa, b), j(a, bb)];
            if vals.iter().any(|v| *v <= 0.0) {
                continue;
            }
            let lhs = vals[0] + vals[1] - vals[2] - vals[3];
            worst = worst.max((lhs - (aa - a) * (bb - b) * (t - 2.0)).abs());
            points += 1;
        }
    }
    CheckReport::from_margin("jacobi.two-impulse-identity", trials as usize, 0.0 - worst)
        .with_diagnostic(format!("{points} pre-zero points compared exactly"))
}

/// Averaged coefficient beats the geometric mean on random constant families.
pub fn product_average_suite(cfg: &TrialConfig) -> Result<CheckReport> {
    let reports = (0..cfg.trials)
        .map(|trial| {
            let mut rng = cfg.rng(9, trial);
            let members = (0..4)
                .map(|_| KappaSchedule::constant(rng.random_range(-4.0..=4.0)))
                .collect();
            product_average_check(
                &ScheduleFamily::uniform(members, cfg.horizon)?,
                cfg.horizon,
                cfg.step,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::aggregate("jacobi.product-average", reports))
}
