//! Scalar Jacobi equations `j'' = kappa(t) j` with impulsive coefficients and
//! the stick-at-zero rule, plus families of such equations under shuffling.

pub mod checks;
pub mod family;
pub mod random;
pub mod schedule;
pub mod solver;
pub mod suites;

pub use checks::{
    product_average_check, two_impulse_solution, verify_coefficient_algebra, verify_late_start,
    verify_monotonicity, verify_shuffled_tot, verify_shuffling, verify_shuffling_powers,
    verify_sorting,
};
pub use family::{sort_family, tot_curve, tot_functional, ScheduleFamily, ShuffleStep};
pub use schedule::{merge_minmax, KappaSchedule};
pub use solver::{solve_jacobi, solve_jacobi_from, JacobiSolution, JacobiState};
