//! Post-processing checks on completed runs.

mod balance;
mod coercivity;
mod entropy;
mod report;
mod scaling;

pub use balance::{jump_bound_estimate, l2_balance, mass_report, BalanceTerms, JumpBound, MassReport};
pub use coercivity::{sc_coercivity_probe, CoercivityProbe, DENOMINATOR_FLOOR};
pub use entropy::{entropy_residual, kruzkov_flux, BumpTest, EntropyPair, MollifiedKruzkov, QuadraticEntropy};
pub use report::{DiagnosticsReport, ReportRow};
pub use scaling::{
    linf_check, residual_functional, residual_scaling, sup_norm, viscosity_functional, viscosity_scaling,
    LinfReport, ScalingFit, NEGLIGIBLE,
};

use crate::error::Result;
use crate::solver::{advance, ProblemSetup, RunState};

/// Runs `base` at every mesh resolution in `n_x`, coarsest first.
pub fn ladder(base: &ProblemSetup, n_x: &[usize]) -> Result<Vec<RunState>> {
    n_x.iter()
        .map(|&n| {
            let mut s = base.clone();
            s.n_x = n;
            advance(s)
        })
        .collect()
}
