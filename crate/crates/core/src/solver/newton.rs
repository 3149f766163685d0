//! Damped Newton inside Picard sweeps on the lagged viscosity.

use crate::error::{Error, Result};
use crate::fluxes::NumericalFlux;
use crate::shock_capturing::{slab_viscosity, ViscosityParams};

use super::assembly::{assemble_jacobian, assemble_residual, FormInputs};
use super::space::{DGSolution, InflowTrace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Target for the residual infinity-norm.
    pub abs_tol: f64,
    pub max_iter: usize,
    /// Smallest backtracking step before giving up.
    pub min_step: f64,
    pub picard_sweeps: usize,
    /// Relative viscosity change below which the Picard loop stops early.
    pub picard_tol: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings { abs_tol: 1e-10, max_iter: 50, min_step: 2f64.powi(-10), picard_sweeps: 3, picard_tol: 1e-8 }
    }
}

impl NewtonSettings {
    pub fn validated(self) -> Result<Self> {
        if !(self.abs_tol > 0.0) || self.max_iter == 0 || !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return Err(Error::arg(format!("invalid Newton settings {self:?}")));
        }
        if self.picard_sweeps == 0 {
            return Err(Error::arg("picard.sweeps must be at least 1"));
        }
        Ok(self)
    }
}

/// Converged slab together with the viscosity it was solved with.
#[derive(Debug, Clone)]
pub struct SlabSolve {
    pub solution: DGSolution,
    /// Frozen viscosity of the final Newton solve; the residual vanishes for
    /// exactly these values.
    pub viscosity: Vec<f64>,
    pub newton_iterations: usize,
    pub picard_sweeps: usize,
    pub residual_norm: f64,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton iteration with the viscosity frozen. Returns the iteration count
/// and final residual norm, or the residual history on failure.
pub fn newton(
    u: &mut DGSolution,
    inputs: &FormInputs,
    settings: &NewtonSettings,
) -> std::result::Result<(usize, f64), Vec<f64>> {
    let mut r = assemble_residual(u, inputs);
    let mut norm = inf_norm(&r);
    let mut history = vec![norm];
    for it in 0..settings.max_iter {
        if norm <= settings.abs_tol {
            return Ok((it, norm));
        }
        if !norm.is_finite() {
            return Err(history);
        }
        let lu = match assemble_jacobian(u, inputs).to_band().factorize() {
            Ok(lu) => lu,
            Err(_) => return Err(history),
        };
        let mut delta = r.clone();
        lu.solve_in_place(&mut delta);
        let base = u.coeffs.clone();
        let mut step = 1.0;
        loop {
            for (c, (b, d)) in u.coeffs.iter_mut().zip(base.iter().zip(&delta)) {
                *c = b - step * d;
            }
            let trial = assemble_residual(u, inputs);
            let tnorm = inf_norm(&trial);
            // Full steps are always taken once near the tolerance, where
            // roundoff makes the decrease test meaningless.
            if tnorm < norm || (step == 1.0 && tnorm <= 10.0 * settings.abs_tol) {
                r = trial;
                norm = tnorm;
                break;
            }
            step *= 0.5;
            if step < settings.min_step {
                u.coeffs = base;
                return Err(history);
            }
        }
        history.push(norm);
    }
    if norm <= settings.abs_tol {
        Ok((settings.max_iter, norm))
    } else {
        Err(history)
    }
}

/// Solves one slab from `guess`, updating the viscosity between sweeps.
pub fn solve_slab(
    guess: DGSolution,
    inflow: &InflowTrace,
    flux: &NumericalFlux,
    params: Option<&ViscosityParams>,
    settings: &NewtonSettings,
    slab: usize,
) -> Result<SlabSolve> {
    let mut u = guess;
    let n = u.space.n_elements();
    let mut eps = match params {
        Some(p) => slab_viscosity(&u, inflow, &flux.flux, p),
        None => vec![0.0; n],
    };
    let mut total_iters = 0;
    let sweeps = if params.is_some() { settings.picard_sweeps } else { 1 };
    for sweep in 1..=sweeps {
        let inputs = FormInputs { flux, inflow, viscosity: &eps };
        let (iters, norm) =
            newton(&mut u, &inputs, settings).map_err(|history| Error::NonConvergence { slab, history })?;
        total_iters += iters;
        let done = |eps: Vec<f64>, sweep| SlabSolve {
            solution: u.clone(),
            viscosity: eps,
            newton_iterations: total_iters,
            picard_sweeps: sweep,
            residual_norm: norm,
        };
        let Some(p) = params else { return Ok(done(eps, sweep)) };
        if sweep == sweeps {
            return Ok(done(eps, sweep));
        }
        let next = slab_viscosity(&u, inflow, &flux.flux, p);
        let scale = inf_norm(&eps).max(inf_norm(&next));
        let change = eps.iter().zip(&next).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if change <= settings.picard_tol * scale {
            return Ok(done(eps, sweep));
        }
        eps = next;
    }
    unreachable!("at least one Picard sweep")
}
