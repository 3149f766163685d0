//! Reference entropy solutions: exact Burgers Riemann solutions and a
//! first-order Godunov finite-volume solver.

use crate::error::{Error, Result};
use crate::fluxes::{FluxFunction, FluxKind, NumericalFlux};
use crate::polynomials::segment_rule;
use crate::solver::DGSolution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannProblem {
    pub left: f64,
    pub right: f64,
    pub x0: f64,
}

/// Entropy solution of Burgers' equation `u_t + (u^2/2)_x = 0`.
pub fn exact_burgers_riemann(rp: &RiemannProblem, t: f64, x: f64) -> f64 {
    let (a, b) = (rp.left, rp.right);
    if t <= 0.0 {
        return if x < rp.x0 { a } else { b };
    }
    let xi = (x - rp.x0) / t;
    if a > b {
        if xi < 0.5 * (a + b) {
            a
        } else {
            b
        }
    } else {
        xi.clamp(a, b)
    }
}

/// The (entropy-violating, for `left < right`) discontinuity travelling at
/// the Rankine-Hugoniot speed.
pub fn burgers_rh_shock(rp: &RiemannProblem, t: f64, x: f64) -> f64 {
    if x - rp.x0 < 0.5 * (rp.left + rp.right) * t {
        rp.left
    } else {
        rp.right
    }
}

/// Cell averages of a finite-volume solution on a uniform grid.
#[derive(Debug, Clone)]
pub struct FvGrid {
    pub x_left: f64,
    pub x_right: f64,
    pub values: Vec<f64>,
    pub cfl: f64,
}

impl FvGrid {
    pub fn dx(&self) -> f64 {
        (self.x_right - self.x_left) / self.values.len() as f64
    }

    /// Piecewise-constant reconstruction.
    pub fn eval(&self, x: f64) -> f64 {
        let i = ((x - self.x_left) / self.dx()).floor().max(0.0) as usize;
        self.values[i.min(self.values.len() - 1)]
    }
}

/// Forward-Euler Godunov scheme with transmissive ghost cells, marched to
/// `t_final` with `dt = cfl dx / max|f'|`.
pub fn fv_solve<F: Fn(f64) -> f64>(
    flux: &FluxFunction,
    u0: F,
    (x_left, x_right): (f64, f64),
    cells: usize,
    t_final: f64,
    cfl: f64,
) -> Result<FvGrid> {
    if !(cfl > 0.0 && cfl <= 0.5) {
        return Err(Error::arg(format!("CFL number {cfl} must lie in (0, 0.5]")));
    }
    if cells == 0 || !(x_left < x_right) || !(t_final >= 0.0) {
        return Err(Error::arg("invalid finite-volume grid"));
    }
    let dx = (x_right - x_left) / cells as f64;
    let rule = segment_rule(15)?;
    let mut u: Vec<f64> = (0..cells)
        .map(|i| {
            let a = x_left + i as f64 * dx;
            rule.iter().map(|(s, w)| w * u0(a + s * dx)).sum()
        })
        .collect();
    let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    // The scheme is monotone, so the data range bounds every later state.
    let speed = (0..=256)
        .map(|k| flux.df(lo + (hi - lo) * k as f64 / 256.0).abs())
        .fold(0.0_f64, f64::max)
        .max(1e-12);
    let h = NumericalFlux::new(FluxKind::Godunov, flux.clone());
    let nu = [0.0, 1.0];
    let mut t = 0.0;
    let mut fluxes = vec![0.0; cells + 1];
    while t < t_final {
        let dt = (cfl * dx / speed).min(t_final - t);
        for (i, fl) in fluxes.iter_mut().enumerate() {
            let a = u[i.saturating_sub(1)];
            let b = u[i.min(cells - 1)];
            *fl = h.eval(a, b, nu)?;
        }
        for i in 0..cells {
            u[i] -= dt / dx * (fluxes[i + 1] - fluxes[i]);
        }
        t += dt;
    }
    Ok(FvGrid { x_left, x_right, values: u, cfl })
}

/// `int |u_h(t_top, x) - reference(x)| dx` over the slab top, with 32
/// Gauss points per spatial cell.
pub fn l1_error<F: Fn(f64) -> f64>(u: &DGSolution, reference: F) -> f64 {
    top_error(u, reference, |d| d.abs())
}

/// `(int |u_h(t_top, x) - reference(x)|^2 dx)^(1/2)`.
pub fn l2_error<F: Fn(f64) -> f64>(u: &DGSolution, reference: F) -> f64 {
    top_error(u, reference, |d| d * d).sqrt()
}

fn top_error<F: Fn(f64) -> f64, N: Fn(f64) -> f64>(u: &DGSolution, reference: F, norm: N) -> f64 {
    let mesh = &u.space.mesh;
    let rule = segment_rule(15).expect("static order");
    let dx = mesh.dx();
    let sub = 4;
    let w = dx / sub as f64;
    let mut total = 0.0;
    for col in 0..mesh.n_x {
        let element = mesh.top_element(col);
        for k in 0..sub {
            let a = mesh.x_left + col as f64 * dx + k as f64 * w;
            for (s, ws) in rule.iter() {
                let x = a + s * w;
                total += ws * w * norm(u.eval_physical(element, [mesh.t_hi, x]) - reference(x));
            }
        }
    }
    total
}
