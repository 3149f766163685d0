//! Residual- and jump-based artificial viscosity, and the diffusion form it
//! drives.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fluxes::SpaceTimeFlux;
use crate::mesh::FacetKind;
use crate::solver::{DGSolution, InflowTrace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscosityParams {
    /// Exponent of `h`, strictly inside (1/2, 2).
    pub beta: f64,
    pub c_eps: f64,
    /// Use the element diameter instead of the global mesh size.
    pub local_h: bool,
    /// Include jumps across the slab bottom (against the inflow trace).
    pub temporal_jumps: bool,
}

impl Default for ViscosityParams {
    fn default() -> Self {
        ViscosityParams { beta: 1.0, c_eps: 1.0, local_h: false, temporal_jumps: true }
    }
}

impl ViscosityParams {
    pub fn new(beta: f64, c_eps: f64) -> Result<Self> {
        ViscosityParams { beta, c_eps, ..Default::default() }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.beta > 0.5 && self.beta < 2.0) {
            return Err(Error::arg(format!("viscosity.beta = {} must lie in (0.5, 2)", self.beta)));
        }
        if !(self.c_eps > 0.0 && self.c_eps.is_finite()) {
            return Err(Error::arg(format!("viscosity.c_eps = {} must be positive", self.c_eps)));
        }
        Ok(self)
    }
}

/// The two integrals inside the viscosity bracket: `int_k |div f~(u)|` and
/// the jump integral over the element boundary.
pub fn residual_and_jumps(
    u: &DGSolution,
    element: usize,
    inflow: &InflowTrace,
    flux: &SpaceTimeFlux,
    temporal_jumps: bool,
) -> (f64, f64) {
    let space = &u.space;
    let mesh = &space.mesh;
    let disc = &space.disc;
    let det = mesh.map(element).det.abs();
    let residual: f64 = disc
        .volume_rule
        .weights
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let (uk, grad) = u.at_volume_point(element, k);
            w * det * flux.divergence(uk, grad).abs()
        })
        .sum();

    let mut jumps = 0.0;
    for &fi in &mesh.element_facets[element] {
        let f = &mesh.facets[fi];
        let weights = &space.faces[fi].weights;
        match f.kind {
            FacetKind::Internal => {
                let (a, b) = (u.face_trace(fi, false), u.face_trace(fi, true));
                jumps += weights.iter().zip(a.iter().zip(&b)).map(|(w, (a, b))| w * (a - b).abs()).sum::<f64>();
            }
            FacetKind::TemporalInterface if f.is_slab_bottom() && temporal_jumps => {
                let column = mesh.elements[element].column;
                let a = u.face_trace(fi, false);
                let b = &inflow.values[column];
                jumps += weights.iter().zip(a.iter().zip(b)).map(|(w, (a, b))| w * (a - b).abs()).sum::<f64>();
            }
            FacetKind::SpatialBoundary => {
                let a = u.face_trace(fi, false);
                jumps += weights
                    .iter()
                    .zip(&a)
                    .map(|(w, &a)| w * (a - inflow.boundary.exterior(a, f.normal)).abs())
                    .sum::<f64>();
            }
            // The slab top is not yet connected to the next slab.
            _ => {}
        }
    }
    (residual, jumps)
}

/// `eps_k = h^beta C_eps [int_k |div f~(u_h)| + int_dk |[u_h]|] / |k|`.
pub fn element_viscosity(
    u: &DGSolution,
    element: usize,
    inflow: &InflowTrace,
    flux: &SpaceTimeFlux,
    params: &ViscosityParams,
) -> f64 {
    let mesh = &u.space.mesh;
    let el = &mesh.elements[element];
    let h = if params.local_h { el.diameter } else { mesh.h };
    let (res, jumps) = residual_and_jumps(u, element, inflow, flux, params.temporal_jumps);
    h.powf(params.beta) * params.c_eps * (res + jumps) / el.area
}

/// Viscosity of every element of the slab.
pub fn slab_viscosity(u: &DGSolution, inflow: &InflowTrace, flux: &SpaceTimeFlux, params: &ViscosityParams) -> Vec<f64> {
    (0..u.space.n_elements())
        .into_par_iter()
        .map(|e| element_viscosity(u, e, inflow, flux, params))
        .collect()
}

/// `int_k |grad u_h|^2`.
pub fn gradient_energy(u: &DGSolution, element: usize) -> f64 {
    let disc = &u.space.disc;
    let det = u.space.mesh.map(element).det.abs();
    disc.volume_rule
        .weights
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let (_, g) = u.at_volume_point(element, k);
            w * det * (g[0] * g[0] + g[1] * g[1])
        })
        .sum()
}

/// `B_S(u; w) = sum_k eps_k int_k grad u . grad w` for a coefficient vector `w`.
pub fn shock_capturing_form(u: &DGSolution, w: &[f64], viscosity: &[f64]) -> f64 {
    let space = &u.space;
    let disc = &space.disc;
    let d = disc.dim();
    (0..space.n_elements())
        .map(|e| {
            if viscosity[e] == 0.0 {
                return 0.0;
            }
            let map = space.mesh.map(e);
            let det = map.det.abs();
            let we = &w[e * d..(e + 1) * d];
            let integral: f64 = disc
                .volume_rule
                .weights
                .iter()
                .enumerate()
                .map(|(k, &wq)| {
                    let (_, gu) = u.at_volume_point(e, k);
                    let gw = disc.dphi(k).iter().zip(we).fold([0.0, 0.0], |acc, (g, c)| {
                        [acc[0] + c * g[0], acc[1] + c * g[1]]
                    });
                    let gw = map.grad_to_physical(gw);
                    wq * det * (gu[0] * gw[0] + gu[1] * gw[1])
                })
                .sum();
            viscosity[e] * integral
        })
        .sum()
}

/// Shock-capturing contribution to the residual entry of test function
/// `test_index` (global coefficient index).
pub fn apply_shock_capturing(u: &DGSolution, test_index: usize, viscosity: &[f64]) -> f64 {
    let mut w = vec![0.0; u.coeffs.len()];
    w[test_index] = 1.0;
    shock_capturing_form(u, &w, viscosity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_range_is_enforced() {
        assert!(ViscosityParams::new(1.0, 1.0).is_ok());
        for beta in [0.5, 2.0, 3.0, f64::NAN] {
            assert!(ViscosityParams::new(beta, 1.0).is_err());
        }
        assert!(ViscosityParams::new(1.0, 0.0).is_err());
    }
}
