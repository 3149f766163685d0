//! Refinement studies: log-log fits of residual and viscosity functionals,
//! and sup-norm tables.

use crate::error::{Error, Result};
use crate::solver::RunState;

/// Relative level below which a functional is roundoff of an exactly
/// vanishing quantity (e.g. a constant solution), and the fit is skipped.
pub const NEGLIGIBLE: f64 = 1e-12;

/// Least-squares fit of `log value` against `log h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub h: Vec<f64>,
    pub values: Vec<f64>,
    /// Fitted slope; `None` when every value vanishes (nothing to fit).
    pub order: Option<f64>,
    pub r_squared: f64,
}

impl ScalingFit {
    /// Fit with an absolute floor of zero: only exactly vanishing data skips.
    pub fn new(h: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::with_floor(h, values, 0.0)
    }

    /// Skips the fit when every value is at most `floor`.
    pub fn with_floor(h: Vec<f64>, values: Vec<f64>, floor: f64) -> Result<Self> {
        if h.len() < 3 || h.len() != values.len() {
            return Err(Error::arg(format!("a scaling fit needs at least 3 samples, got {}", h.len())));
        }
        if h.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::arg("mesh sizes must be strictly decreasing"));
        }
        let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale <= floor {
            return Ok(ScalingFit { h, values, order: None, r_squared: 1.0 });
        }
        if values.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::arg("scaling fit needs positive values"));
        }
        let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        let slope = sxy / sxx;
        let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
        Ok(ScalingFit { h, values, order: Some(slope), r_squared })
    }

    /// `order >= threshold`, with vanishing data counting as a pass.
    pub fn passes(&self, threshold: f64) -> bool {
        self.order.is_none_or(|o| o >= threshold)
    }
}

/// `S(h) = sum_{n,k} h^(2 beta) int_k |div f~(u_h)|^2`.
pub fn residual_functional(run: &RunState, beta: f64) -> f64 {
    let h = run.h();
    let weight = h.powf(2.0 * beta);
    run.slabs
        .iter()
        .map(|rec| {
            let u = &rec.solution;
            let st = &rec.flux().flux;
            let disc = &u.space.disc;
            (0..u.space.n_elements())
                .map(|e| {
                    let det = u.space.mesh.map(e).det.abs();
                    disc.volume_rule
                        .weights
                        .iter()
                        .enumerate()
                        .map(|(k, &w)| {
                            let (uk, g) = u.at_volume_point(e, k);
                            w * det * st.divergence(uk, g).powi(2)
                        })
                        .sum::<f64>()
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        * weight
}

/// `V(h) = sum_{n,k} int_k eps(u_h)`.
pub fn viscosity_functional(run: &RunState) -> f64 {
    run.slabs
        .iter()
        .map(|rec| {
            let mesh = &rec.solution.space.mesh;
            rec.viscosity.iter().zip(&mesh.elements).map(|(e, el)| e * el.area).sum::<f64>()
        })
        .sum()
}

/// `|Omega| T ||u_0||_inf`, the natural size of space-time integrals of `u`.
fn data_scale(runs: &[RunState]) -> f64 {
    runs.first().map_or(0.0, |r| {
        let s = &r.setup;
        (s.x_right - s.x_left) * s.t_final * s.u0.sup_norm()
    })
}

pub fn residual_scaling(runs: &[RunState], beta: f64) -> Result<ScalingFit> {
    let floor = NEGLIGIBLE * NEGLIGIBLE * data_scale(runs).powi(2);
    ScalingFit::with_floor(
        runs.iter().map(|r| r.h()).collect(),
        runs.iter().map(|r| residual_functional(r, beta)).collect(),
        floor,
    )
}

pub fn viscosity_scaling(runs: &[RunState]) -> Result<ScalingFit> {
    let floor = NEGLIGIBLE * data_scale(runs);
    ScalingFit::with_floor(runs.iter().map(|r| r.h()).collect(), runs.iter().map(viscosity_functional).collect(), floor)
}

/// `sup |u_h|` over volume quadrature points, facet points and vertices of every slab.
pub fn sup_norm(run: &RunState) -> f64 {
    let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let mut sup = 0.0_f64;
    for rec in &run.slabs {
        let u = &rec.solution;
        for e in 0..u.space.n_elements() {
            for k in 0..u.space.disc.n_vol() {
                sup = sup.max(u.at_volume_point(e, k).0.abs());
            }
            for r in corners {
                sup = sup.max(u.eval_reference(e, r).abs());
            }
        }
        for fi in 0..u.space.mesh.facets.len() {
            sup = u.face_trace(fi, false).iter().fold(sup, |m, v| m.max(v.abs()));
        }
    }
    sup
}

/// Sup-norm table over a refinement ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct LinfReport {
    pub h: Vec<f64>,
    pub sup: Vec<f64>,
    pub data_sup: f64,
    pub bound_factor: f64,
}

impl LinfReport {
    pub fn max_sup(&self) -> f64 {
        self.sup.iter().copied().fold(0.0, f64::max)
    }

    /// Bounded by `bound_factor ||u_0||_inf` with no growth from the coarsest to the finest run.
    pub fn passes(&self) -> bool {
        let bounded = self.max_sup() <= self.bound_factor * self.data_sup;
        let no_growth = match (self.sup.first(), self.sup.last()) {
            (Some(&first), Some(&last)) => last <= 1.05 * first,
            _ => true,
        };
        bounded && no_growth
    }
}

pub fn linf_check(runs: &[RunState]) -> Result<LinfReport> {
    if runs.len() < 3 {
        return Err(Error::arg(format!("the sup-norm study needs at least 3 runs, got {}", runs.len())));
    }
    Ok(LinfReport {
        h: runs.iter().map(|r| r.h()).collect(),
        sup: runs.iter().map(sup_norm).collect(),
        data_sup: runs[0].setup.u0.sup_norm(),
        bound_factor: 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let h = vec![0.1, 0.05, 0.025, 0.0125];
        let v: Vec<f64> = h.iter().map(|h: &f64| 3.0 * h.powf(1.7)).collect();
        let fit = ScalingFit::new(h, v).unwrap();
        assert!((fit.order.unwrap() - 1.7).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.passes(1.5) && !fit.passes(1.8));
    }

    #[test]
    fn zero_data_skips_the_fit() {
        let fit = ScalingFit::new(vec![0.4, 0.2, 0.1], vec![0.0; 3]).unwrap();
        assert_eq!(fit.order, None);
        assert!(fit.passes(10.0));
        let fit = ScalingFit::with_floor(vec![0.4, 0.2, 0.1], vec![1e-16, 2e-16, 4e-16], 1e-12).unwrap();
        assert_eq!(fit.order, None);
        assert!(ScalingFit::with_floor(vec![0.4, 0.2, 0.1], vec![1e-16, 2e-16, 4e-16], 0.0).unwrap().order.is_some());
        assert!(ScalingFit::new(vec![0.4, 0.2], vec![1.0, 0.5]).is_err());
        assert!(ScalingFit::new(vec![0.1, 0.2, 0.05], vec![1.0, 0.5, 0.2]).is_err());
    }
}
