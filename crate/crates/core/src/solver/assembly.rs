//! Residual and Jacobian of the slab form: volume divergence, interface
//! fluxes on internal facets, temporal upwinding at the slab bottom, and the
//! frozen-viscosity shock-capturing term.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::fluxes::NumericalFlux;
use crate::mesh::FacetKind;

use super::band::BandMatrix;
use super::space::{Boundary, DGSolution, InflowTrace, SlabSpace};

/// Everything the slab form needs besides the unknowns.
#[derive(Debug, Clone, Copy)]
pub struct FormInputs<'a> {
    pub flux: &'a NumericalFlux,
    pub inflow: &'a InflowTrace,
    /// Frozen element viscosities.
    pub viscosity: &'a [f64],
}

struct FacetContribution {
    owner: Vec<f64>,
    neighbor: Option<Vec<f64>>,
}

fn volume_rows(u: &DGSolution, element: usize, eps: f64, flux: &NumericalFlux, out: &mut [f64]) {
    let space = &u.space;
    let disc = &space.disc;
    let map = space.mesh.map(element);
    let jac = map.det.abs();
    let st = &flux.flux;
    out.iter_mut().for_each(|v| *v = 0.0);
    for (k, &wq) in disc.volume_rule.weights.iter().enumerate() {
        let (uk, grad) = u.at_volume_point(element, k);
        let w = wq * jac;
        let div = st.divergence(uk, grad);
        for (i, (phi, dphi)) in disc.phi(k).iter().zip(disc.dphi(k)).enumerate() {
            let g = map.grad_to_physical(*dphi);
            out[i] += w * (div * phi + eps * (grad[0] * g[0] + grad[1] * g[1]));
        }
    }
}

fn facet_rows(u: &DGSolution, facet: usize, inputs: &FormInputs) -> Option<FacetContribution> {
    let space = &u.space;
    let f = &space.mesh.facets[facet];
    let table = &space.faces[facet];
    let d = space.disc.dim();
    match f.kind {
        FacetKind::SpatialBoundary => {
            if inputs.inflow.boundary == Boundary::Transmissive {
                // h(u, u) - f~(u).nu = 0
                return None;
            }
            let st = &inputs.flux.flux;
            let nu = f.normal;
            let ua = u.face_trace(facet, false);
            let mut owner = vec![0.0; d];
            for (k, (&w, phi)) in table.weights.iter().zip(table.owner_phi.chunks_exact(d)).enumerate() {
                let b = inputs.inflow.boundary.exterior(ua[k], nu);
                let h = inputs.flux.eval(ua[k], b, nu).expect("spatial flux on boundary facet");
                let s = w * (h - st.dot(ua[k], nu));
                owner.iter_mut().zip(phi).for_each(|(o, p)| *o += s * p);
            }
            Some(FacetContribution { owner, neighbor: None })
        }
        // Pure upwinding from inside on the slab top.
        FacetKind::TemporalInterface if !f.is_slab_bottom() => None,
        FacetKind::TemporalInterface => {
            let column = space.mesh.elements[f.owner].column;
            let inflow = &inputs.inflow.values[column];
            let ua = u.face_trace(facet, false);
            let mut owner = vec![0.0; d];
            for (k, (&w, phi)) in table.weights.iter().zip(table.owner_phi.chunks_exact(d)).enumerate() {
                let s = w * (ua[k] - inflow[k]);
                owner.iter_mut().zip(phi).for_each(|(o, p)| *o += s * p);
            }
            Some(FacetContribution { owner, neighbor: None })
        }
        FacetKind::Internal => {
            let st = &inputs.flux.flux;
            let nu = f.normal;
            let ua = u.face_trace(facet, false);
            let ub = u.face_trace(facet, true);
            let nphi = table.neighbor_phi.as_ref().expect("internal facet");
            let mut owner = vec![0.0; d];
            let mut neighbor = vec![0.0; d];
            for k in 0..table.weights.len() {
                let w = table.weights[k];
                let h = inputs.flux.eval(ua[k], ub[k], nu).expect("spatial flux on internal facet");
                let so = w * (h - st.dot(ua[k], nu));
                let sn = w * (st.dot(ub[k], nu) - h);
                let po = &table.owner_phi[k * d..(k + 1) * d];
                let pn = &nphi[k * d..(k + 1) * d];
                for i in 0..d {
                    owner[i] += so * po[i];
                    neighbor[i] += sn * pn[i];
                }
            }
            Some(FacetContribution { owner, neighbor: Some(neighbor) })
        }
    }
}

/// Residual vector `B(u_h, phi_i)` for every basis function of every element.
///
/// Element rows are computed in parallel; facet contributions are computed
/// in parallel and then scattered in facet order, so the result does not
/// depend on the thread schedule.
pub fn assemble_residual(u: &DGSolution, inputs: &FormInputs) -> Vec<f64> {
    let space = &u.space;
    let d = space.disc.dim();
    let mut r = vec![0.0; space.n_dofs()];
    r.par_chunks_mut(d)
        .enumerate()
        .for_each(|(e, rows)| volume_rows(u, e, inputs.viscosity[e], inputs.flux, rows));
    let facets: Vec<Option<FacetContribution>> =
        (0..space.mesh.facets.len()).into_par_iter().map(|f| facet_rows(u, f, inputs)).collect();
    for (fi, c) in facets.into_iter().enumerate() {
        let Some(c) = c else { continue };
        let f = &space.mesh.facets[fi];
        for (i, v) in c.owner.iter().enumerate() {
            r[f.owner * d + i] += v;
        }
        if let (Some(nb), Some(vals)) = (f.neighbor, c.neighbor) {
            for (i, v) in vals.iter().enumerate() {
                r[nb * d + i] += v;
            }
        }
    }
    r
}

/// Jacobian stored as dense `dim x dim` blocks keyed by (row element, column element).
#[derive(Debug, Clone)]
pub struct BlockJacobian {
    pub dim: usize,
    pub n_elements: usize,
    index: HashMap<(usize, usize), usize>,
    keys: Vec<(usize, usize)>,
    blocks: Vec<Vec<f64>>,
}

impl BlockJacobian {
    fn new(dim: usize, n_elements: usize) -> Self {
        BlockJacobian { dim, n_elements, index: HashMap::new(), keys: Vec::new(), blocks: Vec::new() }
    }

    fn block_mut(&mut self, row: usize, col: usize) -> &mut [f64] {
        let dim = self.dim;
        let next = self.blocks.len();
        let idx = *self.index.entry((row, col)).or_insert(next);
        if idx == next {
            self.keys.push((row, col));
            self.blocks.push(vec![0.0; dim * dim]);
        }
        &mut self.blocks[idx]
    }

    pub fn block(&self, row: usize, col: usize) -> Option<&[f64]> {
        self.index.get(&(row, col)).map(|&i| self.blocks[i].as_slice())
    }

    pub fn block_keys(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.keys.iter().copied()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let d = self.dim;
        self.block(row / d, col / d).map_or(0.0, |b| b[(row % d) * d + col % d])
    }

    pub fn to_band(&self) -> BandMatrix {
        let d = self.dim;
        let reach = self.keys.iter().map(|&(r, c)| r.abs_diff(c)).max().unwrap_or(0);
        let bw = (reach + 1) * d - 1;
        let mut m = BandMatrix::zeros(self.n_elements * d, bw, bw);
        for (&(r, c), b) in self.keys.iter().zip(&self.blocks) {
            for i in 0..d {
                for j in 0..d {
                    let v = b[i * d + j];
                    if v != 0.0 {
                        m.add(r * d + i, c * d + j, v);
                    }
                }
            }
        }
        m
    }
}

/// Exact derivative of [`assemble_residual`] with the viscosity held fixed.
pub fn assemble_jacobian(u: &DGSolution, inputs: &FormInputs) -> BlockJacobian {
    let space: &SlabSpace = &u.space;
    let disc = &space.disc;
    let d = disc.dim();
    let st = &inputs.flux.flux;
    let mut jac = BlockJacobian::new(d, space.n_elements());

    let volume: Vec<Vec<f64>> = (0..space.n_elements())
        .into_par_iter()
        .map(|e| {
            let map = space.mesh.map(e);
            let det = map.det.abs();
            let eps = inputs.viscosity[e];
            let mut b = vec![0.0; d * d];
            let mut grads = vec![[0.0; 2]; d];
            for (k, &wq) in disc.volume_rule.weights.iter().enumerate() {
                let (uk, grad) = u.at_volume_point(e, k);
                let w = wq * det;
                let (df, d2f) = (st.flux.df(uk), st.flux.d2f(uk));
                let phi = disc.phi(k);
                for (g, r) in grads.iter_mut().zip(disc.dphi(k)) {
                    *g = map.grad_to_physical(*r);
                }
                for j in 0..d {
                    let ddiv = grads[j][0] + d2f * phi[j] * grad[1] + df * grads[j][1];
                    for i in 0..d {
                        b[i * d + j] += w
                            * (ddiv * phi[i] + eps * (grads[j][0] * grads[i][0] + grads[j][1] * grads[i][1]));
                    }
                }
            }
            b
        })
        .collect();
    for (e, b) in volume.into_iter().enumerate() {
        jac.block_mut(e, e).copy_from_slice(&b);
    }

    for (fi, f) in space.mesh.facets.iter().enumerate() {
        let table = &space.faces[fi];
        match f.kind {
            FacetKind::SpatialBoundary if inputs.inflow.boundary == Boundary::Transmissive => {}
            FacetKind::SpatialBoundary => {
                let ua = u.face_trace(fi, false);
                let nu = f.normal;
                let b = jac.block_mut(f.owner, f.owner);
                for (k, (&w, phi)) in table.weights.iter().zip(table.owner_phi.chunks_exact(d)).enumerate() {
                    let ext = inputs.inflow.boundary.exterior(ua[k], nu);
                    let e = inputs.flux.eval_with_derivatives(ua[k], ext, nu).expect("spatial flux");
                    let c = w * (e.d_owner - st.dot_derivative(ua[k], nu));
                    for i in 0..d {
                        for j in 0..d {
                            b[i * d + j] += c * phi[i] * phi[j];
                        }
                    }
                }
            }
            FacetKind::TemporalInterface if !f.is_slab_bottom() => {}
            FacetKind::TemporalInterface => {
                let b = jac.block_mut(f.owner, f.owner);
                for (&w, phi) in table.weights.iter().zip(table.owner_phi.chunks_exact(d)) {
                    for i in 0..d {
                        for j in 0..d {
                            b[i * d + j] += w * phi[i] * phi[j];
                        }
                    }
                }
            }
            FacetKind::Internal => {
                let nb = f.neighbor.expect("internal facet");
                let nphi = table.neighbor_phi.as_ref().expect("internal facet");
                let ua = u.face_trace(fi, false);
                let ub = u.face_trace(fi, true);
                let nu = f.normal;
                let mut oo = vec![0.0; d * d];
                let mut on = vec![0.0; d * d];
                let mut no = vec![0.0; d * d];
                let mut nn = vec![0.0; d * d];
                for k in 0..table.weights.len() {
                    let w = table.weights[k];
                    let e = inputs.flux.eval_with_derivatives(ua[k], ub[k], nu).expect("spatial flux");
                    let ca = w * (e.d_owner - st.dot_derivative(ua[k], nu));
                    let cb = w * e.d_neighbor;
                    let po = &table.owner_phi[k * d..(k + 1) * d];
                    let pn = &nphi[k * d..(k + 1) * d];
                    for i in 0..d {
                        for j in 0..d {
                            oo[i * d + j] += ca * po[j] * po[i];
                            on[i * d + j] += cb * pn[j] * po[i];
                            no[i * d + j] -= w * e.d_owner * po[j] * pn[i];
                            nn[i * d + j] += w * (st.dot_derivative(ub[k], nu) - e.d_neighbor) * pn[j] * pn[i];
                        }
                    }
                }
                for ((r, c), vals) in [((f.owner, f.owner), oo), ((f.owner, nb), on), ((nb, f.owner), no), ((nb, nb), nn)] {
                    jac.block_mut(r, c).iter_mut().zip(&vals).for_each(|(a, v)| *a += v);
                }
            }
        }
    }
    jac
}
