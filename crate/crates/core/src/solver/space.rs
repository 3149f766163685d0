use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Result;
use crate::mesh::{FacetKind, SlabMesh, Side};
use crate::polynomials::{segment_rule, triangle_rule, QuadratureRule, SimplexBasis};

/// Basis and reference quadrature tables shared by all slabs of a run.
#[derive(Debug)]
pub struct Discretization {
    pub basis: SimplexBasis,
    pub volume_rule: QuadratureRule<[f64; 2]>,
    pub face_rule: QuadratureRule<f64>,
    /// `phi_i` at volume points, row-major `[point][i]`.
    pub vol_phi: Vec<f64>,
    /// Reference gradients at volume points, `[point][i]`.
    pub vol_dphi: Vec<[f64; 2]>,
}

impl Discretization {
    /// `order` is the exactness order of both the triangle and the facet rule.
    pub fn new(q: usize, order: usize) -> Result<Self> {
        let basis = SimplexBasis::new(q)?;
        let volume_rule = triangle_rule(order)?;
        let face_rule = segment_rule(order)?;
        let mut vol_phi = Vec::with_capacity(volume_rule.len() * basis.dim());
        let mut vol_dphi = Vec::with_capacity(volume_rule.len() * basis.dim());
        for &p in &volume_rule.points {
            vol_phi.extend(basis.eval(p));
            vol_dphi.extend(basis.grad_reference(p));
        }
        Ok(Discretization { basis, volume_rule, face_rule, vol_phi, vol_dphi })
    }

    /// Quadrature order used for a flux of polynomial degree `flux_degree`
    /// (`None` for non-polynomial fluxes).
    pub fn default_order(q: usize, flux_degree: Option<usize>) -> usize {
        match flux_degree {
            Some(k) => (3 * q + 2).max(2 * q + k),
            None => 3 * q + 4,
        }
    }

    pub fn q(&self) -> usize {
        self.basis.degree()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn n_vol(&self) -> usize {
        self.volume_rule.len()
    }

    pub fn n_face(&self) -> usize {
        self.face_rule.len()
    }

    #[inline]
    pub fn phi(&self, point: usize) -> &[f64] {
        let d = self.dim();
        &self.vol_phi[point * d..(point + 1) * d]
    }

    #[inline]
    pub fn dphi(&self, point: usize) -> &[[f64; 2]] {
        let d = self.dim();
        &self.vol_dphi[point * d..(point + 1) * d]
    }
}

/// Basis values on one facet, for both adjacent elements.
#[derive(Debug, Clone)]
pub struct FaceTable {
    /// Physical quadrature points ordered along the facet.
    pub points: Vec<[f64; 2]>,
    /// Physical weights, summing to the facet length.
    pub weights: Vec<f64>,
    pub owner_phi: Vec<f64>,
    pub neighbor_phi: Option<Vec<f64>>,
}

/// A slab mesh together with precomputed basis tables on its facets.
#[derive(Debug)]
pub struct SlabSpace {
    pub mesh: Arc<SlabMesh>,
    pub disc: Arc<Discretization>,
    pub faces: Vec<FaceTable>,
}

impl SlabSpace {
    pub fn new(mesh: Arc<SlabMesh>, disc: Arc<Discretization>) -> Result<Self> {
        let basis = &disc.basis;
        let mut faces = Vec::with_capacity(mesh.facets.len());
        for (i, f) in mesh.facets.iter().enumerate() {
            let owner = mesh.facet_quadrature_trace(i, Side::Owner, &disc.face_rule)?;
            let owner_phi = owner.iter().flat_map(|(r, _)| basis.eval(*r)).collect();
            let neighbor_phi = if f.kind == FacetKind::Internal {
                let nb = mesh.facet_quadrature_trace(i, Side::Neighbor, &disc.face_rule)?;
                Some(nb.iter().flat_map(|(r, _)| basis.eval(*r)).collect())
            } else {
                None
            };
            faces.push(FaceTable {
                points: mesh.facet_points(i, &disc.face_rule),
                weights: owner.iter().map(|p| p.1).collect(),
                owner_phi,
                neighbor_phi,
            });
        }
        Ok(SlabSpace { mesh, disc, faces })
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.elements.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_elements() * self.disc.dim()
    }
}

/// Piecewise polynomial `u_h` on one slab: `coeffs[element * dim + i]`.
#[derive(Debug, Clone)]
pub struct DGSolution {
    pub space: Arc<SlabSpace>,
    pub coeffs: Vec<f64>,
}

impl DGSolution {
    pub fn zeros(space: Arc<SlabSpace>) -> Self {
        let n = space.n_dofs();
        DGSolution { space, coeffs: vec![0.0; n] }
    }

    /// Element-wise L2 projection of `g(t, x)` using the volume rule.
    pub fn l2_project<G: Fn([f64; 2]) -> f64 + Sync>(space: Arc<SlabSpace>, g: G) -> Self {
        let disc = &space.disc;
        let d = disc.dim();
        let mut coeffs = vec![0.0; space.n_dofs()];
        coeffs.par_chunks_mut(d).enumerate().for_each(|(e, c)| {
            let map = space.mesh.map(e);
            for (k, (&r, &w)) in disc.volume_rule.points.iter().zip(&disc.volume_rule.weights).enumerate() {
                let gv = w * g(map.to_physical(r));
                c.iter_mut().zip(disc.phi(k)).for_each(|(ci, p)| *ci += gv * p);
            }
        });
        DGSolution { space, coeffs }
    }

    pub fn q(&self) -> usize {
        self.space.disc.q()
    }

    pub fn element_coeffs(&self, element: usize) -> &[f64] {
        let d = self.space.disc.dim();
        &self.coeffs[element * d..(element + 1) * d]
    }

    /// Value at a point given in the element's reference coordinates.
    pub fn eval_reference(&self, element: usize, r: [f64; 2]) -> f64 {
        let phi = self.space.disc.basis.eval(r);
        dot(self.element_coeffs(element), &phi)
    }

    /// Value and physical gradient at a reference point.
    pub fn eval_with_grad(&self, element: usize, r: [f64; 2]) -> (f64, [f64; 2]) {
        let basis = &self.space.disc.basis;
        let c = self.element_coeffs(element);
        let u = dot(c, &basis.eval(r));
        let g = basis.grad_reference(r).iter().zip(c).fold([0.0, 0.0], |acc, (g, ci)| {
            [acc[0] + ci * g[0], acc[1] + ci * g[1]]
        });
        (u, self.space.mesh.map(element).grad_to_physical(g))
    }

    /// Value at a physical point inside `element`.
    pub fn eval_physical(&self, element: usize, p: [f64; 2]) -> f64 {
        self.eval_reference(element, self.space.mesh.map(element).to_reference(p))
    }

    /// Value and gradient at volume quadrature point `k` of `element`.
    #[inline]
    pub fn at_volume_point(&self, element: usize, k: usize) -> (f64, [f64; 2]) {
        let disc = &self.space.disc;
        let c = self.element_coeffs(element);
        let u = dot(c, disc.phi(k));
        let g = disc.dphi(k).iter().zip(c).fold([0.0, 0.0], |acc, (g, ci)| {
            [acc[0] + ci * g[0], acc[1] + ci * g[1]]
        });
        (u, self.space.mesh.map(element).grad_to_physical(g))
    }

    /// Traces at the quadrature points of `facet` from the owner (or neighbor) side.
    pub fn face_trace(&self, facet: usize, neighbor: bool) -> Vec<f64> {
        let table = &self.space.faces[facet];
        let f = &self.space.mesh.facets[facet];
        let (element, phi) = if neighbor {
            (f.neighbor.expect("internal facet"), table.neighbor_phi.as_ref().expect("internal facet"))
        } else {
            (f.owner, &table.owner_phi)
        };
        let d = self.space.disc.dim();
        let c = self.element_coeffs(element);
        phi.chunks_exact(d).map(|row| dot(c, row)).collect()
    }

    /// Value on the top of the slab at spatial position `x`.
    pub fn top_value(&self, x: f64) -> f64 {
        let mesh = &self.space.mesh;
        let element = mesh.top_element(mesh.column_of(x));
        self.eval_physical(element, [mesh.t_hi, x])
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exterior state on the spatial boundary.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Boundary {
    /// Exterior trace equals the interior trace.
    #[default]
    Transmissive,
    /// Fixed exterior states at `x_left` and `x_right`.
    FarField { left: f64, right: f64 },
}

impl Boundary {
    /// Exterior value for interior trace `a` on a boundary facet with normal `nu`.
    #[inline]
    pub fn exterior(&self, a: f64, nu: [f64; 2]) -> f64 {
        match *self {
            Boundary::Transmissive => a,
            Boundary::FarField { left, right } => {
                if nu[1] < 0.0 {
                    left
                } else {
                    right
                }
            }
        }
    }
}

/// Exterior data of one slab: values of `u^-` (the state arriving from the
/// previous slab, or `u_0`) at the quadrature points of each bottom facet,
/// indexed by column, and the spatial boundary state.
#[derive(Debug, Clone)]
pub struct InflowTrace {
    pub values: Vec<Vec<f64>>,
    pub boundary: Boundary,
}

impl InflowTrace {
    pub fn from_fn<F: Fn(f64) -> f64>(space: &SlabSpace, u0: F) -> Self {
        let values = space
            .mesh
            .bottom_facets
            .iter()
            .map(|&f| space.faces[f].points.iter().map(|p| u0(p[1])).collect())
            .collect();
        InflowTrace { values, boundary: Boundary::default() }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// Top trace of `prev` sampled at the bottom facet points of `space`.
    pub fn from_previous(space: &SlabSpace, prev: &DGSolution) -> Self {
        let mesh = &prev.space.mesh;
        let values = space
            .mesh
            .bottom_facets
            .iter()
            .enumerate()
            .map(|(column, &f)| {
                let element = mesh.top_element(column);
                space.faces[f]
                    .points
                    .iter()
                    .map(|p| prev.eval_physical(element, [mesh.t_hi, p[1]]))
                    .collect()
            })
            .collect();
        InflowTrace { values, boundary: Boundary::default() }
    }
}
