//! Energy (L2) balance, mass bookkeeping and interface-jump constants
//! assembled from a completed run.

use crate::mesh::FacetKind;
use crate::shock_capturing::gradient_energy;
use crate::solver::{RunState, SlabRecord};

/// Terms of the discrete energy identity
///
/// `SC + interface + boundary_dissipation + boundary_flux + temporal_jumps
///  + final_energy = initial_energy`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BalanceTerms {
    /// `sum_k eps_k int_k |grad u_h|^2`.
    pub shock_capturing: f64,
    /// `sum_e int_e int_{u_k}^{u_ke} (f~ . nu - h) dxi ds` over internal facets.
    pub interface: f64,
    /// The same integral against the exterior state on the spatial boundary.
    pub boundary_dissipation: f64,
    /// Energy carried through the spatial boundary, `int (h b - G(b)) ds`
    /// with `G' = f~ . nu`, `G(0) = 0` and `b` the exterior state.
    pub boundary_flux: f64,
    /// `sum_n 1/2 int (u^+ - u^-)^2` over slab bottoms.
    pub temporal_jumps: f64,
    /// `1/2 int u_h(t_N^-)^2`.
    pub final_energy: f64,
    /// `1/2 int u_0^2` at the bottom quadrature points of the first slab.
    pub initial_energy: f64,
    /// Smallest individual (per element / per facet) term of each dissipation kind.
    pub min_shock_capturing: f64,
    pub min_interface: f64,
    pub min_temporal_jump: f64,
}

impl BalanceTerms {
    /// `|LHS - RHS|` of the identity.
    pub fn residual(&self) -> f64 {
        (self.shock_capturing
            + self.interface
            + self.boundary_dissipation
            + self.boundary_flux
            + self.temporal_jumps
            + self.final_energy
            - self.initial_energy)
            .abs()
    }

    /// Smallest of the individual dissipation terms.
    pub fn min_dissipation(&self) -> f64 {
        self.min_shock_capturing.min(self.min_interface).min(self.min_temporal_jump)
    }
}

fn slab_terms(rec: &SlabRecord, out: &mut BalanceTerms) {
    let u = &rec.solution;
    let space = &u.space;
    let mesh = &space.mesh;
    let flux = rec.flux();
    let st = &flux.flux;

    for e in 0..space.n_elements() {
        let term = rec.viscosity[e] * gradient_energy(u, e);
        out.shock_capturing += term;
        out.min_shock_capturing = out.min_shock_capturing.min(term);
    }

    for (fi, f) in mesh.facets.iter().enumerate() {
        let weights = &space.faces[fi].weights;
        let a = u.face_trace(fi, false);
        match f.kind {
            FacetKind::Internal => {
                let b = u.face_trace(fi, true);
                let term: f64 = weights
                    .iter()
                    .zip(a.iter().zip(&b))
                    .map(|(w, (&a, &b))| w * flux.dissipation(a, b, f.normal).expect("spatial flux"))
                    .sum();
                out.interface += term;
                out.min_interface = out.min_interface.min(term);
            }
            FacetKind::SpatialBoundary => {
                for (w, &a) in weights.iter().zip(&a) {
                    let b = rec.inflow.boundary.exterior(a, f.normal);
                    let h = flux.eval(a, b, f.normal).expect("spatial flux");
                    out.boundary_dissipation += w * flux.dissipation(a, b, f.normal).expect("spatial flux");
                    out.boundary_flux += w * (h * b - st.integral_dot(0.0, b, f.normal));
                }
            }
            FacetKind::TemporalInterface if f.is_slab_bottom() => {
                let column = mesh.elements[f.owner].column;
                let minus = &rec.inflow.values[column];
                let mut term = 0.0;
                for (w, (&a, &m)) in weights.iter().zip(a.iter().zip(minus)) {
                    term += 0.5 * w * (a - m) * (a - m);
                    out.initial_energy += 0.5 * w * m * m;
                }
                out.temporal_jumps += term;
                out.min_temporal_jump = out.min_temporal_jump.min(term);
            }
            FacetKind::TemporalInterface => {
                out.final_energy += weights.iter().zip(&a).map(|(w, a)| 0.5 * w * a * a).sum::<f64>();
            }
        }
    }
}

/// Assembles every term of the energy identity. Intermediate slab
/// energies telescope: the top energy of slab `n` and the inflow energy of
/// slab `n + 1` are the same quadrature sum.
pub fn l2_balance(run: &RunState) -> BalanceTerms {
    let mut total = BalanceTerms {
        min_shock_capturing: f64::INFINITY,
        min_interface: f64::INFINITY,
        min_temporal_jump: f64::INFINITY,
        ..Default::default()
    };
    let n = run.slabs.len();
    for (i, rec) in run.slabs.iter().enumerate() {
        let mut t = BalanceTerms {
            min_shock_capturing: f64::INFINITY,
            min_interface: f64::INFINITY,
            min_temporal_jump: f64::INFINITY,
            ..Default::default()
        };
        slab_terms(rec, &mut t);
        total.shock_capturing += t.shock_capturing;
        total.interface += t.interface;
        total.boundary_dissipation += t.boundary_dissipation;
        total.boundary_flux += t.boundary_flux;
        total.temporal_jumps += t.temporal_jumps;
        if i == 0 {
            total.initial_energy = t.initial_energy;
        } else {
            // Cancels the previous slab's top energy.
            total.initial_energy += t.initial_energy - run.slabs[i - 1].top_energy();
        }
        if i + 1 == n {
            total.final_energy = t.final_energy;
        }
        total.min_shock_capturing = total.min_shock_capturing.min(t.min_shock_capturing);
        total.min_interface = total.min_interface.min(t.min_interface);
        total.min_temporal_jump = total.min_temporal_jump.min(t.min_temporal_jump);
    }
    total
}

/// Mass bookkeeping of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    pub initial: f64,
    pub final_mass: f64,
    /// Net mass that left through the spatial boundary.
    pub outflow: f64,
    /// `(t_n, int u_h(t_n^-))` at every slab top.
    pub history: Vec<(f64, f64)>,
}

impl MassReport {
    /// `|final - initial|`: the conservation defect when no wave reaches the boundary.
    pub fn defect(&self) -> f64 {
        (self.final_mass - self.initial).abs()
    }

    /// `|final + outflow - initial|`, which vanishes for any boundary traffic.
    pub fn balance_defect(&self) -> f64 {
        (self.final_mass + self.outflow - self.initial).abs()
    }
}

pub fn mass_report(run: &RunState) -> MassReport {
    let mut initial = 0.0;
    let mut outflow = 0.0;
    let mut history = Vec::new();
    for (i, rec) in run.slabs.iter().enumerate() {
        let u = &rec.solution;
        let mesh = &u.space.mesh;
        let flux = rec.flux();
        if i == 0 {
            for (col, &fi) in mesh.bottom_facets.iter().enumerate() {
                let w = &u.space.faces[fi].weights;
                initial += w.iter().zip(&rec.inflow.values[col]).map(|(w, v)| w * v).sum::<f64>();
            }
        }
        for (fi, f) in mesh.facets.iter().enumerate() {
            if f.kind == FacetKind::SpatialBoundary {
                let a = u.face_trace(fi, false);
                for (w, &a) in u.space.faces[fi].weights.iter().zip(&a) {
                    let b = rec.inflow.boundary.exterior(a, f.normal);
                    outflow += w * flux.eval(a, b, f.normal).expect("spatial flux");
                }
            }
        }
        history.push((rec.t_hi(), rec.top_mass()));
    }
    let final_mass = history.last().map_or(initial, |h| h.1);
    MassReport { initial, final_mass, outflow, history }
}

/// Outcome of the interface-jump constant estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpBound {
    /// No facet carried a jump above the threshold.
    Vacuous,
    /// `min_e D_e / int_e [u]^2` over facets with jumps, and how many facets entered.
    Estimate { constant: f64, facets: usize },
}

/// Smallest ratio of interface dissipation to squared jump over internal
/// facets whose pointwise jump exceeds `threshold`.
pub fn jump_bound_estimate(run: &RunState, threshold: f64) -> JumpBound {
    let mut best = f64::INFINITY;
    let mut count = 0;
    for rec in &run.slabs {
        let u = &rec.solution;
        let flux = rec.flux();
        for (fi, f) in u.space.mesh.facets.iter().enumerate() {
            if f.kind != FacetKind::Internal {
                continue;
            }
            let (a, b) = (u.face_trace(fi, false), u.face_trace(fi, true));
            if !a.iter().zip(&b).any(|(a, b)| (a - b).abs() > threshold) {
                continue;
            }
            let w = &u.space.faces[fi].weights;
            let mut diss = 0.0;
            let mut sq = 0.0;
            for (w, (&a, &b)) in w.iter().zip(a.iter().zip(&b)) {
                diss += w * flux.dissipation(a, b, f.normal).expect("spatial flux");
                sq += w * (a - b) * (a - b);
            }
            best = best.min(diss / sq);
            count += 1;
        }
    }
    if count == 0 {
        JumpBound::Vacuous
    } else {
        JumpBound::Estimate { constant: best, facets: count }
    }
}
