//! Problem setup and slab marching.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fluxes::{FluxFunction, FluxKind, NumericalFlux, PhysicalFlux};
use crate::mesh::{Pattern, SlabMesh};
use crate::shock_capturing::ViscosityParams;

use super::newton::{solve_slab, NewtonSettings};
use super::space::{Boundary, DGSolution, Discretization, InflowTrace, SlabSpace};

/// Initial data `u_0(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// `left` for `x < x0`, `right` otherwise.
    Riemann { left: f64, right: f64, x0: f64 },
    /// `height * exp(1 - 1 / (1 - s^2))` for `s = (x - center) / width` in (-1, 1).
    Bump { center: f64, width: f64, height: f64 },
    Sine { amp: f64, period: f64 },
    /// `height` on `[left, right)`, zero elsewhere.
    Box { left: f64, right: f64, height: f64 },
    Constant(f64),
}

impl InitialData {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            InitialData::Riemann { left, right, x0 } => {
                if x < x0 {
                    left
                } else {
                    right
                }
            }
            InitialData::Bump { center, width, height } => {
                let s = (x - center) / width;
                if s.abs() < 1.0 {
                    height * (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }
            InitialData::Sine { amp, period } => amp * (2.0 * std::f64::consts::PI * x / period).sin(),
            InitialData::Box { left, right, height } => {
                if x >= left && x < right {
                    height
                } else {
                    0.0
                }
            }
            InitialData::Constant(c) => c,
        }
    }

    /// `(min, max)` of the data over the real line.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            InitialData::Riemann { left, right, .. } => (left.min(right), left.max(right)),
            InitialData::Bump { height, .. } | InitialData::Box { height, .. } => (height.min(0.0), height.max(0.0)),
            InitialData::Sine { amp, .. } => (-amp.abs(), amp.abs()),
            InitialData::Constant(c) => (c, c),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        let (lo, hi) = self.range();
        lo.abs().max(hi.abs())
    }
}

/// Everything that defines a run.
#[derive(Debug, Clone)]
pub struct ProblemSetup {
    pub flux: FluxFunction,
    pub flux_kind: FluxKind,
    pub q: usize,
    /// `None` switches shock capturing off.
    pub viscosity: Option<ViscosityParams>,
    pub x_left: f64,
    pub x_right: f64,
    pub n_x: usize,
    pub t_final: f64,
    /// Slab count; defaults to aspect ratio one.
    pub slabs: Option<usize>,
    pub pattern: Pattern,
    pub newton: NewtonSettings,
    pub u0: InitialData,
    pub boundary: Boundary,
}

impl ProblemSetup {
    /// Burgers with Godunov flux, default viscosity and clamp.
    pub fn burgers(u0: InitialData, x_left: f64, x_right: f64, n_x: usize, t_final: f64, q: usize) -> Result<Self> {
        let (lo, hi) = u0.range();
        Ok(ProblemSetup {
            flux: FluxFunction::burgers().with_default_clamp(lo, hi)?,
            flux_kind: FluxKind::Godunov,
            q,
            viscosity: Some(ViscosityParams::default()),
            x_left,
            x_right,
            n_x,
            t_final,
            slabs: None,
            pattern: Pattern::UniformDiagonal,
            newton: NewtonSettings::default(),
            u0,
            boundary: Boundary::FarField { left: u0.eval(x_left), right: u0.eval(x_right) },
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.q) {
            return Err(Error::arg(format!("q = {} must lie in 1..=4", self.q)));
        }
        if self.n_x < 2 {
            return Err(Error::arg(format!("n_x = {} must be at least 2", self.n_x)));
        }
        if !(self.x_left < self.x_right) || !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::arg("domain must satisfy x_left < x_right and T > 0"));
        }
        if matches!(self.flux_kind, FluxKind::TemporalUpwind) {
            return Err(Error::arg("temporal upwinding is not a spatial interface flux"));
        }
        if self.flux_kind == FluxKind::EngquistOsher && matches!(self.flux.kind, PhysicalFlux::BuckleyLeverett { .. }) {
            return Err(Error::arg("Engquist-Osher is only provided for convex fluxes"));
        }
        if let Some(v) = self.viscosity {
            v.validated()?;
        }
        self.newton.validated()?;
        Ok(())
    }

    pub fn slab_count(&self) -> usize {
        self.slabs.unwrap_or_else(|| {
            let dt = (self.x_right - self.x_left) / self.n_x as f64;
            ((self.t_final / dt) - 1e-9).ceil().max(1.0) as usize
        })
    }

    pub fn quadrature_order(&self) -> usize {
        let degree = match self.flux.kind {
            PhysicalFlux::LinearAdvection { .. } => Some(1),
            PhysicalFlux::Burgers => Some(2),
            PhysicalFlux::BuckleyLeverett { .. } => None,
        };
        Discretization::default_order(self.q, degree)
    }

    pub fn numerical_flux(&self) -> NumericalFlux {
        NumericalFlux::new(self.flux_kind, self.flux.clone())
    }
}

/// One solved slab.
#[derive(Debug, Clone)]
pub struct SlabRecord {
    pub solution: DGSolution,
    pub flux: NumericalFlux,
    /// `u^-` at the bottom facet quadrature points.
    pub inflow: InflowTrace,
    pub viscosity: Vec<f64>,
    pub newton_iterations: usize,
    pub picard_sweeps: usize,
    pub residual_norm: f64,
}

impl SlabRecord {
    pub fn t_lo(&self) -> f64 {
        self.solution.space.mesh.t_lo
    }

    pub fn t_hi(&self) -> f64 {
        self.solution.space.mesh.t_hi
    }

    pub fn flux(&self) -> &NumericalFlux {
        &self.flux
    }

    fn top_integral(&self, g: impl Fn(f64) -> f64) -> f64 {
        let u = &self.solution;
        u.space
            .mesh
            .top_facets
            .iter()
            .map(|&fi| {
                let w = &u.space.faces[fi].weights;
                w.iter().zip(u.face_trace(fi, false)).map(|(w, a)| w * g(a)).sum::<f64>()
            })
            .sum()
    }

    /// `int u_h(t_hi^-, x) dx`.
    pub fn top_mass(&self) -> f64 {
        self.top_integral(|a| a)
    }

    /// `1/2 int u_h(t_hi^-, x)^2 dx`.
    pub fn top_energy(&self) -> f64 {
        self.top_integral(|a| 0.5 * a * a)
    }
}

/// A completed (or partially completed) run.
#[derive(Debug, Clone)]
pub struct RunState {
    pub setup: ProblemSetup,
    pub disc: Arc<Discretization>,
    pub slabs: Vec<SlabRecord>,
}

impl RunState {
    pub fn new(setup: ProblemSetup) -> Result<Self> {
        setup.validate()?;
        let disc = Arc::new(Discretization::new(setup.q, setup.quadrature_order())?);
        Ok(RunState { setup, disc, slabs: Vec::new() })
    }

    pub fn time(&self) -> f64 {
        self.slabs.last().map_or(0.0, |s| s.t_hi())
    }

    /// Mesh size `h = max h_k` of the (uniform) slab meshes.
    pub fn h(&self) -> f64 {
        self.slabs.first().map_or(f64::NAN, |s| s.solution.space.mesh.h)
    }

    pub fn final_solution(&self) -> Option<&DGSolution> {
        self.slabs.last().map(|s| &s.solution)
    }

    fn space(&self, t_lo: f64, t_hi: f64, slab: usize) -> Result<Arc<SlabSpace>> {
        let s = &self.setup;
        let mesh = SlabMesh::build(s.x_left, s.x_right, t_lo, t_hi, s.n_x, s.pattern, slab)?;
        Ok(Arc::new(SlabSpace::new(Arc::new(mesh), self.disc.clone())?))
    }

    fn solve_one(&self, t_lo: f64, t_hi: f64, index: usize) -> Result<SlabRecord> {
        let space = self.space(t_lo, t_hi, index)?;
        let (inflow, guess) = match self.slabs.last() {
            Some(prev) => {
                let p = &prev.solution;
                (InflowTrace::from_previous(&space, p), DGSolution::l2_project(space.clone(), |y| p.top_value(y[1])))
            }
            None => {
                let u0 = self.setup.u0;
                (InflowTrace::from_fn(&space, |x| u0.eval(x)), DGSolution::l2_project(space.clone(), |y| u0.eval(y[1])))
            }
        };
        let inflow = inflow.with_boundary(self.setup.boundary);
        let flux = self.setup.numerical_flux();
        let solved = solve_slab(guess, &inflow, &flux, self.setup.viscosity.as_ref(), &self.setup.newton, index)?;
        Ok(SlabRecord {
            solution: solved.solution,
            flux,
            inflow,
            viscosity: solved.viscosity,
            newton_iterations: solved.newton_iterations,
            picard_sweeps: solved.picard_sweeps,
            residual_norm: solved.residual_norm,
        })
    }

    /// Solves all slabs up to `t_final`. A slab that fails to converge is
    /// retried once as two half-height slabs before the error propagates.
    pub fn advance(mut self) -> Result<Self> {
        let n = self.setup.slab_count();
        let dt = self.setup.t_final / n as f64;
        let start = self.slabs.len();
        for k in start..n {
            let (t_lo, t_hi) = (self.time(), if k + 1 == n { self.setup.t_final } else { (k + 1) as f64 * dt });
            let index = self.slabs.len();
            match self.solve_one(t_lo, t_hi, index) {
                Ok(rec) => self.slabs.push(rec),
                Err(Error::NonConvergence { .. }) => {
                    let mid = 0.5 * (t_lo + t_hi);
                    let first = self.solve_one(t_lo, mid, index)?;
                    self.slabs.push(first);
                    let second = self.solve_one(mid, t_hi, index + 1)?;
                    self.slabs.push(second);
                }
                Err(e) => return Err(e),
            }
        }
        Ok(self)
    }
}

/// Builds and runs `setup` to its final time.
pub fn advance(setup: ProblemSetup) -> Result<RunState> {
    RunState::new(setup)?.advance()
}
