//! Slab-by-slab space-time DG solver.

mod assembly;
mod band;
mod newton;
mod run;
mod space;

pub use assembly::{assemble_jacobian, assemble_residual, BlockJacobian, FormInputs};
pub use band::{BandLu, BandMatrix};
pub use newton::{newton, solve_slab, NewtonSettings, SlabSolve};
pub use run::{advance, InitialData, ProblemSetup, RunState, SlabRecord};
pub use space::{Boundary, DGSolution, Discretization, FaceTable, InflowTrace, SlabSpace};
