//! Grid representations of the internal quantum observables.

pub mod commutators;
pub mod grid;
pub mod heisenberg;
pub mod operators;
pub mod states;
pub mod wavefunction;

pub use commutators::{
    angmom_commutator_residual, angvel_commutator_check, body_commutator_residual, position_momentum_convergence,
    position_momentum_residual, CommutatorReport,
};
pub use grid::{canonical_orientation, haar_density, LineGrid, So3Grid};
pub use heisenberg::{heisenberg_suite, DispersionReport, ProductState, SuiteKind, SuiteOptions};
pub use operators::{
    angmom_component_op, angmom_op, dispersion, hermitian_angmom_op, momentum_op, momentum_op_with, position_op,
    Observable, QuantumOptions, RotationalFrame, Stencil,
};
pub use wavefunction::{Grid, GridWavefunction, WaveFn};
