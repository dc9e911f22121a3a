//! Eckart rest frame, internal molecular observables, and numerical checks of
//! their commutation relations and uncertainty inequalities.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

// `!(x > 0)` also rejects NaN; index loops read better over small matrices
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod angmom;
pub mod error;
pub mod frames;
pub mod io;
pub mod lie_so3;
pub mod modes;
pub mod molecule;
pub mod quantum;
pub mod scalar;

pub use angmom::{
    build_inertia, decompose_angmom, inertia_at, relative_angmom, rest_angmom, AngmomDecomposition, InertiaModel,
};
pub use error::{Error, Result};
pub use frames::{
    a_matrix, com_split, extract_internal, reconstruct, solve_eckart, to_rest, AMatrix, Configuration, EckartFrame,
    InternalState, InternalSystem,
};
pub use lie_so3::{exp_map, generator, killing_frame, log_map, KillingFrame, OrientationVector, RotationMatrix};
pub use modes::{build_modes, verify_eckart, EckartResiduals, ModeBasis, ModeSeed};
pub use molecule::{prepare_equilibrium, Molecule, Nucleus};
pub use scalar::Real;

pub type Molecule64 = Molecule<f64>;
pub type Molecule32 = Molecule<f32>;
pub type ModeBasis64 = ModeBasis<f64>;
pub type ModeBasis32 = ModeBasis<f32>;
pub type Configuration64 = Configuration<f64>;
pub type Configuration32 = Configuration<f32>;
pub type InternalSystem64 = InternalSystem<f64>;
pub type InternalSystem32 = InternalSystem<f32>;
pub type InternalState64 = InternalState<f64>;
pub type EckartFrame64 = EckartFrame<f64>;
pub type RotationMatrix64 = RotationMatrix<f64>;
pub type OrientationVector64 = OrientationVector<f64>;
pub type LineGrid64 = quantum::LineGrid<f64>;
pub type So3Grid64 = quantum::So3Grid<f64>;
pub type GridWavefunction64 = quantum::GridWavefunction<f64>;
