//! Inertia operators and orbital angular momentum.
//!
//! All products are evaluated on classical (commuting) sample values, where
//! the symmetrised brackets of the operator expressions reduce to plain
//! cross and matrix products.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frames::{Configuration, InternalState};
use crate::modes::ModeBasis;
use crate::molecule::{equilibrium_inertia, Molecule};
use crate::scalar::Real;

/// Absolute tolerance on the asymmetry of each `I_α`.
pub const INERTIA_SYMMETRY_TOLERANCE: f64 = 1e-10;

/// `I(Q) = I₀ + Q^α I_α`
#[derive(Debug, Clone, PartialEq)]
pub struct InertiaModel<T: Real> {
    pub i0: Matrix3<T>,
    pub i_alpha: Vec<Matrix3<T>>,
}

/// `e_k·I_α·e_l = Σ_μ √M_μ (e_k × X_{μα})·(e_l × R⁰_μ)`, without any symmetry check.
pub fn inertia_derivatives<T: Real>(mol: &Molecule<T>, basis: &ModeBasis<T>) -> Result<Vec<Matrix3<T>>> {
    basis.check_molecule(mol)?;
    let axes = [Vector3::x(), Vector3::y(), Vector3::z()];
    Ok((0..basis.mode_count())
        .map(|alpha| {
            let mut i = Matrix3::zeros();
            for (mu, nuc) in mol.nuclei.iter().enumerate() {
                let x = basis.vector(mu, alpha);
                let s = nuc.mass.sqrt();
                for k in 0..3 {
                    let ex = axes[k].cross(&x);
                    for l in 0..3 {
                        i[(k, l)] += s * ex.dot(&axes[l].cross(&nuc.position));
                    }
                }
            }
            i
        })
        .collect())
}

/// Largest `|I_α − I_αᵀ|` entry and the mode it occurs in.
pub fn symmetry_residual<T: Real>(i_alpha: &[Matrix3<T>]) -> (usize, T) {
    i_alpha
        .iter()
        .enumerate()
        .map(|(a, m)| (a, (m - m.transpose()).abs().max()))
        .fold((0, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc })
}

/// Builds `I₀` and every `I_α`, asserting the symmetry that the angular
/// Eckart condition guarantees.
pub fn build_inertia<T: Real>(mol: &Molecule<T>, basis: &ModeBasis<T>) -> Result<InertiaModel<T>> {
    let i0 = equilibrium_inertia(mol)?;
    let i_alpha = inertia_derivatives(mol, basis)?;
    let (mode, residual) = symmetry_residual(&i_alpha);
    if residual > T::tol(INERTIA_SYMMETRY_TOLERANCE) {
        return Err(Error::AsymmetricInertia {
            mode,
            residual: residual.as_f64(),
        });
    }
    Ok(InertiaModel { i0, i_alpha })
}

impl<T: Real> InertiaModel<T> {
    pub fn mode_count(&self) -> usize {
        self.i_alpha.len()
    }

    /// Radius in `Q` space inside which `I(Q)` is guaranteed positive-definite:
    /// `λ_min(I₀) / (Σ_α ‖I_α‖²)^{1/2}` (Frobenius norms, Cauchy–Schwarz bound).
    pub fn positive_definite_radius(&self) -> T {
        let lambda = self.i0.diagonal().min();
        let spread = self.i_alpha.iter().fold(T::zero(), |a, m| a + m.norm_squared()).sqrt();
        if spread == T::zero() {
            T::max_value().unwrap()
        } else {
            lambda / spread
        }
    }
}

/// `I(Q) = I₀ + Σ_α Q^α I_α`
pub fn inertia_at<T: Real>(model: &InertiaModel<T>, q: &[T]) -> Result<Matrix3<T>> {
    if q.len() != model.mode_count() {
        return Err(Error::Dimension(format!(
            "{} mode amplitudes for {} modes",
            q.len(),
            model.mode_count()
        )));
    }
    Ok(model.i_alpha.iter().zip(q).fold(model.i0, |acc, (i, &qa)| acc + i * qa))
}

/// [`inertia_at`] that also reports loss of positive-definiteness.
pub fn inertia_at_checked<T: Real>(model: &InertiaModel<T>, q: &[T]) -> Result<Matrix3<T>> {
    let i = inertia_at(model, q)?;
    let sym = (i + i.transpose()) * T::lit(0.5);
    let smallest = SymmetricEigen::new(sym).eigenvalues.min();
    if smallest <= T::tol(1e-12) * model.i0.trace() {
        return Err(Error::SingularInertia(smallest.as_f64()));
    }
    Ok(i)
}

fn orbital<T: Real>(cfg: &Configuration<T>) -> Vector3<T> {
    let nuclear = cfg
        .nuclear_positions
        .iter()
        .zip(&cfg.nuclear_momenta)
        .fold(Vector3::zeros(), |acc, (r, p)| acc + r.cross(p));
    cfg.electron_positions
        .iter()
        .zip(&cfg.electron_momenta)
        .fold(nuclear, |acc, (r, p)| acc + r.cross(p))
}

/// `L′ = Σ R′×P′ + Σ r′×p′` of a relative configuration.
pub fn relative_angmom<T: Real>(relative: &Configuration<T>) -> Vector3<T> {
    orbital(relative)
}

/// `L = Σ R″×P″ + Σ r″×p″` of a rest configuration.
pub fn rest_angmom<T: Real>(rest: &Configuration<T>) -> Vector3<T> {
    orbital(rest)
}

/// Molecular, deformation and electronic parts of the rest angular momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngmomDecomposition<T: Real> {
    pub rotational: Vector3<T>,
    pub deformation: Vector3<T>,
    pub electronic: Vector3<T>,
}

impl<T: Real> AngmomDecomposition<T> {
    pub fn total(&self) -> Vector3<T> {
        self.rotational + self.deformation + self.electronic
    }
}

/// `Σ_μ (Q^α X_{μα}) × (P_β X^β_μ)`
pub fn deformation_angmom<T: Real>(basis: &ModeBasis<T>, q: &[T], p: &[T]) -> Vector3<T> {
    let mut total = Vector3::zeros();
    for mu in 0..basis.nuclear_count() {
        let mut disp = Vector3::zeros();
        let mut mom = Vector3::zeros();
        for alpha in 0..basis.mode_count() {
            disp += basis.vector(mu, alpha) * q[alpha];
            mom += basis.dual_vector(mu, alpha) * p[alpha];
        }
        total += disp.cross(&mom);
    }
    total
}

/// `Σ_ν q_(ν) × p_(ν)`
pub fn electronic_angmom<T: Real>(q: &[Vector3<T>], p: &[Vector3<T>]) -> Vector3<T> {
    q.iter().zip(p).fold(Vector3::zeros(), |acc, (a, b)| acc + a.cross(b))
}

pub fn decompose_angmom<T: Real>(
    model: &InertiaModel<T>,
    basis: &ModeBasis<T>,
    state: &InternalState<T>,
) -> Result<AngmomDecomposition<T>> {
    if basis.mode_count() != model.mode_count() || state.mode_amplitudes.len() != model.mode_count() {
        return Err(Error::Dimension("mode counts of model, basis and state differ".into()));
    }
    let q = state.mode_amplitudes.as_slice();
    let p = state.mode_momenta.as_slice();
    Ok(AngmomDecomposition {
        rotational: inertia_at(model, q)? * state.angular_velocity,
        deformation: deformation_angmom(basis, q, p),
        electronic: electronic_angmom(&state.electron_positions, &state.electron_momenta),
    })
}
