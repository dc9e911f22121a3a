//! Finite-difference residuals of the canonical commutators.
//!
//! Every residual is the largest deviation over interior nodes divided by
//! `ħ · max|ψ|` over the same nodes.

use nalgebra::Matrix3;
use num_complex::Complex;
use serde::Serialize;

use super::grid::LineGrid;
use super::operators::{momentum_op_with, orientation_gradient, position_op, QuantumOptions, Stencil};
use super::wavefunction::GridWavefunction;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorReport<T: Real> {
    pub relation: String,
    pub residual: T,
    pub tolerance: T,
    pub passed: bool,
    /// Observed convergence order under step halving, where measured.
    pub order: Option<T>,
    pub boundary_mass: Option<T>,
}

fn peak<T: Real>(values: impl Iterator<Item = T>) -> T {
    values.fold(T::zero(), |a, b| a.max(b))
}

/// `[P, Q]ψ = −iħψ` on a line grid, using the given stencil for `P`.
pub fn position_momentum_residual<T: Real>(
    psi: &GridWavefunction<T>,
    opts: &QuantumOptions<T>,
    stencil: Stencil,
) -> Result<T> {
    let n = psi.amplitudes().len();
    let skip = 2 * stencil.reach();
    if n <= 2 * skip {
        return Err(Error::Grid("line grid too short for the stencil".into()));
    }
    let pq = momentum_op_with(&position_op(psi, 0)?, opts, stencil)?;
    let qp = position_op(&momentum_op_with(psi, opts, stencil)?, 0)?;
    let rhs = Complex::new(T::zero(), -opts.hbar);
    let a = psi.amplitudes();
    let interior = skip..n - skip;
    let res = peak(
        interior
            .clone()
            .map(|i| (pq.amplitudes()[i] - qp.amplitudes()[i] - a[i] * rhs).norm_sqr().sqrt()),
    );
    let scale = peak(interior.map(|i| a[i].norm_sqr().sqrt()));
    Ok(res / (opts.hbar * scale))
}

/// Residual on `grid` and the order observed against the grid with half the step.
pub fn position_momentum_convergence<T: Real>(
    grid: &LineGrid<T>,
    state: impl Fn(std::sync::Arc<LineGrid<T>>) -> Result<GridWavefunction<T>>,
    opts: &QuantumOptions<T>,
) -> Result<(T, T)> {
    let coarse = position_momentum_residual(&state(std::sync::Arc::new(grid.clone()))?, opts, Stencil::Second)?;
    let fine = position_momentum_residual(&state(std::sync::Arc::new(grid.refined()?))?, opts, Stencil::Second)?;
    Ok((coarse, (coarse / fine).ln() / T::lit(2f64.ln())))
}

fn so3_residual<T: Real>(
    psi: &GridWavefunction<T>,
    opts: &QuantumOptions<T>,
    mut residual_at: impl FnMut(usize) -> T,
) -> Result<T> {
    let g = psi.so3_grid()?;
    let mut res = T::zero();
    let mut scale = T::zero();
    for i in 0..g.len() {
        if !g.is_interior(i, opts.excluded_shells) {
            continue;
        }
        res = res.max(residual_at(i));
        scale = scale.max(psi.amplitudes()[i].norm_sqr().sqrt());
    }
    Ok(res / (opts.hbar * scale))
}

/// `[n_(j)·L, ω^k]ψ = −iħ δ_j^k ψ`, maximised over `j, k`.
pub fn body_commutator_residual<T: Real>(psi: &GridWavefunction<T>, opts: &QuantumOptions<T>) -> Result<T> {
    let g = psi.so3_grid()?.clone();
    let grad = orientation_gradient(psi, opts)?;
    let s = Complex::new(T::zero(), -opts.hbar);
    let mut worst = T::zero();
    for k in 0..3 {
        let wgrad = orientation_gradient(&position_op(psi, k)?, opts)?;
        for j in 0..3 {
            let delta = if j == k { opts.hbar } else { T::zero() };
            let r = so3_residual(psi, opts, |i| {
                let lhs = (wgrad[i][j] - grad[i][j] * g.nodes[i][k]) * s;
                (lhs + psi.amplitudes()[i] * Complex::new(T::zero(), delta))
                    .norm_sqr()
                    .sqrt()
            })?;
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

/// `[L_k, ω^j]ψ = −iħ m^(j)_k(ω) ψ`, maximised over `j, k`.
pub fn angmom_commutator_residual<T: Real>(psi: &GridWavefunction<T>, opts: &QuantumOptions<T>) -> Result<T> {
    angvel_residual(&Matrix3::identity(), psi, opts)
}

/// Rigid-rotor angular velocity `Ω = I₀⁻¹L`:
/// `[Ω^j, ω^k]ψ = −iħ (I₀⁻¹ m^(k))^j ψ`, maximised over `j, k` and divided
/// by `max|I₀⁻¹|`.
pub fn angvel_commutator_check<T: Real>(
    i0: &Matrix3<T>,
    psi: &GridWavefunction<T>,
    opts: &QuantumOptions<T>,
) -> Result<T> {
    let sym = (i0 + i0.transpose()) * T::lit(0.5);
    let smallest = nalgebra::SymmetricEigen::new(sym).eigenvalues.min();
    if smallest <= T::tol(1e-12) * sym.abs().max() {
        return Err(Error::SingularInertia(smallest.as_f64()));
    }
    let inv = i0.try_inverse().ok_or(Error::SingularInertia(smallest.as_f64()))?;
    // relative to the size of I₀⁻¹ so the check does not depend on mass units
    Ok(angvel_residual(&inv, psi, opts)? / inv.abs().max())
}

/// `(L_l ψ)` at every node from a precomputed gradient.
fn components<T: Real>(grad: &[[Complex<T>; 3]], m: &Matrix3<T>, i: usize, hbar: T) -> [Complex<T>; 3] {
    let d = &grad[i];
    let s = Complex::new(T::zero(), -hbar);
    [0, 1, 2].map(|l| (d[0] * m[(0, l)] + d[1] * m[(1, l)] + d[2] * m[(2, l)]) * s)
}

fn angvel_residual<T: Real>(inv: &Matrix3<T>, psi: &GridWavefunction<T>, opts: &QuantumOptions<T>) -> Result<T> {
    let g = psi.so3_grid()?.clone();
    let grad = orientation_gradient(psi, opts)?;
    let mut worst = T::zero();
    for k in 0..3 {
        let wgrad = orientation_gradient(&position_op(psi, k)?, opts)?;
        for j in 0..3 {
            let r = so3_residual(psi, opts, |i| {
                let omega_k = g.nodes[i][k];
                let m = &g.frames[i].m;
                let plain = components(&grad, m, i, opts.hbar);
                let moved = components(&wgrad, m, i, opts.hbar);
                let mut lhs = Complex::new(T::zero(), T::zero());
                let mut rhs = T::zero();
                for l in 0..3 {
                    let c = inv[(j, l)];
                    lhs += (moved[l] - plain[l] * omega_k) * c;
                    // row k of m is m^(k)
                    rhs += c * m[(k, l)];
                }
                (lhs + psi.amplitudes()[i] * Complex::new(T::zero(), opts.hbar * rhs))
                    .norm_sqr()
                    .sqrt()
            })?;
            worst = worst.max(r);
        }
    }
    Ok(worst)
}
