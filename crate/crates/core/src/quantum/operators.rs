//! Operator actions on sampled states and the dispersion functional.

use std::sync::Arc;

use nalgebra::Vector3;
use num_complex::Complex;

use super::grid::{canonical_orientation, log_density_slope};
use super::wavefunction::{inner_values, Grid, GridWavefunction, WaveFn};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Central finite-difference stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Second,
    Fourth,
}

impl Stencil {
    fn offsets(self) -> &'static [(i64, f64)] {
        match self {
            Stencil::Second => &[(-1, -0.5), (1, 0.5)],
            Stencil::Fourth => &[(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)],
        }
    }

    pub fn reach(self) -> usize {
        match self {
            Stencil::Second => 1,
            Stencil::Fourth => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumOptions<T: Real> {
    pub hbar: T,
    /// Finite-difference step for orientation derivatives.
    pub fd_step: T,
    /// Width of the band below `θ_max` whose Haar mass is monitored.
    pub boundary_band: T,
    /// Boundary mass above which orientation results are indeterminate.
    pub boundary_gate: T,
    /// Outer radial shells left out of residual maxima.
    pub excluded_shells: usize,
    /// Required decay `|ψ(ends)| / max|ψ|` of line states.
    pub decay_limit: T,
}

impl<T: Real> Default for QuantumOptions<T> {
    fn default() -> Self {
        Self {
            hbar: T::one(),
            fd_step: T::lit(1e-3),
            boundary_band: T::lit(0.25),
            boundary_gate: T::lit(1e-8),
            excluded_shells: 2,
            decay_limit: T::lit(1e-8),
        }
    }
}

fn minus_i_hbar<T: Real>(hbar: T) -> Complex<T> {
    Complex::new(T::zero(), -hbar)
}

/// Multiplication by the coordinate: `x` on a line, `ω^k` on the ball.
pub fn position_op<T: Real>(psi: &GridWavefunction<T>, component: usize) -> Result<GridWavefunction<T>> {
    match psi.grid() {
        Grid::Line(g) => {
            if component != 0 {
                return Err(Error::AxisOutOfRange(component));
            }
            let amps = g.points.iter().zip(psi.amplitudes()).map(|(&x, z)| z * x).collect();
            Ok(psi.with_amplitudes(amps, None))
        }
        Grid::So3(g) => {
            if component > 2 {
                return Err(Error::AxisOutOfRange(component));
            }
            let amps = g
                .nodes
                .iter()
                .zip(psi.amplitudes())
                .map(|(w, z)| z * w[component])
                .collect();
            let source = psi.source().cloned().map(|f| {
                let h: WaveFn<T> = Arc::new(move |w: &Vector3<T>| {
                    let c = canonical_orientation(w);
                    f(&c) * c[component]
                });
                h
            });
            Ok(psi.with_amplitudes(amps, source))
        }
    }
}

fn check_decay<T: Real>(psi: &GridWavefunction<T>, limit: T) -> Result<()> {
    let a = psi.amplitudes();
    let peak = a.iter().fold(T::zero(), |m, z| m.max(z.norm_sqr())).sqrt();
    let edge = a[0].norm_sqr().max(a[a.len() - 1].norm_sqr()).sqrt();
    if edge > limit * peak {
        return Err(Error::NoBoundaryDecay((edge / peak).as_f64()));
    }
    Ok(())
}

/// `−iħ d/dx` with the fourth-order stencil.
pub fn momentum_op<T: Real>(psi: &GridWavefunction<T>, opts: &QuantumOptions<T>) -> Result<GridWavefunction<T>> {
    momentum_op_with(psi, opts, Stencil::Fourth)
}

/// `−iħ d/dx`; values beyond the grid ends are taken as zero.
pub fn momentum_op_with<T: Real>(
    psi: &GridWavefunction<T>,
    opts: &QuantumOptions<T>,
    stencil: Stencil,
) -> Result<GridWavefunction<T>> {
    let g = psi.line_grid()?;
    check_decay(psi, opts.decay_limit)?;
    let a = psi.amplitudes();
    let n = a.len() as i64;
    let scale = minus_i_hbar(opts.hbar) / g.step;
    let coeffs = stencil.offsets();
    let out = (0..n)
        .map(|i| {
            let d = coeffs.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &(o, c)| {
                let j = i + o;
                if j < 0 || j >= n {
                    acc
                } else {
                    acc + a[j as usize] * T::lit(c)
                }
            });
            d * scale
        })
        .collect();
    Ok(psi.with_amplitudes(out, None))
}

fn source_of<T: Real>(psi: &GridWavefunction<T>) -> Result<&WaveFn<T>> {
    psi.source()
        .ok_or_else(|| Error::Grid("orientation derivative needs a closure-backed state".into()))
}

/// `∂_j ψ` at every node, fourth-order central differences of the closure.
pub(crate) fn orientation_gradient<T: Real>(
    psi: &GridWavefunction<T>,
    opts: &QuantumOptions<T>,
) -> Result<Vec<[Complex<T>; 3]>> {
    let g = psi.so3_grid()?;
    let f = source_of(psi)?;
    let h = opts.fd_step;
    let c1 = T::lit(8.0 / 12.0) / h;
    let c2 = T::lit(1.0 / 12.0) / h;
    Ok(g.nodes
        .iter()
        .map(|w| {
            let mut grad = [Complex::new(T::zero(), T::zero()); 3];
            for (j, slot) in grad.iter_mut().enumerate() {
                let mut e = Vector3::zeros();
                e[j] = h;
                *slot = (f(&(w + e)) - f(&(w - e))) * c1 - (f(&(w + e * T::lit(2.0))) - f(&(w - e * T::lit(2.0)))) * c2;
            }
            grad
        })
        .collect())
}

fn check_gate<T: Real>(psi: &GridWavefunction<T>, opts: &QuantumOptions<T>) -> Result<T> {
    let mass = psi.boundary_mass(opts.boundary_band);
    if mass > opts.boundary_gate {
        return Err(Error::BoundaryMass {
            mass: mass.as_f64(),
            limit: opts.boundary_gate.as_f64(),
        });
    }
    Ok(mass)
}

/// `(n_(j)·L)ψ = −iħ ∂ψ/∂ω^j` without the boundary gate.
pub fn angmom_op_unchecked<T: Real>(
    psi: &GridWavefunction<T>,
    j: usize,
    opts: &QuantumOptions<T>,
) -> Result<GridWavefunction<T>> {
    if j > 2 {
        return Err(Error::AxisOutOfRange(j));
    }
    let grad = orientation_gradient(psi, opts)?;
    let s = minus_i_hbar(opts.hbar);
    Ok(psi.with_amplitudes(grad.iter().map(|d| d[j] * s).collect(), None))
}

/// `(n_(j)·L)ψ = −iħ ∂ψ/∂ω^j`; refuses states with boundary mass above the gate.
pub fn angmom_op<T: Real>(
    psi: &GridWavefunction<T>,
    j: usize,
    opts: &QuantumOptions<T>,
) -> Result<GridWavefunction<T>> {
    check_gate(psi, opts)?;
    angmom_op_unchecked(psi, j, opts)
}

/// `L_k ψ = −iħ Σ_i m^(i)_k ∂_i ψ`, without the boundary gate.
pub fn angmom_component_op_unchecked<T: Real>(
    psi: &GridWavefunction<T>,
    k: usize,
    opts: &QuantumOptions<T>,
) -> Result<GridWavefunction<T>> {
    if k > 2 {
        return Err(Error::AxisOutOfRange(k));
    }
    let g = psi.so3_grid()?;
    let grad = orientation_gradient(psi, opts)?;
    let s = minus_i_hbar(opts.hbar);
    let out = grad
        .iter()
        .zip(&g.frames)
        .map(|(d, fr)| (d[0] * fr.m[(0, k)] + d[1] * fr.m[(1, k)] + d[2] * fr.m[(2, k)]) * s)
        .collect();
    Ok(psi.with_amplitudes(out, None))
}

/// Gated form of [`angmom_component_op_unchecked`].
pub fn angmom_component_op<T: Real>(
    psi: &GridWavefunction<T>,
    k: usize,
    opts: &QuantumOptions<T>,
) -> Result<GridWavefunction<T>> {
    check_gate(psi, opts)?;
    angmom_component_op_unchecked(psi, k, opts)
}

/// Haar-Hermitian part of `−iħ∂_j`: `−iħ(∂_j + ½ ∂_j ln ρ)`.
pub fn hermitian_angmom_op<T: Real>(
    psi: &GridWavefunction<T>,
    j: usize,
    opts: &QuantumOptions<T>,
) -> Result<GridWavefunction<T>> {
    let plain = angmom_op_unchecked(psi, j, opts)?;
    let g = psi.so3_grid()?;
    let half = T::lit(0.5);
    let s = minus_i_hbar(opts.hbar);
    let out = plain
        .amplitudes()
        .iter()
        .zip(psi.amplitudes())
        .zip(&g.nodes)
        .map(|((d, z), w)| d + z * s * (half * w[j] * log_density_slope(w.norm())))
        .collect();
    Ok(psi.with_amplitudes(out, None))
}

/// Which angular-momentum projection a rotational dispersion uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationalFrame {
    /// `n_(j)(ω)·L`, moving with the orientation.
    Moving,
    /// `n_(j)(0)·L = L_j`, frozen at the identity.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Position(usize),
    Momentum,
    AngularMomentum(usize, RotationalFrame),
}

fn expectation_pair<T: Real>(psi: &GridWavefunction<T>, a_psi: &GridWavefunction<T>) -> (T, T) {
    let w = psi.grid().weights();
    let mean = inner_values(w, psi.amplitudes(), a_psi.amplitudes()).re;
    (mean, a_psi.norm_squared())
}

/// `sqrt(⟨A²⟩ − ⟨A⟩²)`, with `⟨A²⟩ = ‖Aψ‖²` for the differential operators.
pub fn dispersion<T: Real>(psi: &GridWavefunction<T>, op: Observable, opts: &QuantumOptions<T>) -> Result<T> {
    let norm = psi.norm_squared();
    let (mean, second) = match op {
        Observable::Position(k) => {
            let x = position_op(psi, k)?;
            expectation_pair(psi, &x)
        }
        Observable::Momentum => expectation_pair(psi, &momentum_op(psi, opts)?),
        Observable::AngularMomentum(j, RotationalFrame::Moving) => {
            expectation_pair(psi, &hermitian_angmom_op(psi, j, opts)?)
        }
        Observable::AngularMomentum(j, RotationalFrame::Fixed) => {
            expectation_pair(psi, &angmom_component_op_unchecked(psi, j, opts)?)
        }
    };
    let (mean, second) = (mean / norm, second / norm);
    let variance = second - mean * mean;
    if variance < -T::lit(1e-12) * second.max(T::one()) {
        return Err(Error::NegativeVariance(variance.as_f64()));
    }
    Ok(variance.max(T::zero()).sqrt())
}

/// `⟨ψ|A|ψ⟩` for a precomputed `Aψ`.
pub fn expectation<T: Real>(psi: &GridWavefunction<T>, a_psi: &GridWavefunction<T>) -> Result<Complex<T>> {
    psi.inner(a_psi)
}
