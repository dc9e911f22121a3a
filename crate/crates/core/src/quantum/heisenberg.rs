//! Dispersion products against their Robertson bounds.

use serde::Serialize;

use super::operators::{dispersion, hermitian_angmom_op, position_op, Observable, QuantumOptions, RotationalFrame};
use super::wavefunction::{Grid, GridWavefunction};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteKind {
    Vibrational,
    Electronic,
    Rotational,
}

/// Separable state, one factor per coordinate.
///
/// Vibrational states have one line factor per mode; electronic states three
/// per electron (x, y, z); rotational states a single orientation factor.
#[derive(Debug, Clone)]
pub struct ProductState<T: Real> {
    pub factors: Vec<GridWavefunction<T>>,
}

impl<T: Real> ProductState<T> {
    pub fn new(factors: Vec<GridWavefunction<T>>) -> Self {
        Self { factors }
    }

    pub fn single(psi: GridWavefunction<T>) -> Self {
        Self { factors: vec![psi] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionReport<T: Real> {
    pub state: usize,
    pub observable_a: String,
    pub observable_b: String,
    pub delta_a: T,
    pub delta_b: T,
    pub product: T,
    pub bound: T,
    pub satisfied: bool,
    /// Boundary mass above the gate: the orientation dispersion is not meaningful.
    pub indeterminate: bool,
    pub boundary_mass: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions<T: Real> {
    pub quantum: QuantumOptions<T>,
    /// Slack on `product ≥ bound`, in units of `ħ`.
    pub tolerance: T,
    pub frame: RotationalFrame,
}

impl<T: Real> Default for SuiteOptions<T> {
    fn default() -> Self {
        Self {
            quantum: QuantumOptions::default(),
            tolerance: T::lit(1e-6),
            frame: RotationalFrame::Moving,
        }
    }
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn report<T: Real>(
    state: usize,
    labels: (String, String),
    deltas: (T, T),
    bound: T,
    opts: &SuiteOptions<T>,
    boundary_mass: Option<T>,
) -> DispersionReport<T> {
    let product = deltas.0 * deltas.1;
    let indeterminate = boundary_mass.is_some_and(|m| m > opts.quantum.boundary_gate);
    DispersionReport {
        state,
        observable_a: labels.0,
        observable_b: labels.1,
        delta_a: deltas.0,
        delta_b: deltas.1,
        product,
        bound,
        satisfied: product + opts.tolerance * opts.quantum.hbar >= bound,
        indeterminate,
        boundary_mass,
    }
}

fn line_suite<T: Real>(
    index: usize,
    state: &ProductState<T>,
    kind: SuiteKind,
    opts: &SuiteOptions<T>,
) -> Result<Vec<DispersionReport<T>>> {
    let q = &opts.quantum;
    let label = |c: usize, momentum: bool| match (kind, momentum) {
        (SuiteKind::Electronic, false) => format!("q{}{}", c / 3, AXES[c % 3]),
        (SuiteKind::Electronic, true) => format!("p{}{}", c / 3, AXES[c % 3]),
        (_, false) => format!("Q{c}"),
        (_, true) => format!("P{c}"),
    };
    let mut dq = Vec::with_capacity(state.factors.len());
    let mut dp = Vec::with_capacity(state.factors.len());
    for f in &state.factors {
        f.check_normalized(T::lit(1e-8))?;
        dq.push(dispersion(f, Observable::Position(0), q)?);
        dp.push(dispersion(f, Observable::Momentum, q)?);
    }
    let half = q.hbar * T::lit(0.5);
    let mut out = Vec::new();
    for b in 0..state.factors.len() {
        for a in 0..state.factors.len() {
            let bound = if a == b { half } else { T::zero() };
            out.push(report(
                index,
                (label(b, false), label(a, true)),
                (dq[b], dp[a]),
                bound,
                opts,
                None,
            ));
        }
    }
    Ok(out)
}

fn rotational_suite<T: Real>(
    index: usize,
    psi: &GridWavefunction<T>,
    opts: &SuiteOptions<T>,
) -> Result<Vec<DispersionReport<T>>> {
    let q = &opts.quantum;
    psi.check_normalized(T::lit(1e-8))?;
    let g = psi.so3_grid()?.clone();
    let mass = psi.boundary_mass(q.boundary_band);
    let d_omega: Vec<T> = (0..3)
        .map(|k| dispersion(psi, Observable::Position(k), q))
        .collect::<Result<_>>()?;
    let d_l: Vec<T> = (0..3)
        .map(|j| dispersion(psi, Observable::AngularMomentum(j, opts.frame), q))
        .collect::<Result<_>>()?;
    let half = q.hbar * T::lit(0.5);
    let name = match opts.frame {
        RotationalFrame::Moving => "nL",
        RotationalFrame::Fixed => "L",
    };
    let mut out = Vec::new();
    for k in 0..3 {
        for j in 0..3 {
            let bound = match opts.frame {
                RotationalFrame::Moving => {
                    if j == k {
                        half
                    } else {
                        T::zero()
                    }
                }
                // |⟨m^(k)_j(ω)⟩| with the reference frame at the identity
                RotationalFrame::Fixed => {
                    let w = psi.grid().weights();
                    let mean = g
                        .frames
                        .iter()
                        .zip(w)
                        .zip(psi.amplitudes())
                        .fold(T::zero(), |a, ((f, &wt), z)| a + wt * z.norm_sqr() * f.m[(k, j)]);
                    half * mean.abs()
                }
            };
            out.push(report(
                index,
                (format!("omega_{}", AXES[k]), format!("{name}_{}", AXES[j])),
                (d_omega[k], d_l[j]),
                bound,
                opts,
                Some(mass),
            ));
        }
    }
    Ok(out)
}

/// One report per state and conjugate pair.
pub fn heisenberg_suite<T: Real>(
    states: &[ProductState<T>],
    kind: SuiteKind,
    opts: &SuiteOptions<T>,
) -> Result<Vec<DispersionReport<T>>> {
    let mut out = Vec::new();
    for (i, s) in states.iter().enumerate() {
        if s.factors.is_empty() {
            return Err(Error::MalformedStates(format!("state {i} has no factors")));
        }
        match kind {
            SuiteKind::Vibrational | SuiteKind::Electronic => {
                if kind == SuiteKind::Electronic && s.factors.len() % 3 != 0 {
                    return Err(Error::MalformedStates(format!(
                        "electronic state {i} has {} factors, not three per electron",
                        s.factors.len()
                    )));
                }
                if s.factors.iter().any(|f| !matches!(f.grid(), Grid::Line(_))) {
                    return Err(Error::MalformedStates(format!("state {i} has a non-line factor")));
                }
                out.extend(line_suite(i, s, kind, opts)?);
            }
            SuiteKind::Rotational => {
                if s.factors.len() != 1 || !matches!(s.factors[0].grid(), Grid::So3(_)) {
                    return Err(Error::MalformedStates(format!(
                        "rotational state {i} must be a single orientation factor"
                    )));
                }
                out.extend(rotational_suite(i, &s.factors[0], opts)?);
            }
        }
    }
    Ok(out)
}

/// `Im⟨ψ|[ω^k, D_j]|ψ⟩ / ħ`, the commutator expectation the moving-frame bound rests on.
pub fn rotational_commutator_expectation<T: Real>(
    psi: &GridWavefunction<T>,
    k: usize,
    j: usize,
    opts: &QuantumOptions<T>,
) -> Result<T> {
    let dj = hermitian_angmom_op(psi, j, opts)?;
    let a = psi.inner(&position_op(&dj, k)?)?;
    let b = psi.inner(&hermitian_angmom_op(&position_op(psi, k)?, j, opts)?)?;
    Ok((a - b).im / opts.hbar)
}
