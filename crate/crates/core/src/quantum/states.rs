//! Test states: oscillator eigenfunctions, wave packets and orientation
//! gaussians, plus seeded random families.
//!
//! Orientation states are built in the flat gauge: a profile `φ(ω)` is
//! divided by `√ρ` so that Haar-weighted integrals of `|ψ|²` reduce to flat
//! integrals of `|φ|²`.

use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::grid::{haar_density, LineGrid, So3Grid};
use super::wavefunction::{GridWavefunction, WaveFn};
use crate::error::Result;
use crate::lie_so3::exp_unchecked;
use crate::scalar::Real;

/// Normalised Hermite function `ψ_n(u)` for unit mass, frequency and `ħ`.
pub fn hermite_function<T: Real>(n: usize, u: T) -> T {
    let ground = T::pi().powf(T::lit(-0.25)) * (-(u * u) * T::lit(0.5)).exp();
    if n == 0 {
        return ground;
    }
    let (mut prev, mut cur) = (ground, T::lit(2.0).sqrt() * u * ground);
    for k in 1..n {
        let kf = T::count(k);
        let next = (T::lit(2.0) / (kf + T::one())).sqrt() * u * cur - (kf / (kf + T::one())).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Oscillator eigenstate `n` (unit mass and frequency).
pub fn oscillator_eigenstate<T: Real>(grid: Arc<LineGrid<T>>, n: usize, hbar: T) -> GridWavefunction<T> {
    let s = hbar.sqrt();
    let scale = T::one() / s.sqrt();
    GridWavefunction::line_from_fn(grid, |x| Complex::new(hermite_function(n, x / s) * scale, T::zero()))
}

/// Ground state displaced to `x0` with momentum `ħk`.
pub fn coherent_state<T: Real>(grid: Arc<LineGrid<T>>, x0: T, k: T, hbar: T) -> GridWavefunction<T> {
    let s = hbar.sqrt();
    let scale = T::one() / s.sqrt();
    GridWavefunction::line_from_fn(grid, |x| {
        let a = hermite_function(0, (x - x0) / s) * scale;
        Complex::new(a * (k * x).cos(), a * (k * x).sin())
    })
}

/// Normalised gaussian `exp(−(x−x0)²/(4σ²) + ikx)`.
pub fn gaussian_packet<T: Real>(grid: Arc<LineGrid<T>>, x0: T, sigma: T, k: T) -> Result<GridWavefunction<T>> {
    GridWavefunction::line_from_fn(grid, |x| {
        let a = (-(x - x0) * (x - x0) / (T::lit(4.0) * sigma * sigma)).exp();
        Complex::new(a * (k * x).cos(), a * (k * x).sin())
    })
    .normalized()
}

/// Random superposition of the first five eigenstates, rescaled, displaced
/// and given a momentum kick.
pub fn random_line_state<T: Real, R: Rng>(grid: Arc<LineGrid<T>>, hbar: T, rng: &mut R) -> Result<GridWavefunction<T>> {
    let terms = rng.random_range(1..=5usize);
    let coeffs: Vec<(f64, f64)> = (0..terms)
        .map(|_| (StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let width = T::lit(rng.random_range(0.6..1.2));
    let x0 = T::lit(rng.random_range(-1.0..1.0));
    let k = T::lit(rng.random_range(-2.0..2.0));
    let s = hbar.sqrt() * width;
    GridWavefunction::line_from_fn(grid, |x| {
        let u = (x - x0) / s;
        let mut z = Complex::new(T::zero(), T::zero());
        for (n, &(re, im)) in coeffs.iter().enumerate() {
            z += Complex::new(T::lit(re), T::lit(im)) * hermite_function(n, u);
        }
        z * Complex::new((k * x).cos(), (k * x).sin())
    })
    .normalized()
}

fn flat_gauge<T: Real>(
    grid: Arc<So3Grid<T>>,
    phi: impl Fn(&Vector3<T>) -> Complex<T> + Send + Sync + 'static,
) -> Result<GridWavefunction<T>> {
    let f: WaveFn<T> = Arc::new(move |w: &Vector3<T>| phi(w) / haar_density(w.norm()).sqrt());
    GridWavefunction::on_so3(grid, f).normalized()
}

/// Isotropic gaussian about the identity, wrapped once in each direction
/// along the rotation angle: `φ ∝ Σ_{k=−1}^{1} exp(−(θ + 2πk)²/(4σ²))`.
pub fn wrapped_gaussian<T: Real>(grid: Arc<So3Grid<T>>, sigma: T) -> Result<GridWavefunction<T>> {
    let denom = T::lit(4.0) * sigma * sigma;
    flat_gauge(grid, move |w: &Vector3<T>| {
        let theta = w.norm();
        let mut a = T::zero();
        for k in [-1.0, 0.0, 1.0] {
            let t = theta + T::two_pi() * T::lit(k);
            a += (-(t * t) / denom).exp();
        }
        Complex::new(a, T::zero())
    })
}

/// Gaussian `exp(−(ω−c)ᵀ Σ⁻¹ (ω−c)/4 + i k·ω)` with covariance `Σ`.
pub fn orientation_gaussian<T: Real>(
    grid: Arc<So3Grid<T>>,
    center: Vector3<T>,
    covariance: Matrix3<T>,
    wavevector: Vector3<T>,
) -> Result<GridWavefunction<T>> {
    let precision = covariance
        .try_inverse()
        .ok_or_else(|| crate::error::Error::Grid("singular covariance".into()))?;
    flat_gauge(grid, move |w: &Vector3<T>| {
        let d = w - center;
        let a = (-(d.dot(&(precision * d))) * T::lit(0.25)).exp();
        let phase = wavevector.dot(w);
        Complex::new(a * phase.cos(), a * phase.sin())
    })
}

/// Randomly oriented anisotropic gaussian near the identity with a random phase gradient.
pub fn random_orientation_state<T: Real, R: Rng>(grid: Arc<So3Grid<T>>, rng: &mut R) -> Result<GridWavefunction<T>> {
    let mut v = || {
        Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
    };
    let center = v().map(|x: f64| x * 0.2 / 3f64.sqrt());
    let axis = v();
    let k = v() * 3.0 / 3f64.sqrt();
    let sig: Vec<f64> = (0..3).map(|_| rng.random_range(0.15..0.35)).collect();
    let r = exp_unchecked(&axis.map(|x| x * 2.0));
    let cov =
        r * Matrix3::from_diagonal(&Vector3::new(sig[0] * sig[0], sig[1] * sig[1], sig[2] * sig[2])) * r.transpose();
    orientation_gaussian(grid, center.map(T::lit), cov.map(T::lit), k.map(T::lit))
}
