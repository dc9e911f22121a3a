//! Sampled wavefunctions.
//!
//! Orientation states keep the closure that generated them so operators can
//! take finite differences off the grid; the closure always sees the
//! canonical (norm `≤ π`) representative of its argument.

use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;
use num_complex::Complex;

use super::grid::{canonical_orientation, LineGrid, So3Grid};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub type WaveFn<T> = Arc<dyn Fn(&Vector3<T>) -> Complex<T> + Send + Sync>;

#[derive(Debug, Clone)]
pub enum Grid<T: Real> {
    Line(Arc<LineGrid<T>>),
    So3(Arc<So3Grid<T>>),
}

impl<T: Real> Grid<T> {
    pub fn len(&self) -> usize {
        match self {
            Grid::Line(g) => g.len(),
            Grid::So3(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> &[T] {
        match self {
            Grid::Line(g) => &g.weights,
            Grid::So3(g) => &g.haar_weights,
        }
    }

    fn same(&self, other: &Self) -> bool {
        match (self, other) {
            (Grid::Line(a), Grid::Line(b)) => Arc::ptr_eq(a, b) || a == b,
            (Grid::So3(a), Grid::So3(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

#[derive(Clone)]
pub struct GridWavefunction<T: Real> {
    grid: Grid<T>,
    amplitudes: Vec<Complex<T>>,
    source: Option<WaveFn<T>>,
}

impl<T: Real> fmt::Debug for GridWavefunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridWavefunction")
            .field("nodes", &self.amplitudes.len())
            .field("analytic", &self.source.is_some())
            .finish()
    }
}

impl<T: Real> GridWavefunction<T> {
    pub fn on_line(grid: Arc<LineGrid<T>>, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {} line points",
                amplitudes.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: Grid::Line(grid),
            amplitudes,
            source: None,
        })
    }

    pub fn line_from_fn(grid: Arc<LineGrid<T>>, f: impl Fn(T) -> Complex<T>) -> Self {
        let amplitudes = grid.points.iter().map(|&x| f(x)).collect();
        Self {
            grid: Grid::Line(grid),
            amplitudes,
            source: None,
        }
    }

    /// Samples `f` at the nodes and keeps it for off-grid evaluation.
    pub fn on_so3(grid: Arc<So3Grid<T>>, f: WaveFn<T>) -> Self {
        let wrapped: WaveFn<T> = Arc::new(move |w: &Vector3<T>| f(&canonical_orientation(w)));
        let amplitudes = grid.nodes.iter().map(|w| wrapped(w)).collect();
        Self {
            grid: Grid::So3(grid),
            amplitudes,
            source: Some(wrapped),
        }
    }

    pub fn so3_values(grid: Arc<So3Grid<T>>, amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {} orientation nodes",
                amplitudes.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: Grid::So3(grid),
            amplitudes,
            source: None,
        })
    }

    pub(crate) fn with_amplitudes(&self, amplitudes: Vec<Complex<T>>, source: Option<WaveFn<T>>) -> Self {
        Self {
            grid: self.grid.clone(),
            amplitudes,
            source,
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn source(&self) -> Option<&WaveFn<T>> {
        self.source.as_ref()
    }

    pub fn line_grid(&self) -> Result<&Arc<LineGrid<T>>> {
        match &self.grid {
            Grid::Line(g) => Ok(g),
            Grid::So3(_) => Err(Error::Grid("operation needs a line-grid state".into())),
        }
    }

    pub fn so3_grid(&self) -> Result<&Arc<So3Grid<T>>> {
        match &self.grid {
            Grid::So3(g) => Ok(g),
            Grid::Line(_) => Err(Error::Grid("operation needs an orientation-grid state".into())),
        }
    }

    /// `Σ w φ̄ ψ`
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if !self.grid.same(&other.grid) {
            return Err(Error::Grid("states live on different grids".into()));
        }
        Ok(inner_values(self.grid.weights(), &self.amplitudes, &other.amplitudes))
    }

    pub fn norm_squared(&self) -> T {
        self.grid
            .weights()
            .iter()
            .zip(&self.amplitudes)
            .fold(T::zero(), |a, (&w, z)| a + w * z.norm_sqr())
    }

    pub fn scaled(&self, c: T) -> Self {
        let source = self.source.clone().map(|f| {
            let g: WaveFn<T> = Arc::new(move |w: &Vector3<T>| f(w) * c);
            g
        });
        self.with_amplitudes(self.amplitudes.iter().map(|z| z * c).collect(), source)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_squared();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::Grid("state has zero or non-finite norm".into()));
        }
        Ok(self.scaled(T::one() / n.sqrt()))
    }

    pub fn check_normalized(&self, tol: T) -> Result<()> {
        let n = self.norm_squared();
        if (n - T::one()).abs() > tol {
            return Err(Error::Grid(format!("state norm² is {}, expected 1", n.as_f64())));
        }
        Ok(())
    }

    /// Off-grid value, available for closure-backed orientation states.
    pub fn eval(&self, omega: &Vector3<T>) -> Option<Complex<T>> {
        self.source.as_ref().map(|f| f(omega))
    }

    /// Haar mass within `band` of the chart boundary; zero for line states.
    pub fn boundary_mass(&self, band: T) -> T {
        match &self.grid {
            Grid::Line(_) => T::zero(),
            Grid::So3(g) => {
                let edge = g.theta_max - band;
                g.nodes
                    .iter()
                    .zip(&g.haar_weights)
                    .zip(&self.amplitudes)
                    .filter(|((w, _), _)| w.norm() > edge)
                    .fold(T::zero(), |a, ((_, &wt), z)| a + wt * z.norm_sqr())
                    / self.norm_squared()
            }
        }
    }
}

pub(crate) fn inner_values<T: Real>(weights: &[T], a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    weights
        .iter()
        .zip(a.iter().zip(b))
        .fold(Complex::new(T::zero(), T::zero()), |acc, (&w, (x, y))| {
            acc + x.conj() * y * w
        })
}
