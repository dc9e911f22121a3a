//! Quadrature grids: a uniform line for vibrational / electronic coordinates
//! and an axis-angle ball for orientations.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::lie_so3::{killing_frame_unchecked, KillingFrame};
use crate::scalar::Real;

pub const MIN_LINE_POINTS: usize = 64;
pub const MIN_THETA_NODES: usize = 16;
pub const MIN_DIRECTION_NODES: usize = 32;

/// Uniform samples on `[x_min, x_max]` with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LineGrid<T: Real> {
    pub x_min: T,
    pub x_max: T,
    pub step: T,
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> LineGrid<T> {
    pub fn new(x_min: T, x_max: T, count: usize) -> Result<Self> {
        if count < MIN_LINE_POINTS {
            return Err(Error::Grid(format!(
                "line grid needs at least {MIN_LINE_POINTS} points, got {count}"
            )));
        }
        if !(x_max > x_min) {
            return Err(Error::Grid("line grid extent is empty".into()));
        }
        let step = (x_max - x_min) / T::count(count - 1);
        let points = (0..count).map(|i| x_min + step * T::count(i)).collect();
        let mut weights = vec![step; count];
        weights[0] = step * T::lit(0.5);
        weights[count - 1] = step * T::lit(0.5);
        Ok(Self {
            x_min,
            x_max,
            step,
            points,
            weights,
        })
    }

    /// `[−half_width, half_width]`.
    pub fn symmetric(half_width: T, count: usize) -> Result<Self> {
        Self::new(-half_width, half_width, count)
    }

    /// Same extent with the step halved.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.x_min, self.x_max, 2 * self.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[a, b]`, ascending.
pub fn gauss_legendre<T: Real>(n: usize, a: T, b: T) -> Vec<(T, T)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("positive rule size"));
    let (mid, half) = ((a + b) * T::lit(0.5), (b - a) * T::lit(0.5));
    let mut pairs: Vec<(T, T)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * T::lit(x), half * T::lit(w)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs
}

/// `(1 − cos θ)/(4π² θ²)`: normalised Haar density in axis-angle coordinates.
pub fn haar_density<T: Real>(theta: T) -> T {
    let four_pi2 = T::lit(4.0) * T::pi() * T::pi();
    if theta == T::zero() {
        return T::lit(0.5) / four_pi2;
    }
    // 1 − cos θ = 2 sin²(θ/2) without the cancellation
    let s = (theta * T::lit(0.5)).sin() / theta;
    T::lit(2.0) * s * s / four_pi2
}

/// `∂_j ln ρ = ω_j · g(θ)`; returns `g(θ) = (cot(θ/2) − 2/θ)/θ`.
pub fn log_density_slope<T: Real>(theta: T) -> T {
    if theta < T::lit(2e-2) {
        let t2 = theta * theta;
        -T::one() / T::lit(6.0) - t2 / T::lit(360.0) - t2 * t2 / T::lit(15120.0)
    } else {
        let half = theta * T::lit(0.5);
        (half.cos() / half.sin() - T::lit(2.0) / theta) / theta
    }
}

/// Axis-angle ball grid: Gauss–Legendre in `θ ∈ [0, π − ε]` times a
/// Gauss–Legendre(`cos β`) × uniform(`φ`) direction rule.
#[derive(Debug, Clone)]
pub struct So3Grid<T: Real> {
    pub nodes: Vec<Vector3<T>>,
    pub haar_weights: Vec<T>,
    /// Radial shell of each node, 0 innermost.
    pub shell: Vec<usize>,
    pub radii: Vec<T>,
    pub theta_max: T,
    /// Sum of the analytic weights before numerical normalisation.
    pub analytic_mass: T,
    pub frames: Vec<KillingFrame<T>>,
    pub direction_count: usize,
}

impl<T: Real> So3Grid<T> {
    /// `direction_nodes` is a lower bound; the polar rule gets
    /// `⌈√(d/2)⌉` nodes and the azimuthal rule enough to reach `d`.
    pub fn new(theta_nodes: usize, direction_nodes: usize, boundary_eps: T) -> Result<Self> {
        if theta_nodes < MIN_THETA_NODES {
            return Err(Error::Grid(format!(
                "need at least {MIN_THETA_NODES} radial nodes, got {theta_nodes}"
            )));
        }
        if direction_nodes < MIN_DIRECTION_NODES {
            return Err(Error::Grid(format!(
                "need at least {MIN_DIRECTION_NODES} direction nodes, got {direction_nodes}"
            )));
        }
        if !(boundary_eps > T::zero()) || boundary_eps >= T::one() {
            return Err(Error::Grid("boundary margin must lie in (0, 1)".into()));
        }
        let n_beta = ((direction_nodes as f64 / 2.0).sqrt().ceil() as usize).max(2);
        let n_phi = direction_nodes.div_ceil(n_beta);
        let theta_max = T::pi() - boundary_eps;
        let radial = gauss_legendre(theta_nodes, T::zero(), theta_max);
        let polar = gauss_legendre(n_beta, -T::one(), T::one());
        let two_pi = T::two_pi();
        let dphi = two_pi / T::count(n_phi);
        let mut directions = Vec::with_capacity(n_beta * n_phi);
        for &(c, wc) in &polar {
            let s = (T::one() - c * c).max(T::zero()).sqrt();
            for k in 0..n_phi {
                let phi = dphi * (T::count(k) + T::lit(0.5));
                directions.push((Vector3::new(s * phi.cos(), s * phi.sin(), c), wc * dphi));
            }
        }
        let four_pi2 = T::lit(4.0) * T::pi() * T::pi();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut shell = Vec::new();
        for (i, &(theta, wt)) in radial.iter().enumerate() {
            let half = (theta * T::lit(0.5)).sin();
            let radial_weight = T::lit(2.0) * half * half / four_pi2 * wt;
            for (dir, wd) in &directions {
                nodes.push(dir * theta);
                weights.push(radial_weight * *wd);
                shell.push(i);
            }
        }
        let analytic_mass = weights.iter().fold(T::zero(), |a, &w| a + w);
        let haar_weights = weights.iter().map(|&w| w / analytic_mass).collect();
        let frames = nodes.iter().map(|w| killing_frame_unchecked(w)).collect();
        Ok(Self {
            nodes,
            haar_weights,
            shell,
            radii: radial.iter().map(|p| p.0).collect(),
            theta_max,
            analytic_mass,
            frames,
            direction_count: directions.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shell_count(&self) -> usize {
        self.radii.len()
    }

    /// Whether a node lies inside the two outermost shells' exclusion zone.
    pub fn is_interior(&self, node: usize, excluded_shells: usize) -> bool {
        self.shell[node] + excluded_shells < self.shell_count()
    }
}

/// Maps an axis-angle vector to the equivalent one of norm `≤ π`.
pub fn canonical_orientation<T: Real>(omega: &Vector3<T>) -> Vector3<T> {
    let theta = omega.norm();
    if theta <= T::pi() {
        return *omega;
    }
    let two_pi = T::two_pi();
    let reduced = theta - two_pi * (theta / two_pi).round();
    if reduced == T::zero() {
        return Vector3::zeros();
    }
    omega * (reduced / theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn line_grid_shape() {
        let g = LineGrid::<f64>::new(-2.0, 3.0, 101).unwrap();
        assert!((g.step * 100.0 - 5.0).abs() < 1e-12);
        assert_relative_eq!(g.weights.iter().sum::<f64>(), 5.0, epsilon = 1e-12);
        assert_eq!(g.refined().unwrap().len(), 201);
        assert!(LineGrid::new(0.0, 1.0, 63).is_err());
        assert!(LineGrid::new(1.0, 1.0, 100).is_err());
    }

    #[test]
    fn haar_weights_normalised() {
        let g = So3Grid::<f64>::new(32, 64, 1e-6).unwrap();
        assert_relative_eq!(g.haar_weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        // the analytic density already integrates to one over the ball
        assert!((g.analytic_mass - 1.0).abs() < 1e-6);
        assert!(g.nodes.iter().all(|w| w.norm() < PI - 1e-6 + 1e-12));
        assert!(g.haar_weights.iter().all(|&w| w > 0.0));
        assert!(g.direction_count >= 64);
    }

    #[test]
    fn haar_measure_of_class_function() {
        // Weyl integration formula: the angle density is (1 − cos θ)/π; the grid
        // stops at a = π − ε, so compare against the truncated-ball average
        let eps = 1e-6;
        let g = So3Grid::<f64>::new(48, 64, eps).unwrap();
        let mean_cos: f64 = g
            .nodes
            .iter()
            .zip(&g.haar_weights)
            .map(|(w, p)| w.norm().cos() * p)
            .sum();
        let a = PI - eps;
        let expected = (a.sin() - a / 2.0 - (2.0 * a).sin() / 4.0) / (a - a.sin());
        assert!((mean_cos - expected).abs() < 1e-12, "{mean_cos} {expected}");
        assert!((expected + 0.5).abs() < 1e-6);
    }

    #[test]
    fn density_against_series_and_closed_form() {
        let series = |t: f64| (0.5 - t * t / 24.0 + t.powi(4) / 720.0) / (4.0 * PI * PI);
        for t in [0.0, 1e-8, 1e-4, 1e-3] {
            assert!((haar_density(t) - series(t)).abs() < 1e-14 * series(t), "{t}");
        }
        for t in [0.5, 2.0, 3.1] {
            let closed = (1.0 - f64::cos(t)) / (4.0 * PI * PI * t * t);
            assert!((haar_density(t) - closed).abs() < 1e-14 * closed);
        }
        let slope = |t: f64| ((t / 2.0).cos() / (t / 2.0).sin() - 2.0 / t) / t;
        let t = 2e-2;
        assert!((log_density_slope(t * (1.0 - 1e-9)) - slope(t)).abs() < 1e-10);
    }

    #[test]
    fn canonicalisation() {
        let w = Vector3::new(0.0, 0.0, PI + 0.1);
        assert_relative_eq!(
            canonical_orientation(&w),
            Vector3::new(0.0, 0.0, -(PI - 0.1)),
            epsilon = 1e-14
        );
        let inside = Vector3::new(0.3, 0.1, -0.2);
        assert_eq!(canonical_orientation(&inside), inside);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = gauss_legendre::<f64>(5, 0.0, 2.0);
        let integral: f64 = rule.iter().map(|(x, w)| w * x.powi(9)).sum();
        assert_relative_eq!(integral, 2f64.powi(10) / 10.0, epsilon = 1e-10);
    }
}
