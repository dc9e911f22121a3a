//! Rotation-group machinery in axis-angle coordinates.
//!
//! Orientations live in the closed ball `|ω| ≤ π`. The exponential map is
//! evaluated in closed (Rodrigues) form; the Killing frame `n_(j)(ω)` is the
//! right-trivialised derivative `R⁻¹ ∂_j R = [n_(j)]_×`, i.e. the right
//! Jacobian of the exponential map, and its dual `m^(k)` is the inverse of
//! that Jacobian.
//!
//! Axis indices are zero-based throughout (`0 = x`, `1 = y`, `2 = z`).

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default distance from the ball boundary below which the Killing frame is refused.
pub const DEFAULT_BOUNDARY_EPS: f64 = 1e-6;

/// Angle below which the exponential map switches to its Taylor series.
const EXP_SERIES_ANGLE: f64 = 1e-4;
/// Angle below which the Jacobian coefficients switch to their Taylor series.
const JACOBIAN_SERIES_ANGLE: f64 = 5e-2;

/// Axis-angle orientation `ω` with `|ω| ≤ π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationVector<T: Real>(Vector3<T>);

impl<T: Real> OrientationVector<T> {
    /// Rejects vectors outside the canonical ball instead of wrapping them.
    pub fn new(omega: Vector3<T>) -> Result<Self> {
        let norm = omega.norm();
        // a few ulps of slack so that log_map output at exactly pi round-trips
        let limit = T::pi() * (T::one() + T::default_epsilon() * T::lit(8.0));
        if norm > limit || !norm.is_finite() {
            return Err(Error::OrientationOutOfBall { norm: norm.as_f64() });
        }
        Ok(Self(omega))
    }

    pub fn zero() -> Self {
        Self(Vector3::zeros())
    }

    pub fn vector(&self) -> &Vector3<T> {
        &self.0
    }

    pub fn angle(&self) -> T {
        self.0.norm()
    }
}

/// Proper orthogonal 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix<T: Real>(Matrix3<T>);

impl<T: Real> RotationMatrix<T> {
    /// Validates orthogonality and unit determinant to `1e-9`.
    pub fn new(r: Matrix3<T>) -> Result<Self> {
        let orthogonality = (r.transpose() * r - Matrix3::identity()).abs().max();
        let det = r.determinant();
        let tol = T::tol(1e-9);
        if orthogonality > tol || (det - T::one()).abs() > tol {
            return Err(Error::NotARotation {
                orthogonality: orthogonality.as_f64(),
                det: det.as_f64(),
            });
        }
        Ok(Self(r))
    }

    pub(crate) fn new_unchecked(r: Matrix3<T>) -> Self {
        Self(r)
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }

    /// `R · a`
    pub fn apply(&self, a: &Vector3<T>) -> Vector3<T> {
        self.0 * a
    }

    /// `R⁻¹ · a`
    pub fn apply_inverse(&self, a: &Vector3<T>) -> Vector3<T> {
        self.0.tr_mul(a)
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }
}

/// Killing vectors `n_(j)(ω)` (columns of `n`) and their duals `m^(k)(ω)` (rows of `m`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KillingFrame<T: Real> {
    pub n: Matrix3<T>,
    pub m: Matrix3<T>,
}

impl<T: Real> KillingFrame<T> {
    pub fn killing_vector(&self, j: usize) -> Vector3<T> {
        self.n.column(j).into_owned()
    }

    pub fn dual_vector(&self, k: usize) -> Vector3<T> {
        self.m.row(k).transpose()
    }

    /// Largest entry of `|n·m − 1|`.
    pub fn duality_residual(&self) -> T {
        (self.n * self.m - Matrix3::identity()).abs().max()
    }
}

/// Cross-product matrix `[v]_×` with `[v]_× x = v × x`.
pub fn hat<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v.z, v.y, v.z, z, -v.x, -v.y, v.x, z)
}

/// Inverse of [`hat`] applied to the antisymmetric part of `m`.
pub fn vee<T: Real>(m: &Matrix3<T>) -> Vector3<T> {
    let half = T::lit(0.5);
    Vector3::new(
        (m[(2, 1)] - m[(1, 2)]) * half,
        (m[(0, 2)] - m[(2, 0)]) * half,
        (m[(1, 0)] - m[(0, 1)]) * half,
    )
}

/// Generator `G_j` of rotations about axis `j`: `G_j x = e_j × x`.
pub fn generator<T: Real>(axis: usize) -> Result<Matrix3<T>> {
    if axis > 2 {
        return Err(Error::AxisOutOfRange(axis));
    }
    let mut e = Vector3::zeros();
    e[axis] = T::one();
    Ok(hat(&e))
}

/// `sin θ / θ` and `(1 − cos θ)/θ²`.
fn rodrigues_coefficients<T: Real>(theta: T) -> (T, T) {
    if theta < T::lit(EXP_SERIES_ANGLE) {
        let t2 = theta * theta;
        let t4 = t2 * t2;
        (
            T::one() - t2 / T::lit(6.0) + t4 / T::lit(120.0),
            T::lit(0.5) - t2 / T::lit(24.0) + t4 / T::lit(720.0),
        )
    } else {
        let half = (theta * T::lit(0.5)).sin();
        (theta.sin() / theta, T::lit(2.0) * half * half / (theta * theta))
    }
}

/// `R(ω) = exp(ω·G)`.
pub fn exp_map<T: Real>(omega: &OrientationVector<T>) -> RotationMatrix<T> {
    RotationMatrix(exp_unchecked(omega.vector()))
}

/// Exponential of an arbitrary rotation vector (no ball check).
pub(crate) fn exp_unchecked<T: Real>(omega: &Vector3<T>) -> Matrix3<T> {
    let theta = omega.norm();
    let (a, b) = rodrigues_coefficients(theta);
    let k = hat(omega);
    Matrix3::identity() + k * a + k * k * b
}

/// Canonical axis-angle vector of a rotation, `|ω| ≤ π`.
pub fn log_map<T: Real>(r: &RotationMatrix<T>) -> OrientationVector<T> {
    let m = r.matrix();
    let two = T::lit(2.0);
    let s = vee(m); // sin θ · axis
    let sin = s.norm();
    let mut cos = (m.trace() - T::one()) / two;
    cos = cos.clamp(-T::one(), T::one());
    let theta = sin.atan2(cos);

    let omega = if theta < T::lit(EXP_SERIES_ANGLE) {
        s * (T::one() + theta * theta / T::lit(6.0))
    } else if cos >= T::zero() {
        s * (theta / sin)
    } else {
        // (R + Rᵀ)/2 − cos θ·1 = (1 − cos θ) a aᵀ, well conditioned near π
        let b = (m + m.transpose()) * T::lit(0.5) - Matrix3::identity() * cos;
        let i = (0..3)
            .max_by(|&x, &y| b[(x, x)].partial_cmp(&b[(y, y)]).unwrap())
            .unwrap();
        let mut axis: Vector3<T> = b.column(i).into_owned();
        axis /= axis.norm();
        let d = axis.dot(&s);
        if d.abs() > T::default_epsilon() * T::lit(64.0) {
            if d < T::zero() {
                axis = -axis;
            }
        } else {
            // angle π: ω and −ω name the same rotation
            let lead = axis.iamax();
            if axis[lead] < T::zero() {
                axis = -axis;
            }
        }
        axis * theta
    };
    OrientationVector(omega)
}

/// `(θ − sin θ)/θ³`
fn jacobian_c<T: Real>(theta: T) -> T {
    if theta < T::lit(JACOBIAN_SERIES_ANGLE) {
        let t2 = theta * theta;
        T::one() / T::lit(6.0)
            - t2 * (T::one() / T::lit(120.0)
                - t2 * (T::one() / T::lit(5040.0) - t2 * (T::one() / T::lit(362880.0) - t2 / T::lit(39916800.0))))
    } else {
        (theta - theta.sin()) / (theta * theta * theta)
    }
}

/// `1/θ² − (1 + cos θ)/(2θ sin θ)`
fn jacobian_inverse_d<T: Real>(theta: T) -> T {
    if theta < T::lit(JACOBIAN_SERIES_ANGLE) {
        let t2 = theta * theta;
        T::one() / T::lit(12.0)
            + t2 * (T::one() / T::lit(720.0)
                + t2 * (T::one() / T::lit(30240.0) + t2 * (T::one() / T::lit(1209600.0) + t2 / T::lit(47900160.0))))
    } else {
        let half = theta * T::lit(0.5);
        (T::one() - half * half.cos() / half.sin()) / (theta * theta)
    }
}

/// Killing frame at `ω`; refused within `boundary_eps` of the ball boundary.
pub fn killing_frame<T: Real>(omega: &OrientationVector<T>, boundary_eps: T) -> Result<KillingFrame<T>> {
    let theta = omega.angle();
    let limit = T::pi() - boundary_eps;
    if theta >= limit {
        return Err(Error::NearBoundary {
            norm: theta.as_f64(),
            limit: limit.as_f64(),
        });
    }
    Ok(killing_frame_unchecked(omega.vector()))
}

pub(crate) fn killing_frame_unchecked<T: Real>(omega: &Vector3<T>) -> KillingFrame<T> {
    let theta = omega.norm();
    let (_, b) = rodrigues_coefficients(theta);
    let k = hat(omega);
    let k2 = k * k;
    let id = Matrix3::identity();
    KillingFrame {
        n: id - k * b + k2 * jacobian_c(theta),
        m: id + k * T::lit(0.5) + k2 * jacobian_inverse_d(theta),
    }
}

/// Classical component form of the rotated observable: `(e^k·R·e_j)(e^j·a)`.
pub fn rotate_observable<T: Real>(r: &RotationMatrix<T>, a: &Vector3<T>) -> Vector3<T> {
    let mut out = Vector3::zeros();
    for k in 0..3 {
        for j in 0..3 {
            out[k] += r.0[(k, j)] * a[j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn ov(x: f64, y: f64, z: f64) -> OrientationVector<f64> {
        OrientationVector::new(Vector3::new(x, y, z)).unwrap()
    }

    /// Truncated power series of exp(K), independent of the Rodrigues path.
    fn series_exp(omega: &Vector3<f64>, terms: usize) -> Matrix3<f64> {
        let k = omega.x * generator::<f64>(0).unwrap()
            + omega.y * generator::<f64>(1).unwrap()
            + omega.z * generator::<f64>(2).unwrap();
        let mut term = Matrix3::identity();
        let mut sum = Matrix3::identity();
        for i in 1..terms {
            term = term * k / i as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn generator_acts_as_cross_product() {
        let g3 = generator::<f64>(2).unwrap();
        assert_eq!(g3 * Vector3::x(), Vector3::y());
        let g1 = generator::<f64>(0).unwrap();
        assert_eq!(g1 * Vector3::x(), Vector3::zeros());
        let g2 = generator::<f64>(1).unwrap();
        assert_eq!(g2 * Vector3::new(0.0, 0.0, 2.0), Vector3::new(2.0, 0.0, 0.0));
        assert!(matches!(generator::<f64>(3), Err(Error::AxisOutOfRange(3))));
    }

    #[test]
    fn exp_of_zero_and_quarter_turn() {
        assert_eq!(*exp_map(&ov(0.0, 0.0, 0.0)).matrix(), Matrix3::identity());
        let r = exp_map(&ov(0.0, 0.0, PI / 2.0));
        assert_relative_eq!(r.apply(&Vector3::x()), Vector3::y(), epsilon = 1e-15);
        assert_relative_eq!(r.apply(&Vector3::y()), -Vector3::x(), epsilon = 1e-15);
        assert_relative_eq!(r.apply(&Vector3::z()), Vector3::z(), epsilon = 1e-15);
    }

    #[test]
    fn exp_matches_power_series() {
        let w = Vector3::new(0.3, -0.2, 0.1);
        let r = exp_map(&OrientationVector::new(w).unwrap());
        let diff = (r.matrix() - series_exp(&w, 30)).abs().max();
        assert!(diff < 1e-12, "diff {diff}");
        // series branch
        let w = Vector3::new(3e-5, -1e-5, 2e-5);
        let diff = (exp_unchecked(&w) - series_exp(&w, 10)).abs().max();
        assert!(diff < 1e-16);
    }

    #[test]
    fn rejects_outside_ball() {
        assert!(OrientationVector::new(Vector3::new(0.0, 0.0, 3.2)).is_err());
        assert!(OrientationVector::new(Vector3::new(0.0, 0.0, PI)).is_ok());
    }

    #[test]
    fn log_identity_and_quarter_turn() {
        assert_eq!(*log_map(&RotationMatrix::<f64>::identity()).vector(), Vector3::zeros());
        let w = ov(0.0, 0.0, PI / 2.0);
        assert_relative_eq!(log_map(&exp_map(&w)).vector(), w.vector(), epsilon = 1e-15);
    }

    #[test]
    fn log_near_and_at_pi() {
        let axis = Vector3::new(1.0, -2.0, 0.5).normalize();
        for &theta in &[3.0, PI - 1e-3, PI - 1e-7] {
            let w = ov(axis.x * theta, axis.y * theta, axis.z * theta);
            let back = log_map(&exp_map(&w));
            assert!(back.angle() <= PI);
            assert!((back.vector() - w.vector()).norm() < 1e-9, "theta {theta}");
        }
        let w = ov(axis.x * PI, axis.y * PI, axis.z * PI);
        let back = log_map(&exp_map(&w));
        assert_relative_eq!(back.angle(), PI, epsilon = 1e-12);
        let same = (exp_map(&back).matrix() - exp_map(&w).matrix()).abs().max();
        assert!(same < 1e-12);
    }

    #[test]
    fn log_rejects_non_rotation() {
        let m = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(RotationMatrix::new(m).is_err());
        let reflection = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(RotationMatrix::new(reflection).is_err());
    }

    fn fd_killing(w: &Vector3<f64>, h: f64) -> Matrix3<f64> {
        let r = exp_unchecked(w);
        let mut n = Matrix3::zeros();
        for j in 0..3 {
            let mut e = Vector3::zeros();
            e[j] = h;
            let d = (exp_unchecked(&(w + e)) - exp_unchecked(&(w - e))) / (2.0 * h);
            n.set_column(j, &vee(&(r.transpose() * d)));
        }
        n
    }

    #[test]
    fn killing_frame_flat_at_identity() {
        let f = killing_frame(&ov(0.0, 0.0, 0.0), 1e-6).unwrap();
        assert_eq!(f.n, Matrix3::identity());
        assert_eq!(f.m, Matrix3::identity());
    }

    #[test]
    fn killing_frame_matches_finite_differences() {
        for w in [
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(0.01, -0.02, 0.015),
            Vector3::new(1.2, -0.7, 2.1),
        ] {
            let f = killing_frame(&OrientationVector::new(w).unwrap(), 1e-6).unwrap();
            let diff = (f.n - fd_killing(&w, 1e-5)).abs().max();
            assert!(diff < 1e-8, "w {w:?} diff {diff}");
            assert!(f.duality_residual() < 1e-12);
        }
    }

    #[test]
    fn jacobian_series_agree_with_closed_form_at_switch() {
        let t: f64 = JACOBIAN_SERIES_ANGLE;
        let c_direct = (t - t.sin()) / (t * t * t);
        let d_direct = (1.0 - (t / 2.0) / (t / 2.0).tan()) / (t * t);
        assert!((jacobian_c(t * (1.0 - 1e-15)) - c_direct).abs() < 1e-11);
        assert!((jacobian_inverse_d(t * (1.0 - 1e-15)) - d_direct).abs() < 1e-11);
    }

    #[test]
    fn killing_frame_refused_near_boundary() {
        let w = ov(0.0, PI - 1e-7, 0.0);
        assert!(matches!(killing_frame(&w, 1e-6), Err(Error::NearBoundary { .. })));
    }

    #[test]
    fn rotate_observable_cases() {
        let a = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(rotate_observable(&RotationMatrix::identity(), &a), a);
        let q = exp_map(&ov(0.0, 0.0, PI / 2.0));
        assert_relative_eq!(rotate_observable(&q, &Vector3::x()), Vector3::y(), epsilon = 1e-15);
        let r = exp_map(&ov(0.4, -1.1, 0.9));
        assert_relative_eq!(rotate_observable(&r, &a).norm(), a.norm(), epsilon = 1e-12);
        assert_relative_eq!(rotate_observable(&r, &a), r.apply(&a), epsilon = 1e-15);
    }

    #[test]
    fn single_precision_instantiation() {
        let w = OrientationVector::new(Vector3::new(0.3f32, -0.2, 0.1)).unwrap();
        let r = exp_map(&w);
        let orth = (r.matrix().transpose() * r.matrix() - Matrix3::identity()).abs().max();
        assert!(orth < 1e-6);
        assert!((log_map(&r).vector() - w.vector()).norm() < 1e-5);
        let f = killing_frame(&w, 1e-3).unwrap();
        assert!(f.duality_residual() < 1e-5);
    }
}
