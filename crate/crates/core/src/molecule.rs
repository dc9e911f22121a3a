//! Static description of a molecular system and its Eckart-compliant
//! equilibrium preparation (centre of mass at the origin, principal axes
//! along the coordinate axes).

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lie_so3::RotationMatrix;
use crate::scalar::Real;

/// Relative tolerance used to decide that a molecule is already prepared.
pub const PREPARED_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Nucleus<T: Real> {
    pub mass: T,
    pub position: Vector3<T>,
}

impl<T: Real> Nucleus<T> {
    pub fn new(mass: T, position: Vector3<T>) -> Self {
        Self { mass, position }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassSummary<T: Real> {
    /// `M`, total nuclear mass
    pub nuclear_mass: T,
    /// `𝓜 = M + n·m`
    pub total_mass: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule<T: Real> {
    pub name: String,
    pub nuclei: Vec<Nucleus<T>>,
    pub electron_count: usize,
    pub electron_mass: T,
    pub hbar: T,
}

impl<T: Real> Molecule<T> {
    /// Validates masses and `ħ`; geometric requirements are checked by
    /// [`prepare_equilibrium`].
    pub fn new(
        name: impl Into<String>,
        nuclei: Vec<Nucleus<T>>,
        electron_count: usize,
        electron_mass: T,
        hbar: T,
    ) -> Result<Self> {
        for n in &nuclei {
            if !(n.mass > T::zero()) || !n.mass.is_finite() {
                return Err(Error::InvalidParameter {
                    what: "nuclear mass",
                    value: n.mass.as_f64(),
                });
            }
            if !n.position.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidParameter {
                    what: "nuclear position",
                    value: f64::NAN,
                });
            }
        }
        if !(electron_mass > T::zero()) {
            return Err(Error::InvalidParameter {
                what: "electron mass",
                value: electron_mass.as_f64(),
            });
        }
        if !(hbar > T::zero()) {
            return Err(Error::InvalidParameter {
                what: "hbar",
                value: hbar.as_f64(),
            });
        }
        Ok(Self {
            name: name.into(),
            nuclei,
            electron_count,
            electron_mass,
            hbar,
        })
    }

    /// Convenience constructor: unit electron mass, `ħ = 1`, no electrons.
    pub fn from_nuclei(nuclei: Vec<Nucleus<T>>) -> Result<Self> {
        Self::new("molecule", nuclei, 0, T::one(), T::one())
    }

    pub fn nuclear_count(&self) -> usize {
        self.nuclei.len()
    }

    /// `3N − 6`
    pub fn mode_count(&self) -> usize {
        (3 * self.nuclei.len()).saturating_sub(6)
    }

    pub fn masses(&self) -> impl Iterator<Item = T> + '_ {
        self.nuclei.iter().map(|n| n.mass)
    }

    pub fn positions(&self) -> impl Iterator<Item = &Vector3<T>> + '_ {
        self.nuclei.iter().map(|n| &n.position)
    }

    pub fn mass_summary(&self) -> MassSummary<T> {
        let nuclear_mass = self.masses().fold(T::zero(), |a, m| a + m);
        MassSummary {
            nuclear_mass,
            total_mass: nuclear_mass + T::count(self.electron_count) * self.electron_mass,
        }
    }

    /// `Σ_μ M_μ R⁰_μ`
    pub fn mass_weighted_sum(&self) -> Vector3<T> {
        self.nuclei
            .iter()
            .fold(Vector3::zeros(), |acc, n| acc + n.position * n.mass)
    }

    /// Full inertia tensor `Σ_μ M_μ (|R|² 1 − R Rᵀ)` of the nuclear geometry.
    pub fn inertia_tensor(&self) -> Matrix3<T> {
        inertia_of(self.nuclei.iter().map(|n| (n.mass, n.position)))
    }

    /// Checks both preparation invariants at relative tolerance `tol`.
    pub fn check_prepared(&self, tol: T) -> Result<()> {
        let scale = self
            .nuclei
            .iter()
            .fold(T::zero(), |a, n| a + n.mass * n.position.norm());
        let com = self.mass_weighted_sum().norm();
        if com > tol * scale.max(T::one()) {
            return Err(Error::NotPrepared(format!(
                "mass-weighted position sum {} is not zero",
                com.as_f64()
            )));
        }
        let inertia = self.inertia_tensor();
        let off = off_diagonal_max(&inertia);
        if off > tol * inertia.trace().max(T::one()) {
            return Err(Error::NotPrepared(format!(
                "equilibrium inertia has off-diagonal entry {}",
                off.as_f64()
            )));
        }
        Ok(())
    }
}

pub(crate) fn inertia_of<T: Real>(items: impl Iterator<Item = (T, Vector3<T>)>) -> Matrix3<T> {
    let mut i = Matrix3::zeros();
    for (m, r) in items {
        i += (Matrix3::identity() * r.norm_squared() - r * r.transpose()) * m;
    }
    i
}

fn off_diagonal_max<T: Real>(m: &Matrix3<T>) -> T {
    let mut off = T::zero();
    for j in 0..3 {
        for k in 0..3 {
            if j != k {
                off = off.max(m[(j, k)].abs());
            }
        }
    }
    off
}

/// Rigid motion applied by [`prepare_equilibrium`]: `R⁰ = rotation · (R_raw − translation)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform<T: Real> {
    pub translation: Vector3<T>,
    pub rotation: RotationMatrix<T>,
}

impl<T: Real> RigidTransform<T> {
    pub fn apply_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation.apply(&(p - self.translation))
    }

    pub fn apply_vector(&self, v: &Vector3<T>) -> Vector3<T> {
        self.rotation.apply(v)
    }
}

/// Recentres and rotates `raw` onto its principal axes (moments ascending).
pub fn prepare_equilibrium<T: Real>(raw: &Molecule<T>) -> Result<Molecule<T>> {
    prepare_with_transform(raw).map(|(m, _)| m)
}

/// As [`prepare_equilibrium`], also returning the rigid motion that was applied.
pub fn prepare_with_transform<T: Real>(raw: &Molecule<T>) -> Result<(Molecule<T>, RigidTransform<T>)> {
    let n = raw.nuclear_count();
    if n < 3 {
        return Err(Error::TooFewNuclei(n));
    }
    let summary = raw.mass_summary();
    let com = raw.mass_weighted_sum() / summary.nuclear_mass;

    let extent = raw
        .positions()
        .map(|p| (p - com).norm())
        .fold(T::zero(), |a, b| a.max(b));
    let coincide = T::tol(1e-8) * extent;
    for a in 0..n {
        for b in a + 1..n {
            if (raw.nuclei[a].position - raw.nuclei[b].position).norm() <= coincide {
                return Err(Error::CoincidentNuclei(a, b));
            }
        }
    }

    let centred: Vec<_> = raw.positions().map(|p| p - com).collect();
    let inertia = inertia_of(raw.masses().zip(centred.iter().copied()));
    let axes = principal_axes(&inertia)?;

    let rotation = RotationMatrix::new_unchecked(axes.transpose());
    let mut prepared = raw.clone();
    for (nuc, p) in prepared.nuclei.iter_mut().zip(&centred) {
        nuc.position = rotation.apply(p);
    }
    Ok((
        prepared,
        RigidTransform {
            translation: com,
            rotation,
        },
    ))
}

/// Columns are principal axes with ascending moments, each with its
/// largest-magnitude component positive (the third flipped if needed so
/// the frame is right-handed).
fn principal_axes<T: Real>(inertia: &Matrix3<T>) -> Result<Matrix3<T>> {
    let scale = inertia.trace();
    let (values, vectors) = if off_diagonal_max(inertia) <= T::tol(1e-13) * scale {
        // already diagonal: only a permutation, keeps preparation idempotent
        // even for degenerate moments
        (inertia.diagonal(), Matrix3::identity())
    } else {
        let eig = SymmetricEigen::try_new(*inertia, T::default_epsilon(), 10_000)
            .ok_or(Error::NonConvergence("principal axes"))?;
        (eig.eigenvalues, eig.eigenvectors)
    };

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let smallest = values[order[0]];
    let largest = values[order[2]];
    if !(largest > T::zero()) || smallest <= T::tol(1e-10) * largest {
        return Err(Error::Collinear {
            smallest: smallest.as_f64(),
            largest: largest.as_f64(),
        });
    }

    let mut axes = Matrix3::zeros();
    for (col, &src) in order.iter().enumerate() {
        let mut v = vectors.column(src).into_owned();
        let lead = v.iamax();
        if v[lead] < T::zero() {
            v = -v;
        }
        axes.set_column(col, &v);
    }
    if axes.determinant() < T::zero() {
        let flipped = -axes.column(2);
        axes.set_column(2, &flipped);
    }
    Ok(axes)
}

/// `I₀` with diagonal entries `Σ_μ M_μ (|R⁰_μ|² − (e_k·R⁰_μ)²)` and zero
/// off-diagonal part; fails unless `mol` is prepared.
pub fn equilibrium_inertia<T: Real>(mol: &Molecule<T>) -> Result<Matrix3<T>> {
    mol.check_prepared(T::tol(PREPARED_TOLERANCE))?;
    let mut diag = Vector3::zeros();
    for nuc in &mol.nuclei {
        let r2 = nuc.position.norm_squared();
        for k in 0..3 {
            diag[k] += nuc.mass * (r2 - nuc.position[k] * nuc.position[k]);
        }
    }
    Ok(Matrix3::from_diagonal(&diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_so3::{exp_map, OrientationVector};
    use approx::assert_relative_eq;

    fn unit(points: &[[f64; 3]]) -> Molecule<f64> {
        Molecule::from_nuclei(points.iter().map(|p| Nucleus::new(1.0, Vector3::from(*p))).collect()).unwrap()
    }

    /// Brute-force inertia over (μ, k, l) written out index by index.
    fn inertia_oracle(mol: &Molecule<f64>) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for nuc in &mol.nuclei {
            let r = nuc.position;
            for k in 0..3 {
                for l in 0..3 {
                    let delta = if k == l { r.dot(&r) } else { 0.0 };
                    out[k][l] += nuc.mass * (delta - r[k] * r[l]);
                }
            }
        }
        out
    }

    #[test]
    fn triatomic_is_recentred_and_diagonalised() {
        let raw = unit(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let mol = prepare_equilibrium(&raw).unwrap();
        let com: Vector3<f64> = mol.nuclei.iter().map(|n| n.position * n.mass).sum();
        assert!(com.norm() < 1e-12);
        let i = inertia_oracle(&mol);
        for k in 0..3 {
            for l in 0..3 {
                if k != l {
                    assert!(i[k][l].abs() < 1e-12);
                }
            }
        }
        assert!(i[0][0] <= i[1][1] && i[1][1] <= i[2][2]);
        // planar: Iz = Ix + Iy
        assert_relative_eq!(i[2][2], i[0][0] + i[1][1], epsilon = 1e-12);
        mol.check_prepared(1e-10).unwrap();
    }

    #[test]
    fn preparation_is_idempotent() {
        let raw = unit(&[[0.3, 0.1, -0.2], [-1.0, 0.4, 0.0], [0.2, 1.3, 0.5], [0.9, -0.8, 0.6]]);
        let once = prepare_equilibrium(&raw).unwrap();
        let twice = prepare_equilibrium(&once).unwrap();
        for (a, b) in once.nuclei.iter().zip(&twice.nuclei) {
            assert!((a.position - b.position).norm() < 1e-12);
        }
    }

    #[test]
    fn symmetric_top_is_idempotent() {
        let mol = unit(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]]);
        let prepared = prepare_equilibrium(&mol).unwrap();
        assert_eq!(prepared, mol);
    }

    #[test]
    fn collinear_and_coincident_rejected() {
        let line = unit(&[[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [-3.0, 0.0, 0.0]]);
        assert!(matches!(prepare_equilibrium(&line), Err(Error::Collinear { .. })));
        let dup = unit(&[[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert!(matches!(prepare_equilibrium(&dup), Err(Error::CoincidentNuclei(0, 1))));
        let pair = unit(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert!(matches!(prepare_equilibrium(&pair), Err(Error::TooFewNuclei(2))));
    }

    #[test]
    fn invalid_parameters_rejected() {
        let bad = Molecule::from_nuclei(vec![Nucleus::new(-1.0, Vector3::zeros())]);
        assert!(bad.is_err());
        assert!(Molecule::<f64>::new("x", vec![], 0, 1.0, 0.0).is_err());
    }

    #[test]
    fn square_inertia_is_diag_2_2_4() {
        let mol = unit(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]]);
        let i0 = equilibrium_inertia(&mol).unwrap();
        let oracle = inertia_oracle(&mol);
        assert_eq!(i0, Matrix3::from_diagonal(&Vector3::new(2.0, 2.0, 4.0)));
        for k in 0..3 {
            assert_eq!(i0[(k, k)], oracle[k][k]);
        }
    }

    #[test]
    fn unprepared_inertia_rejected() {
        let raw = unit(&[[1.0, 0.5, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.3]]);
        assert!(matches!(equilibrium_inertia(&raw), Err(Error::NotPrepared(_))));
    }

    #[test]
    fn mass_summary_counts_electrons() {
        let mut mol = unit(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        mol.electron_count = 4;
        mol.electron_mass = 0.25;
        let s = mol.mass_summary();
        assert_eq!(s.nuclear_mass, 3.0);
        assert_eq!(s.total_mass, 4.0);
    }

    #[test]
    fn moments_invariant_under_input_rotation() {
        let raw = unit(&[[0.3, 0.1, -0.2], [-1.0, 0.4, 0.0], [0.2, 1.3, 0.5], [0.9, -0.8, 0.6]]);
        let r = exp_map(&OrientationVector::new(Vector3::new(0.7, -1.9, 0.4)).unwrap());
        let mut turned = raw.clone();
        for n in &mut turned.nuclei {
            n.position = r.apply(&n.position) + Vector3::new(5.0, -2.0, 1.0);
        }
        let a = equilibrium_inertia(&prepare_equilibrium(&raw).unwrap()).unwrap();
        let b = equilibrium_inertia(&prepare_equilibrium(&turned).unwrap()).unwrap();
        assert!((a - b).abs().max() < 1e-10);
    }
}
