//! Vibrational mode basis `X_{μα}` and its dual `X^β_μ`.
//!
//! Modes are stored as columns of a `3N × (3N−6)` matrix in mass-weighted
//! Cartesian coordinates, row `3μ + c` holding component `c` of nucleus `μ`.
//! A mode satisfies the Eckart conditions exactly when its column is
//! orthogonal to the six mass-weighted translation / infinitesimal rotation
//! directions returned by [`external_subspace`].

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::molecule::{Molecule, PREPARED_TOLERANCE};
use crate::scalar::Real;

/// Relative norm below which a projected candidate counts as dependent.
const RANK_TOLERANCE: f64 = 1e-8;
/// Relative eigenvalue gap below which Hessian eigenpairs count as degenerate.
const CLUSTER_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis<T: Real> {
    x: DMatrix<T>,
    dual: DMatrix<T>,
    frequencies: Option<Vec<T>>,
}

impl<T: Real> ModeBasis<T> {
    /// Orthonormal basis; the dual coincides with the basis itself.
    pub fn orthonormal(x: DMatrix<T>) -> Self {
        let dual = x.clone();
        Self {
            x,
            dual,
            frequencies: None,
        }
    }

    /// Arbitrary full-rank basis; the dual is `X (XᵀX)⁻¹`.
    pub fn from_vectors(x: DMatrix<T>) -> Result<Self> {
        if !x.nrows().is_multiple_of(3) {
            return Err(Error::Dimension(format!(
                "mode vectors have length {}, not a multiple of 3",
                x.nrows()
            )));
        }
        let gram = x.tr_mul(&x);
        let inv = gram.try_inverse().ok_or(Error::RankDeficient)?;
        let dual = &x * inv;
        Ok(Self {
            x,
            dual,
            frequencies: None,
        })
    }

    pub fn vectors(&self) -> &DMatrix<T> {
        &self.x
    }

    pub fn dual_vectors(&self) -> &DMatrix<T> {
        &self.dual
    }

    /// Harmonic frequencies when the basis came from a Hessian
    /// (negative for negative curvature).
    pub fn frequencies(&self) -> Option<&[T]> {
        self.frequencies.as_deref()
    }

    pub fn mode_count(&self) -> usize {
        self.x.ncols()
    }

    pub fn nuclear_count(&self) -> usize {
        self.x.nrows() / 3
    }

    /// `X_{μα}`
    pub fn vector(&self, mu: usize, alpha: usize) -> Vector3<T> {
        block(&self.x, mu, alpha)
    }

    /// `X^α_μ`
    pub fn dual_vector(&self, mu: usize, alpha: usize) -> Vector3<T> {
        block(&self.dual, mu, alpha)
    }

    pub(crate) fn check_molecule(&self, mol: &Molecule<T>) -> Result<()> {
        if self.x.nrows() != 3 * mol.nuclear_count() {
            return Err(Error::Dimension(format!(
                "basis has {} rows, molecule has {} nuclei",
                self.x.nrows(),
                mol.nuclear_count()
            )));
        }
        Ok(())
    }
}

fn block<T: Real>(m: &DMatrix<T>, mu: usize, alpha: usize) -> Vector3<T> {
    Vector3::new(m[(3 * mu, alpha)], m[(3 * mu + 1, alpha)], m[(3 * mu + 2, alpha)])
}

/// How [`build_modes`] obtains its candidate directions.
#[derive(Debug, Clone)]
pub enum ModeSeed<T: Real> {
    /// Gaussian random candidates from a seeded generator.
    Random(u64),
    /// `3N × (3N−6)` candidate matrix in mass-weighted coordinates.
    Candidates(DMatrix<T>),
    /// Cartesian `3N × 3N` Hessian; mass-weighted internally.
    Hessian(DMatrix<T>),
}

/// Orthonormal basis of the six mass-weighted external directions
/// (translations `√M_μ e_j` then rotations `√M_μ e_j × R⁰_μ`).
pub fn external_subspace<T: Real>(mol: &Molecule<T>) -> Result<DMatrix<T>> {
    mol.check_prepared(T::tol(PREPARED_TOLERANCE))?;
    let n = mol.nuclear_count();
    let mut raw = DMatrix::zeros(3 * n, 6);
    for (mu, nuc) in mol.nuclei.iter().enumerate() {
        let s = nuc.mass.sqrt();
        for j in 0..3 {
            raw[(3 * mu + j, j)] = s;
            let mut e = Vector3::zeros();
            e[j] = T::one();
            let rot = e.cross(&nuc.position) * s;
            for c in 0..3 {
                raw[(3 * mu + c, 3 + j)] = rot[c];
            }
        }
    }
    let empty = DMatrix::zeros(3 * n, 0);
    orthonormalize(raw, &empty).map_err(|_| {
        let i = mol.inertia_tensor();
        Error::Collinear {
            smallest: i.diagonal().min().as_f64(),
            largest: i.diagonal().max().as_f64(),
        }
    })
}

/// Projector `1 − E Eᵀ` onto the internal (vibrational) subspace.
pub fn internal_projector<T: Real>(mol: &Molecule<T>) -> Result<DMatrix<T>> {
    let e = external_subspace(mol)?;
    let dim = e.nrows();
    Ok(DMatrix::identity(dim, dim) - &e * e.transpose())
}

/// Modified Gram–Schmidt (two passes) of `candidates` against the orthonormal
/// columns of `against`; fails if a column loses too much norm.
fn orthonormalize<T: Real>(mut candidates: DMatrix<T>, against: &DMatrix<T>) -> Result<DMatrix<T>> {
    let tol = T::tol(RANK_TOLERANCE);
    for k in 0..candidates.ncols() {
        let original = candidates.column(k).norm();
        if original == T::zero() {
            return Err(Error::RankDeficient);
        }
        for _ in 0..2 {
            for a in 0..against.ncols() {
                let proj = against.column(a).dot(&candidates.column(k));
                let update = against.column(a) * proj;
                let mut col = candidates.column_mut(k);
                col -= update;
            }
            for prev in 0..k {
                let proj = candidates.column(prev).dot(&candidates.column(k));
                let update = candidates.column(prev) * proj;
                let mut col = candidates.column_mut(k);
                col -= update;
            }
        }
        let norm = candidates.column(k).norm();
        if norm <= tol * original {
            return Err(Error::RankDeficient);
        }
        let mut col = candidates.column_mut(k);
        col /= norm;
    }
    Ok(candidates)
}

/// Builds an orthonormal, Eckart-satisfying mode basis.
pub fn build_modes<T: Real>(mol: &Molecule<T>, seed: &ModeSeed<T>) -> Result<ModeBasis<T>> {
    let external = external_subspace(mol)?;
    let dim = external.nrows();
    let count = mol.mode_count();
    match seed {
        ModeSeed::Random(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*s);
            let candidates = DMatrix::from_fn(dim, count, |_, _| {
                let g: f64 = StandardNormal.sample(&mut rng);
                T::lit(g)
            });
            Ok(ModeBasis::orthonormal(orthonormalize(candidates, &external)?))
        }
        ModeSeed::Candidates(c) => {
            if c.nrows() != dim || c.ncols() != count {
                return Err(Error::Dimension(format!(
                    "candidate matrix is {}x{}, expected {}x{}",
                    c.nrows(),
                    c.ncols(),
                    dim,
                    count
                )));
            }
            Ok(ModeBasis::orthonormal(orthonormalize(c.clone(), &external)?))
        }
        ModeSeed::Hessian(h) => hessian_modes(mol, &external, h),
    }
}

/// Deterministic orthonormal basis of the complement of `external`,
/// picking Cartesian unit vectors by largest remaining norm.
fn internal_basis<T: Real>(external: &DMatrix<T>, count: usize) -> Result<DMatrix<T>> {
    let dim = external.nrows();
    let projector = DMatrix::identity(dim, dim) - external * external.transpose();
    let mut chosen: DMatrix<T> = DMatrix::zeros(dim, count);
    let mut residual = projector;
    for k in 0..count {
        let (best, norm) = (0..dim)
            .map(|i| (i, residual.column(i).norm()))
            .fold((0, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if norm <= T::tol(RANK_TOLERANCE) {
            return Err(Error::RankDeficient);
        }
        let v: DVector<T> = residual.column(best) / norm;
        chosen.set_column(k, &v);
        // deflate: remove v from every remaining candidate
        let vt_r = v.transpose() * &residual;
        residual -= &v * vt_r;
    }
    Ok(chosen)
}

fn hessian_modes<T: Real>(mol: &Molecule<T>, external: &DMatrix<T>, hessian: &DMatrix<T>) -> Result<ModeBasis<T>> {
    let dim = external.nrows();
    if hessian.nrows() != dim || hessian.ncols() != dim {
        return Err(Error::Dimension(format!(
            "hessian is {}x{}, expected {dim}x{dim}",
            hessian.nrows(),
            hessian.ncols()
        )));
    }
    let scale = hessian.abs().max().max(T::one());
    let asym = (hessian - hessian.transpose()).abs().max();
    if asym > T::tol(1e-10) * scale {
        return Err(Error::HessianNotSymmetric(asym.as_f64()));
    }
    let inv_sqrt: Vec<T> = mol
        .masses()
        .flat_map(|m| std::iter::repeat_n(T::one() / m.sqrt(), 3))
        .collect();
    let weighted = DMatrix::from_fn(dim, dim, |i, j| {
        (hessian[(i, j)] + hessian[(j, i)]) * T::lit(0.5) * inv_sqrt[i] * inv_sqrt[j]
    });

    let count = mol.mode_count();
    let basis = internal_basis(external, count)?;
    let reduced = basis.tr_mul(&(&weighted * &basis));
    let eig = SymmetricEigen::try_new(reduced, T::default_epsilon(), 100_000)
        .ok_or(Error::NonConvergence("projected hessian"))?;

    let mut pairs: Vec<(T, DVector<T>)> = (0..count)
        .map(|k| {
            let mut v = &basis * eig.eigenvectors.column(k);
            let lead = v.iamax();
            if v[lead] < T::zero() {
                v = -v;
            }
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    sort_degenerate_clusters(&mut pairs);

    let mut x = DMatrix::zeros(dim, count);
    let mut freqs = Vec::with_capacity(count);
    for (k, (lambda, v)) in pairs.into_iter().enumerate() {
        x.set_column(k, &v);
        let f = lambda.abs().sqrt();
        freqs.push(if lambda < T::zero() { -f } else { f });
    }
    let mut out = ModeBasis::orthonormal(x);
    out.frequencies = Some(freqs);
    Ok(out)
}

/// Within runs of (nearly) equal eigenvalues, order vectors lexicographically
/// by component, largest first.
fn sort_degenerate_clusters<T: Real>(pairs: &mut [(T, DVector<T>)]) {
    let scale = pairs.iter().fold(T::one(), |a, (l, _)| a.max(l.abs()));
    let gap = T::tol(CLUSTER_TOLERANCE) * scale;
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[end].0 - pairs[end - 1].0).abs() <= gap {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|a, b| {
                for (x, y) in a.1.iter().zip(b.1.iter()) {
                    if (*x - *y).abs() > gap {
                        return y.partial_cmp(x).unwrap();
                    }
                }
                std::cmp::Ordering::Equal
            });
        }
        start = end;
    }
}

/// Max-norm residuals of the Eckart and duality conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EckartResiduals<T: Real> {
    /// `|Σ_μ M_μ R⁰_μ|`
    pub center_of_mass: T,
    /// `max_α |Σ_μ √M_μ X_{μα}|`
    pub momentum: T,
    /// `max_α |Σ_μ √M_μ R⁰_μ × X_{μα}|`
    pub angular_momentum: T,
    /// `max_{αβ} |Σ_μ X_{μα}·X^β_μ − δ|`
    pub duality: T,
}

impl<T: Real> EckartResiduals<T> {
    pub fn max(&self) -> T {
        self.center_of_mass
            .max(self.momentum)
            .max(self.angular_momentum)
            .max(self.duality)
    }
}

pub fn verify_eckart<T: Real>(mol: &Molecule<T>, basis: &ModeBasis<T>) -> Result<EckartResiduals<T>> {
    basis.check_molecule(mol)?;
    let mut momentum = T::zero();
    let mut angular = T::zero();
    for alpha in 0..basis.mode_count() {
        let mut p = Vector3::zeros();
        let mut l = Vector3::zeros();
        for (mu, nuc) in mol.nuclei.iter().enumerate() {
            let x = basis.vector(mu, alpha) * nuc.mass.sqrt();
            p += x;
            l += nuc.position.cross(&x);
        }
        momentum = momentum.max(p.norm());
        angular = angular.max(l.norm());
    }
    let k = basis.mode_count();
    let gram = basis.x.tr_mul(&basis.dual);
    let duality = if k == 0 {
        T::zero()
    } else {
        (gram - DMatrix::identity(k, k)).abs().max()
    };
    Ok(EckartResiduals {
        center_of_mass: mol.mass_weighted_sum().norm(),
        momentum,
        angular_momentum: angular,
        duality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molecule::{prepare_equilibrium, Nucleus};
    use approx::assert_relative_eq;

    fn triatomic() -> Molecule<f64> {
        let raw = Molecule::from_nuclei(vec![
            Nucleus::new(1.0, Vector3::new(1.0, 0.0, 0.0)),
            Nucleus::new(1.0, Vector3::new(-1.0, 0.0, 0.0)),
            Nucleus::new(1.0, Vector3::new(0.0, 1.0, 0.0)),
        ])
        .unwrap();
        prepare_equilibrium(&raw).unwrap()
    }

    fn pentatomic() -> Molecule<f64> {
        let raw = Molecule::from_nuclei(vec![
            Nucleus::new(12.0, Vector3::new(0.0, 0.0, 0.0)),
            Nucleus::new(1.0, Vector3::new(1.1, 0.2, 0.1)),
            Nucleus::new(1.0, Vector3::new(-0.4, 1.0, -0.3)),
            Nucleus::new(16.0, Vector3::new(-0.3, -0.9, 0.6)),
            Nucleus::new(14.0, Vector3::new(0.2, 0.1, -1.3)),
        ])
        .unwrap();
        prepare_equilibrium(&raw).unwrap()
    }

    #[test]
    fn external_subspace_is_orthonormal() {
        let mol = triatomic();
        let e = external_subspace(&mol).unwrap();
        assert_eq!(e.ncols(), 6);
        let gram = e.tr_mul(&e);
        assert!((gram - DMatrix::identity(6, 6)).abs().max() < 1e-12);
        assert_eq!(3 * mol.nuclear_count() - 6, 3);
    }

    #[test]
    fn raw_translation_and_rotation_orthogonal_when_prepared() {
        let mol = pentatomic();
        for j in 0..3 {
            for k in 0..3 {
                let mut e = Vector3::zeros();
                e[k] = 1.0;
                let mut dot = 0.0;
                for nuc in &mol.nuclei {
                    let t = Vector3::from_fn(|c, _| if c == j { nuc.mass.sqrt() } else { 0.0 });
                    let r = e.cross(&nuc.position) * nuc.mass.sqrt();
                    dot += t.dot(&r);
                }
                assert!(dot.abs() < 1e-12);
            }
        }
    }

    /// Eckart sums evaluated directly, independent of verify_eckart.
    fn eckart_sums(mol: &Molecule<f64>, basis: &ModeBasis<f64>) -> (f64, f64) {
        let mut worst = (0.0f64, 0.0f64);
        for a in 0..basis.mode_count() {
            let mut p = Vector3::zeros();
            let mut l = Vector3::zeros();
            for (mu, nuc) in mol.nuclei.iter().enumerate() {
                let x = Vector3::new(
                    basis.vectors()[(3 * mu, a)],
                    basis.vectors()[(3 * mu + 1, a)],
                    basis.vectors()[(3 * mu + 2, a)],
                );
                p += x * nuc.mass.sqrt();
                l += nuc.position.cross(&x) * nuc.mass.sqrt();
            }
            worst = (worst.0.max(p.norm()), worst.1.max(l.norm()));
        }
        worst
    }

    #[test]
    fn random_modes_satisfy_eckart() {
        let mol = triatomic();
        let basis = build_modes(&mol, &ModeSeed::Random(0)).unwrap();
        assert_eq!(basis.mode_count(), 3);
        let (p, l) = eckart_sums(&mol, &basis);
        assert!(p < 1e-10 && l < 1e-10);
        let r = verify_eckart(&mol, &basis).unwrap();
        assert!(r.max() < 1e-10, "{r:?}");
        assert_eq!(basis.vectors(), basis.dual_vectors());
    }

    #[test]
    fn external_seed_is_rank_deficient() {
        let mol = triatomic();
        let e = external_subspace(&mol).unwrap();
        let seed = e.columns(0, 3).into_owned();
        assert!(matches!(
            build_modes(&mol, &ModeSeed::Candidates(seed)),
            Err(Error::RankDeficient)
        ));
    }

    #[test]
    fn projector_idempotent_with_internal_trace() {
        let mol = pentatomic();
        let p = internal_projector(&mol).unwrap();
        assert!((&p * &p - &p).abs().max() < 1e-10);
        assert_relative_eq!(p.trace(), 9.0, epsilon = 1e-10);
    }

    #[test]
    fn subspace_independent_of_seed() {
        let mol = pentatomic();
        let a = build_modes(&mol, &ModeSeed::Random(1)).unwrap();
        let b = build_modes(&mol, &ModeSeed::Random(99)).unwrap();
        let pa = a.vectors() * a.vectors().transpose();
        let pb = b.vectors() * b.vectors().transpose();
        assert!((pa - pb).abs().max() < 1e-10);
    }

    fn spring_hessian(mol: &Molecule<f64>) -> DMatrix<f64> {
        // pairwise springs along bonds, k = 1 + 0.1·(a+b)
        let n = mol.nuclear_count();
        let mut h = DMatrix::zeros(3 * n, 3 * n);
        for a in 0..n {
            for b in a + 1..n {
                let d = (mol.nuclei[a].position - mol.nuclei[b].position).normalize();
                let k = 1.0 + 0.1 * (a + b) as f64;
                let block = d * d.transpose() * k;
                for i in 0..3 {
                    for j in 0..3 {
                        h[(3 * a + i, 3 * a + j)] += block[(i, j)];
                        h[(3 * b + i, 3 * b + j)] += block[(i, j)];
                        h[(3 * a + i, 3 * b + j)] -= block[(i, j)];
                        h[(3 * b + i, 3 * a + j)] -= block[(i, j)];
                    }
                }
            }
        }
        h
    }

    #[test]
    fn hessian_modes_match_projected_eigenvalues() {
        let mol = pentatomic();
        let h = spring_hessian(&mol);
        let basis = build_modes(&mol, &ModeSeed::Hessian(h.clone())).unwrap();
        assert!(verify_eckart(&mol, &basis).unwrap().max() < 1e-10);

        // oracle: dense eigen-solve of P·M^-1/2·H·M^-1/2·P, dropping the six
        // eigenvalues that belong to the external subspace
        let n = mol.nuclear_count();
        let w = DMatrix::from_fn(3 * n, 3 * n, |i, j| {
            h[(i, j)] / (mol.nuclei[i / 3].mass * mol.nuclei[j / 3].mass).sqrt()
        });
        let p = internal_projector(&mol).unwrap();
        let projected = &p * w * &p;
        let eig = SymmetricEigen::new(projected);
        let e = external_subspace(&mol).unwrap();
        let mut internal: Vec<f64> = (0..3 * n)
            .filter(|&k| e.tr_mul(&eig.eigenvectors.column(k)).norm() < 1e-6)
            .map(|k| eig.eigenvalues[k])
            .collect();
        internal.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let freqs = basis.frequencies().unwrap();
        assert_eq!(internal.len(), freqs.len());
        for (f, l) in freqs.iter().zip(&internal) {
            assert!((f - l.sqrt()).abs() < 1e-8, "{f} vs {}", l.sqrt());
        }
        assert!(freqs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn asymmetric_hessian_rejected() {
        let mol = triatomic();
        let mut h = DMatrix::identity(9, 9);
        h[(0, 1)] = 0.5;
        assert!(matches!(
            build_modes(&mol, &ModeSeed::Hessian(h)),
            Err(Error::HessianNotSymmetric(_))
        ));
    }

    #[test]
    fn deliberate_translation_violation() {
        let mol = pentatomic();
        let mut x = build_modes(&mol, &ModeSeed::Random(3)).unwrap().vectors().clone();
        for (mu, nuc) in mol.nuclei.iter().enumerate() {
            x[(3 * mu, 0)] = nuc.mass.sqrt();
            x[(3 * mu + 1, 0)] = 0.0;
            x[(3 * mu + 2, 0)] = 0.0;
        }
        let basis = ModeBasis::from_vectors(x).unwrap();
        let r = verify_eckart(&mol, &basis).unwrap();
        let total: f64 = mol.masses().sum();
        assert_relative_eq!(r.momentum, total, epsilon = 1e-10);
        assert!(r.duality < 1e-10, "dual basis still exact: {}", r.duality);
    }

    #[test]
    fn empty_basis_has_zero_residuals() {
        let mol = triatomic();
        let basis = ModeBasis::orthonormal(DMatrix::zeros(9, 0));
        let r = verify_eckart(&mol, &basis).unwrap();
        assert_eq!(r.momentum, 0.0);
        assert_eq!(r.angular_momentum, 0.0);
        assert_eq!(r.duality, 0.0);
    }

    #[test]
    fn general_dual_satisfies_duality() {
        let mol = pentatomic();
        let ortho = build_modes(&mol, &ModeSeed::Random(5)).unwrap();
        let k = ortho.mode_count();
        let mix = DMatrix::from_fn(k, k, |i, j| if i == j { 2.0 } else { 0.1 * (i + 2 * j) as f64 });
        let skewed = ModeBasis::from_vectors(ortho.vectors() * mix).unwrap();
        let r = verify_eckart(&mol, &skewed).unwrap();
        assert!(r.max() < 1e-10, "{r:?}");
    }
}
