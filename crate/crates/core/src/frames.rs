//! Classical coordinate pipeline: centre-of-mass split, Eckart rotation,
//! rest-frame observables and internal (mode / electron / rotation) variables.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, SymmetricEigen, Vector3};
use serde::Serialize;

use crate::angmom::{
    build_inertia, deformation_angmom, electronic_angmom, inertia_at_checked, rest_angmom, InertiaModel,
};
use crate::error::{Error, Result};
use crate::lie_so3::{exp_unchecked, log_map, OrientationVector, RotationMatrix};
use crate::modes::ModeBasis;
use crate::molecule::Molecule;
use crate::scalar::Real;

/// Relative tolerance on the Eckart rotation condition.
pub const ECKART_TOLERANCE: f64 = 1e-10;
/// Relative eigenvalue gap of the quaternion matrix below which the
/// maximising rotation is reported as non-unique.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;
const POLISH_STEPS: usize = 4;

/// Positions and momenta of every particle, nuclei first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Configuration<T: Real> {
    pub nuclear_positions: Vec<Vector3<T>>,
    pub nuclear_momenta: Vec<Vector3<T>>,
    pub electron_positions: Vec<Vector3<T>>,
    pub electron_momenta: Vec<Vector3<T>>,
}

impl<T: Real> Configuration<T> {
    /// Every particle at the origin, at rest.
    pub fn zeros(mol: &Molecule<T>) -> Self {
        let (n, e) = (mol.nuclear_count(), mol.electron_count);
        Self {
            nuclear_positions: vec![Vector3::zeros(); n],
            nuclear_momenta: vec![Vector3::zeros(); n],
            electron_positions: vec![Vector3::zeros(); e],
            electron_momenta: vec![Vector3::zeros(); e],
        }
    }

    /// Nuclei at the equilibrium geometry, electrons at the origin, all at rest.
    pub fn equilibrium(mol: &Molecule<T>) -> Self {
        Self {
            nuclear_positions: mol.positions().copied().collect(),
            ..Self::zeros(mol)
        }
    }

    pub fn check_against(&self, mol: &Molecule<T>) -> Result<()> {
        let (n, e) = (mol.nuclear_count(), mol.electron_count);
        if self.nuclear_positions.len() != n
            || self.nuclear_momenta.len() != n
            || self.electron_positions.len() != e
            || self.electron_momenta.len() != e
        {
            return Err(Error::Dimension(format!(
                "configuration has {}/{} nuclei and {}/{} electrons, molecule has {} and {}",
                self.nuclear_positions.len(),
                self.nuclear_momenta.len(),
                self.electron_positions.len(),
                self.electron_momenta.len(),
                n,
                e
            )));
        }
        Ok(())
    }

    /// Applies `r` to every position and momentum.
    pub fn rotated(&self, r: &Matrix3<T>) -> Self {
        let map = |v: &Vec<Vector3<T>>| v.iter().map(|x| r * x).collect();
        Self {
            nuclear_positions: map(&self.nuclear_positions),
            nuclear_momenta: map(&self.nuclear_momenta),
            electron_positions: map(&self.electron_positions),
            electron_momenta: map(&self.electron_momenta),
        }
    }

    /// Largest coordinate difference between two configurations of equal shape.
    pub fn max_difference(&self, other: &Self) -> T {
        let pairs = [
            (&self.nuclear_positions, &other.nuclear_positions),
            (&self.nuclear_momenta, &other.nuclear_momenta),
            (&self.electron_positions, &other.electron_positions),
            (&self.electron_momenta, &other.electron_momenta),
        ];
        pairs
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()))
            .map(|(x, y)| (x - y).abs().max())
            .fold(T::zero(), |a, b| a.max(b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComSplit<T: Real> {
    pub com_position: Vector3<T>,
    pub com_momentum: Vector3<T>,
    pub relative: Configuration<T>,
}

/// `𝒬 = (Σ M R + m Σ r)/𝓜`, `𝒫 = Σ P + Σ p`; primed positions are measured
/// from `𝒬` and primed momenta have the mass-proportional share of `𝒫` removed.
pub fn com_split<T: Real>(mol: &Molecule<T>, cfg: &Configuration<T>) -> Result<ComSplit<T>> {
    cfg.check_against(mol)?;
    let total = mol.mass_summary().total_mass;
    let m = mol.electron_mass;
    let weighted = mol
        .masses()
        .zip(&cfg.nuclear_positions)
        .fold(Vector3::zeros(), |a, (mass, r)| a + r * mass)
        + cfg.electron_positions.iter().fold(Vector3::zeros(), |a, r| a + r * m);
    let com_position = weighted / total;
    let com_momentum = cfg
        .nuclear_momenta
        .iter()
        .chain(&cfg.electron_momenta)
        .fold(Vector3::zeros(), |a, p| a + p);
    let velocity = com_momentum / total;
    let relative = Configuration {
        nuclear_positions: cfg.nuclear_positions.iter().map(|r| r - com_position).collect(),
        nuclear_momenta: mol
            .masses()
            .zip(&cfg.nuclear_momenta)
            .map(|(mass, p)| p - velocity * mass)
            .collect(),
        electron_positions: cfg.electron_positions.iter().map(|r| r - com_position).collect(),
        electron_momenta: cfg.electron_momenta.iter().map(|p| p - velocity * m).collect(),
    };
    Ok(ComSplit {
        com_position,
        com_momentum,
        relative,
    })
}

/// Mass-weighted position and plain momentum sums of a configuration; both
/// vanish for relative and rest configurations.
pub fn com_sums<T: Real>(mol: &Molecule<T>, cfg: &Configuration<T>) -> (Vector3<T>, Vector3<T>) {
    let m = mol.electron_mass;
    let pos = mol
        .masses()
        .zip(&cfg.nuclear_positions)
        .fold(Vector3::zeros(), |a, (mass, r)| a + r * mass)
        + cfg.electron_positions.iter().fold(Vector3::zeros(), |a, r| a + r * m);
    let mom = cfg
        .nuclear_momenta
        .iter()
        .chain(&cfg.electron_momenta)
        .fold(Vector3::zeros(), |a, p| a + p);
    (pos, mom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EckartFrame<T: Real> {
    pub rotation: RotationMatrix<T>,
    pub orientation: OrientationVector<T>,
    /// `‖Σ M R⁰ × (R⁻¹R′)‖`
    pub residual: T,
    /// `Σ M ‖R⁰‖‖R′‖`, the natural size of the residual.
    pub scale: T,
    /// Top two eigenvalues of the quaternion problem (nearly) coincide.
    pub degenerate: bool,
}

impl<T: Real> EckartFrame<T> {
    pub fn identity() -> Self {
        Self {
            rotation: RotationMatrix::identity(),
            orientation: OrientationVector::zero(),
            residual: T::zero(),
            scale: T::one(),
            degenerate: false,
        }
    }

    pub fn relative_residual(&self) -> T {
        if self.scale > T::zero() {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

fn eckart_gradient<T: Real>(mol: &Molecule<T>, rotation: &Matrix3<T>, relative: &[Vector3<T>]) -> Vector3<T> {
    mol.nuclei.iter().zip(relative).fold(Vector3::zeros(), |a, (n, r)| {
        a + n.position.cross(&rotation.tr_mul(r)) * n.mass
    })
}

fn quaternion_rotation<T: Real>(q: &[T; 4]) -> Matrix3<T> {
    let [w, x, y, z] = *q;
    let two = T::lit(2.0);
    let one = T::one();
    Matrix3::new(
        one - two * (y * y + z * z),
        two * (x * y - w * z),
        two * (x * z + w * y),
        two * (x * y + w * z),
        one - two * (x * x + z * z),
        two * (y * z - w * x),
        two * (x * z - w * y),
        two * (y * z + w * x),
        one - two * (x * x + y * y),
    )
}

/// Rotation `R` maximising `Σ M R⁰·(R⁻¹R′)`, whose stationarity condition is
/// `Σ M R⁰ × (R⁻¹R′) = 0`.
pub fn solve_eckart<T: Real>(mol: &Molecule<T>, relative_positions: &[Vector3<T>]) -> Result<EckartFrame<T>> {
    mol.check_prepared(T::tol(crate::molecule::PREPARED_TOLERANCE))?;
    if relative_positions.len() != mol.nuclear_count() {
        return Err(Error::Dimension(format!(
            "{} positions for {} nuclei",
            relative_positions.len(),
            mol.nuclear_count()
        )));
    }
    let scale = mol
        .nuclei
        .iter()
        .zip(relative_positions)
        .fold(T::zero(), |a, (n, r)| a + n.mass * n.position.norm() * r.norm());
    if !(scale > T::zero()) {
        return Err(Error::InvalidParameter {
            what: "relative positions (all zero)",
            value: 0.0,
        });
    }

    // Horn's quaternion matrix from S = Σ M R⁰ R′ᵀ
    let s = mol
        .nuclei
        .iter()
        .zip(relative_positions)
        .fold(Matrix3::zeros(), |a, (n, r)| a + n.position * r.transpose() * n.mass);
    let (sxx, sxy, sxz) = (s[(0, 0)], s[(0, 1)], s[(0, 2)]);
    let (syx, syy, syz) = (s[(1, 0)], s[(1, 1)], s[(1, 2)]);
    let (szx, szy, szz) = (s[(2, 0)], s[(2, 1)], s[(2, 2)]);
    let n = Matrix4::new(
        sxx + syy + szz,
        syz - szy,
        szx - sxz,
        sxy - syx,
        syz - szy,
        sxx - syy - szz,
        sxy + syx,
        szx + sxz,
        szx - sxz,
        sxy + syx,
        -sxx + syy - szz,
        syz + szy,
        sxy - syx,
        szx + sxz,
        syz + szy,
        -sxx - syy + szz,
    );
    let eig =
        SymmetricEigen::try_new(n, T::default_epsilon(), 0).ok_or(Error::NonConvergence("quaternion eigenproblem"))?;
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let (top, second) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    let degenerate = top - second <= T::tol(DEGENERACY_TOLERANCE) * scale;
    let v = eig.eigenvectors.column(order[0]);
    let v = v / v.norm();
    let mut rotation = quaternion_rotation(&[v[0], v[1], v[2], v[3]]);

    // Newton polish on the right-trivialised objective
    let target = T::tol(ECKART_TOLERANCE) * scale * T::lit(1e-2);
    let mut g = eckart_gradient(mol, &rotation, relative_positions);
    if !degenerate {
        for _ in 0..POLISH_STEPS {
            if g.norm() <= target {
                break;
            }
            let h = mol
                .nuclei
                .iter()
                .zip(relative_positions)
                .fold(Matrix3::zeros(), |a, (nuc, r)| {
                    let y = rotation.tr_mul(r);
                    let outer = nuc.position * y.transpose();
                    a + ((outer + outer.transpose()) * T::lit(0.5) - Matrix3::identity() * nuc.position.dot(&y))
                        * nuc.mass
                });
            let Some(delta) = h.lu().solve(&(-g)) else { break };
            let candidate = rotation * exp_unchecked(&delta);
            let gc = eckart_gradient(mol, &candidate, relative_positions);
            if gc.norm() >= g.norm() {
                break;
            }
            rotation = candidate;
            g = gc;
        }
    }
    let rotation = RotationMatrix::new(rotation)?;
    let orientation = log_map(&rotation);
    // report the rotation generated by the reported orientation
    let rotation = RotationMatrix::new_unchecked(exp_unchecked(orientation.vector()));
    let residual = eckart_gradient(mol, rotation.matrix(), relative_positions).norm();
    Ok(EckartFrame {
        rotation,
        orientation,
        residual,
        scale,
        degenerate,
    })
}

/// `R″ = R⁻¹R′` and likewise for every momentum and electron coordinate.
pub fn to_rest<T: Real>(frame: &EckartFrame<T>, relative: &Configuration<T>) -> Configuration<T> {
    relative.rotated(&frame.rotation.matrix().transpose())
}

/// `A = 1 + ((√(M/𝓜) − 1)/n)·J` and its inverse, `J` the all-ones matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AMatrix<T: Real> {
    pub a: DMatrix<T>,
    pub a_inv: DMatrix<T>,
}

pub fn a_matrix<T: Real>(mol: &Molecule<T>) -> AMatrix<T> {
    let n = mol.electron_count;
    if n == 0 {
        return AMatrix {
            a: DMatrix::zeros(0, 0),
            a_inv: DMatrix::zeros(0, 0),
        };
    }
    let masses = mol.mass_summary();
    let s = (masses.nuclear_mass / masses.total_mass).sqrt();
    let count = T::count(n);
    let fill = |c: T| DMatrix::from_fn(n, n, |i, j| if i == j { T::one() + c } else { c });
    AMatrix {
        a: fill((s - T::one()) / count),
        a_inv: fill((T::one() / s - T::one()) / count),
    }
}

fn contract<T: Real>(a: &DMatrix<T>, v: &[Vector3<T>]) -> Vec<Vector3<T>> {
    (0..a.nrows())
        .map(|i| {
            v.iter()
                .enumerate()
                .fold(Vector3::zeros(), |acc, (j, x)| acc + x * a[(i, j)])
        })
        .collect()
}

/// Classical snapshot of the internal observables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InternalState<T: Real> {
    pub com_position: Vector3<T>,
    pub com_momentum: Vector3<T>,
    /// Axis-angle orientation of the Eckart frame.
    pub orientation: Vector3<T>,
    pub mode_amplitudes: DVector<T>,
    pub mode_momenta: DVector<T>,
    pub electron_positions: Vec<Vector3<T>>,
    pub electron_momenta: Vec<Vector3<T>>,
    pub angular_velocity: Vector3<T>,
    pub angular_momentum: Vector3<T>,
}

impl<T: Real> InternalState<T> {
    pub fn zeros(mol: &Molecule<T>, modes: usize) -> Self {
        Self {
            com_position: Vector3::zeros(),
            com_momentum: Vector3::zeros(),
            orientation: Vector3::zeros(),
            mode_amplitudes: DVector::zeros(modes),
            mode_momenta: DVector::zeros(modes),
            electron_positions: vec![Vector3::zeros(); mol.electron_count],
            electron_momenta: vec![Vector3::zeros(); mol.electron_count],
            angular_velocity: Vector3::zeros(),
            angular_momentum: Vector3::zeros(),
        }
    }
}

/// Prepared molecule, validated basis and the derived operators needed to go
/// back and forth between configurations and internal states.
#[derive(Debug, Clone)]
pub struct InternalSystem<T: Real> {
    pub molecule: Molecule<T>,
    pub basis: ModeBasis<T>,
    pub inertia: InertiaModel<T>,
    pub amatrix: AMatrix<T>,
    /// Relative Eckart residual accepted by [`InternalSystem::extract`].
    pub eckart_tolerance: T,
}

/// Everything produced for one configuration.
#[derive(Debug, Clone)]
pub struct FrameAnalysis<T: Real> {
    pub split: ComSplit<T>,
    pub frame: EckartFrame<T>,
    pub rest: Configuration<T>,
    pub state: InternalState<T>,
}

impl<T: Real> InternalSystem<T> {
    pub fn new(molecule: Molecule<T>, basis: ModeBasis<T>) -> Result<Self> {
        let inertia = build_inertia(&molecule, &basis)?;
        let amatrix = a_matrix(&molecule);
        Ok(Self {
            molecule,
            basis,
            inertia,
            amatrix,
            eckart_tolerance: T::tol(ECKART_TOLERANCE),
        })
    }

    pub fn with_eckart_tolerance(mut self, tol: T) -> Self {
        self.eckart_tolerance = tol;
        self
    }

    /// Internal observables of a rest configuration; the centre-of-mass pair is zero.
    pub fn extract(&self, frame: &EckartFrame<T>, rest: &Configuration<T>) -> Result<InternalState<T>> {
        let mol = &self.molecule;
        rest.check_against(mol)?;
        if frame.relative_residual() > self.eckart_tolerance {
            return Err(Error::EckartResidual {
                residual: frame.relative_residual().as_f64(),
                tolerance: self.eckart_tolerance.as_f64(),
            });
        }
        let f = self.basis.mode_count();
        let mut q = DVector::zeros(f);
        let mut p = DVector::zeros(f);
        for (mu, nuc) in mol.nuclei.iter().enumerate() {
            let s = nuc.mass.sqrt();
            let disp = (rest.nuclear_positions[mu] - nuc.position) * s;
            let mom = rest.nuclear_momenta[mu] / s;
            for alpha in 0..f {
                q[alpha] += self.basis.dual_vector(mu, alpha).dot(&disp);
                p[alpha] += self.basis.vector(mu, alpha).dot(&mom);
            }
        }
        let eq = contract(&self.amatrix.a_inv, &rest.electron_positions);
        let ep = contract(&self.amatrix.a_inv, &rest.electron_momenta);
        let l = rest_angmom(rest);
        let inertia = inertia_at_checked(&self.inertia, q.as_slice())?;
        let rhs = l - deformation_angmom(&self.basis, q.as_slice(), p.as_slice()) - electronic_angmom(&eq, &ep);
        let omega = inertia.lu().solve(&rhs).ok_or(Error::SingularInertia(0.0))?;
        Ok(InternalState {
            com_position: Vector3::zeros(),
            com_momentum: Vector3::zeros(),
            orientation: *frame.orientation.vector(),
            mode_amplitudes: q,
            mode_momenta: p,
            electron_positions: eq,
            electron_momenta: ep,
            angular_velocity: omega,
            angular_momentum: l,
        })
    }

    /// Rest configuration generated by an internal state.
    pub fn reconstruct_rest(&self, state: &InternalState<T>) -> Result<Configuration<T>> {
        let mol = &self.molecule;
        let f = self.basis.mode_count();
        if state.mode_amplitudes.len() != f
            || state.mode_momenta.len() != f
            || state.electron_positions.len() != mol.electron_count
            || state.electron_momenta.len() != mol.electron_count
        {
            return Err(Error::Dimension("internal state does not match the system".into()));
        }
        let masses = mol.mass_summary();
        let r_el = contract(&self.amatrix.a, &state.electron_positions);
        let p_el = contract(&self.amatrix.a, &state.electron_momenta);
        let cq = r_el.iter().fold(Vector3::zeros(), |a, v| a + v);
        let cp = p_el.iter().fold(Vector3::zeros(), |a, v| a + v);
        let back = mol.electron_mass / masses.nuclear_mass;
        let mut positions = Vec::with_capacity(mol.nuclear_count());
        let mut momenta = Vec::with_capacity(mol.nuclear_count());
        for (mu, nuc) in mol.nuclei.iter().enumerate() {
            let s = nuc.mass.sqrt();
            let mut disp = Vector3::zeros();
            let mut mom = Vector3::zeros();
            for alpha in 0..f {
                disp += self.basis.vector(mu, alpha) * state.mode_amplitudes[alpha];
                mom += self.basis.dual_vector(mu, alpha) * state.mode_momenta[alpha];
            }
            positions.push(nuc.position + disp / s - cq * back);
            momenta.push(
                state.angular_velocity.cross(&(nuc.position * nuc.mass)) + mom * s
                    - cp * (nuc.mass / masses.nuclear_mass),
            );
        }
        Ok(Configuration {
            nuclear_positions: positions,
            nuclear_momenta: momenta,
            electron_positions: r_el,
            electron_momenta: p_el,
        })
    }

    /// Lab-frame configuration: rest data rotated by the state's orientation
    /// and shifted / boosted by the centre-of-mass pair.
    pub fn reconstruct(&self, state: &InternalState<T>) -> Result<Configuration<T>> {
        let mol = &self.molecule;
        let rest = self.reconstruct_rest(state)?;
        let orientation = OrientationVector::new(state.orientation)?;
        let relative = rest.rotated(&exp_unchecked(orientation.vector()));
        let masses = mol.mass_summary();
        let velocity = state.com_momentum / masses.total_mass;
        let m = mol.electron_mass;
        Ok(Configuration {
            nuclear_positions: relative
                .nuclear_positions
                .iter()
                .map(|r| r + state.com_position)
                .collect(),
            nuclear_momenta: mol
                .masses()
                .zip(&relative.nuclear_momenta)
                .map(|(mass, p)| p + velocity * mass)
                .collect(),
            electron_positions: relative
                .electron_positions
                .iter()
                .map(|r| r + state.com_position)
                .collect(),
            electron_momenta: relative.electron_momenta.iter().map(|p| p + velocity * m).collect(),
        })
    }

    /// Full pipeline for one lab-frame configuration.
    pub fn analyze(&self, cfg: &Configuration<T>) -> Result<FrameAnalysis<T>> {
        let split = com_split(&self.molecule, cfg)?;
        let frame = solve_eckart(&self.molecule, &split.relative.nuclear_positions)?;
        let rest = to_rest(&frame, &split.relative);
        let mut state = self.extract(&frame, &rest)?;
        state.com_position = split.com_position;
        state.com_momentum = split.com_momentum;
        Ok(FrameAnalysis {
            split,
            frame,
            rest,
            state,
        })
    }
}

/// Free-function form of [`InternalSystem::extract`].
pub fn extract_internal<T: Real>(
    mol: &Molecule<T>,
    basis: &ModeBasis<T>,
    frame: &EckartFrame<T>,
    rest: &Configuration<T>,
) -> Result<InternalState<T>> {
    InternalSystem::new(mol.clone(), basis.clone())?.extract(frame, rest)
}

/// Free-function form of [`InternalSystem::reconstruct`].
pub fn reconstruct<T: Real>(
    mol: &Molecule<T>,
    basis: &ModeBasis<T>,
    state: &InternalState<T>,
) -> Result<Configuration<T>> {
    InternalSystem::new(mol.clone(), basis.clone())?.reconstruct(state)
}
