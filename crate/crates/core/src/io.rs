//! Molecule specification (JSON) and trajectory (XYZ-style) readers.

use std::path::Path;

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::Configuration;
use crate::modes::{build_modes, ModeBasis, ModeSeed};
use crate::molecule::{prepare_with_transform, Molecule, Nucleus, RigidTransform};
use crate::scalar::Real;

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct NucleusEntry {
    mass: f64,
    position: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElectronEntry {
    count: usize,
    #[serde(default = "default_one")]
    mass: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum HessianEntry {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MoleculeFile {
    name: String,
    #[serde(default = "default_one")]
    hbar: f64,
    nuclei: Vec<NucleusEntry>,
    #[serde(default)]
    electrons: Option<ElectronEntry>,
    #[serde(default)]
    modes: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    hessian: Option<HessianEntry>,
}

/// Parsed molecule file, still in the file's coordinates.
#[derive(Debug, Clone)]
pub struct MoleculeSpec<T: Real> {
    pub molecule: Molecule<T>,
    /// `3N × k` supplied mode vectors, one column per mode.
    pub modes: Option<DMatrix<T>>,
    pub hessian: Option<DMatrix<T>>,
}

/// Where a prepared system's mode basis came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSource {
    Supplied,
    Hessian,
    Random,
}

/// Molecule on its principal axes with a mode basis in the same frame.
#[derive(Debug, Clone)]
pub struct PreparedSpec<T: Real> {
    pub molecule: Molecule<T>,
    pub transform: RigidTransform<T>,
    pub basis: ModeBasis<T>,
    pub source: ModeSource,
}

fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

pub fn parse_molecule<T: Real>(text: &str) -> Result<MoleculeSpec<T>> {
    let file: MoleculeFile = serde_json::from_str(text)?;
    let nuclei = file
        .nuclei
        .iter()
        .map(|n| {
            Nucleus::new(
                lit(n.mass),
                Vector3::new(lit(n.position[0]), lit(n.position[1]), lit(n.position[2])),
            )
        })
        .collect();
    let (count, mass) = file.electrons.as_ref().map_or((0, 1.0), |e| (e.count, e.mass));
    let molecule = Molecule::new(file.name.clone(), nuclei, count, lit(mass), lit(file.hbar))?;
    let dim = 3 * molecule.nuclear_count();
    if file.modes.is_some() && file.hessian.is_some() {
        return Err(Error::InvalidParameter {
            what: "molecule file gives both `modes` and `hessian`",
            value: f64::NAN,
        });
    }
    let modes = match &file.modes {
        None => None,
        Some(cols) => {
            if let Some((i, c)) = cols.iter().enumerate().find(|(_, c)| c.len() != dim) {
                return Err(Error::Dimension(format!(
                    "`modes[{i}]` has length {}, expected {dim}",
                    c.len()
                )));
            }
            Some(DMatrix::from_fn(dim, cols.len(), |r, c| lit(cols[c][r])))
        }
    };
    let hessian = match &file.hessian {
        None => None,
        Some(HessianEntry::Nested(rows)) => {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(Error::Dimension(format!("`hessian` must be {dim}×{dim}")));
            }
            Some(DMatrix::from_fn(dim, dim, |r, c| lit(rows[r][c])))
        }
        Some(HessianEntry::Flat(values)) => {
            if values.len() != dim * dim {
                return Err(Error::Dimension(format!(
                    "`hessian` has {} entries, expected {}",
                    values.len(),
                    dim * dim
                )));
            }
            Some(DMatrix::from_row_slice(
                dim,
                dim,
                &values.iter().map(|&v| lit(v)).collect::<Vec<T>>(),
            ))
        }
    };
    Ok(MoleculeSpec {
        molecule,
        modes,
        hessian,
    })
}

pub fn load_molecule<T: Real>(path: &Path) -> Result<MoleculeSpec<T>> {
    parse_molecule(&std::fs::read_to_string(path)?)
}

fn rotate_blocks<T: Real>(m: &DMatrix<T>, t: &RigidTransform<T>) -> DMatrix<T> {
    let mut out = m.clone();
    for c in 0..m.ncols() {
        for mu in 0..m.nrows() / 3 {
            let v = t.apply_vector(&Vector3::new(m[(3 * mu, c)], m[(3 * mu + 1, c)], m[(3 * mu + 2, c)]));
            for k in 0..3 {
                out[(3 * mu + k, c)] = v[k];
            }
        }
    }
    out
}

impl<T: Real> MoleculeSpec<T> {
    /// Moves the molecule onto its principal axes, carrying supplied modes or
    /// Hessian along; without either, modes are drawn from `seed`.
    ///
    /// Supplied modes are used as given (only their dual is computed), so an
    /// Eckart-violating basis survives for the caller to detect.
    pub fn prepare(&self, seed: u64) -> Result<PreparedSpec<T>> {
        let (molecule, transform) = prepare_with_transform(&self.molecule)?;
        let (basis, source) = if let Some(x) = &self.modes {
            if x.ncols() != molecule.mode_count() {
                return Err(Error::Dimension(format!(
                    "{} supplied modes, expected {}",
                    x.ncols(),
                    molecule.mode_count()
                )));
            }
            (
                ModeBasis::from_vectors(rotate_blocks(x, &transform))?,
                ModeSource::Supplied,
            )
        } else if let Some(h) = &self.hessian {
            // H′ = B H Bᵀ with B block-diagonal in the rotation
            let half = rotate_blocks(h, &transform);
            let rotated = rotate_blocks(&half.transpose(), &transform).transpose();
            (
                build_modes(&molecule, &ModeSeed::Hessian(rotated))?,
                ModeSource::Hessian,
            )
        } else {
            (build_modes(&molecule, &ModeSeed::Random(seed))?, ModeSource::Random)
        };
        Ok(PreparedSpec {
            molecule,
            transform,
            basis,
            source,
        })
    }
}

/// Expresses a file-frame configuration in the prepared molecule's frame.
pub fn to_prepared_frame<T: Real>(cfg: &Configuration<T>, t: &RigidTransform<T>) -> Configuration<T> {
    Configuration {
        nuclear_positions: cfg.nuclear_positions.iter().map(|p| t.apply_point(p)).collect(),
        nuclear_momenta: cfg.nuclear_momenta.iter().map(|p| t.apply_vector(p)).collect(),
        electron_positions: cfg.electron_positions.iter().map(|p| t.apply_point(p)).collect(),
        electron_momenta: cfg.electron_momenta.iter().map(|p| t.apply_vector(p)).collect(),
    }
}

/// One trajectory frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFrame<T: Real> {
    pub comment: String,
    pub configuration: Configuration<T>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Reads frames of `count / comment / species x y z px py pz` blocks.
///
/// Each frame must list exactly the molecule's nuclei followed by its
/// electrons (species `e`). Blank lines between frames are ignored.
pub fn parse_trajectory<T: Real>(text: &str, mol: &Molecule<T>) -> Result<Vec<TrajectoryFrame<T>>> {
    let lines: Vec<&str> = text.lines().collect();
    let expected = mol.nuclear_count() + mol.electron_count;
    let mut frames = Vec::new();
    let mut i = 0;
    loop {
        while i < lines.len() && lines[i].trim().is_empty() {
            i += 1;
        }
        if i >= lines.len() {
            break;
        }
        let count: usize = lines[i]
            .trim()
            .parse()
            .map_err(|_| parse_err(i + 1, format!("expected a particle count, found `{}`", lines[i].trim())))?;
        if count != expected {
            return Err(parse_err(
                i + 1,
                format!("frame has {count} particles, molecule has {expected}"),
            ));
        }
        if i + 1 >= lines.len() {
            return Err(parse_err(i + 2, "missing comment line"));
        }
        let comment = lines[i + 1].trim().to_string();
        let mut cfg = Configuration::zeros(mol);
        for p in 0..count {
            let ln = i + 2 + p;
            let line = lines.get(ln).ok_or_else(|| parse_err(ln + 1, "frame ends early"))?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 7 {
                return Err(parse_err(ln + 1, format!("expected 7 fields, found {}", tokens.len())));
            }
            let mut v = [0.0f64; 6];
            for (slot, tok) in v.iter_mut().zip(&tokens[1..]) {
                *slot = tok
                    .parse()
                    .ok()
                    .filter(|x: &f64| x.is_finite())
                    .ok_or_else(|| parse_err(ln + 1, format!("bad number `{tok}`")))?;
            }
            let r = Vector3::new(lit(v[0]), lit(v[1]), lit(v[2]));
            let m = Vector3::new(lit(v[3]), lit(v[4]), lit(v[5]));
            let electron = tokens[0] == "e";
            if p < mol.nuclear_count() {
                if electron {
                    return Err(parse_err(ln + 1, "electron listed before the last nucleus"));
                }
                cfg.nuclear_positions[p] = r;
                cfg.nuclear_momenta[p] = m;
            } else {
                if !electron {
                    return Err(parse_err(
                        ln + 1,
                        format!("expected electron `e`, found `{}`", tokens[0]),
                    ));
                }
                let e = p - mol.nuclear_count();
                cfg.electron_positions[e] = r;
                cfg.electron_momenta[e] = m;
            }
        }
        frames.push(TrajectoryFrame {
            comment,
            configuration: cfg,
        });
        i += 2 + count;
    }
    Ok(frames)
}

pub fn load_trajectory<T: Real>(path: &Path, mol: &Molecule<T>) -> Result<Vec<TrajectoryFrame<T>>> {
    parse_trajectory(&std::fs::read_to_string(path)?, mol)
}
