use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use rovib::angmom::{inertia_derivatives, symmetry_residual};
use rovib::io::{load_molecule, load_trajectory, to_prepared_frame, PreparedSpec};
use rovib::molecule::equilibrium_inertia;
use rovib::quantum::states::{
    orientation_gaussian, oscillator_eigenstate, random_line_state, random_orientation_state, wrapped_gaussian,
};
use rovib::quantum::{
    angmom_commutator_residual, angvel_commutator_check, body_commutator_residual, heisenberg_suite,
    position_momentum_convergence, position_momentum_residual, DispersionReport, LineGrid, ProductState,
    QuantumOptions, RotationalFrame, So3Grid, Stencil, SuiteKind, SuiteOptions,
};
use rovib::{decompose_angmom, verify_eckart, Configuration, Error, InternalSystem};

use crate::args::{Command, Options};
use crate::report::{list, mat3, num, vec3, vec3s, Report};

/// Keeps the orientation grid clear of the θ = π cut locus.
const BALL_EPSILON: f64 = 1e-6;
/// Slack on `|Δ − (n+½)ħ|` for oscillator eigenstates, in units of ħ.
const EIGENSTATE_TOLERANCE: f64 = 1e-4;
const PQ_RESIDUAL_TOLERANCE: f64 = 1e-6;
const PQ_ORDER: (f64, f64) = (1.8, 2.2);
const ROTATIONAL_RESIDUAL_TOLERANCE: f64 = 1e-5;
const ANGVEL_RESIDUAL_TOLERANCE: f64 = 1e-4;
const HIGHEST_EIGENSTATE: usize = 4;

/// Why a command could not produce a passing report.
#[derive(Debug)]
pub enum Failure {
    /// Bad or missing input; exit code 1.
    Input(String),
    /// The input was read but a check or numerical step failed; exit code 2.
    Check(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Io(_)
            | Error::Json(_)
            | Error::Parse { .. }
            | Error::Dimension(_)
            | Error::InvalidParameter { .. }
            | Error::TooFewNuclei(_)
            | Error::CoincidentNuclei(..)
            | Error::Collinear { .. }
            | Error::NotPrepared(_)
            | Error::HessianNotSymmetric(_)
            | Error::RankDeficient
            | Error::Grid(_)
            | Error::MalformedStates(_)
            | Error::AxisOutOfRange(_) => Failure::Input(msg),
            _ => Failure::Check(msg),
        }
    }
}

pub fn run(command: Command, opts: &Options) -> Result<Report, Failure> {
    opts.check().map_err(Failure::Input)?;
    let spec = load(opts)?;
    match command {
        Command::Validate => validate(&spec, opts),
        Command::Modes => modes(&spec, opts),
        Command::Frame => frame(&spec, opts),
        Command::Decompose => decompose(&spec, opts),
        Command::Heisenberg => heisenberg(&spec, opts),
        Command::Commutators => commutators(&spec, opts),
    }
}

fn load(opts: &Options) -> Result<PreparedSpec<f64>, Failure> {
    let path = opts
        .input
        .as_ref()
        .ok_or_else(|| Failure::Input("--input is required".into()))?;
    let mut spec = load_molecule::<f64>(path).map_err(|e| Failure::from(e).with_context(path))?;
    if let Some(h) = opts.hbar {
        spec.molecule.hbar = h;
    }
    Ok(spec.prepare(opts.seed)?)
}

impl Failure {
    fn with_context(self, path: &std::path::Path) -> Self {
        match self {
            Failure::Input(m) => Failure::Input(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

fn header(report: &mut Report, spec: &PreparedSpec<f64>) {
    let mol = &spec.molecule;
    report.set("molecule", mol.name.clone());
    report.set("nuclei", mol.nuclear_count());
    report.set("electrons", mol.electron_count);
    report.set("modes", spec.basis.mode_count());
    report.set(
        "mode_source",
        serde_json::to_value(spec.source).expect("enum serialises"),
    );
    report.set("hbar", num(mol.hbar));
}

fn eckart_json(r: &rovib::EckartResiduals<f64>) -> Value {
    json!({
        "center_of_mass": num(r.center_of_mass),
        "momentum": num(r.momentum),
        "angular_momentum": num(r.angular_momentum),
        "duality": num(r.duality),
    })
}

fn validate(spec: &PreparedSpec<f64>, opts: &Options) -> Result<Report, Failure> {
    let mut report = Report::new("validate");
    header(&mut report, spec);
    let mol = &spec.molecule;
    let masses = mol.mass_summary();
    report.set("nuclear_mass", num(masses.nuclear_mass));
    report.set("total_mass", num(masses.total_mass));
    report.set("equilibrium_inertia", mat3(&equilibrium_inertia(mol)?));

    let eckart = verify_eckart(mol, &spec.basis)?;
    report.set("eckart_residuals", eckart_json(&eckart));
    report.set("tol_eckart", num(opts.tol_eckart));
    let eckart_ok = report.check(eckart.max() <= opts.tol_eckart);
    report.set("eckart_passed", eckart_ok);

    let derivs = inertia_derivatives(mol, &spec.basis)?;
    let (worst_mode, asym) = symmetry_residual(&derivs);
    report.set("inertia_asymmetry", num(asym));
    report.set("inertia_asymmetry_mode", worst_mode);
    let sym_ok = report.check(asym <= opts.tol_eckart);
    report.set("inertia_symmetric", sym_ok);

    for (alpha, d) in derivs.iter().enumerate() {
        let (_, a) = symmetry_residual(std::slice::from_ref(d));
        report.rows.push(json!({
            "mode": alpha,
            "inertia_derivative": mat3(d),
            "asymmetry": num(a),
            "frequency": spec.basis.frequencies().map_or(Value::Null, |f| num(f[alpha])),
        }));
    }
    Ok(report)
}

fn modes(spec: &PreparedSpec<f64>, opts: &Options) -> Result<Report, Failure> {
    let mut report = Report::new("modes");
    header(&mut report, spec);
    let eckart = verify_eckart(&spec.molecule, &spec.basis)?;
    report.set("eckart_residuals", eckart_json(&eckart));
    report.set("tol_eckart", num(opts.tol_eckart));
    report.check(eckart.max() <= opts.tol_eckart);
    let x = spec.basis.vectors();
    let d = spec.basis.dual_vectors();
    for alpha in 0..spec.basis.mode_count() {
        report.rows.push(json!({
            "mode": alpha,
            "frequency": spec.basis.frequencies().map_or(Value::Null, |f| num(f[alpha])),
            "vector": list(x.column(alpha).as_slice()),
            "dual": list(d.column(alpha).as_slice()),
        }));
    }
    Ok(report)
}

fn trajectory(
    spec: &PreparedSpec<f64>,
    opts: &Options,
) -> Result<(InternalSystem<f64>, Vec<Configuration<f64>>), Failure> {
    let path = opts
        .trajectory
        .as_ref()
        .ok_or_else(|| Failure::Input("--trajectory is required".into()))?;
    let frames = load_trajectory::<f64>(path, &spec.molecule).map_err(|e| Failure::from(e).with_context(path))?;
    let cfgs = frames
        .iter()
        .map(|f| to_prepared_frame(&f.configuration, &spec.transform))
        .collect();
    let system = InternalSystem::new(spec.molecule.clone(), spec.basis.clone())?.with_eckart_tolerance(opts.tol_eckart);
    Ok((system, cfgs))
}

fn frame(spec: &PreparedSpec<f64>, opts: &Options) -> Result<Report, Failure> {
    let mut report = Report::new("frame");
    header(&mut report, spec);
    let (system, cfgs) = trajectory(spec, opts)?;
    report.set("frames", cfgs.len());
    report.set("tol_eckart", num(opts.tol_eckart));
    report.set("tol_roundtrip", num(opts.tol_roundtrip));

    let rows: Vec<(bool, Value)> = cfgs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| {
            let analysis = match system.analyze(cfg) {
                Ok(a) => a,
                Err(e) => return (false, json!({ "frame": i, "passed": false, "error": e.to_string() })),
            };
            let roundtrip = match system.reconstruct(&analysis.state) {
                Ok(back) => back.max_difference(cfg),
                Err(_) => f64::INFINITY,
            };
            let s = &analysis.state;
            let ok = !analysis.frame.degenerate && roundtrip <= opts.tol_roundtrip;
            (
                ok,
                json!({
                    "frame": i,
                    "passed": ok,
                    "degenerate": analysis.frame.degenerate,
                    "eckart_residual": num(analysis.frame.relative_residual()),
                    "roundtrip_error": num(roundtrip),
                    "rotation": mat3(analysis.frame.rotation.matrix()),
                    "orientation": vec3(&s.orientation),
                    "com_position": vec3(&s.com_position),
                    "com_momentum": vec3(&s.com_momentum),
                    "mode_amplitudes": list(s.mode_amplitudes.as_slice()),
                    "mode_momenta": list(s.mode_momenta.as_slice()),
                    "electron_positions": vec3s(&s.electron_positions),
                    "electron_momenta": vec3s(&s.electron_momenta),
                    "angular_velocity": vec3(&s.angular_velocity),
                    "angular_momentum": vec3(&s.angular_momentum),
                }),
            )
        })
        .collect();
    let failed = rows.iter().filter(|(ok, _)| !ok).count();
    report.set("failed_frames", failed);
    report.check(failed == 0);
    report.rows = rows.into_iter().map(|(_, v)| v).collect();
    Ok(report)
}

fn decompose(spec: &PreparedSpec<f64>, opts: &Options) -> Result<Report, Failure> {
    let mut report = Report::new("decompose");
    header(&mut report, spec);
    let (system, cfgs) = trajectory(spec, opts)?;
    report.set("frames", cfgs.len());
    report.set("tol_roundtrip", num(opts.tol_roundtrip));

    let rows: Vec<(bool, f64, Value)> = cfgs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| {
            let result = system.analyze(cfg).and_then(|a| {
                let parts = decompose_angmom(&system.inertia, &system.basis, &a.state)?;
                Ok((a.state.angular_momentum, parts))
            });
            let (l, parts) = match result {
                Ok(r) => r,
                Err(e) => {
                    return (
                        false,
                        f64::INFINITY,
                        json!({ "frame": i, "passed": false, "error": e.to_string() }),
                    )
                }
            };
            let residual = (parts.total() - l).amax();
            let ok = residual <= opts.tol_roundtrip * l.norm().max(1.0);
            (
                ok,
                residual,
                json!({
                    "frame": i,
                    "passed": ok,
                    "angular_momentum": vec3(&l),
                    "rotational": vec3(&parts.rotational),
                    "deformation": vec3(&parts.deformation),
                    "electronic": vec3(&parts.electronic),
                    "residual": num(residual),
                }),
            )
        })
        .collect();
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let failed = rows.iter().filter(|r| !r.0).count();
    report.set("max_residual", num(worst));
    report.set("failed_frames", failed);
    report.check(failed == 0);
    report.rows = rows.into_iter().map(|r| r.2).collect();
    Ok(report)
}

fn quantum_options(spec: &PreparedSpec<f64>) -> QuantumOptions<f64> {
    QuantumOptions {
        hbar: spec.molecule.hbar,
        ..QuantumOptions::default()
    }
}

fn line_grid(opts: &Options) -> Result<Arc<LineGrid<f64>>, Failure> {
    Ok(Arc::new(LineGrid::symmetric(opts.line_extent, opts.grid_line)?))
}

fn ball_grid(opts: &Options) -> Result<Arc<So3Grid<f64>>, Failure> {
    Ok(Arc::new(So3Grid::new(opts.grid_theta, opts.grid_dirs, BALL_EPSILON)?))
}

struct Labelled {
    kind: SuiteKind,
    label: String,
    state: ProductState<f64>,
}

fn dispersion_row(kind: SuiteKind, index: usize, label: &str, r: &DispersionReport<f64>) -> Value {
    json!({
        "suite": serde_json::to_value(kind).expect("enum serialises"),
        "state": index,
        "label": label,
        "observable_a": r.observable_a,
        "observable_b": r.observable_b,
        "delta_a": num(r.delta_a),
        "delta_b": num(r.delta_b),
        "product": num(r.product),
        "bound": num(r.bound),
        "satisfied": r.satisfied,
        "indeterminate": r.indeterminate,
        "boundary_mass": r.boundary_mass.map_or(Value::Null, num),
    })
}

/// Labels end in the axis letter.
fn same_axis(a: &str, b: &str) -> bool {
    a.chars().last() == b.chars().last()
}

fn heisenberg(spec: &PreparedSpec<f64>, opts: &Options) -> Result<Report, Failure> {
    let mut report = Report::new("heisenberg");
    header(&mut report, spec);
    let hbar = spec.molecule.hbar;
    let line = line_grid(opts)?;
    let ball = ball_grid(opts)?;
    let suite = SuiteOptions {
        quantum: quantum_options(spec),
        tolerance: opts.tol_quad,
        frame: if opts.fixed_frame {
            RotationalFrame::Fixed
        } else {
            RotationalFrame::Moving
        },
    };
    report.set("tol_quad", num(opts.tol_quad));
    report.set("frame", if opts.fixed_frame { "fixed" } else { "moving" });
    report.set("line_points", line.len());
    report.set("ball_nodes", ball.len());

    // states are drawn sequentially so the set does not depend on scheduling
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut states = Vec::new();
    let factors = spec.basis.mode_count();
    let coords = 3 * spec.molecule.electron_count;
    for n in 0..=HIGHEST_EIGENSTATE {
        let psi = oscillator_eigenstate(line.clone(), n, hbar);
        states.push(Labelled {
            kind: SuiteKind::Vibrational,
            label: format!("eigenstate {n}"),
            state: ProductState::new(vec![psi; factors]),
        });
    }
    for r in 0..opts.random {
        let fs = (0..factors)
            .map(|_| random_line_state(line.clone(), hbar, &mut rng))
            .collect::<rovib::Result<Vec<_>>>()?;
        states.push(Labelled {
            kind: SuiteKind::Vibrational,
            label: format!("random {r}"),
            state: ProductState::new(fs),
        });
    }
    if coords > 0 {
        let ground = oscillator_eigenstate(line.clone(), 0, hbar);
        states.push(Labelled {
            kind: SuiteKind::Electronic,
            label: "eigenstate 0".into(),
            state: ProductState::new(vec![ground; coords]),
        });
        for r in 0..opts.random {
            let fs = (0..coords)
                .map(|_| random_line_state(line.clone(), hbar, &mut rng))
                .collect::<rovib::Result<Vec<_>>>()?;
            states.push(Labelled {
                kind: SuiteKind::Electronic,
                label: format!("random {r}"),
                state: ProductState::new(fs),
            });
        }
    }
    states.push(Labelled {
        kind: SuiteKind::Rotational,
        label: "wrapped gaussian 0.1".into(),
        state: ProductState::single(wrapped_gaussian(ball.clone(), 0.1)?),
    });
    for r in 0..opts.random {
        states.push(Labelled {
            kind: SuiteKind::Rotational,
            label: format!("random {r}"),
            state: ProductState::single(random_orientation_state(ball.clone(), &mut rng)?),
        });
    }

    let results: Vec<rovib::Result<Vec<DispersionReport<f64>>>> = states
        .par_iter()
        .map(|s| heisenberg_suite(std::slice::from_ref(&s.state), s.kind, &suite))
        .collect();

    let mut counts = [0usize; 3];
    let mut violated = 0usize;
    let mut indeterminate = 0usize;
    let mut worst_margin = f64::INFINITY;
    let mut eigen_dev: f64 = 0.0;
    let mut rotational_ground = None;
    for (s, result) in states.iter().zip(results) {
        let slot = match s.kind {
            SuiteKind::Vibrational => 0,
            SuiteKind::Electronic => 1,
            SuiteKind::Rotational => 2,
        };
        let index = counts[slot];
        counts[slot] += 1;
        for r in result? {
            violated += usize::from(!r.satisfied);
            indeterminate += usize::from(r.indeterminate);
            if r.bound > 0.0 {
                worst_margin = worst_margin.min((r.product - r.bound) / hbar);
                if let Some(n) = s.label.strip_prefix("eigenstate ").and_then(|n| n.parse::<f64>().ok()) {
                    eigen_dev = eigen_dev.max((r.product / hbar - (n + 0.5)).abs());
                }
                if s.kind == SuiteKind::Rotational && index == 0 && same_axis(&r.observable_a, &r.observable_b) {
                    let dev = r.product / hbar - 0.5;
                    rotational_ground =
                        Some(rotational_ground.map_or(dev, |d: f64| if dev.abs() > d.abs() { dev } else { d }));
                }
            }
            report.rows.push(dispersion_row(s.kind, index, &s.label, &r));
        }
    }
    report.set("vibrational_states", counts[0]);
    report.set("electronic_states", counts[1]);
    report.set("rotational_states", counts[2]);
    report.set("violations", violated);
    report.set("indeterminate", indeterminate);
    report.set("worst_margin", num(worst_margin));
    report.set("eigenstate_deviation", num(eigen_dev));
    report.set("eigenstate_tolerance", num(EIGENSTATE_TOLERANCE));
    report.set("rotational_saturation", rotational_ground.map_or(Value::Null, num));
    report.check(violated == 0 && indeterminate == 0);
    report.check(eigen_dev <= EIGENSTATE_TOLERANCE);
    Ok(report)
}

fn commutator_row(
    relation: &str,
    residual: f64,
    tolerance: f64,
    order: Option<f64>,
    boundary: Option<f64>,
) -> (bool, Value) {
    let ok = residual <= tolerance;
    (
        ok,
        json!({
            "relation": relation,
            "residual": num(residual),
            "tolerance": num(tolerance),
            "passed": ok,
            "order": order.map_or(Value::Null, num),
            "boundary_mass": boundary.map_or(Value::Null, num),
        }),
    )
}

fn commutators(spec: &PreparedSpec<f64>, opts: &Options) -> Result<Report, Failure> {
    let mut report = Report::new("commutators");
    header(&mut report, spec);
    let q = quantum_options(spec);
    let hbar = q.hbar;
    let line = line_grid(opts)?;
    let ball = ball_grid(opts)?;

    let ground = |g: Arc<LineGrid<f64>>| Ok(oscillator_eigenstate(g, 0, hbar));
    let (residual, order) = position_momentum_convergence(&line, ground, &q)?;
    let order_ok = (PQ_ORDER.0..=PQ_ORDER.1).contains(&order);
    let (ok, mut row) = commutator_row("[P,Q] = -i hbar", residual, PQ_RESIDUAL_TOLERANCE, Some(order), None);
    row["order_passed"] = order_ok.into();
    report.check(ok && order_ok);
    report.rows.push(row);
    let fourth = position_momentum_residual(&oscillator_eigenstate(line.clone(), 0, hbar), &q, Stencil::Fourth)?;
    report.set("pq_residual_fourth_order", num(fourth));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let probes = vec![
        orientation_gaussian(
            ball.clone(),
            Vector3::new(0.2, -0.1, 0.15),
            Matrix3::from_diagonal(&Vector3::new(0.09, 0.05, 0.07)),
            Vector3::new(1.0, 0.5, -0.3),
        )?,
        random_orientation_state(ball.clone(), &mut rng)?,
    ];
    let i0 = equilibrium_inertia(&spec.molecule)?;
    let residuals: Vec<rovib::Result<[f64; 3]>> = probes
        .par_iter()
        .map(|psi| {
            Ok([
                body_commutator_residual(psi, &q)?,
                angmom_commutator_residual(psi, &q)?,
                angvel_commutator_check(&i0, psi, &q)?,
            ])
        })
        .collect();
    let mut worst = [0.0f64; 3];
    let mut boundary: f64 = 0.0;
    for (psi, r) in probes.iter().zip(residuals) {
        let r = r?;
        boundary = boundary.max(psi.boundary_mass(q.boundary_band));
        for k in 0..3 {
            worst[k] = worst[k].max(r[k]);
        }
    }
    let gated = boundary <= q.boundary_gate;
    for (k, (relation, tol)) in [
        ("[n_j.L, omega^k] = -i hbar delta", ROTATIONAL_RESIDUAL_TOLERANCE),
        ("[L_k, omega^j] = -i hbar m_k^j", ROTATIONAL_RESIDUAL_TOLERANCE),
        ("[Omega^j, omega^k] = -i hbar (I0^-1 m^k)^j", ANGVEL_RESIDUAL_TOLERANCE),
    ]
    .into_iter()
    .enumerate()
    {
        let (ok, row) = commutator_row(relation, worst[k], tol, None, Some(boundary));
        report.check(ok && gated);
        report.rows.push(row);
    }
    report.set("probe_states", probes.len());
    report.set("boundary_gate", num(q.boundary_gate));
    Ok(report)
}
