//! One function per subcommand, each turning a [`RunConfig`] into a [`Report`].

use irdeco_core::branches::{
    build_branches, coherence_metrics, decoherence_matrix, return_probability, Branch, BranchSet,
};
use irdeco_core::fockspace::{
    bogoliubov_residual, build_mode_grid, build_mode_grid_in_frame, displace_vacuum, fock_overlap,
    project_current, required_n_max, unitarity_residual, CoherentSpec, ModeGrid, LEAK_BOUND,
};
use irdeco_core::kinematics::{
    classical_current, deflected_pair, elastic_final_state, elementary_charge, EmissionCurrent,
    FourVector, ParticleState, SoftCurrent, FINE_STRUCTURE,
};
use irdeco_core::numeric::{fit_line, log_space};
use irdeco_core::radiation::{
    adapted_frame, divergence_coefficient, mean_photon_number, overlap_magnitude, spectral_density,
    QuadratureSpec, SpectralCutoffs,
};
use irdeco_core::rng::RngState;
use irdeco_core::Error;
use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Report, Table};

pub const CURRENT_COLUMNS: &[&str] = &[
    "omega", "n_x", "n_y", "n_z", "re_j0", "re_j1", "re_j2", "re_j3", "im_j0", "im_j1", "im_j2",
    "im_j3", "k_dot_j",
];
pub const SPECTRUM_COLUMNS: &[&str] = &["omega", "density", "c_local", "c_fit", "residual"];
pub const OVERLAP_COLUMNS: &[&str] = &[
    "deflection_deg",
    "n_bar",
    "v",
    "overlap",
    "exp_half_n_bar",
    "deviation",
];
pub const MATRIX_COLUMNS: &[&str] = &["omega_min", "row", "col", "entry", "coincident"];
pub const METRICS_COLUMNS: &[&str] = &["omega_min", "purity_proxy", "offdiag_norm"];
pub const CHECK_COLUMNS: &[&str] = &["check", "value", "limit", "margin", "pass", "detail"];
pub const LADDER_COLUMNS: &[&str] = &["delta", "estimate", "ci_low", "ci_high", "hits", "samples"];
pub const SLOPE_COLUMNS: &[&str] = &["slope", "intercept", "points", "deviation"];
pub const SUMMARY_COLUMNS: &[&str] = &["criterion", "check", "value", "limit", "pass"];

/// `(command, [(table, columns)])` for every subcommand.
pub type Schema = Vec<(&'static str, Vec<(&'static str, &'static [&'static str])>)>;

pub fn schema() -> Schema {
    vec![
        ("current", vec![("current", CURRENT_COLUMNS)]),
        ("spectrum", vec![("spectrum", SPECTRUM_COLUMNS)]),
        ("overlap", vec![("overlap", OVERLAP_COLUMNS)]),
        (
            "decohere",
            vec![("matrix", MATRIX_COLUMNS), ("metrics", METRICS_COLUMNS)],
        ),
        ("fock-check", vec![("checks", CHECK_COLUMNS)]),
        (
            "rescatter",
            vec![("ladder", LADDER_COLUMNS), ("slope", SLOPE_COLUMNS)],
        ),
        ("demo", vec![("summary", SUMMARY_COLUMNS)]),
    ]
}

pub fn schema_json() -> String {
    let map: serde_json::Map<String, serde_json::Value> = schema()
        .into_iter()
        .map(|(cmd, tables)| {
            let inner: serde_json::Map<String, serde_json::Value> = tables
                .into_iter()
                .map(|(t, cols)| (t.to_string(), serde_json::json!(cols)))
                .collect();
            (cmd.to_string(), serde_json::Value::Object(inner))
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("static schema")
}

pub fn charge() -> f64 {
    elementary_charge(FINE_STRUCTURE)
}

/// The configured single deflection at electron energy `energy`.
pub fn deflected_current(
    cfg: &RunConfig,
    energy: f64,
    deflection_deg: f64,
) -> Result<EmissionCurrent, CliError> {
    let (p, q) = deflected_pair(
        energy,
        cfg.kinematics.electron_mass,
        deflection_deg.to_radians(),
    )?;
    Ok(EmissionCurrent::new(p, q, charge())?)
}

pub fn vacuum_current(current: &EmissionCurrent) -> Result<EmissionCurrent, CliError> {
    Ok(EmissionCurrent::new(
        *current.p_in(),
        *current.p_in(),
        current.charge(),
    )?)
}

pub fn cutoffs_at(cfg: &RunConfig, energy: f64) -> Result<SpectralCutoffs, CliError> {
    Ok(SpectralCutoffs::new(
        cfg.cutoffs.omega_min_fraction * energy,
        cfg.cutoffs.omega_max_fraction * energy,
    )?)
}

pub fn quadrature(cfg: &RunConfig) -> Result<QuadratureSpec, CliError> {
    let q = &cfg.quadrature;
    Ok(QuadratureSpec::new(q.n_cos, q.n_phi, q.n_omega)?)
}

/// Head-on beams: electron along `+z`, neutrino along `-z`.
pub fn beams(cfg: &RunConfig) -> Result<(ParticleState, ParticleState), CliError> {
    let k = &cfg.kinematics;
    let e = ParticleState::with_energy(k.electron_energy, k.electron_mass, &Vector3::z())?;
    let nu = ParticleState::with_energy(k.neutrino_energy, k.neutrino_mass, &-Vector3::z())?;
    Ok((e, nu))
}

fn unit(v: [f64; 3], what: &str) -> Result<Vector3<f64>, CliError> {
    let d = Vector3::new(v[0], v[1], v[2]);
    let n = d.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(CliError::Config(format!(
            "{what} direction {v:?} has no length"
        )));
    }
    Ok(d / n)
}

pub fn branch_set(cfg: &RunConfig) -> Result<BranchSet, CliError> {
    let (e, nu) = beams(cfg)?;
    let b = &cfg.branches;
    let root = RngState::new(cfg.seed);
    if b.directions.is_empty() {
        return Ok(build_branches(&e, &nu, b.count, b.vacuum_rate, &root)?);
    }
    if !(0.0..=1.0).contains(&b.vacuum_rate) {
        return Err(Error::InvalidParameter {
            what: "vacuum rate",
            value: b.vacuum_rate,
        }
        .into());
    }
    let weight = Complex64::new(((1.0 - b.vacuum_rate) / b.count as f64).sqrt(), 0.0);
    let branches = b
        .directions
        .iter()
        .map(|&d| {
            Ok(Branch::new(
                weight,
                elastic_final_state(&e, &nu, &unit(d, "branch")?)?,
            )?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let vacuum = EmissionCurrent::new(e, e, charge())?;
    Ok(BranchSet::new(
        Complex64::new(b.vacuum_rate.sqrt(), 0.0),
        vacuum,
        branches,
    )?)
}

pub fn current(cfg: &RunConfig) -> Result<Report, CliError> {
    let energy = cfg.kinematics.electron_energy;
    let cur = deflected_current(cfg, energy, cfg.kinematics.deflection_deg)?;
    let mut table = Table::new("current", CURRENT_COLUMNS);
    for ph in &cfg.current.photons {
        let n = unit([ph[1], ph[2], ph[3]], "photon")?;
        let k = FourVector::lightlike(ph[0] * energy, &n);
        let j = classical_current(&cur, &k)?;
        let mut row: Vec<Cell> = vec![k.t.into(), n.x.into(), n.y.into(), n.z.into()];
        row.extend(j.components().iter().map(|c| Cell::Num(c.re)));
        row.extend(j.components().iter().map(|c| Cell::Num(c.im)));
        row.push(j.dot_real(&k).norm().into());
        table.push(row);
    }
    Ok(Report::new("current", vec![table]))
}

pub fn spectrum(cfg: &RunConfig) -> Result<Report, CliError> {
    let energy = cfg.kinematics.electron_energy;
    let cur = deflected_current(cfg, energy, cfg.kinematics.deflection_deg)?;
    let quad = quadrature(cfg)?;
    let fit = divergence_coefficient(&cur, &cutoffs_at(cfg, energy)?, &quad)?;
    let s = &cfg.spectrum;
    let omegas = log_space(s.lo_fraction * energy, s.hi_fraction * energy, s.points);
    let densities = omegas
        .par_iter()
        .map(|&w| spectral_density(&cur, w, &quad))
        .collect::<Result<Vec<f64>, Error>>()?;
    let mut table = Table::new("spectrum", SPECTRUM_COLUMNS);
    for (w, d) in omegas.iter().zip(densities) {
        table.push(vec![
            (*w).into(),
            d.into(),
            (w * d).into(),
            fit.c.into(),
            fit.residual.into(),
        ]);
    }
    Ok(Report::new("spectrum", vec![table]))
}

/// `|a/b - 1|`, zero when both agree exactly (including both zero).
pub fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

pub fn overlap(cfg: &RunConfig) -> Result<Report, CliError> {
    let energy = cfg.kinematics.electron_energy;
    let cut = cutoffs_at(cfg, energy)?;
    let quad = quadrature(cfg)?;
    let rows = cfg
        .overlap
        .deflections_deg
        .par_iter()
        .map(|&deg| {
            let cur = deflected_current(cfg, energy, deg)?;
            let vacuum = vacuum_current(&cur)?;
            let n_bar = mean_photon_number(&cur, &cut, &quad)?;
            let ov = overlap_magnitude(&cur, &vacuum, &cut, &quad)?;
            let expected = (-0.5 * n_bar).exp();
            Ok(vec![
                deg.into(),
                n_bar.into(),
                (0.5 * n_bar).into(),
                ov.into(),
                expected.into(),
                relative_gap(ov, expected).into(),
            ])
        })
        .collect::<Result<Vec<Vec<Cell>>, CliError>>()?;
    let mut table = Table::new("overlap", OVERLAP_COLUMNS);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(Report::new("overlap", vec![table]))
}

pub fn decohere(cfg: &RunConfig) -> Result<Report, CliError> {
    let energy = cfg.kinematics.electron_energy;
    let set = branch_set(cfg)?;
    let quad = quadrature(cfg)?;
    let omega_max = cfg.sweep.omega_max_fraction * energy;
    let mut matrix = Table::new("matrix", MATRIX_COLUMNS);
    let mut metrics = Table::new("metrics", METRICS_COLUMNS);
    for &fraction in &cfg.sweep.omega_min_fractions {
        let omega_min = fraction * energy;
        let cut = SpectralCutoffs::new(omega_min, omega_max)?;
        let m = decoherence_matrix(&set, &cut, &quad)?;
        for l in 0..m.dim() {
            for k in 0..m.dim() {
                let v = m.get(l, k);
                matrix.push(vec![
                    omega_min.into(),
                    l.into(),
                    k.into(),
                    v.into(),
                    (l != k && v >= 1.0).into(),
                ]);
            }
        }
        let cm = coherence_metrics(&set, &m)?;
        metrics.push(vec![
            omega_min.into(),
            cm.purity_proxy.into(),
            cm.offdiag_norm.into(),
        ]);
    }
    Ok(Report::new("decohere", vec![matrix, metrics]))
}

/// Outcome of one pass/fail comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// Pass when `value >= limit` rather than `value <= limit`.
    pub at_least: bool,
    pub detail: String,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            limit,
            at_least: false,
            detail: String::new(),
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            at_least: true,
            ..Self::at_most(name, value, limit)
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn margin(&self) -> f64 {
        if self.at_least {
            self.value - self.limit
        } else {
            self.limit - self.value
        }
    }

    /// NaN never passes.
    pub fn pass(&self) -> bool {
        self.margin() >= 0.0
    }
}

pub fn checks_table(checks: &[Check]) -> Table {
    let mut table = Table::new("checks", CHECK_COLUMNS);
    for c in checks {
        table.push(vec![
            c.name.as_str().into(),
            c.value.into(),
            c.limit.into(),
            c.margin().into(),
            c.pass().into(),
            c.detail.as_str().into(),
        ]);
    }
    table
}

/// Coarse photon grid for the brute-force Fock check.
pub fn fock_grid(
    cfg: &RunConfig,
    current: &EmissionCurrent,
    cut: &SpectralCutoffs,
) -> Result<ModeGrid, CliError> {
    let g = &cfg.grid;
    Ok(if g.adapted_frame {
        let frame = adapted_frame(&current.terms());
        build_mode_grid_in_frame(cut, g.n_cos, g.n_phi, g.n_omega, &frame)?
    } else {
        build_mode_grid(cut, g.n_cos, g.n_phi, g.n_omega)?
    })
}

fn truncation_failure(name: &str, err: Error) -> Result<Check, CliError> {
    match err {
        Error::TruncationTooSmall {
            n_max, required, ..
        } => Ok(Check::at_least(name, n_max as f64, required as f64).with_detail(err.to_string())),
        other => Err(other.into()),
    }
}

pub fn fock_check(cfg: &RunConfig) -> Result<Report, CliError> {
    let energy = cfg.grid.electron_energy;
    let cur = deflected_current(cfg, energy, cfg.kinematics.deflection_deg)?;
    let vacuum = vacuum_current(&cur)?;
    let cut = cutoffs_at(cfg, energy)?;
    let quad = quadrature(cfg)?;
    let grid = fock_grid(cfg, &cur, &cut)?;
    let spec = project_current(&cur, &grid)?;
    let required = required_n_max(spec.max_amplitude());
    let n_max = cfg.grid.n_max.unwrap_or(required);
    let n_bar = mean_photon_number(&cur, &cut, &quad)?;
    let expected = (-0.5 * n_bar).exp();

    let mut checks = Vec::new();
    match displace_vacuum(&spec, n_max) {
        Ok(state) => {
            checks.push(Check::at_least("truncation", n_max as f64, required as f64));
            let leak = state
                .truncation_leaks()
                .map(|l| l.into_iter().fold(0.0, f64::max))
                .unwrap_or(f64::NAN);
            checks.push(Check::at_most("truncation_leak", leak, LEAK_BOUND));
            let empty =
                CoherentSpec::from_alphas(vec![Complex64::new(0.0, 0.0); spec.mode_count()]);
            let vac_state = displace_vacuum(&empty, n_max)?;
            let brute = fock_overlap(&state, &vac_state)?.norm();
            checks.push(
                Check::at_most("vacuum_overlap", relative_gap(brute, expected), 0.01)
                    .with_detail(format!("brute {brute:.6e} vs exp(-N/2) {expected:.6e}")),
            );
        }
        Err(err) => checks.push(truncation_failure("truncation", err)?),
    }
    checks.push(Check::at_most(
        "photon_number",
        relative_gap(spec.photon_number(), n_bar),
        0.01,
    ));
    let residual_n_max = cfg.grid.residual_n_max;
    for (name, f) in [
        (
            "bogoliubov_residual",
            bogoliubov_residual as fn(&CoherentSpec, usize) -> irdeco_core::Result<f64>,
        ),
        ("unitarity_residual", unitarity_residual),
    ] {
        checks.push(match f(&spec, residual_n_max) {
            Ok(r) => Check::at_most(name, r, 1e-8),
            Err(err) => truncation_failure(name, err)?,
        });
    }
    let identity = overlap_magnitude(&cur, &vacuum, &cut, &quad)?;
    checks.push(Check::at_most(
        "overlap_identity",
        relative_gap(identity, expected),
        1e-10,
    ));

    let mut report = Report::new("fock-check", vec![checks_table(&checks)]);
    report.failures = checks.iter().filter(|c| !c.pass()).count();
    Ok(report)
}

/// Log-log slope of the estimates over tolerances below one.
pub fn ladder_slope(deltas: &[f64], estimates: &[f64]) -> (f64, f64, usize) {
    let (xs, ys): (Vec<f64>, Vec<f64>) = deltas
        .iter()
        .zip(estimates)
        .filter(|(&d, &p)| d < 1.0 && p > 0.0)
        .map(|(d, p)| (d.ln(), p.ln()))
        .unzip();
    if xs.len() < 2 {
        return (f64::NAN, f64::NAN, xs.len());
    }
    let fit = fit_line(&xs, &ys);
    (fit.slope, fit.intercept, xs.len())
}

pub fn rescatter(cfg: &RunConfig) -> Result<Report, CliError> {
    let (e, nu) = beams(cfg)?;
    let root = RngState::new(cfg.seed);
    let r = &cfg.rescatter;
    let mut ladder = Table::new("ladder", LADDER_COLUMNS);
    let mut values = Vec::with_capacity(r.deltas.len());
    for (i, &delta) in r.deltas.iter().enumerate() {
        let est = return_probability(&e, &nu, delta, r.samples, &root.split(i as u64))?;
        values.push(est.value);
        ladder.push(vec![
            delta.into(),
            est.value.into(),
            est.interval.0.into(),
            est.interval.1.into(),
            est.hits.into(),
            est.trials.into(),
        ]);
    }
    let (slope, intercept, points) = ladder_slope(&r.deltas, &values);
    let mut table = Table::new("slope", SLOPE_COLUMNS);
    table.push(vec![
        slope.into(),
        intercept.into(),
        points.into(),
        (slope - 1.0).abs().into(),
    ]);
    Ok(Report::new("rescatter", vec![ladder, table]))
}
