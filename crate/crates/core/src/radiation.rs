//! Phase-space functionals of the bremsstrahlung coherent state.
//!
//! Everything here integrates over the photon measure `dk = d^3k / k0 =
//! omega d(omega) d(Omega)` with `hbar = 1`:
//!
//! * `dN/d(omega) = omega * integral dOmega sum_pol |J . eps|^2`
//! * `N = integral dN/d(omega)` and `V(J) = N(J) / 2`
//! * `|<f_l|f_m>| = exp(-V(J_l - J_m))`
//!
//! Only overlap *magnitudes* are computed. The coherent-state phase is
//! infrared divergent for these currents and is never evaluated.
//!
//! Angular integrals use Gauss-Legendre in `cos(theta)` times the periodic
//! trapezoid rule in `phi`, laid out in a frame built from the current's own
//! leg directions: the polar axis is the coefficient-weighted sum of leg
//! directions and the azimuth origin is fixed by the first off-axis leg. The
//! rule therefore rotates with the momenta and rotated inputs give the same
//! node set up to rounding. Frequencies use Gauss-Legendre in `ln(omega)`.

use nalgebra::{Matrix3, Rotation3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kinematics::{
    eval_terms, ComplexFourVector, CurrentDifference, CurrentTerm, FourVector, SoftCurrent,
};
use crate::numeric::{compensated_sum, fit_line, gauss_legendre, log_space, CompensatedSum};

/// Infrared / ultraviolet frequency window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCutoffs {
    omega_min: f64,
    omega_max: f64,
}

impl SpectralCutoffs {
    pub fn new(omega_min: f64, omega_max: f64) -> Result<Self> {
        if !(omega_min > 0.0 && omega_min < omega_max && omega_max.is_finite()) {
            return Err(Error::InvalidCutoffs {
                omega_min,
                omega_max,
            });
        }
        Ok(Self {
            omega_min,
            omega_max,
        })
    }

    /// Default window `[1e-4, 1e-1] * energy`.
    pub fn default_for(energy: f64) -> Self {
        Self {
            omega_min: 1e-4 * energy,
            omega_max: 1e-1 * energy,
        }
    }

    pub fn omega_min(&self) -> f64 {
        self.omega_min
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn decades(&self) -> f64 {
        (self.omega_max / self.omega_min).log10()
    }

    pub fn with_omega_min(&self, omega_min: f64) -> Result<Self> {
        Self::new(omega_min, self.omega_max)
    }

    pub fn contains(&self, omega: f64) -> bool {
        omega >= self.omega_min && omega <= self.omega_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    /// Gauss-Legendre in cos(theta), trapezoid in phi, Gauss-Legendre in ln(omega).
    #[default]
    GaussTrapezoidLogGauss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    pub n_cos: usize,
    pub n_phi: usize,
    pub n_omega: usize,
    pub rule: QuadratureRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            n_cos: 192,
            n_phi: 192,
            n_omega: 8,
            rule: QuadratureRule::GaussTrapezoidLogGauss,
        }
    }
}

impl QuadratureSpec {
    pub fn new(n_cos: usize, n_phi: usize, n_omega: usize) -> Result<Self> {
        let spec = Self {
            n_cos,
            n_phi,
            n_omega,
            rule: QuadratureRule::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cos < 2 || self.n_phi < 2 || self.n_omega < 2 {
            return Err(Error::InvalidQuadrature(format!(
                "node counts must be >= 2, got {}x{}x{}",
                self.n_cos, self.n_phi, self.n_omega
            )));
        }
        Ok(())
    }

    /// Every node count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_cos: self.n_cos * factor,
            n_phi: self.n_phi * factor,
            n_omega: self.n_omega * factor,
            rule: self.rule,
        }
    }
}

/// `N`, `V` and the divergence coefficient of one current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSummary {
    pub n_bar: f64,
    pub v_functional: f64,
    pub c_coefficient: f64,
    pub fit_residual: f64,
}

/// Least-squares fit of `N(omega_min) = a + c ln(omega_max / omega_min)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceFit {
    pub c: f64,
    pub intercept: f64,
    /// RMS residual relative to the RMS of the fitted `N` values.
    pub residual: f64,
    pub r_squared: f64,
}

/// Number of `omega_min` points in a divergence fit.
pub const FIT_POINTS: usize = 8;

/// Sum over the two physical polarizations of `|J . eps|^2`, computed as
/// `-(J* . J)`. Equal to the transverse sum whenever `k . J = 0`.
pub fn polarization_sum(j: &ComplexFourVector) -> Result<f64> {
    let value = -j.conj_dot(j).re;
    let scale = j.euclidean_norm_sqr();
    if value < -1e-9 * scale {
        return Err(Error::NegativeBeyondTolerance { value, scale });
    }
    Ok(value.max(0.0))
}

/// Product angular rule laid out in a given frame.
#[derive(Debug, Clone)]
pub struct AngularRule {
    /// One row per `cos(theta)` node: (directions, weights).
    rows: Vec<(Vec<Vector3<f64>>, Vec<f64>)>,
}

impl AngularRule {
    pub fn new(n_cos: usize, n_phi: usize, frame: &Rotation3<f64>) -> Self {
        let (xs, ws) = gauss_legendre(n_cos);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let rows = xs
            .iter()
            .zip(&ws)
            .map(|(&c, &w)| {
                let s = (1.0 - c * c).max(0.0).sqrt();
                let dirs = (0..n_phi)
                    .map(|j| {
                        let phi = (j as f64 + 0.5) * dphi;
                        frame * Vector3::new(s * phi.cos(), s * phi.sin(), c)
                    })
                    .collect();
                (dirs, vec![w * dphi; n_phi])
            })
            .collect();
        Self { rows }
    }

    pub fn for_terms(terms: &[CurrentTerm], n_cos: usize, n_phi: usize) -> Self {
        Self::new(n_cos, n_phi, &adapted_frame(terms))
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.1.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `integral dOmega sum_pol |J(omega n)|^2` for the given current terms.
    pub fn integrate(&self, terms: &[CurrentTerm], omega: f64) -> Result<f64> {
        if terms.is_empty() {
            return Ok(0.0);
        }
        let partials: Vec<Result<f64>> = self
            .rows
            .par_iter()
            .map(|(dirs, weights)| {
                let mut acc = CompensatedSum::default();
                for (n, w) in dirs.iter().zip(weights) {
                    let k = FourVector::lightlike(omega, n);
                    acc.add(w * polarization_sum(&eval_terms(terms, &k))?);
                }
                Ok(acc.value())
            })
            .collect();
        let mut acc = CompensatedSum::default();
        for p in partials {
            acc.add(p?);
        }
        Ok(acc.value())
    }
}

/// Frame whose `z` axis is the coefficient-weighted mean leg direction and
/// whose `x` axis points toward the first leg off that axis.
pub fn adapted_frame(terms: &[CurrentTerm]) -> Rotation3<f64> {
    let dirs: Vec<(f64, Vector3<f64>)> = terms
        .iter()
        .filter_map(|t| {
            let p = t.momentum.spatial();
            let n = p.norm();
            (n > 0.0).then(|| (t.coefficient.abs(), p / n))
        })
        .collect();
    if dirs.is_empty() {
        return Rotation3::identity();
    }
    let total_weight: f64 = dirs.iter().map(|d| d.0).sum();
    let mean: Vector3<f64> = dirs.iter().map(|(w, d)| d * *w).sum();
    let axis = if mean.norm() > 1e-9 * total_weight {
        mean.normalize()
    } else {
        dirs[0].1
    };
    let reference = dirs
        .iter()
        .map(|(_, d)| d - axis * axis.dot(d))
        .find(|perp| perp.norm() > 1e-9);
    let x = match reference {
        Some(perp) => perp.normalize(),
        None => {
            let helper = if axis.x.abs() < 0.9 {
                Vector3::x()
            } else {
                Vector3::y()
            };
            (helper - axis * axis.dot(&helper)).normalize()
        }
    };
    let y = axis.cross(&x);
    Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, axis]))
}

/// `dN/d(omega)` at a single frequency.
pub fn spectral_density(
    current: &dyn SoftCurrent,
    omega: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    if omega.is_nan() || omega <= 0.0 {
        return Err(Error::NonPositiveFrequency { omega });
    }
    let terms = current.terms();
    let rule = AngularRule::for_terms(&terms, quad.n_cos, quad.n_phi);
    Ok(omega * rule.integrate(&terms, omega)?)
}

/// `integral_{lo}^{hi} d(omega) dN/d(omega)`, Gauss-Legendre in `ln(omega)`.
fn integrate_band(
    terms: &[CurrentTerm],
    rule: &AngularRule,
    lo: f64,
    hi: f64,
    n_omega: usize,
) -> Result<f64> {
    if terms.is_empty() || hi <= lo {
        return Ok(0.0);
    }
    let (xs, ws) = gauss_legendre(n_omega);
    let (a, b) = (lo.ln(), hi.ln());
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut parts = Vec::with_capacity(n_omega);
    for (x, w) in xs.iter().zip(&ws) {
        let omega = (mid + half * x).exp();
        // d(omega) = omega du, and dN/d(omega) = omega * angular
        parts.push(w * half * omega * omega * rule.integrate(terms, omega)?);
    }
    Ok(compensated_sum(parts))
}

/// Mean photon number radiated into the window.
pub fn mean_photon_number(
    current: &dyn SoftCurrent,
    cutoffs: &SpectralCutoffs,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    let terms = current.terms();
    let rule = AngularRule::for_terms(&terms, quad.n_cos, quad.n_phi);
    integrate_band(
        &terms,
        &rule,
        cutoffs.omega_min,
        cutoffs.omega_max,
        quad.n_omega,
    )
}

/// Fit the growth of `N` with `ln(omega_max / omega_min)` over [`FIT_POINTS`]
/// values of `omega_min` log-spaced in `[omega_min, omega_max / 10]`.
pub fn divergence_coefficient(
    current: &dyn SoftCurrent,
    window: &SpectralCutoffs,
    quad: &QuadratureSpec,
) -> Result<DivergenceFit> {
    quad.validate()?;
    let decades = window.decades();
    if decades < 2.0 - 1e-9 {
        return Err(Error::WindowTooNarrow { decades });
    }
    let terms = current.terms();
    let rule = AngularRule::for_terms(&terms, quad.n_cos, quad.n_phi);
    let mins = log_space(window.omega_min, window.omega_max / 10.0, FIT_POINTS);
    let xs: Vec<f64> = mins.iter().map(|m| (window.omega_max / m).ln()).collect();
    let ys = mins
        .iter()
        .map(|&m| integrate_band(&terms, &rule, m, window.omega_max, quad.n_omega))
        .collect::<Result<Vec<f64>>>()?;
    let fit = fit_line(&xs, &ys);
    Ok(DivergenceFit {
        c: fit.slope.max(0.0),
        intercept: fit.intercept,
        residual: fit.relative_residual(&ys),
        r_squared: fit.r_squared,
    })
}

pub fn spectral_summary(
    current: &dyn SoftCurrent,
    cutoffs: &SpectralCutoffs,
    quad: &QuadratureSpec,
) -> Result<SpectralSummary> {
    let n_bar = mean_photon_number(current, cutoffs, quad)?;
    let fit = divergence_coefficient(current, cutoffs, quad)?;
    Ok(SpectralSummary {
        n_bar,
        v_functional: 0.5 * n_bar,
        c_coefficient: fit.c,
        fit_residual: fit.residual,
    })
}

/// `V(J_a - J_b) = 1/2 integral dk sum_pol |J_a - J_b|^2`.
pub fn v_functional(
    a: &dyn SoftCurrent,
    b: &dyn SoftCurrent,
    cutoffs: &SpectralCutoffs,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let diff = CurrentDifference::new(a, b);
    Ok(0.5 * mean_photon_number(&diff, cutoffs, quad)?)
}

/// `|<f_a|f_b>| = exp(-V(J_a - J_b))`. Magnitude only.
pub fn overlap_magnitude(
    a: &dyn SoftCurrent,
    b: &dyn SoftCurrent,
    cutoffs: &SpectralCutoffs,
    quad: &QuadratureSpec,
) -> Result<f64> {
    Ok((-v_functional(a, b, cutoffs, quad)?).exp())
}

/// Expected number of photons with frequency above `threshold`.
pub fn energy_tail_number(
    current: &dyn SoftCurrent,
    threshold: f64,
    cutoffs: &SpectralCutoffs,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    if !(threshold >= cutoffs.omega_min && threshold <= cutoffs.omega_max) {
        return Err(Error::ThresholdOutOfRange {
            threshold,
            omega_min: cutoffs.omega_min,
            omega_max: cutoffs.omega_max,
        });
    }
    let terms = current.terms();
    let rule = AngularRule::for_terms(&terms, quad.n_cos, quad.n_phi);
    integrate_band(&terms, &rule, threshold, cutoffs.omega_max, quad.n_omega)
}
