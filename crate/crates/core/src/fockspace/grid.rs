use nalgebra::{Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::kinematics::FourVector;
use crate::numeric::gauss_legendre;
use crate::radiation::SpectralCutoffs;

/// One phase-space cell: a representative photon momentum, the exact
/// `d^3k / k0` measure of the cell, and two transverse polarizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k: FourVector,
    pub weight: f64,
    pub polarizations: [Vector3<f64>; 2],
}

/// Partition of the photon phase space between two cutoffs.
///
/// Cells are products of
/// * `cos(theta)` intervals bounded by cumulative Gauss-Legendre weights, each
///   holding its Gauss node (so the angular sum is a Gauss rule),
/// * equal `phi` intervals with the node at the midpoint,
/// * log-equal `omega` intervals whose node satisfies
///   `omega_c^-2 = <omega^-2>` over the cell measure, which sums a pure `1/omega^2`
///   integrand exactly.
///
/// Quantum modes are (cell, polarization) pairs, indexed `2 * cell + pol`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeGrid {
    cells: Vec<Mode>,
    cutoffs: SpectralCutoffs,
    shape: [usize; 3],
}

pub fn build_mode_grid(
    cutoffs: &SpectralCutoffs,
    n_cos: usize,
    n_phi: usize,
    n_omega: usize,
) -> Result<ModeGrid> {
    build_mode_grid_in_frame(cutoffs, n_cos, n_phi, n_omega, &Rotation3::identity())
}

/// As [`build_mode_grid`], with the polar axis and azimuth origin taken from `frame`.
pub fn build_mode_grid_in_frame(
    cutoffs: &SpectralCutoffs,
    n_cos: usize,
    n_phi: usize,
    n_omega: usize,
    frame: &Rotation3<f64>,
) -> Result<ModeGrid> {
    if n_cos == 0 || n_phi == 0 || n_omega == 0 {
        return Err(Error::InvalidQuadrature(format!(
            "grid node counts must be >= 1, got {n_cos}x{n_phi}x{n_omega}"
        )));
    }
    let (cos_nodes, cos_weights) = gauss_legendre(n_cos);
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let (lo, hi) = (cutoffs.omega_min().ln(), cutoffs.omega_max().ln());
    let omega_edges: Vec<f64> = (0..=n_omega)
        .map(|i| match i {
            0 => cutoffs.omega_min(),
            i if i == n_omega => cutoffs.omega_max(),
            i => (lo + (hi - lo) * i as f64 / n_omega as f64).exp(),
        })
        .collect();

    let mut cells = Vec::with_capacity(n_cos * n_phi * n_omega);
    for w in omega_edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let radial = 0.5 * (b * b - a * a);
        let omega = (radial / (b / a).ln()).sqrt();
        for (&c, &wc) in cos_nodes.iter().zip(&cos_weights) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                let (sp, cp) = phi.sin_cos();
                let n = frame * Vector3::new(s * cp, s * sp, c);
                let e_theta = frame * Vector3::new(c * cp, c * sp, -s);
                let e_phi = frame * Vector3::new(-sp, cp, 0.0);
                cells.push(Mode {
                    k: FourVector::lightlike(omega, &n),
                    weight: wc * dphi * radial,
                    polarizations: [e_theta, e_phi],
                });
            }
        }
    }
    Ok(ModeGrid {
        cells,
        cutoffs: *cutoffs,
        shape: [n_cos, n_phi, n_omega],
    })
}

impl ModeGrid {
    pub fn cells(&self) -> &[Mode] {
        &self.cells
    }

    pub fn cutoffs(&self) -> &SpectralCutoffs {
        &self.cutoffs
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    /// Number of quantum modes (two per cell).
    pub fn mode_count(&self) -> usize {
        2 * self.cells.len()
    }

    pub fn total_weight(&self) -> f64 {
        crate::numeric::compensated_sum(self.cells.iter().map(|c| c.weight))
    }

    /// `integral d^3k / k0` over the window: `2 pi (omega_max^2 - omega_min^2)`.
    pub fn window_measure(&self) -> f64 {
        let (a, b) = (self.cutoffs.omega_min(), self.cutoffs.omega_max());
        2.0 * std::f64::consts::PI * (b * b - a * a)
    }

    pub fn rotated(&self, rotation: &Rotation3<f64>) -> Self {
        Self {
            cells: self
                .cells
                .iter()
                .map(|m| Mode {
                    k: m.k.rotated(rotation),
                    weight: m.weight,
                    polarizations: m.polarizations.map(|e| rotation * e),
                })
                .collect(),
            cutoffs: self.cutoffs,
            shape: self.shape,
        }
    }
}
