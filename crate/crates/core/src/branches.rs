//! Entangled final states as weighted ensembles of scattering branches.
//!
//! Each branch carries the soft-photon cloud of its electron current. Branch
//! weights enter only through their magnitudes; the neutrino and detector
//! factors are orthogonality labels and never change a photon overlap.

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fockspace::{build_mode_grid_in_frame, project_current};
use crate::kinematics::{
    cm_direction, elastic_final_state, elementary_charge, sample_direction, CompositeCurrent,
    EmissionCurrent, ParticleState, ScatteringEvent, SoftCurrent, FINE_STRUCTURE,
};
use crate::numeric::{wilson_interval, Z_95};
use crate::radiation::{
    adapted_frame, energy_tail_number, overlap_magnitude, QuadratureSpec, SpectralCutoffs,
};
use crate::rng::RngState;

/// Tolerance on `|c_0|^2 + sum |c_l|^2 = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Default no-interaction rate `|c_0|^2`.
pub const DEFAULT_VACUUM_RATE: f64 = 0.5;

/// One scattering outcome with its radiating electron current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub weight: Complex64,
    pub event: ScatteringEvent,
    pub current: EmissionCurrent,
}

impl Branch {
    pub fn new(weight: Complex64, event: ScatteringEvent) -> Result<Self> {
        if !weight.re.is_finite() || !weight.im.is_finite() {
            return Err(Error::NonFinite {
                what: "branch weight",
            });
        }
        if weight.norm() > 1.0 + NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidWeights {
                total: weight.norm_sqr(),
            });
        }
        let current = event.electron_current(elementary_charge(FINE_STRUCTURE))?;
        Ok(Self {
            weight,
            event,
            current,
        })
    }
}

/// Vacuum (no-interaction) amplitude plus scattered branches.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    vacuum_weight: Complex64,
    vacuum_current: EmissionCurrent,
    branches: Vec<Branch>,
}

impl BranchSet {
    /// `vacuum_current` is any current with vanishing radiation, typically the
    /// unscattered electron `p -> p`.
    pub fn new(
        vacuum_weight: Complex64,
        vacuum_current: EmissionCurrent,
        branches: Vec<Branch>,
    ) -> Result<Self> {
        let total =
            vacuum_weight.norm_sqr() + branches.iter().map(|b| b.weight.norm_sqr()).sum::<f64>();
        if !total.is_finite() || (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidWeights { total });
        }
        Ok(Self {
            vacuum_weight,
            vacuum_current,
            branches,
        })
    }

    /// Same branches with user-supplied amplitudes `[c_0, c_1, ...]`.
    pub fn with_weights(&self, weights: &[Complex64]) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: weights.len(),
            });
        }
        let branches = self
            .branches
            .iter()
            .zip(&weights[1..])
            .map(|(b, &w)| Branch::new(w, b.event))
            .collect::<Result<Vec<_>>>()?;
        Self::new(weights[0], self.vacuum_current, branches)
    }

    pub fn vacuum_weight(&self) -> Complex64 {
        self.vacuum_weight
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Number of entries including the vacuum branch.
    pub fn len(&self) -> usize {
        self.branches.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `[c_0, c_1, ...]`.
    pub fn weights(&self) -> Vec<Complex64> {
        std::iter::once(self.vacuum_weight)
            .chain(self.branches.iter().map(|b| b.weight))
            .collect()
    }

    /// Currents in matrix order, vacuum first.
    pub fn currents(&self) -> Vec<&EmissionCurrent> {
        std::iter::once(&self.vacuum_current)
            .chain(self.branches.iter().map(|b| &b.current))
            .collect()
    }
}

/// Sample `n_branches` elastic outcomes with uniform centre-of-momentum
/// directions and equal real weights; `vacuum_rate` is `|c_0|^2`.
///
/// Branch `l` draws its direction from `rng.split(l)`, so the set does not
/// depend on evaluation order.
pub fn build_branches(
    e_in: &ParticleState,
    nu_in: &ParticleState,
    n_branches: usize,
    vacuum_rate: f64,
    rng: &RngState,
) -> Result<BranchSet> {
    if n_branches == 0 {
        return Err(Error::InvalidParameter {
            what: "branch count",
            value: 0.0,
        });
    }
    if !(0.0..=1.0).contains(&vacuum_rate) {
        return Err(Error::InvalidParameter {
            what: "vacuum rate",
            value: vacuum_rate,
        });
    }
    let weight = Complex64::new(((1.0 - vacuum_rate) / n_branches as f64).sqrt(), 0.0);
    let branches = (0..n_branches)
        .into_par_iter()
        .map(|l| {
            let mut stream = rng.split(l as u64);
            let direction = sample_direction(&mut stream);
            Branch::new(weight, elastic_final_state(e_in, nu_in, &direction)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let vacuum = EmissionCurrent::new(*e_in, *e_in, elementary_charge(FINE_STRUCTURE))?;
    BranchSet::new(Complex64::new(vacuum_rate.sqrt(), 0.0), vacuum, branches)
}

/// `M_lm = |<f_l|f_m>|` over all branches, vacuum at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceMatrix {
    pub entries: DMatrix<f64>,
    pub cutoffs: SpectralCutoffs,
}

impl DecoherenceMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.entries[(l, m)]
    }
}

pub fn decoherence_matrix(
    set: &BranchSet,
    cutoffs: &SpectralCutoffs,
    quad: &QuadratureSpec,
) -> Result<DecoherenceMatrix> {
    let currents = set.currents();
    let n = currents.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|l| (l + 1..n).map(move |m| (l, m)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(l, m)| overlap_magnitude(currents[l], currents[m], cutoffs, quad))
        .collect::<Result<Vec<f64>>>()?;
    let mut entries = DMatrix::<f64>::identity(n, n);
    for (&(l, m), v) in pairs.iter().zip(values) {
        entries[(l, m)] = v;
        entries[(m, l)] = v;
    }
    Ok(DecoherenceMatrix {
        entries,
        cutoffs: *cutoffs,
    })
}

/// Summary of how far the branch ensemble is from a mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceMetrics {
    /// `sum_l |c_l|^4 + sum_{l != m} |c_l|^2 |c_m|^2 M_lm^2`.
    pub purity_proxy: f64,
    /// `sum_{l != m} |c_l| |c_m| M_lm`.
    pub offdiag_norm: f64,
}

pub fn coherence_metrics(set: &BranchSet, matrix: &DecoherenceMatrix) -> Result<CoherenceMetrics> {
    let mags: Vec<f64> = set.weights().iter().map(|c| c.norm()).collect();
    let n = mags.len();
    if matrix.entries.nrows() != n || matrix.entries.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: matrix.entries.nrows(),
        });
    }
    let mut purity = crate::numeric::CompensatedSum::default();
    let mut offdiag = crate::numeric::CompensatedSum::default();
    for l in 0..n {
        for m in 0..n {
            let w = mags[l] * mags[m];
            let v = matrix.entries[(l, m)];
            if l == m {
                purity.add(w * w);
            } else {
                purity.add(w * w * v * v);
                offdiag.add(w * v);
            }
        }
    }
    Ok(CoherenceMetrics {
        purity_proxy: purity.value(),
        offdiag_norm: offdiag.value(),
    })
}

/// Probability that the branch's photon cloud holds at least one photon above
/// `threshold`: `1 - exp(-N_tail)`.
pub fn detector_efficiency(
    branch: &Branch,
    threshold: f64,
    cutoffs: &SpectralCutoffs,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let tail = energy_tail_number(&branch.current, threshold, cutoffs, quad)?;
    Ok(-(-tail).exp_m1())
}

/// Monte Carlo estimate with its 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub interval: (f64, f64),
    pub hits: u64,
    pub trials: u64,
}

impl Estimate {
    fn from_counts(hits: u64, trials: u64) -> Self {
        Self {
            value: hits as f64 / trials as f64,
            interval: wilson_interval(hits, trials, Z_95),
            hits,
            trials,
        }
    }
}

/// Detector firing rate from independent Poisson occupations of every mode of
/// a `shape = [n_cos, n_phi, n_omega]` grid covering `[threshold, omega_max]`.
///
/// A trial fires when any mode is occupied. Mode `j` is occupied with
/// probability `1 - exp(-|alpha_j|^2)`, so the gaps between its firing trials
/// are geometric with `P(gap >= g) = exp(-g |alpha_j|^2)`; each mode walks
/// through the trials by sampling those gaps.
pub fn detector_efficiency_mc(
    branch: &Branch,
    threshold: f64,
    cutoffs: &SpectralCutoffs,
    shape: [usize; 3],
    trials: u64,
    rng: &RngState,
) -> Result<Estimate> {
    if !(threshold >= cutoffs.omega_min() && threshold < cutoffs.omega_max()) {
        return Err(Error::ThresholdOutOfRange {
            threshold,
            omega_min: cutoffs.omega_min(),
            omega_max: cutoffs.omega_max(),
        });
    }
    if trials == 0 {
        return Err(Error::InvalidParameter {
            what: "trial count",
            value: 0.0,
        });
    }
    let window = SpectralCutoffs::new(threshold, cutoffs.omega_max())?;
    let frame = adapted_frame(&branch.current.terms());
    let grid = build_mode_grid_in_frame(&window, shape[0], shape[1], shape[2], &frame)?;
    let spec = project_current(&branch.current, &grid)?;
    let mut fired = vec![false; trials as usize];
    let mut stream = rng.split(0);
    for alpha in spec.alphas() {
        let rate = alpha.norm_sqr();
        if rate == 0.0 {
            continue;
        }
        let mut t = 0.0f64;
        loop {
            // 1 - u lies in (0, 1]
            t += (-(1.0 - stream.uniform()).ln() / rate).floor();
            if t >= trials as f64 {
                break;
            }
            fired[t as usize] = true;
            t += 1.0;
        }
    }
    let hits = fired.iter().filter(|&&f| f).count() as u64;
    Ok(Estimate::from_counts(hits, trials))
}

/// One rescattering history: the electron scatters to an intermediate state
/// and then, off the same neutrino, to a final state.
#[derive(Debug, Clone, PartialEq)]
pub struct RescatterSample {
    pub chain: CompositeCurrent,
    /// `1 - cos` of the angle between the final and initial centre-of-momentum directions.
    pub angular_gap: f64,
}

pub fn rescatter_sample(
    e_in: &ParticleState,
    nu_in: &ParticleState,
    rng: &mut RngState,
) -> Result<RescatterSample> {
    let first = elastic_final_state(e_in, nu_in, &sample_direction(rng))?;
    let second = elastic_final_state(&first.e_out, &first.nu_out, &sample_direction(rng))?;
    let initial = cm_direction(e_in, nu_in);
    let last: Vector3<f64> = cm_direction(&second.e_out, &second.nu_out);
    let chain = CompositeCurrent::new(
        vec![*e_in, first.e_out, second.e_out],
        elementary_charge(FINE_STRUCTURE),
    )?;
    Ok(RescatterSample {
        chain,
        angular_gap: 1.0 - initial.dot(&last),
    })
}

/// Fraction of rescattering histories whose final electron returns within a
/// cap covering fraction `delta` of the sphere around its initial
/// centre-of-momentum direction.
///
/// Samples are drawn in fixed-size blocks from `rng.split(block)`, so the
/// estimate is independent of the thread count.
pub fn return_probability(
    e_in: &ParticleState,
    nu_in: &ParticleState,
    delta: f64,
    n_samples: u64,
    rng: &RngState,
) -> Result<Estimate> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidTolerance(delta));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter {
            what: "sample count",
            value: 0.0,
        });
    }
    const BLOCK: u64 = 1 << 14;
    // cap of solid-angle fraction delta: 1 - cos(theta) <= 2 delta
    let limit = 2.0 * delta;
    let blocks = n_samples.div_ceil(BLOCK);
    let hits = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng.split(b);
            let count = BLOCK.min(n_samples - b * BLOCK);
            let mut hits = 0u64;
            for _ in 0..count {
                if rescatter_sample(e_in, nu_in, &mut stream)?.angular_gap <= limit {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    Ok(Estimate::from_counts(hits, n_samples))
}
