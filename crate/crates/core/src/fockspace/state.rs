use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::ModeGrid;
use crate::error::{Error, Result};
use crate::kinematics::{ComplexFourVector, FourVector, SoftCurrent};

/// Sign in `alpha_j = DISPLACEMENT_SIGN * i * sqrt(w_j) * (J(k_j) . eps_j)`.
///
/// With `+1` the coherent amplitudes follow `U(J) = i integral (J a^+ - J^* a)`,
/// so the displaced annihilator is `b = a + i J` projected on each mode.
pub const DISPLACEMENT_SIGN: f64 = 1.0;

/// Per-mode leak bound enforced by [`required_n_max`].
pub const LEAK_BOUND: f64 = 1e-10;

/// Upper limit on the number of product terms in an entangled state.
pub const MAX_PRODUCT_TERMS: usize = 64;

/// Truncation level that keeps the Poisson tail of a coherent state with
/// amplitude `|alpha|` below [`LEAK_BOUND`]: `ceil(|alpha|^2 + 10 |alpha| + 10)`.
pub fn required_n_max(amplitude: f64) -> usize {
    (amplitude * amplitude + 10.0 * amplitude + 10.0).ceil() as usize
}

/// Coherent amplitudes of a current projected on a mode grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentSpec {
    alphas: Vec<Complex64>,
}

impl CoherentSpec {
    pub fn from_alphas(alphas: Vec<Complex64>) -> Self {
        Self { alphas }
    }

    pub fn alphas(&self) -> &[Complex64] {
        &self.alphas
    }

    pub fn mode_count(&self) -> usize {
        self.alphas.len()
    }

    /// `sum_j |alpha_j|^2`, the mean photon number on the grid.
    pub fn photon_number(&self) -> f64 {
        crate::numeric::compensated_sum(self.alphas.iter().map(|a| a.norm_sqr()))
    }

    pub fn max_amplitude(&self) -> f64 {
        self.alphas.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// `sum_j |alpha_j - beta_j|^2`.
    pub fn distance_sqr(&self, other: &Self) -> Result<f64> {
        if self.alphas.len() != other.alphas.len() {
            return Err(Error::GridMismatch);
        }
        Ok(crate::numeric::compensated_sum(
            self.alphas
                .iter()
                .zip(&other.alphas)
                .map(|(a, b)| (a - b).norm_sqr()),
        ))
    }
}

fn dot_polarization(j: &ComplexFourVector, e: &Vector3<f64>) -> Complex64 {
    // Minkowski product with eps = (0, e)
    j.dot_real(&FourVector::from_parts(0.0, *e))
}

/// Project a current onto the grid's (cell, polarization) modes.
pub fn project_current(current: &dyn SoftCurrent, grid: &ModeGrid) -> Result<CoherentSpec> {
    let i = Complex64::new(0.0, DISPLACEMENT_SIGN);
    let alphas = grid
        .cells()
        .par_iter()
        .map(|cell| {
            let j = current.current_at(&cell.k)?;
            let s = cell.weight.sqrt();
            Ok(cell.polarizations.map(|e| i * s * dot_polarization(&j, &e)))
        })
        .collect::<Result<Vec<[Complex64; 2]>>>()?;
    Ok(CoherentSpec {
        alphas: alphas.into_iter().flatten().collect(),
    })
}

/// A product over modes of single-mode vectors `c_n`, `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    modes: Vec<Vec<Complex64>>,
}

impl ProductState {
    pub fn new(modes: Vec<Vec<Complex64>>) -> Self {
        Self { modes }
    }

    pub fn modes(&self) -> &[Vec<Complex64>] {
        &self.modes
    }

    pub fn mode(&self, j: usize) -> &[Complex64] {
        &self.modes[j]
    }
}

/// Truncated multi-mode photon state: a product state or a weighted sum of at
/// most [`MAX_PRODUCT_TERMS`] product states.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedFockState {
    terms: Vec<(Complex64, ProductState)>,
    n_max: usize,
    mode_count: usize,
}

impl TruncatedFockState {
    pub fn product(state: ProductState, n_max: usize) -> Result<Self> {
        let mode_count = state.modes.len();
        if state.modes.iter().any(|m| m.len() != n_max + 1) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            terms: vec![(Complex64::new(1.0, 0.0), state)],
            n_max,
            mode_count,
        })
    }

    /// `sum_i c_i |s_i>`; component states are flattened into one sum.
    pub fn superpose(parts: &[(Complex64, &TruncatedFockState)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            })?
            .1;
        let mut terms = Vec::new();
        for (c, s) in parts {
            if s.n_max != first.n_max || s.mode_count != first.mode_count {
                return Err(Error::GridMismatch);
            }
            for (w, p) in &s.terms {
                terms.push((c * w, p.clone()));
            }
        }
        if terms.len() > MAX_PRODUCT_TERMS {
            return Err(Error::TooManyTerms {
                terms: terms.len(),
                cap: MAX_PRODUCT_TERMS,
            });
        }
        Ok(Self {
            terms,
            n_max: first.n_max,
            mode_count: first.mode_count,
        })
    }

    pub fn terms(&self) -> &[(Complex64, ProductState)] {
        &self.terms
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn is_product(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn norm_sqr(&self) -> f64 {
        fock_overlap(self, self).map(|c| c.re).unwrap_or(f64::NAN)
    }

    /// `1 - sum_n |c_n|^2` per mode of a product state.
    pub fn truncation_leaks(&self) -> Option<Vec<f64>> {
        if !self.is_product() {
            return None;
        }
        let (w, p) = &self.terms[0];
        let scale = w.norm_sqr();
        Some(
            p.modes
                .iter()
                .map(|m| scale - scale * m.iter().map(|c| c.norm_sqr()).sum::<f64>())
                .collect(),
        )
    }

    /// Mean occupation `sum_n n |c_n|^2` of one mode in a product state.
    pub fn mean_occupation(&self, mode: usize) -> Option<f64> {
        if !self.is_product() || mode >= self.mode_count {
            return None;
        }
        let (w, p) = &self.terms[0];
        Some(
            w.norm_sqr()
                * p.modes[mode]
                    .iter()
                    .enumerate()
                    .map(|(n, c)| n as f64 * c.norm_sqr())
                    .sum::<f64>(),
        )
    }
}

/// Single-mode coherent amplitudes `exp(-|a|^2/2) a^n / sqrt(n!)`.
pub fn coherent_vector(alpha: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut c = Vec::with_capacity(n_max + 1);
    c.push(Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0));
    for n in 1..=n_max {
        let prev = c[n - 1];
        c.push(prev * alpha / (n as f64).sqrt());
    }
    c
}

fn check_truncation(amplitude: f64, n_max: usize) -> Result<()> {
    let required = required_n_max(amplitude);
    if n_max < required {
        return Err(Error::TruncationTooSmall {
            n_max,
            amplitude,
            required,
        });
    }
    Ok(())
}

/// Displaced vacuum `D(alpha)|0>` on every mode (phase of `S(J)` dropped).
pub fn displace_vacuum(spec: &CoherentSpec, n_max: usize) -> Result<TruncatedFockState> {
    check_truncation(spec.max_amplitude(), n_max)?;
    let modes = spec
        .alphas
        .iter()
        .map(|&a| coherent_vector(a, n_max))
        .collect();
    TruncatedFockState::product(ProductState::new(modes), n_max)
}

fn mode_inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn product_overlap(a: &ProductState, b: &ProductState) -> Complex64 {
    a.modes
        .iter()
        .zip(&b.modes)
        .fold(Complex64::new(1.0, 0.0), |acc, (u, v)| {
            acc * mode_inner(u, v)
        })
}

/// `<s1|s2>` as a product of per-mode inner products (summed over terms).
pub fn fock_overlap(s1: &TruncatedFockState, s2: &TruncatedFockState) -> Result<Complex64> {
    if s1.n_max != s2.n_max || s1.mode_count != s2.mode_count {
        return Err(Error::GridMismatch);
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (wa, pa) in &s1.terms {
        for (wb, pb) in &s2.terms {
            total += wa.conj() * wb * product_overlap(pa, pb);
        }
    }
    Ok(total)
}

/// Displacement operator `<m|D(alpha)|n>` for `m, n <= n_max`.
///
/// Uses the closed form `<m|D|n> = sqrt(n!/m!) alpha^(m-n) exp(-|alpha|^2/2)
/// L_n^(m-n)(|alpha|^2)` for `m >= n` and `D_mn(alpha) = conj(D_nm(-alpha))`
/// above the diagonal. Each entry depends only on `(m, n, alpha)`, so the
/// truncated block is exact up to rounding.
pub fn displacement_matrix(alpha: Complex64, n_max: usize) -> DMatrix<Complex64> {
    let dim = n_max + 1;
    let x = alpha.norm_sqr();
    let gauss = (-0.5 * x).exp();
    let mut d = DMatrix::<Complex64>::zeros(dim, dim);
    // alpha^k sqrt(n!/(n+k)!) exp(-|alpha|^2/2), advanced one k at a time
    let mut below = vec![Complex64::new(gauss, 0.0); dim];
    let mut above = below.clone();
    let mut lag = Vec::with_capacity(dim);
    for k in 0..dim {
        let kf = k as f64;
        if k > 0 {
            for n in 0..dim - k {
                let s = ((n + k) as f64).sqrt();
                below[n] *= alpha / s;
                above[n] *= -alpha.conj() / s;
            }
        }
        // L_n^(k)(x) by the three-term recurrence in n
        lag.clear();
        lag.push(1.0);
        if dim - k > 1 {
            lag.push(1.0 + kf - x);
        }
        for n in 1..dim - k - 1 {
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + kf - x) * lag[n] - (nf + kf) * lag[n - 1]) / (nf + 1.0);
            lag.push(next);
        }
        for (n, l) in lag.iter().enumerate() {
            d[(n + k, n)] = below[n] * *l;
            d[(n, n + k)] = above[n] * *l;
        }
    }
    d
}

fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// `D^+ a D - (a + alpha)` and `D^+ D - 1` restricted to `n <= block`.
fn residual_blocks(
    alpha: Complex64,
    n_max: usize,
    block: usize,
) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let block = block.min(n_max);
    let dim = n_max + 1;
    let rows = block + 1;
    let d = displacement_matrix(alpha, n_max);
    let d_cols = d.columns(0, rows);
    // (aD)_{k,n} = sqrt(k+1) D_{k+1,n}
    let ad = DMatrix::from_fn(dim, rows, |k, n| {
        if k + 1 < dim {
            d[(k + 1, n)] * ((k + 1) as f64).sqrt()
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let d_adj = d_cols.adjoint();
    let mut transformed = &d_adj * &ad;
    let mut gram = &d_adj * d_cols;
    for m in 0..rows {
        transformed[(m, m)] -= alpha;
        if m + 1 < rows {
            transformed[(m, m + 1)] -= Complex64::new(((m + 1) as f64).sqrt(), 0.0);
        }
        gram[(m, m)] -= Complex64::new(1.0, 0.0);
    }
    (transformed, gram)
}

/// Residuals of a single-mode displacement on the block `n <= block`:
/// `(||D^+ a D - (a + alpha)||, ||D^+ D - 1||)` in operator norm.
pub fn displacement_residuals(alpha: Complex64, n_max: usize, block: usize) -> (f64, f64) {
    let (t, g) = residual_blocks(alpha, n_max, block);
    (spectral_norm(&t), spectral_norm(&g))
}

/// Largest level unaffected by truncation for amplitude `|alpha|`:
/// `n_max - required_n_max(|alpha|)`.
pub fn restricted_block(amplitude: f64, n_max: usize) -> Result<usize> {
    check_truncation(amplitude, n_max)?;
    Ok(n_max - required_n_max(amplitude))
}

type ResidualPair = (DMatrix<Complex64>, DMatrix<Complex64>);

fn worst_over_modes(
    spec: &CoherentSpec,
    n_max: usize,
    pick: fn(ResidualPair) -> DMatrix<Complex64>,
) -> Result<f64> {
    check_truncation(spec.max_amplitude(), n_max)?;
    let worst = spec
        .alphas
        .par_iter()
        .fold(
            || 0.0,
            |worst: f64, &alpha| {
                let block = n_max - required_n_max(alpha.norm());
                let r = pick(residual_blocks(alpha, n_max, block));
                // The Frobenius norm bounds the operator norm, so the SVD is
                // only needed when it could raise the running maximum.
                if r.norm() <= worst {
                    worst
                } else {
                    worst.max(spectral_norm(&r))
                }
            },
        )
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Max over modes of `||D^+ a D - (a + alpha)||` on each mode's restricted block.
pub fn bogoliubov_residual(spec: &CoherentSpec, n_max: usize) -> Result<f64> {
    worst_over_modes(spec, n_max, |(t, _)| t)
}

/// Max over modes of `||D^+ D - 1||` on the restricted blocks.
pub fn unitarity_residual(spec: &CoherentSpec, n_max: usize) -> Result<f64> {
    worst_over_modes(spec, n_max, |(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_amplitude_is_vacuum() {
        let spec = CoherentSpec::from_alphas(vec![c(0.0, 0.0); 3]);
        let s = displace_vacuum(&spec, 10).unwrap();
        for j in 0..3 {
            let m = s.terms()[0].1.mode(j);
            assert_eq!(m[0], c(1.0, 0.0));
            assert!(m[1..].iter().all(|x| *x == c(0.0, 0.0)));
        }
        assert_eq!(bogoliubov_residual(&spec, 10).unwrap(), 0.0);
    }

    #[test]
    fn poisson_vacuum_probability() {
        let spec = CoherentSpec::from_alphas(vec![c(0.3, 0.4)]);
        let s = displace_vacuum(&spec, 40).unwrap();
        let p0 = s.terms()[0].1.mode(0)[0].norm_sqr();
        assert!((p0 - 0.778_800_783_071_404_9).abs() < 1e-9);
        assert!((s.mean_occupation(0).unwrap() - 0.25).abs() < 1e-10);
        assert!(s.truncation_leaks().unwrap()[0] < LEAK_BOUND);
    }

    #[test]
    fn truncation_rule_enforced() {
        let spec = CoherentSpec::from_alphas(vec![c(2.0, 0.0)]);
        assert_eq!(required_n_max(2.0), 34);
        let err = displace_vacuum(&spec, 20).unwrap_err();
        assert_eq!(
            err,
            Error::TruncationTooSmall {
                n_max: 20,
                amplitude: 2.0,
                required: 34
            }
        );
        assert!(bogoliubov_residual(&spec, 33).is_err());
    }

    #[test]
    fn coherent_overlap_with_vacuum() {
        let a = displace_vacuum(&CoherentSpec::from_alphas(vec![c(0.0, 1.0)]), 40).unwrap();
        let v = displace_vacuum(&CoherentSpec::from_alphas(vec![c(0.0, 0.0)]), 40).unwrap();
        let o = fock_overlap(&a, &v).unwrap();
        assert!((o.norm() - 0.606_530_659_712_633_4).abs() < 1e-9);
        assert_relative_eq!(fock_overlap(&a, &a).unwrap().re, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn overlap_checks_shapes() {
        let a = displace_vacuum(&CoherentSpec::from_alphas(vec![c(0.1, 0.0)]), 20).unwrap();
        let b = displace_vacuum(&CoherentSpec::from_alphas(vec![c(0.1, 0.0)]), 21).unwrap();
        assert_eq!(fock_overlap(&a, &b).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn superposition_cap() {
        let a = displace_vacuum(&CoherentSpec::from_alphas(vec![c(0.1, 0.0)]), 12).unwrap();
        let parts: Vec<(Complex64, &TruncatedFockState)> =
            (0..65).map(|_| (c(0.1, 0.0), &a)).collect();
        assert!(matches!(
            TruncatedFockState::superpose(&parts),
            Err(Error::TooManyTerms { terms: 65, cap: 64 })
        ));
        assert!(TruncatedFockState::superpose(&parts[..64]).is_ok());
    }

    #[test]
    fn displacement_residual_small_alpha() {
        let alpha = c(0.5, 0.0);
        let block = restricted_block(0.5, 40).unwrap();
        let (r, u) = displacement_residuals(alpha, 40, block);
        assert!(r < 1e-8, "{r}");
        assert!(u < 1e-8, "{u}");
        let (full, _) = displacement_residuals(alpha, 40, 40);
        assert!(full > r);
    }
}
