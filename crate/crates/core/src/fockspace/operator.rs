use std::collections::BTreeMap;

use num_complex::Complex64;

use super::state::{ProductState, TruncatedFockState};
use crate::error::{Error, Result};
use crate::rng::RngState;

/// `(a^+)^creations a^annihilations` acting on one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub mode: usize,
    pub creations: u32,
    pub annihilations: u32,
}

/// `coefficient * prod_j (a_j^+)^r_j a_j^s_j`, normal ordered per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTerm {
    pub coefficient: Complex64,
    pub factors: Vec<Monomial>,
}

impl OperatorTerm {
    pub fn new(coefficient: Complex64, factors: Vec<Monomial>) -> Self {
        Self {
            coefficient,
            factors,
        }
    }

    fn key(&self) -> Vec<Monomial> {
        let mut k: Vec<Monomial> = self
            .factors
            .iter()
            .copied()
            .filter(|m| m.creations + m.annihilations > 0)
            .collect();
        k.sort();
        k
    }
}

fn adjoint_key(key: &[Monomial]) -> Vec<Monomial> {
    let mut k: Vec<Monomial> = key
        .iter()
        .map(|m| Monomial {
            mode: m.mode,
            creations: m.annihilations,
            annihilations: m.creations,
        })
        .collect();
    k.sort();
    k
}

/// A Hermitian observable written as a finite sum of normal-ordered monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    terms: Vec<OperatorTerm>,
}

impl OperatorSpec {
    /// Validates that the sum equals its conjugate-reversal and that no term
    /// repeats a mode.
    pub fn hermitian(terms: Vec<OperatorTerm>) -> Result<Self> {
        for t in &terms {
            let mut modes: Vec<usize> = t.factors.iter().map(|m| m.mode).collect();
            modes.sort_unstable();
            if modes.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::NotHermitian(format!(
                    "term repeats a mode: {:?}",
                    t.factors
                )));
            }
        }
        let mut collected: BTreeMap<Vec<Monomial>, Complex64> = BTreeMap::new();
        for t in &terms {
            *collected.entry(t.key()).or_default() += t.coefficient;
        }
        let scale = collected
            .values()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
            .max(1e-300);
        for (key, coef) in &collected {
            let partner = collected
                .get(&adjoint_key(key))
                .copied()
                .unwrap_or_default();
            if (coef - partner.conj()).norm() > 1e-12 * scale {
                return Err(Error::NotHermitian(format!(
                    "coefficient {coef} of {key:?} does not match adjoint partner {partner}"
                )));
            }
        }
        Ok(Self { terms })
    }

    /// Number operator `a_j^+ a_j`.
    pub fn number(mode: usize) -> Self {
        Self {
            terms: vec![OperatorTerm::new(
                Complex64::new(1.0, 0.0),
                vec![Monomial {
                    mode,
                    creations: 1,
                    annihilations: 1,
                }],
            )],
        }
    }

    /// Field quadrature `a_j + a_j^+`.
    pub fn quadrature(mode: usize) -> Self {
        Self {
            terms: vec![
                OperatorTerm::new(
                    Complex64::new(1.0, 0.0),
                    vec![Monomial {
                        mode,
                        creations: 0,
                        annihilations: 1,
                    }],
                ),
                OperatorTerm::new(
                    Complex64::new(1.0, 0.0),
                    vec![Monomial {
                        mode,
                        creations: 1,
                        annihilations: 0,
                    }],
                ),
            ],
        }
    }

    pub fn terms(&self) -> &[OperatorTerm] {
        &self.terms
    }

    /// Sorted list of modes the operator acts on.
    pub fn support(&self) -> Vec<usize> {
        let mut modes: Vec<usize> = self
            .terms
            .iter()
            .flat_map(|t| t.factors.iter().map(|m| m.mode))
            .collect();
        modes.sort_unstable();
        modes.dedup();
        modes
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| OperatorTerm::new(t.coefficient * factor, t.factors.clone()))
                .collect(),
        }
    }

    /// Bound on the normal-ordered symbol between coherent states,
    /// `sum_t |c_t| prod_j |alpha_j|^r |beta_j|^s >= |<alpha|B|beta>| / |<alpha|beta>|`.
    /// This is the norm used in interference bounds.
    pub fn coherent_bound(&self, alphas: &[Complex64], betas: &[Complex64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coefficient.norm()
                    * t.factors
                        .iter()
                        .map(|m| {
                            alphas[m.mode].norm().powi(m.creations as i32)
                                * betas[m.mode].norm().powi(m.annihilations as i32)
                        })
                        .product::<f64>()
            })
            .sum()
    }

    /// Random Hermitian operator on `modes`: `pairs` random monomials with
    /// per-mode powers up to `max_power`, each added together with its adjoint,
    /// plus a random real constant.
    pub fn random_hermitian(
        modes: &[usize],
        max_power: u32,
        pairs: usize,
        rng: &mut RngState,
    ) -> Self {
        let mut terms = Vec::with_capacity(2 * pairs + 1);
        terms.push(OperatorTerm::new(
            Complex64::new(gaussian(rng), 0.0),
            Vec::new(),
        ));
        for _ in 0..pairs {
            let coefficient = Complex64::new(gaussian(rng), gaussian(rng));
            let mut factors = Vec::with_capacity(modes.len());
            for &mode in modes {
                let creations = uniform_power(rng, max_power);
                let annihilations = uniform_power(rng, max_power);
                if creations + annihilations > 0 {
                    factors.push(Monomial {
                        mode,
                        creations,
                        annihilations,
                    });
                }
            }
            let adjoint: Vec<Monomial> = factors
                .iter()
                .map(|m| Monomial {
                    mode: m.mode,
                    creations: m.annihilations,
                    annihilations: m.creations,
                })
                .collect();
            terms.push(OperatorTerm::new(coefficient, factors));
            terms.push(OperatorTerm::new(coefficient.conj(), adjoint));
        }
        Self { terms }
    }
}

fn gaussian(rng: &mut RngState) -> f64 {
    // Box-Muller, cosine branch
    let u1 = 1.0 - rng.uniform();
    let u2 = rng.uniform();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn uniform_power(rng: &mut RngState, max_power: u32) -> u32 {
    ((rng.uniform() * (max_power + 1) as f64) as u32).min(max_power)
}

/// `a^s v` for a single truncated mode vector.
fn lower(v: &[Complex64], times: u32) -> Vec<Complex64> {
    let mut out = v.to_vec();
    for _ in 0..times {
        let n = out.len();
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        for m in 0..n - 1 {
            next[m] = out[m + 1] * ((m + 1) as f64).sqrt();
        }
        out = next;
    }
    out
}

fn mode_inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// `<u| (a^+)^r a^s |v> = <a^r u | a^s v>` for one mode.
fn monomial_element(u: &[Complex64], v: &[Complex64], m: &Monomial) -> Complex64 {
    mode_inner(&lower(u, m.creations), &lower(v, m.annihilations))
}

fn product_matrix_element(a: &ProductState, b: &ProductState, op: &OperatorSpec) -> Complex64 {
    let overlaps: Vec<Complex64> = a
        .modes()
        .iter()
        .zip(b.modes())
        .map(|(u, v)| mode_inner(u, v))
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    for term in op.terms() {
        let mut value = term.coefficient;
        for (j, o) in overlaps.iter().enumerate() {
            match term.factors.iter().find(|m| m.mode == j) {
                Some(m) => value *= monomial_element(a.mode(j), b.mode(j), m),
                None => value *= o,
            }
        }
        total += value;
    }
    total
}

fn check_support(state: &TruncatedFockState, op: &OperatorSpec) -> Result<()> {
    if let Some(&mode) = op.support().last() {
        if mode >= state.mode_count() {
            return Err(Error::ModeOutOfRange {
                mode,
                modes: state.mode_count(),
            });
        }
    }
    Ok(())
}

/// `<s1|B|s2>`.
pub fn matrix_element(
    s1: &TruncatedFockState,
    op: &OperatorSpec,
    s2: &TruncatedFockState,
) -> Result<Complex64> {
    if s1.n_max() != s2.n_max() || s1.mode_count() != s2.mode_count() {
        return Err(Error::GridMismatch);
    }
    check_support(s1, op)?;
    let mut total = Complex64::new(0.0, 0.0);
    for (wa, pa) in s1.terms() {
        for (wb, pb) in s2.terms() {
            total += wa.conj() * wb * product_matrix_element(pa, pb, op);
        }
    }
    Ok(total)
}

/// `<s|B|s>`, real for Hermitian `B`.
pub fn observable_expectation(state: &TruncatedFockState, op: &OperatorSpec) -> Result<f64> {
    Ok(matrix_element(state, op, state)?.re)
}

/// Excess of `<Psi|B|Psi>` over the mixture `|c1|^2 <B>_1 + |c2|^2 <B>_2`
/// for `Psi = c1 s1 + c2 s2`, with `s1, s2` normalized and `Psi` taken as is.
pub fn interference_term(
    c1: Complex64,
    s1: &TruncatedFockState,
    c2: Complex64,
    s2: &TruncatedFockState,
    op: &OperatorSpec,
) -> Result<f64> {
    let psi = TruncatedFockState::superpose(&[(c1, s1), (c2, s2)])?;
    let pure = observable_expectation(&psi, op)?;
    let mixed = c1.norm_sqr() * observable_expectation(s1, op)?
        + c2.norm_sqr() * observable_expectation(s2, op)?;
    Ok(pure - mixed)
}
