//! Four-vectors, elastic two-body kinematics and the classical soft-photon
//! emission current `J_mu(k) = i e (p_mu / p.k - p'_mu / p'.k)`.
//!
//! Conventions: natural units, metric `(+, -, -, -)`, energies in units of the
//! incoming electron energy unless a caller chooses otherwise.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Rotation3, Unit, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::RngState;

/// Fine-structure constant used when no other value is configured.
pub const FINE_STRUCTURE: f64 = 1.0 / 137.035_999;

/// Elementary charge with `e^2 = 4 pi alpha`.
pub fn elementary_charge(alpha: f64) -> f64 {
    (4.0 * std::f64::consts::PI * alpha).sqrt()
}

const SHELL_TOLERANCE: f64 = 1e-9;
const LIGHTLIKE_TOLERANCE: f64 = 1e-9;
const UNIT_TOLERANCE: f64 = 1e-12;
const CONSERVATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourVector {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FourVector {
    pub const fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    pub fn from_parts(t: f64, spatial: Vector3<f64>) -> Self {
        Self::new(t, spatial.x, spatial.y, spatial.z)
    }

    /// Massless momentum `omega (1, n)`; `direction` must be a unit vector.
    pub fn lightlike(omega: f64, direction: &Vector3<f64>) -> Self {
        Self::from_parts(omega, direction * omega)
    }

    pub fn spatial(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn square(&self) -> f64 {
        minkowski_dot(self, self)
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn rotated(&self, rotation: &Rotation3<f64>) -> Self {
        Self::from_parts(self.t, rotation * self.spatial())
    }

    /// Pure boost by velocity `beta` (|beta| < 1): the frame where this
    /// vector was measured moves with `-beta` relative to the result's frame.
    pub fn boosted(&self, beta: &Vector3<f64>) -> Self {
        let b2 = beta.norm_squared();
        if b2 == 0.0 {
            return *self;
        }
        let gamma = 1.0 / (1.0 - b2).sqrt();
        let p = self.spatial();
        let bp = beta.dot(&p);
        let t = gamma * (self.t + bp);
        let spatial = p + beta * ((gamma - 1.0) * bp / b2 + gamma * self.t);
        Self::from_parts(t, spatial)
    }

    fn scale(&self) -> f64 {
        self.t.abs().max(self.spatial().norm())
    }
}

impl Add for FourVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.t + o.t, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for FourVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.t - o.t, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for FourVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.t, -self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for FourVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.t * s, self.x * s, self.y * s, self.z * s)
    }
}

/// Minkowski product with signature `(+, -, -, -)`.
pub fn minkowski_dot(a: &FourVector, b: &FourVector) -> f64 {
    a.t * b.t - a.x * b.x - a.y * b.y - a.z * b.z
}

/// Four complex components `(t, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexFourVector(pub [Complex64; 4]);

impl ComplexFourVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_real(v: &FourVector, factor: Complex64) -> Self {
        Self([factor * v.t, factor * v.x, factor * v.y, factor * v.z])
    }

    pub fn components(&self) -> &[Complex64; 4] {
        &self.0
    }

    /// Bilinear Minkowski product with a real four-vector.
    pub fn dot_real(&self, v: &FourVector) -> Complex64 {
        let c = &self.0;
        c[0] * v.t - c[1] * v.x - c[2] * v.y - c[3] * v.z
    }

    /// Sesquilinear product `self* . other`.
    pub fn conj_dot(&self, other: &Self) -> Complex64 {
        let (a, b) = (&self.0, &other.0);
        a[0].conj() * b[0] - a[1].conj() * b[1] - a[2].conj() * b[2] - a[3].conj() * b[3]
    }

    /// Euclidean squared magnitude `sum_mu |J_mu|^2`.
    pub fn euclidean_norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Add for ComplexFourVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for ComplexFourVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Mul<f64> for ComplexFourVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self(self.0.map(|c| c * s))
    }
}

/// An on-shell particle with positive energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    momentum: FourVector,
    mass: f64,
}

impl ParticleState {
    pub fn new(momentum: FourVector, mass: f64) -> Result<Self> {
        if !momentum.is_finite() || !mass.is_finite() {
            return Err(Error::NonFinite {
                what: "particle momentum",
            });
        }
        if mass < 0.0 {
            return Err(Error::InvalidParameter {
                what: "mass",
                value: mass,
            });
        }
        if momentum.t <= 0.0 {
            return Err(Error::NonPositiveEnergy { energy: momentum.t });
        }
        let square = momentum.square();
        let mass_sq = mass * mass;
        if (square - mass_sq).abs() > SHELL_TOLERANCE * momentum.t.powi(2).max(1.0) {
            return Err(Error::OffShell { square, mass_sq });
        }
        Ok(Self { momentum, mass })
    }

    /// Particle of total energy `energy` moving along `direction` (normalized here).
    pub fn with_energy(energy: f64, mass: f64, direction: &Vector3<f64>) -> Result<Self> {
        if energy < mass {
            return Err(Error::InvalidParameter {
                what: "energy below mass",
                value: energy,
            });
        }
        let p = (energy * energy - mass * mass).max(0.0).sqrt();
        let n = direction.norm();
        let spatial = if p == 0.0 || n == 0.0 {
            Vector3::zeros()
        } else {
            direction * (p / n)
        };
        Self::new(FourVector::from_parts(energy, spatial), mass)
    }

    pub fn momentum(&self) -> &FourVector {
        &self.momentum
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn energy(&self) -> f64 {
        self.momentum.t
    }

    pub fn rotated(&self, rotation: &Rotation3<f64>) -> Self {
        Self {
            momentum: self.momentum.rotated(rotation),
            mass: self.mass,
        }
    }
}

/// Incoming electron along `+z` with `energy`, outgoing electron with the same
/// energy deflected by `angle` (radians) about the `y` axis.
pub fn deflected_pair(
    energy: f64,
    mass: f64,
    angle: f64,
) -> Result<(ParticleState, ParticleState)> {
    let p_in = ParticleState::with_energy(energy, mass, &Vector3::z())?;
    let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), angle);
    Ok((p_in, p_in.rotated(&rot)))
}

/// Elastic `e nu -> e' nu'` event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringEvent {
    pub e_in: ParticleState,
    pub nu_in: ParticleState,
    pub e_out: ParticleState,
    pub nu_out: ParticleState,
}

impl ScatteringEvent {
    pub fn new(
        e_in: ParticleState,
        nu_in: ParticleState,
        e_out: ParticleState,
        nu_out: ParticleState,
    ) -> Result<Self> {
        let before = *e_in.momentum() + *nu_in.momentum();
        let after = *e_out.momentum() + *nu_out.momentum();
        let diff = before - after;
        let scale = before.scale().max(1.0);
        let worst = [diff.t, diff.x, diff.y, diff.z]
            .iter()
            .fold(0.0f64, |m, d| m.max(d.abs()));
        if worst > CONSERVATION_TOLERANCE * scale {
            return Err(Error::InvalidParameter {
                what: "four-momentum non-conservation",
                value: worst,
            });
        }
        Ok(Self {
            e_in,
            nu_in,
            e_out,
            nu_out,
        })
    }

    pub fn total_momentum(&self) -> FourVector {
        *self.e_in.momentum() + *self.nu_in.momentum()
    }

    /// Charged-leg current of this event.
    pub fn electron_current(&self, charge: f64) -> Result<EmissionCurrent> {
        EmissionCurrent::new(self.e_in, self.e_out, charge)
    }
}

fn centre_of_momentum_velocity(total: &FourVector) -> Vector3<f64> {
    total.spatial() / total.t
}

/// Direction of the incoming electron in the centre-of-momentum frame.
pub fn cm_direction(e_in: &ParticleState, nu_in: &ParticleState) -> Vector3<f64> {
    let total = *e_in.momentum() + *nu_in.momentum();
    let beta = centre_of_momentum_velocity(&total);
    let p = e_in.momentum().boosted(&-beta).spatial();
    let n = p.norm();
    if n == 0.0 {
        Vector3::z()
    } else {
        p / n
    }
}

/// Elastic final state with the outgoing electron along `direction` in the
/// centre-of-momentum frame, boosted back to the frame of the inputs.
pub fn elastic_final_state(
    e_in: &ParticleState,
    nu_in: &ParticleState,
    direction: &Vector3<f64>,
) -> Result<ScatteringEvent> {
    let norm = direction.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NotUnit { norm });
    }
    let total = *e_in.momentum() + *nu_in.momentum();
    let s = total.square();
    let (me, mn) = (e_in.mass(), nu_in.mass());
    let threshold = me + mn;
    let sqrt_s = s.max(0.0).sqrt();
    if sqrt_s <= threshold {
        return Err(Error::BelowThreshold {
            invariant_mass: sqrt_s,
            threshold,
        });
    }
    let beta = centre_of_momentum_velocity(&total);
    // CM energies and |p*| are taken from the boosted inputs, which keeps
    // the elastic magnitude and shell conditions at rounding level.
    let e_star = e_in.momentum().boosted(&-beta);
    let nu_star = nu_in.momentum().boosted(&-beta);
    let p_star = e_star.spatial().norm();
    let e_cm = FourVector::from_parts(e_star.t, direction * p_star);
    let nu_cm = FourVector::from_parts(nu_star.t, -direction * p_star);
    let e_out = ParticleState::new(e_cm.boosted(&beta), me)?;
    let nu_out = ParticleState::new(nu_cm.boosted(&beta), mn)?;
    ScatteringEvent::new(*e_in, *nu_in, e_out, nu_out)
}

/// Uniform unit vector on the sphere.
pub fn sample_direction(rng: &mut RngState) -> Vector3<f64> {
    let cos_theta = 2.0 * rng.uniform() - 1.0;
    let phi = 2.0 * std::f64::consts::PI * rng.uniform();
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    Vector3::new(sin_theta * phi.cos(), sin_theta * phi.sin(), cos_theta)
}

/// Rotation taking `+z` onto `axis` (any rotation when `axis` is already `+z`).
pub fn rotation_to(axis: &Vector3<f64>) -> Rotation3<f64> {
    Rotation3::rotation_between(&Vector3::z(), axis).unwrap_or_else(|| {
        // antiparallel
        Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::x()), std::f64::consts::PI)
    })
}

/// One term `coefficient * p_mu / (p.k)` of a soft current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentTerm {
    pub coefficient: f64,
    pub momentum: FourVector,
}

/// A soft-photon source: anything whose current is `i sum_t c_t p_t / (p_t.k)`.
pub trait SoftCurrent: Sync {
    /// Canonical merged linear combination of leg momenta (charge folded in).
    fn terms(&self) -> Vec<CurrentTerm>;

    /// Evaluate `J_mu(k)` with full input validation.
    fn current_at(&self, k: &FourVector) -> Result<ComplexFourVector>;
}

fn check_photon(k: &FourVector) -> Result<()> {
    if !k.is_finite() {
        return Err(Error::NonFinite {
            what: "photon momentum",
        });
    }
    if k.t <= 0.0 {
        return Err(Error::NonPositiveFrequency { omega: k.t });
    }
    let square = k.square();
    if square.abs() > LIGHTLIKE_TOLERANCE * k.t * k.t {
        return Err(Error::NotLightlike { square });
    }
    Ok(())
}

fn check_charged_leg(leg: &ParticleState) -> Result<()> {
    if leg.mass() <= 0.0 {
        return Err(Error::NonPositiveMass { mass: leg.mass() });
    }
    Ok(())
}

fn same_mass(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Merge terms with coinciding momenta, keeping first-appearance order, and
/// drop terms whose coefficients cancel.
pub fn merge_terms<I: IntoIterator<Item = CurrentTerm>>(terms: I) -> Vec<CurrentTerm> {
    let mut merged: Vec<CurrentTerm> = Vec::new();
    for term in terms {
        let tol = 1e-12 * term.momentum.scale().max(1.0);
        let hit = merged.iter_mut().find(|m| {
            let d = m.momentum - term.momentum;
            d.t.abs() <= tol && d.x.abs() <= tol && d.y.abs() <= tol && d.z.abs() <= tol
        });
        match hit {
            Some(m) => m.coefficient += term.coefficient,
            None => merged.push(term),
        }
    }
    let scale = merged
        .iter()
        .map(|t| t.coefficient.abs())
        .fold(0.0, f64::max);
    merged.retain(|t| t.coefficient.abs() > 1e-14 * scale);
    merged
}

/// Evaluate `i sum_t c_t p_t/(p_t.k)` without validation.
pub fn eval_terms(terms: &[CurrentTerm], k: &FourVector) -> ComplexFourVector {
    let mut re = [0.0; 4];
    for term in terms {
        let f = term.coefficient / minkowski_dot(&term.momentum, k);
        let p = &term.momentum;
        re[0] += f * p.t;
        re[1] += f * p.x;
        re[2] += f * p.y;
        re[3] += f * p.z;
    }
    ComplexFourVector(re.map(|r| Complex64::new(0.0, r)))
}

/// The current of a single charged leg scattered from `p_in` to `p_out`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionCurrent {
    p_in: ParticleState,
    p_out: ParticleState,
    charge: f64,
}

impl EmissionCurrent {
    pub fn new(p_in: ParticleState, p_out: ParticleState, charge: f64) -> Result<Self> {
        check_charged_leg(&p_in)?;
        check_charged_leg(&p_out)?;
        if !same_mass(p_in.mass(), p_out.mass()) {
            return Err(Error::MassMismatch {
                first: p_in.mass(),
                second: p_out.mass(),
            });
        }
        if !charge.is_finite() {
            return Err(Error::NonFinite { what: "charge" });
        }
        Ok(Self {
            p_in,
            p_out,
            charge,
        })
    }

    pub fn p_in(&self) -> &ParticleState {
        &self.p_in
    }

    pub fn p_out(&self) -> &ParticleState {
        &self.p_out
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn rotated(&self, rotation: &Rotation3<f64>) -> Self {
        Self {
            p_in: self.p_in.rotated(rotation),
            p_out: self.p_out.rotated(rotation),
            charge: self.charge,
        }
    }
}

/// `J_mu(k) = i e (p_mu/(p.k) - p'_mu/(p'.k))`; every component is imaginary.
pub fn classical_current(current: &EmissionCurrent, k: &FourVector) -> Result<ComplexFourVector> {
    check_photon(k)?;
    let p = current.p_in.momentum();
    let q = current.p_out.momentum();
    let pk = minkowski_dot(p, k);
    let qk = minkowski_dot(q, k);
    if pk == 0.0 || qk == 0.0 {
        return Err(Error::NonFinite {
            what: "collinear p.k denominator",
        });
    }
    let e = current.charge;
    let comp = |a: f64, b: f64| Complex64::new(0.0, e * (a / pk - b / qk));
    Ok(ComplexFourVector([
        comp(p.t, q.t),
        comp(p.x, q.x),
        comp(p.y, q.y),
        comp(p.z, q.z),
    ]))
}

impl SoftCurrent for EmissionCurrent {
    fn terms(&self) -> Vec<CurrentTerm> {
        merge_terms([
            CurrentTerm {
                coefficient: self.charge,
                momentum: *self.p_in.momentum(),
            },
            CurrentTerm {
                coefficient: -self.charge,
                momentum: *self.p_out.momentum(),
            },
        ])
    }

    fn current_at(&self, k: &FourVector) -> Result<ComplexFourVector> {
        classical_current(self, k)
    }
}

/// A charged leg that scatters several times: `legs[0] -> legs[1] -> ... -> legs[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeCurrent {
    legs: Vec<ParticleState>,
    charge: f64,
}

impl CompositeCurrent {
    pub fn new(legs: Vec<ParticleState>, charge: f64) -> Result<Self> {
        if legs.len() < 2 {
            return Err(Error::TooFewLegs { legs: legs.len() });
        }
        for leg in &legs {
            check_charged_leg(leg)?;
            if !same_mass(leg.mass(), legs[0].mass()) {
                return Err(Error::MassMismatch {
                    first: legs[0].mass(),
                    second: leg.mass(),
                });
            }
        }
        Ok(Self { legs, charge })
    }

    pub fn legs(&self) -> &[ParticleState] {
        &self.legs
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    /// The single-scattering current between the first and last legs.
    pub fn endpoint_current(&self) -> EmissionCurrent {
        EmissionCurrent {
            p_in: self.legs[0],
            p_out: self.legs[self.legs.len() - 1],
            charge: self.charge,
        }
    }

    fn segments(&self) -> impl Iterator<Item = EmissionCurrent> + '_ {
        self.legs.windows(2).map(move |w| EmissionCurrent {
            p_in: w[0],
            p_out: w[1],
            charge: self.charge,
        })
    }
}

/// `sum_i J(k; leg_i -> leg_{i+1})`, summed segment by segment.
pub fn composite_current(chain: &CompositeCurrent, k: &FourVector) -> Result<ComplexFourVector> {
    let mut total = ComplexFourVector::zero();
    for segment in chain.segments() {
        total = total + classical_current(&segment, k)?;
    }
    Ok(total)
}

impl SoftCurrent for CompositeCurrent {
    fn terms(&self) -> Vec<CurrentTerm> {
        merge_terms(self.segments().flat_map(|s| s.terms()))
    }

    fn current_at(&self, k: &FourVector) -> Result<ComplexFourVector> {
        composite_current(self, k)
    }
}

/// `J_a - J_b` for two sources.
pub struct CurrentDifference<'a> {
    pub a: &'a dyn SoftCurrent,
    pub b: &'a dyn SoftCurrent,
}

impl<'a> CurrentDifference<'a> {
    pub fn new(a: &'a dyn SoftCurrent, b: &'a dyn SoftCurrent) -> Self {
        Self { a, b }
    }
}

impl SoftCurrent for CurrentDifference<'_> {
    fn terms(&self) -> Vec<CurrentTerm> {
        let negated = self.b.terms().into_iter().map(|t| CurrentTerm {
            coefficient: -t.coefficient,
            momentum: t.momentum,
        });
        merge_terms(self.a.terms().into_iter().chain(negated))
    }

    fn current_at(&self, k: &FourVector) -> Result<ComplexFourVector> {
        Ok(self.a.current_at(k)? - self.b.current_at(k)?)
    }
}

/// A current given directly by its term list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearCurrent {
    pub terms: Vec<CurrentTerm>,
}

impl LinearCurrent {
    pub fn of(source: &dyn SoftCurrent) -> Self {
        Self {
            terms: source.terms(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl SoftCurrent for LinearCurrent {
    fn terms(&self) -> Vec<CurrentTerm> {
        self.terms.clone()
    }

    fn current_at(&self, k: &FourVector) -> Result<ComplexFourVector> {
        check_photon(k)?;
        Ok(eval_terms(&self.terms, k))
    }
}
