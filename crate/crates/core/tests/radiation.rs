mod common;

use irdeco_core::kinematics::*;
use irdeco_core::numeric::fit_line;
use irdeco_core::radiation::*;
use nalgebra::{Rotation3, Unit, Vector3};
use num_complex::Complex64;
use proptest::prelude::*;

fn current(energy: f64, angle_deg: f64) -> EmissionCurrent {
    let (p, q) = deflected_pair(energy, 1.0, angle_deg.to_radians()).unwrap();
    EmissionCurrent::new(p, q, elementary_charge(FINE_STRUCTURE)).unwrap()
}

fn benchmark() -> EmissionCurrent {
    current(10.0, 90.0)
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn light() -> QuadratureSpec {
    QuadratureSpec::new(64, 64, 4).unwrap()
}

#[test]
fn angular_integral_matches_feynman_parametrization() {
    for (energy, angle) in [
        (10.0, 90.0),
        (10.0, 30.0),
        (10.0, 150.0),
        (2.0, 60.0),
        (1.2, 170.0),
    ] {
        let cur = current(energy, angle);
        let oracle = common::angular_integral_feynman(&cur.terms());
        for omega in [1e-3, 0.37] {
            let got = omega * spectral_density(&cur, omega, &quad()).unwrap();
            assert!(
                (got / oracle - 1.0).abs() < 1e-7,
                "E={energy} angle={angle}: {got} vs {oracle}"
            );
        }
    }
}

#[test]
fn soft_spectrum_is_flat_in_log_frequency() {
    let cur = benchmark();
    let values: Vec<f64> = irdeco_core::numeric::log_space(1e-2, 1e-1, 12)
        .into_iter()
        .map(|w| w * spectral_density(&cur, w, &quad()).unwrap())
        .collect();
    let first = values[0];
    assert!(values.iter().all(|v| (v / first - 1.0).abs() < 1e-3));
}

#[test]
fn spectral_density_agrees_with_eightfold_refinement() {
    let cur = benchmark();
    let coarse = spectral_density(&cur, 0.01, &quad()).unwrap();
    let fine = spectral_density(&cur, 0.01, &quad().refined(8)).unwrap();
    assert!((coarse / fine - 1.0).abs() < 1e-8, "{coarse} vs {fine}");
}

#[test]
fn benchmark_photon_number_regression() {
    // Feynman-parameter value of the angular integral times ln(1000)
    const FROZEN: f64 = 68.434_439_917_588_2;
    let cut = SpectralCutoffs::new(1e-3, 1.0).unwrap();
    let n = mean_photon_number(&benchmark(), &cut, &quad()).unwrap();
    assert!((n / FROZEN - 1.0).abs() < 1e-9, "{n}");
}

#[test]
fn zero_current_radiates_nothing() {
    let (p, _) = deflected_pair(10.0, 1.0, 0.0).unwrap();
    let cur = EmissionCurrent::new(p, p, 1.0).unwrap();
    let cut = SpectralCutoffs::default_for(10.0);
    assert_eq!(spectral_density(&cur, 0.1, &quad()).unwrap(), 0.0);
    assert_eq!(mean_photon_number(&cur, &cut, &quad()).unwrap(), 0.0);
    let fit = divergence_coefficient(&cur, &cut, &quad()).unwrap();
    assert_eq!(fit.c, 0.0);
    assert!(fit.residual.abs() < 1e-12);
}

#[test]
fn halving_the_infrared_cutoff_adds_c_ln2() {
    let cur = benchmark();
    let cut = SpectralCutoffs::default_for(10.0);
    let c = divergence_coefficient(&cur, &cut, &quad()).unwrap().c;
    let n = mean_photon_number(&cur, &cut, &quad()).unwrap();
    let half = cut.with_omega_min(cut.omega_min() / 2.0).unwrap();
    let n_half = mean_photon_number(&cur, &half, &quad()).unwrap();
    let step = n_half - n;
    assert!((step / (c * 2f64.ln()) - 1.0).abs() < 0.01, "{step}");
}

#[test]
fn divergence_grows_with_scattering_angle() {
    let cut = SpectralCutoffs::default_for(10.0);
    let cs: Vec<f64> = [30.0, 90.0, 150.0]
        .iter()
        .map(|&a| {
            divergence_coefficient(&current(10.0, a), &cut, &quad())
                .unwrap()
                .c
        })
        .collect();
    assert!(cs[0] > 0.0 && cs[0] < cs[1] && cs[1] < cs[2], "{cs:?}");
}

#[test]
fn divergence_fit_is_window_independent() {
    let cur = benchmark();
    let a = SpectralCutoffs::new(1e-3, 1.0).unwrap();
    let b = SpectralCutoffs::new(5e-4, 0.5).unwrap();
    let fa = divergence_coefficient(&cur, &a, &quad()).unwrap();
    let fb = divergence_coefficient(&cur, &b, &quad()).unwrap();
    assert!((fa.c / fb.c - 1.0).abs() < 0.01);
    assert!(fa.residual < 0.01 && fb.residual < 0.01);
    assert!(matches!(
        divergence_coefficient(&cur, &SpectralCutoffs::new(0.1, 1.0).unwrap(), &quad()),
        Err(irdeco_core::Error::WindowTooNarrow { .. })
    ));
}

#[test]
fn v_functional_identities() {
    let cur = benchmark();
    let (p, _) = deflected_pair(10.0, 1.0, 0.0).unwrap();
    let vacuum = EmissionCurrent::new(p, p, cur.charge()).unwrap();
    let cut = SpectralCutoffs::default_for(10.0);
    let n = mean_photon_number(&cur, &cut, &quad()).unwrap();
    let v = v_functional(&cur, &vacuum, &cut, &quad()).unwrap();
    assert!((2.0 * v / n - 1.0).abs() < 1e-6);
    assert_eq!(v_functional(&cur, &cur, &cut, &quad()).unwrap(), 0.0);
    assert_eq!(overlap_magnitude(&cur, &cur, &cut, &quad()).unwrap(), 1.0);
    let o = overlap_magnitude(&cur, &vacuum, &cut, &quad()).unwrap();
    assert_eq!(o, (-0.5 * n).exp());
    let summary = spectral_summary(&cur, &cut, &quad()).unwrap();
    assert_eq!(summary.n_bar, 2.0 * summary.v_functional);
    assert!(summary.c_coefficient > 0.0 && summary.fit_residual < 0.01);
}

#[test]
fn v_functional_is_symmetric() {
    let a = current(10.0, 40.0);
    let b = current(10.0, 120.0);
    let cut = SpectralCutoffs::default_for(10.0);
    let ab = v_functional(&a, &b, &cut, &quad()).unwrap();
    let ba = v_functional(&b, &a, &cut, &quad()).unwrap();
    assert!((ab / ba - 1.0).abs() < 1e-12);
}

#[test]
fn small_gaps_cost_quadratically() {
    let base = current(10.0, 90.0);
    let cut = SpectralCutoffs::new(1e-3, 1.0).unwrap();
    let gaps = [0.25, 0.5, 1.0];
    let vs: Vec<f64> = gaps
        .iter()
        .map(|g| v_functional(&base, &current(10.0, 90.0 + g), &cut, &quad()).unwrap())
        .collect();
    assert!(vs.iter().all(|v| *v > 0.0));
    let xs: Vec<f64> = gaps.iter().map(|g: &f64| g.ln()).collect();
    let ys: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let fit = fit_line(&xs, &ys);
    assert!((fit.slope - 2.0).abs() < 0.02, "slope {}", fit.slope);
}

#[test]
fn overlap_decays_log_linearly() {
    let a = current(10.0, 60.0);
    let b = current(10.0, 100.0);
    let mins = irdeco_core::numeric::log_space(1e-5, 1e-2, 8);
    let xs: Vec<f64> = mins.iter().map(|m| (1.0 / m).ln()).collect();
    let ys: Vec<f64> = mins
        .iter()
        .map(|&m| {
            let cut = SpectralCutoffs::new(m, 1.0).unwrap();
            overlap_magnitude(&a, &b, &cut, &quad()).unwrap().ln()
        })
        .collect();
    // overlap shrinks as omega_min decreases
    assert!(ys.windows(2).all(|w| w[0] < w[1]));
    let fit = fit_line(&xs, &ys);
    assert!(fit.slope < 0.0);
    assert!(fit.relative_residual(&ys) < 0.01, "{fit:?} {ys:?}");
}

#[test]
fn tail_number_follows_the_log_law() {
    let cur = benchmark();
    let cut = SpectralCutoffs::default_for(10.0);
    let c = divergence_coefficient(&cur, &cut, &quad()).unwrap().c;
    let mid = (cut.omega_min() * cut.omega_max()).sqrt();
    let tail = energy_tail_number(&cur, mid, &cut, &quad()).unwrap();
    assert!((tail / (c * (cut.omega_max() / mid).ln()) - 1.0).abs() < 0.01);
    let total = mean_photon_number(&cur, &cut, &quad()).unwrap();
    assert_eq!(
        energy_tail_number(&cur, cut.omega_min(), &cut, &quad()).unwrap(),
        total
    );
    assert_eq!(
        energy_tail_number(&cur, cut.omega_max(), &cut, &quad()).unwrap(),
        0.0
    );
    assert!(energy_tail_number(&cur, 0.5 * cut.omega_min(), &cut, &quad()).is_err());
}

#[test]
fn doubling_nodes_is_converged() {
    let cur = benchmark();
    let cut = SpectralCutoffs::default_for(10.0);
    let n = mean_photon_number(&cur, &cut, &quad()).unwrap();
    let n2 = mean_photon_number(&cur, &cut, &quad().refined(2)).unwrap();
    assert!((n2 / n - 1.0).abs() < 1e-3);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cur = current(10.0, 70.0);
    let cut = SpectralCutoffs::default_for(10.0);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mean_photon_number(&cur, &cut, &quad()).unwrap())
    };
    assert_eq!(run(1).to_bits(), run(3).to_bits());
}

fn unit_vector() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let s = (1.0 - z * z).sqrt();
        Vector3::new(s * phi.cos(), s * phi.sin(), z)
    })
}

fn electron() -> impl Strategy<Value = ParticleState> {
    (0.2f64..6.0, unit_vector())
        .prop_map(|(p, n)| ParticleState::with_energy((p * p + 1.0).sqrt(), 1.0, &n).unwrap())
}

fn transverse_basis(n: &Vector3<f64>) -> [Vector3<f64>; 2] {
    let helper = if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = n.cross(&helper).normalize();
    [e1, n.cross(&e1)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn polarization_sum_matches_explicit_basis(p in electron(), q in electron(), n in unit_vector(), w in 1e-3f64..1.0) {
        let cur = EmissionCurrent::new(p, q, 0.3).unwrap();
        let k = FourVector::lightlike(w, &n);
        let j = classical_current(&cur, &k).unwrap();
        let explicit: f64 = transverse_basis(&n)
            .iter()
            .map(|e| {
                let spatial = Vector3::new(j.0[1], j.0[2], j.0[3]);
                let dot: Complex64 = spatial.iter().zip(e.iter()).map(|(a, b)| a * b).sum();
                dot.norm_sqr()
            })
            .sum();
        let got = polarization_sum(&j).unwrap();
        prop_assert!((got - explicit).abs() <= 1e-10 * explicit.max(j.euclidean_norm_sqr()).max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn square_root_of_v_is_a_seminorm(a in electron(), b in electron(), c in electron(), start in electron()) {
        let charge = elementary_charge(FINE_STRUCTURE);
        let la = EmissionCurrent::new(start, a, charge).unwrap();
        let lb = EmissionCurrent::new(start, b, charge).unwrap();
        let lc = EmissionCurrent::new(start, c, charge).unwrap();
        let cut = SpectralCutoffs::new(1e-3, 1e-1).unwrap();
        let v = |x: &EmissionCurrent, y: &EmissionCurrent| v_functional(x, y, &cut, &light()).unwrap().sqrt();
        prop_assert!(v(&la, &lc) <= v(&la, &lb) + v(&lb, &lc) + 1e-8);
    }

    #[test]
    fn rotations_leave_functionals_unchanged(p in electron(), q in electron(), r in electron(), axis in unit_vector(), angle in 0.0f64..std::f64::consts::TAU) {
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        let charge = elementary_charge(FINE_STRUCTURE);
        let a = EmissionCurrent::new(p, q, charge).unwrap();
        let b = EmissionCurrent::new(p, r, charge).unwrap();
        let cut = SpectralCutoffs::new(1e-4, 1e-1).unwrap();
        let quad = light();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-300);
        let n = mean_photon_number(&a, &cut, &quad).unwrap();
        let nr = mean_photon_number(&a.rotated(&rot), &cut, &quad).unwrap();
        prop_assert!(close(n, nr), "{} vs {}", n, nr);
        let v = v_functional(&a, &b, &cut, &quad).unwrap();
        let vr = v_functional(&a.rotated(&rot), &b.rotated(&rot), &cut, &quad).unwrap();
        prop_assert!(close(v, vr), "{} vs {}", v, vr);
        let c = divergence_coefficient(&a, &cut, &quad).unwrap().c;
        let cr = divergence_coefficient(&a.rotated(&rot), &cut, &quad).unwrap().c;
        prop_assert!(close(c, cr), "{} vs {}", c, cr);
    }
}
