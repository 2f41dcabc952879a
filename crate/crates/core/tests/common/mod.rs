//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use irdeco_core::kinematics::{minkowski_dot, CurrentTerm, FourVector};

/// Gauss-Legendre nodes on [0, 1] via Golub-Welsch-free bisection/Newton on
/// the three-term recurrence, written separately from the library's rule.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (p0 - x * p1) / (1.0 - x * x))
}

pub fn gauss_unit(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (4 * i + 3) as f64 / (4 * n + 2) as f64).cos();
            for _ in 0..60 {
                let (p, d) = legendre(n, x);
                x -= p / d;
            }
            let (_, d) = legendre(n, x);
            (0.5 * (1.0 + x), 1.0 / ((1.0 - x * x) * d * d))
        })
        .collect()
}

/// Composite Gauss on [0, 1] with `panels` equal panels of `order` nodes.
pub fn composite_unit(panels: usize, order: usize) -> Vec<(f64, f64)> {
    let base = gauss_unit(order);
    let h = 1.0 / panels as f64;
    (0..panels)
        .flat_map(|p| base.iter().map(move |(x, w)| ((p as f64 + x) * h, w * h)))
        .collect()
}

/// Angular integral of sum_pol |J|^2 at omega = 1 via Feynman parameters:
/// integral dOmega 1/((p.n)(q.n)) = 4 pi integral_0^1 dx / (x p + (1-x) q)^2.
pub fn angular_integral_feynman(terms: &[CurrentTerm]) -> f64 {
    let nodes = composite_unit(400, 12);
    let mut total = 0.0;
    for a in terms {
        for b in terms {
            let pq = minkowski_dot(&a.momentum, &b.momentum);
            let integral: f64 = nodes
                .iter()
                .map(|(x, w)| {
                    let mix = a.momentum * *x + b.momentum * (1.0 - x);
                    w / minkowski_dot(&mix, &mix)
                })
                .sum();
            total -= a.coefficient * b.coefficient * pq * 4.0 * std::f64::consts::PI * integral;
        }
    }
    total
}

pub fn unit_four(t: f64, x: f64, y: f64, z: f64) -> FourVector {
    FourVector::new(t, x, y, z)
}
