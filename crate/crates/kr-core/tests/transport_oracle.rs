//! Solver against the independent oracles: the cumulative-distribution
//! formula referees line instances at any size, basis enumeration referees
//! small planar instances with shared atoms, and every certificate must
//! survive verification.

mod common;

use std::sync::Arc;

use common::{enum_w1, line_w1, random_line_instance, random_plane_instance, rng};
use kr_core::{kr_distance, verify_certificate, DiscreteMeasure, MetricSpace};

fn assert_certified(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    expect: f64,
    tol: f64,
    label: &str,
) {
    let cert = kr_distance(mu, nu).expect(label);
    assert!(
        (cert.value - expect).abs() <= tol,
        "{label}: solver {} vs oracle {expect}",
        cert.value
    );
    let check = verify_certificate(&cert, mu, nu).unwrap();
    assert!(
        check.passes(),
        "{label}: certificate residuals marginal={} lip={} primal={} dual={}",
        check.max_marginal_residual,
        check.max_lip_violation,
        check.primal_gap,
        check.dual_gap
    );
}

#[test]
fn matches_cdf_oracle_on_small_line_instances() {
    let mut r = rng(11);
    for case in 0..40 {
        let m = 1 + case % 5;
        let n = 1 + (case / 5) % 5;
        let inst = random_line_instance(&mut r, m, n);
        let space = Arc::new(
            MetricSpace::euclidean(inst.positions.iter().map(|&x| vec![x]).collect()).unwrap(),
        );
        let mu = DiscreteMeasure::new(Arc::clone(&space), inst.mu.iter().copied()).unwrap();
        let nu = DiscreteMeasure::new(Arc::clone(&space), inst.nu.iter().copied()).unwrap();
        let mu_pos: Vec<(f64, f64)> =
            inst.mu.iter().map(|&(i, w)| (inst.positions[i], w)).collect();
        let nu_pos: Vec<(f64, f64)> =
            inst.nu.iter().map(|&(i, w)| (inst.positions[i], w)).collect();
        let expect = line_w1(&mu_pos, &nu_pos);
        assert_certified(&mu, &nu, expect, 1e-10, &format!("line case {case}"));
    }
}

#[test]
fn matches_cdf_oracle_on_large_line_instances() {
    let mut r = rng(12);
    for (case, (m, n)) in [(60, 40), (200, 150), (400, 400)].into_iter().enumerate() {
        let inst = random_line_instance(&mut r, m, n);
        let space = Arc::new(
            MetricSpace::euclidean(inst.positions.iter().map(|&x| vec![x]).collect()).unwrap(),
        );
        let mu = DiscreteMeasure::new(Arc::clone(&space), inst.mu.iter().copied()).unwrap();
        let nu = DiscreteMeasure::new(Arc::clone(&space), inst.nu.iter().copied()).unwrap();
        let mu_pos: Vec<(f64, f64)> =
            inst.mu.iter().map(|&(i, w)| (inst.positions[i], w)).collect();
        let nu_pos: Vec<(f64, f64)> =
            inst.nu.iter().map(|&(i, w)| (inst.positions[i], w)).collect();
        let expect = line_w1(&mu_pos, &nu_pos);
        assert_certified(&mu, &nu, expect, 1e-9, &format!("large line case {case}"));
    }
}

#[test]
fn matches_enumeration_oracle_on_plane_instances() {
    let mut r = rng(13);
    for case in 0..30 {
        let m = 2 + case % 3;
        let n = 2 + (case / 3) % 3;
        let shared = case % (m.min(n) + 1);
        let inst = random_plane_instance(&mut r, m, n, shared);
        let space =
            Arc::new(MetricSpace::euclidean(inst.points.clone()).unwrap());
        let mu = DiscreteMeasure::new(Arc::clone(&space), inst.mu.iter().copied()).unwrap();
        let nu = DiscreteMeasure::new(Arc::clone(&space), inst.nu.iter().copied()).unwrap();
        // The enumeration oracle works on the full bipartite problem over
        // the two supports, shared atoms included, so it confirms the
        // solver's pin-shared-mass reduction from outside.
        let supply: Vec<f64> = inst.mu.iter().map(|&(_, w)| w).collect();
        let demand: Vec<f64> = inst.nu.iter().map(|&(_, w)| w).collect();
        let expect = enum_w1(&supply, &demand, |i, j| {
            common::euclid(&inst.points[inst.mu[i].0], &inst.points[inst.nu[j].0])
        });
        assert_certified(&mu, &nu, expect, 1e-10, &format!("plane case {case}"));
    }
}

#[test]
fn triangle_inequality_on_random_triples() {
    let mut r = rng(14);
    for case in 0..20 {
        let inst = random_plane_instance(&mut r, 4, 4, 0);
        let third = random_plane_instance(&mut r, 4, 4, 0);
        let mut points = inst.points.clone();
        let offset = points.len();
        points.extend(third.points.iter().cloned());
        let space = Arc::new(MetricSpace::euclidean(points).unwrap());
        let mu = DiscreteMeasure::new(Arc::clone(&space), inst.mu.iter().copied()).unwrap();
        let nu = DiscreteMeasure::new(Arc::clone(&space), inst.nu.iter().copied()).unwrap();
        let rho = DiscreteMeasure::new(
            Arc::clone(&space),
            third.mu.iter().map(|&(i, w)| (offset + i, w)),
        )
        .unwrap();
        let ab = kr_distance(&mu, &nu).unwrap().value;
        let ac = kr_distance(&mu, &rho).unwrap().value;
        let cb = kr_distance(&rho, &nu).unwrap().value;
        assert!(
            ab <= ac + cb + 1e-10,
            "case {case}: {ab} > {ac} + {cb}"
        );
    }
}
