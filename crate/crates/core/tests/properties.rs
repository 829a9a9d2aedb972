use std::f64::consts::PI;

use proptest::prelude::*;

use ddorbit::extension::{detect_closure, extend_full, reflect_t0, reflect_t1, Closure};
use ddorbit::geometry::{end_config, start_config, EndParams, PlanarVec, ReducedConfig, StartParams};
use ddorbit::minimizer::{minimize, Family, Problem, Solution};
use ddorbit::testpath::build_test_path;
use ddorbit::zgeom::{quadrant_confinement, reflect_path_z};
use ddorbit::{path_action, DiscretePath};

fn random_path(a: (f64, f64), b: (f64, f64), theta: f64, wiggle: &[f64]) -> DiscretePath {
    let start = start_config(StartParams::new(a.0, a.1).unwrap()).unwrap();
    let end = end_config(EndParams::new(b.0, b.1, theta));
    let mut path = DiscretePath::new(vec![start, end]).unwrap().upsample(8).unwrap();
    for (j, c) in path.nodes.iter_mut().enumerate().skip(1).take(7) {
        let w = &wiggle[4 * (j - 1)..4 * j];
        c.q1 += PlanarVec::new(w[0], w[1]);
        c.q2 += PlanarVec::new(w[2], w[3]);
    }
    path
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extension_rotates_by_four_theta(
        a1 in 0.5..3.0f64, a2 in 0.1..1.0f64,
        b1 in 0.5..3.0f64, b2 in -1.0..1.0f64,
        theta in 0.01..1.5f64,
        wiggle in prop::collection::vec(-0.2..0.2f64, 28),
    ) {
        let path = random_path((a1 + a2, a2), (b1, b2), theta, &wiggle);
        let orbit = extend_full(&path, theta, 2).unwrap();
        let n = path.n_segments();
        for j in 0..=4 * n {
            let d = orbit.path.nodes[j + 4 * n].max_abs_diff(&orbit.path.nodes[j].rotate(4.0 * theta));
            prop_assert!(d < 1e-12);
        }
        if let Ok(a) = path_action(&path) {
            let doubled = path_action(&reflect_t1(&path, theta).unwrap()).unwrap().total;
            prop_assert!((doubled - 2.0 * a.total).abs() < 1e-10 * a.total.max(1.0));
            let back = path_action(&reflect_t0(&path).unwrap()).unwrap().total;
            prop_assert!((back - 2.0 * a.total).abs() < 1e-10 * a.total.max(1.0));
        }
    }

    #[test]
    fn action_is_invariant_under_rotation_and_mirror(
        theta in 0.01..1.5f64,
        phi in -PI..PI,
        wiggle in prop::collection::vec(-0.2..0.2f64, 28),
    ) {
        let path = random_path((2.0, 0.5), (1.5, 0.4), theta, &wiggle);
        if let Ok(a) = path_action(&path) {
            let r = path_action(&path.rotated(phi)).unwrap().total;
            let m = path_action(&path.map_nodes(ReducedConfig::reflect_x)).unwrap().total;
            prop_assert!((r - a.total).abs() < 1e-12 * a.total);
            prop_assert!((m - a.total).abs() < 1e-12 * a.total);
        }
    }

    #[test]
    fn rational_angles_close(k in 1u64..30, l in 2u64..64) {
        prop_assume!(k < l && gcd(k, l) == 1 && 2 * k < l);
        let theta = PI * k as f64 / l as f64;
        prop_assert_eq!(detect_closure(theta, 64, 1e-9), Closure::Periodic { period: 4 * l, k1: k, l1: l });
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

#[test]
fn periodic_orbit_returns_to_start() {
    let theta = PI / 10.0;
    let path = build_test_path(theta).unwrap();
    let orbit = extend_full(&path, theta, 10).unwrap();
    let last = orbit.path.nodes.last().unwrap();
    assert!(last.max_abs_diff(&orbit.path.nodes[0]) < 1e-12);
    assert_eq!(orbit.path.t_end, 40.0);
}

#[test]
fn retrograde_extension_accepts_free_signs() {
    let theta = 0.05 * PI;
    let path = reflect_path_z(&build_test_path(theta).unwrap());
    assert!(quadrant_confinement(&path, 0.0));
    let orbit = extend_full(&path, theta, 1).unwrap();
    assert_eq!(orbit.path.n_segments(), 40);
}

#[test]
fn solution_file_round_trip_feeds_extension() {
    let theta = 0.08 * PI;
    let sol = minimize(&Problem::new(theta, 20, Family::Prograde).unwrap()).unwrap();
    assert!(sol.converged);
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sol.json");
    sol.save(&file).unwrap();
    let back = Solution::load(&file).unwrap();
    assert_eq!(back, sol);
    extend_full(&back.path, back.theta, 3).unwrap();
}
