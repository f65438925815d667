use constxr::abel::{abel_forward, synthesize_constant, RadialDensity};
use constxr::metric::{
    boundary_distance, integrate_along_trace, trace_geodesic, turning_radius, RadialProfile, TRACE_TOL,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn profiles() -> Vec<RadialProfile> {
    vec![
        RadialProfile::euclidean(),
        RadialProfile::gaussian(),
        RadialProfile::lens(),
        RadialProfile::from_expr("1 + r^2/5").unwrap(),
    ]
}

fn launch(phi: f64, alpha: f64) -> ([f64; 2], [f64; 2]) {
    let start = [phi.cos(), phi.sin()];
    let inward = [-start[0], -start[1]];
    let tangent = [-start[1], start[0]];
    let (s, c) = alpha.sin_cos();
    (start, [c * inward[0] + s * tangent[0], c * inward[1] + s * tangent[1]])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn clairaut_quantity_is_conserved(k in 0usize..4, phi in 0.0..std::f64::consts::TAU, alpha in -1.5f64..1.5) {
        let profile = &profiles()[k];
        let (start, dir) = launch(phi, alpha);
        let trace = trace_geodesic(profile, start, dir, TRACE_TOL).unwrap();
        prop_assert!(trace.exited);
        prop_assert!(trace.clairaut_drift() <= 1e-8, "drift {}", trace.clairaut_drift());
        prop_assert!(trace.speed_drift() <= 1e-8, "speed drift {}", trace.speed_drift());
        let end = trace.exit_point();
        prop_assert!((end[0].hypot(end[1]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn turning_radius_increases_with_p(k in 0usize..4, mut ps in prop::collection::vec(0.001f64..0.999, 2..12)) {
        let profile = &profiles()[k];
        let rho = profile.rho();
        let top = rho.eval(1.0);
        ps.sort_by(f64::total_cmp);
        ps.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let ss: Vec<f64> = ps.iter().map(|p| turning_radius(&rho, p * top).unwrap()).collect();
        for w in ss.windows(2) {
            prop_assert!(w[1] > w[0], "{:?}", ss);
        }
        for (p, s) in ps.iter().zip(&ss) {
            prop_assert!((rho.eval(*s) - p * top).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_distance_decreases_to_zero(k in 0usize..4, mut rs in prop::collection::vec(0.0f64..1.0, 2..12)) {
        let profile = &profiles()[k];
        rs.sort_by(f64::total_cmp);
        rs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let ds: Vec<f64> = rs.iter().map(|r| boundary_distance(profile, *r).unwrap()).collect();
        for w in ds.windows(2) {
            prop_assert!(w[1] < w[0]);
        }
        prop_assert!(ds.iter().all(|d| *d > 0.0));
        prop_assert_eq!(boundary_distance(profile, 1.0).unwrap(), 0.0);
    }
}

#[test]
fn traced_integrals_agree_with_the_abel_transform_on_random_chords() {
    let profile = RadialProfile::gaussian();
    let bounded = RadialDensity::new(&profile, "1 + r^2", |r| 1.0 + r * r);
    let constant = synthesize_constant(&profile).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let f = if i % 2 == 0 { &bounded } else { &constant };
        let (start, dir) = launch(rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(-1.4..1.4));
        let trace = trace_geodesic(&profile, start, dir, TRACE_TOL).unwrap();
        let s = trace.min_radius().1;
        let along = integrate_along_trace(&trace, &f.to_blowup_density()).unwrap();
        let abel = abel_forward(f, &profile, s).unwrap();
        worst = worst.max((along - abel).abs());
    }
    assert!(worst <= 1e-4, "worst disagreement {worst}");
}

#[test]
fn herglotz_failure_is_reported_with_a_witness() {
    let bad = RadialProfile::from_expr("2+cos(4*r)").unwrap();
    let outcome = constxr::herglotz_check(&bad, 1001).unwrap();
    assert!(!outcome.passed());
    assert!(synthesize_constant(&bad).is_err());
}
